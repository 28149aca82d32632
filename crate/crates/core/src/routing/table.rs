use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::{CodeBook, CodeId, RoutingError, SummarizationConfig};
use crate::annotation::meets_threshold;
use crate::NodeId;

/// Neighbor slots per table; masks are `u16`.
pub const MAX_NEIGHBORS: usize = 16;

/// Result of [`RoutingTable::insert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Stored as a new entry; `removed` descendant entries were absorbed by it.
    Added { removed: usize },
    /// The same entry already exists.
    Duplicate,
    /// An ancestor entry for the same neighbor already covers the code.
    Absorbed { by: CodeId },
    /// Stored, then merged upward; `parent` is the topmost new entry and
    /// `removed` counts every entry replaced on the way, the new one included.
    Summarized { parent: CodeId, removed: usize },
}

#[derive(Debug, Clone, Default)]
struct Lru {
    cap: usize,
    tick: u64,
    last: HashMap<(CodeId, u8), u64>,
    order: BTreeMap<u64, (CodeId, u8)>,
}

impl Lru {
    fn touch(&mut self, code: CodeId, slot: u8) {
        self.tick += 1;
        if let Some(old) = self.last.insert((code, slot), self.tick) {
            self.order.remove(&old);
        }
        self.order.insert(self.tick, (code, slot));
    }

    fn forget(&mut self, code: CodeId, slot: u8) {
        if let Some(old) = self.last.remove(&(code, slot)) {
            self.order.remove(&old);
        }
    }
}

/// One node's routing table: for every code, the mask of neighbor slots it
/// routes toward. The number of set bits is the table size.
#[derive(Debug, Clone)]
pub struct RoutingTable {
    masks: Vec<u16>,
    size: usize,
    lru: Option<Lru>,
    evictions: usize,
}

impl RoutingTable {
    pub fn new(book: &CodeBook) -> Self {
        Self {
            masks: vec![0; book.len()],
            size: 0,
            lru: None,
            evictions: 0,
        }
    }

    /// A table that evicts least-recently-used entries beyond `max_entries`.
    pub fn with_lru_bound(book: &CodeBook, max_entries: usize) -> Self {
        let mut t = Self::new(book);
        t.lru = Some(Lru {
            cap: max_entries,
            ..Lru::default()
        });
        t
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn evictions(&self) -> usize {
        self.evictions
    }

    pub fn mask(&self, code: CodeId) -> u16 {
        self.masks[code as usize]
    }

    pub fn contains(&self, code: CodeId, slot: u8) -> bool {
        self.masks[code as usize] & (1 << slot) != 0
    }

    /// All `(code, slot)` entries in code order.
    pub fn entries(&self) -> impl Iterator<Item = (CodeId, u8)> + '_ {
        self.masks.iter().enumerate().flat_map(|(i, &m)| {
            (0..MAX_NEIGHBORS as u8)
                .filter(move |s| m & (1 << s) != 0)
                .map(move |s| (i as CodeId, s))
        })
    }

    fn set(&mut self, code: CodeId, slot: u8) {
        let m = &mut self.masks[code as usize];
        if *m & (1 << slot) == 0 {
            *m |= 1 << slot;
            self.size += 1;
        }
        if let Some(lru) = &mut self.lru {
            lru.touch(code, slot);
        }
    }

    fn clear(&mut self, code: CodeId, slot: u8) -> bool {
        let m = &mut self.masks[code as usize];
        if *m & (1 << slot) == 0 {
            return false;
        }
        *m &= !(1 << slot);
        self.size -= 1;
        if let Some(lru) = &mut self.lru {
            lru.forget(code, slot);
        }
        true
    }

    fn clear_descendants(&mut self, book: &CodeBook, code: CodeId, slot: u8) -> usize {
        (code + 1..book.subtree_end(code))
            .filter(|&d| self.clear(d, slot))
            .count()
    }

    fn touch(&mut self, code: CodeId, slot: u8) {
        if let Some(lru) = &mut self.lru {
            lru.touch(code, slot);
        }
    }

    fn check(book: &CodeBook, cfg: &SummarizationConfig, code: CodeId, slot: u8) -> Result<(), RoutingError> {
        if book.policy() != cfg.policy {
            return Err(RoutingError::PolicyMismatch {
                expected: cfg.policy,
                found: book.policy(),
            });
        }
        if slot as usize >= MAX_NEIGHBORS {
            return Err(RoutingError::TooManyNeighbors(slot as usize + 1));
        }
        if code as usize >= book.len() {
            return Err(RoutingError::UnknownCode(code));
        }
        Ok(())
    }

    /// Inserts `(code, slot)` and summarizes its sibling groups upward while
    /// `rc ≥ cov·s` holds for the neighbor.
    pub fn insert(
        &mut self,
        book: &CodeBook,
        cfg: &SummarizationConfig,
        code: CodeId,
        slot: u8,
    ) -> Result<InsertOutcome, RoutingError> {
        Self::check(book, cfg, code, slot)?;
        if self.contains(code, slot) {
            self.touch(code, slot);
            return Ok(InsertOutcome::Duplicate);
        }
        if let Some(by) = book
            .ancestors_inclusive(code)
            .skip(1)
            .find(|&a| self.contains(a, slot))
        {
            self.touch(by, slot);
            return Ok(InsertOutcome::Absorbed { by });
        }
        let mut removed = self.clear_descendants(book, code, slot);
        self.set(code, slot);
        let mut cur = code;
        let mut top = None;
        while let Some(p) = book.parent(cur) {
            let fscs = book.fscs(cur, cfg.coverage_source);
            let present = book
                .children(p)
                .iter()
                .filter(|&&ch| self.contains(ch, slot))
                .count();
            if !cfg.covers(present, fscs) {
                break;
            }
            removed += self.clear_descendants(book, p, slot);
            self.set(p, slot);
            top = Some(p);
            cur = p;
        }
        self.enforce_bound();
        Ok(match top {
            Some(parent) => InsertOutcome::Summarized { parent, removed },
            None => InsertOutcome::Added { removed },
        })
    }

    fn enforce_bound(&mut self) {
        let Some(lru) = &mut self.lru else {
            return;
        };
        let mut victims = Vec::new();
        while self.size - victims.len() > lru.cap {
            let (_, victim) = lru.order.pop_first().expect("size > cap implies entries");
            lru.last.remove(&victim);
            victims.push(victim);
        }
        for (code, slot) in victims {
            self.masks[code as usize] &= !(1 << slot);
            self.size -= 1;
            self.evictions += 1;
        }
    }

    /// Closest entry at or above `code` that routes toward `slot`.
    pub fn covering(&self, book: &CodeBook, code: CodeId, slot: u8) -> Option<CodeId> {
        book.ancestors_inclusive(code).find(|&a| self.contains(a, slot))
    }

    /// Mask of α-match forwarding neighbors among the `candidates` slots.
    ///
    /// `query` holds one entry per query descriptor; `None` marks a keyword
    /// without a code, which matches nothing. Attributes absent from the query
    /// count as matched. Hits refresh LRU state.
    pub fn lookup(
        &mut self,
        book: &CodeBook,
        query: &[Option<CodeId>],
        alpha: f64,
        n: usize,
        candidates: u16,
    ) -> u16 {
        let per_desc: Vec<u16> = query
            .iter()
            .map(|q| match q {
                Some(code) => book
                    .ancestors_inclusive(*code)
                    .fold(0u16, |acc, a| acc | self.masks[a as usize]),
                None => 0,
            })
            .collect();
        let absent = n.saturating_sub(query.len());
        let mut result = 0u16;
        for slot in 0..MAX_NEIGHBORS as u8 {
            let bit = 1u16 << slot;
            if candidates & bit == 0 {
                continue;
            }
            let matched = per_desc.iter().filter(|&&m| m & bit != 0).count();
            if meets_threshold(absent + matched, alpha, n) {
                result |= bit;
            }
        }
        if self.lru.is_some() {
            for slot in (0..MAX_NEIGHBORS as u8).filter(|s| result & (1 << s) != 0) {
                for code in query.iter().flatten() {
                    if let Some(hit) = self.covering(book, *code, slot) {
                        self.touch(hit, slot);
                    }
                }
            }
        }
        result
    }

    /// One `attr code neighbor scv summarized` line per entry.
    pub fn dump(&self, book: &CodeBook, neighbors: &[NodeId]) -> String {
        let mut out = String::new();
        for (code, slot) in self.entries() {
            let neighbor = neighbors
                .get(slot as usize)
                .map(|n| n.to_string())
                .unwrap_or_else(|| format!("slot{slot}"));
            let code_text = book.code(code).to_string();
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                book.attr(code),
                if code_text.is_empty() { "-" } else { &code_text },
                neighbor,
                book.scv(code),
                !book.is_leaf(code)
            );
        }
        out
    }
}
