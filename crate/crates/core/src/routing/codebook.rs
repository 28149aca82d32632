use std::collections::{BTreeMap, HashMap};

use super::{CoverageSource, Policy, RoutingError};
use crate::annotation::AttrId;
use crate::estimator::{est_alph_ns, HashEstimatorParams};
use crate::sumtree::{scv_parent, CharCode, Code, Scv, SumTree, TreeKind};

/// Index of a code in a [`CodeBook`].
pub type CodeId = u32;

/// Every code reachable from the world's keywords, for one policy.
///
/// Codes are sorted by `(attr, code)`, which places each code's descendants
/// in the contiguous range `id + 1 .. end(id)`.
#[derive(Debug, Clone)]
pub struct CodeBook {
    policy: Policy,
    attr: Vec<AttrId>,
    code: Vec<Code>,
    parent: Vec<Option<CodeId>>,
    children: Vec<Vec<CodeId>>,
    end: Vec<CodeId>,
    scv: Vec<Scv>,
    fscs_scv: Vec<u16>,
    fscs_est: Vec<u16>,
    leaf: Vec<bool>,
    by_keyword: HashMap<(AttrId, String), CodeId>,
    by_code: HashMap<(AttrId, Code), CodeId>,
}

struct Pending {
    scv: Scv,
    leaf: bool,
    fscs_est: u16,
}

impl CodeBook {
    /// Baseline book: one parentless code `keyword$` per keyword.
    pub fn nsum<'a, I>(keywords: I) -> Result<Self, RoutingError>
    where
        I: IntoIterator<Item = (AttrId, &'a str)>,
    {
        let mut pending = BTreeMap::new();
        let mut leaves = Vec::new();
        for (attr, kw) in keywords {
            let code = Code::Chars(CharCode::leaf(kw)?);
            leaves.push((attr, kw.to_string(), code.clone()));
            pending.insert(
                (attr, code),
                Pending {
                    scv: Scv::default(),
                    leaf: true,
                    fscs_est: 1,
                },
            );
        }
        Ok(Self::finish(Policy::None, pending, leaves, false))
    }

    /// Book over every keyword of every tree, plus all ancestor codes.
    ///
    /// Alph ancestors are all prefixes of a leaf code, one character at a
    /// time; single-child prefixes have a sibling count of zero.
    pub fn from_trees<'a, I>(trees: I) -> Result<Self, RoutingError>
    where
        I: IntoIterator<Item = &'a SumTree>,
    {
        let mut kind: Option<TreeKind> = None;
        let mut pending: BTreeMap<(AttrId, Code), Pending> = BTreeMap::new();
        let mut leaves = Vec::new();
        for tree in trees {
            match kind {
                None => kind = Some(tree.kind()),
                Some(k) if k != tree.kind() => {
                    return Err(RoutingError::PolicyMismatch {
                        expected: k.into(),
                        found: tree.kind().into(),
                    })
                }
                _ => {}
            }
            let attr = tree.attr();
            let p = tree.params();
            let hash_est = HashEstimatorParams::new(tree.keyword_count(), p.c, p.d);
            let estimate = |code: &Code, scv: &Scv| -> u16 {
                let level = code.level();
                match tree.kind() {
                    TreeKind::Hash => hash_est.ns(level.clamp(1, p.d as u32)) + 1,
                    TreeKind::Alph => est_alph_ns(level.max(1)) + 1,
                    TreeKind::Meaning => scv.last().unwrap_or(0) + 1,
                }
            };
            for kw in tree.keywords() {
                let (code, scv) = tree.encode(kw)?;
                leaves.push((attr, kw.to_string(), code.clone()));
                let mut cur = code;
                let mut cur_scv = scv;
                let mut leaf = true;
                loop {
                    let key = (attr, cur.clone());
                    if pending.contains_key(&key) {
                        break;
                    }
                    if cur.is_root() {
                        cur_scv = Scv::default();
                    }
                    let fscs_est = estimate(&cur, &cur_scv);
                    pending.insert(
                        key,
                        Pending {
                            scv: cur_scv.clone(),
                            leaf,
                            fscs_est,
                        },
                    );
                    if cur.is_root() {
                        break;
                    }
                    cur_scv = scv_parent(&cur_scv, tree.kind(), p.c)?;
                    cur = cur.parent()?;
                    leaf = false;
                }
            }
        }
        let policy = kind.map(Policy::from).unwrap_or(Policy::None);
        Ok(Self::finish(policy, pending, leaves, true))
    }

    fn finish(
        policy: Policy,
        pending: BTreeMap<(AttrId, Code), Pending>,
        leaves: Vec<(AttrId, String, Code)>,
        derive_parents: bool,
    ) -> Self {
        let n = pending.len();
        let mut book = Self {
            policy,
            attr: Vec::with_capacity(n),
            code: Vec::with_capacity(n),
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            end: vec![0; n],
            scv: Vec::with_capacity(n),
            fscs_scv: Vec::with_capacity(n),
            fscs_est: Vec::with_capacity(n),
            leaf: Vec::with_capacity(n),
            by_keyword: HashMap::with_capacity(leaves.len()),
            by_code: HashMap::with_capacity(n),
        };
        for (i, ((attr, code), p)) in pending.into_iter().enumerate() {
            book.fscs_scv.push(p.scv.last().unwrap_or(0) + 1);
            book.fscs_est.push(p.fscs_est);
            book.scv.push(p.scv);
            book.leaf.push(p.leaf);
            book.by_code.insert((attr, code.clone()), i as CodeId);
            book.attr.push(attr);
            book.code.push(code);
        }
        if derive_parents {
            for i in 0..n {
                if book.code[i].is_root() {
                    continue;
                }
                let parent = book.code[i].parent().expect("non-root code");
                let p = book.by_code[&(book.attr[i], parent)];
                book.parent[i] = Some(p);
                book.children[p as usize].push(i as CodeId);
            }
        }
        // subtree ends from the parent links: a code's range closes at the
        // first later code that is not below it
        let mut stack: Vec<usize> = Vec::new();
        for i in 0..n {
            while let Some(&top) = stack.last() {
                if book.is_ancestor(top as CodeId, i as CodeId) {
                    break;
                }
                book.end[top] = i as CodeId;
                stack.pop();
            }
            stack.push(i);
        }
        for top in stack {
            book.end[top] = n as CodeId;
        }
        for (attr, kw, code) in leaves {
            let id = book.by_code[&(attr, code)];
            book.by_keyword.insert((attr, kw), id);
        }
        book
    }

    fn is_ancestor(&self, a: CodeId, b: CodeId) -> bool {
        let mut cur = self.parent[b as usize];
        while let Some(p) = cur {
            if p == a {
                return true;
            }
            cur = self.parent[p as usize];
        }
        false
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.code.len()
    }

    pub fn is_empty(&self) -> bool {
        self.code.is_empty()
    }

    pub fn attr(&self, id: CodeId) -> AttrId {
        self.attr[id as usize]
    }

    pub fn code(&self, id: CodeId) -> &Code {
        &self.code[id as usize]
    }

    pub fn parent(&self, id: CodeId) -> Option<CodeId> {
        self.parent[id as usize]
    }

    pub fn children(&self, id: CodeId) -> &[CodeId] {
        &self.children[id as usize]
    }

    /// Exclusive end of the descendant range of `id`.
    pub fn subtree_end(&self, id: CodeId) -> CodeId {
        self.end[id as usize]
    }

    pub fn scv(&self, id: CodeId) -> &Scv {
        &self.scv[id as usize]
    }

    pub fn is_leaf(&self, id: CodeId) -> bool {
        self.leaf[id as usize]
    }

    /// Size of the full sibling code set `id` belongs to.
    pub fn fscs(&self, id: CodeId, source: CoverageSource) -> u16 {
        match source {
            CoverageSource::Scv => self.fscs_scv[id as usize],
            CoverageSource::Estimator => self.fscs_est[id as usize],
        }
    }

    pub fn keyword(&self, attr: AttrId, keyword: &str) -> Option<CodeId> {
        self.by_keyword.get(&(attr, keyword.to_string())).copied()
    }

    pub fn lookup_code(&self, attr: AttrId, code: &Code) -> Option<CodeId> {
        self.by_code.get(&(attr, code.clone())).copied()
    }

    /// `id` and its ancestors, nearest first.
    pub fn ancestors_inclusive(&self, id: CodeId) -> impl Iterator<Item = CodeId> + '_ {
        std::iter::successors(Some(id), move |&c| self.parent(c))
    }
}
