use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::TreeError;
use crate::annotation::TERMINATOR;

/// Widest bit code we represent: the leading 1 plus 127 payload bits.
pub const MAX_CODE_BITS: u32 = 128;

/// Which summarization tree a code or SCV belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Alph,
    Hash,
    Meaning,
}

impl TreeKind {
    pub fn as_u8(self) -> u8 {
        match self {
            TreeKind::Alph => 0,
            TreeKind::Hash => 1,
            TreeKind::Meaning => 2,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(TreeKind::Alph),
            1 => Some(TreeKind::Hash),
            2 => Some(TreeKind::Meaning),
            _ => None,
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeKind::Alph => "alph",
            TreeKind::Hash => "hash",
            TreeKind::Meaning => "meaning",
        })
    }
}

/// A hash or meaning tree code: a leading 1 followed by `c` bits per level.
///
/// A node at level `l` has exactly `c·l + 1` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitCode {
    bits: u128,
    len: u8,
    c: u8,
}

impl BitCode {
    /// The root code `1`.
    pub fn root(c: u8) -> Self {
        assert!(c >= 1, "c must be at least 1");
        Self { bits: 1, len: 1, c }
    }

    /// Validates a raw bit pattern: length `c·l + 1`, most significant bit set.
    pub fn new(bits: u128, len: u32, c: u8) -> Result<Self, TreeError> {
        if c == 0 || len == 0 || len > MAX_CODE_BITS || (len - 1) % c as u32 != 0 {
            return Err(TreeError::InvalidCode(format!(
                "length {len} is not c*l+1 for c={c}"
            )));
        }
        if (bits >> (len - 1)) != 1 {
            return Err(TreeError::InvalidCode(format!(
                "bits {bits:#b} do not have a leading 1 at position {len}"
            )));
        }
        Ok(Self {
            bits,
            len: len as u8,
            c,
        })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(s: &str, c: u8) -> Result<Self, TreeError> {
        let bits = u128::from_str_radix(s, 2)
            .map_err(|_| TreeError::InvalidCode(format!("`{s}` is not a bit string")))?;
        Self::new(bits, s.len() as u32, c)
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len as u32
    }

    pub fn c(&self) -> u8 {
        self.c
    }

    pub fn level(&self) -> u32 {
        (self.len as u32 - 1) / self.c as u32
    }

    pub fn is_root(&self) -> bool {
        self.len == 1
    }

    /// Drops the last `c` bits.
    pub fn parent(&self) -> Result<Self, TreeError> {
        if self.is_root() {
            return Err(TreeError::RootHasNoParent);
        }
        Ok(Self {
            bits: self.bits >> self.c,
            len: self.len - self.c,
            c: self.c,
        })
    }

    /// The `j`-th child, `τ·2^c + j`.
    pub fn child(&self, j: u32) -> Result<Self, TreeError> {
        if j >= 1 << self.c {
            return Err(TreeError::InvalidCode(format!(
                "child index {j} out of range for c={}",
                self.c
            )));
        }
        let len = self.len as u32 + self.c as u32;
        if len > MAX_CODE_BITS {
            return Err(TreeError::CodeTooLong(len));
        }
        Ok(Self {
            bits: (self.bits << self.c) | j as u128,
            len: len as u8,
            c: self.c,
        })
    }

    /// Ancestor at `level` (which must not exceed this code's level).
    pub fn truncate_to_level(&self, level: u32) -> Self {
        let keep = level * self.c as u32 + 1;
        debug_assert!(keep <= self.len as u32);
        Self {
            bits: self.bits >> (self.len as u32 - keep),
            len: keep as u8,
            c: self.c,
        }
    }

    /// Strict ancestor test by prefix comparison.
    pub fn is_ancestor_of(&self, other: &BitCode) -> bool {
        self.c == other.c
            && self.len < other.len
            && (other.bits >> (other.len - self.len)) == self.bits
    }

    /// Payload bits left-aligned so that lexicographic order on the bit string
    /// equals integer order with length as tie-break.
    fn aligned(&self) -> u128 {
        let payload = self.bits ^ (1u128 << (self.len - 1));
        if self.len == 1 {
            0
        } else {
            payload << (MAX_CODE_BITS - (self.len as u32 - 1))
        }
    }
}

impl Ord for BitCode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.c
            .cmp(&other.c)
            .then(self.aligned().cmp(&other.aligned()))
            .then(self.len.cmp(&other.len))
    }
}

impl PartialOrd for BitCode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:0width$b}", self.bits, width = self.len as usize)
    }
}

/// Alphabetical code: a keyword prefix, or a keyword plus the `$` terminator
/// for leaves. The level of a char code is its length in characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharCode(String);

impl CharCode {
    pub fn root() -> Self {
        CharCode(String::new())
    }

    pub fn leaf(keyword: &str) -> Result<Self, TreeError> {
        if keyword.contains(TERMINATOR) {
            return Err(TreeError::ReservedCharacter(keyword.to_string()));
        }
        let mut s = String::with_capacity(keyword.len() + 1);
        s.push_str(keyword);
        s.push(TERMINATOR);
        Ok(CharCode(s))
    }

    /// Builds an internal (prefix) code.
    pub fn prefix(prefix: &str) -> Result<Self, TreeError> {
        if prefix.contains(TERMINATOR) {
            return Err(TreeError::ReservedCharacter(prefix.to_string()));
        }
        Ok(CharCode(prefix.to_string()))
    }

    /// Accepts either form: a trailing `$` marks a leaf.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let body = s.strip_suffix(TERMINATOR).unwrap_or(s);
        if body.contains(TERMINATOR) {
            return Err(TreeError::ReservedCharacter(s.to_string()));
        }
        Ok(CharCode(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_leaf(&self) -> bool {
        self.0.ends_with(TERMINATOR)
    }

    pub fn keyword(&self) -> Option<&str> {
        self.0.strip_suffix(TERMINATOR)
    }

    pub fn level(&self) -> u32 {
        self.0.chars().count() as u32
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Drops the last character.
    pub fn parent(&self) -> Result<Self, TreeError> {
        let mut s = self.0.clone();
        s.pop().ok_or(TreeError::RootHasNoParent)?;
        Ok(CharCode(s))
    }

    pub fn is_ancestor_of(&self, other: &CharCode) -> bool {
        !self.is_leaf() && other.0.len() > self.0.len() && other.0.starts_with(&self.0)
    }
}

impl fmt::Display for CharCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A summarization code `τ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    Bits(BitCode),
    Chars(CharCode),
}

impl Code {
    pub fn level(&self) -> u32 {
        match self {
            Code::Bits(b) => b.level(),
            Code::Chars(s) => s.level(),
        }
    }

    pub fn parent(&self) -> Result<Code, TreeError> {
        match self {
            Code::Bits(b) => b.parent().map(Code::Bits),
            Code::Chars(s) => s.parent().map(Code::Chars),
        }
    }

    pub fn is_root(&self) -> bool {
        match self {
            Code::Bits(b) => b.is_root(),
            Code::Chars(s) => s.is_root(),
        }
    }

    pub fn is_ancestor_of(&self, other: &Code) -> bool {
        match (self, other) {
            (Code::Bits(a), Code::Bits(b)) => a.is_ancestor_of(b),
            (Code::Chars(a), Code::Chars(b)) => a.is_ancestor_of(b),
            _ => false,
        }
    }

    pub fn is_bits(&self) -> bool {
        matches!(self, Code::Bits(_))
    }

    pub fn as_bits(&self) -> Option<&BitCode> {
        match self {
            Code::Bits(b) => Some(b),
            Code::Chars(_) => None,
        }
    }

    pub fn as_chars(&self) -> Option<&CharCode> {
        match self {
            Code::Chars(s) => Some(s),
            Code::Bits(_) => None,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Code::Bits(b) => b.fmt(f),
            Code::Chars(s) => s.fmt(f),
        }
    }
}

/// Removes the last `c` bits of a bit code.
pub fn hash_parent(code: &BitCode) -> Result<BitCode, TreeError> {
    code.parent()
}

/// Sibling count vector: per-level sibling counts, root first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Scv(pub Vec<u16>);

impl Scv {
    pub fn counts(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Sibling count of the node the vector describes.
    pub fn last(&self) -> Option<u16> {
        self.0.last().copied()
    }

    pub fn push(&mut self, ns: u16) {
        self.0.push(ns);
    }

    /// Encoded size in bits at `width` bits per count.
    pub fn bit_len(&self, width: u32) -> u32 {
        self.0.len() as u32 * width
    }
}

impl fmt::Display for Scv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

/// Bits needed per SCV count: `c` for hash and meaning, `⌈log2 N_char⌉` for alph.
pub fn scv_count_width(kind: TreeKind, c: u8, n_char: u32) -> u32 {
    match kind {
        TreeKind::Hash | TreeKind::Meaning => c as u32,
        TreeKind::Alph => n_char.max(2).next_power_of_two().trailing_zeros(),
    }
}

/// SCV of the st-parent derived from an st-child's SCV.
///
/// Hash and alph drop the last count. Meaning trees only carry the leaf count
/// and every internal node has `2^c - 1` siblings.
pub fn scv_parent(scv: &Scv, kind: TreeKind, c: u8) -> Result<Scv, TreeError> {
    if scv.is_empty() {
        return Err(TreeError::EmptyScv);
    }
    Ok(match kind {
        TreeKind::Hash | TreeKind::Alph => Scv(scv.0[..scv.0.len() - 1].to_vec()),
        TreeKind::Meaning => Scv(vec![(1u16 << c) - 1]),
    })
}
