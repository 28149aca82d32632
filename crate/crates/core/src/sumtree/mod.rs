//! Summarization trees.
//!
//! Every attribute gets one tree over its system-wide keyword set. Children of a
//! node are the candidates to be summarized into it, and every node carries a
//! code from which the parent code can be derived without the tree:
//!
//! - alph: a path-compressed trie; leaves are `keyword$`, internal nodes are the
//!   longest common prefix of their children. Parents of char codes drop one
//!   character, so levels and SCVs count characters.
//! - hash: a seeded hash of the keyword, truncated to `c·d` bits behind a leading 1.
//! - meaning: recursive k-means over keyword embeddings, child `j` coded `τ·2^c + j`.
//!
//! The tree doubles as the summarization tree server: [`SumTree::encode`] maps a
//! keyword to its code and sibling count vector.

mod alph;
mod code;
mod codec;
mod embed;
mod hash;
mod kmeans;
mod meaning;

use std::collections::HashMap;

use thiserror::Error;

use crate::annotation::AttrId;

pub use alph::build_alph;
pub use code::{
    hash_parent, scv_count_width, scv_parent, BitCode, CharCode, Code, Scv, TreeKind,
    MAX_CODE_BITS,
};
pub use codec::{deserialize_tree, serialize_tree, TREE_FORMAT_VERSION, TREE_MAGIC};
pub use embed::{EmbeddingSet, DEFAULT_EMBEDDING_DIM};
pub use hash::{build_hash, grow_depth, keyword_hash, min_depth};
pub use kmeans::kmeans;
pub use meaning::build_meaning;

/// Default alphabet size for alph SCV widths.
pub const DEFAULT_N_CHAR: u16 = 64;
/// Default spare hash levels kept for growth.
pub const DEFAULT_EXTRA_LEVELS: u8 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("keyword set is empty")]
    EmptyKeywordSet,
    #[error("keyword `{0}` contains the reserved terminator `$`")]
    ReservedCharacter(String),
    #[error("hash space (2^c)^d = {capacity} is smaller than {keywords} keywords")]
    CapacityExceeded { capacity: u128, keywords: usize },
    #[error("the root code has no parent")]
    RootHasNoParent,
    #[error("no embedding for keyword `{0}`")]
    MissingEmbedding(String),
    #[error("keyword `{0}` is not in the tree")]
    UnknownKeyword(String),
    #[error("sibling count vector is empty")]
    EmptyScv,
    #[error("malformed tree file: {0}")]
    MalformedTreeFile(String),
    #[error("depth {requested} needs {needed} code bits but only {stored} are stored")]
    ExceedsStoredBits {
        requested: u16,
        needed: u32,
        stored: u32,
    },
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("code of {0} bits exceeds the supported width")]
    CodeTooLong(u32),
    #[error("invalid tree parameter: {0}")]
    InvalidParameter(String),
    #[error("embedding file line {line}: {reason}")]
    EmbeddingParse { line: usize, reason: String },
}

/// Parameters a tree was built with. Unused fields are zero for a given kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Bits per level (hash, meaning).
    pub c: u8,
    /// Active depth (hash) or realized depth (alph, meaning).
    pub d: u16,
    /// Spare hash levels generated beyond `d`.
    pub extra_levels: u8,
    pub seed: u64,
    /// Alphabet size used for alph SCV widths.
    pub n_char: u16,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            c: 2,
            d: 0,
            extra_levels: DEFAULT_EXTRA_LEVELS,
            seed: 0,
            n_char: DEFAULT_N_CHAR,
        }
    }
}

/// A node of a summarization tree. `ns` is the number of siblings.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTreeNode {
    pub code: Code,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    pub ns: u16,
    /// Keywords resolved to this leaf; several only for hash collisions.
    pub keywords: Vec<String>,
}

impl SumTreeNode {
    pub fn nc(&self) -> usize {
        self.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        !self.keywords.is_empty()
    }
}

/// Recursive form used by the builders before flattening.
#[derive(Debug, Clone)]
pub(crate) struct ProtoNode {
    pub code: Code,
    pub children: Vec<ProtoNode>,
    pub keywords: Vec<String>,
}

impl ProtoNode {
    pub fn new(code: Code) -> Self {
        Self {
            code,
            children: Vec::new(),
            keywords: Vec::new(),
        }
    }
}

/// A summarization tree for one attribute under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    kind: TreeKind,
    attr: AttrId,
    params: TreeParams,
    /// Preorder; `nodes[0]` is the root.
    nodes: Vec<SumTreeNode>,
    keyword_leaf: HashMap<String, u32>,
    code_index: HashMap<Code, u32>,
}

impl SumTree {
    pub(crate) fn from_proto(
        kind: TreeKind,
        attr: AttrId,
        params: TreeParams,
        root: ProtoNode,
    ) -> Self {
        fn flatten(
            proto: ProtoNode,
            parent: Option<u32>,
            ns: u16,
            nodes: &mut Vec<SumTreeNode>,
        ) -> u32 {
            let idx = nodes.len() as u32;
            let nc = proto.children.len() as u16;
            nodes.push(SumTreeNode {
                code: proto.code,
                parent,
                children: Vec::with_capacity(nc as usize),
                ns,
                keywords: proto.keywords,
            });
            for child in proto.children {
                let cidx = flatten(child, Some(idx), nc.saturating_sub(1), nodes);
                nodes[idx as usize].children.push(cidx);
            }
            idx
        }
        let mut nodes = Vec::new();
        flatten(root, None, 0, &mut nodes);
        Self::from_nodes(kind, attr, params, nodes)
    }

    pub(crate) fn from_nodes(
        kind: TreeKind,
        attr: AttrId,
        params: TreeParams,
        nodes: Vec<SumTreeNode>,
    ) -> Self {
        let mut keyword_leaf = HashMap::new();
        let mut code_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            for kw in &n.keywords {
                keyword_leaf.insert(kw.clone(), i as u32);
            }
            code_index.insert(n.code.clone(), i as u32);
        }
        Self {
            kind,
            attr,
            params,
            nodes,
            keyword_leaf,
            code_index,
        }
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn attr(&self) -> AttrId {
        self.attr
    }

    pub fn params(&self) -> TreeParams {
        self.params
    }

    pub fn c(&self) -> u8 {
        self.params.c
    }

    pub fn d(&self) -> u16 {
        self.params.d
    }

    pub fn root(&self) -> &SumTreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[SumTreeNode] {
        &self.nodes
    }

    pub fn node(&self, idx: u32) -> &SumTreeNode {
        &self.nodes[idx as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn keyword_count(&self) -> usize {
        self.keyword_leaf.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// All keywords in preorder of their leaves.
    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .flat_map(|n| n.keywords.iter().map(String::as_str))
    }

    pub fn leaf_of(&self, keyword: &str) -> Option<u32> {
        self.keyword_leaf.get(keyword).copied()
    }

    pub fn find_code(&self, code: &Code) -> Option<u32> {
        self.code_index.get(code).copied()
    }

    /// Deepest level of any node.
    pub fn depth(&self) -> u32 {
        self.nodes.iter().map(|n| n.code.level()).max().unwrap_or(0)
    }

    /// Bit length of leaf codes for bit trees, longest leaf code in characters
    /// for alph.
    pub fn code_length(&self) -> u32 {
        self.nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| match &n.code {
                Code::Bits(b) => b.len(),
                Code::Chars(s) => s.level(),
            })
            .max()
            .unwrap_or(0)
    }

    pub fn level_of(&self, idx: u32) -> u32 {
        self.node(idx).code.level()
    }

    /// Root-to-node SCV with one count per level.
    ///
    /// For alph, positions inside a compressed edge are single-child levels and
    /// hold 0; the node's own `ns` sits right after its parent's level.
    pub fn full_scv(&self, idx: u32) -> Scv {
        let mut path = Vec::new();
        let mut cur = idx;
        while let Some(p) = self.node(cur).parent {
            path.push(cur);
            cur = p;
        }
        path.reverse();
        match self.kind {
            TreeKind::Hash | TreeKind::Meaning => {
                Scv(path.iter().map(|&i| self.node(i).ns).collect())
            }
            TreeKind::Alph => {
                let mut counts = vec![0u16; self.level_of(idx) as usize];
                for &i in &path {
                    let parent = self.node(i).parent.expect("path excludes root");
                    counts[self.level_of(parent) as usize] = self.node(i).ns;
                }
                Scv(counts)
            }
        }
    }

    /// Keyword to `(code, SCV)` as served to peers.
    ///
    /// Meaning trees serve only the leaf's sibling count. Hash trees also encode
    /// keywords that were not in the build set.
    pub fn encode(&self, keyword: &str) -> Result<(Code, Scv), TreeError> {
        if let Some(idx) = self.leaf_of(keyword) {
            let code = self.node(idx).code.clone();
            let scv = match self.kind {
                TreeKind::Meaning => Scv(vec![self.node(idx).ns]),
                _ => self.full_scv(idx),
            };
            return Ok((code, scv));
        }
        match self.kind {
            TreeKind::Hash => Ok(self.encode_unseen_hash(keyword)),
            _ => Err(TreeError::UnknownKeyword(keyword.to_string())),
        }
    }

    fn encode_unseen_hash(&self, keyword: &str) -> (Code, Scv) {
        let p = self.params;
        let code = hash::leaf_code(keyword, p.c, p.d, p.extra_levels, p.seed);
        let mut scv = Scv::default();
        for level in 1..=p.d as u32 {
            let prefix = Code::Bits(code.truncate_to_level(level));
            let ns = match self.find_code(&prefix) {
                Some(i) => self.node(i).ns,
                None => {
                    let parent = Code::Bits(code.truncate_to_level(level - 1));
                    self.find_code(&parent)
                        .map(|i| self.node(i).nc() as u16)
                        .unwrap_or(0)
                }
            };
            scv.push(ns);
        }
        (Code::Bits(code), scv)
    }
}

/// Free-function form of [`SumTree::encode`].
pub fn encode(tree: &SumTree, keyword: &str) -> Result<(Code, Scv), TreeError> {
    tree.encode(keyword)
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Checks the structural invariants shared by all tree kinds.
    pub fn check_invariants(tree: &SumTree) {
        for (i, n) in tree.nodes().iter().enumerate() {
            assert_eq!(n.is_leaf(), n.children.is_empty(), "leaf iff keyword at {}", n.code);
            if let Some(p) = n.parent {
                let parent = tree.node(p);
                assert_eq!(n.ns as usize, parent.nc() - 1);
                assert!(parent.code.is_ancestor_of(&n.code));
                assert!(parent.children.contains(&(i as u32)));
            } else {
                assert_eq!(i, 0);
            }
            if let Code::Bits(b) = &n.code {
                assert_eq!(b.len(), tree.c() as u32 * b.level() + 1);
                assert!(n.nc() <= 1 << tree.c());
                let mut cur = *b;
                for _ in 0..b.level() {
                    cur = cur.parent().unwrap();
                }
                assert!(cur.is_root());
            }
            if let Code::Chars(s) = &n.code {
                assert_eq!(s.is_leaf(), n.is_leaf());
            }
            for &ch in &n.children {
                let mut expected = tree.full_scv(i as u32);
                let child = tree.node(ch);
                match tree.kind() {
                    TreeKind::Alph => {
                        expected.push(child.ns);
                        let gap = child.code.level() - n.code.level() - 1;
                        for _ in 0..gap {
                            expected.push(0);
                        }
                    }
                    _ => expected.push(child.ns),
                }
                assert_eq!(tree.full_scv(ch), expected);
            }
        }
    }
}
