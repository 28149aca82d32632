use std::collections::BTreeMap;

use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::{BitCode, Code, ProtoNode, SumTree, TreeError, TreeKind, TreeParams};
use crate::annotation::AttrId;

/// Seeded 64-bit hash of a keyword.
pub fn keyword_hash(keyword: &str, seed: u64) -> u64 {
    xxh3_64_with_seed(keyword.as_bytes(), seed)
}

/// Smallest `d ≥ 1` with `(2^c)^d ≥ n`.
pub fn min_depth(n: usize, c: u8) -> u16 {
    let mut d = 1u32;
    while (c as u32 * d) < 127 && (1u128 << (c as u32 * d)) < n as u128 {
        d += 1;
    }
    d as u16
}

fn capacity(c: u8, d: u16) -> u128 {
    let bits = c as u32 * d as u32;
    if bits >= 127 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

/// The top `c·levels` bits of the keyword hash.
pub(crate) fn stored_bits(keyword: &str, c: u8, levels: u32, seed: u64) -> u64 {
    let width = c as u32 * levels;
    debug_assert!((1..=64).contains(&width));
    keyword_hash(keyword, seed) >> (64 - width)
}

/// Leaf code at depth `d` from a hash stored with `extra` spare levels.
pub(crate) fn leaf_code(keyword: &str, c: u8, d: u16, extra: u8, seed: u64) -> BitCode {
    let stored = stored_bits(keyword, c, d as u32 + extra as u32, seed);
    let payload = (stored >> (c as u32 * extra as u32)) as u128;
    let len = c as u32 * d as u32 + 1;
    BitCode::new((1u128 << (len - 1)) | payload, len, c).expect("well-formed leaf code")
}

/// Builds the hash tree. Keywords are hashed to `c·(d + extra_levels)` bits of
/// which the top `c·d` are in use; colliding keywords share a leaf.
pub fn build_hash<I, S>(
    attr: AttrId,
    keywords: I,
    c: u8,
    d: u16,
    extra_levels: u8,
    seed: u64,
) -> Result<SumTree, TreeError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if c == 0 || d == 0 {
        return Err(TreeError::InvalidParameter(format!(
            "hash trees need c >= 1 and d >= 1 (got c={c}, d={d})"
        )));
    }
    let stored = c as u32 * (d as u32 + extra_levels as u32);
    if stored > 64 {
        return Err(TreeError::CodeTooLong(stored + 1));
    }
    let mut kws: Vec<String> = keywords.into_iter().map(|k| k.as_ref().to_string()).collect();
    kws.sort_unstable();
    kws.dedup();
    if kws.is_empty() {
        return Err(TreeError::EmptyKeywordSet);
    }
    if capacity(c, d) < kws.len() as u128 {
        return Err(TreeError::CapacityExceeded {
            capacity: capacity(c, d),
            keywords: kws.len(),
        });
    }

    let mut leaves: BTreeMap<BitCode, Vec<String>> = BTreeMap::new();
    for kw in kws {
        leaves
            .entry(leaf_code(&kw, c, d, extra_levels, seed))
            .or_default()
            .push(kw);
    }
    let leaves: Vec<(BitCode, Vec<String>)> = leaves.into_iter().collect();
    let root = build_level(BitCode::root(c), &leaves, d as u32);
    let params = TreeParams {
        c,
        d,
        extra_levels,
        seed,
        n_char: 0,
    };
    Ok(SumTree::from_proto(TreeKind::Hash, attr, params, root))
}

fn build_level(code: BitCode, leaves: &[(BitCode, Vec<String>)], d: u32) -> ProtoNode {
    let mut node = ProtoNode::new(Code::Bits(code));
    if code.level() == d {
        debug_assert_eq!(leaves.len(), 1);
        node.keywords = leaves[0].1.clone();
        return node;
    }
    let next = code.level() + 1;
    let mut start = 0;
    for i in 1..=leaves.len() {
        let boundary = i == leaves.len()
            || leaves[i].0.truncate_to_level(next) != leaves[start].0.truncate_to_level(next);
        if boundary {
            let child = leaves[start].0.truncate_to_level(next);
            node.children.push(build_level(child, &leaves[start..i], d));
            start = i;
        }
    }
    node
}

/// Rebuilds a hash tree at a larger depth using the spare stored bits.
/// Existing leaf codes become ancestors of the new leaf codes.
pub fn grow_depth(tree: &SumTree, new_d: u16) -> Result<SumTree, TreeError> {
    if tree.kind() != TreeKind::Hash {
        return Err(TreeError::InvalidParameter(
            "only hash trees can grow in depth".into(),
        ));
    }
    let p = tree.params();
    if new_d <= p.d {
        return Err(TreeError::InvalidParameter(format!(
            "new depth {new_d} must exceed current depth {}",
            p.d
        )));
    }
    let stored = p.c as u32 * (p.d as u32 + p.extra_levels as u32) + 1;
    let needed = p.c as u32 * new_d as u32 + 1;
    if needed > stored {
        return Err(TreeError::ExceedsStoredBits {
            requested: new_d,
            needed,
            stored,
        });
    }
    let extra = (p.d as u32 + p.extra_levels as u32 - new_d as u32) as u8;
    build_hash(tree.attr(), tree.keywords(), p.c, new_d, extra, p.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumtree::test_support::check_invariants;

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("kw{i:06}")).collect()
    }

    #[test]
    fn hundred_thousand_keyword_code_sizes() {
        assert_eq!(min_depth(100_000, 2), 9);
        let kws = words(100_000);
        let tree = build_hash(0, &kws, 2, 9, 2, 7).unwrap();
        assert_eq!(tree.code_length(), 19);
        let (code, scv) = tree.encode(&kws[123]).unwrap();
        assert_eq!(code.as_bits().unwrap().len(), 19);
        assert_eq!(scv.len(), 9);
        // 23 stored bits, 19 in use
        assert_eq!(2 * (9 + 2) + 1, 23);
        let grown = grow_depth(&tree, 10).unwrap();
        assert_eq!(grown.code_length(), 21);
    }

    #[test]
    fn singleton_tree() {
        let tree = build_hash(0, ["only"], 2, 1, 0, 1).unwrap();
        check_invariants(&tree);
        assert_eq!(tree.node_count(), 2);
        assert_eq!(tree.node(1).ns, 0);
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn capacity_error() {
        let err = build_hash(0, words(17), 2, 2, 0, 1).unwrap_err();
        assert_eq!(
            err,
            TreeError::CapacityExceeded {
                capacity: 16,
                keywords: 17
            }
        );
    }

    #[test]
    fn encode_matches_leaf_and_is_deterministic() {
        let kws = words(500);
        let a = build_hash(0, &kws, 2, 5, 2, 42).unwrap();
        let b = build_hash(0, kws.iter().rev(), 2, 5, 2, 42).unwrap();
        assert_eq!(a, b);
        check_invariants(&a);
        for kw in &kws {
            let leaf = a.leaf_of(kw).unwrap();
            let (code, scv) = a.encode(kw).unwrap();
            assert_eq!(code, a.node(leaf).code);
            assert_eq!(scv, a.full_scv(leaf));
        }
        // unseen keywords still hash to a code of the right size
        let (code, scv) = a.encode("never-seen").unwrap();
        assert_eq!(code.as_bits().unwrap().len(), 11);
        assert_eq!(scv.len(), 5);
    }

    #[test]
    fn collisions_share_a_leaf() {
        let kws = words(64);
        let tree = build_hash(0, &kws, 1, 6, 0, 3).unwrap();
        check_invariants(&tree);
        let total: usize = tree.nodes().iter().map(|n| n.keywords.len()).sum();
        assert_eq!(total, 64);
        assert!(tree.leaf_count() <= 64);
        for kw in &kws {
            let leaf = tree.leaf_of(kw).unwrap();
            assert!(tree.node(leaf).keywords.contains(kw));
        }
    }

    #[test]
    fn grow_preserves_prefixes() {
        let kws = words(1000);
        let tree = build_hash(0, &kws, 2, 5, 2, 9).unwrap();
        let grown = grow_depth(&tree, 7).unwrap();
        check_invariants(&grown);
        for kw in &kws {
            let (old, _) = tree.encode(kw).unwrap();
            let (new, _) = grown.encode(kw).unwrap();
            assert!(old.is_ancestor_of(&new));
            // old leaf codes remain internal codes of the grown tree
            assert!(grown.find_code(&old).is_some());
        }
        assert_eq!(
            grow_depth(&tree, 8).unwrap_err(),
            TreeError::ExceedsStoredBits {
                requested: 8,
                needed: 17,
                stored: 15
            }
        );
        assert!(grow_depth(&tree, 5).is_err());
    }

    #[test]
    fn grow_separates_collisions() {
        // search for two keywords that collide at d=2 but differ in the spare bits
        let (c, d, extra, seed) = (2u8, 2u16, 2u8, 77u64);
        let mut pair = None;
        let kws = words(400);
        'outer: for a in &kws {
            for b in &kws {
                if a < b
                    && leaf_code(a, c, d, extra, seed) == leaf_code(b, c, d, extra, seed)
                    && stored_bits(a, c, 4, seed) != stored_bits(b, c, 4, seed)
                {
                    pair = Some((a.clone(), b.clone()));
                    break 'outer;
                }
            }
        }
        let (a, b) = pair.expect("a colliding pair exists in 400 words");
        let tree = build_hash(0, [&a, &b], c, d, extra, seed).unwrap();
        assert_eq!(tree.leaf_of(&a), tree.leaf_of(&b));
        let grown = grow_depth(&tree, 4).unwrap();
        assert_ne!(grown.leaf_of(&a), grown.leaf_of(&b));
    }

    #[test]
    fn grow_without_collisions_keeps_leaf_set() {
        let kws = words(20);
        let tree = build_hash(0, &kws, 2, 6, 2, 1).unwrap();
        assert_eq!(tree.leaf_count(), 20);
        let grown = grow_depth(&tree, 8).unwrap();
        assert_eq!(grown.leaf_count(), 20);
    }
}
