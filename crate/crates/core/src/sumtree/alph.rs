use super::{CharCode, Code, ProtoNode, SumTree, TreeError, TreeKind, TreeParams};
use crate::annotation::{AttrId, TERMINATOR};

/// Builds the path-compressed trie over `keywords`.
///
/// Leaves are coded `keyword$`; an internal node's code is the longest common
/// prefix of its children's codes. The root is the empty prefix.
pub fn build_alph<I, S>(attr: AttrId, keywords: I, n_char: u16) -> Result<SumTree, TreeError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut codes: Vec<Vec<char>> = Vec::new();
    for kw in keywords {
        let kw = kw.as_ref();
        if kw.contains(TERMINATOR) {
            return Err(TreeError::ReservedCharacter(kw.to_string()));
        }
        codes.push(kw.chars().chain(std::iter::once(TERMINATOR)).collect());
    }
    if codes.is_empty() {
        return Err(TreeError::EmptyKeywordSet);
    }
    codes.sort_unstable();
    codes.dedup();

    let mut root = ProtoNode::new(Code::Chars(CharCode::root()));
    root.children = partition(&codes, 0).into_iter().map(build_group).collect();
    let depth = codes.iter().map(|c| c.len()).max().unwrap_or(0);
    let params = TreeParams {
        c: 0,
        d: depth.min(u16::MAX as usize) as u16,
        extra_levels: 0,
        seed: 0,
        n_char,
    };
    Ok(SumTree::from_proto(TreeKind::Alph, attr, params, root))
}

/// Splits a sorted slice into runs sharing the character at `pos`.
fn partition(codes: &[Vec<char>], pos: usize) -> Vec<&[Vec<char>]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=codes.len() {
        if i == codes.len() || codes[i][pos] != codes[start][pos] {
            groups.push(&codes[start..i]);
            start = i;
        }
    }
    groups
}

fn build_group(codes: &[Vec<char>]) -> ProtoNode {
    if codes.len() == 1 {
        let s: String = codes[0].iter().collect();
        let keyword = s[..s.len() - TERMINATOR.len_utf8()].to_string();
        let mut leaf = ProtoNode::new(Code::Chars(CharCode::parse(&s).expect("valid leaf")));
        leaf.keywords.push(keyword);
        return leaf;
    }
    let first = &codes[0];
    let last = &codes[codes.len() - 1];
    let lcp = first.iter().zip(last).take_while(|(a, b)| a == b).count();
    let prefix: String = first[..lcp].iter().collect();
    let mut node = ProtoNode::new(Code::Chars(
        CharCode::prefix(&prefix).expect("distinct leaves never share `$`"),
    ));
    node.children = partition(codes, lcp).into_iter().map(build_group).collect();
    node
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumtree::test_support::check_invariants;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn child_codes(tree: &SumTree, idx: u32) -> Vec<String> {
        tree.node(idx)
            .children
            .iter()
            .map(|&c| tree.node(c).code.to_string())
            .collect()
    }

    #[test]
    fn co_example() {
        let tree = build_alph(0, ["co", "co2", "co3"], 64).unwrap();
        check_invariants(&tree);
        let co = tree
            .find_code(&Code::Chars(CharCode::prefix("co").unwrap()))
            .unwrap();
        assert_eq!(child_codes(&tree, co), vec!["co$", "co2$", "co3$"]);
        let (code, scv) = tree.encode("co").unwrap();
        assert_eq!(code.to_string(), "co$");
        assert_eq!(scv.last(), Some(2));
        assert_eq!(scv.counts(), &[0, 0, 2]);
    }

    #[test]
    fn singleton() {
        let tree = build_alph(0, ["x"], 64).unwrap();
        assert_eq!(tree.node_count(), 2);
        assert_eq!(child_codes(&tree, 0), vec!["x$"]);
        assert_eq!(tree.node(1).ns, 0);
    }

    #[test]
    fn temp_family_matches_brute_force_lcp() {
        let kws = ["temp", "temperature", "tempest"];
        let tree = build_alph(0, kws, 64).unwrap();
        check_invariants(&tree);
        let temp = tree
            .find_code(&Code::Chars(CharCode::prefix("temp").unwrap()))
            .unwrap();
        // LCP(temperature$, tempest$) is "tempe", a branch point below "temp"
        assert_eq!(child_codes(&tree, temp), vec!["temp$", "tempe"]);
        let tempe = tree
            .find_code(&Code::Chars(CharCode::prefix("tempe").unwrap()))
            .unwrap();
        assert_eq!(child_codes(&tree, tempe), vec!["temperature$", "tempest$"]);
        assert_lca_is_lcp(&tree, &kws);
    }

    #[test]
    fn errors() {
        assert_eq!(
            build_alph(0, Vec::<String>::new(), 64).unwrap_err(),
            TreeError::EmptyKeywordSet
        );
        assert!(matches!(
            build_alph(0, ["ok", "bad$"], 64),
            Err(TreeError::ReservedCharacter(_))
        ));
    }

    fn lca(tree: &SumTree, a: u32, b: u32) -> u32 {
        let mut anc = Vec::new();
        let mut cur = Some(a);
        while let Some(c) = cur {
            anc.push(c);
            cur = tree.node(c).parent;
        }
        let mut cur = Some(b);
        while let Some(c) = cur {
            if anc.contains(&c) {
                return c;
            }
            cur = tree.node(c).parent;
        }
        unreachable!()
    }

    fn assert_lca_is_lcp<S: AsRef<str>>(tree: &SumTree, kws: &[S]) {
        for a in kws {
            for b in kws {
                let (a, b) = (a.as_ref(), b.as_ref());
                if a == b {
                    continue;
                }
                let la = tree.leaf_of(a).unwrap();
                let lb = tree.leaf_of(b).unwrap();
                let ca: Vec<char> = format!("{a}$").chars().collect();
                let cb: Vec<char> = format!("{b}$").chars().collect();
                let n = ca.iter().zip(&cb).take_while(|(x, y)| x == y).count();
                let expected: String = ca[..n].iter().collect();
                let got = lca(tree, la, lb);
                assert_eq!(tree.node(got).code.to_string(), expected, "lca of {a} and {b}");
            }
        }
    }

    #[test]
    fn random_sets_lca_equals_lcp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alphabet: Vec<char> = "abcde".chars().collect();
        for _ in 0..20 {
            let n = rng.gen_range(2..60);
            let mut kws: Vec<String> = (0..n)
                .map(|_| {
                    let len = rng.gen_range(1..7);
                    (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect()
                })
                .collect();
            kws.sort();
            kws.dedup();
            let tree = build_alph(0, &kws, 64).unwrap();
            check_invariants(&tree);
            assert_eq!(tree.keyword_count(), kws.len());
            for kw in &kws {
                let (code, _) = tree.encode(kw).unwrap();
                assert_eq!(code.to_string(), format!("{kw}$"));
            }
            assert_lca_is_lcp(&tree, &kws);
        }
    }
}
