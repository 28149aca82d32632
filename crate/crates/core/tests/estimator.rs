use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sumroute::estimator::{est_alph_ns, est_hash_ns, gamma, HashEstimatorParams};
use sumroute::sumtree::{build_alph, build_hash, min_depth, SumTree};

/// Fraction of nodes `levels_below` levels above the leaves that have at least
/// one occupied leaf slot, over random full trees.
fn empirical_existence(omega: f64, c: u8, d: u32, trees: usize, seed: u64) -> Vec<f64> {
    let leaves = 1usize << (c as u32 * d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0u64; d as usize + 1];
    let mut totals = vec![0u64; d as usize + 1];
    let mut occupied = vec![false; leaves];
    for _ in 0..trees {
        for slot in occupied.iter_mut() {
            *slot = rng.gen_bool(omega);
        }
        for k in 0..=d as usize {
            let block = 1usize << (c as usize * k);
            for chunk in occupied.chunks(block) {
                totals[k] += 1;
                if chunk.iter().any(|&o| o) {
                    hits[k] += 1;
                }
            }
        }
    }
    hits.iter().zip(&totals).map(|(&h, &t)| h as f64 / t as f64).collect()
}

#[test]
fn gamma_matches_monte_carlo() {
    // 25K trees keep 3 sigma under 0.01 even at the root, which has one node per tree
    for c in [1u8, 2] {
        for d in [3u32, 4, 5] {
            for omega in [0.05, 0.2, 0.5] {
                let freq = empirical_existence(omega, c, d, 25_000, (c as u64) << 8 | d as u64);
                for (k, f) in freq.iter().enumerate() {
                    let g = gamma(omega, c, k as u32);
                    assert!((f - g).abs() <= 0.01, "c={c} d={d} omega={omega} k={k}: {f} vs {g}");
                }
            }
        }
    }
}

#[test]
fn alph_estimate_table() {
    // round(26 / l^2) - 1, floored at zero
    let expected = [25, 6, 2, 1, 0, 0, 0, 0, 0, 0];
    for (l, &e) in (1..=10).zip(&expected) {
        assert_eq!(est_alph_ns(l), e, "l={l}");
    }
}

#[test]
fn alph_estimate_on_a_real_trie_is_rough_but_positive() {
    let kws: Vec<String> = (0..2000).map(|i| format!("k{:x}", i * 7919 % 65536)).collect();
    let tree = build_alph(0, &kws, 64).unwrap();
    // the root's children are the first characters; the estimate at level 1 is 25
    assert_eq!(est_alph_ns(1), 25);
    assert!(tree.node(0).children.len() >= 1);
}

fn random_words(n: usize, rng: &mut ChaCha8Rng) -> BTreeSet<String> {
    let mut words = BTreeSet::new();
    while words.len() < n {
        let len = rng.gen_range(4..=12);
        words.insert((0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect());
    }
    words
}

/// Mean absolute error of the hash estimator against the tree's sibling counts.
fn hash_estimate_mae(tree: &SumTree, est: &HashEstimatorParams) -> f64 {
    let mut err = 0.0;
    for i in 1..tree.node_count() as u32 {
        err += (est.ns(tree.level_of(i)) as f64 - tree.node(i).ns as f64).abs();
    }
    err / (tree.node_count() - 1) as f64
}

#[test]
fn binary_hash_estimates_track_sibling_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let k = rng.gen_range(1000..=20_000);
        let words = random_words(k, &mut rng);
        let d = min_depth(k, 1);
        let tree = build_hash(0, &words, 1, d, 2, 3).unwrap();
        let mae = hash_estimate_mae(&tree, &HashEstimatorParams::new(k, 1, d));
        assert!(mae <= 0.5, "k={k}: {mae}");
    }
}

#[test]
fn full_occupancy_saturates() {
    let p = HashEstimatorParams::new(1 << 20, 2, 3);
    assert_eq!(p.omega, 1.0);
    for l in 1..=3 {
        assert_eq!(p.ns(l), 3);
        assert_eq!(est_hash_ns(1.0, 3, l, 3), 7);
    }
}
