//! Sibling-count estimators for routing without sibling count vectors.
//!
//! A hash tree is modeled as a full `2^c`-ary tree of depth `d` whose leaf slots
//! are each occupied with probability `ω`. A node `k` levels above the leaves
//! exists when any of its `2^{kc}` slots is occupied, so a node at level `l` has
//! about `2^c·γ` existing siblings (itself included).

/// Existence probability of a node `levels_below` levels above the leaves:
/// `1 − (1 − ω)^(2^(levels_below·c))`.
pub fn gamma(omega: f64, c: u8, levels_below: u32) -> f64 {
    if levels_below == 0 {
        return omega;
    }
    let exponent = (levels_below as f64 * c as f64).exp2();
    1.0 - (1.0 - omega).powf(exponent)
}

/// Estimated sibling count of a hash-tree node at `level` in a tree of depth `d`.
///
/// The expected child count `f = 2^c·γ` is rounded half away from zero and
/// reduced by one; `f < 1` yields 0.
pub fn est_hash_ns(omega: f64, c: u8, level: u32, d: u32) -> u16 {
    debug_assert!(level >= 1 && level <= d);
    let f = (1u32 << c) as f64 * gamma(omega, c, d.saturating_sub(level));
    let cap = (1u32 << c) - 1;
    ((f.round() - 1.0).max(0.0) as u32).min(cap) as u16
}

/// Fitted model for alphabetical trees, `f(l) = 26·l⁻²`.
pub fn alph_child_estimate(level: u32) -> f64 {
    26.0 / (level as f64 * level as f64)
}

/// Estimated sibling count of an alph code of `level` characters.
pub fn est_alph_ns(level: u32) -> u16 {
    debug_assert!(level >= 1);
    (alph_child_estimate(level.max(1)).round() - 1.0).max(0.0) as u16
}

/// Per-attribute parameters of the hash estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashEstimatorParams {
    pub omega: f64,
    pub c: u8,
    pub d: u16,
}

impl HashEstimatorParams {
    /// `ω = |AV| / ((2^c)^{d+1} − (2^c)^d)`, clamped into `(0, 1]`.
    pub fn new(keyword_count: usize, c: u8, d: u16) -> Self {
        let slots = ((c as f64) * d as f64).exp2() * ((c as f64).exp2() - 1.0);
        let omega = (keyword_count as f64 / slots).clamp(f64::MIN_POSITIVE, 1.0);
        Self { omega, c, d }
    }

    pub fn ns(&self, level: u32) -> u16 {
        est_hash_ns(self.omega, self.c, level, self.d as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma_closed_forms() {
        assert_eq!(gamma(0.3, 2, 0), 0.3);
        for k in 0..6 {
            assert_eq!(gamma(1.0, 2, k), 1.0);
        }
        assert!((gamma(0.1, 2, 1) - 0.3439).abs() < 1e-12);
    }

    #[test]
    fn hash_ns_cases() {
        for l in 1..=5 {
            assert_eq!(est_hash_ns(1.0, 2, l, 5), 3);
        }
        // f = 4·0.1 = 0.4 < 1
        assert_eq!(est_hash_ns(0.1, 2, 5, 5), 0);
        // f = 4·0.3439 = 1.3756 → 1
        assert_eq!(est_hash_ns(0.1, 2, 4, 5), 0);
        // f = 4·(1-0.9^16) = 3.259 → 3
        assert_eq!(est_hash_ns(0.1, 2, 3, 5), 2);
    }

    #[test]
    fn alph_ns_cases() {
        assert_eq!(est_alph_ns(1), 25);
        assert_eq!(est_alph_ns(2), 6);
        assert_eq!(est_alph_ns(6), 0);
        for l in 1..=10u32 {
            let expected = ((26.0 / (l * l) as f64).round() as i64 - 1).max(0);
            assert_eq!(est_alph_ns(l) as i64, expected);
        }
    }

    #[test]
    fn omega_from_keyword_count() {
        let p = HashEstimatorParams::new(48, 2, 2);
        assert!((p.omega - 1.0).abs() < 1e-12);
        let p = HashEstimatorParams::new(12, 2, 2);
        assert!((p.omega - 0.25).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn gamma_is_monotone(omega in 0.001f64..1.0, bump in 0.0f64..0.5, c in 1u8..4, k in 0u32..5) {
            let g = gamma(omega, c, k);
            prop_assert!((0.0..=1.0).contains(&g));
            prop_assert!(gamma(omega, c, k + 1) >= g);
            prop_assert!(gamma((omega + bump).min(1.0), c, k) >= g);
        }

        #[test]
        fn hash_ns_in_range(omega in 0.0001f64..=1.0, c in 1u8..5, d in 1u32..10, l_off in 0u32..10) {
            let l = 1 + l_off % d;
            prop_assert!(est_hash_ns(omega, c, l, d) <= (1 << c) - 1);
        }
    }
}
