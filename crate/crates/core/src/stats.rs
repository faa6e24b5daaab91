//! Paired sign-flip permutation tests and Benjamini-Hochberg correction.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::Exec;

/// Sample sizes up to this many pairs are tested by full enumeration.
pub const EXACT_LIMIT: usize = 20;
pub const DEFAULT_PERMUTATIONS: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("paired samples are empty")]
    Empty,
    #[error("case ids do not align with the loss vectors")]
    Misaligned,
    #[error("need at least one permutation")]
    NoPermutations,
    #[error("non-finite loss at position {0}")]
    NonFinite(usize),
}

/// Aligned per-case losses of two models on the same cases.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedLosses {
    pub case_ids: Vec<String>,
    pub losses_a: Vec<f64>,
    pub losses_b: Vec<f64>,
}

impl PairedLosses {
    pub fn new(
        case_ids: Vec<String>,
        losses_a: Vec<f64>,
        losses_b: Vec<f64>,
    ) -> Result<Self, StatsError> {
        if losses_a.len() != losses_b.len() {
            return Err(StatsError::LengthMismatch(losses_a.len(), losses_b.len()));
        }
        if losses_a.is_empty() {
            return Err(StatsError::Empty);
        }
        if case_ids.len() != losses_a.len() {
            return Err(StatsError::Misaligned);
        }
        if let Some(i) = losses_a
            .iter()
            .chain(&losses_b)
            .position(|v| !v.is_finite())
        {
            return Err(StatsError::NonFinite(i % losses_a.len()));
        }
        Ok(PairedLosses {
            case_ids,
            losses_a,
            losses_b,
        })
    }

    /// Pairs without ids, labelled by position.
    pub fn unlabelled(losses_a: Vec<f64>, losses_b: Vec<f64>) -> Result<Self, StatsError> {
        let ids = (0..losses_a.len()).map(|i| i.to_string()).collect();
        Self::new(ids, losses_a, losses_b)
    }

    pub fn differences(&self) -> Vec<f64> {
        self.losses_a
            .iter()
            .zip(&self.losses_b)
            .map(|(a, b)| a - b)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub comparison: String,
    /// Mean of `losses_a - losses_b`.
    pub statistic: f64,
    pub p_value: f64,
    /// Sign patterns compared against the observed one (excluding the identity).
    pub n_permutations: u64,
    pub exact: bool,
    pub seed: u64,
    pub bh_rejected: bool,
}

/// Seed of permutation `index`; independent of evaluation order.
fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn flipped_sum(diffs: &[f64], mut next_bits: impl FnMut() -> u64) -> f64 {
    let mut sum = 0.0;
    for chunk in diffs.chunks(64) {
        let bits = next_bits();
        for (i, d) in chunk.iter().enumerate() {
            if bits >> i & 1 == 1 {
                sum -= d;
            } else {
                sum += d;
            }
        }
    }
    sum
}

/// Two-tailed paired permutation test of `mean(a - b) = 0`.
///
/// The null distribution flips the sign of each per-case difference
/// independently. With at most [`EXACT_LIMIT`] pairs all `2^n` patterns are
/// enumerated; otherwise `n_permutations` random patterns are drawn. Either
/// way `p = (1 + #{|perm| >= |observed|}) / (n_permutations + 1)`, where the
/// identity pattern is the `+1`.
pub fn paired_permutation_test(
    pairs: &PairedLosses,
    n_permutations: u64,
    seed: u64,
    exec: Exec,
) -> Result<TestResult, StatsError> {
    if n_permutations == 0 {
        return Err(StatsError::NoPermutations);
    }
    let diffs = pairs.differences();
    let n = diffs.len();
    let observed: f64 = diffs.iter().sum();
    // Sums over different sign patterns round differently; treat values
    // within this slack of the observed magnitude as ties.
    let slack = 1e-10 * diffs.iter().map(|d| d.abs()).sum::<f64>();
    let at_least = |s: f64| s.abs() >= observed.abs() - slack;

    let (hits, draws, exact) = if n <= EXACT_LIMIT {
        let total = 1u64 << n;
        let hits = exec.count_range(total, |mask| at_least(flipped_sum(&diffs, || mask)));
        // The identity pattern (mask 0) is always a hit and plays the add-one role.
        (hits - 1, total - 1, true)
    } else {
        let hits = exec.count_range(n_permutations, |i| {
            let mut rng = draw_rng(seed, i);
            at_least(flipped_sum(&diffs, || rng.next_u64()))
        });
        (hits, n_permutations, false)
    };
    Ok(TestResult {
        comparison: String::new(),
        statistic: observed / n as f64,
        p_value: (1 + hits) as f64 / (draws + 1) as f64,
        n_permutations: draws,
        exact,
        seed,
        bh_rejected: false,
    })
}

/// Step-up false discovery rate control at level `q`.
///
/// Returns the rejection mask in the input order.
///
/// # Panics
///
/// If `q` is not in `(0, 1)`.
pub fn benjamini_hochberg(p_values: &[f64], q: f64) -> Vec<bool> {
    assert!(q > 0.0 && q < 1.0, "q must lie in (0, 1)");
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let cutoff = order
        .iter()
        .enumerate()
        .filter(|(rank, &i)| p_values[i] <= (rank + 1) as f64 * q / m as f64)
        .map(|(rank, _)| rank + 1)
        .max()
        .unwrap_or(0);
    let mut reject = vec![false; m];
    for &i in &order[..cutoff] {
        reject[i] = true;
    }
    reject
}

/// Applies [`benjamini_hochberg`] to a family of results in place.
pub fn correct_family(results: &mut [TestResult], q: f64) {
    let p: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    for (r, rej) in results.iter_mut().zip(benjamini_hochberg(&p, q)) {
        r.bh_rejected = rej;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs(a: Vec<f64>, b: Vec<f64>) -> PairedLosses {
        PairedLosses::unlabelled(a, b).unwrap()
    }

    #[test]
    fn identical_losses_give_p_one() {
        let a = vec![0.3, 1.2, 0.7];
        let r = paired_permutation_test(&pairs(a.clone(), a.clone()), 100, 1, Exec::Sequential)
            .unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let a: Vec<f64> = (0..50).map(|i| i as f64 / 7.0).collect();
        let r = paired_permutation_test(&pairs(a.clone(), a), 500, 1, Exec::Sequential).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
    }

    /// Enumerate all 2^10 sign patterns directly: only the all-plus and
    /// all-minus patterns reach |sum| = 10.
    #[test]
    fn ten_positive_differences_exact() {
        let mut extreme = 0;
        for mask in 0u32..1024 {
            let s: i32 = (0..10)
                .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                .sum();
            if s.abs() >= 10 {
                extreme += 1;
            }
        }
        let oracle = extreme as f64 / 1024.0;
        assert_eq!(oracle, 2.0 / 1024.0);

        let r = paired_permutation_test(
            &pairs(vec![2.0; 10], vec![1.0; 10]),
            10_000,
            0,
            Exec::Sequential,
        )
        .unwrap();
        assert!(r.exact);
        assert_eq!(r.p_value, oracle);
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn strong_shift_is_significant_across_seeds() {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.5, 0.1).unwrap();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let d: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
            let r =
                paired_permutation_test(&pairs(d, vec![0.0; 100]), 10_000, seed, Exec::Parallel)
                    .unwrap();
            assert!(r.p_value < 0.001, "seed {seed}: p={}", r.p_value);
            assert!(r.p_value >= 1.0 / 10_001.0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            PairedLosses::unlabelled(vec![1.0], vec![]),
            Err(StatsError::LengthMismatch(1, 0))
        ));
        assert!(matches!(
            PairedLosses::unlabelled(vec![], vec![]),
            Err(StatsError::Empty)
        ));
        let p = pairs(vec![1.0], vec![0.0]);
        assert!(matches!(
            paired_permutation_test(&p, 0, 0, Exec::Sequential),
            Err(StatsError::NoPermutations)
        ));
    }

    #[test]
    fn bh_examples() {
        // thresholds i*q/m = [0.0167, 0.0333, 0.05]
        assert_eq!(
            benjamini_hochberg(&[0.01, 0.02, 0.30], 0.05),
            vec![true, true, false]
        );
        assert_eq!(benjamini_hochberg(&[1.0, 1.0, 1.0], 0.05), vec![false; 3]);
        assert_eq!(benjamini_hochberg(&[0.04], 0.05), vec![true]);
        // step-up: the largest passing rank rejects everything below it
        assert_eq!(
            benjamini_hochberg(&[0.04, 0.03, 0.049], 0.05),
            vec![true, true, true]
        );
        assert_eq!(
            benjamini_hochberg(&[0.30, 0.01, 0.02], 0.05),
            vec![false, true, true]
        );
    }

    fn dyadic() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0i32..64, 0i32..64), 1..40).prop_map(|v| {
            v.into_iter()
                .map(|(a, b)| (a as f64 / 8.0, b as f64 / 8.0))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn shift_invariance(v in dyadic(), c in 0i32..32) {
            let c = c as f64 / 4.0;
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let p0 = paired_permutation_test(&pairs(a.clone(), b.clone()), 400, 9, Exec::Sequential).unwrap();
            let a2 = a.iter().map(|x| x + c).collect();
            let b2 = b.iter().map(|x| x + c).collect();
            let p1 = paired_permutation_test(&pairs(a2, b2), 400, 9, Exec::Sequential).unwrap();
            prop_assert_eq!(p0.p_value, p1.p_value);
        }

        #[test]
        fn swap_negates_statistic_keeps_p(v in dyadic(), seed in 0u64..1000) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let ab = paired_permutation_test(&pairs(a.clone(), b.clone()), 300, seed, Exec::Sequential).unwrap();
            let ba = paired_permutation_test(&pairs(b, a), 300, seed, Exec::Parallel).unwrap();
            prop_assert_eq!(ab.statistic, -ba.statistic);
            prop_assert_eq!(ab.p_value, ba.p_value);
        }

        #[test]
        fn reproducible(v in dyadic(), seed in 0u64..1000) {
            let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let p = pairs(a, b);
            let r1 = paired_permutation_test(&p, 300, seed, Exec::Sequential).unwrap();
            let r2 = paired_permutation_test(&p, 300, seed, Exec::Parallel).unwrap();
            prop_assert_eq!(r1, r2);
        }

        #[test]
        fn bh_monotone(p in prop::collection::vec(0.0f64..=1.0, 1..30), i in 0usize..30, f in 0.0f64..1.0) {
            let i = i % p.len();
            let before = benjamini_hochberg(&p, 0.05);
            let mut lowered = p.clone();
            lowered[i] *= f;
            let after = benjamini_hochberg(&lowered, 0.05);
            for (b, a) in before.iter().zip(&after) {
                prop_assert!(!b || *a);
            }
        }
    }
}
