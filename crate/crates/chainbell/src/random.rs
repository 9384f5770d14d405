//! Certified randomness from the chained Bell test: outcome probabilities,
//! per-pair min-entropy, the closed-form extremes, and their noisy versions.
//!
//! The guaranteed figure comes from the setting pairs that actually appear
//! in the Bell functional (j ∈ {i-1, i} with the wrap), since those are the
//! correlations the observed violation certifies. The full n×n matrix is
//! exposed as well; for odd n its maximum sits at the orthogonal pairing
//! j = i + (n-1)/2 and reaches two bits exactly.

use serde::Serialize;

use crate::qmath::CMat;
use crate::robust::{noisy_bob, NoiseModel};
use crate::scenario::Realization;
use crate::{Error, Result};

/// Per-pair certified bits and the derived extremes.
#[derive(Clone, Debug, Serialize)]
pub struct RandomnessReport {
    pub n: usize,
    /// R_ij = -log₂ max_{a,b} P(a,b|A_i,B_j), row-major over (i, j), 1-based.
    pub per_pair_bits: Vec<Vec<f64>>,
    /// Minimum over the pairs appearing in the Bell functional.
    pub r_min: f64,
    /// Maximum over the full matrix.
    pub r_max: f64,
    /// 1-based (i, j) achieving `r_max`.
    pub max_pair: (usize, usize),
    /// Noise level the report was computed at (0 for noiseless).
    pub epsilon: f64,
}

/// P(a, b | A_i, B_j) through the projector pair (1 + a·A)/2 ⊗ (1 + b·B)/2.
pub fn outcome_probability(r: &Realization, i: usize, j: usize, a: i8, b: i8) -> Result<f64> {
    let n = r.n();
    if i < 1 || i > n || j < 1 || j > n {
        return Err(Error::IndexOutOfRange(format!(
            "settings ({i}, {j}) outside 1..={n}"
        )));
    }
    if a.abs() != 1 || b.abs() != 1 {
        return Err(Error::InvalidArgument(format!(
            "outcomes must be ±1, got ({a}, {b})"
        )));
    }
    let id = CMat::identity(r.dim());
    let proj_a = id
        .add(&r.alice[i - 1].matrix().scale_re(a as f64))
        .scale_re(0.5);
    let proj_b = id
        .add(&r.bob[j - 1].matrix().scale_re(b as f64))
        .scale_re(0.5);
    proj_a.kron(&proj_b).expectation_re(&r.state)
}

/// -log₂ of the largest of the four outcome probabilities for a pair.
pub fn randomness_bits(r: &Realization, i: usize, j: usize) -> Result<f64> {
    let mut p_max: f64 = 0.0;
    for a in [-1i8, 1] {
        for b in [-1i8, 1] {
            p_max = p_max.max(outcome_probability(r, i, j, a, b)?);
        }
    }
    Ok(-p_max.log2())
}

/// Closed-form guaranteed randomness log₂(4 / (1 + cos(π/2n))).
pub fn r_min_closed(n: usize) -> f64 {
    let c = (std::f64::consts::PI / (2.0 * n as f64)).cos();
    (4.0 / (1.0 + c)).log2()
}

/// The two-bit maximum at the orthogonal pairing; only odd n has the
/// pairing j = i + (n-1)/2.
pub fn r_max_closed(n: usize) -> Result<f64> {
    if n % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "the orthogonal pairing i + (n-1)/2 needs odd n, got {n}"
        )));
    }
    Ok(2.0)
}

/// Noisy closed forms under the normalized model. Returns (r_min, r_max);
/// r_max needs odd n.
pub fn noisy_randomness(n: usize, eps: f64) -> Result<(f64, f64)> {
    if eps < 0.0 {
        return Err(Error::InvalidArgument("ε must be non-negative".into()));
    }
    if n % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "the noisy r_max formula needs odd n, got {n}"
        )));
    }
    let root = (1.0 + eps * eps).sqrt();
    let c = (std::f64::consts::PI / (2.0 * n as f64)).cos();
    let r_min = (4.0 * root / (root + eps + c)).log2();
    let r_max = (4.0 * root / (root + eps)).log2();
    Ok((r_min, r_max))
}

/// True when the pair (i, j) appears in the Bell functional: B_i couples to
/// A_i and A_{i+1}, so Alice's i pairs with j = i or j = i - 1 (wrapping to
/// n at i = 1).
pub fn pair_in_functional(n: usize, i: usize, j: usize) -> bool {
    j == i || (i > 1 && j == i - 1) || (i == 1 && j == n)
}

/// Full per-pair evaluation from the operators, with Bob noise applied per
/// the (normalized) model.
pub fn empirical_randomness(r: &Realization, nm: &NoiseModel) -> Result<RandomnessReport> {
    if nm.epsilon > 0.0 && !nm.normalized {
        return Err(Error::InvalidArgument(
            "empirical randomness uses the normalized noise convention; the unnormalized \
             model pushes probabilities off the simplex at O(ε²)"
                .into(),
        ));
    }
    let noisy = if nm.epsilon > 0.0 {
        noisy_bob(r, nm)?
    } else {
        r.clone()
    };
    let n = r.n();
    let mut per_pair_bits = vec![vec![0.0; n]; n];
    let mut r_max = f64::NEG_INFINITY;
    let mut max_pair = (1, 1);
    let mut r_min = f64::INFINITY;
    for i in 1..=n {
        for j in 1..=n {
            let bits = randomness_bits(&noisy, i, j)?;
            per_pair_bits[i - 1][j - 1] = bits;
            if bits > r_max {
                r_max = bits;
                max_pair = (i, j);
            }
            if pair_in_functional(n, i, j) {
                r_min = r_min.min(bits);
            }
        }
    }
    Ok(RandomnessReport {
        n,
        per_pair_bits,
        r_min,
        r_max,
        max_pair,
        epsilon: nm.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{predicted_correlation, reference_realization};

    #[test]
    fn probabilities_normalize_and_validate() {
        let r = reference_realization(5).unwrap();
        for i in 1..=5 {
            for j in 1..=5 {
                let total: f64 = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
                    .iter()
                    .map(|&(a, b)| outcome_probability(&r, i, j, a, b).unwrap())
                    .sum();
                assert!((total - 1.0).abs() <= 1e-12);
            }
        }
        assert!(outcome_probability(&r, 0, 1, 1, 1).is_err());
        assert!(outcome_probability(&r, 1, 1, 2, 1).is_err());
    }

    #[test]
    fn aligned_pair_probability() {
        // j = i, a = b = +1 → (1 + cos(π/2n))/4.
        for n in [3usize, 7] {
            let r = reference_realization(n).unwrap();
            let expected = (1.0 + (std::f64::consts::PI / (2.0 * n as f64)).cos()) / 4.0;
            assert!((outcome_probability(&r, 2, 2, 1, 1).unwrap() - expected).abs() <= 1e-12);
        }
    }

    #[test]
    fn orthogonal_pairs_are_uniform() {
        for n in [3usize, 5, 9] {
            let r = reference_realization(n).unwrap();
            let shift = (n - 1) / 2;
            for i in 1..=n {
                let j = (i + shift - 1) % n + 1;
                for a in [-1i8, 1] {
                    for b in [-1i8, 1] {
                        let p = outcome_probability(&r, i, j, a, b).unwrap();
                        assert!((p - 0.25).abs() <= 1e-12, "n = {n}, ({i}, {j})");
                    }
                }
            }
        }
    }

    #[test]
    fn marginals_are_unbiased() {
        let r = reference_realization(4).unwrap();
        for i in 1..=4 {
            // P(a|A_i) = Σ_b P(a,b|·) = 1/2 on the maximally entangled state.
            let p_plus: f64 = [-1i8, 1]
                .iter()
                .map(|&b| outcome_probability(&r, i, 1, 1, b).unwrap())
                .sum();
            assert!((p_plus - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn n3_bits_examples() {
        let r = reference_realization(3).unwrap();
        // (2, 3) is the orthogonal pairing: two full bits.
        assert!((randomness_bits(&r, 2, 3).unwrap() - 2.0).abs() <= 1e-12);
        // j = i: brute-forced over the four-entry table, 1.1000313730470082.
        let expected = (4.0 / (1.0 + (std::f64::consts::PI / 6.0).cos())).log2();
        assert!((expected - 1.100_031_373_047_008_2).abs() <= 1e-12);
        assert!((randomness_bits(&r, 1, 1).unwrap() - expected).abs() <= 1e-10);
    }

    #[test]
    fn closed_forms() {
        assert!((r_min_closed(3) - 1.100_031_373_047_008_2).abs() <= 1e-12);
        assert!((r_max_closed(3).unwrap() - 2.0).abs() <= 1e-15);
        assert!(r_max_closed(4).is_err());
        // R_min approaches one bit from above as n grows.
        assert!((r_min_closed(101) - 1.0).abs() <= 1e-3);
        let mut prev = f64::INFINITY;
        for n in [3usize, 5, 9, 21, 101] {
            let v = r_min_closed(n);
            assert!(v < prev && v > 1.0);
            prev = v;
        }
    }

    #[test]
    fn noisy_closed_forms() {
        let (r_min, r_max) = noisy_randomness(5, 0.0).unwrap();
        assert!((r_min - r_min_closed(5)).abs() <= 1e-15);
        assert!((r_max - 2.0).abs() <= 1e-15);
        // ε = 0.1 anchor for the noisy maximum.
        let (_, r_max) = noisy_randomness(5, 0.1).unwrap();
        let expected = (4.0 * 1.01f64.sqrt() / (1.01f64.sqrt() + 0.1)).log2();
        assert!((r_max - expected).abs() <= 1e-15);
        assert!((r_max - 1.863_147_515_948_930_6).abs() <= 1e-12);
        // Monotone non-increasing in ε.
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in 0..=30 {
            let eps = 0.3 * k as f64 / 30.0;
            let pair = noisy_randomness(5, eps).unwrap();
            assert!(pair.0 <= prev.0 + 1e-15 && pair.1 <= prev.1 + 1e-15);
            prev = pair;
        }
        assert!(noisy_randomness(5, -0.1).is_err());
        assert!(noisy_randomness(4, 0.1).is_err());
    }

    #[test]
    fn empirical_noiseless_matches_closed_forms() {
        for n in [3usize, 5, 9, 11] {
            let r = reference_realization(n).unwrap();
            let nm = NoiseModel::new(0.0, true).unwrap();
            let report = empirical_randomness(&r, &nm).unwrap();
            assert!((report.r_min - r_min_closed(n)).abs() <= 1e-10, "n = {n}");
            assert!((report.r_max - 2.0).abs() <= 1e-12, "n = {n}");
            let (i, j) = report.max_pair;
            let shift = (n - 1) / 2;
            assert_eq!(j, (i + shift - 1) % n + 1, "n = {n}: pair ({i}, {j})");
            // Every entry stays within the two-bit ceiling.
            for row in &report.per_pair_bits {
                for &bits in row {
                    assert!(bits <= 2.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn empirical_matrix_consistent_with_correlations() {
        // R_ij is determined by |⟨A_i ⊗ B_j⟩| alone on an unbiased state;
        // exhaustively against the closed-form correlations up to n = 11.
        for n in 2..=11usize {
            let r = reference_realization(n).unwrap();
            let nm = NoiseModel::new(0.0, true).unwrap();
            let report = empirical_randomness(&r, &nm).unwrap();
            for i in 1..=n {
                for j in 1..=n {
                    let c = predicted_correlation(n, j as isize - i as isize).unwrap();
                    let expected = (4.0 / (1.0 + c.abs())).log2();
                    assert!(
                        (report.per_pair_bits[i - 1][j - 1] - expected).abs() <= 1e-10,
                        "n = {n}, ({i}, {j})"
                    );
                }
            }
        }
        // The maximum sits at the x = ±2 offsets for n = 5.
        let r = reference_realization(5).unwrap();
        let nm = NoiseModel::new(0.0, true).unwrap();
        let report = empirical_randomness(&r, &nm).unwrap();
        let (i, j) = report.max_pair;
        let diff = (j as isize - i as isize).rem_euclid(5);
        assert!(diff == 2 || diff == 3, "pair ({i}, {j})");
    }

    #[test]
    fn probabilities_normalize_on_random_realizations() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        for _ in 0..10 {
            let r = crate::scenario::Realization::random(3, 2, &mut rng).unwrap();
            for i in 1..=3 {
                for j in 1..=3 {
                    let total: f64 = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
                        .iter()
                        .map(|&(a, b)| outcome_probability(&r, i, j, a, b).unwrap())
                        .sum();
                    assert!((total - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn empirical_noisy_matches_closed_forms() {
        for n in [3usize, 9] {
            let r = reference_realization(n).unwrap();
            for &eps in &[0.02, 0.05, 0.1] {
                let nm = NoiseModel::new(eps, true).unwrap();
                let report = empirical_randomness(&r, &nm).unwrap();
                let (min_expected, max_expected) = noisy_randomness(n, eps).unwrap();
                assert!(
                    (report.r_min - min_expected).abs() <= 1e-10,
                    "n = {n}, ε = {eps}"
                );
                assert!(
                    (report.r_max - max_expected).abs() <= 1e-10,
                    "n = {n}, ε = {eps}"
                );
            }
        }
    }

    #[test]
    fn empirical_rejects_unnormalized_noise() {
        let r = reference_realization(3).unwrap();
        let nm = NoiseModel::new(0.1, false).unwrap();
        assert!(empirical_randomness(&r, &nm).is_err());
    }

    #[test]
    fn even_n_reports_matrix_maximum_below_two() {
        // No orthogonal pairing exists; the best pair sits at angle
        // (n±1)π/(2n) and certifies strictly less than two bits.
        let r = reference_realization(6).unwrap();
        let nm = NoiseModel::new(0.0, true).unwrap();
        let report = empirical_randomness(&r, &nm).unwrap();
        let angle = (std::f64::consts::PI / 12.0).sin();
        let expected = (4.0 / (1.0 + angle)).log2();
        assert!((report.r_max - expected).abs() <= 1e-10);
        assert!(report.r_max < 2.0 - 1e-3);
    }

    #[test]
    fn functional_pair_predicate() {
        assert!(pair_in_functional(5, 2, 2));
        assert!(pair_in_functional(5, 2, 1));
        assert!(pair_in_functional(5, 1, 5));
        assert!(!pair_in_functional(5, 1, 2));
        assert!(!pair_in_functional(5, 3, 5));
    }
}
