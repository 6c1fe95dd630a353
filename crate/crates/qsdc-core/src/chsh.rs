//! The 2×(2S+1) equivalent of the CHSH statistic:
//! `(3/(S+1)) · | ⟨σ·â₁ ⊗ S·(b̂₁+b̂₂)⟩ + ⟨σ·â₂ ⊗ S·(b̂₁−b̂₂)⟩ |`
//! with the unnormalized spin `S` on the B side. Local-hidden-variable
//! correlations obey the bound 2; violation is the protocol's security
//! check.

use serde::{Deserialize, Serialize};

use crate::measurement::{RoundOutcome, SettingLabel};
use crate::states::{expectation, pauli_matrices, tensor, DensityMatrix};
use crate::su2::{Direction, SpinRep};
use crate::{real, Error, Real, Result};

/// The four measurement directions entering the CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings<T: Real> {
    pub a1: Direction<T>,
    pub a2: Direction<T>,
    pub b1: Direction<T>,
    pub b2: Direction<T>,
}

impl<T: Real> ChshSettings<T> {
    /// The maximally violating settings for the Werner family:
    /// `a1 = x̂, a2 = ẑ, b1 = (x̂+ẑ)/√2, b2 = (x̂−ẑ)/√2`.
    pub fn optimal() -> Self {
        Self {
            a1: Direction::x_axis(),
            a2: Direction::z_axis(),
            b1: Direction::xz_diagonal(),
            b2: Direction::x_minus_z_diagonal(),
        }
    }
}

/// Which recorded setting labels feed each slot of the CHSH combination.
/// The defaults are the protocol's canonical assignment, matching
/// [`ChshSettings::optimal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshLabelPairs {
    pub a1: SettingLabel,
    pub a2: SettingLabel,
    pub b1: SettingLabel,
    pub b2: SettingLabel,
}

impl Default for ChshLabelPairs {
    fn default() -> Self {
        Self {
            a1: SettingLabel::X,
            a2: SettingLabel::Z,
            b1: SettingLabel::Xz,
            b2: SettingLabel::XMinusZ,
        }
    }
}

/// Finite-sample estimate of the CHSH statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate<T: Real> {
    /// Estimated statistic (absolute value, as in the inequality).
    pub value: T,
    /// Standard error propagated from the four per-pair sample errors.
    pub std_error: T,
    /// Sample counts per settings pair, ordered (a1,b1), (a1,b2), (a2,b1), (a2,b2).
    pub counts: [usize; 4],
}

/// Outcome of the security gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityDecision<T: Real> {
    pub pass: bool,
    /// One-sided lower confidence bound `value − z·std_error`.
    pub lower_bound: T,
    pub threshold: T,
    pub z: T,
}

/// Exact CHSH statistic of a 2×(2S+1) state.
pub fn chsh_exact<T: Real>(rho: &DensityMatrix<T>, settings: &ChshSettings<T>) -> Result<T> {
    let db = match rho.dims() {
        [2, db] => *db,
        dims => {
            return Err(Error::DimensionMismatch(format!(
                "CHSH statistic needs a 2×(2S+1) state, got dims {dims:?}"
            )))
        }
    };
    let rep = SpinRep::<T>::new(db as u32 - 1)?;
    let pauli = pauli_matrices::<T>();
    let sigma_along = |d: &Direction<T>| {
        let v = d.cartesian();
        &pauli[0] * nalgebra::Complex::new(v.x, T::zero())
            + &pauli[1] * nalgebra::Complex::new(v.y, T::zero())
            + &pauli[2] * nalgebra::Complex::new(v.z, T::zero())
    };
    let s_b1 = rep.spin_along(&settings.b1, false);
    let s_b2 = rep.spin_along(&settings.b2, false);
    let obs = tensor(&sigma_along(&settings.a1), &(&s_b1 + &s_b2))
        + tensor(&sigma_along(&settings.a2), &(&s_b1 - &s_b2));
    let raw = expectation(rho, &obs)?;
    Ok(raw.abs() * real::<T>(3.0) / (rep.spin() + T::one()))
}

/// Standard two-qubit CHSH statistic, the reference side of the
/// equivalent-observables identity.
pub fn chsh_2x2_reference<T: Real>(rho: &DensityMatrix<T>, settings: &ChshSettings<T>) -> Result<T> {
    if rho.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "reference CHSH needs a 2×2-subsystem state, got dims {:?}",
            rho.dims()
        )));
    }
    let pauli = pauli_matrices::<T>();
    let sigma_along = |d: &Direction<T>| {
        let v = d.cartesian();
        &pauli[0] * nalgebra::Complex::new(v.x, T::zero())
            + &pauli[1] * nalgebra::Complex::new(v.y, T::zero())
            + &pauli[2] * nalgebra::Complex::new(v.z, T::zero())
    };
    let b1 = sigma_along(&settings.b1);
    let b2 = sigma_along(&settings.b2);
    let obs = tensor(&sigma_along(&settings.a1), &(&b1 + &b2))
        + tensor(&sigma_along(&settings.a2), &(&b1 - &b2));
    Ok(expectation(rho, &obs)?.abs())
}

/// Estimates the CHSH statistic from measured rounds. Each round supplies
/// its setting labels and raw outcome; only rounds whose labels fall on one
/// of the four CHSH pairs contribute. Per-pair correlators are the sample
/// means of `a·m` (unnormalized `m`), scaled by `3/(S+1)`.
pub fn chsh_estimate<'a, T: Real>(
    rounds: impl IntoIterator<Item = &'a (SettingLabel, SettingLabel, RoundOutcome)>,
    two_s: u32,
    pairs: &ChshLabelPairs,
) -> Result<ChshEstimate<T>> {
    let pair_list = [
        (pairs.a1, pairs.b1),
        (pairs.a1, pairs.b2),
        (pairs.a2, pairs.b1),
        (pairs.a2, pairs.b2),
    ];
    let mut n = [0usize; 4];
    let mut sum = [0.0f64; 4];
    let mut sum_sq = [0.0f64; 4];
    for (la, lb, outcome) in rounds {
        if let Some(k) = pair_list.iter().position(|p| *p == (*la, *lb)) {
            let x = outcome.a as f64 * outcome.m();
            n[k] += 1;
            sum[k] += x;
            sum_sq[k] += x * x;
        }
    }
    for (k, &(la, lb)) in pair_list.iter().enumerate() {
        if n[k] == 0 {
            return Err(Error::InsufficientData {
                pair: (format!("{la:?}"), format!("{lb:?}")),
            });
        }
    }
    let mut combined = 0.0;
    let mut var_sum = 0.0;
    let signs = [1.0, 1.0, 1.0, -1.0];
    for k in 0..4 {
        let nk = n[k] as f64;
        let mean = sum[k] / nk;
        combined += signs[k] * mean;
        if n[k] > 1 {
            let sample_var = (sum_sq[k] - nk * mean * mean) / (nk - 1.0);
            var_sum += sample_var.max(0.0) / nk;
        }
    }
    let s = two_s as f64 / 2.0;
    let scale = 3.0 / (s + 1.0);
    Ok(ChshEstimate {
        value: real::<T>(scale * combined.abs()),
        std_error: real::<T>(scale * var_sum.sqrt()),
        counts: n,
    })
}

/// Security gate: pass iff the one-sided lower confidence bound
/// `value − z·std_error` exceeds the threshold (default 2, z = 3).
pub fn security_decision<T: Real>(
    est: &ChshEstimate<T>,
    threshold: T,
    z: T,
) -> SecurityDecision<T> {
    let lower_bound = est.value - z * est.std_error;
    SecurityDecision {
        pass: lower_bound > threshold,
        lower_bound,
        threshold,
        z,
    }
}

/// Locates the α at which the exact CHSH statistic at optimal settings
/// crosses the classical bound 2, by bisection to `tol`.
pub fn violation_crossover_alpha<T: Real>(two_s: u32, tol: T) -> Result<T> {
    let settings = ChshSettings::optimal();
    let stat = |alpha: T| -> Result<T> {
        let rho = crate::states::werner_equivalent(alpha, two_s)?;
        chsh_exact(&rho, &settings)
    };
    let bound = real::<T>(2.0);
    let mut lo = T::zero();
    let mut hi = T::one();
    if stat(lo)? > bound || stat(hi)? < bound {
        return Err(Error::InvalidParameter(
            "statistic does not cross the bound on [0, 1]".into(),
        ));
    }
    while hi - lo > tol {
        let mid = (lo + hi) / real::<T>(2.0);
        if stat(mid)? < bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / real::<T>(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{
        alice_settings, bob_settings, joint_distribution, sample_round,
    };
    use crate::states::{werner_2x2, werner_equivalent};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TWO_SQRT_2: f64 = 2.0 * std::f64::consts::SQRT_2;

    fn random_settings(rng: &mut impl Rng) -> ChshSettings<f64> {
        let mut dir = || {
            let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            Direction::from_angles(theta, phi)
        };
        ChshSettings {
            a1: dir(),
            a2: dir(),
            b1: dir(),
            b2: dir(),
        }
    }

    #[test]
    fn chsh_exact_vanishes_at_alpha_zero() {
        let rho = werner_equivalent(0.0, 6).unwrap();
        assert_abs_diff_eq!(
            chsh_exact(&rho, &ChshSettings::optimal()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn chsh_exact_optimal_is_2sqrt2_alpha_independent_of_s() {
        for alpha in [0.3, 0.73, 1.0] {
            for two_s in [2u32, 4, 6, 8] {
                let rho = werner_equivalent(alpha, two_s).unwrap();
                let v = chsh_exact(&rho, &ChshSettings::optimal()).unwrap();
                assert_abs_diff_eq!(v, TWO_SQRT_2 * alpha, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn chsh_exact_degenerate_settings() {
        let alpha = 0.6;
        let rho = werner_equivalent(alpha, 6).unwrap();
        let settings = ChshSettings {
            a1: Direction::x_axis(),
            a2: Direction::z_axis(),
            b1: Direction::x_axis(),
            b2: Direction::x_axis(),
        };
        assert_abs_diff_eq!(
            chsh_exact(&rho, &settings).unwrap(),
            2.0 * alpha,
            epsilon = 1e-10
        );
    }

    #[test]
    fn reference_chsh_on_werner_2x2() {
        for alpha in [0.0, 0.5, 0.73, 1.0] {
            let rho = werner_2x2(alpha).unwrap();
            let v = chsh_2x2_reference(&rho, &ChshSettings::optimal()).unwrap();
            assert_abs_diff_eq!(v, TWO_SQRT_2 * alpha, epsilon = 1e-10);
        }
    }

    #[test]
    fn equivalent_observables_identity_random_settings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let alpha = 0.73;
        let small = werner_2x2(alpha).unwrap();
        let large = werner_equivalent(alpha, 6).unwrap();
        for _ in 0..50 {
            let settings = random_settings(&mut rng);
            let lhs = chsh_exact(&large, &settings).unwrap();
            let rhs = chsh_2x2_reference(&small, &settings).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn classical_bound_and_crossover() {
        let settings = ChshSettings::optimal();
        let near = 1.0 / std::f64::consts::SQRT_2 - 1e-6;
        let rho = werner_equivalent(near, 6).unwrap();
        assert!(chsh_exact(&rho, &settings).unwrap() <= 2.0);

        let crossing = violation_crossover_alpha::<f64>(6, 1e-10).unwrap();
        assert_abs_diff_eq!(crossing, 1.0 / std::f64::consts::SQRT_2, epsilon = 1e-9);
    }

    #[test]
    fn estimate_from_hand_built_records() {
        use SettingLabel::*;
        let rounds = vec![
            (X, Xz, RoundOutcome { a: 1, two_m: 6 }),       // a·m = 3
            (X, XMinusZ, RoundOutcome { a: -1, two_m: 4 }), // a·m = −2
            (Z, Xz, RoundOutcome { a: 1, two_m: -2 }),      // a·m = −1
            (Z, XMinusZ, RoundOutcome { a: -1, two_m: 6 }), // a·m = −3
        ];
        let est = chsh_estimate::<f64>(&rounds, 6, &ChshLabelPairs::default()).unwrap();
        // (3/4)·|3 − 2 − 1 + 3| = 2.25; single samples give zero std error
        assert_abs_diff_eq!(est.value, 2.25, epsilon = 1e-12);
        assert_abs_diff_eq!(est.std_error, 0.0, epsilon = 1e-12);
        assert_eq!(est.counts, [1, 1, 1, 1]);
    }

    #[test]
    fn estimate_requires_all_four_pairs() {
        use SettingLabel::*;
        let rounds = vec![
            (X, Xz, RoundOutcome { a: 1, two_m: 6 }),
            (X, XMinusZ, RoundOutcome { a: -1, two_m: 4 }),
            (Z, Xz, RoundOutcome { a: 1, two_m: -2 }),
        ];
        assert!(matches!(
            chsh_estimate::<f64>(&rounds, 6, &ChshLabelPairs::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn simulate_rounds(
        alpha: f64,
        two_s: u32,
        n_rounds: usize,
        seed: u64,
    ) -> Vec<(SettingLabel, SettingLabel, RoundOutcome)> {
        let rho = werner_equivalent(alpha, two_s).unwrap();
        let sa = alice_settings::<f64>();
        let sb = bob_settings::<f64>();
        let dists: Vec<Vec<_>> = sa
            .iter()
            .map(|a| {
                sb.iter()
                    .map(|b| joint_distribution(&rho, a, b).unwrap())
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n_rounds)
            .map(|_| {
                let ia = rng.gen_range(0..3);
                let ib = rng.gen_range(0..3);
                let o = sample_round(&dists[ia][ib], &mut rng).unwrap();
                (sa[ia].label(), sb[ib].label(), o)
            })
            .collect()
    }

    #[test]
    fn monte_carlo_estimate_tracks_exact_value() {
        let alpha = 0.73;
        let rounds = simulate_rounds(alpha, 6, 100_000, 4242);
        let est = chsh_estimate::<f64>(&rounds, 6, &ChshLabelPairs::default()).unwrap();
        let exact = TWO_SQRT_2 * alpha;
        assert!((est.value - exact).abs() < 3.0 * est.std_error, "{est:?}");

        let null_rounds = simulate_rounds(0.0, 6, 100_000, 777);
        let est0 = chsh_estimate::<f64>(&null_rounds, 6, &ChshLabelPairs::default()).unwrap();
        assert!(est0.value < 3.0 * est0.std_error + 1e-9, "{est0:?}");
    }

    #[test]
    fn estimator_consistency_over_seeds() {
        let alpha = 0.5;
        let exact = TWO_SQRT_2 * alpha;
        let mut hits = 0;
        for seed in 0..100u64 {
            let rounds = simulate_rounds(alpha, 6, 10_000, seed);
            let est = chsh_estimate::<f64>(&rounds, 6, &ChshLabelPairs::default()).unwrap();
            if (est.value - exact).abs() < 4.0 * est.std_error {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 within 4 standard errors");
    }

    #[test]
    fn security_decision_margins() {
        let mk = |value: f64, std_error: f64| ChshEstimate {
            value,
            std_error,
            counts: [100; 4],
        };
        assert!(security_decision(&mk(2.06, 0.005), 2.0, 3.0).pass);
        assert!(!security_decision(&mk(1.9, 0.001), 2.0, 3.0).pass);
        assert!(!security_decision(&mk(2.06, 0.05), 2.0, 3.0).pass);
    }
}
