//! Projective measurements of `σ·â` and `S·b̂`, exact joint Born-rule
//! distributions, and seeded outcome sampling.
//!
//! Outcomes are labeled by Alice's sign `a ∈ {±1}` and Bob's doubled
//! quantum number `two_m ∈ {−2S, …, 2S}` (unnormalized `S·b̂` spectrum,
//! kept as exact integers).

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::states::{expectation, pauli_matrices, tensor, DensityMatrix};
use crate::su2::{Direction, SpinRep};
use crate::{real, Error, Real, Result};

/// Which party a measurement setting belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Canonical protocol settings. Alice draws from `{X, Xz, Z}`; Bob from
/// `{X, Xz, XMinusZ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingLabel {
    /// x̂
    X,
    /// (x̂ + ẑ)/√2
    Xz,
    /// ẑ
    Z,
    /// (x̂ − ẑ)/√2
    XMinusZ,
}

impl SettingLabel {
    pub fn direction<T: Real>(&self) -> Direction<T> {
        match self {
            SettingLabel::X => Direction::x_axis(),
            SettingLabel::Xz => Direction::xz_diagonal(),
            SettingLabel::Z => Direction::z_axis(),
            SettingLabel::XMinusZ => Direction::x_minus_z_diagonal(),
        }
    }
}

/// A party's measurement setting: a labeled direction on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setting<T: Real> {
    party: Party,
    label: SettingLabel,
    direction: Direction<T>,
}

impl<T: Real> Setting<T> {
    pub fn alice(label: SettingLabel) -> Result<Self> {
        if label == SettingLabel::XMinusZ {
            return Err(Error::InvalidParameter(
                "Alice's settings are X, XZ, Z".into(),
            ));
        }
        Ok(Self {
            party: Party::Alice,
            label,
            direction: label.direction(),
        })
    }

    pub fn bob(label: SettingLabel) -> Result<Self> {
        if label == SettingLabel::Z {
            return Err(Error::InvalidParameter(
                "Bob's settings are X, XZ, X−Z".into(),
            ));
        }
        Ok(Self {
            party: Party::Bob,
            label,
            direction: label.direction(),
        })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn label(&self) -> SettingLabel {
        self.label
    }

    pub fn direction(&self) -> &Direction<T> {
        &self.direction
    }
}

/// Alice's three protocol settings, in the fixed order X, XZ, Z.
pub fn alice_settings<T: Real>() -> [Setting<T>; 3] {
    [
        Setting::alice(SettingLabel::X).unwrap(),
        Setting::alice(SettingLabel::Xz).unwrap(),
        Setting::alice(SettingLabel::Z).unwrap(),
    ]
}

/// Bob's three protocol settings, in the fixed order X, XZ, X−Z.
pub fn bob_settings<T: Real>() -> [Setting<T>; 3] {
    [
        Setting::bob(SettingLabel::X).unwrap(),
        Setting::bob(SettingLabel::Xz).unwrap(),
        Setting::bob(SettingLabel::XMinusZ).unwrap(),
    ]
}

/// One round's raw outcomes: Alice's sign and Bob's doubled quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub a: i8,
    pub two_m: i32,
}

impl RoundOutcome {
    /// Bob's quantum number `m` as a float (may be half-integral).
    pub fn m(&self) -> f64 {
        self.two_m as f64 / 2.0
    }
}

/// Eigendecomposition of a Hermitian observable with degenerate eigenvalues
/// clustered within `tol`; returns `(eigenvalue, projector)` pairs sorted by
/// ascending eigenvalue. Projectors are idempotent and sum to the identity.
pub fn eigensystem<T: Real>(
    obs: &DMatrix<Complex<T>>,
    tol: T,
) -> Result<Vec<(T, DMatrix<Complex<T>>)>> {
    let mut asym = T::zero();
    for i in 0..obs.nrows() {
        for j in i..obs.ncols() {
            let d = crate::cmod(obs[(i, j)] - obs[(j, i)].conj());
            if d > asym {
                asym = d;
            }
        }
    }
    if asym > real::<T>(1e-10) {
        return Err(Error::NotHermitian {
            max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
        });
    }
    let eig = SymmetricEigen::new(obs.clone());
    let n = obs.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues are finite")
    });

    let mut out: Vec<(T, DMatrix<Complex<T>>)> = Vec::new();
    let mut cluster: Vec<usize> = Vec::new();
    let flush = |cluster: &mut Vec<usize>, out: &mut Vec<(T, DMatrix<Complex<T>>)>| {
        if cluster.is_empty() {
            return;
        }
        let mut proj = DMatrix::<Complex<T>>::zeros(n, n);
        let mut sum = T::zero();
        for &k in cluster.iter() {
            let v = eig.eigenvectors.column(k);
            proj += &v * v.adjoint();
            sum += eig.eigenvalues[k];
        }
        out.push((sum / real::<T>(cluster.len() as f64), proj));
        cluster.clear();
    };
    for &k in &order {
        if let Some(&last) = cluster.last() {
            if (eig.eigenvalues[k] - eig.eigenvalues[last]).abs() > tol {
                flush(&mut cluster, &mut out);
            }
        }
        cluster.push(k);
    }
    flush(&mut cluster, &mut out);
    Ok(out)
}

/// Exact Born-rule table over `(a, two_m)` for a 2×(2S+1) state measured
/// with `σ·â` on A and the unnormalized `S·b̂` on B.
///
/// Enumeration order is fixed for sampling: `a` ascending (−1 then +1),
/// then `two_m` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T: Real> {
    two_s: u32,
    probs: Vec<T>,
}

impl<T: Real> JointDistribution<T> {
    /// Builds a table directly from probabilities in enumeration order;
    /// used by tests that need hand-crafted tables.
    pub fn from_probs(two_s: u32, probs: Vec<T>) -> Result<Self> {
        let expected = 2 * (two_s as usize + 1);
        if probs.len() != expected {
            return Err(Error::MalformedDistribution(format!(
                "table needs {expected} entries for two_s = {two_s}, got {}",
                probs.len()
            )));
        }
        Ok(Self { two_s, probs })
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn dim_b(&self) -> usize {
        self.two_s as usize + 1
    }

    /// Outcome labels at a flat enumeration index.
    pub fn outcome_at(&self, idx: usize) -> RoundOutcome {
        let dim_b = self.dim_b();
        let a = if idx / dim_b == 0 { -1 } else { 1 };
        let two_m = -(self.two_s as i32) + 2 * (idx % dim_b) as i32;
        RoundOutcome { a, two_m }
    }

    pub fn prob(&self, a: i8, two_m: i32) -> Option<T> {
        let a_idx = match a {
            -1 => 0usize,
            1 => 1,
            _ => return None,
        };
        let off = two_m + self.two_s as i32;
        if off < 0 || off % 2 != 0 || (off / 2) as usize >= self.dim_b() {
            return None;
        }
        Some(self.probs[a_idx * self.dim_b() + (off / 2) as usize])
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (RoundOutcome, T)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.outcome_at(i), p))
    }

    fn validate_for_sampling(&self) -> Result<()> {
        let mut sum = T::zero();
        for &p in &self.probs {
            if p < -real::<T>(1e-12) {
                return Err(Error::MalformedDistribution(format!(
                    "negative probability {:.3e}",
                    p.to_f64().unwrap_or(f64::NAN)
                )));
            }
            sum += p;
        }
        if (sum - T::one()).abs() > real::<T>(1e-9) {
            return Err(Error::MalformedDistribution(format!(
                "probabilities sum to {}, not 1",
                sum.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(())
    }
}

/// Computes the exact joint distribution `P(a, m) = Tr[ρ (Πa ⊗ Πm)]`.
pub fn joint_distribution<T: Real>(
    rho: &DensityMatrix<T>,
    setting_a: &Setting<T>,
    setting_b: &Setting<T>,
) -> Result<JointDistribution<T>> {
    let db = match rho.dims() {
        [2, db] => *db,
        dims => {
            return Err(Error::DimensionMismatch(format!(
                "joint distribution needs a 2×(2S+1) state, got dims {dims:?}"
            )))
        }
    };
    if setting_a.party() != Party::Alice || setting_b.party() != Party::Bob {
        return Err(Error::InvalidParameter(
            "settings must be (Alice, Bob) in that order".into(),
        ));
    }
    let two_s = db as u32 - 1;
    let rep = SpinRep::<T>::new(two_s)?;
    let pauli = pauli_matrices::<T>();
    let va = setting_a.direction().cartesian();
    let sigma_a = &pauli[0] * Complex::new(va.x, T::zero())
        + &pauli[1] * Complex::new(va.y, T::zero())
        + &pauli[2] * Complex::new(va.z, T::zero());
    let spin_b = rep.spin_along(setting_b.direction(), false);

    let tol = real::<T>(1e-8);
    let eig_a = eigensystem(&sigma_a, tol)?;
    let eig_b = eigensystem(&spin_b, tol)?;

    let dim_b = db;
    let mut probs = vec![T::zero(); 2 * dim_b];
    for (val_a, proj_a) in &eig_a {
        let a_idx = if *val_a < T::zero() { 0usize } else { 1 };
        for (val_b, proj_b) in &eig_b {
            let two_m = (*val_b * real::<T>(2.0))
                .round()
                .to_i64()
                .expect("spin eigenvalue fits an integer") as i32;
            let m_idx = ((two_m + two_s as i32) / 2) as usize;
            let p = expectation(rho, &tensor(proj_a, proj_b))?;
            probs[a_idx * dim_b + m_idx] = p;
        }
    }
    let dist = JointDistribution { two_s, probs };
    // internal consistency: the Born rule must give a normalized table
    debug_assert!(dist.validate_for_sampling().is_ok());
    Ok(dist)
}

/// Draws one outcome by inverse-CDF sampling over the fixed enumeration
/// order (`a` ascending, then `m` ascending). Deterministic given the
/// stream state.
pub fn sample_round<T: Real>(
    dist: &JointDistribution<T>,
    rng: &mut impl Rng,
) -> Result<RoundOutcome> {
    dist.validate_for_sampling()?;
    let u = real::<T>(rng.gen::<f64>());
    let mut acc = T::zero();
    let last = dist.probs.len() - 1;
    for (i, &p) in dist.probs.iter().enumerate() {
        acc += p;
        if u < acc || i == last {
            return Ok(dist.outcome_at(i));
        }
    }
    unreachable!("loop returns on the last entry")
}

/// The closed-form joint probability
/// `P(a, m) = (1 − α·a·(m/S)·(â·b̂)) / (2(2S+1))`
/// for the equivalent Werner state; used as an independent oracle.
pub fn closed_form_prob(alpha: f64, two_s: u32, a_dot_b: f64, a: i8, two_m: i32) -> f64 {
    let s = two_s as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    (1.0 - alpha * a as f64 * (m / s) * a_dot_b) / (2.0 * (two_s as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::werner_equivalent;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn setting_labels_reject_wrong_party() {
        assert!(Setting::<f64>::alice(SettingLabel::XMinusZ).is_err());
        assert!(Setting::<f64>::bob(SettingLabel::Z).is_err());
    }

    #[test]
    fn setting_directions_match_labels() {
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let cases = [
            (SettingLabel::X, [1.0, 0.0, 0.0]),
            (SettingLabel::Xz, [inv_sqrt2, 0.0, inv_sqrt2]),
            (SettingLabel::Z, [0.0, 0.0, 1.0]),
            (SettingLabel::XMinusZ, [inv_sqrt2, 0.0, -inv_sqrt2]),
        ];
        for (label, want) in cases {
            let d = label.direction::<f64>().cartesian();
            for (got, w) in d.iter().zip(want) {
                assert_abs_diff_eq!(*got, w, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigensystem_of_pauli_z() {
        let pauli = pauli_matrices::<f64>();
        let sys = eigensystem(&pauli[2], 1e-8).unwrap();
        assert_eq!(sys.len(), 2);
        assert_abs_diff_eq!(sys[0].0, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys[1].0, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys[0].1[(1, 1)].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys[1].1[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigensystem_clusters_degenerate_identity() {
        let id = DMatrix::<Complex<f64>>::identity(4, 4);
        let sys = eigensystem(&id, 1e-8).unwrap();
        assert_eq!(sys.len(), 1);
        assert_abs_diff_eq!(sys[0].0, 1.0, epsilon = 1e-12);
        let diff = &sys[0].1 - id;
        assert!(diff.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn eigensystem_projector_completeness_and_idempotence() {
        let rep = SpinRep::<f64>::new(6).unwrap();
        let obs = rep.spin_along(&Direction::x_axis(), false);
        let sys = eigensystem(&obs, 1e-8).unwrap();
        assert_eq!(sys.len(), 7);
        let expected: Vec<f64> = (-3..=3).map(|m| m as f64).collect();
        let mut total = DMatrix::<Complex<f64>>::zeros(7, 7);
        for ((val, proj), want) in sys.iter().zip(expected) {
            assert_abs_diff_eq!(*val, want, epsilon = 1e-10);
            let idem = proj * proj - proj;
            assert!(idem.iter().all(|z| z.norm() < 1e-10));
            total += proj;
        }
        let diff = total - DMatrix::<Complex<f64>>::identity(7, 7);
        assert!(diff.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn eigensystem_rejects_non_hermitian() {
        let mut m = DMatrix::<Complex<f64>>::identity(2, 2);
        m[(0, 1)] = Complex::new(0.5, 0.0);
        assert!(eigensystem(&m, 1e-8).is_err());
    }

    #[test]
    fn orthogonal_settings_give_uniform_table() {
        // â = ẑ, b̂ = x̂ is the orthogonal pair in the protocol set
        let rho = werner_equivalent(0.73, 6).unwrap();
        let sa = Setting::alice(SettingLabel::Z).unwrap();
        let sb = Setting::bob(SettingLabel::X).unwrap();
        let dist = joint_distribution(&rho, &sa, &sb).unwrap();
        for (_, p) in dist.iter() {
            assert_abs_diff_eq!(p, 1.0 / 14.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn joint_distribution_matches_closed_form() {
        for alpha in [0.0, 0.3, 0.73, 1.0] {
            for two_s in [2u32, 6] {
                let rho = werner_equivalent(alpha, two_s).unwrap();
                for sa in alice_settings::<f64>() {
                    for sb in bob_settings::<f64>() {
                        let dist = joint_distribution(&rho, &sa, &sb).unwrap();
                        let dot = sa.direction().dot(sb.direction());
                        let mut sum = 0.0;
                        for (o, p) in dist.iter() {
                            let want = closed_form_prob(alpha, two_s, dot, o.a, o.two_m);
                            assert_abs_diff_eq!(p, want, epsilon = 1e-12);
                            assert!(p >= -1e-12);
                            sum += p;
                        }
                        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn marginals_are_uniform() {
        let rho = werner_equivalent(0.73, 6).unwrap();
        let sa = Setting::alice(SettingLabel::X).unwrap();
        let sb = Setting::bob(SettingLabel::X).unwrap();
        let dist = joint_distribution(&rho, &sa, &sb).unwrap();
        for a in [-1i8, 1] {
            let pa: f64 = (-3..=3)
                .map(|m| dist.prob(a, 2 * m).unwrap())
                .sum();
            assert_abs_diff_eq!(pa, 0.5, epsilon = 1e-12);
        }
        for m in -3..=3 {
            let pm: f64 = [-1i8, 1].iter().map(|&a| dist.prob(a, 2 * m).unwrap()).sum();
            assert_abs_diff_eq!(pm, 1.0 / 7.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn conditional_anticorrelation_at_matched_settings() {
        for alpha in [0.3, 0.73, 1.0] {
            let rho = werner_equivalent(alpha, 6).unwrap();
            let sa = Setting::alice(SettingLabel::Xz).unwrap();
            let sb = Setting::bob(SettingLabel::Xz).unwrap();
            let dist = joint_distribution(&rho, &sa, &sb).unwrap();
            // P(a = −sign(m) | |m| = S)
            let num = dist.prob(-1, 6).unwrap() + dist.prob(1, -6).unwrap();
            let den: f64 = [-1i8, 1]
                .iter()
                .flat_map(|&a| [dist.prob(a, 6).unwrap(), dist.prob(a, -6).unwrap()])
                .sum();
            assert_abs_diff_eq!(num / den, (1.0 + alpha) / 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sample_round_point_mass_and_determinism() {
        let mut probs = vec![0.0; 14];
        probs[5] = 1.0;
        let dist = JointDistribution::from_probs(6, probs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let o = sample_round(&dist, &mut rng).unwrap();
            assert_eq!(o, dist.outcome_at(5));
        }

        let rho = werner_equivalent(0.73, 6).unwrap();
        let sa = Setting::alice(SettingLabel::X).unwrap();
        let sb = Setting::bob(SettingLabel::X).unwrap();
        let dist = joint_distribution(&rho, &sa, &sb).unwrap();
        let draw = |seed: u64| -> Vec<RoundOutcome> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_round(&dist, &mut rng).unwrap()).collect()
        };
        assert_eq!(draw(99), draw(99));
        assert_ne!(draw(99), draw(100));
    }

    #[test]
    fn sample_round_uniform_frequencies() {
        let dist = JointDistribution::from_probs(6, vec![1.0 / 14.0; 14]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 100_000usize;
        let mut counts = vec![0usize; 14];
        for _ in 0..n {
            let o = sample_round(&dist, &mut rng).unwrap();
            let idx = (if o.a < 0 { 0 } else { 7 }) + ((o.two_m + 6) / 2) as usize;
            counts[idx] += 1;
        }
        let p = 1.0 / 14.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn sample_round_rejects_malformed_table() {
        let dist = JointDistribution::from_probs(6, vec![0.1; 14]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_round(&dist, &mut rng),
            Err(Error::MalformedDistribution(_))
        ));
    }
}
