//! Arbitrary-spin SU(2) representations: generator matrices built from
//! ladder operators, rotation operators, coherent states, and spin
//! components along a direction.
//!
//! Basis convention: index 0 is the highest weight `m = S`, descending to
//! `m = -S` at index `2S`. Half-integer spins are carried as the integer
//! `2S`, so quantum numbers are stored doubled (`two_m = 2m`) where exact
//! bookkeeping matters.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, Vector3};
use num_traits::Zero;

use crate::{real, Error, Real, Result};

/// Folds `x` into `[0, m)`.
fn wrap_to<T: Real>(x: T, m: T) -> T {
    let r = x - (x / m).floor() * m;
    if r < T::zero() {
        r + m
    } else {
        r
    }
}

/// A unit vector on the sphere, stored as polar angles with a derived
/// Cartesian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction<T: Real> {
    theta: T,
    phi: T,
    cartesian: Vector3<T>,
}

impl<T: Real> Direction<T> {
    /// Builds a direction from polar angles. `theta` is folded into `[0, π]`
    /// and `phi` into `[0, 2π)`.
    pub fn from_angles(theta: T, phi: T) -> Self {
        let pi = T::pi();
        let two_pi = T::two_pi();
        // Fold theta into [0, 2π), then mirror into [0, π] (adjusting phi).
        let mut th = wrap_to(theta, two_pi);
        let mut ph = phi;
        if th > pi {
            th = two_pi - th;
            ph += pi;
        }
        ph = wrap_to(ph, two_pi);
        let (st, ct) = (th.sin(), th.cos());
        let (sp, cp) = (ph.sin(), ph.cos());
        Self {
            theta: th,
            phi: ph,
            cartesian: Vector3::new(st * cp, st * sp, ct),
        }
    }

    /// Builds a direction from a Cartesian vector, which need not be
    /// normalized. Returns an error on the zero vector.
    pub fn from_cartesian(v: Vector3<T>) -> Result<Self> {
        let n = v.norm();
        if n <= T::zero() {
            return Err(Error::InvalidParameter(
                "direction vector must be nonzero".into(),
            ));
        }
        let u = v / n;
        let mut cz = u.z;
        if cz > T::one() {
            cz = T::one();
        } else if cz < -T::one() {
            cz = -T::one();
        }
        let theta = cz.acos();
        let phi = wrap_to(u.y.atan2(u.x), T::two_pi());
        Ok(Self {
            theta,
            phi,
            cartesian: u,
        })
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn cartesian(&self) -> Vector3<T> {
        self.cartesian
    }

    pub fn dot(&self, other: &Self) -> T {
        self.cartesian.dot(&other.cartesian)
    }

    /// +x axis.
    pub fn x_axis() -> Self {
        Self::from_angles(T::frac_pi_2(), T::zero())
    }

    /// +z axis.
    pub fn z_axis() -> Self {
        Self::from_angles(T::zero(), T::zero())
    }

    /// (x̂ + ẑ)/√2.
    pub fn xz_diagonal() -> Self {
        Self::from_angles(T::frac_pi_4(), T::zero())
    }

    /// (x̂ − ẑ)/√2.
    pub fn x_minus_z_diagonal() -> Self {
        Self::from_angles(T::frac_pi_2() + T::frac_pi_4(), T::zero())
    }
}

/// A (2S+1)-dimensional irreducible SU(2) representation: the three
/// generator matrices plus spin metadata (dimensionless units, ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinRep<T: Real> {
    two_s: u32,
    dim: usize,
    s1: DMatrix<Complex<T>>,
    s2: DMatrix<Complex<T>>,
    s3: DMatrix<Complex<T>>,
}

impl<T: Real> SpinRep<T> {
    /// Builds the generators of the spin-`two_s/2` representation from the
    /// ladder matrices `⟨m±1|S±|m⟩ = √(S(S+1) − m(m±1))`.
    ///
    /// `two_s = 0` is rejected: the trivial representation cannot serve as a
    /// party system.
    pub fn new(two_s: u32) -> Result<Self> {
        if two_s == 0 {
            return Err(Error::InvalidParameter(
                "two_s must be >= 1 (S >= 1/2); the trivial representation is unusable".into(),
            ));
        }
        let dim = two_s as usize + 1;
        let s = real::<T>(two_s as f64 / 2.0);
        let casimir = s * (s + T::one());

        let m_of = |k: usize| s - real::<T>(k as f64); // index 0 ↔ m = S
        let mut s_plus = DMatrix::<Complex<T>>::zeros(dim, dim);
        for k in 1..dim {
            // S+ |m⟩ = √(S(S+1) − m(m+1)) |m+1⟩, i.e. column k feeds row k−1.
            let m = m_of(k);
            let c = (casimir - m * (m + T::one())).sqrt();
            s_plus[(k - 1, k)] = Complex::new(c, T::zero());
        }
        let s_minus = s_plus.adjoint();

        let half = Complex::new(real::<T>(0.5), T::zero());
        let neg_half_i = Complex::new(T::zero(), real::<T>(-0.5));
        let s1 = (&s_plus + &s_minus) * half;
        let s2 = (&s_plus - &s_minus) * neg_half_i;
        let s3 = DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex::new(m_of(r), T::zero())
            } else {
                Complex::zero()
            }
        });

        Ok(Self {
            two_s,
            dim,
            s1,
            s2,
            s3,
        })
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The spin quantum number S as a scalar.
    pub fn spin(&self) -> T {
        real::<T>(self.two_s as f64 / 2.0)
    }

    pub fn s1(&self) -> &DMatrix<Complex<T>> {
        &self.s1
    }

    pub fn s2(&self) -> &DMatrix<Complex<T>> {
        &self.s2
    }

    pub fn s3(&self) -> &DMatrix<Complex<T>> {
        &self.s3
    }

    /// The doubled quantum number `2m` for basis index `k` (index 0 ↔ m = S).
    pub fn two_m_at(&self, k: usize) -> i32 {
        self.two_s as i32 - 2 * k as i32
    }

    /// Basis index for a doubled quantum number.
    pub fn index_of_two_m(&self, two_m: i32) -> Option<usize> {
        let k = (self.two_s as i32 - two_m) / 2;
        if (self.two_s as i32 - two_m) % 2 == 0 && k >= 0 && (k as usize) < self.dim {
            Some(k as usize)
        } else {
            None
        }
    }

    /// The rotation operator `U(θ, φ) = exp(−i S3 φ) · exp(−i S2 θ)`.
    ///
    /// Exponentials are taken by eigendecomposition of the Hermitian
    /// generators, so `U` is unitary to rounding.
    pub fn rotation_operator(&self, theta: T, phi: T) -> DMatrix<Complex<T>> {
        // S3 is diagonal; its exponential is a phase per basis state.
        let exp_s3 = DMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r == c {
                let m = self.s3[(r, r)].re;
                phase_neg_i(m * phi)
            } else {
                Complex::zero()
            }
        });
        exp_s3 * hermitian_exp_neg_i(&self.s2, theta)
    }

    /// The SU(2) coherent state `|n̂⟩ = U(θ, φ) |m = S⟩` (unit norm).
    pub fn coherent_state(&self, n: &Direction<T>) -> DVector<Complex<T>> {
        self.rotation_operator(n.theta(), n.phi()).column(0).into()
    }

    /// The spin component `n̂ · (S1, S2, S3)` along a direction; when
    /// `normalized`, divides by S so the spectrum lies in `[-1, 1]`.
    pub fn spin_along(&self, n: &Direction<T>, normalized: bool) -> DMatrix<Complex<T>> {
        let v = n.cartesian();
        let mut obs = &self.s1 * Complex::new(v.x, T::zero())
            + &self.s2 * Complex::new(v.y, T::zero())
            + &self.s3 * Complex::new(v.z, T::zero());
        if normalized {
            obs /= Complex::new(self.spin(), T::zero());
        }
        obs
    }
}

/// `exp(−i λ)` as a unit complex number.
fn phase_neg_i<T: Real>(lambda: T) -> Complex<T> {
    Complex::new(lambda.cos(), -lambda.sin())
}

/// `exp(−i t H)` for Hermitian `H`, via eigendecomposition.
pub fn hermitian_exp_neg_i<T: Real>(h: &DMatrix<Complex<T>>, t: T) -> DMatrix<Complex<T>> {
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let phases = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            phase_neg_i(eig.eigenvalues[r] * t)
        } else {
            Complex::zero()
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &DMatrix<Complex<f64>>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn commutator(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
        a * b - b * a
    }

    fn random_direction(rng: &mut impl Rng) -> Direction<f64> {
        let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
        let phi = rng.gen::<f64>() * std::f64::consts::TAU;
        Direction::from_angles(theta, phi)
    }

    #[test]
    fn rejects_trivial_representation() {
        assert!(SpinRep::<f64>::new(0).is_err());
    }

    #[test]
    fn spin_half_is_half_pauli() {
        let rep = SpinRep::<f64>::new(1).unwrap();
        assert_abs_diff_eq!(rep.s1()[(0, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.s1()[(1, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.s3()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.s3()[(1, 1)].re, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn spin_one_ladder_entries() {
        let rep = SpinRep::<f64>::new(2).unwrap();
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        for (r, c) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_abs_diff_eq!(rep.s1()[(r, c)].re, inv_sqrt2, epsilon = 1e-14);
        }
    }

    #[test]
    fn generator_algebra_holds_up_to_two_s_8() {
        for two_s in 1..=8u32 {
            let rep = SpinRep::<f64>::new(two_s).unwrap();
            let i = Complex::new(0.0, 1.0);
            let pairs = [
                (rep.s1(), rep.s2(), rep.s3()),
                (rep.s2(), rep.s3(), rep.s1()),
                (rep.s3(), rep.s1(), rep.s2()),
            ];
            for (a, b, c) in pairs {
                assert!(max_abs(&(commutator(a, b) - c * i)) < 1e-12, "two_s={two_s}");
            }
            let s = two_s as f64 / 2.0;
            let casimir = rep.s1() * rep.s1() + rep.s2() * rep.s2() + rep.s3() * rep.s3();
            let expected = DMatrix::<Complex<f64>>::identity(rep.dim(), rep.dim())
                * Complex::new(s * (s + 1.0), 0.0);
            assert!(max_abs(&(casimir - expected)) < 1e-12, "two_s={two_s}");
            for g in [rep.s1(), rep.s2(), rep.s3()] {
                assert!(max_abs(&(g - g.adjoint())) < 1e-12);
                assert!(g.trace().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn casimir_spin_three_halves() {
        let rep = SpinRep::<f64>::new(3).unwrap();
        let casimir = rep.s1() * rep.s1() + rep.s2() * rep.s2() + rep.s3() * rep.s3();
        for k in 0..rep.dim() {
            assert_abs_diff_eq!(casimir[(k, k)].re, 3.75, epsilon = 1e-12);
        }
    }

    #[test]
    fn rotation_at_zero_is_identity() {
        let rep = SpinRep::<f64>::new(5).unwrap();
        let u = rep.rotation_operator(0.0, 0.0);
        let id = DMatrix::<Complex<f64>>::identity(rep.dim(), rep.dim());
        assert!(max_abs(&(u - id)) < 1e-12);
    }

    #[test]
    fn spin_half_pi_rotation_closed_form() {
        let rep = SpinRep::<f64>::new(1).unwrap();
        let u = rep.rotation_operator(std::f64::consts::PI, 0.0);
        // exp(−i σ2 π/2) = [[0, −1], [1, 0]]
        assert!(u[(0, 0)].norm() < 1e-12);
        assert_abs_diff_eq!(u[(0, 1)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[(1, 0)].re, 1.0, epsilon = 1e-12);
        assert!(u[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn rotation_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for two_s in [1u32, 2, 6, 8] {
            let rep = SpinRep::<f64>::new(two_s).unwrap();
            for _ in 0..10 {
                let theta = rng.gen::<f64>() * std::f64::consts::PI;
                let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                let u = rep.rotation_operator(theta, phi);
                let id = DMatrix::<Complex<f64>>::identity(rep.dim(), rep.dim());
                assert!(max_abs(&(&u * u.adjoint() - id)) < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_state_poles() {
        let rep = SpinRep::<f64>::new(6).unwrap();
        let north = rep.coherent_state(&Direction::z_axis());
        assert_abs_diff_eq!(north[0].norm(), 1.0, epsilon = 1e-12);

        for phi in [0.0, 1.3, 4.0] {
            let south = rep.coherent_state(&Direction::from_angles(std::f64::consts::PI, phi));
            // |−S⟩ up to a global phase
            assert_abs_diff_eq!(south[rep.dim() - 1].norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn spin_half_coherent_state_closed_form() {
        let rep = SpinRep::<f64>::new(1).unwrap();
        let (theta, phi) = (0.9, 2.4);
        let psi = rep.coherent_state(&Direction::from_angles(theta, phi));
        // (cos(θ/2), e^{iφ} sin(θ/2)) up to a global phase
        let reference = DVector::from_vec(vec![
            Complex::new((theta / 2.0).cos(), 0.0),
            Complex::from_polar((theta / 2.0).sin(), phi),
        ]);
        let overlap: Complex<f64> = reference.dotc(&psi);
        assert_abs_diff_eq!(overlap.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spin_along_axes() {
        let rep = SpinRep::<f64>::new(1).unwrap();
        let sz = rep.spin_along(&Direction::z_axis(), false);
        assert!(max_abs(&(sz - rep.s3())) < 1e-14);
        let sx = rep.spin_along(&Direction::x_axis(), false);
        let eig = SymmetricEigen::new(sx);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(vals[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn normalized_spin_spectrum_two_s_6() {
        let rep = SpinRep::<f64>::new(6).unwrap();
        let n = Direction::from_angles(1.1, 0.7);
        let obs = rep.spin_along(&n, true);
        let eig = SymmetricEigen::new(obs);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        let expected = [-1.0, -2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (v, e) in vals.iter().zip(expected) {
            assert_abs_diff_eq!(*v, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn coherent_state_spin_expectation_equals_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for two_s in 1..=8u32 {
            let rep = SpinRep::<f64>::new(two_s).unwrap();
            for _ in 0..100 {
                let n = random_direction(&mut rng);
                let psi = rep.coherent_state(&n);
                let s = two_s as f64 / 2.0;
                let expect = |g: &DMatrix<Complex<f64>>| psi.dotc(&(g * &psi)).re / s;
                let v = n.cartesian();
                assert_abs_diff_eq!(expect(rep.s1()), v.x, epsilon = 1e-10);
                assert_abs_diff_eq!(expect(rep.s2()), v.y, epsilon = 1e-10);
                assert_abs_diff_eq!(expect(rep.s3()), v.z, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn overcompleteness_resolution_of_identity() {
        // (dim/4π) ∫ |n̂⟩⟨n̂| dΩ = I, Fibonacci quadrature.
        // Equal-weight Fibonacci quadrature error falls off like N^{-3/2};
        // 50k nodes keeps the worst entry below 1e-6 up to two_s = 6.
        let grid = crate::equivalence::sphere_grid::<f64>(50_000).unwrap();
        for two_s in [1u32, 3, 6] {
            let rep = SpinRep::<f64>::new(two_s).unwrap();
            let mut acc = DMatrix::<Complex<f64>>::zeros(rep.dim(), rep.dim());
            for node in grid.nodes() {
                let psi = rep.coherent_state(node);
                acc += &psi * psi.adjoint();
            }
            acc *= Complex::new(rep.dim() as f64 / grid.nodes().len() as f64, 0.0);
            let id = DMatrix::<Complex<f64>>::identity(rep.dim(), rep.dim());
            assert!(
                max_abs(&(acc - id)) < 1e-6,
                "overcompleteness failed for two_s={two_s}"
            );
        }
    }

    #[test]
    fn direction_from_cartesian_round_trip() {
        let d = Direction::<f64>::from_cartesian(Vector3::new(0.3, -0.4, 0.5)).unwrap();
        assert_abs_diff_eq!(d.cartesian().norm(), 1.0, epsilon = 1e-12);
        let d2 = Direction::from_angles(d.theta(), d.phi());
        assert!((d.cartesian() - d2.cartesian()).norm() < 1e-12);
        assert!(Direction::<f64>::from_cartesian(Vector3::zeros()).is_err());
    }
}
