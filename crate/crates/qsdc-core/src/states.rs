//! Density-matrix algebra: the Werner family and its 2×(2S+1) equivalent,
//! tensor products, partial trace/transpose, and PPT checks.

use nalgebra::{Complex, DMatrix, SymmetricEigen};
use num_traits::Zero;

use crate::su2::SpinRep;
use crate::{real, Error, Real, Result};

/// Hermiticity / trace tolerance for state validation.
const HERMITICITY_TOL: f64 = 1e-12;
/// PSD floor for state validation; wide enough to admit boundary states
/// (eigenvalue 0 to rounding).
const PSD_TOL: f64 = 1e-8;
/// Asymmetry beyond which a matrix is rejected as non-Hermitian.
const HERMITIAN_REJECT_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive-semidefinite complex matrix with an
/// attached subsystem-dimension signature (one or two subsystems).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    dims: Vec<usize>,
    data: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates and wraps a candidate density matrix.
    pub fn new(dims: Vec<usize>, data: DMatrix<Complex<T>>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(Error::DimensionMismatch(format!(
                "dims must list 1 or 2 subsystems, got {}",
                dims.len()
            )));
        }
        let total: usize = dims.iter().product();
        if data.nrows() != total || data.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{} but subsystem dims {:?} require {}x{}",
                data.nrows(),
                data.ncols(),
                dims,
                total,
                total
            )));
        }
        let asym = hermitian_asymmetry(&data);
        if asym > real::<T>(HERMITICITY_TOL) {
            return Err(Error::NotHermitian {
                max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
            });
        }
        let trace_err = crate::cmod(data.trace() - Complex::new(T::one(), T::zero()));
        if trace_err > real::<T>(HERMITICITY_TOL) {
            return Err(Error::InvalidParameter(format!(
                "trace deviates from 1 by {:.3e}",
                trace_err.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let state = Self { dims, data };
        let lambda_min = state.min_data_eigenvalue();
        if lambda_min < -real::<T>(PSD_TOL) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not positive semidefinite (min eigenvalue {:.3e})",
                lambda_min.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(state)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    fn min_data_eigenvalue(&self) -> T {
        SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(T::one(), |a, b| if b < a { b } else { a })
    }
}

/// Valid mixing-parameter interval `[lo, 1]` for `werner_equivalent` at a
/// given `two_s` (equal to `[-1/3, 1]` at `two_s = 1`, the 2×2 case).
pub fn alpha_range(two_s: u32) -> (f64, f64) {
    let s = two_s as f64 / 2.0;
    (-s / (s + 1.0), 1.0)
}

fn check_alpha<T: Real>(alpha: T, two_s: u32) -> Result<()> {
    let (lo, hi) = alpha_range(two_s);
    let slack = real::<T>(1e-12);
    if alpha < real::<T>(lo) - slack || alpha > real::<T>(hi) + slack {
        return Err(Error::InvalidParameter(format!(
            "alpha = {} outside the valid range [{}, {}] for two_s = {}",
            alpha.to_f64().unwrap_or(f64::NAN),
            lo,
            hi,
            two_s
        )));
    }
    Ok(())
}

/// The Pauli matrices (twice the spin-1/2 generators).
pub fn pauli_matrices<T: Real>() -> [DMatrix<Complex<T>>; 3] {
    let rep = SpinRep::<T>::new(1).expect("spin-1/2 always constructible");
    let two = Complex::new(real::<T>(2.0), T::zero());
    [rep.s1() * two, rep.s2() * two, rep.s3() * two]
}

/// The two-qubit Werner state `(1 − α σ⃗A·σ⃗B)/4`, valid for `α ∈ [−1/3, 1]`.
pub fn werner_2x2<T: Real>(alpha: T) -> Result<DensityMatrix<T>> {
    check_alpha(alpha, 1)?;
    let pauli = pauli_matrices::<T>();
    let mut data = DMatrix::<Complex<T>>::identity(4, 4);
    let a = Complex::new(alpha, T::zero());
    for sigma in &pauli {
        data -= tensor(sigma, sigma) * a;
    }
    data /= Complex::new(real::<T>(4.0), T::zero());
    DensityMatrix::new(vec![2, 2], data)
}

/// The 2×(2S+1) equivalent Werner state `(1 − α σ⃗A·ŜB)/(2(2S+1))` with the
/// unit-normalized spin `Ŝ = S⃗/S`, valid for `α ∈ [−S/(S+1), 1]`.
pub fn werner_equivalent<T: Real>(alpha: T, two_s: u32) -> Result<DensityMatrix<T>> {
    let rep = SpinRep::<T>::new(two_s)?;
    check_alpha(alpha, two_s)?;
    let pauli = pauli_matrices::<T>();
    let dim_b = rep.dim();
    let total = 2 * dim_b;
    let inv_s = Complex::new(T::one() / rep.spin(), T::zero());
    let mut data = DMatrix::<Complex<T>>::identity(total, total);
    let a = Complex::new(alpha, T::zero());
    for (sigma, spin) in pauli.iter().zip([rep.s1(), rep.s2(), rep.s3()]) {
        data -= tensor(sigma, &(spin * inv_s)) * a;
    }
    data /= Complex::new(real::<T>(total as f64), T::zero());
    DensityMatrix::new(vec![2, dim_b], data)
}

/// Kronecker product with the A subsystem first (row-major ordering).
pub fn tensor<T: Real>(a: &DMatrix<Complex<T>>, b: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    a.kronecker(b)
}

/// Traces out the complement of subsystem `keep` (0 = A, 1 = B) of a
/// bipartite state.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: usize) -> Result<DensityMatrix<T>> {
    let [da, db] = bipartite_dims(rho)?;
    if keep > 1 {
        return Err(Error::DimensionMismatch(format!(
            "subsystem index must be 0 or 1, got {keep}"
        )));
    }
    let data = rho.data();
    let reduced = if keep == 0 {
        DMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| data[(i * db + j, k * db + j)]).sum()
        })
    } else {
        DMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| data[(i * db + j, i * db + l)]).sum()
        })
    };
    let dim = if keep == 0 { da } else { db };
    DensityMatrix::new(vec![dim], reduced)
}

/// Transposes subsystem `on` (0 = A, 1 = B) of a bipartite state; the result
/// is Hermitian but in general not positive.
pub fn partial_transpose<T: Real>(
    rho: &DensityMatrix<T>,
    on: usize,
) -> Result<DMatrix<Complex<T>>> {
    let [da, db] = bipartite_dims(rho)?;
    if on > 1 {
        return Err(Error::DimensionMismatch(format!(
            "subsystem index must be 0 or 1, got {on}"
        )));
    }
    let data = rho.data();
    let total = da * db;
    let pt = DMatrix::from_fn(total, total, |r, c| {
        let (i, j) = (r / db, r % db);
        let (k, l) = (c / db, c % db);
        if on == 0 {
            data[(k * db + j, i * db + l)]
        } else {
            data[(i * db + l, k * db + j)]
        }
    });
    Ok(pt)
}

fn bipartite_dims<T: Real>(rho: &DensityMatrix<T>) -> Result<[usize; 2]> {
    match rho.dims() {
        [da, db] => Ok([*da, *db]),
        dims => Err(Error::DimensionMismatch(format!(
            "operation needs a bipartite state, got dims {dims:?}"
        ))),
    }
}

/// Smallest eigenvalue of a Hermitian matrix; rejects inputs whose
/// asymmetry exceeds `1e-10`.
pub fn min_eigenvalue<T: Real>(h: &DMatrix<Complex<T>>) -> Result<T> {
    let asym = hermitian_asymmetry(h);
    if asym > real::<T>(HERMITIAN_REJECT_TOL) {
        return Err(Error::NotHermitian {
            max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
        });
    }
    let eig = SymmetricEigen::new(h.clone());
    Ok(eig
        .eigenvalues
        .iter()
        .copied()
        .fold(real::<T>(f64::MAX), |a, b| if b < a { b } else { a }))
}

/// `Re Tr(ρ O)` for a Hermitian observable of matching dimension.
pub fn expectation<T: Real>(rho: &DensityMatrix<T>, obs: &DMatrix<Complex<T>>) -> Result<T> {
    if obs.nrows() != rho.dim() || obs.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{} but state dimension is {}",
            obs.nrows(),
            obs.ncols(),
            rho.dim()
        )));
    }
    // Tr(ρO) = Σ_{ij} ρ_{ij} O_{ji}
    let mut tr = Complex::<T>::zero();
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            tr += rho.data()[(i, j)] * obs[(j, i)];
        }
    }
    Ok(tr.re)
}

fn hermitian_asymmetry<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let mut max = T::zero();
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = crate::cmod(m[(i, j)] - m[(j, i)].conj());
            if d > max {
                max = d;
            }
        }
    }
    max
}
