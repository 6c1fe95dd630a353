//! Husimi Q-representations over coherent-state grids and cross-dimension
//! state-equivalence certification.
//!
//! Two states in Hilbert spaces of different dimensions are equivalent when
//! they share the same Q-representation; here that is certified numerically
//! by the max-abs difference of the two bipartite Q functions over a
//! deterministic product grid of sphere directions.

use nalgebra::{Complex, DVector};
use num_traits::Zero;

use crate::states::DensityMatrix;
use crate::su2::{Direction, SpinRep};
use crate::{real, Error, Real, Result};

/// A deterministic set of directions on the sphere, with optional
/// quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid<T: Real> {
    nodes: Vec<Direction<T>>,
    weights: Option<Vec<T>>,
}

impl<T: Real> SphereGrid<T> {
    pub fn nodes(&self) -> &[Direction<T>] {
        &self.nodes
    }

    /// Quadrature weight of node `i`; defaults to the equal-area weight
    /// `4π/N` when no explicit weights are attached.
    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Some(w) => w[i],
            None => real::<T>(4.0 * std::f64::consts::PI) / real::<T>(self.nodes.len() as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// One sampled value of a bipartite Q function over the product sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSample<T: Real> {
    pub n_a: Direction<T>,
    pub n_b: Direction<T>,
    pub value: T,
}

/// Builds a deterministic Fibonacci-spiral grid of `count >= 4` directions.
/// Repeated calls with the same count produce identical nodes.
pub fn sphere_grid<T: Real>(count: usize) -> Result<SphereGrid<T>> {
    if count < 4 {
        return Err(Error::InvalidParameter(format!(
            "sphere grid needs at least 4 nodes, got {count}"
        )));
    }
    let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let nodes = (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let theta = real::<T>(z.acos());
            let phi = real::<T>((i as f64 * golden_angle).rem_euclid(std::f64::consts::TAU));
            Direction::from_angles(theta, phi)
        })
        .collect();
    Ok(SphereGrid {
        nodes,
        weights: None,
    })
}

/// Q-representation of a single-system state: `(2S+1)/(4π) · ⟨n̂|ρ|n̂⟩`.
pub fn q_single<T: Real>(rho: &DensityMatrix<T>, rep: &SpinRep<T>, n: &Direction<T>) -> Result<T> {
    if rho.dim() != rep.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} does not match representation dimension {}",
            rho.dim(),
            rep.dim()
        )));
    }
    let psi = rep.coherent_state(n);
    let val = psi.dotc(&(rho.data() * &psi)).re;
    Ok(val * real::<T>(rep.dim() as f64 / (4.0 * std::f64::consts::PI)))
}

/// Bipartite Q-representation with product coherent states:
/// `(2/4π)·(dimB/4π)·⟨n̂A n̂B|ρ|n̂A n̂B⟩`.
pub fn q_bipartite<T: Real>(
    rho: &DensityMatrix<T>,
    rep_a: &SpinRep<T>,
    rep_b: &SpinRep<T>,
    n_a: &Direction<T>,
    n_b: &Direction<T>,
) -> Result<T> {
    if rho.dims() != [rep_a.dim(), rep_b.dim()] || rep_a.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} do not match representations ({}, {}) with a qubit A side",
            rho.dims(),
            rep_a.dim(),
            rep_b.dim()
        )));
    }
    let psi_a = rep_a.coherent_state(n_a);
    let psi_b = rep_b.coherent_state(n_b);
    let r = contract_b_side(rho, &psi_b);
    let val = quadratic_form_2(&r, &psi_a);
    Ok(val * bipartite_prefactor::<T>(rep_b.dim()))
}

fn bipartite_prefactor<T: Real>(dim_b: usize) -> T {
    let four_pi = 4.0 * std::f64::consts::PI;
    real::<T>(2.0 * dim_b as f64 / (four_pi * four_pi))
}

/// Contracts the B indices of a 2×dB state against a B-side coherent state,
/// leaving the 2×2 matrix `R_{ik} = Σ_{jl} ψB_j* ρ_{(ij)(kl)} ψB_l`.
fn contract_b_side<T: Real>(
    rho: &DensityMatrix<T>,
    psi_b: &DVector<Complex<T>>,
) -> [[Complex<T>; 2]; 2] {
    let db = psi_b.len();
    let data = rho.data();
    let mut r = [[Complex::<T>::zero(); 2]; 2];
    for (i, row) in r.iter_mut().enumerate() {
        for (k, entry) in row.iter_mut().enumerate() {
            let mut acc = Complex::<T>::zero();
            for j in 0..db {
                let bj = psi_b[j].conj();
                for l in 0..db {
                    acc += bj * data[(i * db + j, k * db + l)] * psi_b[l];
                }
            }
            *entry = acc;
        }
    }
    r
}

fn quadratic_form_2<T: Real>(r: &[[Complex<T>; 2]; 2], psi: &DVector<Complex<T>>) -> T {
    let mut acc = Complex::<T>::zero();
    for i in 0..2 {
        for k in 0..2 {
            acc += psi[i].conj() * r[i][k] * psi[k];
        }
    }
    acc.re
}

/// Evaluates the bipartite Q function of a 2×dB state on every `(nA, nB)`
/// pair of a grid, returning values indexed `[ia][ib]`.
pub fn q_bipartite_grid<T: Real>(rho: &DensityMatrix<T>, grid: &SphereGrid<T>) -> Result<Vec<Vec<T>>> {
    let db = match rho.dims() {
        [2, db] => *db,
        dims => {
            return Err(Error::DimensionMismatch(format!(
                "bipartite Q needs a 2×N state, got dims {dims:?}"
            )))
        }
    };
    let rep_a = SpinRep::<T>::new(1)?;
    let rep_b = SpinRep::<T>::new(db as u32 - 1)?;
    let prefactor = bipartite_prefactor::<T>(db);

    let states_a: Vec<_> = grid.nodes().iter().map(|n| rep_a.coherent_state(n)).collect();
    let states_b: Vec<_> = grid.nodes().iter().map(|n| rep_b.coherent_state(n)).collect();

    let mut values = vec![vec![T::zero(); grid.len()]; grid.len()];
    for (ib, psi_b) in states_b.iter().enumerate() {
        let r = contract_b_side(rho, psi_b);
        for (ia, psi_a) in states_a.iter().enumerate() {
            values[ia][ib] = quadratic_form_2(&r, psi_a) * prefactor;
        }
    }
    Ok(values)
}

/// Max-abs difference of the bipartite Q functions of a 2×2 state and a
/// 2×N candidate equivalent over all grid×grid direction pairs. Zero (to
/// tolerance) certifies equivalence on the grid.
pub fn equivalence_distance<T: Real>(
    rho_small: &DensityMatrix<T>,
    rho_large: &DensityMatrix<T>,
    grid: &SphereGrid<T>,
) -> Result<T> {
    if rho_small.dims() != [2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "rho_small must be a 2×2-subsystem state, got dims {:?}",
            rho_small.dims()
        )));
    }
    let q_small = q_bipartite_grid(rho_small, grid)?;
    let q_large = q_bipartite_grid(rho_large, grid)?;
    let mut max = T::zero();
    for (row_s, row_l) in q_small.iter().zip(&q_large) {
        for (s, l) in row_s.iter().zip(row_l) {
            let d = (*s - *l).abs();
            if d > max {
                max = d;
            }
        }
    }
    Ok(max)
}
