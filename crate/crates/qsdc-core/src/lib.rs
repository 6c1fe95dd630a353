//! Simulation and analysis library for a quantum-secure-direct-communication
//! protocol built on SU(2)-invariant separable polarisation-OAM states.
//!
//! The library is organised around six subsystems:
//!
//! * [`su2`] — arbitrary-spin SU(2) generators, rotation operators, and
//!   coherent states;
//! * [`states`] — density-matrix algebra: Werner states and their
//!   2×(2S+1) equivalents, tensor products, partial trace/transpose, PPT;
//! * [`equivalence`] — Husimi Q-representations over sphere grids and
//!   cross-dimension state-equivalence certification;
//! * [`measurement`] — projective measurements, exact joint Born-rule
//!   distributions, and seeded outcome sampling;
//! * [`chsh`] — the 2×(2S+1) equivalent of the CHSH statistic: exact
//!   evaluation, finite-sample estimation, and the security decision;
//! * [`protocol`] — the full QSDC session as a deterministic, seeded
//!   state machine.
//!
//! All core math is generic over the real scalar type through the [`Real`]
//! trait; `f64` is the intended production scalar and concrete aliases for
//! it live at the crate root.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub mod chsh;
pub mod equivalence;
mod error;
pub mod measurement;
pub mod protocol;
pub mod states;
pub mod su2;

pub use error::Error;

/// Real scalar the library is generic over. Blanket-implemented for any
/// nalgebra real field that is `Copy` and convertible from/to primitives,
/// which covers `f32` and `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {}

impl<T: RealField + Copy + FromPrimitive + ToPrimitive> Real for T {}

/// Converts an `f64` constant (tolerances, π multiples) into the working scalar.
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant must be representable in the scalar type")
}

/// Modulus of a complex number over the generic scalar.
pub(crate) fn cmod<T: Real>(z: nalgebra::Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

pub type Result<A> = std::result::Result<A, Error>;

// Concrete f64 aliases for the common entry points.
pub type SpinRep64 = su2::SpinRep<f64>;
pub type Direction64 = su2::Direction<f64>;
pub type DensityMatrix64 = states::DensityMatrix<f64>;
pub type SphereGrid64 = equivalence::SphereGrid<f64>;
pub type ChshEstimate64 = chsh::ChshEstimate<f64>;
pub type SessionConfig64 = protocol::SessionConfig<f64>;
pub type SessionTranscript64 = protocol::SessionTranscript<f64>;
