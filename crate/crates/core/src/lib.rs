//! Artificial-viscosity solver for radially symmetric isentropic gas dynamics
//! on truncated annuli, with a harness that measures the uniform estimates and
//! weak-formulation residuals of the computed solutions.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix `f64`.

pub mod entropy;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod scalar;
pub mod scheduler;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type GasLaw64 = model::GasLaw<f64>;
pub type RadialGrid64 = model::RadialGrid<f64>;
pub type RadialField64 = model::RadialField<f64>;
pub type ViscousParams64 = scheduler::ViscousParams<f64>;
pub type EntropyKernel64 = entropy::EntropyKernel<f64>;
