//! Two-mode bosonic Fock-space toolkit built around the partial-transpose
//! duality between beam splitters and parametric amplifiers.
//!
//! The crate simulates both families of two-mode Gaussian unitaries on a
//! truncated Fock window, exposes closed-form matrix elements alongside a
//! dense matrix-exponential oracle, and layers interference predictions,
//! retrodictive inference and a Monte Carlo photon-counting experiment on
//! top. Everything except the experiment simulator is generic over the
//! floating-point scalar through [`Scalar`]; the aliases below pin `f64`.

pub mod duality;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gaussian;
pub mod interference;
pub mod linalg;
pub mod retrodiction;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Two-mode state with `f64` amplitudes.
pub type State64 = fock::TwoModeState<f64>;
/// Two-mode state with `f32` amplitudes.
pub type State32 = fock::TwoModeState<f32>;
/// Dense two-mode operator with `f64` amplitudes.
pub type Operator64 = fock::FockOperator<f64>;
/// Gaussian coupler parameterized by `f64`.
pub type Coupler64 = gaussian::Coupler<f64>;
