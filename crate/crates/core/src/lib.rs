//! State-vector simulation of a two-register quantum discrete logarithm
//! algorithm that consumes a reusable "chi" state
//! `|chi> = m^{-1/2} sum_r zeta_m^r |g^r>`, together with the zero-error
//! procedure that prepares that state.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the tolerances in the test
//! suites assume.

pub mod chi;
pub mod dlog;
pub mod error;
pub mod group;
pub mod options;
pub mod qstate;
pub mod scalar;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use group::{cyclic_group_of_order, primitive_root, validate_group, Exponent, GroupElement, GroupSpec};
pub use options::{SimOptions, VerifyLevel};
pub use scalar::{Real, CORRUPTION_TOLERANCE, TOLERANCE};
pub use transforms::{Direction, FourierPath};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Amplitude = num_complex::Complex<f64>;
pub type State = qstate::QState<f64>;
pub type Chi = chi::ChiHandle<f64>;
pub type Unitary = qstate::DenseMatrix<f64>;
pub type Fourier = transforms::FourierSpec<f64>;
pub type Outcome = qstate::MeasurementOutcome<f64>;

pub type StateF32 = qstate::QState<f32>;
pub type ChiF32 = chi::ChiHandle<f32>;
