//! Spectral fixed-point machinery for periodic incompressible flow.
//!
//! Fields are truncated Fourier series on a torus. The crate provides the
//! decay-class algebra, the heat and Poisson solution operators, the Picard
//! map `r -> -u . grad u` and the smallness conditions that gate it.

// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classes;
pub mod constants;
pub mod error;
pub mod picard;
pub mod propagators;
pub mod sampling;
pub mod scenario;
pub mod serde_float;
pub mod spectral;

pub use classes::{ClassParams, GParams, HParams, JParams, KParams, Membership};
pub use constants::{DataConstants, GaussianExpansion, GridSpec, Theorem41Constants, WholeSpacePhysics};
pub use error::{Error, Result};
pub use picard::{FixedPointReport, IterationRecord, IterationState, ProblemKind, TorusProblem, Verdict};
pub use propagators::{AnchoredScalar, PhysicsParams};
pub use scenario::{RunReport, ScenarioConfig};
pub use spectral::{FourierField, Mode, ModeBox, TimeGrid, TorusGeometry, VectorField};
