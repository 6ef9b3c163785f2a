//! Non-reciprocal transmission through a waveguide side-coupled to a
//! whispering-gallery resonator that hosts a helicity-selective V-type
//! emitter.
//!
//! * [`model`] — linearised equations of motion, steady state, spectra.
//! * [`analytic`] — closed forms for the ideal device and the polariton
//!   eigenvalues.
//! * [`helicity`] — local helicity of resonator mode profiles.
//! * [`oracle`] — truncated-Fock master-equation reference.
//! * [`optimize`] — contrast maximisation and parameter sweeps.

// `!(x > y)` rejects NaN along with the failing comparison
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod format;
pub mod helicity;
pub mod linalg;
pub mod minimize;
pub mod model;
pub mod optimize;
pub mod oracle;

use thiserror::Error;

pub use analytic::{AnalyticError, IsolationConditions, IsolationPoint};
pub use helicity::{FieldGrid, FieldPoint, HelicityError, HelicityMap, ModeLabel};
pub use model::{Direction, DriveSpec, ModelError, Response, SpectrumResult, SystemParams};
pub use optimize::{ContourData, OptimizationResult, OptimizeError};
pub use oracle::{OracleError, SteadyDensityMatrix, TruncationSpec};

/// Any error raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Helicity(#[from] HelicityError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}
