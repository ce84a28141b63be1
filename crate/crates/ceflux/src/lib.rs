//! Continuity equations with singular flux on desk-scale discretizations.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augmented;
pub mod cli;
pub mod curves;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod lp;
pub mod measure;
pub mod minimal_flux;
pub mod norm;
pub mod quad;
pub mod suite;
pub mod superposition;
pub mod wasserstein;
pub mod weak_form;

pub use error::{Error, Result};
pub use norm::NormSpec;
