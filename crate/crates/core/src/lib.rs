// Negated float comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod error;
pub mod estimator;
pub mod iqae;
pub mod linalg;
pub mod model;
pub mod perturb;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
