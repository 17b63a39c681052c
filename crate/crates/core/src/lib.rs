//! Reduced basis methods for affinely parametrised elliptic problems.
//!
//! The crate builds a spectral-collocation truth model ([`truth`]), a
//! hierarchical reduced basis with a weak greedy driver ([`rbm`]), three
//! interchangeable greedy objectives ([`estimators`]) and a file-emitting
//! experiment harness ([`harness`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod numerics;
pub mod rbm;
pub mod truth;

pub use error::{RbError, Result};
pub use estimators::{Estimator, EstimatorKind, EstimatorState};
pub use numerics::GramSpec;
pub use rbm::{greedy, GreedyConfig, ReducedBasis, ReducedModel};
pub use truth::{AffineOperator, ParamPoint, ProblemKind, ProblemSpec, TruthDiscretization};
