//! Bayesian shared-parameter growth mixture models for multivariate
//! longitudinal outcomes with nonignorable visit and response missingness.

pub mod data;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod kernels;
pub mod ppc;
pub mod scalar;
pub mod simulator;
pub mod study;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SymMatrixF64 = kernels::SymMatrix<f64>;
pub type SymMatrixF32 = kernels::SymMatrix<f32>;
pub type RuleF64 = kernels::Rule<f64>;
