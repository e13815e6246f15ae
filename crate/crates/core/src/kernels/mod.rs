//! Random streams, linear algebra and sampling primitives.

pub mod linalg;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod truncnorm;

pub use linalg::{Factored, SymMatrix};
pub use normal::{ln_std_normal_cdf, log_sum_exp, normal_ln_pdf, std_normal_cdf, std_normal_inv_cdf, std_normal_pdf};
pub use quadrature::{gauss_hermite, gauss_legendre, probit_class_probabilities, CLASS_PROB_NODES, Rule};
pub use rng::RngStream;
pub use sampling::{
    normalize_log_weights, sample_categorical, sample_inverse_wishart, sample_mvn, sample_mvn_precision, std_normal,
};
pub use truncnorm::{sample_truncated_normal, sample_unit_half_line};
