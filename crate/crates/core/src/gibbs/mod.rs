//! Blocked Gibbs sampler for the shared-parameter growth mixture model.

pub mod conditional;
pub mod draws;
pub mod fit;
pub mod init;
pub mod options;
pub mod params;
pub mod prepared;
pub mod psrf;
pub mod sampler;
pub mod state;
pub mod summary;

pub use conditional::conditional_coefficients;
pub use draws::{Draw, DrawsMeta, Latents, PosteriorDraws};
pub use fit::{fit, fit_prepared, layout_of, run_chain};
pub use init::initial_state;
pub use options::McmcOptions;
pub use params::{GlobalParams, Layout, ResponseParams, VisitParams};
pub use prepared::{method_view, Cell, FitFrame, Prepared, PreparedPatient};
pub use psrf::psrf;
pub use sampler::{conditional_normal, log_class_prior, probit_latent, ClassCache, Sampler};
pub use state::{class_from_utilities, ParameterState};
pub use summary::{describe, quantile_sorted, save_summary_csv, summarize, write_summary_csv, ParamSummary};
