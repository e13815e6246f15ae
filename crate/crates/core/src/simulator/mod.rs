//! Synthetic data under the shared-parameter generative model.

pub mod generate;
pub mod marginal;
pub mod scenario;
pub mod truth;

pub use generate::{missingness_rates, simulate_dataset, simulate_with_truth, standardized_times, MissingnessRates};
pub use marginal::{marginal_class_probabilities, marginal_truth, weighted_effect, MarginalEffects};
pub use scenario::{scenario_by_name, scenario_config, GenerativeConfig, Scenario};
pub use truth::TruthBlock;
