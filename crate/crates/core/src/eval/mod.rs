//! Model comparison, identifiability exports and relabeling.

pub mod criteria;
pub mod density;
pub mod lcid;
pub mod relabel;

pub use criteria::{
    bic_value, dic3_from, effective_sample_size, evaluate, log_cpo, lpml_from, save_comparison_csv, write_comparison_csv,
    ComparisonRow, CriteriaOpts,
};
pub use density::{
    draw_subset, log_density_matrix, marginal_log_density, prepared_for, DensityContext, Integration, MarginalDensityOpts,
};
pub use lcid::{lcid_rows, save_lcid_csv, write_lcid_csv, LcidRow};
pub use relabel::{permutations, permute_draw, relabel, Relabeled, MAX_RELABEL_CLASSES};
