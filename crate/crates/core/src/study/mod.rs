//! Simulation studies: repeated generate-fit-score cycles and their tables.

pub mod align;
pub mod metrics;
pub mod report;
pub mod run;

pub use align::{align_labels, misclassification};
pub use metrics::{class_coefficient, five_numbers, marginal_effects, marginal_effects_of, metric, Estimate, Metric};
pub use report::{
    read_metrics_csv, read_misclassification_csv, write_metrics_csv, MetricRow, MisclassRow, StudyReport, METRICS_HEADER,
    MISCLASS_HEADER,
};
pub use run::{run_study, score_fit, FailedFit, FitScore, StudyConfig, FAILED_FIT_BUDGET, THREADS_ENV};
