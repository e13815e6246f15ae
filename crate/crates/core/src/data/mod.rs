//! Panel data, model specification, designs and CSV I/O.

pub mod design;
pub mod io;
pub mod naive;
pub mod panel;
pub mod spec;

pub use design::{build_designs, build_designs_with, time_standardization, DesignSet, PatientDesign, Rows};
pub use io::{load_panel_csv, read_panel, save_panel_csv, write_panel};
pub use naive::{naive_filter, NaiveReport};
pub use panel::{PanelData, Patient, Window};
pub use spec::{Config, Dims, Method, ModelSpec, PriorCov, Priors, ResolvedPriors};
