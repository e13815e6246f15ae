//! Posterior predictive checks on completed data.

pub mod discrepancy;
pub mod run;

pub use discrepancy::{discrepancy, residual_discrepancy};
pub use run::{
    completed_dataset, load_ppc_csv, p_value, read_ppc_csv, replicate, run_ppc, save_histogram_csv, save_ppc_csv,
    write_histogram_csv, write_ppc_csv, CompletedDataset, HistRow, PpcOpts, PpcPair, PpcResult, Provenance, Source,
};
