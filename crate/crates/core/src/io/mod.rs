//! JSON configuration, CSV diagnostics and raw float64 snapshots.
//!
//! Snapshots hold nodal values in C order (last axis fastest) at the cell
//! midpoints `x_j = L (j + 1/2) / N`.

mod config;
mod output;

pub use config::{
    load_config, save_config, GridConfig, OutputConfig, PotentialConfig, ProliferationConfig,
    RunConfig, SchemeSection, VerifyConfig,
};
pub use output::{
    diagnostics_csv, ensure_dir, read_f64_file, simulate, write_json, write_outputs, write_text,
    DiagnosticRow, Recorder, RunOutput, RunSummary, Snapshot, DIAGNOSTICS_FILE, DIAGNOSTICS_HEADER,
    SNAPSHOT_DIR, SUMMARY_FILE,
};
