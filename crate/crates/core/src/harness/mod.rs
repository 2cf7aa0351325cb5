//! Experiment specs, the replication engine, CSV and SVG output, and the
//! command-line front end.

pub mod cli;
pub mod output;
pub mod plot;
pub mod run;
pub mod seed;
pub mod spec;

pub use cli::cli_main;
pub use output::{read_summary_csv, read_transcript_csv, write_summary_csv};
pub use run::{run_experiment, ResultRow};
pub use spec::{parse_spec, ExperimentSpec, ModelKind, GRAMMAR};
