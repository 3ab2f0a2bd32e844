//! Experiment driver for the `rvr` solvers: dataset generation, oracles,
//! gradient checks, configured experiment runs, two-stage tuning sweeps
//! and plot data. The `rvr` binary is a thin command-line layer over this
//! crate.

pub mod config;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod instance;
pub mod oracle;
pub mod plot;
pub mod sweep;

pub use config::{Budget, ExperimentConfig, OptimizerSpec, OracleMode, ProblemSpec, SweepSpec};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, summarize, ExperimentReport, RunOutcome, RunStatus, SummaryRow, GAP_TARGETS};
pub use gradcheck::{check_gradients, GradCheckReport, GRADIENT_CHECK_TOL};
pub use instance::{generate, GenParams, Instance, ProblemKind};
pub use oracle::{oracle_lrmc, oracle_pca, oracle_rkm, OracleMethod, OracleResult, RichardsonOptions};
pub use plot::{emit_plot_data, read_trace_csv, PlotData};
pub use sweep::{grid_sweep, SweepOutcome, SweepPoint};
