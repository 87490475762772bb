//! Simulation harness: environments, runs, regret traces and sweeps.

mod config;
mod environment;
mod numfmt;
mod run;
mod sweep;

pub use config::{
    parse_list, read_matrix, EnvironmentSpec, KeyValues, MatrixChoice, RunConfig, DEFAULT_BETA,
    DEFAULT_POSTERIOR_FLOOR,
};
pub use environment::{
    random_injective_environment, random_injective_matrix, random_signals, EnvRound, Environment,
    SealedOracle, MAX_MATRIX_ATTEMPTS,
};
pub use numfmt::{fmt12, format_significant};
pub use run::{prepare, run, run_summary, RegretTrace, RunSummary, TraceRow, CSV_HEADER};
pub use sweep::{mean_stderr, sweep, SweepResult, SweepRow, SWEEP_HEADER};
