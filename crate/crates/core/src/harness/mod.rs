//! Parameter sweeps: grid expansion, deterministic execution, aggregation
//! and best-instance reruns.

mod aggregate;
pub mod grid;
pub mod io;
mod run;
mod select;
mod sweep;

pub use aggregate::{aggregate, final5_len, flag_unstable, AggregateResult, Criterion};
pub use grid::{expand_grid, InstanceSpec, ParameterGrid};
pub use io::{fmt_f64, SummaryRow};
pub use run::{
    execute_instance, Experiment, ExperimentSettings, RunData, RunResult, DIVERGENCE_THRESHOLD,
    RVE_CLAMP,
};
pub use select::{
    compare_candidates, rerun_experiment, select_best, select_best_and_rerun, select_best_row,
};
pub use sweep::{
    rerun_index_to_csv, run_sweep, write_outputs, Progress, RerunRecord, SweepOutput, CONFIG_FILE,
    RAW_DIR, RERUN_DIR, RERUN_HEADER, RERUN_INDEX, SUMMARY_FILE,
};
