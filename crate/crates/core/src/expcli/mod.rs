//! Declarative experiment runner behind the `distill-lab` binary: JSON
//! configs in, `result.json` / `sweep.csv` out.

mod config;
mod emit;
mod run;

pub use config::{
    build_trainer, generate, AlgoSpec, ExperimentConfig, LowerBoundConfig, Pipeline, StudentConfig,
    SweepConfig, TeacherConfig, Tolerances,
};
pub use emit::{emit, result_json, sweep_csv, RESULT_FILE, SWEEP_FILE, SWEEP_HEADER};
pub use run::{
    confusion_from_conditionals, confusion_matrix, distill_trials, run, Confusion, DistillSummary,
    DistributionSummary, ExperimentResult, LowerBoundRow, SweepRow,
};
