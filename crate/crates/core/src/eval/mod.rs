//! Prequential evaluation: the experiment runner, detection metrics, the
//! benchmark grid and its CSV and text reports.

pub mod bench;
pub mod harness;
pub mod metrics;
pub mod report;

pub use bench::{bench_grid, render_table, BenchGrid, CellOutcome, SummaryRow};
pub use harness::{
    prequential_run, run_on_source, run_with, DatasetSpec, ExperimentConfig, KdMethod, Method,
    RunResult, WindowRecord,
};
pub use metrics::{detection_delay, false_alarms};
