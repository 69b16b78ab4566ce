//! Experiment orchestration: configs, full-filter and compressed runs,
//! metrics, timing and report files.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod timing;

pub use config::{CoreKind, CovInit, ExperimentConfig, ModelKind};
pub use experiment::{
    all_variants, compare_cores, compare_variants, run_experiment, run_full, run_gckf, FilterSetup, GckfVariant,
    RunReport, SystemModel, Track, VariantSummary,
};
pub use metrics::{avg_discrepancy, cost_ratio, std_percent_diff, Timings};
pub use report::{write_comparison, write_cost_ratio_csv, write_run_artifacts};
pub use timing::{bench, BenchConfig, BenchRow};
