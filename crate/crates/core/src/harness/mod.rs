//! Experiment orchestration: the synthetic shift study, the bound comparison,
//! real-data transfer sweeps, trial aggregation and CSV emission.

mod config;
mod report;
mod results;
mod summary;
mod sweep;
mod synthetic;

pub use config::{
    parse_kv, parse_list, DatasetKind, ExperimentConfig, CONFIG_KEYS, DESK_STEPS, DESK_TRIALS,
    FULL_STEPS, FULL_TRIALS,
};
pub use report::{emit_report, report_from_dir, Manifest, Tables, RESULTS_SCHEMA};
pub use results::{
    parse_bound_csv, parse_results_csv, results_header, BoundRow, ConfigKey, ResultRow,
    BOUND_COLUMNS, KEY_COLUMNS, METRIC_COLUMNS,
};
pub use summary::{best_over_weights, summarize, BestRow, PlotPoint, Stat, SummaryRow};
pub use sweep::{
    debias_pool, load_real, run_transfer_sweep, run_transfer_sweep_on, trial_seed, RealData,
};
pub use synthetic::{run_bound_comparison, run_synthetic};
