//! Experiment harness: configuration files, baseline algorithms, and seeded
//! sweeps with stable serialization.

pub mod baselines;
pub mod config;
pub mod sweep;

pub use baselines::{baseline_equal_power, baseline_random};
pub use config::{load_config, PathlossSpec, RawConfig, ScalarOrMatrix, ScalarOrVec};
pub use sweep::{
    apply_param, format_float, rows_to_csv, rows_to_json, run_cell, run_sweep, Algorithm,
    ResultRow, SweepParam, SweepSpec, CSV_HEADER,
};
