//! Seeded experiment sweeps and result serialization (CSV/JSON) with stable
//! float formatting for reproducible outputs.

use serde::{Deserialize, Serialize};

use super::baselines::{baseline_equal_power, baseline_random};
use super::config::{RawConfig, ScalarOrVec};
use crate::alternating::{delay_objective, solve, SolveOptions};
use crate::model::{derive_seed, evaluate, generate_channels, EvalMode, ScenarioConfig};
use crate::single_device::solve_single_device;
use crate::{Allocation, Error, Result};

/// Exact CSV column order.
pub const CSV_HEADER: &str =
    "seed,algorithm,param,value,total_delay_s,total_energy_j,min_accuracy,outer_iterations,converged,status,wall_ms";

/// Swept parameter names (closed set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    MaxPowerDbm,
    DeviceCount,
    ResourceBlocks,
    AccuracyTarget,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::MaxPowerDbm => "max_power_dbm",
            SweepParam::DeviceCount => "device_count",
            SweepParam::ResourceBlocks => "resource_blocks",
            SweepParam::AccuracyTarget => "accuracy_target",
        }
    }
}

/// Algorithms a sweep may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    Random,
    EqualPower,
    SingleDevice,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Random => "random",
            Algorithm::EqualPower => "equal_power",
            Algorithm::SingleDevice => "single_device",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Algorithm::Proposed),
            "random" => Ok(Algorithm::Random),
            "equal_power" => Ok(Algorithm::EqualPower),
            "single_device" => Ok(Algorithm::SingleDevice),
            other => Err(Error::InvalidConfig(format!("unknown algorithm {other}"))),
        }
    }
}

/// A sweep specification; `base` optionally overrides the paper defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub base: Option<RawConfig>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.seeds.is_empty() || self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "sweep requires nonempty values, seeds, and algorithms".into(),
            ));
        }
        Ok(())
    }
}

/// One output row.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: String,
    pub param: String,
    pub value: f64,
    pub total_delay_s: f64,
    pub total_energy_j: f64,
    pub min_accuracy: f64,
    pub outer_iterations: usize,
    pub converged: bool,
    pub status: String,
    pub wall_ms: f64,
}

/// Formats a float with 9 significant digits (stable across runs).
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        "nan".to_string()
    }
}

/// Serializes rows as CSV with the exact header and LF endings.
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.algorithm,
            r.param,
            format_float(r.value),
            format_float(r.total_delay_s),
            format_float(r.total_energy_j),
            format_float(r.min_accuracy),
            r.outer_iterations,
            r.converged,
            r.status,
            format_float(r.wall_ms),
        ));
    }
    out
}

/// Serializes rows as pretty JSON (array of objects) with a trailing newline.
pub fn rows_to_json(rows: &[ResultRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

/// Applies the swept parameter to a copy of the base config.
pub fn apply_param(base: &RawConfig, param: SweepParam, value: f64) -> Result<RawConfig> {
    let mut cfg = base.clone();
    match param {
        SweepParam::MaxPowerDbm => cfg.p_dbm = ScalarOrVec::Scalar(value),
        SweepParam::DeviceCount => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "device_count sweep value {value} is not a positive integer"
                )));
            }
            cfg.k = value as usize;
        }
        SweepParam::ResourceBlocks => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "resource_blocks sweep value {value} is not a positive integer"
                )));
            }
            cfg.k0 = value as usize;
        }
        SweepParam::AccuracyTarget => cfg.a = ScalarOrVec::Scalar(value),
    }
    Ok(cfg)
}

fn sanitize_status(msg: &str) -> String {
    let flat: String = msg
        .chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect();
    if flat.len() > 120 {
        format!("{}...", &flat[..117])
    } else {
        flat
    }
}

/// Runs one algorithm on one scenario/seed cell. `aux_seed` decorrelates
/// baseline randomness across sweep cells that share a channel seed.
pub fn run_cell(
    config: &ScenarioConfig,
    seed: u64,
    algorithm: Algorithm,
    mode: EvalMode,
    param: &str,
    value: f64,
    aux_seed: u64,
) -> ResultRow {
    let clock = std::time::Instant::now();
    let channels = generate_channels(config, seed);
    let outcome: Result<(Allocation, usize, bool)> = match algorithm {
        Algorithm::Proposed => solve(config, &channels, &SolveOptions::default())
            .map(|(a, t)| (a, t.iterations, t.converged)),
        Algorithm::Random => {
            baseline_random(config, &channels, derive_seed(seed, aux_seed, 1)).map(|a| (a, 1, true))
        }
        Algorithm::EqualPower => baseline_equal_power(config, &channels).map(|a| (a, 1, true)),
        Algorithm::SingleDevice => {
            solve_single_device(config, &channels).map(|(a, t)| (a, t.iterations, t.converged))
        }
    };
    let wall_ms = clock.elapsed().as_secs_f64() * 1e3;
    match outcome.and_then(|(alloc, iters, converged)| {
        evaluate(&alloc, config, &channels, mode).map(|ev| (alloc, iters, converged, ev))
    }) {
        Ok((alloc, iters, converged, ev)) => {
            let status = if ev.report.pass() {
                "ok".to_string()
            } else {
                sanitize_status(&format!("feasibility: {:?}", ev.report.failures()))
            };
            let delay = delay_objective(&alloc, config, &channels);
            ResultRow {
                seed,
                algorithm: algorithm.name().to_string(),
                param: param.to_string(),
                value,
                total_delay_s: delay,
                total_energy_j: ev.per_device_energy.iter().sum(),
                min_accuracy: ev
                    .per_slot_accuracy
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min),
                outer_iterations: iters,
                converged,
                status,
                wall_ms,
            }
        }
        Err(e) => ResultRow {
            seed,
            algorithm: algorithm.name().to_string(),
            param: param.to_string(),
            value,
            total_delay_s: f64::NAN,
            total_energy_j: f64::NAN,
            min_accuracy: f64::NAN,
            outer_iterations: 0,
            converged: false,
            status: sanitize_status(&format!("error: {e}")),
            wall_ms,
        },
    }
}

/// Runs a full sweep: one row per (value, seed, algorithm), deterministic
/// ordering, failures recorded per cell without aborting.
pub fn run_sweep(spec: &SweepSpec, base: &RawConfig, mode: EvalMode) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    let base = spec.base.clone().unwrap_or_else(|| base.clone());
    for (vi, &value) in spec.values.iter().enumerate() {
        let scenario = apply_param(&base, spec.param, value).and_then(|raw| raw.to_scenario());
        for &seed in &spec.seeds {
            for &algo in &spec.algorithms {
                match &scenario {
                    Ok(cfg) => rows.push(run_cell(
                        cfg,
                        seed,
                        algo,
                        mode,
                        spec.param.name(),
                        value,
                        vi as u64,
                    )),
                    Err(e) => rows.push(ResultRow {
                        seed,
                        algorithm: algo.name().to_string(),
                        param: spec.param.name().to_string(),
                        value,
                        total_delay_s: f64::NAN,
                        total_energy_j: f64::NAN,
                        min_accuracy: f64::NAN,
                        outer_iterations: 0,
                        converged: false,
                        status: sanitize_status(&format!("error: {e}")),
                        wall_ms: 0.0,
                    }),
                }
            }
        }
    }
    rows
}
