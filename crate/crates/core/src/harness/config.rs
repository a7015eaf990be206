//! JSON scenario configuration: a closed key set with paper defaults, scalar
//! broadcasting, and dBm→watt conversion at the boundary.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::model::{dbm_to_watts, Geometry, ScenarioConfig};
use crate::{Error, Result};

/// Scalar or per-entry list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn broadcast(&self, len: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; len]),
            ScalarOrVec::Vec(v) if v.len() == len => Ok(v.clone()),
            ScalarOrVec::Vec(v) => Err(Error::InvalidConfig(format!(
                "{what}: expected {len} entries, got {}",
                v.len()
            ))),
        }
    }
}

/// Scalar or N×K matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Path-loss model parameters (dB at 1 km intercept plus log-distance slope).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathlossSpec {
    pub intercept_db: f64,
    pub slope: f64,
}

/// On-disk configuration. Every key is optional; omitted keys take the
/// paper-default values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(rename = "K", default = "default_k")]
    pub k: usize,
    #[serde(rename = "N", default = "default_n")]
    pub n: usize,
    #[serde(rename = "T0_s", default = "default_t0")]
    pub t0_s: f64,
    #[serde(rename = "B_hz", default = "default_bandwidth")]
    pub b_hz: f64,
    #[serde(default = "default_noise")]
    pub noise_dbm_per_hz: f64,
    #[serde(default = "default_waterfall")]
    pub m: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(rename = "Q_j", default = "default_energy")]
    pub q_j: ScalarOrVec,
    #[serde(rename = "P_dbm", default = "default_power")]
    pub p_dbm: ScalarOrVec,
    #[serde(rename = "D_bits", default = "default_arrivals")]
    pub d_bits: ScalarOrMatrix,
    #[serde(rename = "A", default = "default_accuracy")]
    pub a: ScalarOrVec,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_beta")]
    pub beta: ScalarOrVec,
    #[serde(rename = "K0", default = "default_blocks")]
    pub k0: usize,
    #[serde(default = "default_area")]
    pub area_m: f64,
    #[serde(default = "default_shadowing")]
    pub shadowing_db: f64,
    #[serde(default = "default_pathloss")]
    pub pathloss: PathlossSpec,
}

fn default_k() -> usize {
    10
}
fn default_n() -> usize {
    10
}
fn default_t0() -> f64 {
    1.0
}
fn default_bandwidth() -> f64 {
    1e6
}
fn default_noise() -> f64 {
    -174.0
}
fn default_waterfall() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.2
}
fn default_energy() -> ScalarOrVec {
    ScalarOrVec::Scalar(10e-3)
}
fn default_power() -> ScalarOrVec {
    ScalarOrVec::Scalar(1.0)
}
fn default_arrivals() -> ScalarOrMatrix {
    ScalarOrMatrix::Scalar(3e5)
}
fn default_accuracy() -> ScalarOrVec {
    ScalarOrVec::Scalar(0.6)
}
fn default_tau() -> usize {
    3
}
fn default_beta() -> ScalarOrVec {
    ScalarOrVec::Scalar(1.0 / 3.0)
}
fn default_blocks() -> usize {
    5
}
fn default_area() -> f64 {
    200.0
}
fn default_shadowing() -> f64 {
    8.0
}
fn default_pathloss() -> PathlossSpec {
    PathlossSpec {
        intercept_db: 128.1,
        slope: 37.6,
    }
}

impl Default for RawConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

impl RawConfig {
    /// Validates and converts to the internal scenario representation.
    pub fn to_scenario(&self) -> Result<ScenarioConfig> {
        let (n, k) = (self.n, self.k);
        let arrivals = match &self.d_bits {
            ScalarOrMatrix::Scalar(v) => Array2::from_elem((n, k), *v),
            ScalarOrMatrix::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != k) {
                    return Err(Error::InvalidConfig(format!(
                        "D_bits: expected an {n}x{k} matrix"
                    )));
                }
                Array2::from_shape_fn((n, k), |(i, j)| rows[i][j])
            }
        };
        ScenarioConfig::new(
            k,
            n,
            self.t0_s,
            self.b_hz,
            dbm_to_watts(self.noise_dbm_per_hz) * self.b_hz,
            self.m,
            self.alpha,
            self.q_j.broadcast(k, "Q_j")?,
            self.p_dbm
                .broadcast(k, "P_dbm")?
                .into_iter()
                .map(dbm_to_watts)
                .collect(),
            arrivals,
            self.a.broadcast(n, "A")?,
            self.tau,
            self.beta.broadcast(k, "beta")?,
            self.k0,
            Geometry {
                area_side_m: self.area_m,
                pathloss_intercept_db: self.pathloss.intercept_db,
                pathloss_slope: self.pathloss.slope,
                shadowing_std_db: self.shadowing_db,
            },
        )
    }
}

/// Loads a configuration file, or paper defaults when `path` is `None`.
pub fn load_config(path: Option<&std::path::Path>) -> Result<RawConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
        None => Ok(RawConfig::default()),
    }
}
