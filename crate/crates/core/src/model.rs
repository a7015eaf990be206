//! Domain types, channel generation, closed-form physical quantities, and the
//! full feasibility checker for the joint allocation problem.
//!
//! All internal computation is in linear SI units (watts, hertz, bits,
//! seconds). dBm inputs are converted at the configuration boundary in
//! [`crate::harness::config`].

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Relative tolerance for feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Default accuracy exponent. Kept small enough that the implied
/// delivered-data fraction `A^(1/alpha)` stays below the per-slot scheduling
/// capacity `K0/K` over the supported sweep ranges (K up to 14, K0 down to 3
/// at A = 0.6).
pub const DEFAULT_ACCURACY_EXPONENT: f64 = 0.2;

/// Default waterfall threshold of the packet-error model.
pub const DEFAULT_WATERFALL_THRESHOLD: f64 = 1.0;

/// Default slot duration in seconds.
pub const DEFAULT_SLOT_DURATION_S: f64 = 1.0;

/// Default per-device energy budget in joules (10 mJ).
pub const DEFAULT_ENERGY_BUDGET_J: f64 = 10e-3;

/// Geometry and propagation parameters for channel generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Side length of the square deployment area in meters.
    pub area_side_m: f64,
    /// Path-loss intercept in dB at 1 km.
    pub pathloss_intercept_db: f64,
    /// Path-loss slope (dB per decade of distance).
    pub pathloss_slope: f64,
    /// Log-normal shadowing standard deviation in dB.
    pub shadowing_std_db: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            area_side_m: 200.0,
            pathloss_intercept_db: 128.1,
            pathloss_slope: 37.6,
            shadowing_std_db: 8.0,
        }
    }
}

/// All problem constants for one scenario instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Device count K.
    pub device_count: usize,
    /// Slot count N.
    pub slot_count: usize,
    /// Slot duration T0 in seconds.
    pub slot_duration_s: f64,
    /// System bandwidth B in Hz.
    pub bandwidth_hz: f64,
    /// Noise power sigma^2 in watts.
    pub noise_power_w: f64,
    /// Waterfall threshold m of the packet-error model.
    pub waterfall_threshold: f64,
    /// Accuracy exponent alpha of f(x, y) = (x/y)^alpha.
    pub accuracy_exponent: f64,
    /// Per-device energy budgets Q_k in joules, length K.
    pub energy_budget_j: Vec<f64>,
    /// Per-device maximum transmit powers P_k in watts, length K.
    pub max_power_w: Vec<f64>,
    /// Arrival matrix D (N x K) in bits.
    pub arrivals_bits: Array2<f64>,
    /// Per-slot accuracy targets A_n in [0, 1], length N.
    pub accuracy_target: Vec<f64>,
    /// Regularity window length tau in slots.
    pub regularity_window: usize,
    /// Per-device regularity fractions beta_k in (0, 1], length K.
    pub regularity_fraction: Vec<f64>,
    /// Resource-block cap K0 (max devices scheduled per slot).
    pub resource_blocks: usize,
    /// Deployment geometry and propagation parameters.
    pub geometry: Geometry,
}

impl ScenarioConfig {
    /// Validates all invariants; rejects window-infeasible configurations.
    pub fn new(
        device_count: usize,
        slot_count: usize,
        slot_duration_s: f64,
        bandwidth_hz: f64,
        noise_power_w: f64,
        waterfall_threshold: f64,
        accuracy_exponent: f64,
        energy_budget_j: Vec<f64>,
        max_power_w: Vec<f64>,
        arrivals_bits: Array2<f64>,
        accuracy_target: Vec<f64>,
        regularity_window: usize,
        regularity_fraction: Vec<f64>,
        resource_blocks: usize,
        geometry: Geometry,
    ) -> Result<Self> {
        let cfg = ScenarioConfig {
            device_count,
            slot_count,
            slot_duration_s,
            bandwidth_hz,
            noise_power_w,
            waterfall_threshold,
            accuracy_exponent,
            energy_budget_j,
            max_power_w,
            arrivals_bits,
            accuracy_target,
            regularity_window,
            regularity_fraction,
            resource_blocks,
            geometry,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let k = self.device_count;
        let n = self.slot_count;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if k == 0 || n == 0 {
            return bad("K and N must be positive".into());
        }
        if !(self.slot_duration_s > 0.0
            && self.bandwidth_hz > 0.0
            && self.noise_power_w > 0.0
            && self.waterfall_threshold > 0.0
            && self.accuracy_exponent > 0.0)
        {
            return bad("scalar parameters must be strictly positive".into());
        }
        if self.energy_budget_j.len() != k
            || self.max_power_w.len() != k
            || self.regularity_fraction.len() != k
        {
            return bad("per-device vectors must have length K".into());
        }
        if self.accuracy_target.len() != n {
            return bad("accuracy target vector must have length N".into());
        }
        if self.arrivals_bits.dim() != (n, k) {
            return bad("arrival matrix must be N x K".into());
        }
        if self.energy_budget_j.iter().any(|&q| q <= 0.0)
            || self.max_power_w.iter().any(|&p| p <= 0.0)
        {
            return bad("energy budgets and power caps must be positive".into());
        }
        if self.arrivals_bits.iter().any(|&d| d < 0.0) {
            return bad("arrivals must be nonnegative".into());
        }
        if self.accuracy_target.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return bad("accuracy targets must lie in [0, 1]".into());
        }
        if self.regularity_window == 0 {
            return bad("tau must be a positive integer".into());
        }
        if self
            .regularity_fraction
            .iter()
            .any(|&b| !(b > 0.0 && b <= 1.0))
        {
            return bad("beta_k must lie in (0, 1]".into());
        }
        if self.resource_blocks == 0 || self.resource_blocks > k {
            return bad("K0 must satisfy 1 <= K0 <= K".into());
        }
        // Window feasibility: total required activations must fit in the
        // resource-block capacity of one window.
        if self.enforced_window_starts().next().is_some() {
            let demand: usize = (0..k).map(|kk| self.required_activations(kk)).sum();
            let capacity = self.resource_blocks * (self.regularity_window + 1);
            if demand > capacity {
                return Err(Error::infeasible(
                    "config",
                    format!(
                        "window demand {demand} exceeds resource-block capacity {capacity} \
                         (sum_k ceil(beta_k*tau) > K0*(tau+1))"
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Scenario with the simulation-section default parameters.
    pub fn paper_default(device_count: usize, slot_count: usize) -> Self {
        let noise_power_w = dbm_to_watts(-174.0) * 1e6; // -174 dBm/Hz over 1 MHz
        let max_power_w = dbm_to_watts(1.0);
        ScenarioConfig {
            device_count,
            slot_count,
            slot_duration_s: DEFAULT_SLOT_DURATION_S,
            bandwidth_hz: 1e6,
            noise_power_w,
            waterfall_threshold: DEFAULT_WATERFALL_THRESHOLD,
            accuracy_exponent: DEFAULT_ACCURACY_EXPONENT,
            energy_budget_j: vec![DEFAULT_ENERGY_BUDGET_J; device_count],
            max_power_w: vec![max_power_w; device_count],
            arrivals_bits: Array2::from_elem((slot_count, device_count), 300e3),
            accuracy_target: vec![0.6; slot_count],
            regularity_window: 3,
            regularity_fraction: vec![1.0 / 3.0; device_count],
            resource_blocks: 5.min(device_count),
            geometry: Geometry::default(),
        }
    }

    /// Delivered-data fraction implied by the accuracy target at slot `n`:
    /// `A_n^(1/alpha)`.
    pub fn required_ratio(&self, n: usize) -> f64 {
        self.accuracy_target[n].powf(1.0 / self.accuracy_exponent)
    }

    /// Required activations per regularity window for device `k`:
    /// `ceil(beta_k * tau)`.
    pub fn required_activations(&self, k: usize) -> usize {
        (self.regularity_fraction[k] * self.regularity_window as f64 - 1e-9).ceil() as usize
    }

    /// Starts (0-based) of the regularity windows that fit the horizon.
    /// Window `w` covers slots `w..=w+tau`; only windows with
    /// `w + tau <= N - 1` are enforced.
    pub fn enforced_window_starts(&self) -> std::ops::Range<usize> {
        let n = self.slot_count;
        let tau = self.regularity_window;
        if n > tau {
            0..(n - tau)
        } else {
            0..0
        }
    }

    /// Cumulative arrivals of device `k` through slot `n` inclusive.
    pub fn cumulative_arrivals(&self, n: usize, k: usize) -> f64 {
        (0..=n).map(|i| self.arrivals_bits[[i, k]]).sum()
    }

    /// Cumulative arrivals of all devices through slot `n` inclusive.
    pub fn cumulative_arrivals_total(&self, n: usize) -> f64 {
        (0..self.device_count)
            .map(|k| self.cumulative_arrivals(n, k))
            .sum()
    }
}

/// Converts a dBm value to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Linear channel power gain from distance and a dB-domain shadowing draw.
pub fn pathloss_linear_gain(distance_km: f64, geometry: &Geometry, shadow_db: f64) -> f64 {
    let d = distance_km.max(1e-6);
    let pl_db = geometry.pathloss_intercept_db + geometry.pathloss_slope * d.log10() + shadow_db;
    10f64.powf(-pl_db / 10.0)
}

/// Per-slot, per-device linear channel gains for one scenario realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// N x K matrix of linear power gains.
    pub h: Array2<f64>,
    /// Seed used to generate this realization.
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Mixes a seed with stream identifiers into a fresh substream seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(a)).wrapping_add(splitmix64(b)))
}

/// Generates channel gains: devices placed uniformly in the square area
/// (server at the center), path loss `intercept + slope*log10(d_km)` plus
/// independent log-normal shadowing per (slot, device).
///
/// Draws are keyed by (seed, device) and (seed, slot, device) substreams, so
/// the first K devices of a larger realization coincide with a smaller one.
pub fn generate_channels(config: &ScenarioConfig, seed: u64) -> ChannelRealization {
    let n = config.slot_count;
    let k = config.device_count;
    let side = config.geometry.area_side_m;
    let center = side / 2.0;
    let mut h = Array2::zeros((n, k));
    for kk in 0..k {
        let mut pos_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x706f73, kk as u64));
        let x: f64 = pos_rng.gen_range(0.0..side);
        let y: f64 = pos_rng.gen_range(0.0..side);
        let dist_km = ((x - center).powi(2) + (y - center).powi(2)).sqrt() / 1000.0;
        for nn in 0..n {
            let mut sh_rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                0x736861 ^ (nn as u64) << 20,
                kk as u64,
            ));
            let shadow_db = if config.geometry.shadowing_std_db > 0.0 {
                gaussian(&mut sh_rng) * config.geometry.shadowing_std_db
            } else {
                0.0
            };
            h[[nn, kk]] = pathloss_linear_gain(dist_km, &config.geometry, shadow_db);
        }
    }
    ChannelRealization { h, seed }
}

/// Standard normal via Box-Muller.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Shannon rate B*log2(1 + p*h/sigma^2) in bits/second.
pub fn rate(p: f64, h: f64, config: &ScenarioConfig) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    config.bandwidth_hz * (1.0 + p * h / config.noise_power_w).log2()
}

/// Packet delivery probability exp(-m*sigma^2/(p*h)); 0 at p = 0 (limit).
pub fn success_probability(p: f64, h: f64, config: &ScenarioConfig) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    (-config.waterfall_threshold * config.noise_power_w / (p * h)).exp()
}

/// Twin accuracy (received/arrived)^alpha; 1 when nothing has arrived.
pub fn accuracy(received_cum: f64, arrived_cum: f64, config: &ScenarioConfig) -> f64 {
    if arrived_cum <= 0.0 {
        return 1.0;
    }
    (received_cum / arrived_cum)
        .clamp(0.0, 1.0)
        .powf(config.accuracy_exponent)
}

/// The decision triple (x, p, d). Durations t are derived.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// N x K binary scheduling matrix.
    pub x: Array2<u8>,
    /// N x K transmit powers in watts.
    pub p: Array2<f64>,
    /// N x K offloaded data in bits.
    pub d: Array2<f64>,
}

impl Allocation {
    pub fn zeros(slot_count: usize, device_count: usize) -> Self {
        Allocation {
            x: Array2::zeros((slot_count, device_count)),
            p: Array2::zeros((slot_count, device_count)),
            d: Array2::zeros((slot_count, device_count)),
        }
    }

    /// Derived durations t_nk = d_nk / r_nk (0 when d_nk = 0).
    pub fn durations(&self, config: &ScenarioConfig, channels: &ChannelRealization) -> Array2<f64> {
        let (n, k) = self.d.dim();
        let mut t = Array2::zeros((n, k));
        for nn in 0..n {
            for kk in 0..k {
                let d = self.d[[nn, kk]];
                if d > 0.0 {
                    let r = rate(self.p[[nn, kk]], channels.h[[nn, kk]], config);
                    t[[nn, kk]] = if r > 0.0 { d / r } else { f64::INFINITY };
                }
            }
        }
        t
    }
}

/// One constraint family's verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub pass: bool,
    /// Worst relative violation magnitude (0 when satisfied).
    pub worst_violation: f64,
}

impl ConstraintCheck {
    fn from_violation(v: f64) -> Self {
        let v = v.max(0.0);
        ConstraintCheck {
            pass: v <= FEASIBILITY_TOL,
            worst_violation: v,
        }
    }
}

/// Per-constraint verdicts for the full joint problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub accuracy: ConstraintCheck,
    pub energy: ConstraintCheck,
    pub data_cap: ConstraintCheck,
    pub regularity: ConstraintCheck,
    pub resource_blocks: ConstraintCheck,
    pub data_nonneg: ConstraintCheck,
    pub schedule_binary: ConstraintCheck,
    pub power_bounds: ConstraintCheck,
    pub duration_bounds: ConstraintCheck,
    pub coupling: ConstraintCheck,
}

impl FeasibilityReport {
    pub fn pass(&self) -> bool {
        self.accuracy.pass
            && self.energy.pass
            && self.data_cap.pass
            && self.regularity.pass
            && self.resource_blocks.pass
            && self.data_nonneg.pass
            && self.schedule_binary.pass
            && self.power_bounds.pass
            && self.duration_bounds.pass
            && self.coupling.pass
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut push = |ok: bool, name: &'static str| {
            if !ok {
                out.push(name)
            }
        };
        push(self.accuracy.pass, "accuracy");
        push(self.energy.pass, "energy");
        push(self.data_cap.pass, "data_cap");
        push(self.regularity.pass, "regularity");
        push(self.resource_blocks.pass, "resource_blocks");
        push(self.data_nonneg.pass, "data_nonneg");
        push(self.schedule_binary.pass, "schedule_binary");
        push(self.power_bounds.pass, "power_bounds");
        push(self.duration_bounds.pass, "duration_bounds");
        push(self.coupling.pass, "coupling");
        out
    }
}

/// Delivery model used when evaluating an allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// Expected-value substitution: delivered = d * exp(-m*sigma^2/(p*h)).
    Expected,
    /// Bernoulli sampling of per-transmission delivery, averaged over trials.
    MonteCarlo { seed: u64, trials: u32 },
}

/// Evaluation outputs for one allocation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub total_delay_s: f64,
    pub per_slot_delay: Vec<f64>,
    pub per_device_energy: Vec<f64>,
    pub per_slot_accuracy: Vec<f64>,
    pub report: FeasibilityReport,
}

/// Evaluates delay, energy, accuracy, and feasibility of an allocation.
/// The feasibility report always uses the expected-value delivery model.
pub fn evaluate(
    alloc: &Allocation,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
    mode: EvalMode,
) -> Result<Evaluation> {
    let n = config.slot_count;
    let k = config.device_count;
    if alloc.x.dim() != (n, k) || alloc.p.dim() != (n, k) || alloc.d.dim() != (n, k) {
        return Err(Error::ShapeMismatch(format!(
            "allocation shape {:?} does not match config ({n}, {k})",
            alloc.d.dim()
        )));
    }
    if channels.h.dim() != (n, k) {
        return Err(Error::ShapeMismatch("channel matrix shape".into()));
    }

    let t = alloc.durations(config, channels);
    let per_slot_delay: Vec<f64> = (0..n)
        .map(|nn| {
            (0..k)
                .map(|kk| {
                    if alloc.x[[nn, kk]] != 0 {
                        t[[nn, kk]]
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let total_delay_s = per_slot_delay.iter().sum();
    let per_device_energy: Vec<f64> = (0..k)
        .map(|kk| (0..n).map(|nn| t[[nn, kk]] * alloc.p[[nn, kk]]).sum())
        .collect();

    let per_slot_accuracy = match mode {
        EvalMode::Expected => {
            let mut acc = Vec::with_capacity(n);
            let mut delivered = 0.0;
            for nn in 0..n {
                for kk in 0..k {
                    let d = alloc.d[[nn, kk]];
                    if d > 0.0 {
                        delivered +=
                            d * success_probability(alloc.p[[nn, kk]], channels.h[[nn, kk]], config);
                    }
                }
                acc.push(accuracy(delivered, config.cumulative_arrivals_total(nn), config));
            }
            acc
        }
        EvalMode::MonteCarlo { seed, trials } => {
            let mut acc = vec![0.0; n];
            for trial in 0..trials {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6d63, trial as u64));
                let mut delivered = 0.0;
                for nn in 0..n {
                    for kk in 0..k {
                        let d = alloc.d[[nn, kk]];
                        if d > 0.0 {
                            let s = success_probability(
                                alloc.p[[nn, kk]],
                                channels.h[[nn, kk]],
                                config,
                            );
                            if rng.gen::<f64>() < s {
                                delivered += d;
                            }
                        }
                    }
                    acc[nn] +=
                        accuracy(delivered, config.cumulative_arrivals_total(nn), config);
                }
            }
            let inv = 1.0 / trials.max(1) as f64;
            acc.iter().map(|a| a * inv).collect()
        }
    };

    let report = check_feasibility(alloc, config, channels);
    Ok(Evaluation {
        total_delay_s,
        per_slot_delay,
        per_device_energy,
        per_slot_accuracy,
        report,
    })
}

/// Checks every constraint of the joint problem (expected-value delivery).
pub fn check_feasibility(
    alloc: &Allocation,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> FeasibilityReport {
    let n = config.slot_count;
    let k = config.device_count;
    let t = alloc.durations(config, channels);

    // Accuracy: cumulative delivered ratio per slot.
    let mut worst_accuracy: f64 = 0.0;
    let mut delivered_total = 0.0;
    let mut delivered_per_dev = vec![0.0; k];
    let mut worst_cap: f64 = 0.0;
    for nn in 0..n {
        for kk in 0..k {
            let d = alloc.d[[nn, kk]];
            if d > 0.0 {
                let s = success_probability(alloc.p[[nn, kk]], channels.h[[nn, kk]], config);
                delivered_total += d * s;
                delivered_per_dev[kk] += d * s;
            }
        }
        let arrived = config.cumulative_arrivals_total(nn);
        let required = config.required_ratio(nn) * arrived;
        if required > 0.0 {
            worst_accuracy =
                worst_accuracy.max((required - delivered_total) / required.max(1e-12));
        }
        for kk in 0..k {
            let cap = config.cumulative_arrivals(nn, kk);
            let excess = delivered_per_dev[kk] - cap;
            worst_cap = worst_cap.max(excess / cap.max(1e-12));
        }
    }

    // Energy.
    let mut worst_energy: f64 = 0.0;
    for kk in 0..k {
        let e: f64 = (0..n).map(|nn| t[[nn, kk]] * alloc.p[[nn, kk]]).sum();
        worst_energy =
            worst_energy.max((e - config.energy_budget_j[kk]) / config.energy_budget_j[kk]);
    }

    // Regularity windows.
    let mut worst_reg: f64 = 0.0;
    for w in config.enforced_window_starts() {
        for kk in 0..k {
            let count: f64 = (w..=w + config.regularity_window)
                .map(|nn| alloc.x[[nn, kk]] as f64)
                .sum();
            let need = config.regularity_fraction[kk] * config.regularity_window as f64;
            worst_reg = worst_reg.max((need - count) / need.max(1.0));
        }
    }

    // Resource blocks.
    let mut worst_rb: f64 = 0.0;
    for nn in 0..n {
        let count: f64 = (0..k).map(|kk| alloc.x[[nn, kk]] as f64).sum();
        worst_rb = worst_rb
            .max((count - config.resource_blocks as f64) / config.resource_blocks as f64);
    }

    // Simple bounds.
    let mut worst_dneg: f64 = 0.0;
    let mut worst_bin: f64 = 0.0;
    let mut worst_pow: f64 = 0.0;
    let mut worst_dur: f64 = 0.0;
    let mut worst_couple: f64 = 0.0;
    for nn in 0..n {
        for kk in 0..k {
            let d = alloc.d[[nn, kk]];
            let scale = config.cumulative_arrivals(nn, kk).max(1.0);
            worst_dneg = worst_dneg.max(-d / scale);
            let xb = alloc.x[[nn, kk]];
            if xb > 1 {
                worst_bin = worst_bin.max(1.0);
            }
            let p = alloc.p[[nn, kk]];
            let pk = config.max_power_w[kk];
            worst_pow = worst_pow.max((-p).max(p - pk) / pk);
            worst_dur =
                worst_dur.max((t[[nn, kk]] - config.slot_duration_s) / config.slot_duration_s);
            if xb == 0 {
                // Coupling rule: no traffic on unscheduled pairs.
                worst_couple = worst_couple.max(d / scale);
            } else if d > 0.0 && p <= 0.0 {
                worst_couple = worst_couple.max(d / scale);
            }
        }
    }

    FeasibilityReport {
        accuracy: ConstraintCheck::from_violation(worst_accuracy),
        energy: ConstraintCheck::from_violation(worst_energy),
        data_cap: ConstraintCheck::from_violation(worst_cap),
        regularity: ConstraintCheck::from_violation(worst_reg),
        resource_blocks: ConstraintCheck::from_violation(worst_rb),
        data_nonneg: ConstraintCheck::from_violation(worst_dneg),
        schedule_binary: ConstraintCheck::from_violation(worst_bin),
        power_bounds: ConstraintCheck::from_violation(worst_pow),
        duration_bounds: ConstraintCheck::from_violation(worst_dur),
        coupling: ConstraintCheck::from_violation(worst_couple),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::paper_default(2, 3);
        cfg.regularity_window = 2;
        cfg.regularity_fraction = vec![0.5; 2];
        cfg.resource_blocks = 2;
        cfg
    }

    #[test]
    fn pathloss_at_1km_matches_intercept() {
        let geo = Geometry {
            shadowing_std_db: 0.0,
            ..Geometry::default()
        };
        let h = pathloss_linear_gain(1.0, &geo, 0.0);
        assert!((h - 10f64.powf(-12.81)).abs() < 1e-20);
    }

    #[test]
    fn channels_deterministic_per_seed() {
        let cfg = small_config();
        let a = generate_channels(&cfg, 7);
        let b = generate_channels(&cfg, 7);
        assert_eq!(a.h, b.h);
    }

    #[test]
    fn channels_differ_across_seeds() {
        let cfg = small_config();
        for s in 0..20u64 {
            let a = generate_channels(&cfg, 2 * s);
            let b = generate_channels(&cfg, 2 * s + 1);
            assert_ne!(a.h, b.h, "seeds {} and {} collided", 2 * s, 2 * s + 1);
        }
    }

    #[test]
    fn channel_prefix_nesting() {
        let big = ScenarioConfig::paper_default(6, 3);
        let small = ScenarioConfig::paper_default(3, 3);
        let hb = generate_channels(&big, 11);
        let hs = generate_channels(&small, 11);
        for nn in 0..3 {
            for kk in 0..3 {
                assert_eq!(hb.h[[nn, kk]], hs.h[[nn, kk]]);
            }
        }
    }

    #[test]
    fn rate_known_points() {
        let mut cfg = small_config();
        cfg.bandwidth_hz = 1e6;
        cfg.noise_power_w = 1.0;
        // p*h/sigma^2 = 1 -> rate = B
        assert!((rate(1.0, 1.0, &cfg) - 1e6).abs() < 1e-6);
        assert_eq!(rate(0.0, 1.0, &cfg), 0.0);
        // p*h/sigma^2 = 3 -> 2e6
        assert!((rate(3.0, 1.0, &cfg) - 2e6).abs() < 1e-6);
    }

    #[test]
    fn success_probability_known_points() {
        let mut cfg = small_config();
        cfg.noise_power_w = 1.0;
        cfg.waterfall_threshold = 1.0;
        // m*sigma^2/(p*h) = ln 2 -> 0.5
        let p = 1.0 / std::f64::consts::LN_2;
        assert!((success_probability(p, 1.0, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(success_probability(0.0, 1.0, &cfg), 0.0);
        // Monotone nondecreasing on a grid, range [0, 1).
        let mut prev = 0.0;
        for i in 1..200 {
            let s = success_probability(i as f64 * 0.05, 1.0, &cfg);
            assert!(s >= prev && s < 1.0);
            prev = s;
        }
    }

    #[test]
    fn accuracy_known_points() {
        let mut cfg = small_config();
        cfg.accuracy_exponent = 0.5;
        assert_eq!(accuracy(5.0, 5.0, &cfg), 1.0);
        assert!((accuracy(1.0, 4.0, &cfg) - 0.5).abs() < 1e-12);
        cfg.accuracy_exponent = 1.0;
        assert!((accuracy(0.6, 1.0, &cfg) - 0.6).abs() < 1e-12);
        assert_eq!(accuracy(0.0, 0.0, &cfg), 1.0);
    }

    #[test]
    fn evaluate_empty_allocation() {
        let cfg = small_config();
        let ch = generate_channels(&cfg, 1);
        let alloc = Allocation::zeros(3, 2);
        let ev = evaluate(&alloc, &cfg, &ch, EvalMode::Expected).unwrap();
        assert_eq!(ev.total_delay_s, 0.0);
        assert!(ev.per_device_energy.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn evaluate_energy_product() {
        // Single device, single slot, t = 2 s at p = 1 mW -> 2 mJ.
        let mut cfg = ScenarioConfig::paper_default(1, 1);
        cfg.slot_duration_s = 3.0;
        cfg.bandwidth_hz = 1.0;
        cfg.noise_power_w = 1.0;
        let ch = ChannelRealization {
            h: Array2::from_elem((1, 1), 1.0),
            seed: 0,
        };
        let mut alloc = Allocation::zeros(1, 1);
        alloc.x[[0, 0]] = 1;
        alloc.p[[0, 0]] = 0.001;
        // rate = log2(1 + 0.001) bits/s; pick d so t = 2 s.
        let r = rate(0.001, 1.0, &cfg);
        alloc.d[[0, 0]] = 2.0 * r;
        let ev = evaluate(&alloc, &cfg, &ch, EvalMode::Expected).unwrap();
        assert!((ev.per_device_energy[0] - 0.002).abs() < 1e-12);
        assert!((ev.total_delay_s - 2.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let cfg = small_config();
        let ch = generate_channels(&cfg, 1);
        let alloc = Allocation::zeros(2, 2);
        assert!(matches!(
            evaluate(&alloc, &cfg, &ch, EvalMode::Expected),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn window_infeasible_config_rejected() {
        // K0 = 1, K = 10, beta = 1, tau = 1: demand 10 > capacity 2.
        let mut cfg = ScenarioConfig::paper_default(10, 10);
        cfg.resource_blocks = 1;
        cfg.regularity_window = 1;
        cfg.regularity_fraction = vec![1.0; 10];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn feasibility_checker_flags_violations() {
        let mut cfg = small_config();
        cfg.accuracy_target = vec![0.0; 3];
        let ch = generate_channels(&cfg, 3);
        // Feasible: schedule device 0 in every slot plus device 1 per window, no data.
        let mut alloc = Allocation::zeros(3, 2);
        for nn in 0..3 {
            alloc.x[[nn, 0]] = 1;
            alloc.x[[nn, 1]] = 1;
        }
        let rep = check_feasibility(&alloc, &cfg, &ch);
        assert!(rep.pass(), "failures: {:?}", rep.failures());

        // Resource-block violation.
        cfg.resource_blocks = 1;
        let rep = check_feasibility(&alloc, &cfg, &ch);
        assert!(!rep.resource_blocks.pass);

        // Coupling violation: traffic on unscheduled pair.
        let mut bad = Allocation::zeros(3, 2);
        bad.d[[0, 0]] = 100.0;
        let rep = check_feasibility(&bad, &cfg, &ch);
        assert!(!rep.coupling.pass);
    }

    #[test]
    fn montecarlo_matches_expected_accuracy() {
        // With alpha = 1 the Bernoulli mean accuracy equals the expected-mode
        // accuracy; check agreement within 3 standard errors.
        let mut cfg = small_config();
        cfg.accuracy_exponent = 1.0;
        cfg.accuracy_target = vec![0.0; 3];
        let ch = generate_channels(&cfg, 5);
        let mut alloc = Allocation::zeros(3, 2);
        for nn in 0..3 {
            for kk in 0..2 {
                alloc.x[[nn, kk]] = 1;
                alloc.p[[nn, kk]] = cfg.max_power_w[kk];
                alloc.d[[nn, kk]] = 0.5 * cfg.arrivals_bits[[nn, kk]];
            }
        }
        let exp = evaluate(&alloc, &cfg, &ch, EvalMode::Expected).unwrap();
        let trials = 10_000;
        let mc = evaluate(
            &alloc,
            &cfg,
            &ch,
            EvalMode::MonteCarlo { seed: 42, trials },
        )
        .unwrap();
        for nn in 0..3 {
            // Accuracy is an average of bounded [0,1] samples; SE <= 0.5/sqrt(trials).
            let se = 0.5 / (trials as f64).sqrt();
            assert!(
                (exp.per_slot_accuracy[nn] - mc.per_slot_accuracy[nn]).abs() <= 3.0 * se,
                "slot {nn}: expected {} vs mc {}",
                exp.per_slot_accuracy[nn],
                mc.per_slot_accuracy[nn]
            );
        }
    }
}
