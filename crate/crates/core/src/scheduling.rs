//! Device-scheduling subproblem: Lagrangian dual decomposition with a
//! closed-form primal recovery, projected subgradient dual updates, and a
//! deterministic feasibility-repair pass.

use ndarray::Array2;

use crate::model::ScenarioConfig;
use crate::{Error, Result};

/// Maximum subgradient iterations before repair kicks in.
pub const DUAL_MAX_ITERS: usize = 5000;
/// Dual convergence threshold (max-norm change of all multipliers).
pub const DUAL_CHANGE_TOL: f64 = 1e-6;

/// Which coefficient form the closed-form primal recovery uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma1Variant {
    /// Coefficient λ2_n + λ3_nk·t_nk − Σ λ1 (consistent with the stated
    /// Lagrangian, where λ3 multiplies x_nk·t_nk). Default.
    DurationWeighted,
    /// Coefficient λ2_n + λ3_nk − Σ λ1 (the closed form as printed, which
    /// drops the t_nk factor).
    Literal,
}

/// Dual multipliers for the relaxed scheduling problem.
#[derive(Debug, Clone)]
pub struct DualState {
    /// Multipliers of the regularity-window constraints, indexed by window
    /// start and device. Entries at non-enforced starts stay zero.
    pub lambda1: Array2<f64>,
    /// Multipliers of the per-slot resource-block caps.
    pub lambda2: Vec<f64>,
    /// Multipliers of the slot-delay coupling y_n ≥ x_nk t_nk, in [0, 1].
    pub lambda3: Array2<f64>,
    /// Completed subgradient steps.
    pub iteration: usize,
    /// Base stepsize; κ(t) = κ0 / sqrt(t).
    pub kappa0: f64,
}

impl DualState {
    pub fn new(config: &ScenarioConfig) -> Self {
        DualState {
            lambda1: Array2::zeros((config.slot_count, config.device_count)),
            lambda2: vec![0.0; config.slot_count],
            lambda3: Array2::zeros((config.slot_count, config.device_count)),
            iteration: 0,
            kappa0: 1.0,
        }
    }

    fn stepsize(&self) -> f64 {
        self.kappa0 / ((self.iteration + 1) as f64).sqrt()
    }
}

/// Lagrangian coefficient of x_nk at the given duals.
fn coefficient(
    dual: &DualState,
    t: &Array2<f64>,
    config: &ScenarioConfig,
    n: usize,
    k: usize,
    variant: Lemma1Variant,
) -> f64 {
    let tau = config.regularity_window;
    let lo = n.saturating_sub(tau);
    let window_sum: f64 = (lo..=n).map(|i| dual.lambda1[[i, k]]).sum();
    let weight = match variant {
        Lemma1Variant::DurationWeighted => dual.lambda3[[n, k]] * t[[n, k]],
        Lemma1Variant::Literal => dual.lambda3[[n, k]],
    };
    dual.lambda2[n] + weight - window_sum
}

/// Closed-form primal recovery: x_nk = 1 iff the Lagrangian coefficient is
/// strictly negative (ties resolve to 0); y_n = max_k x_nk t_nk.
pub fn lemma1_primal(
    dual: &DualState,
    t: &Array2<f64>,
    config: &ScenarioConfig,
    variant: Lemma1Variant,
) -> (Array2<u8>, Vec<f64>) {
    let (n, k) = (config.slot_count, config.device_count);
    let mut x = Array2::zeros((n, k));
    let mut y = vec![0.0f64; n];
    for nn in 0..n {
        for kk in 0..k {
            if coefficient(dual, t, config, nn, kk, variant) < 0.0 {
                x[[nn, kk]] = 1;
                y[nn] = y[nn].max(t[[nn, kk]]);
            }
        }
    }
    (x, y)
}

/// One projected subgradient step on all multipliers.
pub fn dual_step(
    dual: &DualState,
    x: &Array2<u8>,
    y: &[f64],
    t: &Array2<f64>,
    config: &ScenarioConfig,
) -> DualState {
    let mut next = dual.clone();
    let step = dual.stepsize();
    let tau = config.regularity_window;
    let (n, k) = (config.slot_count, config.device_count);

    for start in config.enforced_window_starts() {
        for kk in 0..k {
            let demand = config.regularity_fraction[kk] * tau as f64;
            let window: f64 = (start..=start + tau).map(|i| x[[i, kk]] as f64).sum();
            next.lambda1[[start, kk]] = (dual.lambda1[[start, kk]] + step * (demand - window)).max(0.0);
        }
    }
    for nn in 0..n {
        let occupancy: f64 = (0..k).map(|kk| x[[nn, kk]] as f64).sum();
        next.lambda2[nn] =
            (dual.lambda2[nn] + step * (occupancy - config.resource_blocks as f64)).max(0.0);
        for kk in 0..k {
            let g = x[[nn, kk]] as f64 * t[[nn, kk]] - y[nn];
            next.lambda3[[nn, kk]] = (dual.lambda3[[nn, kk]] + step * g).clamp(0.0, 1.0);
        }
    }
    next.iteration = dual.iteration + 1;
    next
}

fn max_norm_change(a: &DualState, b: &DualState) -> f64 {
    let mut m: f64 = 0.0;
    for (u, v) in a.lambda1.iter().zip(b.lambda1.iter()) {
        m = m.max((u - v).abs());
    }
    for (u, v) in a.lambda2.iter().zip(b.lambda2.iter()) {
        m = m.max((u - v).abs());
    }
    for (u, v) in a.lambda3.iter().zip(b.lambda3.iter()) {
        m = m.max((u - v).abs());
    }
    m
}

/// True iff x meets every enforced regularity window and the per-slot cap.
pub fn schedule_feasible(x: &Array2<u8>, config: &ScenarioConfig) -> bool {
    let tau = config.regularity_window;
    let (n, k) = (config.slot_count, config.device_count);
    for nn in 0..n {
        let occ: usize = (0..k).map(|kk| x[[nn, kk]] as usize).sum();
        if occ > config.resource_blocks {
            return false;
        }
    }
    for start in config.enforced_window_starts() {
        for kk in 0..k {
            let sum: usize = (start..=start + tau).map(|i| x[[i, kk]] as usize).sum();
            if sum < config.required_activations(kk) {
                return false;
            }
        }
    }
    true
}

/// Scheduling objective Σ_n max_k x_nk t_nk.
pub fn schedule_objective(x: &Array2<u8>, t: &Array2<f64>) -> f64 {
    let (n, k) = x.dim();
    (0..n)
        .map(|nn| {
            (0..k)
                .filter(|&kk| x[[nn, kk]] == 1)
                .map(|kk| t[[nn, kk]])
                .fold(0.0f64, f64::max)
        })
        .sum()
}

/// Greedy repair: (a) activate the cheapest unscheduled pair in every
/// deficient window; (b) deactivate the most expensive removable pairs in
/// every overloaded slot. Activation-only then deactivation-only, so window
/// satisfaction is never regressed by (b).
fn repair(x: &mut Array2<u8>, t: &Array2<f64>, config: &ScenarioConfig) {
    let tau = config.regularity_window;
    let (n, k) = (config.slot_count, config.device_count);

    for start in config.enforced_window_starts() {
        for kk in 0..k {
            let required = config.required_activations(kk);
            loop {
                let sum: usize = (start..=start + tau).map(|i| x[[i, kk]] as usize).sum();
                if sum >= required {
                    break;
                }
                // Prefer slots with spare resource blocks; among those the
                // smallest duration; deterministic slot-index tie-break.
                let mut best: Option<(bool, f64, usize)> = None;
                for i in start..=start + tau {
                    if x[[i, kk]] == 1 {
                        continue;
                    }
                    let occ: usize = (0..k).map(|kk2| x[[i, kk2]] as usize).sum();
                    let overloaded = occ >= config.resource_blocks;
                    let key = (overloaded, t[[i, kk]], i);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
                match best {
                    Some((_, _, i)) => x[[i, kk]] = 1,
                    None => break,
                }
            }
        }
    }

    for nn in 0..n {
        loop {
            let occ: usize = (0..k).map(|kk| x[[nn, kk]] as usize).sum();
            if occ <= config.resource_blocks {
                break;
            }
            let mut best: Option<(f64, usize)> = None;
            for kk in 0..k {
                if x[[nn, kk]] == 0 {
                    continue;
                }
                // Removable iff every enforced window containing (nn, kk)
                // keeps strictly more activations than required.
                let removable = config.enforced_window_starts().all(|start| {
                    if nn < start || nn > start + tau {
                        return true;
                    }
                    let sum: usize = (start..=start + tau).map(|i| x[[i, kk]] as usize).sum();
                    sum > config.required_activations(kk)
                });
                if removable {
                    let key = (t[[nn, kk]], kk);
                    if best.map_or(true, |b| key > b) {
                        best = Some(key);
                    }
                }
            }
            match best {
                Some((_, kk)) => x[[nn, kk]] = 0,
                None => break,
            }
        }
    }
}

/// First-improvement local search over drop and move moves, keeping
/// feasibility. Caps at N·K passes.
fn local_improve(x: &mut Array2<u8>, t: &Array2<f64>, config: &ScenarioConfig) {
    let (n, k) = (config.slot_count, config.device_count);
    let mut obj = schedule_objective(x, t);
    for _ in 0..n * k {
        let mut improved = false;
        for nn in 0..n {
            for kk in 0..k {
                if x[[nn, kk]] == 0 {
                    continue;
                }
                x[[nn, kk]] = 0;
                if schedule_feasible(x, config) {
                    let dropped = schedule_objective(x, t);
                    if dropped < obj - 1e-15 {
                        obj = dropped;
                        improved = true;
                        continue;
                    }
                }
                // Try relocating the activation to any other slot.
                let mut moved = false;
                for i in 0..n {
                    if i == nn || x[[i, kk]] == 1 {
                        continue;
                    }
                    x[[i, kk]] = 1;
                    if schedule_feasible(x, config) {
                        let cand = schedule_objective(x, t);
                        if cand < obj - 1e-15 {
                            obj = cand;
                            improved = true;
                            moved = true;
                            break;
                        }
                    }
                    x[[i, kk]] = 0;
                }
                if !moved {
                    x[[nn, kk]] = 1;
                }
            }
        }
        // Pairwise slot swap between two devices: assignment-type moves a
        // single relocation cannot reach when the per-slot cap is tight.
        'swap: for nn in 0..n {
            for kk in 0..k {
                if x[[nn, kk]] == 0 {
                    continue;
                }
                for i in 0..n {
                    for j in 0..k {
                        if i == nn
                            || j == kk
                            || x[[i, j]] == 0
                            || x[[i, kk]] == 1
                            || x[[nn, j]] == 1
                        {
                            continue;
                        }
                        x[[nn, kk]] = 0;
                        x[[i, j]] = 0;
                        x[[i, kk]] = 1;
                        x[[nn, j]] = 1;
                        if schedule_feasible(x, config) {
                            let cand = schedule_objective(x, t);
                            if cand < obj - 1e-15 {
                                obj = cand;
                                improved = true;
                                continue 'swap;
                            }
                        }
                        x[[nn, kk]] = 1;
                        x[[i, j]] = 1;
                        x[[i, kk]] = 0;
                        x[[nn, j]] = 0;
                    }
                }
            }
        }
        // Whole-column swap: exchange two devices' activation patterns. This
        // reaches phase swaps whose intermediate states violate the windows.
        for k1 in 0..k {
            for k2 in (k1 + 1)..k {
                for nn in 0..n {
                    x.swap([nn, k1], [nn, k2]);
                }
                let mut keep = false;
                if schedule_feasible(x, config) {
                    let cand = schedule_objective(x, t);
                    if cand < obj - 1e-15 {
                        obj = cand;
                        improved = true;
                        keep = true;
                    }
                }
                if !keep {
                    for nn in 0..n {
                        x.swap([nn, k1], [nn, k2]);
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Deterministic residue-based schedule: each device gets
/// required_activations(k) phase offsets modulo τ+1, packed greedily into the
/// least-loaded residues, so every sliding window and the per-slot cap hold
/// by construction whenever the config is window-feasible.
pub fn round_robin_schedule(config: &ScenarioConfig) -> Result<Array2<u8>> {
    let tau = config.regularity_window;
    let period = tau + 1;
    let (n, k) = (config.slot_count, config.device_count);
    let mut load = vec![0usize; period];
    let mut x = Array2::zeros((n, k));
    for kk in 0..k {
        let mut offsets = Vec::new();
        for _ in 0..config.required_activations(kk) {
            let r = (0..period)
                .filter(|r| !offsets.contains(r))
                .min_by_key(|&r| (load[r], r))
                .ok_or_else(|| {
                    Error::infeasible("scheduling", "window demand exceeds window length")
                })?;
            if load[r] >= config.resource_blocks {
                return Err(Error::infeasible(
                    "scheduling",
                    "window demand exceeds resource-block capacity",
                ));
            }
            load[r] += 1;
            offsets.push(r);
        }
        for nn in 0..n {
            if offsets.contains(&(nn % period)) {
                x[[nn, kk]] = 1;
            }
        }
    }
    Ok(x)
}

/// Solves the scheduling subproblem with the default duration-weighted
/// coefficient.
pub fn solve_scheduling(t: &Array2<f64>, config: &ScenarioConfig) -> Result<(Array2<u8>, f64)> {
    solve_scheduling_with(t, config, Lemma1Variant::DurationWeighted)
}

/// Dual method with repair; candidates are the repaired dual iterate, a
/// repaired empty schedule (minimal activation), and the round-robin
/// schedule. Returns the feasible candidate with the smallest objective.
pub fn solve_scheduling_with(
    t: &Array2<f64>,
    config: &ScenarioConfig,
    variant: Lemma1Variant,
) -> Result<(Array2<u8>, f64)> {
    if t.dim() != (config.slot_count, config.device_count) {
        return Err(Error::ShapeMismatch("duration matrix must be N x K".into()));
    }
    if t.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig("durations must be nonnegative".into()));
    }

    let mut dual = DualState::new(config);
    let mut dual_x = Array2::zeros(t.dim());
    for _ in 0..DUAL_MAX_ITERS {
        let (x, y) = lemma1_primal(&dual, t, config, variant);
        let next = dual_step(&dual, &x, &y, t, config);
        let change = max_norm_change(&dual, &next);
        dual_x = x;
        dual = next;
        if change < DUAL_CHANGE_TOL {
            break;
        }
    }

    let mut candidates = Vec::new();
    let mut repaired = dual_x;
    repair(&mut repaired, t, config);
    candidates.push(repaired);
    let mut minimal = Array2::zeros(t.dim());
    repair(&mut minimal, t, config);
    candidates.push(minimal);
    if let Ok(rr) = round_robin_schedule(config) {
        candidates.push(rr);
    }

    let (n, k) = t.dim();
    // Per-device cheapest slots, ignoring coupling; repair fixes windows/caps.
    let mut cheap = Array2::zeros((n, k));
    for kk in 0..k {
        let mut slots: Vec<usize> = (0..n).collect();
        slots.sort_by(|&a, &b| t[[a, kk]].total_cmp(&t[[b, kk]]).then(a.cmp(&b)));
        for &nn in slots.iter().take(config.required_activations(kk)) {
            cheap[[nn, kk]] = 1;
        }
    }
    repair(&mut cheap, t, config);
    candidates.push(cheap);
    // Co-location: pack every device into the slots with the smallest
    // worst-case duration, subject to the per-slot cap.
    let mut aligned = Array2::zeros((n, k));
    let mut slots: Vec<usize> = (0..n).collect();
    let worst = |nn: usize| (0..k).map(|kk| t[[nn, kk]]).fold(0.0f64, f64::max);
    slots.sort_by(|&a, &b| worst(a).total_cmp(&worst(b)).then(a.cmp(&b)));
    for kk in 0..k {
        let mut placed = 0;
        for &nn in &slots {
            if placed >= config.required_activations(kk) {
                break;
            }
            let occ: usize = (0..k).map(|kk2| aligned[[nn, kk2]] as usize).sum();
            if occ < config.resource_blocks {
                aligned[[nn, kk]] = 1;
                placed += 1;
            }
        }
    }
    repair(&mut aligned, t, config);
    candidates.push(aligned);

    candidates
        .into_iter()
        .filter(|x| schedule_feasible(x, config))
        .map(|mut x| {
            local_improve(&mut x, t, config);
            x
        })
        .map(|x| {
            let obj = schedule_objective(&x, t);
            (x, obj)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| {
            Error::infeasible(
                "scheduling",
                "window demand exceeds resource-block capacity",
            )
        })
}
