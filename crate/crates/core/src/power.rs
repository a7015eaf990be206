//! Power-control subproblem: successive convex approximation around the
//! substitution q = t·p, with perspective rate constraints and first-order
//! Taylor linearization of the exponential delivery factors, solved by the
//! log-barrier method.

use ndarray::Array2;

use crate::convex::{barrier_solve, LinearFn, SmoothConvexProgram, SmoothFn};
use crate::model::{
    rate, success_probability, ChannelRealization, ScenarioConfig, FEASIBILITY_TOL,
};
use crate::{Error, Result};

/// Relative SCA convergence threshold on the objective.
pub const SCA_REL_TOL: f64 = 1e-6;
/// Maximum SCA rounds.
pub const SCA_MAX_ROUNDS: usize = 30;
/// Post-hoc tolerance on the unlinearized constraints.
pub const TRUE_FEAS_TOL: f64 = 1e-5;
/// Duration floor applied wherever data is pending (the perspective rate has
/// value 0 at t → 0).
pub const DURATION_FLOOR_S: f64 = 1e-9;

/// SCA iterate in the substituted variables, plus the objective trace.
#[derive(Debug, Clone)]
pub struct ScaIterate {
    /// Per-pair transmit energy q = t·p (joules).
    pub q: Array2<f64>,
    /// Per-pair transmission durations (seconds).
    pub t: Array2<f64>,
    /// Per-slot delay slacks (seconds).
    pub z: Vec<f64>,
    /// Objective value after each SCA round (including the initial point).
    pub objectives: Vec<f64>,
}

/// First-order Taylor linearization of exp(−mσ²t/(qh)) around (q0, t0).
pub fn taylor_expected_success(
    q: f64,
    t: f64,
    q0: f64,
    t0: f64,
    h: f64,
    config: &ScenarioConfig,
) -> Result<f64> {
    let (c0, aq, at) = taylor_coefficients(q0, t0, h, config)?;
    Ok(c0 + aq * q + at * t)
}

/// Returns (constant, q-coefficient, t-coefficient) of the linearization,
/// i.e. lin(q, t) = constant + aq·q + at·t.
fn taylor_coefficients(q0: f64, t0: f64, h: f64, config: &ScenarioConfig) -> Result<(f64, f64, f64)> {
    if q0 <= 0.0 || t0 <= 0.0 {
        return Err(Error::Numerical(
            "Taylor expansion point requires q0 > 0 and t0 > 0".into(),
        ));
    }
    let ms2 = config.waterfall_threshold * config.noise_power_w;
    let e0 = (-ms2 * t0 / (q0 * h)).exp();
    let at = -e0 * ms2 / (q0 * h);
    let aq = e0 * ms2 * t0 / (q0 * q0 * h);
    Ok((e0 - aq * q0 - at * t0, aq, at))
}

/// Exponential delivery factor exp(−mσ²t/(qh)) in the substituted variables.
fn true_success_qt(q: f64, t: f64, h: f64, config: &ScenarioConfig) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let ms2 = config.waterfall_threshold * config.noise_power_w;
    (-ms2 * t / (q * h)).exp()
}

/// Index maps between scheduled data-carrying pairs and program columns.
#[derive(Debug, Clone)]
pub struct PowerMap {
    /// Pairs (n, k) with x = 1 and d > 0, in order; pair i owns columns
    /// 2i (q) and 2i+1 (t).
    pub pairs: Vec<(usize, usize)>,
    /// Column of z_n for slots holding at least one pair.
    pub z_col: Vec<Option<usize>>,
    /// Total variable count.
    pub dim: usize,
    /// q columns carry joules / `q_scale`.
    pub q_scale: f64,
    /// t and z columns carry seconds / `t_scale`.
    pub t_scale: f64,
}

impl PowerMap {
    fn build(x: &Array2<u8>, d: &Array2<f64>, config: &ScenarioConfig) -> Self {
        let (n, k) = (config.slot_count, config.device_count);
        let mut pairs = Vec::new();
        for nn in 0..n {
            for kk in 0..k {
                if x[[nn, kk]] == 1 && d[[nn, kk]] > 0.0 {
                    pairs.push((nn, kk));
                }
            }
        }
        let mut z_col = vec![None; n];
        let mut next = 2 * pairs.len();
        for nn in 0..n {
            if pairs.iter().any(|&(i, _)| i == nn) {
                z_col[nn] = Some(next);
                next += 1;
            }
        }
        let q_scale = config
            .energy_budget_j
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
            .max(1e-12);
        PowerMap {
            pairs,
            z_col,
            dim: next,
            q_scale,
            t_scale: config.slot_duration_s,
        }
    }

    fn q_col(&self, i: usize) -> usize {
        2 * i
    }
    fn t_col(&self, i: usize) -> usize {
        2 * i + 1
    }
}

/// Perspective rate constraint (d − t·B·log2(1 + q·h/(σ²·t)))/d ≤ 0 in
/// scaled variables.
struct RateFn {
    qi: usize,
    ti: usize,
    d: f64,
    /// B / ln 2 (natural-log form of the rate).
    a: f64,
    /// h / σ².
    c: f64,
    qs: f64,
    ts: f64,
}

impl RateFn {
    fn parts(&self, v: &[f64]) -> (f64, f64, f64) {
        let q = (v[self.qi] * self.qs).max(1e-300);
        let t = (v[self.ti] * self.ts).max(1e-300);
        (q, t, self.c * q / t)
    }
}

impl SmoothFn for RateFn {
    fn eval(&self, v: &[f64]) -> f64 {
        let (_, t, u) = self.parts(v);
        (self.d - self.a * t * u.ln_1p()) / self.d
    }
    fn grad(&self, v: &[f64], out: &mut [f64]) {
        let (_, _, u) = self.parts(v);
        out.fill(0.0);
        out[self.qi] = -self.a * self.c / (1.0 + u) * self.qs / self.d;
        out[self.ti] = -self.a * (u.ln_1p() - u / (1.0 + u)) * self.ts / self.d;
    }
    fn add_hessian(&self, v: &[f64], w: f64, out: &mut [f64]) -> bool {
        let (_, t, u) = self.parts(v);
        let dim = (out.len() as f64).sqrt() as usize;
        let base = self.a / (t * (1.0 + u) * (1.0 + u)) * w / self.d;
        let hqq = base * self.c * self.c * self.qs * self.qs;
        let hqt = -base * self.c * u * self.qs * self.ts;
        let htt = base * u * u * self.ts * self.ts;
        out[self.qi * dim + self.qi] += hqq;
        out[self.qi * dim + self.ti] += hqt;
        out[self.ti * dim + self.qi] += hqt;
        out[self.ti * dim + self.ti] += htt;
        true
    }
}

/// Builds the convexified subproblem at the given expansion iterate.
pub fn build_sca_subproblem(
    x: &Array2<u8>,
    d: &Array2<f64>,
    iterate: &ScaIterate,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<(SmoothConvexProgram, PowerMap)> {
    let map = PowerMap::build(x, d, config);
    let (n, k) = (config.slot_count, config.device_count);
    let dim = map.dim;
    let sigma2 = config.noise_power_w;
    let a = config.bandwidth_hz / std::f64::consts::LN_2;

    let mut constraints: Vec<Box<dyn SmoothFn>> = Vec::new();

    // Per-pair: delay slack coupling and perspective rate constraint.
    for (i, &(nn, kk)) in map.pairs.iter().enumerate() {
        let zc = map.z_col[nn].expect("slot with a pair has a z column");
        let mut coeffs = vec![0.0; dim];
        coeffs[map.t_col(i)] = 1.0;
        coeffs[zc] = -1.0;
        constraints.push(Box::new(LinearFn {
            coeffs,
            constant: 0.0,
        }));
        constraints.push(Box::new(RateFn {
            qi: map.q_col(i),
            ti: map.t_col(i),
            d: d[[nn, kk]],
            a,
            c: channels.h[[nn, kk]] / sigma2,
            qs: map.q_scale,
            ts: map.t_scale,
        }));
    }

    // Linearized coefficients per pair, shared by accuracy and cap rows.
    let mut lin: Vec<(f64, f64, f64)> = Vec::with_capacity(map.pairs.len());
    for (i, &(nn, kk)) in map.pairs.iter().enumerate() {
        lin.push(taylor_coefficients(
            iterate.q[[nn, kk]],
            iterate.t[[nn, kk]],
            channels.h[[nn, kk]],
            config,
        )?);
        let _ = i;
    }

    // Linearized cumulative accuracy lower bounds, normalized per row.
    for nn in 0..n {
        let required = config.required_ratio(nn) * config.cumulative_arrivals_total(nn);
        if required <= 0.0 {
            continue;
        }
        let norm = required;
        let mut coeffs = vec![0.0; dim];
        let mut constant = required / norm;
        for (i, &(ii, kk)) in map.pairs.iter().enumerate() {
            if ii <= nn {
                let (c0, aq, at) = lin[i];
                let w = d[[ii, kk]] / norm;
                constant -= w * c0;
                coeffs[map.q_col(i)] -= w * aq * map.q_scale;
                coeffs[map.t_col(i)] -= w * at * map.t_scale;
            }
        }
        constraints.push(Box::new(LinearFn { coeffs, constant }));
    }

    // Energy budgets per device.
    for kk in 0..k {
        let mut coeffs = vec![0.0; dim];
        let mut any = false;
        for (i, &(_, kk2)) in map.pairs.iter().enumerate() {
            if kk2 == kk {
                coeffs[map.q_col(i)] = map.q_scale / config.energy_budget_j[kk];
                any = true;
            }
        }
        if any {
            constraints.push(Box::new(LinearFn {
                coeffs,
                constant: -1.0,
            }));
        }
    }

    // Linearized cumulative delivered-data caps per (slot, device).
    for nn in 0..n {
        for kk in 0..k {
            let cap = config.cumulative_arrivals(nn, kk);
            let mut coeffs = vec![0.0; dim];
            let mut constant = -cap;
            let mut any = false;
            for (i, &(ii, kk2)) in map.pairs.iter().enumerate() {
                if kk2 == kk && ii <= nn {
                    let (c0, aq, at) = lin[i];
                    let w = d[[ii, kk]];
                    constant += w * c0;
                    coeffs[map.q_col(i)] += w * aq * map.q_scale;
                    coeffs[map.t_col(i)] += w * at * map.t_scale;
                    any = true;
                }
            }
            if any && cap > 0.0 {
                for c in coeffs.iter_mut() {
                    *c /= cap;
                }
                constant /= cap;
                constraints.push(Box::new(LinearFn { coeffs, constant }));
            }
        }
    }

    // Power caps re-expressed as q ≤ P_k·t.
    for (i, &(_, kk)) in map.pairs.iter().enumerate() {
        let norm = config.max_power_w[kk] * config.slot_duration_s;
        let mut coeffs = vec![0.0; dim];
        coeffs[map.q_col(i)] = map.q_scale / norm;
        coeffs[map.t_col(i)] = -config.max_power_w[kk] * map.t_scale / norm;
        constraints.push(Box::new(LinearFn {
            coeffs,
            constant: 0.0,
        }));
    }

    let mut lower = vec![0.0; dim];
    let mut upper = vec![f64::INFINITY; dim];
    for (i, _) in map.pairs.iter().enumerate() {
        lower[map.t_col(i)] = DURATION_FLOOR_S / map.t_scale;
        upper[map.t_col(i)] = 1.0;
        upper[map.q_col(i)] = f64::INFINITY;
    }
    for nn in 0..n {
        if let Some(zc) = map.z_col[nn] {
            lower[zc] = 0.0;
            upper[zc] = 2.0;
        }
    }

    let mut obj = vec![0.0; dim];
    for nn in 0..n {
        if let Some(zc) = map.z_col[nn] {
            obj[zc] = 1.0;
        }
    }

    Ok((
        SmoothConvexProgram {
            dim,
            objective: Box::new(LinearFn {
                coeffs: obj,
                constant: 0.0,
            }),
            lower,
            upper,
            constraints,
        },
        map,
    ))
}

/// Worst relative violation of the unlinearized constraints of the power
/// subproblem at (q, t).
pub fn true_violation(
    q: &Array2<f64>,
    t: &Array2<f64>,
    x: &Array2<u8>,
    d: &Array2<f64>,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> f64 {
    let (n, k) = (config.slot_count, config.device_count);
    let sigma2 = config.noise_power_w;
    let a = config.bandwidth_hz / std::f64::consts::LN_2;
    let mut worst: f64 = 0.0;
    for nn in 0..n {
        for kk in 0..k {
            if x[[nn, kk]] == 0 || d[[nn, kk]] <= 0.0 {
                continue;
            }
            let (qv, tv) = (q[[nn, kk]], t[[nn, kk]]);
            let u = channels.h[[nn, kk]] * qv / (sigma2 * tv.max(1e-300));
            let rate_val = a * tv * u.ln_1p();
            worst = worst.max((d[[nn, kk]] - rate_val) / d[[nn, kk]]);
            let pcap = config.max_power_w[kk];
            worst = worst.max((qv - pcap * tv) / (pcap * config.slot_duration_s));
            worst = worst.max((tv - config.slot_duration_s) / config.slot_duration_s);
            worst = worst.max(-tv / config.slot_duration_s);
            worst = worst.max(-qv / config.energy_budget_j[kk]);
        }
    }
    for nn in 0..n {
        let required = config.required_ratio(nn) * config.cumulative_arrivals_total(nn);
        if required > 0.0 {
            let mut delivered = 0.0;
            for i in 0..=nn {
                for kk in 0..k {
                    if x[[i, kk]] == 1 && d[[i, kk]] > 0.0 {
                        delivered += d[[i, kk]]
                            * true_success_qt(q[[i, kk]], t[[i, kk]], channels.h[[i, kk]], config);
                    }
                }
            }
            worst = worst.max((required - delivered) / required);
        }
        for kk in 0..k {
            let cap = config.cumulative_arrivals(nn, kk);
            if cap > 0.0 {
                let mut delivered = 0.0;
                for i in 0..=nn {
                    if x[[i, kk]] == 1 && d[[i, kk]] > 0.0 {
                        delivered += d[[i, kk]]
                            * true_success_qt(q[[i, kk]], t[[i, kk]], channels.h[[i, kk]], config);
                    }
                }
                worst = worst.max((delivered - cap) / cap);
            }
        }
    }
    for kk in 0..k {
        let spent: f64 = (0..n).map(|nn| q[[nn, kk]]).sum();
        worst = worst.max((spent - config.energy_budget_j[kk]) / config.energy_budget_j[kk]);
    }
    worst
}

fn delay_objective(t: &Array2<f64>, x: &Array2<u8>, d: &Array2<f64>) -> f64 {
    let (n, k) = t.dim();
    (0..n)
        .map(|nn| {
            (0..k)
                .filter(|&kk| x[[nn, kk]] == 1 && d[[nn, kk]] > 0.0)
                .map(|kk| t[[nn, kk]])
                .fold(0.0f64, f64::max)
        })
        .sum()
}

/// Solves the power-control subproblem by SCA. `init` optionally supplies a
/// feasible (p, t) warm start; otherwise full power with minimum-rate
/// durations is used.
pub fn solve_power_control(
    x: &Array2<u8>,
    d: &Array2<f64>,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
    init: Option<(&Array2<f64>, &Array2<f64>)>,
) -> Result<(Array2<f64>, Array2<f64>, f64, ScaIterate)> {
    let (n, k) = (config.slot_count, config.device_count);
    if x.dim() != (n, k) || d.dim() != (n, k) {
        return Err(Error::ShapeMismatch("power inputs must be N x K".into()));
    }

    // Attainability at full power (the best possible delivery factor).
    for nn in 0..n {
        let required = config.required_ratio(nn) * config.cumulative_arrivals_total(nn);
        if required <= 0.0 {
            continue;
        }
        let mut best = 0.0;
        for i in 0..=nn {
            for kk in 0..k {
                if x[[i, kk]] == 1 && d[[i, kk]] > 0.0 {
                    best += d[[i, kk]]
                        * success_probability(
                            config.max_power_w[kk],
                            channels.h[[i, kk]],
                            config,
                        );
                }
            }
        }
        if best + FEASIBILITY_TOL * required < required {
            return Err(Error::infeasible_at(
                "power",
                nn,
                "accuracy target unattainable even at full power",
            ));
        }
    }

    // Initial iterate.
    let mut q0 = Array2::zeros((n, k));
    let mut t0 = Array2::zeros((n, k));
    for nn in 0..n {
        for kk in 0..k {
            if x[[nn, kk]] == 1 && d[[nn, kk]] > 0.0 {
                let (p_init, t_init) = match init {
                    Some((p, t)) => (p[[nn, kk]], t[[nn, kk]]),
                    None => {
                        let r = rate(config.max_power_w[kk], channels.h[[nn, kk]], config);
                        (
                            config.max_power_w[kk],
                            (d[[nn, kk]] / r).min(config.slot_duration_s),
                        )
                    }
                };
                if p_init <= 0.0 || t_init <= 0.0 {
                    return Err(Error::infeasible_at(
                        "power",
                        nn,
                        "warm start has zero power or duration on a data-carrying pair",
                    ));
                }
                t0[[nn, kk]] = t_init.min(config.slot_duration_s);
                q0[[nn, kk]] = p_init * t0[[nn, kk]];
            }
        }
    }

    let mut current = ScaIterate {
        q: q0,
        t: t0,
        z: vec![0.0; n],
        objectives: Vec::new(),
    };
    let mut objective = delay_objective(&current.t, x, d);
    current.objectives.push(objective);

    for _round in 0..SCA_MAX_ROUNDS {
        let (prog, map) = build_sca_subproblem(x, d, &current, config, channels)?;
        if map.pairs.is_empty() {
            break;
        }

        // Strictified start: inflate durations slightly, shave energies.
        let mut start = vec![0.0; map.dim];
        for (i, &(nn, kk)) in map.pairs.iter().enumerate() {
            let t_s = (current.t[[nn, kk]] * 1.01)
                .min(config.slot_duration_s * (1.0 - 1e-9))
                .max(current.t[[nn, kk]]);
            start[map.t_col(i)] = t_s / map.t_scale;
            start[map.q_col(i)] = current.q[[nn, kk]] * (1.0 - 1e-7) / map.q_scale;
        }
        for nn in 0..n {
            if let Some(zc) = map.z_col[nn] {
                let tmax = map
                    .pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, &(i, _))| i == nn)
                    .map(|(idx, _)| start[map.t_col(idx)])
                    .fold(0.0f64, f64::max);
                start[zc] = (tmax + 1e-6).min(1.5);
            }
        }
        let strict = prog
            .constraints
            .iter()
            .all(|g| g.eval(&start) < -1e-12)
            && (0..map.dim).all(|j| {
                start[j] > prog.lower[j] + 1e-15 && start[j] < prog.upper[j] - 1e-15
            });
        if !strict {
            break; // no strict interior around the current iterate
        }

        let solved = match barrier_solve(&prog, &start) {
            Ok(s) => s,
            Err(Error::Infeasible { .. }) => break,
            Err(e) => return Err(e),
        };
        let (v, _, _) = solved;

        let mut cand_q = current.q.clone();
        let mut cand_t = current.t.clone();
        for (i, &(nn, kk)) in map.pairs.iter().enumerate() {
            cand_q[[nn, kk]] = v[map.q_col(i)] * map.q_scale;
            cand_t[[nn, kk]] = v[map.t_col(i)] * map.t_scale;
        }

        // Trust backtracking toward the previous (true-feasible) iterate.
        let mut halvings = 0;
        while true_violation(&cand_q, &cand_t, x, d, config, channels) > TRUE_FEAS_TOL
            && halvings < 50
        {
            for nn in 0..n {
                for kk in 0..k {
                    cand_q[[nn, kk]] = 0.5 * (cand_q[[nn, kk]] + current.q[[nn, kk]]);
                    cand_t[[nn, kk]] = 0.5 * (cand_t[[nn, kk]] + current.t[[nn, kk]]);
                }
            }
            halvings += 1;
        }
        if halvings == 50 {
            break;
        }

        let new_objective = delay_objective(&cand_t, x, d);
        if new_objective > objective + 1e-12 {
            break; // monotone safeguard
        }
        let improvement = (objective - new_objective) / objective.max(1e-12);
        current.q = cand_q;
        current.t = cand_t;
        objective = new_objective;
        current.objectives.push(objective);
        if improvement < SCA_REL_TOL {
            break;
        }
    }

    // Recover per-pair powers and the slot slacks.
    let mut p = Array2::zeros((n, k));
    for nn in 0..n {
        for kk in 0..k {
            if current.t[[nn, kk]] > 0.0 {
                p[[nn, kk]] =
                    (current.q[[nn, kk]] / current.t[[nn, kk]]).min(config.max_power_w[kk]);
            }
        }
    }
    for nn in 0..n {
        current.z[nn] = (0..k)
            .filter(|&kk| x[[nn, kk]] == 1)
            .map(|kk| current.t[[nn, kk]])
            .fold(0.0f64, f64::max);
    }
    let t_out = current.t.clone();
    Ok((p, t_out, objective, current))
}
