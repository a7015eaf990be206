//! Single-device (K = 1) pipeline: best-channel initial slot, per-hop optimal
//! delays via a bisection root-finder, exact chain scheduling by DAG shortest
//! path, and alternating data offloading / power refinement.

use ndarray::Array2;

use crate::alternating::{delay_objective, AlternatingTrace, StageRecord};
use crate::model::{check_feasibility, rate, ChannelRealization, ScenarioConfig};
use crate::offloading::solve_offloading;
use crate::power::solve_power_control;
use crate::{Allocation, Error, Result};

/// Relative residual demanded from the bisection root-finder.
pub const PBAR_RESIDUAL_TOL: f64 = 1e-10;
/// Relative convergence threshold of the outer chain/offloading loop.
pub const SINGLE_REL_TOL: f64 = 1e-4;
/// Maximum outer rounds.
pub const SINGLE_MAX_ROUNDS: usize = 20;

/// Per-hop optimal delays. `cost[m][q]` is the delay of transmitting at slot
/// q (1-based) directly after slot m, with m = 0 the virtual source; `None`
/// marks an inadmissible or infeasible hop.
#[derive(Debug, Clone)]
pub struct ChainEdgeCosts {
    pub cost: Vec<Vec<Option<f64>>>,
    pub slot_count: usize,
}

/// Best initial-phase slot: the index (0-based) of the strongest channel
/// among the first τ+1 slots.
pub fn initial_slot(config: &ScenarioConfig, channels: &ChannelRealization) -> Result<usize> {
    if config.device_count != 1 {
        return Err(Error::InvalidConfig(
            "single-device pipeline requires K = 1".into(),
        ));
    }
    let horizon = (config.regularity_window + 1).min(config.slot_count);
    Ok((0..horizon)
        .max_by(|&a, &b| channels.h[[a, 0]].total_cmp(&channels.h[[b, 0]]))
        .expect("horizon is nonempty"))
}

/// Energy-per-transmission at power p: d·p / (B·log2(1 + p·h/σ²)).
fn energy_needed(p: f64, d_bits: f64, h: f64, config: &ScenarioConfig) -> f64 {
    d_bits * p / rate(p, h, config)
}

/// Solves d·p̄/(B·log2(1+p̄h/σ²)) = rhs for the unique positive root by
/// bisection. The left side is strictly increasing with infimum
/// d·σ²·ln2/(B·h) as p̄ → 0.
pub fn pbar_solve(d_bits: f64, h: f64, rhs: f64, config: &ScenarioConfig) -> Result<f64> {
    if d_bits <= 0.0 || rhs <= 0.0 {
        return Err(Error::InvalidConfig(
            "pbar_solve requires positive data and energy".into(),
        ));
    }
    let infimum = d_bits * config.noise_power_w * std::f64::consts::LN_2 / (config.bandwidth_hz * h);
    if rhs <= infimum {
        return Err(Error::infeasible(
            "single_device",
            format!("energy target {rhs} at or below the infimum {infimum}"),
        ));
    }
    let mut hi = 1e-6;
    while energy_needed(hi, d_bits, h, config) < rhs {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerical("pbar bracketing diverged".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = if lo == 0.0 { hi * 0.5 } else { 0.5 * (lo + hi) };
        let val = energy_needed(mid, d_bits, h, config);
        if (val - rhs).abs() <= PBAR_RESIDUAL_TOL * rhs {
            return Ok(mid);
        }
        if val < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical("pbar bisection did not converge".into()))
}

/// Optimal single-hop delay for transmitting d_q bits at slot q (1-based)
/// directly after slot m (0 = source): the larger of the full-power rate
/// bound and the energy bound at the per-hop budget (τ+1)·Q/(N−m).
pub fn edge_delay(
    m: usize,
    q: usize,
    d_bits: f64,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<f64> {
    let n = config.slot_count;
    let tau = config.regularity_window;
    if q == 0 || q > n || q <= m || q - m > tau + 1 {
        return Err(Error::InvalidConfig(format!(
            "hop ({m} -> {q}) outside the admissible gap"
        )));
    }
    if d_bits <= 0.0 {
        return Ok(0.0);
    }
    let h = channels.h[[q - 1, 0]];
    let p_max = config.max_power_w[0];
    let budget = (tau as f64 + 1.0) * config.energy_budget_j[0] / (n - m) as f64;
    let rate_bound = d_bits / rate(p_max, h, config);
    let delay = if energy_needed(p_max, d_bits, h, config) <= budget {
        rate_bound
    } else {
        let pbar = pbar_solve(d_bits, h, budget, config)?;
        rate_bound.max(budget / pbar)
    };
    if delay > config.slot_duration_s * (1.0 + 1e-9) {
        return Err(Error::infeasible_at(
            "single_device",
            q - 1,
            "hop demand exceeds the slot duration",
        ));
    }
    Ok(delay)
}

/// Builds all admissible edge costs for the given per-slot demands.
pub fn build_edge_costs(
    demand_bits: &[f64],
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> ChainEdgeCosts {
    let n = config.slot_count;
    let tau = config.regularity_window;
    let mut cost = vec![vec![None; n + 1]; n + 1];
    for m in 0..n {
        for q in (m + 1)..=(m + tau + 1).min(n) {
            cost[m][q] = edge_delay(m, q, demand_bits[q - 1], config, channels).ok();
        }
    }
    ChainEdgeCosts {
        cost,
        slot_count: n,
    }
}

/// Exact minimum-cost transmission chain via shortest path on the hop DAG.
/// Returns the per-slot schedule and its total cost.
pub fn chain_schedule(
    edge_costs: &ChainEdgeCosts,
    config: &ScenarioConfig,
) -> Result<(Vec<u8>, f64)> {
    let n = edge_costs.slot_count;
    let tau = config.regularity_window;
    // dist[v]: best cost reaching node v (0 = source, 1..=n slots).
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut pred = vec![usize::MAX; n + 1];
    dist[0] = 0.0;
    for q in 1..=n {
        for m in q.saturating_sub(tau + 1)..q {
            if let Some(c) = edge_costs.cost[m][q] {
                if dist[m].is_finite() && dist[m] + c < dist[q] {
                    dist[q] = dist[m] + c;
                    pred[q] = m;
                }
            }
        }
    }
    // Sink reachable from q iff the tail fits in one window: n − q ≤ τ.
    let mut best: Option<(f64, usize)> = None;
    for q in 1..=n {
        if n - q <= tau && dist[q].is_finite() {
            if best.map_or(true, |(c, _)| dist[q] < c) {
                best = Some((dist[q], q));
            }
        }
    }
    let (total, mut q) = best.ok_or_else(|| {
        Error::infeasible(
            "single_device",
            "no admissible transmission chain covers the horizon",
        )
    })?;
    let mut x = vec![0u8; n];
    while q != 0 {
        x[q - 1] = 1;
        q = pred[q];
    }
    Ok((x, total))
}

/// Solves the K = 1 problem by alternating exact chain scheduling with the
/// offloading LP and the SCA power stage, keeping the best feasible iterate.
pub fn solve_single_device(
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<(Allocation, AlternatingTrace)> {
    if config.device_count != 1 {
        return Err(Error::InvalidConfig(
            "single-device pipeline requires K = 1".into(),
        ));
    }
    if config.required_activations(0) > 1 {
        return Err(Error::InvalidConfig(
            "single-device pipeline handles at most one required transmission per window".into(),
        ));
    }
    let n = config.slot_count;

    // Start from the densest feasible schedule at full power.
    let x_all = Array2::from_elem((n, 1), 1u8);
    let p_full = Array2::from_elem((n, 1), config.max_power_w[0]);
    let (d0, _, _) = solve_offloading(&x_all, &p_full, config, channels)?;
    let mut alloc = Allocation {
        x: x_all,
        p: p_full,
        d: d0,
    };
    if !check_feasibility(&alloc, config, channels).pass() {
        return Err(Error::infeasible(
            "single_device",
            "full-schedule initialization is infeasible",
        ));
    }
    let mut objective = delay_objective(&alloc, config, channels);
    let mut trace = AlternatingTrace {
        objectives: vec![objective],
        ..Default::default()
    };

    for _round in 0..SINGLE_MAX_ROUNDS {
        let before = objective;

        // Chain stage: estimate per-slot demand for unscheduled slots by the
        // mean of the current positive loads, then re-offload on the chain.
        let clock = std::time::Instant::now();
        let mut accepted = false;
        let positive: Vec<f64> = alloc.d.iter().copied().filter(|&v| v > 0.0).collect();
        let fallback = if positive.is_empty() {
            0.0
        } else {
            positive.iter().sum::<f64>() / positive.len() as f64
        };
        let demand: Vec<f64> = (0..n)
            .map(|nn| {
                if alloc.x[[nn, 0]] == 1 && alloc.d[[nn, 0]] > 0.0 {
                    alloc.d[[nn, 0]]
                } else {
                    fallback
                }
            })
            .collect();
        let costs = build_edge_costs(&demand, config, channels);
        if let Ok((chain, _)) = chain_schedule(&costs, config) {
            let mut x_new = Array2::zeros((n, 1));
            let mut p_new = Array2::zeros((n, 1));
            for nn in 0..n {
                if chain[nn] == 1 {
                    x_new[[nn, 0]] = 1;
                    p_new[[nn, 0]] = if alloc.x[[nn, 0]] == 1 && alloc.p[[nn, 0]] > 0.0 {
                        alloc.p[[nn, 0]]
                    } else {
                        config.max_power_w[0]
                    };
                }
            }
            if let Ok((d_new, _, _)) = solve_offloading(&x_new, &p_new, config, channels) {
                let cand = Allocation {
                    x: x_new,
                    p: p_new,
                    d: d_new,
                };
                let cand_obj = delay_objective(&cand, config, channels);
                if cand_obj <= objective + 1e-12 && check_feasibility(&cand, config, channels).pass()
                {
                    alloc = cand;
                    objective = cand_obj;
                    accepted = true;
                }
            }
        }
        trace.stages.push(StageRecord {
            stage: "chain",
            accepted,
            objective_after: objective,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });

        // Power stage (SCA restricted to K = 1).
        let clock = std::time::Instant::now();
        let mut accepted = false;
        let t_cur = alloc.durations(config, channels);
        if let Ok((p_new, _, _, _)) =
            solve_power_control(&alloc.x, &alloc.d, config, channels, Some((&alloc.p, &t_cur)))
        {
            let cand = Allocation {
                x: alloc.x.clone(),
                p: p_new,
                d: alloc.d.clone(),
            };
            let cand_obj = delay_objective(&cand, config, channels);
            if cand_obj <= objective + 1e-12 && check_feasibility(&cand, config, channels).pass() {
                alloc = cand;
                objective = cand_obj;
                accepted = true;
            }
        }
        trace.stages.push(StageRecord {
            stage: "power",
            accepted,
            objective_after: objective,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });

        // Offloading stage at the final (x, p) of this round.
        let clock = std::time::Instant::now();
        let mut accepted = false;
        if let Ok((d_new, _, _)) = solve_offloading(&alloc.x, &alloc.p, config, channels) {
            let cand = Allocation {
                x: alloc.x.clone(),
                p: alloc.p.clone(),
                d: d_new,
            };
            let cand_obj = delay_objective(&cand, config, channels);
            if cand_obj <= objective + 1e-12 && check_feasibility(&cand, config, channels).pass() {
                alloc = cand;
                objective = cand_obj;
                accepted = true;
            }
        }
        trace.stages.push(StageRecord {
            stage: "offloading",
            accepted,
            objective_after: objective,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
        });

        trace.iterations += 1;
        trace.objectives.push(objective);
        let improvement = (before - objective) / before.max(1e-12);
        if improvement < SINGLE_REL_TOL {
            trace.converged = true;
            break;
        }
    }

    Ok((alloc, trace))
}
