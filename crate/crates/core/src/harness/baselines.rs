//! Baseline algorithms: random device selection and equal power allocation.
//! Both reuse the proposed subproblem solvers for everything they do not
//! randomize or fix.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{check_feasibility, ChannelRealization, ScenarioConfig};
use crate::offloading::solve_offloading;
use crate::scheduling::{schedule_feasible, solve_scheduling};
use crate::{Allocation, Error, Result};

const MAX_REJECTIONS: usize = 1000;

/// Uniform rejection sampling over binary schedules, falling back to a
/// randomized round-robin when the feasible set is too sparse to hit.
fn random_schedule(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<Array2<u8>> {
    let (n, k) = (config.slot_count, config.device_count);
    for _ in 0..MAX_REJECTIONS {
        let x = Array2::from_shape_fn((n, k), |_| rng.gen_range(0..=1u8));
        if schedule_feasible(&x, config) {
            return Ok(x);
        }
    }
    // Randomized round-robin: random phase offsets packed into the
    // least-loaded residues (random tie-breaking), device order shuffled.
    let period = config.regularity_window + 1;
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut load = vec![0usize; period];
    let mut x = Array2::zeros((n, k));
    for &kk in &order {
        let mut offsets: Vec<usize> = Vec::new();
        for _ in 0..config.required_activations(kk) {
            let min_load = (0..period)
                .filter(|r| !offsets.contains(r))
                .map(|r| load[r])
                .min()
                .ok_or_else(|| {
                    Error::infeasible("baseline", "window demand exceeds window length")
                })?;
            let choices: Vec<usize> = (0..period)
                .filter(|r| !offsets.contains(r) && load[*r] == min_load)
                .collect();
            let r = choices[rng.gen_range(0..choices.len())];
            if load[r] >= config.resource_blocks {
                return Err(Error::infeasible(
                    "baseline",
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

/// Random device selection: seeded random feasible schedule, with power and
/// offloading solved by the proposed subproblem solvers.
pub fn baseline_random(
    config: &ScenarioConfig,
    channels: &ChannelRealization,
    seed: u64,
) -> Result<Allocation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (config.slot_count, config.device_count);
    // A random schedule can satisfy the scheduling constraints yet leave the
    // offloading problem infeasible (e.g. no early transmitter for an early
    // accuracy target); redraw a bounded number of times.
    let mut last_err = None;
    let mut alloc = None;
    for _ in 0..50 {
        let x = random_schedule(config, &mut rng)?;
        let mut p = Array2::zeros((n, k));
        for nn in 0..n {
            for kk in 0..k {
                if x[[nn, kk]] == 1 {
                    p[[nn, kk]] = config.max_power_w[kk];
                }
            }
        }
        match solve_offloading(&x, &p, config, channels) {
            Ok((d, _, _)) => {
                alloc = Some(Allocation { x, p, d });
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let alloc = match alloc {
        Some(a) => a,
        None => return Err(last_err.expect("at least one attempt ran")),
    };
    let report = check_feasibility(&alloc, config, channels);
    if !report.pass() {
        return Err(Error::infeasible(
            "baseline",
            format!("random baseline fails checks: {:?}", report.failures()),
        ));
    }
    Ok(alloc)
}

fn equal_power_matrix(x: &Array2<u8>, config: &ScenarioConfig) -> Array2<f64> {
    let (n, k) = x.dim();
    let mut p = Array2::zeros((n, k));
    for kk in 0..k {
        let scheduled: usize = (0..n).map(|nn| x[[nn, kk]] as usize).sum();
        if scheduled == 0 {
            continue;
        }
        let p_even =
            config.energy_budget_j[kk] / (scheduled as f64 * config.slot_duration_s);
        let level = config.max_power_w[kk].min(p_even);
        for nn in 0..n {
            if x[[nn, kk]] == 1 {
                p[[nn, kk]] = level;
            }
        }
    }
    p
}

/// Equal power allocation: scheduling and offloading by the proposed solvers,
/// power fixed at min(P_k, Q_k/(S_k·T0)) on scheduled pairs.
pub fn baseline_equal_power(
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<Allocation> {
    let x0 = crate::scheduling::round_robin_schedule(config)?;
    let p0 = equal_power_matrix(&x0, config);
    let (d0, _, _) = solve_offloading(&x0, &p0, config, channels)?;
    let mut alloc = Allocation {
        x: x0,
        p: p0,
        d: d0,
    };
    let mut objective = crate::alternating::delay_objective(&alloc, config, channels);

    // Alternate scheduling and offloading (no power stage) monotonically.
    for _ in 0..10 {
        let before = objective;
        let t = alloc.durations(config, channels);
        if let Ok((x_new, _)) = solve_scheduling(&t, config) {
            let p_new = equal_power_matrix(&x_new, config);
            if let Ok((d_new, _, _)) = solve_offloading(&x_new, &p_new, config, channels) {
                let cand = Allocation {
                    x: x_new,
                    p: p_new,
                    d: d_new,
                };
                let cand_obj = crate::alternating::delay_objective(&cand, config, channels);
                if cand_obj <= objective + 1e-12
                    && check_feasibility(&cand, config, channels).pass()
                {
                    alloc = cand;
                    objective = cand_obj;
                }
            }
        }
        if (before - objective) / before.max(1e-12) < 1e-4 {
            break;
        }
    }

    let report = check_feasibility(&alloc, config, channels);
    if !report.pass() {
        return Err(Error::infeasible(
            "baseline",
            format!("equal-power baseline fails checks: {:?}", report.failures()),
        ));
    }
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternating::{delay_objective, solve, SolveOptions};
    use crate::model::generate_channels;

    #[test]
    fn random_baseline_is_deterministic_per_seed() {
        let cfg = ScenarioConfig::paper_default(6, 6);
        let ch = generate_channels(&cfg, 3);
        let a = baseline_random(&cfg, &ch, 42).unwrap();
        let b = baseline_random(&cfg, &ch, 42).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.d, b.d);
        let c = baseline_random(&cfg, &ch, 43).unwrap();
        let _ = c; // may or may not differ; determinism is the assertion
    }

    #[test]
    fn unconstrained_case_accepts_minimal_schedule() {
        let mut cfg = ScenarioConfig::paper_default(3, 4);
        cfg.resource_blocks = 3;
        cfg.regularity_window = 3;
        cfg.regularity_fraction = vec![1.0 / 3.0; 3];
        let ch = generate_channels(&cfg, 5);
        let alloc = baseline_random(&cfg, &ch, 7).unwrap();
        assert!(check_feasibility(&alloc, &cfg, &ch).pass());
    }

    #[test]
    fn equal_power_caps_at_max_power_with_huge_budget() {
        let mut cfg = ScenarioConfig::paper_default(4, 4);
        cfg.energy_budget_j = vec![100.0; 4];
        let ch = generate_channels(&cfg, 9);
        let alloc = baseline_equal_power(&cfg, &ch).unwrap();
        for nn in 0..4 {
            for kk in 0..4 {
                if alloc.x[[nn, kk]] == 1 {
                    assert!((alloc.p[[nn, kk]] - cfg.max_power_w[kk]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn equal_power_respects_energy_budget() {
        let cfg = ScenarioConfig::paper_default(6, 6);
        let ch = generate_channels(&cfg, 11);
        let alloc = baseline_equal_power(&cfg, &ch).unwrap();
        let report = check_feasibility(&alloc, &cfg, &ch);
        assert!(report.pass(), "failures: {:?}", report.failures());
    }

    #[test]
    fn proposed_beats_baselines_on_average() {
        let mut proposed_total = 0.0;
        let mut random_total = 0.0;
        let mut equal_total = 0.0;
        let seeds = 6u64;
        for seed in 0..seeds {
            let cfg = ScenarioConfig::paper_default(6, 6);
            let ch = generate_channels(&cfg, 2000 + seed);
            let (a, _) = solve(&cfg, &ch, &SolveOptions::default()).unwrap();
            proposed_total += delay_objective(&a, &cfg, &ch);
            let r = baseline_random(&cfg, &ch, seed).unwrap();
            random_total += delay_objective(&r, &cfg, &ch);
            let e = baseline_equal_power(&cfg, &ch).unwrap();
            equal_total += delay_objective(&e, &cfg, &ch);
        }
        assert!(proposed_total <= random_total + 1e-9);
        assert!(proposed_total <= equal_total + 1e-9);
    }
}
