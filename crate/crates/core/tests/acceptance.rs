//! Acceptance battery: one pass/fail line per criterion, with pinned
//! tolerances. Run with `cargo test -p dtsync-core --test acceptance --
//! --nocapture` to see the per-criterion lines on success.

use ndarray::Array2;

use dtsync_core::convex::simplex_solve;
use dtsync_core::harness::{
    apply_param, rows_to_csv, run_cell, run_sweep, Algorithm, RawConfig, SweepParam, SweepSpec,
};
use dtsync_core::model::{
    check_feasibility, derive_seed, evaluate, generate_channels, rate, ChannelRealization,
    EvalMode, ScenarioConfig,
};
use dtsync_core::offloading::{build_offloading_lp, solve_offloading};
use dtsync_core::oracles::{
    brute_force_scheduling, enumerate_basic_feasible, finite_difference_gradient,
    grid_search_single_hop,
};
use dtsync_core::power::{
    solve_power_control, taylor_expected_success, true_violation, TRUE_FEAS_TOL,
};
use dtsync_core::single_device::{
    build_edge_costs, chain_schedule, edge_delay, initial_slot, pbar_solve, PBAR_RESIDUAL_TOL,
};
use dtsync_core::{alternating, scheduling, Allocation};

const SEED: u64 = 7;

/// Deterministic uniform in [0, 1) derived from the global seed.
fn unit(a: u64, b: u64) -> f64 {
    (derive_seed(SEED, a, b) >> 11) as f64 / (1u64 << 53) as f64
}

/// Tracks feasibility of every allocation produced by the battery.
#[derive(Default)]
struct FeasTracker {
    checked: usize,
    failed: usize,
}

impl FeasTracker {
    fn record(&mut self, alloc: &Allocation, cfg: &ScenarioConfig, ch: &ChannelRealization) {
        self.checked += 1;
        if !check_feasibility(alloc, cfg, ch).pass() {
            self.failed += 1;
        }
    }
}

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn full_power_matrix(x: &Array2<u8>, cfg: &ScenarioConfig) -> Array2<f64> {
    Array2::from_shape_fn(x.dim(), |(nn, kk)| {
        if x[[nn, kk]] == 1 {
            cfg.max_power_w[kk]
        } else {
            0.0
        }
    })
}

/// 1. Alternating solver: monotone nonincreasing objective over 50 seeds.
fn c01_monotone_convergence(feas: &mut FeasTracker) -> Outcome {
    let mut worst_uptick: f64 = 0.0;
    let mut solved = 0usize;
    for seed in 0..50u64 {
        let cfg = ScenarioConfig::paper_default(10, 10);
        let ch = generate_channels(&cfg, seed);
        match alternating::solve(&cfg, &ch, &alternating::SolveOptions::default()) {
            Ok((alloc, trace)) => {
                for w in trace.objectives.windows(2) {
                    worst_uptick = worst_uptick.max(w[1] - w[0]);
                }
                feas.record(&alloc, &cfg, &ch);
                solved += 1;
            }
            Err(_) => {}
        }
    }
    Outcome {
        name: "01 alternating objective monotone over 50 seeds",
        pass: solved == 50 && worst_uptick <= 1e-9,
        detail: format!("{solved}/50 solved, worst uptick {worst_uptick:.2e}"),
    }
}

/// 2. Scheduling within 5% of brute force on >= 95 of 100 small instances.
fn c02_scheduling_near_optimal() -> Outcome {
    let mut cfg = ScenarioConfig::paper_default(2, 4);
    cfg.resource_blocks = 1;
    cfg.regularity_window = 1;
    let mut near = 0usize;
    let mut feasible = 0usize;
    for case in 0..100u64 {
        let t = Array2::from_shape_fn((4, 2), |(n, k)| {
            0.1 + 0.9 * unit(case * 100 + n as u64, 1000 + k as u64)
        });
        let (Ok((got_x, got)), Ok((_, best))) =
            (scheduling::solve_scheduling(&t, &cfg), brute_force_scheduling(&t, &cfg))
        else {
            continue;
        };
        if scheduling::schedule_feasible(&got_x, &cfg) {
            feasible += 1;
        }
        if got <= best * 1.05 + 1e-12 {
            near += 1;
        }
    }
    Outcome {
        name: "02 scheduling within 5% of brute force (N=4, K=2, K0=1, tau=1)",
        pass: near >= 95 && feasible == 100,
        detail: format!("{near}/100 within 5%, {feasible}/100 feasible"),
    }
}

/// 3. Offloading LP matches vertex enumeration to 1e-7 on 100 instances.
fn c03_offloading_exact(feas: &mut FeasTracker) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = 0usize;
    for case in 0..100u64 {
        let mut cfg = ScenarioConfig::paper_default(2, 2);
        cfg.regularity_window = 1;
        cfg.regularity_fraction = vec![1.0; 2];
        cfg.resource_blocks = 2;
        cfg.accuracy_target = vec![0.1 + 0.2 * unit(case, 2000); 2];
        let ch = generate_channels(&cfg, derive_seed(SEED, case, 2001));
        let x = Array2::from_elem((2, 2), 1u8);
        let p = full_power_matrix(&x, &cfg);
        let Ok((lp, _)) = build_offloading_lp(&x, &p, &cfg, &ch) else {
            continue;
        };
        let (_, obj, _) = simplex_solve(&lp);
        let Ok(oracle) = enumerate_basic_feasible(&lp) else {
            continue;
        };
        let gap = (obj - oracle).abs() / oracle.abs().max(1.0);
        worst = worst.max(gap);
        if gap <= 1e-7 {
            ok += 1;
        }
        if let Ok((d, _, _)) = solve_offloading(&x, &p, &cfg, &ch) {
            feas.record(&Allocation { x, p, d }, &cfg, &ch);
        }
    }
    Outcome {
        name: "03 offloading simplex matches vertex enumeration (1e-7)",
        pass: ok == 100,
        detail: format!("{ok}/100, worst relative gap {worst:.2e}"),
    }
}

/// 4. Power SCA: true constraints within 1e-5, monotone traces, and a
///    single-pair instance within 2% of an exhaustive grid.
fn c04_power_sca(feas: &mut FeasTracker) -> Outcome {
    let mut worst_violation: f64 = 0.0;
    let mut monotone = true;
    let mut solved = 0usize;
    for seed in 0..30u64 {
        let cfg = ScenarioConfig::paper_default(4, 4);
        let ch = generate_channels(&cfg, derive_seed(SEED, 400, seed));
        let Ok(x) = scheduling::round_robin_schedule(&cfg) else {
            continue;
        };
        let p_full = full_power_matrix(&x, &cfg);
        let Ok((d, _, _)) = solve_offloading(&x, &p_full, &cfg, &ch) else {
            continue;
        };
        let Ok((p, _, _, iterate)) = solve_power_control(&x, &d, &cfg, &ch, None) else {
            continue;
        };
        solved += 1;
        worst_violation = worst_violation.max(true_violation(&iterate.q, &iterate.t, &x, &d, &cfg, &ch));
        for w in iterate.objectives.windows(2) {
            monotone &= w[1] <= w[0] + 1e-9;
        }
        feas.record(&Allocation { x, p, d }, &cfg, &ch);
    }

    // Single-pair instance with a binding energy budget vs grid search.
    let mut cfg = ScenarioConfig::paper_default(1, 1);
    cfg.regularity_window = 1;
    cfg.regularity_fraction = vec![0.5];
    cfg.accuracy_target = vec![0.0];
    let ch = generate_channels(&cfg, 12);
    let h = ch.h[[0, 0]];
    let p_max = cfg.max_power_w[0];
    let r_full = rate(p_max, h, &cfg);
    let d_bits = 0.6 * r_full * cfg.slot_duration_s;
    cfg.energy_budget_j = vec![0.5 * p_max * d_bits / r_full];
    let x = Array2::from_elem((1, 1), 1u8);
    let d = Array2::from_elem((1, 1), d_bits);
    let mut p0 = p_max;
    let mut t_init = d_bits / r_full;
    while p0 * t_init > cfg.energy_budget_j[0] || t_init > cfg.slot_duration_s {
        p0 *= 0.8;
        t_init = d_bits / rate(p0, h, &cfg);
        assert!(p0 > 1e-6 * p_max, "no feasible warm start");
    }
    let p_init = Array2::from_elem((1, 1), p0);
    let t0 = Array2::from_elem((1, 1), t_init);
    let pair_ok = match (
        solve_power_control(&x, &d, &cfg, &ch, Some((&p_init, &t0))),
        grid_search_single_hop(d_bits, h, cfg.energy_budget_j[0], &cfg, 400),
    ) {
        (Ok((_, _, obj, _)), Ok(oracle)) => obj <= oracle * 1.02 + 1e-12,
        _ => false,
    };

    Outcome {
        name: "04 power SCA true-feasible (1e-5), monotone, within 2% of grid",
        pass: solved == 30 && worst_violation <= TRUE_FEAS_TOL && monotone && pair_ok,
        detail: format!(
            "{solved}/30 solved, worst true violation {worst_violation:.2e}, monotone {monotone}, pair vs grid {pair_ok}"
        ),
    }
}

/// 5. Taylor linearization: gradient matches finite differences to 1e-4 at
///    100 points; halving the perturbation shrinks the error ~4x.
fn c05_taylor_linearization() -> Outcome {
    let cfg = ScenarioConfig::paper_default(1, 2);
    let ms2 = cfg.waterfall_threshold * cfg.noise_power_w;
    let h = 3e-11;
    let mut worst_grad: f64 = 0.0;
    let mut grad_ok = 0usize;
    for case in 0..100u64 {
        let q0 = 1e-4 + 1e-2 * unit(500 + case, 0);
        let t0 = 0.05 + 0.9 * unit(500 + case, 1);
        let truth = |v: &[f64]| {
            let (q, t) = (q0 * (1.0 + v[0]), t0 * (1.0 + v[1]));
            (-ms2 * t / (q * h)).exp()
        };
        let fd = finite_difference_gradient(&truth, &[0.0, 0.0], 1e-6);
        let step = 1e-9;
        let base = taylor_expected_success(q0, t0, q0, t0, h, &cfg).unwrap();
        let dq =
            (taylor_expected_success(q0 + step * q0, t0, q0, t0, h, &cfg).unwrap() - base) / step;
        let dt =
            (taylor_expected_success(q0, t0 + step * t0, q0, t0, h, &cfg).unwrap() - base) / step;
        let eq = (dq - fd[0]).abs() / fd[0].abs().max(1e-12);
        let et = (dt - fd[1]).abs() / fd[1].abs().max(1e-12);
        worst_grad = worst_grad.max(eq.max(et));
        if eq <= 1e-4 && et <= 1e-4 {
            grad_ok += 1;
        }
    }

    // Second-order remainder: error ratio under step halving in [3.5, 4.5].
    let mut ratio_ok = 0usize;
    let mut worst_ratio = f64::NAN;
    for case in 0..20u64 {
        let q0 = 1e-4 + 1e-2 * unit(510 + case, 0);
        let t0 = 0.05 + 0.9 * unit(510 + case, 1);
        let err = |delta: f64| {
            let (q, t) = (q0 * (1.0 + delta), t0 * (1.0 - delta));
            let lin = taylor_expected_success(q, t, q0, t0, h, &cfg).unwrap();
            (lin - (-ms2 * t / (q * h)).exp()).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        if (3.5..=4.5).contains(&ratio) {
            ratio_ok += 1;
        } else {
            worst_ratio = ratio;
        }
    }
    Outcome {
        name: "05 Taylor gradient 1e-4 at 100 points; halving ratio in [3.5, 4.5]",
        pass: grad_ok == 100 && ratio_ok == 20,
        detail: format!(
            "gradient {grad_ok}/100 (worst {worst_grad:.2e}), ratio {ratio_ok}/20 (worst outlier {worst_ratio:.2})"
        ),
    }
}

/// 6. Single-device pipeline: chain DP exact on 100 instances, pbar residual
///    within 1e-10, edge delay within 2% of grid search on 20 cases.
fn c06_single_device_pipeline() -> Outcome {
    // (a) chain shortest path vs exhaustive enumeration.
    let mut chain_ok = 0usize;
    for case in 0..100u64 {
        let n = 4 + (case as usize % 9); // 4..=12
        let tau = 1 + (case as usize % 3); // 1..=3
        let mut cfg = ScenarioConfig::paper_default(1, n);
        cfg.regularity_window = tau;
        cfg.regularity_fraction = vec![1.0 / (tau as f64 + 1.0)];
        let ch = generate_channels(&cfg, derive_seed(SEED, 600, case));
        let demand: Vec<f64> = (0..n)
            .map(|i| 1e4 + 5e4 * unit(600 + case, i as u64))
            .collect();
        let costs = build_edge_costs(&demand, &cfg, &ch);
        let dp = chain_schedule(&costs, &cfg);
        // Exhaustive scan over admissible chains.
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << n) {
            let slots: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            if slots[0] > tau || n - (slots[slots.len() - 1] + 1) > tau {
                continue;
            }
            let mut prev = 0usize;
            let mut sum = 0.0;
            let mut feasible = true;
            for &s in &slots {
                let q = s + 1;
                if q - prev > tau + 1 {
                    feasible = false;
                    break;
                }
                match costs.cost[prev][q] {
                    Some(c) => sum += c,
                    None => {
                        feasible = false;
                        break;
                    }
                }
                prev = q;
            }
            if feasible {
                best = best.min(sum);
            }
        }
        match dp {
            Ok((_, total)) if best.is_finite() && (total - best).abs() <= 1e-12 => chain_ok += 1,
            Err(_) if !best.is_finite() => chain_ok += 1,
            _ => {}
        }
    }

    // (b) pbar residual.
    let cfg = ScenarioConfig::paper_default(1, 4);
    let mut worst_res: f64 = 0.0;
    let mut pbar_ok = 0usize;
    for case in 0..20u64 {
        let h = 1e-13 * (1.0 + 9.0 * unit(610 + case, 0));
        let d = 1e4 * (1.0 + 9.0 * unit(610 + case, 1));
        let infimum = d * cfg.noise_power_w * std::f64::consts::LN_2 / (cfg.bandwidth_hz * h);
        let rhs = infimum * (1.5 + 3.0 * unit(610 + case, 2));
        if let Ok(p) = pbar_solve(d, h, rhs, &cfg) {
            let res = (d * p / rate(p, h, &cfg) - rhs).abs() / rhs;
            worst_res = worst_res.max(res);
            if res <= PBAR_RESIDUAL_TOL {
                pbar_ok += 1;
            }
        }
    }

    // (c) edge delay vs grid, including energy-binding cases.
    let mut edge_ok = 0usize;
    for case in 0..20u64 {
        let n = 4;
        let mut cfg = ScenarioConfig::paper_default(1, n);
        let tau = cfg.regularity_window;
        let ch = generate_channels(&cfg, derive_seed(SEED, 620, case));
        let h = ch.h[[0, 0]];
        let p_max = cfg.max_power_w[0];
        let r_full = rate(p_max, h, &cfg);
        let d = (0.3 + 0.5 * unit(620 + case, 0)) * r_full * cfg.slot_duration_s;
        let full_energy = p_max * d / r_full;
        let hop_budget = (0.5 + 1.0 * unit(620 + case, 1)) * full_energy;
        cfg.energy_budget_j = vec![hop_budget * n as f64 / (tau as f64 + 1.0)];
        match (
            edge_delay(0, 1, d, &cfg, &ch),
            grid_search_single_hop(d, h, hop_budget, &cfg, 800),
        ) {
            (Ok(analytic), Ok(grid)) => {
                if analytic <= grid + 1e-9 && grid <= analytic * 1.02 + 1e-9 {
                    edge_ok += 1;
                }
            }
            (Err(_), Err(_)) => edge_ok += 1,
            _ => {}
        }
    }

    Outcome {
        name: "06 chain DP exact; pbar residual 1e-10; edge delay within 2% of grid",
        pass: chain_ok == 100 && pbar_ok == 20 && edge_ok == 20,
        detail: format!(
            "chain {chain_ok}/100, pbar {pbar_ok}/20 (worst {worst_res:.2e}), edge {edge_ok}/20"
        ),
    }
}

/// 7. Initial slot selection matches exhaustive search on 50 seeds.
fn c07_initial_slot() -> Outcome {
    let cfg = ScenarioConfig::paper_default(1, 6);
    let window = (cfg.regularity_window + 1).min(cfg.slot_count);
    let mut ok = 0usize;
    for seed in 0..50u64 {
        let ch = generate_channels(&cfg, derive_seed(SEED, 700, seed));
        let best = (0..window)
            .max_by(|&a, &b| ch.h[[a, 0]].partial_cmp(&ch.h[[b, 0]]).unwrap())
            .unwrap();
        if initial_slot(&cfg, &ch).map_or(false, |slot| slot == best) {
            ok += 1;
        }
    }
    Outcome {
        name: "07 initial slot matches exhaustive argmax over the first window",
        pass: ok == 50,
        detail: format!("{ok}/50 seeds"),
    }
}

/// Mean delay of the proposed solver over a fixed seed set, or an error
/// message for the first failing cell.
fn mean_delay(
    raw: &RawConfig,
    seeds: std::ops::Range<u64>,
    feas: &mut FeasTracker,
) -> Result<f64, String> {
    let cfg = raw.to_scenario().map_err(|e| e.to_string())?;
    let mut total = 0.0;
    let count = seeds.end - seeds.start;
    for seed in seeds {
        let ch = generate_channels(&cfg, seed);
        let (alloc, _) = alternating::solve(&cfg, &ch, &alternating::SolveOptions::default())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        total += alternating::delay_objective(&alloc, &cfg, &ch);
        feas.record(&alloc, &cfg, &ch);
    }
    Ok(total / count as f64)
}

/// 8. Parameter trends on 20-seed means, plus structural rejection of a
///    window-infeasible resource-block count.
fn c08_parameter_trends(feas: &mut FeasTracker) -> Outcome {
    let base = RawConfig::default();
    let seeds = 100..120u64;
    let slack = 1.02; // 2% tolerance on successive means

    let trend = |base: &RawConfig,
                 values: &[f64],
                 param: SweepParam,
                 increasing: bool,
                 feas: &mut FeasTracker|
     -> Result<bool, String> {
        let mut prev: Option<f64> = None;
        for &v in values {
            let raw = apply_param(base, param, v).map_err(|e| e.to_string())?;
            let mean = mean_delay(&raw, seeds.clone(), feas)?;
            if let Some(p) = prev {
                let ok = if increasing {
                    mean * slack >= p
                } else {
                    mean <= p * slack
                };
                if !ok {
                    return Ok(false);
                }
            }
            prev = Some(mean);
        }
        Ok(true)
    };

    // At the default scenario, 2 resource blocks cannot satisfy the
    // scheduling-regularity demand in any window; the config must be
    // rejected structurally rather than attempted.
    let rejected = apply_param(&base, SweepParam::ResourceBlocks, 2.0)
        .and_then(|raw| raw.to_scenario())
        .is_err();

    let power = trend(
        &base,
        &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        SweepParam::MaxPowerDbm,
        false,
        feas,
    );
    // The device sweep starts below the default K0=5, so it uses K0=4
    // (K0 <= K is required for the smallest point).
    let device_base: RawConfig = serde_json::from_str(r#"{"K0": 4}"#).unwrap();
    let devices = trend(
        &device_base,
        &[4.0, 6.0, 8.0, 10.0, 12.0, 14.0],
        SweepParam::DeviceCount,
        true,
        feas,
    );
    let blocks = trend(
        &base,
        &[3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
        SweepParam::ResourceBlocks,
        false,
        feas,
    );
    let detail = format!(
        "power {power:?}, devices {devices:?}, blocks {blocks:?}, K0=2 rejected {rejected}"
    );
    Outcome {
        name: "08 delay trends in power, device count, resource blocks (20-seed means)",
        pass: power == Ok(true) && devices == Ok(true) && blocks == Ok(true) && rejected,
        detail,
    }
}

/// 9. Proposed solver at least matches both baselines on >= 48 of 50 seeds.
fn c09_beats_baselines(feas: &mut FeasTracker) -> Outcome {
    let cfg = ScenarioConfig::paper_default(10, 10);
    let mut vs_equal = 0usize;
    let mut vs_random = 0usize;
    let mut impr_equal = Vec::new();
    let mut impr_random = Vec::new();
    let mut solved = 0usize;
    for seed in 200..250u64 {
        let ch = generate_channels(&cfg, seed);
        let Ok((a, _)) = alternating::solve(&cfg, &ch, &alternating::SolveOptions::default())
        else {
            continue;
        };
        let Ok(e) = dtsync_core::harness::baseline_equal_power(&cfg, &ch) else {
            continue;
        };
        let Ok(r) = dtsync_core::harness::baseline_random(&cfg, &ch, derive_seed(seed, 9, 1))
        else {
            continue;
        };
        solved += 1;
        let (da, de, dr) = (
            alternating::delay_objective(&a, &cfg, &ch),
            alternating::delay_objective(&e, &cfg, &ch),
            alternating::delay_objective(&r, &cfg, &ch),
        );
        if da <= de + 1e-9 {
            vs_equal += 1;
        }
        if da <= dr + 1e-9 {
            vs_random += 1;
        }
        impr_equal.push((de - da) / de * 100.0);
        impr_random.push((dr - da) / dr * 100.0);
        feas.record(&a, &cfg, &ch);
        feas.record(&e, &cfg, &ch);
        feas.record(&r, &cfg, &ch);
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let (me, mr) = (median(&mut impr_equal), median(&mut impr_random));
    Outcome {
        name: "09 proposed <= baselines on >= 48/50 seeds",
        pass: solved == 50 && vs_equal >= 48 && vs_random >= 48,
        detail: format!(
            "{solved}/50 solved; vs equal_power {vs_equal}/50 (median improvement {me:.1}%), vs random {vs_random}/50 (median {mr:.1}%)"
        ),
    }
}

/// 10. Every allocation produced by criteria 1-9 passes the feasibility
///     checker (tolerance 1e-6, built into the checker).
fn c10_feasibility(feas: &FeasTracker) -> Outcome {
    Outcome {
        name: "10 all produced allocations pass the feasibility checker (1e-6)",
        pass: feas.checked > 0 && feas.failed == 0,
        detail: format!("{} checked, {} failed", feas.checked, feas.failed),
    }
}

/// 11. Expected accuracy within 3 standard errors of 10,000-trial Monte
///     Carlo sampling on 10 allocations (linear accuracy: no Jensen gap).
fn c11_monte_carlo_consistency() -> Outcome {
    let mut ok = 0usize;
    let mut worst: f64 = 0.0;
    let bound = 3.0 * 0.5 / (10_000f64).sqrt() + 1e-9;
    for seed in 0..10u64 {
        let mut cfg = ScenarioConfig::paper_default(3, 3);
        cfg.accuracy_exponent = 1.0;
        cfg.accuracy_target = vec![0.4; 3];
        let ch = generate_channels(&cfg, derive_seed(SEED, 1100, seed));
        let x = Array2::from_elem((3, 3), 1u8);
        let p = full_power_matrix(&x, &cfg);
        let Ok((d, _, _)) = solve_offloading(&x, &p, &cfg, &ch) else {
            continue;
        };
        let alloc = Allocation { x, p, d };
        let exp = evaluate(&alloc, &cfg, &ch, EvalMode::Expected).unwrap();
        let mc = evaluate(
            &alloc,
            &cfg,
            &ch,
            EvalMode::MonteCarlo {
                seed: derive_seed(SEED, 1101, seed),
                trials: 10_000,
            },
        )
        .unwrap();
        let gap = exp
            .per_slot_accuracy
            .iter()
            .zip(mc.per_slot_accuracy.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(gap);
        if gap <= bound {
            ok += 1;
        }
    }
    Outcome {
        name: "11 Monte Carlo accuracy within 3 SE of expectation (10 allocations)",
        pass: ok == 10,
        detail: format!("{ok}/10, worst gap {worst:.3e} (bound {bound:.3e})"),
    }
}

/// 12. Determinism: repeated runs byte-reproduce the CSV output (excluding
///     the wall-clock column).
fn c12_determinism() -> Outcome {
    let strip_wall = |csv: &str| -> String {
        csv.lines()
            .map(|line| {
                let mut fields: Vec<&str> = line.split(',').collect();
                fields.pop();
                fields.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let spec: SweepSpec = serde_json::from_str(
        r#"{
            "param": "max_power_dbm",
            "values": [1.0, 4.0],
            "seeds": [1, 2],
            "algorithms": ["proposed", "random", "equal_power"],
            "base": {"K": 4, "N": 5, "tau": 2, "beta": 0.5, "K0": 3}
        }"#,
    )
    .unwrap();
    let base = spec.base.clone().unwrap();
    let first = strip_wall(&rows_to_csv(&run_sweep(&spec, &base, EvalMode::Expected)));
    let second = strip_wall(&rows_to_csv(&run_sweep(&spec, &base, EvalMode::Expected)));
    let sweep_ok = first == second;

    let single_raw: RawConfig =
        serde_json::from_str(r#"{"K": 1, "N": 6, "beta": 0.25, "tau": 3, "K0": 1}"#).unwrap();
    let single_cfg = single_raw.to_scenario().unwrap();
    let row_a = run_cell(
        &single_cfg,
        5,
        Algorithm::SingleDevice,
        EvalMode::Expected,
        "none",
        0.0,
        0,
    );
    let row_b = run_cell(
        &single_cfg,
        5,
        Algorithm::SingleDevice,
        EvalMode::Expected,
        "none",
        0.0,
        0,
    );
    let single_ok = strip_wall(&rows_to_csv(std::slice::from_ref(&row_a)))
        == strip_wall(&rows_to_csv(std::slice::from_ref(&row_b)));

    Outcome {
        name: "12 repeated runs byte-reproduce CSV output (wall clock excluded)",
        pass: sweep_ok && single_ok,
        detail: format!(
            "sweep {sweep_ok}, single-device {single_ok} (status {})",
            row_a.status
        ),
    }
}

#[test]
fn acceptance() {
    let mut feas = FeasTracker::default();
    let mut outcomes = Vec::new();
    let mut timed = |f: &mut dyn FnMut(&mut FeasTracker) -> Outcome, feas: &mut FeasTracker| {
        let clock = std::time::Instant::now();
        let mut out = f(feas);
        out.detail = format!("{}; {:.1}s", out.detail, clock.elapsed().as_secs_f64());
        outcomes.push(out);
    };

    timed(&mut |f| c01_monotone_convergence(f), &mut feas);
    timed(&mut |_| c02_scheduling_near_optimal(), &mut feas);
    timed(&mut |f| c03_offloading_exact(f), &mut feas);
    timed(&mut |f| c04_power_sca(f), &mut feas);
    timed(&mut |_| c05_taylor_linearization(), &mut feas);
    timed(&mut |_| c06_single_device_pipeline(), &mut feas);
    timed(&mut |_| c07_initial_slot(), &mut feas);
    timed(&mut |f| c08_parameter_trends(f), &mut feas);
    timed(&mut |f| c09_beats_baselines(f), &mut feas);
    timed(&mut |f| c10_feasibility(f), &mut feas);
    timed(&mut |_| c11_monte_carlo_consistency(), &mut feas);
    timed(&mut |_| c12_determinism(), &mut feas);

    let mut failures = 0usize;
    for out in &outcomes {
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("{verdict}: {} ({})", out.name, out.detail);
        if !out.pass {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
