//! Built-in verification battery: slow, independent oracles cross-checked
//! against the production solvers. One pass/fail line per check.

use dtsync_core::harness::RawConfig;
use dtsync_core::model::{
    derive_seed, evaluate, generate_channels, EvalMode, ScenarioConfig,
};
use dtsync_core::oracles::{
    brute_force_scheduling, enumerate_basic_feasible, finite_difference_gradient,
    grid_search_single_hop,
};
use dtsync_core::single_device::{
    build_edge_costs, chain_schedule, pbar_solve, PBAR_RESIDUAL_TOL,
};
use dtsync_core::{
    alternating, convex::simplex_solve, offloading::build_offloading_lp, power,
    scheduling::solve_scheduling,
};
use ndarray::Array2;

fn unit(seed: u64, a: u64, b: u64) -> f64 {
    (derive_seed(seed, a, b) >> 11) as f64 / (1u64 << 53) as f64
}

fn report(name: &str, pass: bool, detail: &str) -> bool {
    println!("{}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

pub fn run_all(seed: u64) -> usize {
    let mut failures = 0usize;
    let mut check = |name: &str, pass: bool, detail: &str| {
        if !report(name, pass, detail) {
            failures += 1;
        }
    };

    // 1. Offloading LP vs basic-feasible-solution enumeration.
    {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for case in 0..10u64 {
            let mut cfg = ScenarioConfig::paper_default(2, 2);
            cfg.regularity_window = 1;
            cfg.regularity_fraction = vec![1.0; 2];
            cfg.resource_blocks = 2;
            cfg.accuracy_target = vec![0.1 + 0.2 * unit(seed, case, 0); 2];
            let ch = generate_channels(&cfg, derive_seed(seed, case, 1));
            let x = Array2::from_elem((2, 2), 1u8);
            let p = Array2::from_shape_fn((2, 2), |(_, k)| cfg.max_power_w[k]);
            let (lp, _) = match build_offloading_lp(&x, &p, &cfg, &ch) {
                Ok(v) => v,
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            let (_, obj, _) = simplex_solve(&lp);
            match enumerate_basic_feasible(&lp) {
                Ok(oracle) => {
                    let gap = (obj - oracle).abs() / oracle.abs().max(1.0);
                    worst = worst.max(gap);
                    ok &= gap <= 1e-7;
                }
                Err(_) => ok = false,
            }
        }
        check(
            "offloading simplex matches vertex enumeration",
            ok,
            &format!("worst relative gap {worst:.2e}"),
        );
    }

    // 2. Scheduling vs brute force.
    {
        let mut cfg = ScenarioConfig::paper_default(2, 4);
        cfg.resource_blocks = 1;
        cfg.regularity_window = 1;
        cfg.regularity_fraction = vec![1.0; 2];
        let mut near = 0usize;
        let trials = 10u64;
        for case in 0..trials {
            let t = Array2::from_shape_fn((4, 2), |(n, k)| {
                0.1 + 0.9 * unit(seed, case * 100 + n as u64, k as u64)
            });
            let (Ok((_, got)), Ok((_, best))) =
                (solve_scheduling(&t, &cfg), brute_force_scheduling(&t, &cfg))
            else {
                continue;
            };
            if got <= best * 1.05 + 1e-12 {
                near += 1;
            }
        }
        check(
            "scheduling dual+repair near brute force",
            near >= 9,
            &format!("{near}/{trials} within 5%"),
        );
    }

    // 3. Chain scheduling vs exhaustive enumeration.
    {
        let mut cfg = ScenarioConfig::paper_default(1, 8);
        cfg.regularity_window = 3;
        cfg.regularity_fraction = vec![1.0 / 3.0];
        let mut ok = true;
        for case in 0..10u64 {
            let ch = generate_channels(&cfg, derive_seed(seed, 300 + case, 0));
            let demand: Vec<f64> = (0..8).map(|n| 1e4 + 5e4 * unit(seed, case, n as u64)).collect();
            let costs = build_edge_costs(&demand, &cfg, &ch);
            let Ok((_, total)) = chain_schedule(&costs, &cfg) else {
                ok = false;
                continue;
            };
            // Exhaustive scan over all admissible chains.
            let tau = cfg.regularity_window;
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << 8) {
                let slots: Vec<usize> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
                if slots[0] > tau || 8 - (slots[slots.len() - 1] + 1) > tau {
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
            ok &= (total - best).abs() <= 1e-12;
        }
        check("chain shortest path equals exhaustive enumeration", ok, "10 cases");
    }

    // 4. Root-finder residual.
    {
        let cfg = ScenarioConfig::paper_default(1, 4);
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for case in 0..20u64 {
            let h = 1e-13 * (1.0 + 9.0 * unit(seed, 400 + case, 0));
            let d = 1e4 * (1.0 + 9.0 * unit(seed, 400 + case, 1));
            let infimum =
                d * cfg.noise_power_w * std::f64::consts::LN_2 / (cfg.bandwidth_hz * h);
            let rhs = infimum * (1.5 + 3.0 * unit(seed, 400 + case, 2));
            match pbar_solve(d, h, rhs, &cfg) {
                Ok(p) => {
                    let r = dtsync_core::model::rate(p, h, &cfg);
                    let res = (d * p / r - rhs).abs() / rhs;
                    worst = worst.max(res);
                    ok &= res <= PBAR_RESIDUAL_TOL;
                }
                Err(_) => ok = false,
            }
        }
        check(
            "pbar bisection residual",
            ok,
            &format!("worst relative residual {worst:.2e}"),
        );
    }

    // 5. Taylor linearization gradient.
    {
        let cfg = ScenarioConfig::paper_default(1, 2);
        let ms2 = cfg.waterfall_threshold * cfg.noise_power_w;
        let h = 3e-11;
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for case in 0..20u64 {
            let q0 = 1e-4 + 1e-2 * unit(seed, 500 + case, 0);
            let t0 = 0.05 + 0.9 * unit(seed, 500 + case, 1);
            let truth = |v: &[f64]| {
                let (q, t) = (q0 * (1.0 + v[0]), t0 * (1.0 + v[1]));
                (-ms2 * t / (q * h)).exp()
            };
            let fd = finite_difference_gradient(&truth, &[0.0, 0.0], 1e-6);
            let step = 1e-9;
            let base = power::taylor_expected_success(q0, t0, q0, t0, h, &cfg).unwrap();
            let dq = (power::taylor_expected_success(q0 + step * q0, t0, q0, t0, h, &cfg).unwrap()
                - base)
                / step;
            let dt = (power::taylor_expected_success(q0, t0 + step * t0, q0, t0, h, &cfg).unwrap()
                - base)
                / step;
            let eq = (dq - fd[0]).abs() / fd[0].abs().max(1e-12);
            let et = (dt - fd[1]).abs() / fd[1].abs().max(1e-12);
            worst = worst.max(eq.max(et));
            ok &= eq <= 1e-4 && et <= 1e-4;
        }
        check(
            "Taylor linearization gradient vs finite differences",
            ok,
            &format!("worst relative error {worst:.2e}"),
        );
    }

    // 6. Single-hop SCA vs grid search.
    {
        let raw = RawConfig::default();
        let mut cfg = raw.to_scenario().unwrap();
        cfg.accuracy_target = vec![0.0; cfg.slot_count];
        let ch = generate_channels(&cfg, derive_seed(seed, 600, 0));
        let h = ch.h[[0, 0]];
        let r = dtsync_core::model::rate(cfg.max_power_w[0], h, &cfg);
        let d = 0.4 * r * cfg.slot_duration_s;
        let ok = match grid_search_single_hop(d, h, cfg.energy_budget_j[0], &cfg, 400) {
            Ok(oracle) => (d / r) <= oracle * 1.02 + 1e-12,
            Err(_) => false,
        };
        check("single-hop delay vs grid search", ok, "paper-default channel");
    }

    // 7. Monotone alternating trace and feasibility.
    {
        let cfg = ScenarioConfig::paper_default(6, 6);
        let ch = generate_channels(&cfg, derive_seed(seed, 700, 0));
        let ok = match alternating::solve(&cfg, &ch, &alternating::SolveOptions::default()) {
            Ok((alloc, trace)) => {
                let monotone = trace.objectives.windows(2).all(|w| w[1] <= w[0] + 1e-9);
                let feasible =
                    dtsync_core::model::check_feasibility(&alloc, &cfg, &ch).pass();
                monotone && feasible
            }
            Err(_) => false,
        };
        check("alternating solver monotone and feasible", ok, "K=6, N=6");
    }

    // 8. Monte Carlo consistency of the expected-delivery substitution.
    {
        let mut cfg = ScenarioConfig::paper_default(3, 3);
        cfg.accuracy_exponent = 1.0; // linear accuracy: no Jensen gap
        cfg.accuracy_target = vec![0.4; 3];
        let ch = generate_channels(&cfg, derive_seed(seed, 800, 0));
        let x = Array2::from_elem((3, 3), 1u8);
        let p = Array2::from_shape_fn((3, 3), |(_, k)| cfg.max_power_w[k]);
        let mut worst: f64 = 0.0;
        let ok = match dtsync_core::offloading::solve_offloading(&x, &p, &cfg, &ch)
            .map(|(d, _, _)| dtsync_core::Allocation { x, p, d })
        {
            Ok(alloc) => {
                let exp = evaluate(&alloc, &cfg, &ch, EvalMode::Expected).unwrap();
                let mc = evaluate(
                    &alloc,
                    &cfg,
                    &ch,
                    EvalMode::MonteCarlo {
                        seed: derive_seed(seed, 800, 1),
                        trials: 10_000,
                    },
                )
                .unwrap();
                for (a, b) in exp
                    .per_slot_accuracy
                    .iter()
                    .zip(mc.per_slot_accuracy.iter())
                {
                    worst = worst.max((a - b).abs());
                }
                worst <= 3.0 * 0.5 / (10_000f64).sqrt() + 1e-9
            }
            Err(_) => false,
        };
        check(
            "Monte Carlo accuracy consistent with expectation",
            ok,
            &format!("10k trials, worst gap {worst:.3e}"),
        );
    }

    failures
}
