//! Data-offloading subproblem: with scheduling and power fixed, choose the
//! offloaded data matrix d by linear programming with per-slot max-delay
//! slacks, solved by the in-house simplex.

use ndarray::Array2;

use crate::convex::{simplex_solve, LinearProgram, Outcome, SolveStatus};
use crate::model::{rate, success_probability, ChannelRealization, ScenarioConfig};
use crate::{Error, Result};

/// Index maps between (slot, device) data variables / slot slacks and LP
/// columns, plus cached rates and expected-success factors.
#[derive(Debug, Clone)]
pub struct OffloadingLpMap {
    /// Pairs (n, k) carrying a data variable, in column order.
    pub pairs: Vec<(usize, usize)>,
    /// Column index of each pair's data variable (usize::MAX when fixed 0).
    pub col_of_pair: Array2<usize>,
    /// Column index of slack y_n, per slot.
    pub y_col: Vec<usize>,
    /// Cached rates r_nk at the given powers.
    pub rates: Array2<f64>,
    /// Cached expected-success factors s_nk.
    pub success: Array2<f64>,
    /// Data variables are expressed in units of `data_scale` bits.
    pub data_scale: f64,
    /// Slack variables are expressed in units of `time_scale` seconds.
    pub time_scale: f64,
}

/// Builds the offloading LP at fixed (x, p). Variables exist only for
/// scheduled pairs with positive rate; all other d are fixed to zero.
/// The LP is scaled internally: data in units of the largest cumulative
/// arrival, slacks in units of T0.
pub fn build_offloading_lp(
    x: &Array2<u8>,
    p: &Array2<f64>,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<(LinearProgram, OffloadingLpMap)> {
    let n = config.slot_count;
    let k = config.device_count;
    if x.dim() != (n, k) || p.dim() != (n, k) {
        return Err(Error::ShapeMismatch("offloading inputs must be N x K".into()));
    }

    let mut rates = Array2::zeros((n, k));
    let mut success = Array2::zeros((n, k));
    for nn in 0..n {
        for kk in 0..k {
            rates[[nn, kk]] = rate(p[[nn, kk]], channels.h[[nn, kk]], config);
            success[[nn, kk]] = success_probability(p[[nn, kk]], channels.h[[nn, kk]], config);
        }
    }

    let data_scale = (0..k)
        .map(|kk| config.cumulative_arrivals(n - 1, kk))
        .fold(1.0f64, f64::max);
    let time_scale = config.slot_duration_s;

    let mut pairs = Vec::new();
    let mut col_of_pair = Array2::from_elem((n, k), usize::MAX);
    for nn in 0..n {
        for kk in 0..k {
            if x[[nn, kk]] == 1 && rates[[nn, kk]] > 0.0 {
                col_of_pair[[nn, kk]] = pairs.len();
                pairs.push((nn, kk));
            }
        }
    }
    let nd = pairs.len();
    let y_col: Vec<usize> = (0..n).map(|nn| nd + nn).collect();
    let n_vars = nd + n;

    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();

    // y_n >= d_nk / r_nk for every data variable.
    for (col, &(nn, kk)) in pairs.iter().enumerate() {
        let mut row = vec![0.0; n_vars];
        row[col] = data_scale / (rates[[nn, kk]] * time_scale);
        row[y_col[nn]] = -1.0;
        a.push(row);
        b.push(0.0);
    }

    // Cumulative accuracy lower bounds per slot.
    for nn in 0..n {
        let required = config.required_ratio(nn) * config.cumulative_arrivals_total(nn);
        let mut row = vec![0.0; n_vars];
        for (col, &(i, kk)) in pairs.iter().enumerate() {
            if i <= nn {
                row[col] = -success[[i, kk]];
            }
        }
        a.push(row);
        b.push(-required / data_scale);
    }

    // Energy budgets per device, normalized by Q_k.
    for kk in 0..k {
        let mut row = vec![0.0; n_vars];
        let mut nonzero = false;
        for (col, &(nn, kk2)) in pairs.iter().enumerate() {
            if kk2 == kk {
                row[col] =
                    p[[nn, kk]] * data_scale / (rates[[nn, kk]] * config.energy_budget_j[kk]);
                nonzero = true;
            }
        }
        if nonzero {
            a.push(row);
            b.push(1.0);
        }
    }

    // Cumulative delivered-data caps per (slot, device).
    for nn in 0..n {
        for kk in 0..k {
            let mut row = vec![0.0; n_vars];
            let mut nonzero = false;
            for (col, &(i, kk2)) in pairs.iter().enumerate() {
                if kk2 == kk && i <= nn {
                    row[col] = success[[i, kk]];
                    nonzero = true;
                }
            }
            if nonzero {
                a.push(row);
                b.push(config.cumulative_arrivals(nn, kk) / data_scale);
            }
        }
    }

    // Bounds: 0 <= d <= min(r*T0, cumulative arrivals); y >= 0.
    let mut lower = vec![0.0; n_vars];
    let mut upper = vec![f64::INFINITY; n_vars];
    for (col, &(nn, kk)) in pairs.iter().enumerate() {
        let duration_cap = rates[[nn, kk]] * config.slot_duration_s;
        let coupling_cap = config.cumulative_arrivals(nn, kk);
        upper[col] = duration_cap.min(coupling_cap) / data_scale;
        lower[col] = 0.0;
    }

    let mut c = vec![0.0; n_vars];
    for nn in 0..n {
        c[y_col[nn]] = 1.0;
    }

    Ok((
        LinearProgram {
            c,
            a,
            b,
            lower,
            upper,
        },
        OffloadingLpMap {
            pairs,
            col_of_pair,
            y_col,
            rates,
            success,
            data_scale,
            time_scale,
        },
    ))
}

/// Diagnoses the first slot whose cumulative accuracy demand exceeds what
/// the scheduled pairs can possibly deliver.
fn first_unreachable_slot(
    map: &OffloadingLpMap,
    config: &ScenarioConfig,
    lp: &LinearProgram,
) -> Option<usize> {
    let n = config.slot_count;
    for nn in 0..n {
        let required = config.required_ratio(nn) * config.cumulative_arrivals_total(nn);
        let mut max_delivered = 0.0;
        for (col, &(i, kk)) in map.pairs.iter().enumerate() {
            if i <= nn {
                // Per-pair ceiling ignoring shared budgets: an upper bound.
                max_delivered += map.success[[i, kk]] * lp.upper[col] * map.data_scale;
            }
        }
        if max_delivered + 1e-9 * required.max(1.0) < required {
            return Some(nn);
        }
    }
    None
}

/// Solves the offloading LP and maps the solution back to matrix form.
pub fn solve_offloading(
    x: &Array2<u8>,
    p: &Array2<f64>,
    config: &ScenarioConfig,
    channels: &ChannelRealization,
) -> Result<(Array2<f64>, f64, SolveStatus)> {
    let (lp, map) = build_offloading_lp(x, p, config, channels)?;
    let (v, obj_scaled, status) = simplex_solve(&lp);
    match status.outcome {
        Outcome::Optimal => {}
        Outcome::Infeasible => {
            let slot = first_unreachable_slot(&map, config, &lp);
            return Err(Error::Infeasible {
                stage: "offloading",
                detail: "accuracy targets unreachable under the given schedule and power".into(),
                slot,
            });
        }
        other => {
            return Err(Error::Numerical(format!(
                "offloading simplex terminated with {other:?}"
            )));
        }
    }
    let n = config.slot_count;
    let k = config.device_count;
    let mut d = Array2::zeros((n, k));
    for (col, &(nn, kk)) in map.pairs.iter().enumerate() {
        d[[nn, kk]] = (v[col] * map.data_scale).max(0.0);
    }
    let objective = obj_scaled * map.time_scale;
    Ok((d, objective, status))
}
