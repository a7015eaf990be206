//! Independent brute-force and numeric-check references used by the test
//! suites and the CLI `verify` subcommand. Intentionally slow and obviously
//! correct; these depend only on the `model` formulas and `convex` problem
//! types, never on solver code paths.

use ndarray::Array2;

use crate::convex::LinearProgram;
use crate::model::{rate, ScenarioConfig};
use crate::{Error, Result};

/// Enumeration and grid caps; exceeding them is a configuration error,
/// never silent truncation.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    /// Max enumeration states (binary matrices, vertex subsets).
    pub max_states: u64,
    /// Max grid resolution per axis.
    pub max_grid: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_states: 1 << 21,
            max_grid: 2000,
        }
    }
}

/// Exhaustive scan over all binary scheduling matrices, keeping the feasible
/// minimum of `sum_n max_k x_nk * t_nk`. Requires N*K <= 20.
pub fn brute_force_scheduling(
    t: &Array2<f64>,
    config: &ScenarioConfig,
) -> Result<(Array2<u8>, f64)> {
    let (n, k) = t.dim();
    let bits = n * k;
    if bits > 20 {
        return Err(Error::BudgetExceeded(format!(
            "brute-force scheduling needs N*K <= 20, got {bits}"
        )));
    }
    let budget = OracleBudget::default();
    if (1u64 << bits) > budget.max_states {
        return Err(Error::BudgetExceeded("state count".into()));
    }
    let mut best: Option<(Array2<u8>, f64)> = None;
    'outer: for mask in 0u64..(1 << bits) {
        let mut x = Array2::<u8>::zeros((n, k));
        for b in 0..bits {
            if mask >> b & 1 == 1 {
                x[[b / k, b % k]] = 1;
            }
        }
        // Resource blocks.
        for nn in 0..n {
            let count: usize = (0..k).map(|kk| x[[nn, kk]] as usize).sum();
            if count > config.resource_blocks {
                continue 'outer;
            }
        }
        // Regularity windows.
        for w in config.enforced_window_starts() {
            for kk in 0..k {
                let count: f64 = (w..=w + config.regularity_window)
                    .map(|nn| x[[nn, kk]] as f64)
                    .sum();
                if count + 1e-12 < config.regularity_fraction[kk] * config.regularity_window as f64
                {
                    continue 'outer;
                }
            }
        }
        let obj: f64 = (0..n)
            .map(|nn| {
                (0..k)
                    .filter(|&kk| x[[nn, kk]] == 1)
                    .map(|kk| t[[nn, kk]])
                    .fold(0.0, f64::max)
            })
            .sum();
        if best.as_ref().map_or(true, |(_, b)| obj < *b) {
            best = Some((x, obj));
        }
    }
    best.ok_or_else(|| Error::infeasible("oracle", "no feasible schedule exists"))
}

/// Solves a square linear system by Gaussian elimination with partial
/// pivoting; None when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for j in col..n {
                    a[row][j] -= f * a[col][j];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = b[i];
        for j in (i + 1)..n {
            sum -= a[i][j] * x[j];
        }
        x[i] = sum / a[i][i];
    }
    Some(x)
}

/// Reference LP optimum by enumerating every vertex of the polytope
/// {A.v <= b, lower <= v <= upper}: all n-subsets of constraints solved as
/// equalities, filtered for feasibility. Requires n <= 10 variables.
pub fn enumerate_basic_feasible(lp: &LinearProgram) -> Result<f64> {
    let n = lp.n_vars();
    if n > 10 {
        return Err(Error::BudgetExceeded(format!(
            "vertex enumeration needs <= 10 variables, got {n}"
        )));
    }
    // Assemble all constraints as rows (coeffs, rhs) of coeff.v <= rhs.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (a, &b) in lp.a.iter().zip(&lp.b) {
        rows.push((a.clone(), b));
    }
    for j in 0..n {
        if lp.lower[j].is_finite() {
            let mut r = vec![0.0; n];
            r[j] = -1.0;
            rows.push((r, -lp.lower[j]));
        }
        if lp.upper[j].is_finite() {
            let mut r = vec![0.0; n];
            r[j] = 1.0;
            rows.push((r, lp.upper[j]));
        }
    }
    let m = rows.len();
    if m < n {
        return Err(Error::BudgetExceeded(
            "fewer constraints than variables; optimum not at a vertex".into(),
        ));
    }
    let budget = OracleBudget::default();
    // Count subsets roughly before enumerating.
    let mut combos: u64 = 1;
    for i in 0..n {
        combos = combos.saturating_mul((m - i) as u64) / (i as u64 + 1);
    }
    if combos > budget.max_states {
        return Err(Error::BudgetExceeded(format!("{combos} vertex candidates")));
    }

    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        // Solve the active set as equalities.
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| rows[i].1).collect();
        if let Some(v) = solve_square(a, b) {
            let feasible = rows.iter().all(|(coef, rhs)| {
                coef.iter().zip(&v).map(|(c, x)| c * x).sum::<f64>() <= rhs + 1e-7
            });
            if feasible {
                let obj: f64 = lp.c.iter().zip(&v).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // Next lexicographic n-subset of 0..m.
        let mut i = n;
        loop {
            if i == 0 {
                return best.ok_or_else(|| Error::infeasible("oracle", "no feasible vertex"));
            }
            i -= 1;
            if subset[i] != i + m - n {
                subset[i] += 1;
                for j in (i + 1)..n {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustive (p, t) grid minimum of t for a single transmission of `d_bits`
/// over gain `h`, subject to the rate requirement, the hop energy budget,
/// the power cap, and t <= T0. Expected-value delivery.
pub fn grid_search_single_hop(
    d_bits: f64,
    h: f64,
    energy_budget_j: f64,
    config: &ScenarioConfig,
    resolution: usize,
) -> Result<f64> {
    let budget = OracleBudget::default();
    if resolution > budget.max_grid {
        return Err(Error::BudgetExceeded(format!(
            "grid resolution {resolution} exceeds cap {}",
            budget.max_grid
        )));
    }
    if d_bits <= 0.0 {
        return Ok(0.0);
    }
    let p_max = config.max_power_w[0];
    let t_max = config.slot_duration_s;
    let mut best = f64::INFINITY;
    for i in 1..=resolution {
        let p = p_max * i as f64 / resolution as f64;
        let r = rate(p, h, config);
        if r <= 0.0 {
            continue;
        }
        for j in 1..=resolution {
            let t = t_max * j as f64 / resolution as f64;
            if t * r >= d_bits && t * p <= energy_budget_j {
                best = best.min(t);
                break; // t grid ascending; first feasible t is minimal for this p
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::infeasible(
            "oracle",
            "no feasible (p, t) grid point for the single hop",
        ))
    }
}

/// Central finite-difference gradient estimate.
pub fn finite_difference_gradient<F: Fn(&[f64]) -> f64>(
    f: F,
    point: &[f64],
    step: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; point.len()];
    let mut work = point.to_vec();
    for j in 0..point.len() {
        let orig = work[j];
        work[j] = orig + step;
        let fp = f(&work);
        work[j] = orig - step;
        let fm = f(&work);
        work[j] = orig;
        grad[j] = (fp - fm) / (2.0 * step);
    }
    grad
}
