//! Dense two-phase tableau simplex with Dantzig pricing and a Bland
//! anti-cycling fallback after prolonged degeneracy.

use super::{Outcome, SolveStatus};

/// Primal feasibility tolerance (absolute) certified on optimal exit.
pub const SIMPLEX_FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance certified on optimal exit.
pub const SIMPLEX_COST_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-10;

/// minimize c.v subject to A.v <= b, lower <= v <= upper.
/// Bounds may be infinite.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    fn check_dims(&self) -> Result<(), String> {
        let n = self.c.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err("bound vectors must match variable count".into());
        }
        if self.a.len() != self.b.len() {
            return Err("A and b row counts differ".into());
        }
        for row in &self.a {
            if row.len() != n {
                return Err("A row width must match variable count".into());
            }
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] {
                return Err(format!("lower > upper for variable {j}"));
            }
        }
        Ok(())
    }
}

/// How an original variable maps into nonnegative standard-form columns.
enum VarMap {
    /// v = lower + u, u >= 0.
    Shifted { col: usize, lower: f64 },
    /// v = upper - u, u >= 0 (lower infinite, upper finite).
    Mirrored { col: usize, upper: f64 },
    /// v = u_plus - u_minus (both bounds infinite).
    Split { plus: usize, minus: usize },
}

struct Tableau {
    /// m x (ncols + 1): coefficient columns followed by rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize, obj: &mut Vec<f64>, obj2: Option<&mut Vec<f64>>) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                let factor = r[col];
                if factor != 0.0 {
                    for (v, pv) in r.iter_mut().zip(&pivot_row) {
                        *v -= factor * pv;
                    }
                }
            }
        }
        let f = obj[col];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        if let Some(o2) = obj2 {
            let f = o2[col];
            if f != 0.0 {
                for (v, pv) in o2.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Entering column under Dantzig (or Bland) pricing over `active` columns.
    fn choose_entering(&self, obj: &[f64], active: usize, bland: bool) -> Option<usize> {
        if bland {
            (0..active).find(|&j| obj[j] < -SIMPLEX_COST_TOL)
        } else {
            let mut best = None;
            let mut best_val = -SIMPLEX_COST_TOL;
            for j in 0..active {
                if obj[j] < best_val {
                    best_val = obj[j];
                    best = Some(j);
                }
            }
            best
        }
    }

    /// Leaving row by the minimum-ratio test; ties to smallest basis index
    /// under Bland.
    fn choose_leaving(&self, col: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.rows.iter().enumerate() {
            let a = r[col];
            if a > PIVOT_TOL {
                let ratio = r[self.ncols] / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        let better = ratio < br - 1e-12
                            || ((ratio - br).abs() <= 1e-12
                                && if bland {
                                    self.basis[i] < self.basis[bi]
                                } else {
                                    false
                                });
                        if better {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

enum PhaseResult {
    Converged(usize),
    Unbounded(usize),
    IterationLimit(usize),
}

fn run_phase(
    tab: &mut Tableau,
    obj: &mut Vec<f64>,
    secondary: &mut Option<Vec<f64>>,
    active_cols: usize,
    max_iters: usize,
) -> PhaseResult {
    let mut degenerate_streak = 0usize;
    let mut bland = false;
    for it in 0..max_iters {
        let Some(col) = tab.choose_entering(obj, active_cols, bland) else {
            return PhaseResult::Converged(it);
        };
        let Some(row) = tab.choose_leaving(col, bland) else {
            return PhaseResult::Unbounded(it);
        };
        let step = tab.rows[row][tab.ncols] / tab.rows[row][col];
        if step.abs() <= 1e-12 {
            degenerate_streak += 1;
            if degenerate_streak > 2 * (tab.rows.len() + active_cols) {
                bland = true;
            }
        } else {
            degenerate_streak = 0;
        }
        tab.pivot(row, col, obj, secondary.as_mut());
    }
    PhaseResult::IterationLimit(max_iters)
}

/// Two-phase dense simplex. Infeasible and unbounded problems are reported
/// via the status, never via panic.
pub fn simplex_solve(lp: &LinearProgram) -> (Vec<f64>, f64, SolveStatus) {
    let fail = |outcome: Outcome| {
        (
            vec![0.0; lp.n_vars()],
            f64::NAN,
            SolveStatus {
                outcome,
                iterations: 0,
                residual: f64::NAN,
            },
        )
    };
    if lp.check_dims().is_err() {
        return fail(Outcome::Infeasible);
    }
    let n = lp.n_vars();

    // Map variables onto nonnegative standard-form columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        let (lo, up) = (lp.lower[j], lp.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shifted { col: ncols, lower: lo });
            ncols += 1;
        } else if up.is_finite() {
            maps.push(VarMap::Mirrored { col: ncols, upper: up });
            ncols += 1;
        } else {
            maps.push(VarMap::Split {
                plus: ncols,
                minus: ncols + 1,
            });
            ncols += 2;
        }
    }
    let n_struct = ncols;

    // Rows: original inequalities plus finite-range bound rows u_j <= up - lo.
    let mut rows_a: Vec<Vec<f64>> = Vec::new();
    let mut rows_b: Vec<f64> = Vec::new();
    for (row, &bi) in lp.a.iter().zip(&lp.b) {
        let mut r = vec![0.0; n_struct];
        let mut rhs = bi;
        for (j, &coef) in row.iter().enumerate() {
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    r[col] += coef;
                    rhs -= coef * lower;
                }
                VarMap::Mirrored { col, upper } => {
                    r[col] -= coef;
                    rhs -= coef * upper;
                }
                VarMap::Split { plus, minus } => {
                    r[plus] += coef;
                    r[minus] -= coef;
                }
            }
        }
        rows_a.push(r);
        rows_b.push(rhs);
    }
    for j in 0..n {
        if let VarMap::Shifted { col, lower } = maps[j] {
            if lp.upper[j].is_finite() {
                let mut r = vec![0.0; n_struct];
                r[col] = 1.0;
                rows_a.push(r);
                rows_b.push(lp.upper[j] - lower);
            }
        }
        // Mirrored vars have lower = -inf, so no range row.
    }
    let m = rows_a.len();

    // Objective over structural columns plus the constant from shifts.
    let mut c_std = vec![0.0; n_struct];
    let mut c_const = 0.0;
    for j in 0..n {
        let cj = lp.c[j];
        match maps[j] {
            VarMap::Shifted { col, lower } => {
                c_std[col] += cj;
                c_const += cj * lower;
            }
            VarMap::Mirrored { col, upper } => {
                c_std[col] -= cj;
                c_const += cj * upper;
            }
            VarMap::Split { plus, minus } => {
                c_std[plus] += cj;
                c_std[minus] -= cj;
            }
        }
    }

    // Build tableau with slack columns and artificials for negative rhs rows.
    let n_slack = m;
    let mut artificial_rows: Vec<usize> = Vec::new();
    for i in 0..m {
        if rows_b[i] < 0.0 {
            artificial_rows.push(i);
        }
    }
    let n_art = artificial_rows.len();
    let total = n_struct + n_slack + n_art;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: vec![0; m],
        ncols: total,
    };
    let mut art_col_of_row = vec![usize::MAX; m];
    {
        let mut next_art = n_struct + n_slack;
        for &i in &artificial_rows {
            art_col_of_row[i] = next_art;
            next_art += 1;
        }
    }
    for i in 0..m {
        let mut row = vec![0.0; total + 1];
        let negate = rows_b[i] < 0.0;
        let sign = if negate { -1.0 } else { 1.0 };
        for j in 0..n_struct {
            row[j] = sign * rows_a[i][j];
        }
        row[n_struct + i] = sign; // slack
        row[total] = sign * rows_b[i];
        if negate {
            row[art_col_of_row[i]] = 1.0;
            tab.basis[i] = art_col_of_row[i];
        } else {
            tab.basis[i] = n_struct + i;
        }
        tab.rows.push(row);
    }

    let max_iters = 2000 + 60 * (m + total);
    let mut iterations = 0usize;

    // Phase 2 objective row kept in sync through phase 1 pivots.
    let mut phase2_obj = vec![0.0; total + 1];
    phase2_obj[..n_struct].copy_from_slice(&c_std);

    if n_art > 0 {
        // Phase 1: minimize sum of artificials.
        let mut phase1_obj = vec![0.0; total + 1];
        for &i in &artificial_rows {
            phase1_obj[art_col_of_row[i]] = 1.0;
        }
        // Price out basic artificials.
        for &i in &artificial_rows {
            for j in 0..=total {
                phase1_obj[j] -= tab.rows[i][j];
            }
        }
        let mut secondary = Some(std::mem::take(&mut phase2_obj));
        let res = run_phase(&mut tab, &mut phase1_obj, &mut secondary, total, max_iters);
        phase2_obj = secondary.unwrap();
        match res {
            PhaseResult::Converged(it) => iterations += it,
            PhaseResult::Unbounded(_) | PhaseResult::IterationLimit(_) => {
                return fail(Outcome::IterationLimit)
            }
        }
        let phase1_val = -phase1_obj[total];
        if phase1_val > 1e-7 {
            return fail(Outcome::Infeasible);
        }
        // Pivot remaining artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= n_struct + n_slack {
                if let Some(col) = (0..n_struct + n_slack)
                    .find(|&j| tab.rows[i][j].abs() > 1e-8)
                {
                    tab.pivot(i, col, &mut phase2_obj, None);
                }
            }
        }
    }

    // Price out the phase-2 objective for current basic columns.
    for i in 0..m {
        let bc = tab.basis[i];
        let f = phase2_obj[bc];
        if f != 0.0 {
            for j in 0..=total {
                phase2_obj[j] -= f * tab.rows[i][j];
            }
        }
    }

    // Phase 2: artificial columns excluded from pricing.
    let active = n_struct + n_slack;
    let mut none = None;
    let res = run_phase(&mut tab, &mut phase2_obj, &mut none, active, max_iters);
    let outcome = match res {
        PhaseResult::Converged(it) => {
            iterations += it;
            Outcome::Optimal
        }
        PhaseResult::Unbounded(it) => {
            iterations += it;
            Outcome::Unbounded
        }
        PhaseResult::IterationLimit(it) => {
            iterations += it;
            Outcome::IterationLimit
        }
    };
    if outcome != Outcome::Optimal {
        let mut out = fail(outcome);
        out.2.iterations = iterations;
        return out;
    }

    // Recover the solution in original variables.
    let mut u = vec![0.0; total];
    for i in 0..m {
        u[tab.basis[i]] = tab.rows[i][total];
    }
    let mut v = vec![0.0; n];
    for j in 0..n {
        v[j] = match maps[j] {
            VarMap::Shifted { col, lower } => lower + u[col],
            VarMap::Mirrored { col, upper } => upper - u[col],
            VarMap::Split { plus, minus } => u[plus] - u[minus],
        };
    }
    let objective: f64 = lp.c.iter().zip(&v).map(|(c, x)| c * x).sum();
    debug_assert!((objective - (-phase2_obj[total] + c_const)).abs() <= 1e-6 * objective.abs().max(1.0));

    // Certify primal feasibility and reduced costs.
    let mut residual: f64 = 0.0;
    for (row, &bi) in lp.a.iter().zip(&lp.b) {
        let lhs: f64 = row.iter().zip(&v).map(|(a, x)| a * x).sum();
        residual = residual.max(lhs - bi);
    }
    for j in 0..n {
        residual = residual.max(lp.lower[j] - v[j]).max(v[j] - lp.upper[j]);
    }
    let worst_reduced = phase2_obj[..active]
        .iter()
        .fold(0.0f64, |acc, &rc| acc.max(-rc));
    residual = residual.max(worst_reduced);
    let outcome = if residual <= SIMPLEX_FEAS_TOL.max(SIMPLEX_COST_TOL) {
        Outcome::Optimal
    } else {
        // Numerically degraded; still report the point but flag it.
        Outcome::IterationLimit
    };
    (
        v,
        objective,
        SolveStatus {
            outcome,
            iterations,
            residual,
        },
    )
}
