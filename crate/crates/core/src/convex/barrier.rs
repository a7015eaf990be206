//! Log-barrier interior-point method for smooth convex programs with
//! inequality constraints `g_i(v) <= 0` and box bounds.

use super::{Outcome, SolveStatus};
use crate::{Error, Result};

/// Outer loop stops once (number of constraints)/weight drops below this.
pub const BARRIER_GAP_TOL: f64 = 1e-8;
/// KKT residual required for an `Optimal` status.
pub const BARRIER_KKT_TOL: f64 = 1e-6;
/// Armijo sufficient-decrease constant.
pub const BARRIER_ARMIJO: f64 = 1e-4;
/// Backtracking shrink factor.
pub const BARRIER_SHRINK: f64 = 0.5;

const WEIGHT_GROWTH: f64 = 10.0;
const MAX_OUTER_STAGES: usize = 64;
const MAX_INNER_ITERS: usize = 80;
const MAX_BACKTRACKS: usize = 60;

/// A smooth scalar function of a vector, with optional curvature.
pub trait SmoothFn {
    fn eval(&self, v: &[f64]) -> f64;
    fn grad(&self, v: &[f64], out: &mut [f64]);
    /// Adds `w * hessian(v)` into the dense row-major matrix `out`
    /// (dim x dim). Returns false when no curvature information is available
    /// (treated as zero curvature).
    fn add_hessian(&self, _v: &[f64], _w: f64, _out: &mut [f64]) -> bool {
        false
    }
}

/// Affine function a.v + b.
pub struct LinearFn {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl SmoothFn for LinearFn {
    fn eval(&self, v: &[f64]) -> f64 {
        self.coeffs.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() + self.constant
    }
    fn grad(&self, _v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.coeffs);
    }
    fn add_hessian(&self, _v: &[f64], _w: f64, _out: &mut [f64]) -> bool {
        true // exact: zero curvature
    }
}

/// Smooth convex program: minimize objective subject to g_i(v) <= 0 and
/// lower <= v <= upper. Convexity of the supplied functions on the box is
/// the caller's responsibility.
pub struct SmoothConvexProgram {
    pub dim: usize,
    pub objective: Box<dyn SmoothFn>,
    pub constraints: Vec<Box<dyn SmoothFn>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Single bound constraint expressed as g(v) <= 0.
struct BoundFn {
    var: usize,
    /// +1: v_var - bound <= 0; -1: bound - v_var <= 0.
    sign: f64,
    bound: f64,
}

impl SmoothFn for BoundFn {
    fn eval(&self, v: &[f64]) -> f64 {
        self.sign * (v[self.var] - self.bound)
    }
    fn grad(&self, _v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[self.var] = self.sign;
    }
    fn add_hessian(&self, _v: &[f64], _w: f64, _out: &mut [f64]) -> bool {
        true
    }
}

/// In-place dense Cholesky solve of (H)x = rhs. Returns None when H is not
/// positive definite enough.
fn cholesky_solve(h: &mut [f64], dim: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    // Factor H = L L^T in the lower triangle.
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = h[i * dim + j];
            for k in 0..j {
                sum -= h[i * dim + k] * h[j * dim + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                h[i * dim + j] = sum.sqrt();
            } else {
                h[i * dim + j] = sum / h[j * dim + j];
            }
        }
    }
    // Forward/backward substitution.
    let mut x = rhs.to_vec();
    for i in 0..dim {
        for k in 0..i {
            x[i] -= h[i * dim + k] * x[k];
        }
        x[i] /= h[i * dim + i];
    }
    for i in (0..dim).rev() {
        for k in (i + 1)..dim {
            x[i] -= h[k * dim + i] * x[k];
        }
        x[i] /= h[i * dim + i];
    }
    Some(x)
}

struct BarrierWorkspace<'a> {
    dim: usize,
    objective: &'a dyn SmoothFn,
    constraints: Vec<&'a dyn SmoothFn>,
}

impl<'a> BarrierWorkspace<'a> {
    fn constraint_values(&self, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.constraints.iter().map(|c| c.eval(v)));
    }

    fn strictly_feasible(&self, v: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.eval(v) < 0.0)
    }

    /// Barrier potential mu*f(v) - sum ln(-g_i(v)); +inf outside the domain.
    fn potential(&self, v: &[f64], mu: f64) -> f64 {
        let mut phi = mu * self.objective.eval(v);
        for c in &self.constraints {
            let g = c.eval(v);
            if g >= 0.0 {
                return f64::INFINITY;
            }
            phi -= (-g).ln();
        }
        phi
    }

    fn potential_grad(&self, v: &[f64], mu: f64, grad: &mut [f64], scratch: &mut [f64]) {
        self.objective.grad(v, grad);
        for g in grad.iter_mut() {
            *g *= mu;
        }
        for c in &self.constraints {
            let gv = c.eval(v);
            c.grad(v, scratch);
            let w = 1.0 / (-gv);
            for (g, s) in grad.iter_mut().zip(scratch.iter()) {
                *g += w * s;
            }
        }
    }

    fn potential_hessian(&self, v: &[f64], mu: f64, hess: &mut [f64], scratch: &mut [f64]) {
        hess.fill(0.0);
        self.objective.add_hessian(v, mu, hess);
        let dim = self.dim;
        for c in &self.constraints {
            let gv = c.eval(v);
            c.grad(v, scratch);
            let w1 = 1.0 / (gv * gv);
            for i in 0..dim {
                let si = scratch[i];
                if si != 0.0 {
                    for j in 0..dim {
                        hess[i * dim + j] += w1 * si * scratch[j];
                    }
                }
            }
            c.add_hessian(v, 1.0 / (-gv), hess);
        }
    }

    /// Relative stationarity residual of the KKT conditions with the
    /// barrier's implicit multipliers lambda_i = 1/(-mu*g_i).
    fn kkt_residual(&self, v: &[f64], mu: f64, scratch: &mut [f64]) -> f64 {
        let dim = self.dim;
        let mut grad = vec![0.0; dim];
        self.objective.grad(v, &mut grad);
        let fscale = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1.0);
        for c in &self.constraints {
            let gv = c.eval(v);
            let lambda = 1.0 / (-mu * gv);
            c.grad(v, scratch);
            for (g, s) in grad.iter_mut().zip(scratch.iter()) {
                *g += lambda * s;
            }
        }
        grad.iter().map(|g| g * g).sum::<f64>().sqrt() / fscale
    }
}

/// Minimizes a smooth convex program from a strictly feasible start via the
/// log-barrier method with damped Newton inner steps (gradient fallback) and
/// Armijo backtracking.
pub fn barrier_solve(
    prog: &SmoothConvexProgram,
    start: &[f64],
) -> Result<(Vec<f64>, f64, SolveStatus)> {
    let dim = prog.dim;
    if start.len() != dim {
        return Err(Error::ShapeMismatch("barrier start dimension".into()));
    }
    let mut constraints: Vec<&dyn SmoothFn> = prog.constraints.iter().map(|b| b.as_ref()).collect();
    let mut bound_fns: Vec<BoundFn> = Vec::new();
    for j in 0..dim {
        if prog.lower[j].is_finite() {
            bound_fns.push(BoundFn {
                var: j,
                sign: -1.0,
                bound: prog.lower[j],
            });
        }
        if prog.upper[j].is_finite() {
            bound_fns.push(BoundFn {
                var: j,
                sign: 1.0,
                bound: prog.upper[j],
            });
        }
    }
    let bounds_start = constraints.len();
    for b in &bound_fns {
        let _ = bounds_start;
        constraints.push(b as &dyn SmoothFn);
    }
    let ws = BarrierWorkspace {
        dim,
        objective: prog.objective.as_ref(),
        constraints,
    };

    if !ws.strictly_feasible(start) {
        let mut vals = Vec::new();
        ws.constraint_values(start, &mut vals);
        let worst = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::infeasible(
            "barrier",
            format!("start is not strictly feasible (worst g = {worst:.3e})"),
        ));
    }

    let m = ws.constraints.len() as f64;
    let mut v = start.to_vec();
    let f0 = ws.objective.eval(&v).abs();
    let mut mu = (m / f0.max(1e-3)).max(1e-6);
    let mut iterations = 0usize;
    let mut scratch = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut hess = vec![0.0; dim * dim];
    let mut hit_limit = false;

    let mut stage = 0usize;
    loop {
        stage += 1;
        // Inner: damped Newton on the barrier potential at fixed mu.
        let mut converged_inner = false;
        for _ in 0..MAX_INNER_ITERS {
            iterations += 1;
            ws.potential_grad(&v, mu, &mut grad, &mut scratch);
            ws.potential_hessian(&v, mu, &mut hess, &mut scratch);
            // Ridge escalation until the factorization succeeds.
            let scale = (0..dim).map(|i| hess[i * dim + i].abs()).fold(1e-12, f64::max);
            let mut ridge = 1e-12 * scale;
            let mut dir = None;
            for _ in 0..12 {
                let mut h = hess.clone();
                for i in 0..dim {
                    h[i * dim + i] += ridge;
                }
                let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
                if let Some(d) = cholesky_solve(&mut h, dim, &neg_grad) {
                    dir = Some(d);
                    break;
                }
                ridge *= 100.0;
            }
            let dir = dir.unwrap_or_else(|| {
                // Gradient fallback, scaled to a conservative step.
                let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-30);
                grad.iter().map(|g| -g / gnorm).collect()
            });

            let decrement: f64 = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
            if decrement <= 1e-12 {
                converged_inner = true;
                break;
            }

            // Backtrack to strict feasibility, then Armijo.
            let phi0 = ws.potential(&v, mu);
            let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..MAX_BACKTRACKS {
                let cand: Vec<f64> = v.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                let phi = ws.potential(&cand, mu);
                if phi.is_finite() && phi <= phi0 + BARRIER_ARMIJO * t * slope {
                    v = cand;
                    accepted = true;
                    break;
                }
                t *= BARRIER_SHRINK;
            }
            if !accepted {
                // Cannot make progress at this weight; treat stage as done.
                converged_inner = true;
                break;
            }
            if decrement / 2.0 < 1e-10 {
                converged_inner = true;
                break;
            }
        }
        if !converged_inner {
            hit_limit = true;
        }
        if m / mu < BARRIER_GAP_TOL {
            break;
        }
        if stage >= MAX_OUTER_STAGES {
            hit_limit = true;
            break;
        }
        mu *= WEIGHT_GROWTH;
    }

    let objective = ws.objective.eval(&v);
    let residual = ws.kkt_residual(&v, mu, &mut scratch);
    let outcome = if !hit_limit && residual <= BARRIER_KKT_TOL {
        Outcome::Optimal
    } else {
        Outcome::IterationLimit
    };
    Ok((
        v,
        objective,
        SolveStatus {
            outcome,
            iterations,
            residual,
        },
    ))
}
