//! Local solver for smooth single-objective programs
//! `min φ(x)  s.t.  c_I(x) ≤ 0,  c_E(x) = 0`.
//!
//! Sequential quadratic programming with a damped BFGS Hessian, an exact
//! L1 merit function and a second-order correction. Subproblems go to
//! `quadprog`; an inconsistent linearization switches to an ℓ1 penalty QP
//! with one slack per constraint row.

use quadprog::solve_qp;
use serde::Serialize;
use thiserror::Error;

use crate::problem::{EvalCounters, Matrix, ProblemDefinition, ProblemError, Vector};

#[derive(Debug, Error)]
pub enum NlpError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("start point is not finite: {0}")]
    BadStart(String),
    #[error("invalid solver settings: {0}")]
    Config(String),
}

#[derive(Debug, Clone)]
pub struct NlpPoint {
    pub objective: f64,
    pub ineq: Vector,
    pub eq: Vector,
}

#[derive(Debug, Clone)]
pub struct NlpDerivatives {
    pub gradient: Vector,
    /// Rows are constraint gradients.
    pub ineq: Matrix,
    pub eq: Matrix,
}

/// A smooth program the SQP loop can query.
pub trait NlpModel: Sync {
    fn dim(&self) -> usize;
    fn num_ineq(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn evaluate(&self, x: &Vector, counters: &mut EvalCounters) -> Result<NlpPoint, ProblemError>;
    fn derivatives(&self, x: &Vector, counters: &mut EvalCounters) -> Result<NlpDerivatives, ProblemError>;
}

/// How the objectives of a [`ProblemDefinition`] collapse to one scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalarization {
    /// `Σ wᵢ fᵢ`.
    Weighted(Vector),
    /// A single `fᵢ`.
    Single(usize),
    /// `‖x − target‖²`; objectives are never evaluated.
    Distance(Vector),
    /// `Σ λᵢ |fᵢ − f*ᵢ|^p / sᵢ^p`, the `p`-th power of the (weighted) global
    /// criterion. For `p = 1` the absolute value is dropped: `f ≥ f*` on the
    /// feasible set, and the kink at `f = f*` would stall the solver.
    Criterion {
        ideal: Vector,
        scales: Vector,
        weights: Vector,
        p: f64,
    },
}

/// A [`ProblemDefinition`] with a scalarized objective and optional extra
/// bounds `f_k(x) ≤ b_k` appended after the problem's own inequalities.
#[derive(Debug, Clone)]
pub struct ProblemModel<'a> {
    pub problem: &'a ProblemDefinition,
    pub objective: Scalarization,
    pub bounds: Vec<(usize, f64)>,
}

impl<'a> ProblemModel<'a> {
    pub fn new(problem: &'a ProblemDefinition, objective: Scalarization) -> Self {
        ProblemModel {
            problem,
            objective,
            bounds: Vec::new(),
        }
    }

    pub fn with_bound(mut self, k: usize, bound: f64) -> Self {
        self.bounds.push((k, bound));
        self
    }

    fn needs_objectives(&self) -> bool {
        !matches!(self.objective, Scalarization::Distance(_)) || !self.bounds.is_empty()
    }

    fn scalar(&self, x: &Vector, f: Option<&Vector>) -> f64 {
        match &self.objective {
            Scalarization::Weighted(w) => w.dot(f.expect("objectives evaluated")),
            Scalarization::Single(i) => f.expect("objectives evaluated")[*i],
            Scalarization::Distance(target) => (x - target).norm_squared(),
            Scalarization::Criterion { ideal, scales, weights, p } => {
                let f = f.expect("objectives evaluated");
                (0..f.len())
                    .map(|i| {
                        let r = (f[i] - ideal[i]) / scales[i];
                        weights[i] * if *p == 1.0 { r } else { r.abs().powf(*p) }
                    })
                    .sum()
            }
        }
    }
}

impl NlpModel for ProblemModel<'_> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn num_ineq(&self) -> usize {
        self.problem.m() + self.bounds.len()
    }

    fn num_eq(&self) -> usize {
        self.problem.s()
    }

    fn evaluate(&self, x: &Vector, counters: &mut EvalCounters) -> Result<NlpPoint, ProblemError> {
        let f = if self.needs_objectives() {
            Some(self.problem.evaluate_objectives(x, counters)?)
        } else {
            None
        };
        let (g, h) = self.problem.evaluate_constraints(x, counters)?;
        let mut ineq = Vector::zeros(self.num_ineq());
        ineq.rows_mut(0, g.len()).copy_from(&g);
        for (j, &(k, b)) in self.bounds.iter().enumerate() {
            ineq[g.len() + j] = f.as_ref().expect("objectives evaluated")[k] - b;
        }
        Ok(NlpPoint {
            objective: self.scalar(x, f.as_ref()),
            ineq,
            eq: h,
        })
    }

    fn derivatives(&self, x: &Vector, counters: &mut EvalCounters) -> Result<NlpDerivatives, ProblemError> {
        let jac = self.problem.jacobians(x, counters)?;
        let gradient = match &self.objective {
            Scalarization::Weighted(w) => jac.f.tr_mul(w),
            Scalarization::Single(i) => jac.f.row(*i).transpose(),
            Scalarization::Distance(target) => (x - target) * 2.0,
            Scalarization::Criterion { ideal, scales, weights, p } => {
                // objective values are needed for the chain rule; not an extra "evaluation" of f
                let mut scratch = EvalCounters::new(self.problem.p());
                let f = self.problem.evaluate_objectives(x, &mut scratch)?;
                let mut grad = Vector::zeros(x.len());
                for i in 0..f.len() {
                    let r = (f[i] - ideal[i]) / scales[i];
                    let d = if *p == 1.0 { 1.0 } else { p * r.abs().powf(p - 1.0) * r.signum() };
                    grad += jac.f.row(i).transpose() * (weights[i] * d / scales[i]);
                }
                grad
            }
        };
        let m = self.problem.m();
        let mut ineq = Matrix::zeros(self.num_ineq(), x.len());
        ineq.view_mut((0, 0), (m, x.len())).copy_from(&jac.g);
        for (j, &(k, _)) in self.bounds.iter().enumerate() {
            ineq.row_mut(m + j).copy_from(&jac.f.row(k));
        }
        Ok(NlpDerivatives {
            gradient,
            ineq,
            eq: jac.h,
        })
    }
}

pub struct NlpSpec<'a> {
    pub model: &'a dyn NlpModel,
    pub x0: Vector,
    /// Relative: the KKT residual is compared with `tol_opt · (1 + ‖∇φ‖∞)`.
    pub tol_opt: f64,
    pub tol_feas: f64,
    pub max_iter: usize,
}

impl<'a> NlpSpec<'a> {
    /// Default tolerances `1e-8` and 500 iterations.
    pub fn new(model: &'a dyn NlpModel, x0: Vector) -> Self {
        NlpSpec {
            model,
            x0,
            tol_opt: 1e-8,
            tol_feas: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NlpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl NlpStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            NlpStatus::Optimal => "optimal",
            NlpStatus::MaxIter => "max_iter",
            NlpStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NlpResult {
    pub x_star: Vector,
    pub objective: f64,
    pub ineq_multipliers: Vector,
    pub eq_multipliers: Vector,
    /// `‖(∇φ + J_Iᵀu + J_Eᵀv, u ∘ c_I)‖`.
    pub kkt_residual: f64,
    /// `max(c_I, 0)` and `|c_E|` maxima.
    pub ineq_violation: f64,
    pub eq_violation: f64,
    pub status: NlpStatus,
    pub iterations: usize,
    /// Why the run stopped short, if it did.
    pub message: Option<String>,
}

impl NlpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == NlpStatus::Optimal
    }
}

const ARMIJO: f64 = 1e-4;
/// `‖d‖∞ ≤ STEP_BOUND · (1 + ‖x‖∞)` in every subproblem.
const STEP_BOUND: f64 = 1.0;
/// Curvature on elastic slacks so the QP stays strictly convex.
const SLACK_CURVATURE: f64 = 1e-6;
const MAX_PENALTY: f64 = 1e10;

struct Iterate {
    x: Vector,
    point: NlpPoint,
    derivs: NlpDerivatives,
}

struct QpStep {
    d: Vector,
    u: Vector,
    v: Vector,
    /// Penalty used when the linearization was inconsistent.
    elastic: Option<f64>,
}

// quadprog reports |λ| for every row, so equality multipliers are recovered
// from stationarity of the QP: A_Eᵀ v = −(B d + c + A_Iᵀ u + bound terms).
fn equality_multipliers(ae: &Matrix, rhs: &Vector) -> Vector {
    if ae.nrows() == 0 {
        return Vector::zeros(0);
    }
    let svd = ae.transpose().svd(true, true);
    let eps = 1e-14 * svd.singular_values.max();
    svd.solve(rhs, eps).unwrap_or_else(|_| Vector::zeros(ae.nrows()))
}

fn row_major(a: &Matrix) -> impl Iterator<Item = f64> + '_ {
    (0..a.nrows()).flat_map(move |i| (0..a.ncols()).map(move |j| a[(i, j)]))
}

/// Linearization handed to [`qp`].
struct Linearization<'a> {
    b: &'a Matrix,
    c: &'a Vector,
    ae: &'a Matrix,
    re: &'a Vector,
    ai: &'a Matrix,
    ri: &'a Vector,
    /// Bound on `‖d‖∞`.
    delta: f64,
}

impl Linearization<'_> {
    /// L1 violation of the linearized constraints at `d`.
    fn violation(&self, d: &Vector) -> f64 {
        let e = self.ae * d + self.re;
        let i = self.ai * d + self.ri;
        e.iter().map(|c| c.abs()).sum::<f64>() + i.iter().map(|c| c.max(0.0)).sum::<f64>()
    }
}

// min ½dᵀBd + cᵀd s.t. A_E d + r_E = 0, A_I d + r_I ≤ 0, |d| ≤ Δ.
//
// With `penalty = Some(ρ)` the constraints are relaxed by nonnegative slacks
// (A_E d + r_E = p − q, A_I d + r_I ≤ t) charged ρ each in the objective.
fn qp(lin: &Linearization<'_>, penalty: Option<f64>) -> Result<QpStep, quadprog::Error> {
    let n = lin.c.len();
    let (s, m) = (lin.ae.nrows(), lin.ai.nrows());
    let ns = if penalty.is_some() { 2 * s + m } else { 0 };
    let k = n + ns;
    let rows = s + m + 2 * n + ns;
    let mut q = Matrix::zeros(k, k);
    q.view_mut((0, 0), (n, n)).copy_from(lin.b);
    let mut cc = Vector::zeros(k);
    cc.rows_mut(0, n).copy_from(lin.c);
    let mut a = Matrix::zeros(rows, k);
    let mut rhs = Vector::zeros(rows);
    a.view_mut((0, 0), (s, n)).copy_from(lin.ae);
    a.view_mut((s, 0), (m, n)).copy_from(lin.ai);
    rhs.rows_mut(0, s).copy_from(&(-lin.re));
    rhs.rows_mut(s, m).copy_from(&(-lin.ri));
    for i in 0..n {
        a[(s + m + 2 * i, i)] = 1.0;
        a[(s + m + 2 * i + 1, i)] = -1.0;
        rhs[s + m + 2 * i] = lin.delta;
        rhs[s + m + 2 * i + 1] = lin.delta;
    }
    if let Some(rho) = penalty {
        for j in 0..ns {
            q[(n + j, n + j)] = SLACK_CURVATURE;
            cc[n + j] = rho;
            a[(s + m + 2 * n + j, n + j)] = -1.0;
        }
        for e in 0..s {
            a[(e, n + e)] = -1.0;
            a[(e, n + s + e)] = 1.0;
        }
        for i in 0..m {
            a[(s + i, n + 2 * s + i)] = -1.0;
        }
    }
    let mut qv: Vec<f64> = row_major(&q).collect();
    let amat: Vec<f64> = row_major(&a).collect();
    let sol = solve_qp(&mut qv, cc.as_slice(), &amat, rhs.as_slice(), s, false)?;
    let d = Vector::from_vec(sol.sol[..n].to_vec());
    let u = Vector::from_iterator(m, sol.lagr[s..s + m].iter().copied());
    let mut stat = lin.b * &d + lin.c + lin.ai.tr_mul(&u);
    for i in 0..n {
        stat[i] += sol.lagr[s + m + 2 * i] - sol.lagr[s + m + 2 * i + 1];
    }
    Ok(QpStep {
        v: equality_multipliers(lin.ae, &(-stat)),
        d,
        u,
        elastic: penalty,
    })
}

// Ordinary QP first; on inconsistency, the penalty QP with ρ raised until the
// linearized violation actually drops (or ρ hits its cap).
fn subproblem(lin: &Linearization<'_>, rho0: f64) -> Result<QpStep, quadprog::Error> {
    match qp(lin, None) {
        Err(quadprog::Error::Infeasible) => {}
        other => return other,
    }
    let zero = Vector::zeros(lin.c.len());
    let base = lin.violation(&zero);
    let mut rho = rho0;
    loop {
        let step = qp(lin, Some(rho))?;
        if lin.violation(&step.d) < base * (1.0 - 1e-8) || rho >= MAX_PENALTY {
            return Ok(step);
        }
        rho *= 10.0;
    }
}

fn violation(p: &NlpPoint) -> (f64, f64) {
    let vi = p.ineq.iter().fold(0.0f64, |a, &c| a.max(c));
    let ve = p.eq.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    (vi, ve)
}

fn merit(p: &NlpPoint, mu_i: &Vector, mu_e: &Vector) -> f64 {
    let pi: f64 = p.ineq.iter().zip(mu_i.iter()).map(|(c, m)| m * c.max(0.0)).sum();
    let pe: f64 = p.eq.iter().zip(mu_e.iter()).map(|(c, m)| m * c.abs()).sum();
    p.objective + pi + pe
}

fn kkt_norm(it: &Iterate, u: &Vector, v: &Vector) -> f64 {
    let stat = &it.derivs.gradient + it.derivs.ineq.tr_mul(u) + it.derivs.eq.tr_mul(v);
    let comp = u.component_mul(&it.point.ineq);
    (stat.norm_squared() + comp.norm_squared()).sqrt()
}

fn finite_point(p: &NlpPoint) -> bool {
    p.objective.is_finite() && p.ineq.iter().chain(p.eq.iter()).all(|c| c.is_finite())
}

fn load(model: &dyn NlpModel, x: Vector, counters: &mut EvalCounters) -> Result<Option<Iterate>, ProblemError> {
    let point = match model.evaluate(&x, counters) {
        Ok(p) if finite_point(&p) => p,
        Ok(_) | Err(ProblemError::NonFinite { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let derivs = model.derivatives(&x, counters)?;
    Ok(Some(Iterate { x, point, derivs }))
}

fn evaluate_only(model: &dyn NlpModel, x: &Vector, counters: &mut EvalCounters) -> Result<Option<NlpPoint>, ProblemError> {
    match model.evaluate(x, counters) {
        Ok(p) if finite_point(&p) => Ok(Some(p)),
        Ok(_) | Err(ProblemError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn bfgs_update(b: &mut Matrix, s: &Vector, y: &Vector) {
    let bs = &*b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 1e-300) {
        return;
    }
    let sy = s.dot(y);
    let y = if sy < 0.2 * sbs {
        let theta = 0.8 * sbs / (sbs - sy);
        y * theta + &bs * (1.0 - theta)
    } else {
        y.clone()
    };
    let sy = s.dot(&y);
    if !(sy > 1e-300) {
        return;
    }
    *b += &y * y.transpose() / sy - &bs * bs.transpose() / sbs;
    // keep exact symmetry for the QP solver
    let sym = (&*b + b.transpose()) * 0.5;
    *b = sym;
}

/// Local KKT point of the program in `spec`.
pub fn minimize_constrained(spec: &NlpSpec<'_>, counters: &mut EvalCounters) -> Result<NlpResult, NlpError> {
    if !(spec.tol_opt > 0.0 && spec.tol_feas > 0.0) {
        return Err(NlpError::Config("tolerances must be positive".into()));
    }
    let model = spec.model;
    let n = model.dim();
    if spec.x0.len() != n {
        return Err(NlpError::Problem(ProblemError::DimensionMismatch {
            expected: n,
            actual: spec.x0.len(),
        }));
    }
    let mut it = load(model, spec.x0.clone(), counters)?
        .ok_or_else(|| NlpError::BadStart(format!("{:?}", spec.x0.as_slice())))?;
    let (mi, me) = (model.num_ineq(), model.num_eq());
    let mut b = Matrix::identity(n, n);
    let mut u = Vector::zeros(mi);
    let mut v = Vector::zeros(me);
    let mut mu_i = Vector::zeros(mi);
    let mut mu_e = Vector::zeros(me);
    let mut message = None;
    let mut status = NlpStatus::MaxIter;
    let mut iterations = 0;
    let mut resets = 0;
    let mut stalled = 0;

    while iterations < spec.max_iter {
        let lin = Linearization {
            b: &b,
            c: &it.derivs.gradient,
            ae: &it.derivs.eq,
            re: &it.point.eq,
            ai: &it.derivs.ineq,
            ri: &it.point.ineq,
            delta: STEP_BOUND * (1.0 + it.x.amax()),
        };
        let rho0 = 10.0 * (1.0 + u.amax().max(v.amax()).max(mu_i.amax()).max(mu_e.amax()));
        let step = match subproblem(&lin, rho0) {
            Ok(s) => s,
            Err(quadprog::Error::NotPositiveDefinite) if resets < 3 => {
                b = Matrix::identity(n, n);
                resets += 1;
                continue;
            }
            Err(e) => {
                message = Some(format!("QP subproblem failed: {e}"));
                break;
            }
        };
        let (vi, ve) = violation(&it.point);
        let feasible = vi <= spec.tol_feas && ve <= spec.tol_feas;
        let base_violation = lin.violation(&Vector::zeros(n));
        let new_violation = lin.violation(&step.d);

        if let Some(rho) = step.elastic {
            // linearization inconsistent and no step reduces the violation
            if new_violation >= base_violation * (1.0 - 1e-8) {
                status = NlpStatus::Infeasible;
                message = Some("linearized constraints admit no reduction in violation".into());
                break;
            }
            mu_i.iter_mut().for_each(|m| *m = m.max(rho));
            mu_e.iter_mut().for_each(|m| *m = m.max(rho));
        } else {
            u = step.u.map(|c| c.max(0.0));
            v = step.v.clone();
            if feasible && kkt_norm(&it, &u, &v) <= spec.tol_opt * (1.0 + it.derivs.gradient.amax()) {
                status = NlpStatus::Optimal;
                break;
            }
            for i in 0..mi {
                let l = step.u[i].abs();
                mu_i[i] = l.max(0.5 * (mu_i[i] + l)) + 1e-6;
            }
            for k in 0..me {
                let l = step.v[k].abs();
                mu_e[k] = l.max(0.5 * (mu_e[k] + l)) + 1e-6;
            }
        }

        let phi0 = merit(&it.point, &mu_i, &mu_e);
        // predicted change of the merit function's linear model
        let lin_e = &it.derivs.eq * &step.d + &it.point.eq;
        let lin_i = &it.derivs.ineq * &step.d + &it.point.ineq;
        let mut slope = it.derivs.gradient.dot(&step.d);
        for k in 0..me {
            slope += mu_e[k] * (lin_e[k].abs() - it.point.eq[k].abs());
        }
        for i in 0..mi {
            slope += mu_i[i] * (lin_i[i].max(0.0) - it.point.ineq[i].max(0.0));
        }
        if slope >= 0.0 {
            slope = -step.d.dot(&(&b * &step.d));
        }

        let mut alpha = 1.0;
        let mut next: Option<Vector> = None;
        // full step, then its second-order correction, then backtracking
        let full = &it.x + &step.d;
        if let Some(p) = evaluate_only(model, &full, counters)? {
            if merit(&p, &mu_i, &mu_e) <= phi0 + ARMIJO * slope {
                next = Some(full.clone());
            } else if step.elastic.is_none() {
                let re = &p.eq - &it.derivs.eq * &step.d;
                let ri = &p.ineq - &it.derivs.ineq * &step.d;
                let soc_lin = Linearization {
                    b: &b,
                    c: &it.derivs.gradient,
                    ae: &it.derivs.eq,
                    re: &re,
                    ai: &it.derivs.ineq,
                    ri: &ri,
                    delta: STEP_BOUND * (1.0 + it.x.amax()),
                };
                if let Ok(soc) = qp(&soc_lin, None) {
                    let trial = &it.x + &soc.d;
                    if let Some(ps) = evaluate_only(model, &trial, counters)? {
                        if merit(&ps, &mu_i, &mu_e) <= phi0 + ARMIJO * slope {
                            next = Some(trial);
                        }
                    }
                }
            }
        }
        while next.is_none() && alpha > 1e-12 {
            alpha *= 0.5;
            let trial = &it.x + &step.d * alpha;
            if let Some(p) = evaluate_only(model, &trial, counters)? {
                if merit(&p, &mu_i, &mu_e) <= phi0 + ARMIJO * alpha * slope {
                    next = Some(trial);
                }
            }
        }
        let Some(xn) = next else {
            if resets < 3 {
                b = Matrix::identity(n, n);
                resets += 1;
                iterations += 1;
                continue;
            }
            message = Some("line search failed".into());
            break;
        };
        let Some(new_it) = load(model, xn, counters)? else {
            message = Some("non-finite values at accepted point".into());
            break;
        };
        let lag = |d: &NlpDerivatives| &d.gradient + d.ineq.tr_mul(&step.u) + d.eq.tr_mul(&step.v);
        let s = &new_it.x - &it.x;
        let y = lag(&new_it.derivs) - lag(&it.derivs);
        bfgs_update(&mut b, &s, &y);
        stalled = if s.amax() <= 1e-14 * (1.0 + it.x.amax()) { stalled + 1 } else { 0 };
        it = new_it;
        iterations += 1;
        if stalled >= 5 {
            message = Some("iterates stalled at machine precision".into());
            break;
        }
    }
    if status == NlpStatus::MaxIter && message.is_none() {
        message = Some(format!("iteration cap {} reached", spec.max_iter));
    }
    let (vi, ve) = violation(&it.point);
    Ok(NlpResult {
        kkt_residual: kkt_norm(&it, &u, &v),
        objective: it.point.objective,
        x_star: it.x,
        ineq_multipliers: u,
        eq_multipliers: v,
        ineq_violation: vi,
        eq_violation: ve,
        status,
        iterations,
        message,
    })
}

/// Nearest point of `{g ≤ 0, h = 0}` to `x0` in the Euclidean norm.
pub fn project_to_feasible(
    problem: &ProblemDefinition,
    x0: &Vector,
    counters: &mut EvalCounters,
) -> Result<NlpResult, NlpError> {
    if problem.m() + problem.s() == 0 {
        return Err(NlpError::Config(format!("problem `{}` has no constraints", problem.name())));
    }
    let model = ProblemModel::new(problem, Scalarization::Distance(x0.clone()));
    minimize_constrained(&NlpSpec::new(&model, x0.clone()), counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{SamplingBox, ScalarFunction};
    use crate::registry::get_problem;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn scalar_problem() -> ProblemDefinition {
        ProblemDefinition::builder("x2", 1)
            .objective(ScalarFunction::new(|x| x[0] * x[0]).with_gradient(|x| v(&[2.0 * x[0]])))
            .inequality(ScalarFunction::new(|x| 1.0 - x[0]).with_gradient(|_| v(&[-1.0])))
            .sampling_box(SamplingBox::cube(1, -5.0, 5.0).unwrap())
            .build()
            .unwrap()
    }

    #[test]
    fn quadratic_with_lower_bound() {
        let p = scalar_problem();
        let model = ProblemModel::new(&p, Scalarization::Single(0));
        let r = minimize_constrained(&NlpSpec::new(&model, v(&[5.0])), &mut EvalCounters::new(1)).unwrap();
        assert!(r.is_optimal(), "{r:?}");
        assert_abs_diff_eq!(r.x_star[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(r.ineq_multipliers[0], 2.0, epsilon = 1e-6);
    }

    fn line_problem() -> ProblemDefinition {
        ProblemDefinition::builder("line", 2)
            .objective(ScalarFunction::new(|x| x.norm_squared()).with_gradient(|x| x * 2.0))
            .equality(ScalarFunction::new(|x| x[0] + x[1] - 1.0).with_gradient(|_| v(&[1.0, 1.0])))
            .sampling_box(SamplingBox::cube(2, -2.0, 2.0).unwrap())
            .build()
            .unwrap()
    }

    #[test]
    fn projection_onto_a_line() {
        let p = line_problem();
        let model = ProblemModel::new(&p, Scalarization::Single(0));
        let r = minimize_constrained(&NlpSpec::new(&model, v(&[0.0, 0.0])), &mut EvalCounters::new(1)).unwrap();
        assert!(r.is_optimal());
        assert_abs_diff_eq!(r.x_star, v(&[0.5, 0.5]), epsilon = 1e-8);
        // ∇f + v ∇h = 0 → v = -1
        assert_abs_diff_eq!(r.eq_multipliers[0], -1.0, epsilon = 1e-6);
    }

    #[test]
    fn ex2_weighted_sum() {
        let p = get_problem("ex2_5d").unwrap();
        let model = ProblemModel::new(&p, Scalarization::Weighted(v(&[0.4, 0.6])));
        let mut c = EvalCounters::new(2);
        let r = minimize_constrained(&NlpSpec::new(&model, v(&[1.0, 2.0, 0.0, 1.0, 1.0])), &mut c).unwrap();
        assert!(r.is_optimal(), "{r:?}");
        let expected = v(&[-0.1385, -0.0508, -0.5301, -0.4175, 1.5012]);
        assert!((&r.x_star - expected).amax() <= 2e-2, "{}", r.x_star);
        let f = p.evaluate_objectives(&r.x_star, &mut c).unwrap();
        assert!((f[0] - 2.7308).abs() <= 2e-2 && (f[1] + 0.4110).abs() <= 2e-2, "{f}");
        assert!(r.kkt_residual <= 1e-7);
        assert!(r.ineq_multipliers.iter().all(|&u| u >= -1e-10));
        assert!(c.objectives[0] > 0 && c.objectives[0] == c.objectives[1]);
    }

    #[test]
    fn detects_infeasible_program() {
        // x ≥ 1 and x ≤ -1
        let p = ProblemDefinition::builder("empty", 1)
            .objective(ScalarFunction::new(|x| x[0]).with_gradient(|_| v(&[1.0])))
            .inequality(ScalarFunction::new(|x| 1.0 - x[0]).with_gradient(|_| v(&[-1.0])))
            .inequality(ScalarFunction::new(|x| x[0] + 1.0).with_gradient(|_| v(&[1.0])))
            .sampling_box(SamplingBox::cube(1, -5.0, 5.0).unwrap())
            .build()
            .unwrap();
        let model = ProblemModel::new(&p, Scalarization::Single(0));
        let r = minimize_constrained(&NlpSpec::new(&model, v(&[3.0])), &mut EvalCounters::new(1)).unwrap();
        assert_eq!(r.status, NlpStatus::Infeasible, "{r:?}");
    }

    #[test]
    fn iteration_cap_reports_max_iter() {
        let p = get_problem("ex2_5d").unwrap();
        let model = ProblemModel::new(&p, Scalarization::Weighted(v(&[0.4, 0.6])));
        let spec = NlpSpec {
            max_iter: 1,
            ..NlpSpec::new(&model, v(&[1.0, 2.0, 0.0, 1.0, 1.0]))
        };
        let r = minimize_constrained(&spec, &mut EvalCounters::new(2)).unwrap();
        assert_eq!(r.status, NlpStatus::MaxIter);
    }

    #[test]
    fn projection_restores_feasibility() {
        let mut c = EvalCounters::new(2);
        let ex1 = get_problem("ex1_2d").unwrap();
        let r = project_to_feasible(&ex1, &v(&[0.0, 0.0]), &mut c).unwrap();
        assert!(r.is_optimal(), "{r:?}");
        let (g, h) = ex1.evaluate_constraints(&r.x_star, &mut c).unwrap();
        assert!(g[0] <= 1e-8 && h[0].abs() <= 1e-6, "{g} {h}");
        assert_eq!(c.objectives, vec![0, 0]);

        let feasible = v(&[-1.0, 1.0]);
        let r = project_to_feasible(&ex1, &feasible, &mut c).unwrap();
        assert!((&r.x_star - &feasible).norm() <= 1e-8);
        let again = project_to_feasible(&ex1, &r.x_star, &mut c).unwrap();
        assert!((&again.x_star - &r.x_star).norm() <= 1e-8);
    }

    #[test]
    fn projection_needs_constraints() {
        let p = ProblemDefinition::builder("free", 1)
            .objective(ScalarFunction::new(|x| x[0]))
            .sampling_box(SamplingBox::cube(1, -1.0, 1.0).unwrap())
            .build()
            .unwrap();
        assert!(project_to_feasible(&p, &v(&[0.0]), &mut EvalCounters::new(1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn ex2_projection_contract(xs in prop::collection::vec(-5.0f64..5.0, 5)) {
            let p = get_problem("ex2_5d").unwrap();
            let mut c = EvalCounters::new(2);
            let r = project_to_feasible(&p, &v(&xs), &mut c).unwrap();
            prop_assert!(r.is_optimal(), "{:?}", r);
            prop_assert!(r.eq_violation <= 1e-8 && r.ineq_violation <= 1e-8);
            prop_assert!(r.ineq_multipliers.iter().all(|&u| u >= -1e-10));
            prop_assert!(r.kkt_residual <= 1e-8 * (1.0 + 2.0 * (&r.x_star - v(&xs)).amax()));
        }
    }
}
