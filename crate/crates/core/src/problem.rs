//! Problem definitions: objectives, constraints, their derivatives, and
//! evaluation accounting.
//!
//! A [`ProblemDefinition`] describes
//!
//! ```text
//!     minimize   (f_1(x), ..., f_p(x))
//!     subject to g_i(x) <= 0,  i = 1..m
//!                h_j(x)  = 0,  j = 1..s
//! ```
//!
//! Every scalar function carries an optional analytic gradient and Hessian.
//! Missing derivatives fall back to central finite differences, and the
//! problem remembers that it did so ([`ProblemDefinition::has_analytic_derivatives`]).

use std::fmt;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type HessianFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Largest asymmetry tolerated in an analytic Hessian.
pub const HESSIAN_SYMMETRY_TOL: f64 = 1e-10;

/// Which block of the problem a scalar function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionKind {
    Objective,
    Inequality,
    Equality,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionKind::Objective => "objective",
            FunctionKind::Inequality => "inequality constraint",
            FunctionKind::Equality => "equality constraint",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: expected a vector of length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{kind} {index} returned a non-finite value")]
    NonFinite { kind: FunctionKind, index: usize },
    #[error("{kind} {index}: derivative provider returned shape {rows}x{cols}, expected {expected}")]
    DerivativeShape {
        kind: FunctionKind,
        index: usize,
        rows: usize,
        cols: usize,
        expected: String,
    },
    #[error("Hessian of {kind} {index} is not symmetric (max asymmetry {asymmetry:e})")]
    AsymmetricHessian {
        kind: FunctionKind,
        index: usize,
        asymmetry: f64,
    },
    #[error("unknown problem `{name}`; available problems: {available}")]
    UnknownProblem { name: String, available: String },
    #[error("invalid problem definition: {0}")]
    Invalid(String),
}

/// A scalar function of `x` with optional analytic first and second derivatives.
#[derive(Clone)]
pub struct ScalarFunction {
    value: ValueFn,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

impl ScalarFunction {
    pub fn new(value: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        ScalarFunction {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(mut self, gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    /// Analytic gradient, or central differences of the value.
    pub fn gradient(&self, x: &Vector) -> Vector {
        match &self.gradient {
            Some(g) => g(x),
            None => central_difference_gradient(&*self.value, x),
        }
    }

    /// Analytic Hessian, or symmetrized central differences of the gradient.
    pub fn hessian(&self, x: &Vector) -> Matrix {
        match &self.hessian {
            Some(h) => h(x),
            None => {
                let n = x.len();
                let mut hess = Matrix::zeros(n, n);
                let mut xp = x.clone();
                for j in 0..n {
                    let step = fd_step(x[j]);
                    xp[j] = x[j] + step;
                    let gp = self.gradient(&xp);
                    xp[j] = x[j] - step;
                    let gm = self.gradient(&xp);
                    xp[j] = x[j];
                    hess.set_column(j, &((gp - gm) / (2.0 * step)));
                }
                (&hess + hess.transpose()) * 0.5
            }
        }
    }
}

fn fd_step(xi: f64) -> f64 {
    // cube root of machine epsilon, scaled with the coordinate
    6.055_454_452_393_343e-6 * (1.0 + xi.abs())
}

fn central_difference_gradient(f: &(dyn Fn(&Vector) -> f64 + Send + Sync), x: &Vector) -> Vector {
    let mut grad = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let step = fd_step(x[i]);
        xp[i] = x[i] + step;
        let fp = f(&xp);
        xp[i] = x[i] - step;
        let fm = f(&xp);
        xp[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * step);
    }
    grad
}

/// Axis-aligned box used for sampling and evolutionary initialization only.
/// It is never enforced as a constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SamplingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ProblemError> {
        if lower.len() != upper.len() {
            return Err(ProblemError::Invalid(format!(
                "sampling box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(i) = (0..lower.len()).find(|&i| !(lower[i] < upper[i])) {
            return Err(ProblemError::Invalid(format!(
                "sampling box coordinate {i} has lower {} >= upper {}",
                lower[i], upper[i]
            )));
        }
        Ok(SamplingBox { lower, upper })
    }

    /// The same interval `[lo, hi]` in every coordinate.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, ProblemError> {
        SamplingBox::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && (0..self.dim()).all(|i| self.lower[i] <= x[i] && x[i] <= self.upper[i])
    }
}

/// Evaluation counters for one run.
///
/// Counters are plain values: each run owns its own and results from
/// independent runs are combined with `+`/`+=` after the fact.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounters {
    /// One count per objective.
    pub objectives: Vec<u64>,
    /// Joint `(g, h)` evaluations.
    pub constraints: u64,
    pub gradients: u64,
    pub hessians: u64,
    pub homotopy_maps: u64,
    pub homotopy_jacobians: u64,
}

impl EvalCounters {
    pub fn new(p: usize) -> Self {
        EvalCounters {
            objectives: vec![0; p],
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &EvalCounters) {
        if self.objectives.len() < other.objectives.len() {
            self.objectives.resize(other.objectives.len(), 0);
        }
        for (a, b) in self.objectives.iter_mut().zip(&other.objectives) {
            *a += b;
        }
        self.constraints += other.constraints;
        self.gradients += other.gradients;
        self.hessians += other.hessians;
        self.homotopy_maps += other.homotopy_maps;
        self.homotopy_jacobians += other.homotopy_jacobians;
    }

    /// Largest per-objective evaluation count.
    pub fn max_objective(&self) -> u64 {
        self.objectives.iter().copied().max().unwrap_or(0)
    }

    fn bump_objectives(&mut self, p: usize) {
        if self.objectives.len() < p {
            self.objectives.resize(p, 0);
        }
        for c in &mut self.objectives[..p] {
            *c += 1;
        }
    }
}

impl AddAssign<&EvalCounters> for EvalCounters {
    fn add_assign(&mut self, rhs: &EvalCounters) {
        self.merge(rhs);
    }
}

impl Add for EvalCounters {
    type Output = EvalCounters;

    fn add(mut self, rhs: EvalCounters) -> EvalCounters {
        self.merge(&rhs);
        self
    }
}

impl std::iter::Sum for EvalCounters {
    fn sum<I: Iterator<Item = EvalCounters>>(iter: I) -> Self {
        iter.fold(EvalCounters::default(), |acc, c| acc + c)
    }
}

/// Tolerances used by [`ProblemDefinition::feasibility_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTolerances {
    pub g: f64,
    pub h: f64,
    pub active: f64,
}

impl Default for FeasibilityTolerances {
    fn default() -> Self {
        FeasibilityTolerances {
            g: 1e-8,
            h: 1e-6,
            active: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub g_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub g_ok: bool,
    pub h_ok: bool,
    pub feasible: bool,
    /// Zero-based indices of inequality constraints with `|g_i| <= tol_active`.
    pub active_set: Vec<usize>,
}

impl FeasibilityReport {
    pub fn from_values(g: &[f64], h: &[f64], tol: FeasibilityTolerances) -> Self {
        let g_ok = g.iter().all(|&gi| gi <= tol.g);
        let h_ok = h.iter().all(|&hj| hj.abs() <= tol.h);
        FeasibilityReport {
            g_values: g.to_vec(),
            h_values: h.to_vec(),
            g_ok,
            h_ok,
            feasible: g_ok && h_ok,
            active_set: (0..g.len()).filter(|&i| g[i].abs() <= tol.active).collect(),
        }
    }

    /// Largest violation: `max(max_i g_i^+, max_j |h_j|)`.
    pub fn max_violation(&self) -> f64 {
        let g = self.g_values.iter().fold(0.0_f64, |a, &v| a.max(v.max(0.0)));
        self.h_values.iter().fold(g, |a, &v| a.max(v.abs()))
    }
}

/// Stacked first derivatives; row `i` of each matrix is a gradient.
#[derive(Debug, Clone)]
pub struct Jacobians {
    pub f: Matrix,
    pub g: Matrix,
    pub h: Matrix,
}

#[derive(Debug, Clone)]
pub struct Hessians {
    pub f: Vec<Matrix>,
    pub g: Vec<Matrix>,
    pub h: Vec<Matrix>,
}

#[derive(Clone)]
pub struct ProblemDefinition {
    name: String,
    n: usize,
    objectives: Vec<ScalarFunction>,
    ineq: Vec<ScalarFunction>,
    eq: Vec<ScalarFunction>,
    sampling_box: SamplingBox,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("p", &self.p())
            .field("m", &self.m())
            .field("s", &self.s())
            .field("sampling_box", &self.sampling_box)
            .finish()
    }
}

pub struct ProblemBuilder {
    name: String,
    n: usize,
    objectives: Vec<ScalarFunction>,
    ineq: Vec<ScalarFunction>,
    eq: Vec<ScalarFunction>,
    sampling_box: Option<SamplingBox>,
}

impl ProblemBuilder {
    pub fn objective(mut self, f: ScalarFunction) -> Self {
        self.objectives.push(f);
        self
    }

    /// Adds `g(x) <= 0`.
    pub fn inequality(mut self, g: ScalarFunction) -> Self {
        self.ineq.push(g);
        self
    }

    /// Adds `h(x) = 0`.
    pub fn equality(mut self, h: ScalarFunction) -> Self {
        self.eq.push(h);
        self
    }

    pub fn sampling_box(mut self, b: SamplingBox) -> Self {
        self.sampling_box = Some(b);
        self
    }

    pub fn build(self) -> Result<ProblemDefinition, ProblemError> {
        if self.n == 0 {
            return Err(ProblemError::Invalid("decision dimension must be at least 1".into()));
        }
        if self.objectives.is_empty() {
            return Err(ProblemError::Invalid("at least one objective is required".into()));
        }
        let sampling_box = match self.sampling_box {
            Some(b) => b,
            None => return Err(ProblemError::Invalid("a sampling box is required".into())),
        };
        if sampling_box.dim() != self.n {
            return Err(ProblemError::Invalid(format!(
                "sampling box has dimension {}, problem has {}",
                sampling_box.dim(),
                self.n
            )));
        }
        Ok(ProblemDefinition {
            name: self.name,
            n: self.n,
            objectives: self.objectives,
            ineq: self.ineq,
            eq: self.eq,
            sampling_box,
        })
    }
}

impl ProblemDefinition {
    pub fn builder(name: impl Into<String>, n: usize) -> ProblemBuilder {
        ProblemBuilder {
            name: name.into(),
            n,
            objectives: Vec::new(),
            ineq: Vec::new(),
            eq: Vec::new(),
            sampling_box: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Decision dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Objective count.
    pub fn p(&self) -> usize {
        self.objectives.len()
    }

    /// Inequality-constraint count.
    pub fn m(&self) -> usize {
        self.ineq.len()
    }

    /// Equality-constraint count.
    pub fn s(&self) -> usize {
        self.eq.len()
    }

    pub fn sampling_box(&self) -> &SamplingBox {
        &self.sampling_box
    }

    pub fn objective_functions(&self) -> &[ScalarFunction] {
        &self.objectives
    }

    pub fn inequality_functions(&self) -> &[ScalarFunction] {
        &self.ineq
    }

    pub fn equality_functions(&self) -> &[ScalarFunction] {
        &self.eq
    }

    /// True when every function carries an analytic gradient and Hessian.
    pub fn has_analytic_derivatives(&self) -> bool {
        self.all_functions()
            .all(|(_, _, f)| f.has_analytic_gradient() && f.has_analytic_hessian())
    }

    fn all_functions(&self) -> impl Iterator<Item = (FunctionKind, usize, &ScalarFunction)> {
        fn tag(kind: FunctionKind, fs: &[ScalarFunction]) -> impl Iterator<Item = (FunctionKind, usize, &ScalarFunction)> {
            fs.iter().enumerate().map(move |(i, f)| (kind, i, f))
        }
        tag(FunctionKind::Objective, &self.objectives)
            .chain(tag(FunctionKind::Inequality, &self.ineq))
            .chain(tag(FunctionKind::Equality, &self.eq))
    }

    fn check_dim(&self, x: &Vector) -> Result<(), ProblemError> {
        if x.len() != self.n {
            return Err(ProblemError::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn values(kind: FunctionKind, fs: &[ScalarFunction], x: &Vector) -> Result<Vector, ProblemError> {
        let mut out = Vector::zeros(fs.len());
        for (i, f) in fs.iter().enumerate() {
            let v = f.value(x);
            if !v.is_finite() {
                return Err(ProblemError::NonFinite { kind, index: i });
            }
            out[i] = v;
        }
        Ok(out)
    }

    /// `(f_1(x), ..., f_p(x))`; bumps every objective counter by one.
    pub fn evaluate_objectives(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Vector, ProblemError> {
        self.check_dim(x)?;
        counters.bump_objectives(self.p());
        Self::values(FunctionKind::Objective, &self.objectives, x)
    }

    /// Raw `(g(x), h(x))`; counts as a single joint constraint evaluation.
    pub fn evaluate_constraints(
        &self,
        x: &Vector,
        counters: &mut EvalCounters,
    ) -> Result<(Vector, Vector), ProblemError> {
        self.check_dim(x)?;
        counters.constraints += 1;
        let g = Self::values(FunctionKind::Inequality, &self.ineq, x)?;
        let h = Self::values(FunctionKind::Equality, &self.eq, x)?;
        Ok((g, h))
    }

    fn gradient_rows(
        &self,
        kind: FunctionKind,
        fs: &[ScalarFunction],
        x: &Vector,
    ) -> Result<Matrix, ProblemError> {
        let mut out = Matrix::zeros(fs.len(), self.n);
        for (i, f) in fs.iter().enumerate() {
            let g = f.gradient(x);
            if g.len() != self.n {
                return Err(ProblemError::DerivativeShape {
                    kind,
                    index: i,
                    rows: g.len(),
                    cols: 1,
                    expected: format!("{}", self.n),
                });
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(ProblemError::NonFinite { kind, index: i });
            }
            out.set_row(i, &g.transpose());
        }
        Ok(out)
    }

    /// Jacobians of `f`, `g` and `h`; one gradient count per call.
    pub fn jacobians(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Jacobians, ProblemError> {
        self.check_dim(x)?;
        counters.gradients += 1;
        Ok(Jacobians {
            f: self.gradient_rows(FunctionKind::Objective, &self.objectives, x)?,
            g: self.gradient_rows(FunctionKind::Inequality, &self.ineq, x)?,
            h: self.gradient_rows(FunctionKind::Equality, &self.eq, x)?,
        })
    }

    fn hessian_list(&self, kind: FunctionKind, fs: &[ScalarFunction], x: &Vector) -> Result<Vec<Matrix>, ProblemError> {
        fs.iter()
            .enumerate()
            .map(|(i, f)| {
                let h = f.hessian(x);
                if h.nrows() != self.n || h.ncols() != self.n {
                    return Err(ProblemError::DerivativeShape {
                        kind,
                        index: i,
                        rows: h.nrows(),
                        cols: h.ncols(),
                        expected: format!("{0}x{0}", self.n),
                    });
                }
                if h.iter().any(|v| !v.is_finite()) {
                    return Err(ProblemError::NonFinite { kind, index: i });
                }
                let asymmetry = (&h - h.transpose()).amax();
                if f.has_analytic_hessian() && asymmetry > HESSIAN_SYMMETRY_TOL {
                    return Err(ProblemError::AsymmetricHessian {
                        kind,
                        index: i,
                        asymmetry,
                    });
                }
                Ok(h)
            })
            .collect()
    }

    /// Hessians of every `f_i`, `g_j`, `h_k`; one Hessian count per call.
    pub fn hessians(&self, x: &Vector, counters: &mut EvalCounters) -> Result<Hessians, ProblemError> {
        self.check_dim(x)?;
        counters.hessians += 1;
        Ok(Hessians {
            f: self.hessian_list(FunctionKind::Objective, &self.objectives, x)?,
            g: self.hessian_list(FunctionKind::Inequality, &self.ineq, x)?,
            h: self.hessian_list(FunctionKind::Equality, &self.eq, x)?,
        })
    }

    /// Constraint values and feasibility flags at `x`. Only the constraint
    /// counter moves.
    pub fn feasibility_report(
        &self,
        x: &Vector,
        tol: FeasibilityTolerances,
        counters: &mut EvalCounters,
    ) -> Result<FeasibilityReport, ProblemError> {
        if !(tol.g > 0.0 && tol.h > 0.0 && tol.active > 0.0) {
            return Err(ProblemError::Invalid("feasibility tolerances must be positive".into()));
        }
        let (g, h) = self.evaluate_constraints(x, counters)?;
        Ok(FeasibilityReport::from_values(g.as_slice(), h.as_slice(), tol))
    }
}
