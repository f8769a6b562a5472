//! Deterministic baselines: weighted sum, ε-constraint, global criterion and
//! lexicographic ordering, all driven through [`crate::nlp`].

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::nlp::{minimize_constrained, NlpError, NlpResult, NlpSpec, ProblemModel, Scalarization};
use crate::problem::{EvalCounters, FeasibilityTolerances, ProblemDefinition, ProblemError, Vector};
use crate::report::{join, Method, RunSummary, SolveReport};
use crate::sampling::{distinct_points, dominates, projected_cloud};

/// Tolerances an entry must meet to stay in a [`FrontSet`].
pub const FRONT_TOLERANCES: FeasibilityTolerances = FeasibilityTolerances {
    g: 1e-6,
    h: 1e-5,
    active: 1e-6,
};

/// Componentwise tolerance of the final nondominance pass.
pub const DOMINANCE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScalarizationError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Nlp(#[from] NlpError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid settings: {0}")]
    Config(String),
    #[error("every run failed: {0}")]
    AllFailed(String),
    #[error("ideal value of objective {component} not found: {message}")]
    Ideal { component: usize, message: String },
    #[error("lexicographic stage {stage} (objective {objective}) has no solution: {message}")]
    LexStage {
        stage: usize,
        objective: usize,
        message: String,
    },
}

/// Weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    weights: Vec<Vector>,
}

impl WeightGrid {
    pub fn new(weights: Vec<Vector>) -> Result<Self, ScalarizationError> {
        let Some(first) = weights.first() else {
            return Err(ScalarizationError::InvalidGrid("no weights".into()));
        };
        let p = first.len();
        for w in &weights {
            if w.len() != p || p == 0 {
                return Err(ScalarizationError::InvalidGrid("weights differ in length".into()));
            }
            if w.iter().any(|&x| !(x >= 0.0)) || (w.sum() - 1.0).abs() > 1e-12 {
                return Err(ScalarizationError::InvalidGrid(format!("{:?} is not on the simplex", w.as_slice())));
            }
        }
        Ok(WeightGrid { weights })
    }

    /// `count` interior weights `w₁ = (i + 1)/(count + 1)` for two
    /// objectives; the single weight `(1)` for one.
    pub fn uniform(p: usize, count: usize) -> Result<Self, ScalarizationError> {
        match p {
            1 => WeightGrid::new(vec![Vector::from_element(1, 1.0)]),
            2 => WeightGrid::new(
                (0..count)
                    .map(|i| {
                        let a = (i + 1) as f64 / (count + 1) as f64;
                        Vector::from_vec(vec![a, 1.0 - a])
                    })
                    .collect(),
            ),
            _ => WeightGrid::simplex_lattice(p, count.max(1)),
        }
    }

    /// All weights with entries `kᵢ / divisions`.
    pub fn simplex_lattice(p: usize, divisions: usize) -> Result<Self, ScalarizationError> {
        fn fill(rest: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if slots == 1 {
                prefix.push(rest);
                out.push(prefix.clone());
                prefix.pop();
                return;
            }
            for k in 0..=rest {
                prefix.push(k);
                fill(rest - k, slots - 1, prefix, out);
                prefix.pop();
            }
        }
        if p == 0 || divisions == 0 {
            return Err(ScalarizationError::InvalidGrid("empty lattice".into()));
        }
        let mut combos = Vec::new();
        fill(divisions, p, &mut Vec::new(), &mut combos);
        let d = divisions as f64;
        WeightGrid::new(
            combos
                .into_iter()
                .map(|c| {
                    let mut w = Vector::from_iterator(p, c.iter().map(|&k| k as f64 / d));
                    // exact simplex sum after rounding
                    let drift = w.sum() - 1.0;
                    w[p - 1] -= drift;
                    w
                })
                .collect(),
        )
    }

    pub fn weights(&self) -> &[Vector] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Bounds for the ε-constraint method; entry `primary` of each vector is
/// ignored, `+∞` disables a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonGrid {
    primary: usize,
    values: Vec<Vector>,
}

impl EpsilonGrid {
    pub fn new(primary: usize, values: Vec<Vector>) -> Result<Self, ScalarizationError> {
        let Some(first) = values.first() else {
            return Err(ScalarizationError::InvalidGrid("no ε-vectors".into()));
        };
        let p = first.len();
        if primary >= p {
            return Err(ScalarizationError::InvalidGrid(format!("primary index {primary} out of range")));
        }
        if values.iter().any(|e| e.len() != p) {
            return Err(ScalarizationError::InvalidGrid("ε-vectors differ in length".into()));
        }
        Ok(EpsilonGrid { primary, values })
    }

    /// `count` evenly spaced values per constrained objective between its
    /// minimum and maximum over `objectives` (a cartesian product when more
    /// than one objective is constrained).
    pub fn from_cloud(objectives: &[Vector], primary: usize, count: usize) -> Result<Self, ScalarizationError> {
        let Some(first) = objectives.first() else {
            return Err(ScalarizationError::InvalidGrid("empty cloud".into()));
        };
        if count == 0 {
            return Err(ScalarizationError::InvalidGrid("count must be positive".into()));
        }
        let p = first.len();
        let axes: Vec<Vec<f64>> = (0..p)
            .map(|k| {
                if k == primary {
                    return vec![f64::NAN];
                }
                let lo = objectives.iter().map(|f| f[k]).fold(f64::INFINITY, f64::min);
                let hi = objectives.iter().map(|f| f[k]).fold(f64::NEG_INFINITY, f64::max);
                if count == 1 {
                    return vec![hi];
                }
                (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()
            })
            .collect();
        let mut values = vec![Vec::new()];
        for axis in &axes {
            values = values
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    axis.iter().map(move |&a| {
                        let mut v = prefix.clone();
                        v.push(a);
                        v
                    })
                })
                .collect();
        }
        EpsilonGrid::new(primary, values.into_iter().map(Vector::from_vec).collect())
    }

    pub fn primary(&self) -> usize {
        self.primary
    }

    pub fn values(&self) -> &[Vector] {
        &self.values
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontEntry {
    pub report: SolveReport,
    /// Feasible under [`FRONT_TOLERANCES`].
    pub feasible: bool,
}

/// A run left out of a front, and why.
#[derive(Debug, Clone, Serialize)]
pub struct SkippedRun {
    pub params: String,
    pub status: String,
    pub note: String,
}

/// Counters and outcome of one sweep run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub params: String,
    pub status: String,
    pub success: bool,
    pub counters: EvalCounters,
    pub wall_time_s: f64,
}

impl RunRecord {
    pub fn of(r: &SolveReport) -> Self {
        RunRecord {
            params: r.params.clone(),
            status: r.status.clone(),
            success: r.success,
            counters: r.counters.clone(),
            wall_time_s: r.wall_time_s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontSet {
    pub problem: String,
    pub dims: [usize; 4],
    pub entries: Vec<FrontEntry>,
    pub skipped: Vec<SkippedRun>,
    /// One record per attempted run, in sweep order.
    pub runs: Vec<RunRecord>,
    /// Total evaluations of every run, kept or not.
    pub counters: EvalCounters,
}

impl FrontSet {
    pub fn new(problem: &ProblemDefinition) -> Self {
        FrontSet {
            problem: problem.name().to_string(),
            dims: [problem.n(), problem.p(), problem.m(), problem.s()],
            entries: Vec::new(),
            skipped: Vec::new(),
            runs: Vec::new(),
            counters: EvalCounters::new(problem.p()),
        }
    }

    /// Wraps reports without filtering; `feasible` is recomputed with
    /// [`FRONT_TOLERANCES`].
    pub fn from_reports(problem: &ProblemDefinition, reports: Vec<SolveReport>) -> Self {
        let mut set = FrontSet::new(problem);
        for r in reports {
            set.counters += &r.counters;
            set.runs.push(RunRecord::of(&r));
            set.entries.push(FrontEntry {
                feasible: front_feasible(&r),
                report: r,
            });
        }
        set
    }

    pub fn objectives(&self) -> Vec<Vector> {
        self.entries.iter().map(|e| Vector::from_column_slice(&e.report.f)).collect()
    }

    /// Keeps successful runs that meet [`FRONT_TOLERANCES`], lists the rest
    /// in `skipped`, then drops dominated entries.
    pub fn assemble(problem: &ProblemDefinition, reports: Vec<SolveReport>) -> Self {
        let mut set = FrontSet::new(problem);
        for r in reports {
            set.counters += &r.counters;
            set.runs.push(RunRecord::of(&r));
            if r.success && front_feasible(&r) {
                set.entries.push(FrontEntry { feasible: true, report: r });
            } else {
                set.skipped.push(SkippedRun {
                    note: format!("run stopped with status {}", r.status),
                    params: r.params,
                    status: r.status,
                });
            }
        }
        set.filter_dominated();
        set
    }

    /// Indices of entries whose objective vectors differ by more than `tol`
    /// in the max norm from every earlier kept entry.
    pub fn distinct(&self, tol: f64) -> Vec<usize> {
        distinct_points(&self.objectives(), tol)
    }

    /// Moves dominated entries (tolerance [`DOMINANCE_TOL`]) to `skipped`.
    pub fn filter_dominated(&mut self) {
        let fs = self.objectives();
        let keep: Vec<bool> = (0..fs.len())
            .map(|i| !(0..fs.len()).any(|j| j != i && dominates(fs[j].as_slice(), fs[i].as_slice(), DOMINANCE_TOL)))
            .collect();
        let entries = std::mem::take(&mut self.entries);
        for (e, k) in entries.into_iter().zip(keep) {
            if k {
                self.entries.push(e);
            } else {
                self.skipped.push(SkippedRun {
                    params: e.report.params.clone(),
                    status: e.report.status.clone(),
                    note: "dominated by another entry".into(),
                });
            }
        }
    }

    /// Columns `method, params, x…, f…, g…, h…, kkt_residual, feasible`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let [n, p, m, s] = self.dims;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string(), "params".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=p).map(|i| format!("f{i}")));
        header.extend((1..=m).map(|i| format!("g{i}")));
        header.extend((1..=s).map(|i| format!("h{i}")));
        header.push("kkt_residual".into());
        header.push("feasible".into());
        w.write_record(&header)?;
        for e in &self.entries {
            let r = &e.report;
            let mut row = vec![r.method.to_string(), r.params.clone()];
            row.extend(r.x.iter().chain(&r.f).chain(&r.g).chain(&r.h).map(|v| v.to_string()));
            row.push(r.kkt_residual.to_string());
            row.push(e.feasible.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl FrontSet {
    /// Columns `params, status, success, wall_time_s, f1_evals.., constraint_evals,
    /// gradient_evals, hessian_evals, h_evals, dh_evals`.
    pub fn write_runs_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let p = self.dims[1];
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["params".to_string(), "status".into(), "success".into(), "wall_time_s".into()];
        header.extend((1..=p).map(|i| format!("f{i}_evals")));
        header.extend(
            ["constraint_evals", "gradient_evals", "hessian_evals", "h_evals", "dh_evals"].map(String::from),
        );
        w.write_record(&header)?;
        for r in &self.runs {
            let c = &r.counters;
            let mut row = vec![r.params.clone(), r.status.clone(), r.success.to_string(), format!("{:.6}", r.wall_time_s)];
            row.extend((0..p).map(|i| c.objectives.get(i).copied().unwrap_or(0).to_string()));
            row.extend([c.constraints, c.gradients, c.hessians, c.homotopy_maps, c.homotopy_jacobians].map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn front_feasible(r: &SolveReport) -> bool {
    r.g.iter().all(|&g| g <= FRONT_TOLERANCES.g) && r.h.iter().all(|&h| h.abs() <= FRONT_TOLERANCES.h)
}

fn summary(
    method: Method,
    params: String,
    res: &NlpResult,
    m: usize,
    w: Vector,
    counters: EvalCounters,
    start: Instant,
) -> RunSummary {
    RunSummary {
        method,
        params,
        success: res.is_optimal(),
        status: res.status.as_str().to_string(),
        x: res.x_star.clone(),
        w,
        u: res.ineq_multipliers.rows(0, m).into_owned(),
        v: res.eq_multipliers.clone(),
        kkt_residual: res.kkt_residual,
        counters,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn finish(problem: &ProblemDefinition, run: RunSummary) -> Result<SolveReport, ScalarizationError> {
    let mut rep = SolveReport::build(problem, run)?;
    if rep.success && !front_feasible(&rep) {
        rep.success = false;
        rep.status = "infeasible".into();
    }
    Ok(rep)
}

fn check_start(problem: &ProblemDefinition, x0: &Vector) -> Result<(), ScalarizationError> {
    if x0.len() != problem.n() {
        return Err(ProblemError::DimensionMismatch {
            expected: problem.n(),
            actual: x0.len(),
        }
        .into());
    }
    Ok(())
}

/// One weighted-sum run: `min Σ wᵢ fᵢ` over the feasible set.
pub fn weighted_sum_solve(
    problem: &ProblemDefinition,
    w: &Vector,
    x0: &Vector,
    counters: &mut EvalCounters,
) -> Result<SolveReport, ScalarizationError> {
    check_start(problem, x0)?;
    if w.len() != problem.p() {
        return Err(ScalarizationError::Config(format!("expected {} weights", problem.p())));
    }
    let start = Instant::now();
    let mut local = EvalCounters::new(problem.p());
    let model = ProblemModel::new(problem, Scalarization::Weighted(w.clone()));
    let res = minimize_constrained(&NlpSpec::new(&model, x0.clone()), &mut local)?;
    *counters += &local;
    let params = format!("w={}", join(w.as_slice()));
    finish(
        problem,
        summary(Method::Wsm, params, &res, problem.m(), w.clone(), local, start),
    )
}

/// One ε-constraint run: `min f_μ` with `f_k ≤ ε_k` added for every finite
/// `ε_k`, `k ≠ μ`. The reported weights are those implied by the bound
/// multipliers, `(1, λ_k)` normalized.
pub fn epsilon_constraint_solve(
    problem: &ProblemDefinition,
    primary: usize,
    eps: &Vector,
    x0: &Vector,
    counters: &mut EvalCounters,
) -> Result<SolveReport, ScalarizationError> {
    check_start(problem, x0)?;
    let p = problem.p();
    if primary >= p || eps.len() != p {
        return Err(ScalarizationError::Config("ε-vector or primary index does not match the problem".into()));
    }
    let start = Instant::now();
    let mut model = ProblemModel::new(problem, Scalarization::Single(primary));
    let mut bounded = Vec::new();
    for k in (0..p).filter(|&k| k != primary) {
        if eps[k].is_finite() {
            model = model.with_bound(k, eps[k]);
            bounded.push(k);
        }
    }
    let mut local = EvalCounters::new(p);
    let res = minimize_constrained(&NlpSpec::new(&model, x0.clone()), &mut local)?;
    *counters += &local;
    let mut w = Vector::zeros(p);
    w[primary] = 1.0;
    for (j, &k) in bounded.iter().enumerate() {
        w[k] = res.ineq_multipliers[problem.m() + j].max(0.0);
    }
    w /= w.sum();
    let params = format!(
        "primary={};eps={}",
        primary + 1,
        join(&(0..p).filter(|&k| k != primary).map(|k| eps[k]).collect::<Vec<_>>())
    );
    finish(problem, summary(Method::Ecm, params, &res, problem.m(), w, local, start))
}

fn run_front(
    problem: &ProblemDefinition,
    jobs: usize,
    parallel: bool,
    counters: &mut EvalCounters,
    job: impl Fn(usize, &mut EvalCounters) -> Result<SolveReport, ScalarizationError> + Sync,
) -> Result<FrontSet, ScalarizationError> {
    let run = |i: usize| {
        let mut local = EvalCounters::new(problem.p());
        let r = job(i, &mut local);
        (r, local)
    };
    let results: Vec<_> = if parallel {
        (0..jobs).into_par_iter().map(run).collect()
    } else {
        (0..jobs).map(run).collect()
    };
    let mut set = FrontSet::new(problem);
    let mut first_error = None;
    for (i, (r, local)) in results.into_iter().enumerate() {
        set.counters += &local;
        *counters += &local;
        set.runs.push(match &r {
            Ok(rep) => RunRecord::of(rep),
            Err(e) => RunRecord {
                params: format!("job {i}"),
                status: format!("error: {e}"),
                success: false,
                counters: local.clone(),
                wall_time_s: 0.0,
            },
        });
        match r {
            Ok(rep) if rep.success => set.entries.push(FrontEntry { feasible: true, report: rep }),
            Ok(rep) => set.skipped.push(SkippedRun {
                note: format!("subsolver stopped with status {}", rep.status),
                params: rep.params,
                status: rep.status,
            }),
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
                set.skipped.push(SkippedRun {
                    params: format!("job {i}"),
                    status: "error".into(),
                    note: e.to_string(),
                });
            }
        }
    }
    if set.entries.is_empty() {
        let why = first_error
            .or_else(|| set.skipped.first().map(|s| s.note.clone()))
            .unwrap_or_else(|| "no runs".into());
        return Err(ScalarizationError::AllFailed(why));
    }
    set.filter_dominated();
    Ok(set)
}

/// One weighted-sum run per grid weight; failed or infeasible runs are
/// listed in `skipped`.
pub fn weighted_sum_front(
    problem: &ProblemDefinition,
    grid: &WeightGrid,
    x0: &Vector,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<FrontSet, ScalarizationError> {
    if grid.weights()[0].len() != problem.p() {
        return Err(ScalarizationError::InvalidGrid(format!("expected {} weights", problem.p())));
    }
    run_front(problem, grid.len(), parallel, counters, |i, c| {
        weighted_sum_solve(problem, &grid.weights()[i], x0, c)
    })
}

/// One ε-constraint run per grid vector.
pub fn epsilon_constraint_front(
    problem: &ProblemDefinition,
    grid: &EpsilonGrid,
    x0: &Vector,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<FrontSet, ScalarizationError> {
    if grid.values()[0].len() != problem.p() {
        return Err(ScalarizationError::InvalidGrid(format!("expected {} entries", problem.p())));
    }
    run_front(problem, grid.values().len(), parallel, counters, |i, c| {
        epsilon_constraint_solve(problem, grid.primary(), &grid.values()[i], x0, c)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdealPoint {
    pub f_star: Vector,
    /// Objective ranges over the projected cloud; 1 where a range vanishes.
    pub scales: Vector,
}

/// Where the criterion scales come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScaleSource {
    /// Objective ranges over a projected feasible cloud.
    Cloud { size: usize, seed: u64 },
    /// All scales 1.
    Unit,
}

/// Componentwise minima of the objectives, each from one subsolver run
/// started at `x0`, plus scales from `source`.
pub fn ideal_point(
    problem: &ProblemDefinition,
    x0: &Vector,
    source: ScaleSource,
    counters: &mut EvalCounters,
) -> Result<IdealPoint, ScalarizationError> {
    check_start(problem, x0)?;
    let p = problem.p();
    let mut f_star = Vector::zeros(p);
    for i in 0..p {
        let model = ProblemModel::new(problem, Scalarization::Single(i));
        let res = minimize_constrained(&NlpSpec::new(&model, x0.clone()), counters)?;
        if !res.is_optimal() {
            return Err(ScalarizationError::Ideal {
                component: i + 1,
                message: res.message.unwrap_or_else(|| res.status.as_str().to_string()),
            });
        }
        f_star[i] = res.objective;
    }
    let scales = match source {
        ScaleSource::Unit => Vector::from_element(p, 1.0),
        ScaleSource::Cloud { size, seed } => {
            let cloud = projected_cloud(problem, problem.sampling_box(), size, seed, false, counters)?;
            let fs = cloud.objectives();
            Vector::from_iterator(
                p,
                (0..p).map(|i| {
                    let lo = fs.iter().map(|f| f[i]).fold(f64::INFINITY, f64::min);
                    let hi = fs.iter().map(|f| f[i]).fold(f64::NEG_INFINITY, f64::max);
                    let r = hi - lo;
                    if r.is_finite() && r > 1e-12 { r } else { 1.0 }
                }),
            )
        }
    };
    Ok(IdealPoint { f_star, scales })
}

/// Settings of the global criterion method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcmConfig {
    /// Norm exponent, at least 1.
    pub norm_p: f64,
    /// Per-objective weights; `None` means all 1.
    pub weights: Option<Vector>,
    pub scales: ScaleSource,
}

impl Default for GcmConfig {
    /// `D₂` with ranges from a 1000-point projected cloud.
    fn default() -> Self {
        GcmConfig {
            norm_p: 2.0,
            weights: None,
            scales: ScaleSource::Cloud { size: 1000, seed: 0 },
        }
    }
}

impl GcmConfig {
    /// Weighted `D₁` with unit scales. On the feasible set `fᵢ ≥ f*ᵢ`, so the
    /// criterion is `Σ wᵢ fᵢ` shifted by a constant.
    pub fn weighted_l1(weights: Vector) -> Self {
        GcmConfig {
            norm_p: 1.0,
            weights: Some(weights),
            scales: ScaleSource::Unit,
        }
    }

    fn params(&self) -> String {
        let mut s = format!("p={}", self.norm_p);
        if let Some(w) = &self.weights {
            s.push_str(&format!(";w={}", join(w.as_slice())));
        }
        match self.scales {
            ScaleSource::Cloud { size, seed } => s.push_str(&format!(";scales=cloud{size};seed={seed}")),
            ScaleSource::Unit => s.push_str(";scales=unit"),
        }
        s
    }
}

/// Minimizes `D_p(x)^p = Σ λᵢ |fᵢ(x) − f*ᵢ|^p / sᵢ^p` (same minimizers as
/// `D_p`, smoother for `p > 1`). Counters include the ideal-point runs.
pub fn global_criterion_solve(
    problem: &ProblemDefinition,
    x0: &Vector,
    cfg: &GcmConfig,
    counters: &mut EvalCounters,
) -> Result<SolveReport, ScalarizationError> {
    if !(cfg.norm_p >= 1.0) {
        return Err(ScalarizationError::Config("norm_p must be at least 1".into()));
    }
    let p = problem.p();
    let weights = cfg.weights.clone().unwrap_or_else(|| Vector::from_element(p, 1.0));
    if weights.len() != p || weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(ScalarizationError::Config("criterion weights must be nonnegative, one per objective".into()));
    }
    let start = Instant::now();
    let mut local = EvalCounters::new(p);
    let ideal = ideal_point(problem, x0, cfg.scales, &mut local)?;
    let model = ProblemModel::new(
        problem,
        Scalarization::Criterion {
            ideal: ideal.f_star.clone(),
            scales: ideal.scales.clone(),
            weights: weights.clone(),
            p: cfg.norm_p,
        },
    );
    let res = minimize_constrained(&NlpSpec::new(&model, x0.clone()), &mut local)?;
    *counters += &local;
    let w = &weights / weights.sum();
    finish(problem, summary(Method::Gcm, cfg.params(), &res, problem.m(), w, local, start))
}

/// Outcome of [`lexicographic_solve`].
#[derive(Debug, Clone, Serialize)]
pub struct LexResult {
    pub report: SolveReport,
    /// `f*` of each stage, in priority order.
    pub stage_optima: Vec<f64>,
}

/// Minimizes the objectives one after another in `order` (zero-based
/// indices). Stage `k` keeps `f_j ≤ f*_j + tol_lex` for every earlier stage
/// `j` and starts from the previous stage's solution.
pub fn lexicographic_solve(
    problem: &ProblemDefinition,
    order: &[usize],
    tol_lex: f64,
    x0: &Vector,
    counters: &mut EvalCounters,
) -> Result<LexResult, ScalarizationError> {
    check_start(problem, x0)?;
    let p = problem.p();
    let mut seen = vec![false; p];
    if order.len() != p || order.iter().any(|&k| k >= p || std::mem::replace(&mut seen[k], true)) {
        return Err(ScalarizationError::Config(format!("{order:?} is not a permutation of 0..{p}")));
    }
    if !(tol_lex > 0.0) {
        return Err(ScalarizationError::Config("tol_lex must be positive".into()));
    }
    let start = Instant::now();
    let mut local = EvalCounters::new(p);
    let mut x = x0.clone();
    let mut stage_optima = Vec::with_capacity(p);
    let mut last = None;
    for (stage, &k) in order.iter().enumerate() {
        let mut model = ProblemModel::new(problem, Scalarization::Single(k));
        for (j, &fj) in order[..stage].iter().zip(&stage_optima) {
            model = model.with_bound(*j, fj + tol_lex);
        }
        let res = minimize_constrained(&NlpSpec::new(&model, x.clone()), &mut local)?;
        if !res.is_optimal() {
            *counters += &local;
            return Err(ScalarizationError::LexStage {
                stage: stage + 1,
                objective: k + 1,
                message: res.message.unwrap_or_else(|| res.status.as_str().to_string()),
            });
        }
        stage_optima.push(res.objective);
        x = res.x_star.clone();
        last = Some(res);
    }
    *counters += &local;
    let res = last.expect("at least one stage");
    let mut w = Vector::zeros(p);
    w[order[0]] = 1.0;
    let params = format!(
        "order={};tol={tol_lex}",
        order.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",")
    );
    let report = finish(problem, summary(Method::Lex, params, &res, problem.m(), w, local, start))?;
    Ok(LexResult { report, stage_optima })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::get_problem;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn weight_grid_validation() {
        assert!(WeightGrid::new(vec![]).is_err());
        assert!(WeightGrid::new(vec![v(&[0.5, 0.6])]).is_err());
        assert!(WeightGrid::new(vec![v(&[-0.1, 1.1])]).is_err());
        let g = WeightGrid::uniform(2, 3).unwrap();
        assert_eq!(g.weights()[0], v(&[0.25, 0.75]));
        assert_eq!(g.len(), 3);
        let l = WeightGrid::simplex_lattice(3, 4).unwrap();
        assert_eq!(l.len(), 15);
    }

    #[test]
    fn epsilon_grid_from_cloud() {
        let cloud = vec![v(&[0.0, 1.0]), v(&[1.0, 3.0]), v(&[2.0, 2.0])];
        let g = EpsilonGrid::from_cloud(&cloud, 0, 5).unwrap();
        assert_eq!(g.values().len(), 5);
        assert_eq!(g.values()[0][1], 1.0);
        assert_eq!(g.values()[4][1], 3.0);
        assert!(g.values()[2][0].is_nan());
        assert!(EpsilonGrid::new(2, vec![v(&[0.0, 0.0])]).is_err());
    }

    #[test]
    fn single_objective_weighted_sum_is_plain_minimization() {
        let p = ProblemDefinition::builder("bowl", 2)
            .objective(crate::problem::ScalarFunction::new(|x| (x[0] - 1.0).powi(2) + x[1] * x[1]))
            .inequality(crate::problem::ScalarFunction::new(|x| x[0] - 0.5))
            .sampling_box(crate::problem::SamplingBox::cube(2, -2.0, 2.0).unwrap())
            .build()
            .unwrap();
        let mut c = EvalCounters::new(1);
        let r = weighted_sum_solve(&p, &v(&[1.0]), &v(&[0.0, 0.3]), &mut c).unwrap();
        assert!(r.success);
        assert!((r.x[0] - 0.5).abs() < 1e-6 && r.x[1].abs() < 1e-6);
        assert!((r.u[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_epsilon_is_plain_minimization_of_the_primary() {
        let p = get_problem("ex1_2d").unwrap();
        let x0 = v(&[0.0, 0.0]);
        let mut c = EvalCounters::new(2);
        let a = epsilon_constraint_solve(&p, 0, &v(&[f64::NAN, f64::INFINITY]), &x0, &mut c).unwrap();
        let ideal = ideal_point(&p, &x0, ScaleSource::Unit, &mut c).unwrap();
        assert!(a.success);
        assert!((a.f[0] - ideal.f_star[0]).abs() < 1e-8);
        assert_eq!(a.w, vec![1.0, 0.0]);
    }

    #[test]
    fn unattainable_epsilon_is_recorded() {
        let p = get_problem("ex2_5d").unwrap();
        let mut c = EvalCounters::new(2);
        let x0 = v(&[1.0, 2.0, 0.0, 1.0, 1.0]);
        let r = epsilon_constraint_solve(&p, 0, &v(&[f64::NAN, -1e3]), &x0, &mut c).unwrap();
        assert!(!r.success);
        let grid = EpsilonGrid::new(0, vec![v(&[f64::NAN, -1e3])]).unwrap();
        assert!(matches!(
            epsilon_constraint_front(&p, &grid, &x0, false, &mut c),
            Err(ScalarizationError::AllFailed(_))
        ));
    }

    #[test]
    fn weighted_l1_criterion_matches_weighted_sum() {
        let p = get_problem("ex2_5d").unwrap();
        let x0 = v(&[1.0, 2.0, 0.0, 1.0, 1.0]);
        let mut c = EvalCounters::new(2);
        let g = global_criterion_solve(&p, &x0, &GcmConfig::weighted_l1(v(&[0.4, 0.6])), &mut c).unwrap();
        let w = weighted_sum_solve(&p, &v(&[0.4, 0.6]), &x0, &mut c).unwrap();
        assert!(g.success && w.success);
        for (a, b) in g.f.iter().zip(&w.f) {
            assert!((a - b).abs() < 1e-5, "{:?} vs {:?}", g.f, w.f);
        }
    }

    #[test]
    fn lexicographic_rejects_bad_order() {
        let p = get_problem("ex1_2d").unwrap();
        let mut c = EvalCounters::new(2);
        let x0 = v(&[0.0, 0.0]);
        assert!(lexicographic_solve(&p, &[0, 0], 1e-6, &x0, &mut c).is_err());
        assert!(lexicographic_solve(&p, &[0, 1], 0.0, &x0, &mut c).is_err());
    }

    #[test]
    fn front_csv_header() {
        let p = get_problem("ex1_2d").unwrap();
        let mut c = EvalCounters::new(2);
        let set = weighted_sum_front(&p, &WeightGrid::uniform(2, 2).unwrap(), &v(&[0.0, 0.0]), false, &mut c).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "method,params,x1,x2,f1,f2,g1,h1,kkt_residual,feasible");
        assert_eq!(set.counters, c);
    }
}
