//! Per-run results shared by every solver.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::problem::{EvalCounters, FeasibilityReport, FeasibilityTolerances, ProblemDefinition, ProblemError, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Homotopy,
    Wsm,
    Ecm,
    Gcm,
    Lex,
    Nsga2,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Homotopy,
        Method::Wsm,
        Method::Ecm,
        Method::Gcm,
        Method::Lex,
        Method::Nsga2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Homotopy => "homotopy",
            Method::Wsm => "wsm",
            Method::Ecm => "ecm",
            Method::Gcm => "gcm",
            Method::Lex => "lex",
            Method::Nsga2 => "nsga2",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, Method::Nsga2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of homotopy, wsm, ecm, gcm, lex, nsga2)"))
    }
}

/// Outcome of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub method: Method,
    /// Free-form method parameters, e.g. `w=0.4;0.6`.
    pub params: String,
    pub success: bool,
    pub status: String,
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub kkt_residual: f64,
    pub feasibility: FeasibilityReport,
    pub counters: EvalCounters,
    pub wall_time_s: f64,
}

/// Everything a solver knows about its answer; [`SolveReport::build`] adds
/// the objective and constraint values.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: Method,
    pub params: String,
    pub success: bool,
    pub status: String,
    pub x: Vector,
    pub w: Vector,
    pub u: Vector,
    pub v: Vector,
    pub kkt_residual: f64,
    pub counters: EvalCounters,
    pub wall_time_s: f64,
}

impl SolveReport {
    /// Evaluates `f`, `g`, `h` at the summary's point. These evaluations are
    /// bookkeeping and do not touch the run's counters.
    pub fn build(problem: &ProblemDefinition, run: RunSummary) -> Result<Self, ProblemError> {
        let mut scratch = EvalCounters::new(problem.p());
        let f = problem.evaluate_objectives(&run.x, &mut scratch)?;
        let feasibility = problem.feasibility_report(&run.x, FeasibilityTolerances::default(), &mut scratch)?;
        Ok(SolveReport {
            problem: problem.name().to_string(),
            method: run.method,
            params: run.params,
            success: run.success,
            status: run.status,
            x: run.x.as_slice().to_vec(),
            f: f.as_slice().to_vec(),
            g: feasibility.g_values.clone(),
            h: feasibility.h_values.clone(),
            w: run.w.as_slice().to_vec(),
            u: run.u.as_slice().to_vec(),
            v: run.v.as_slice().to_vec(),
            kkt_residual: run.kkt_residual,
            feasibility,
            counters: run.counters,
            wall_time_s: run.wall_time_s,
        })
    }
}

/// Columns `method, status, params, x…, f…, g…, h…, kkt_residual, feasible,
/// f1_evals.., constraint_evals, gradient_evals, hessian_evals, h_evals,
/// dh_evals, wall_time_s`. Dimensions come from `dims = [n, p, m, s]`.
pub fn write_reports_csv<W: Write>(reports: &[SolveReport], dims: [usize; 4], out: W) -> csv::Result<()> {
    let [n, p, m, s] = dims;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["method".to_string(), "status".into(), "params".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=p).map(|i| format!("f{i}")));
    header.extend((1..=m).map(|i| format!("g{i}")));
    header.extend((1..=s).map(|i| format!("h{i}")));
    header.extend(["kkt_residual", "feasible"].map(String::from));
    header.extend((1..=p).map(|i| format!("f{i}_evals")));
    header.extend(
        ["constraint_evals", "gradient_evals", "hessian_evals", "h_evals", "dh_evals", "wall_time_s"].map(String::from),
    );
    w.write_record(&header)?;
    for r in reports {
        let c = &r.counters;
        let mut row = vec![r.method.to_string(), r.status.clone(), r.params.clone()];
        row.extend(r.x.iter().chain(&r.f).chain(&r.g).chain(&r.h).map(|v| v.to_string()));
        row.push(r.kkt_residual.to_string());
        row.push(r.feasibility.feasible.to_string());
        row.extend((0..p).map(|i| c.objectives.get(i).copied().unwrap_or(0).to_string()));
        row.extend([c.constraints, c.gradients, c.hessians, c.homotopy_maps, c.homotopy_jacobians].map(|v| v.to_string()));
        row.push(format!("{:.6}", r.wall_time_s));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Formats a vector as `a;b;c` for parameter strings and CSV cells.
pub fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}
