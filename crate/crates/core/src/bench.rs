//! Benchmark harness: all six methods on one registered problem, plus the
//! check of published candidate points for `ex2_5d`.

use std::io::Write;

use serde::Serialize;

use crate::nsga2::{evolve, GaConfig};
use crate::problem::{EvalCounters, ProblemError, Vector};
use crate::registry::{defaults, get_problem};
use crate::report::{Method, SolveReport};
use crate::sampling::{metrics_report, MetricsRow};
use crate::scalarization::{
    epsilon_constraint_solve, global_criterion_solve, lexicographic_solve, weighted_sum_solve, GcmConfig,
};
use crate::tracker::{solve_homotopy, TrackerConfig};

/// A published candidate point for `ex2_5d` with its tabulated values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteraturePoint {
    pub label: &'static str,
    pub x: [f64; 5],
    pub f: [f64; 2],
    pub h: [f64; 2],
    pub g: f64,
    pub feasible: bool,
}

pub const LITERATURE_POINTS: [LiteraturePoint; 3] = [
    LiteraturePoint {
        label: "shang",
        x: [0.3077, 0.5374, -0.2703, -0.1336, 0.2804],
        f: [0.5530, 2.0873],
        h: [-0.1011, 0.0],
        g: -9.5256,
        feasible: false,
    },
    LiteraturePoint {
        label: "zhao",
        x: [-1.3074, -2.8605, -1.0470, 0.4103, 0.4475],
        f: [11.3566, -9.2942],
        h: [1.08e-4, -7.7391],
        g: 1.1563,
        feasible: false,
    },
    LiteraturePoint {
        label: "homotopy",
        x: [0.3214, 0.5131, -0.2773, -0.1405, 0.3048],
        f: [0.5561, 2.0819],
        h: [-2.0e-4, 0.0],
        g: -9.5368,
        feasible: true,
    },
];

/// One compared value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckCell {
    pub point: &'static str,
    pub quantity: String,
    pub expected: f64,
    pub actual: f64,
    pub pass: bool,
}

/// Evaluates every [`LITERATURE_POINTS`] entry and compares each tabulated
/// value within `tol`. The points are printed to four decimals, so the
/// feasibility flag also uses `tol` as the violation threshold.
pub fn literature_check(tol: f64) -> Result<Vec<CheckCell>, ProblemError> {
    let p = get_problem("ex2_5d")?;
    let mut c = EvalCounters::new(2);
    let mut cells = Vec::new();
    for lp in &LITERATURE_POINTS {
        let x = Vector::from_column_slice(&lp.x);
        let f = p.evaluate_objectives(&x, &mut c)?;
        let (g, h) = p.evaluate_constraints(&x, &mut c)?;
        let mut push = |q: &str, expected: f64, actual: f64| {
            cells.push(CheckCell {
                point: lp.label,
                quantity: q.to_string(),
                expected,
                actual,
                pass: (expected - actual).abs() <= tol,
            })
        };
        push("f1", lp.f[0], f[0]);
        push("f2", lp.f[1], f[1]);
        push("h1", lp.h[0], h[0]);
        push("h2", lp.h[1], h[1]);
        push("g", lp.g, g[0]);
        let feasible = g[0] <= tol && h.iter().all(|v| v.abs() <= tol);
        cells.push(CheckCell {
            point: lp.label,
            quantity: "feasible".into(),
            expected: f64::from(u8::from(lp.feasible)),
            actual: f64::from(u8::from(feasible)),
            pass: feasible == lp.feasible,
        });
    }
    Ok(cells)
}

/// One method's outcome in a bench run.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub report: Option<SolveReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub problem: String,
    pub rows: Vec<BenchRow>,
    pub metrics: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seed: u64,
    pub parallel: bool,
    pub tracker: TrackerConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 42,
            parallel: false,
            tracker: TrackerConfig::default(),
        }
    }
}

/// Runs homotopy, weighted sum, ε-constraint, weighted `D₁` global
/// criterion, lexicographic `(1, 2, …)` and NSGA-II with the problem's
/// registered defaults. A failing method is recorded and the run goes on.
pub fn run_bench(problem_name: &str, cfg: &BenchConfig) -> Result<BenchResult, ProblemError> {
    let problem = get_problem(problem_name)?;
    let d = defaults(problem_name)?;
    let p = problem.p();
    let x0 = Vector::from_column_slice(&d.x0);
    let w = Vector::from_column_slice(&d.weights);
    let mut rows = Vec::new();
    let mut record = |method: Method, r: Result<SolveReport, String>| {
        rows.push(match r {
            Ok(rep) => BenchRow {
                method,
                report: Some(rep),
                error: None,
            },
            Err(e) => BenchRow {
                method,
                report: None,
                error: Some(e),
            },
        })
    };

    let u0 = Vector::from_element(problem.m(), 1.0);
    let hx0 = Vector::from_column_slice(&d.homotopy_x0);
    record(
        Method::Homotopy,
        solve_homotopy(&problem, &hx0, &w, &u0, &cfg.tracker, &mut EvalCounters::new(p))
            .map(|(r, _)| r)
            .map_err(|e| e.to_string()),
    );
    record(
        Method::Wsm,
        weighted_sum_solve(&problem, &w, &x0, &mut EvalCounters::new(p)).map_err(|e| e.to_string()),
    );
    record(
        Method::Ecm,
        epsilon_constraint_solve(
            &problem,
            d.epsilon_primary,
            &Vector::from_column_slice(&d.epsilon_bounds),
            &x0,
            &mut EvalCounters::new(p),
        )
        .map_err(|e| e.to_string()),
    );
    record(
        Method::Gcm,
        global_criterion_solve(&problem, &x0, &GcmConfig::weighted_l1(w.clone()), &mut EvalCounters::new(p))
            .map_err(|e| e.to_string()),
    );
    let order: Vec<usize> = (0..p).collect();
    record(
        Method::Lex,
        lexicographic_solve(&problem, &order, 1e-6, &x0, &mut EvalCounters::new(p))
            .map(|r| r.report)
            .map_err(|e| e.to_string()),
    );
    let ga = GaConfig {
        population: d.nsga_population,
        generations: d.nsga_generations,
        seed: cfg.seed,
        parallel: cfg.parallel,
        ..GaConfig::default()
    };
    record(
        Method::Nsga2,
        evolve(&problem, &ga, &mut EvalCounters::new(p))
            .map_err(|e| e.to_string())
            .and_then(|r| r.best_report(&problem, &w).map_err(|e| e.to_string())),
    );

    let reports: Vec<SolveReport> = rows.iter().filter_map(|r| r.report.clone()).collect();
    Ok(BenchResult {
        problem: problem_name.to_string(),
        rows,
        metrics: metrics_report(&reports),
    })
}

impl BenchResult {
    /// Columns `method, status, params, x…, f…, g…, h…, kkt_residual,
    /// feasible`; a failed method gets its error as status and empty cells.
    pub fn write_solutions_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let problem = get_problem(&self.problem).map_err(|e| std::io::Error::other(e.to_string()))?;
        let (n, p, m, s) = (problem.n(), problem.p(), problem.m(), problem.s());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string(), "status".into(), "params".into()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=p).map(|i| format!("f{i}")));
        header.extend((1..=m).map(|i| format!("g{i}")));
        header.extend((1..=s).map(|i| format!("h{i}")));
        header.push("kkt_residual".into());
        header.push("feasible".into());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.method.to_string()];
            match &row.report {
                Some(r) => {
                    rec.push(r.status.clone());
                    rec.push(r.params.clone());
                    rec.extend(r.x.iter().chain(&r.f).chain(&r.g).chain(&r.h).map(|v| v.to_string()));
                    rec.push(r.kkt_residual.to_string());
                    rec.push(r.feasibility.feasible.to_string());
                }
                None => {
                    rec.push(format!("error: {}", row.error.as_deref().unwrap_or("unknown")));
                    rec.extend(std::iter::repeat_n(String::new(), 1 + n + p + m + s + 2));
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn report(&self, method: Method) -> Option<&SolveReport> {
        self.rows.iter().find(|r| r.method == method).and_then(|r| r.report.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literature_cells_pass() {
        let cells = literature_check(1e-3).unwrap();
        assert_eq!(cells.len(), 18);
        for c in &cells {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn tight_tolerance_fails_some_cells() {
        assert!(literature_check(1e-9).unwrap().iter().any(|c| !c.pass));
    }
}
