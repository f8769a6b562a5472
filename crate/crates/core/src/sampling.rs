//! Feasibility scans, projected feasible clouds, nondominance filtering and
//! per-method metric aggregation.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::nlp::project_to_feasible;
use crate::problem::{EvalCounters, FeasibilityReport, FeasibilityTolerances, ProblemDefinition, ProblemError, SamplingBox, Vector};
use crate::report::{Method, SolveReport};

/// Samples per generator stream.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudMethod {
    UniformFilter,
    Projection,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudMeta {
    pub sampling_box: SamplingBox,
    /// Samples drawn (or grid nodes visited).
    pub attempted: usize,
    pub retained: usize,
    /// Projections that did not reach an optimal, feasible point.
    pub failures: usize,
    pub tolerance: f64,
    pub seed: Option<u64>,
    pub method: CloudMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloudPoint {
    pub x: Vector,
    pub f: Vector,
    pub feasibility: FeasibilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
    pub meta: CloudMeta,
}

impl PointCloud {
    pub fn objectives(&self) -> Vec<Vector> {
        self.points.iter().map(|p| p.f.clone()).collect()
    }

    /// Columns `x1..xn, f1..fp, feasible`.
    pub fn write_csv<W: Write>(&self, out: W, n: usize, p: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        header.extend((1..=p).map(|i| format!("f{i}")));
        header.push("feasible".into());
        w.write_record(&header)?;
        for pt in &self.points {
            let mut row: Vec<String> = pt.x.iter().chain(pt.f.iter()).map(|v| format!("{v:e}")).collect();
            row.push(pt.feasibility.feasible.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn draw(rng: &mut ChaCha8Rng, b: &SamplingBox) -> Vector {
    Vector::from_iterator(b.dim(), b.lower.iter().zip(&b.upper).map(|(&lo, &hi)| rng.random_range(lo..hi)))
}

fn near_feasible(g: &Vector, h: &Vector, eps: f64) -> bool {
    g.iter().all(|&c| c <= 0.0) && h.iter().all(|&c| c.abs() <= eps)
}

// Runs `work` over chunk indices, serially or with rayon, and merges in
// chunk order so results do not depend on scheduling.
fn run_chunks<T, F>(chunks: usize, parallel: bool, p: usize, work: F) -> Result<(Vec<T>, EvalCounters), ProblemError>
where
    T: Send,
    F: Fn(usize, &mut EvalCounters) -> Result<Vec<T>, ProblemError> + Sync,
{
    let one = |c: usize| {
        let mut local = EvalCounters::new(p);
        work(c, &mut local).map(|v| (v, local))
    };
    let parts: Vec<_> = if parallel {
        (0..chunks).into_par_iter().map(one).collect()
    } else {
        (0..chunks).map(one).collect()
    };
    let mut out = Vec::new();
    let mut counters = EvalCounters::new(p);
    for part in parts {
        let (v, c) = part?;
        out.extend(v);
        counters += &c;
    }
    Ok((out, counters))
}

fn cloud_point(problem: &ProblemDefinition, x: Vector, counters: &mut EvalCounters) -> Result<CloudPoint, ProblemError> {
    let f = problem.evaluate_objectives(&x, counters)?;
    let feasibility = problem.feasibility_report(&x, FeasibilityTolerances::default(), counters)?;
    Ok(CloudPoint { x, f, feasibility })
}

/// Uniform samples kept when `g ≤ 0` and `|h| ≤ eps`.
pub fn uniform_feasibility_scan(
    problem: &ProblemDefinition,
    sampling_box: &SamplingBox,
    count: usize,
    eps: f64,
    seed: u64,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<PointCloud, ProblemError> {
    if sampling_box.dim() != problem.n() {
        return Err(ProblemError::DimensionMismatch {
            expected: problem.n(),
            actual: sampling_box.dim(),
        });
    }
    let chunks = count.div_ceil(CHUNK);
    let (points, local) = run_chunks(chunks, parallel, problem.p(), |c, cnt| {
        let mut rng = chunk_rng(seed, c);
        let len = CHUNK.min(count - c * CHUNK);
        let mut kept = Vec::new();
        for _ in 0..len {
            let x = draw(&mut rng, sampling_box);
            let (g, h) = problem.evaluate_constraints(&x, cnt)?;
            if near_feasible(&g, &h, eps) {
                kept.push(cloud_point(problem, x, cnt)?);
            }
        }
        Ok(kept)
    })?;
    *counters += &local;
    Ok(PointCloud {
        meta: CloudMeta {
            sampling_box: sampling_box.clone(),
            attempted: count,
            retained: points.len(),
            failures: 0,
            tolerance: eps,
            seed: Some(seed),
            method: CloudMethod::UniformFilter,
        },
        points,
    })
}

/// Evenly spaced grid including both box faces, `nodes[i]` points along
/// coordinate `i`; same retention rule as [`uniform_feasibility_scan`].
/// Only the retained count and points are kept.
pub fn grid_feasibility_scan(
    problem: &ProblemDefinition,
    sampling_box: &SamplingBox,
    nodes: &[usize],
    eps: f64,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<PointCloud, ProblemError> {
    let n = problem.n();
    if sampling_box.dim() != n || nodes.len() != n || nodes.iter().any(|&k| k < 2) {
        return Err(ProblemError::Invalid(format!(
            "grid needs {n} node counts of at least 2 matching the box"
        )));
    }
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (lo, hi, k) = (sampling_box.lower[i], sampling_box.upper[i], nodes[i]);
            (0..k).map(|j| lo + (hi - lo) * j as f64 / (k - 1) as f64).collect()
        })
        .collect();
    let total: usize = nodes.iter().product();
    let chunks = total.div_ceil(CHUNK * 16);
    let (points, local) = run_chunks(chunks, parallel, problem.p(), |c, cnt| {
        let start = c * CHUNK * 16;
        let end = (start + CHUNK * 16).min(total);
        let mut kept = Vec::new();
        let mut x = Vector::zeros(n);
        for idx in start..end {
            let mut rest = idx;
            for i in (0..n).rev() {
                x[i] = axes[i][rest % nodes[i]];
                rest /= nodes[i];
            }
            let (g, h) = problem.evaluate_constraints(&x, cnt)?;
            if near_feasible(&g, &h, eps) {
                kept.push(cloud_point(problem, x.clone(), cnt)?);
            }
        }
        Ok(kept)
    })?;
    *counters += &local;
    Ok(PointCloud {
        meta: CloudMeta {
            sampling_box: sampling_box.clone(),
            attempted: total,
            retained: points.len(),
            failures: 0,
            tolerance: eps,
            seed: None,
            method: CloudMethod::Grid,
        },
        points,
    })
}

/// Uniform samples projected onto the feasible set; a projection is kept
/// only when the subsolver reports optimality and the point satisfies the
/// default feasibility tolerances.
pub fn projected_cloud(
    problem: &ProblemDefinition,
    sampling_box: &SamplingBox,
    count: usize,
    seed: u64,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<PointCloud, ProblemError> {
    let tol = FeasibilityTolerances::default();
    let chunk = 64;
    let chunks = count.div_ceil(chunk);
    let (outcomes, local) = run_chunks(chunks, parallel, problem.p(), |c, cnt| {
        let mut rng = chunk_rng(seed, c);
        let len = chunk.min(count - c * chunk);
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let x0 = draw(&mut rng, sampling_box);
            let r = match project_to_feasible(problem, &x0, cnt) {
                Ok(r) => r,
                Err(crate::nlp::NlpError::Problem(e)) => return Err(e),
                Err(_) => {
                    out.push(None);
                    continue;
                }
            };
            if !r.is_optimal() {
                out.push(None);
                continue;
            }
            let pt = cloud_point(problem, r.x_star, cnt)?;
            let ok = pt.feasibility.g_values.iter().all(|&g| g <= tol.g) && pt.feasibility.h_ok;
            out.push(ok.then_some(pt));
        }
        Ok(out)
    })?;
    *counters += &local;
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let points: Vec<CloudPoint> = outcomes.into_iter().flatten().collect();
    Ok(PointCloud {
        meta: CloudMeta {
            sampling_box: sampling_box.clone(),
            attempted: count,
            retained: points.len(),
            failures,
            tolerance: tol.h,
            seed: Some(seed),
            method: CloudMethod::Projection,
        },
        points,
    })
}

/// `a` dominates `b`: no component worse by more than `tol` and at least
/// one better by more than `tol`.
pub fn dominates(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= y + tol) && a.iter().zip(b).any(|(x, y)| *x < y - tol)
}

/// Indices of the points not dominated by any other point.
pub fn nondominance_filter(points: &[Vector], tol: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points
                .iter()
                .enumerate()
                .any(|(j, q)| j != i && dominates(q.as_slice(), points[i].as_slice(), tol))
        })
        .collect()
}

/// Greedy de-duplication: keeps the first of any group of points within
/// `tol` of each other in the max norm.
pub fn distinct_points(points: &[Vector], tol: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !kept.iter().any(|&k| (&points[k] - p).amax() <= tol) {
            kept.push(i);
        }
    }
    kept
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub method: Method,
    pub runs: usize,
    pub successes: usize,
    pub wall_time_s: f64,
    pub counters: EvalCounters,
    /// Objective values of the first report for this method.
    pub f: Vec<f64>,
    pub kkt_residual: f64,
}

impl MetricsRow {
    /// Counter used when comparing costs: objective evaluations, or H + DH
    /// evaluations for the homotopy method.
    pub fn primary_count(&self) -> u64 {
        if self.method == Method::Homotopy {
            self.counters.homotopy_maps + self.counters.homotopy_jacobians
        } else {
            self.counters.max_objective()
        }
    }
}

/// One row per method, in order of first appearance.
pub fn metrics_report(reports: &[SolveReport]) -> Vec<MetricsRow> {
    let mut order: Vec<Method> = Vec::new();
    let mut rows: BTreeMap<Method, MetricsRow> = BTreeMap::new();
    for r in reports {
        let row = rows.entry(r.method).or_insert_with(|| {
            order.push(r.method);
            MetricsRow {
                method: r.method,
                runs: 0,
                successes: 0,
                wall_time_s: 0.0,
                counters: EvalCounters::new(r.counters.objectives.len()),
                f: r.f.clone(),
                kkt_residual: r.kkt_residual,
            }
        });
        row.runs += 1;
        row.successes += usize::from(r.success);
        row.wall_time_s += r.wall_time_s;
        row.counters += &r.counters;
    }
    order.into_iter().map(|m| rows.remove(&m).expect("inserted")).collect()
}

/// Columns `method, runs, successes, wall_time_s, f1_evals.., constraint_evals,
/// gradient_evals, hessian_evals, h_evals, dh_evals, f1.., kkt_residual`.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let p = rows.iter().map(|r| r.counters.objectives.len()).max().unwrap_or(0);
    let mut header = vec!["method".to_string(), "runs".into(), "successes".into(), "wall_time_s".into()];
    header.extend((1..=p).map(|i| format!("f{i}_evals")));
    header.extend(
        ["constraint_evals", "gradient_evals", "hessian_evals", "h_evals", "dh_evals"].map(String::from),
    );
    header.extend((1..=p).map(|i| format!("f{i}")));
    header.push("kkt_residual".into());
    w.write_record(&header)?;
    for r in rows {
        let c = &r.counters;
        let mut row = vec![r.method.to_string(), r.runs.to_string(), r.successes.to_string(), format!("{:.6}", r.wall_time_s)];
        row.extend((0..p).map(|i| c.objectives.get(i).copied().unwrap_or(0).to_string()));
        row.extend([c.constraints, c.gradients, c.hessians, c.homotopy_maps, c.homotopy_jacobians].map(|v| v.to_string()));
        row.extend((0..p).map(|i| r.f.get(i).map(|v| format!("{v:.6}")).unwrap_or_default()));
        row.push(format!("{:e}", r.kkt_residual));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
