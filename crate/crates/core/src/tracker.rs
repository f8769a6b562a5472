//! Predictor–corrector tracking of the zero curve of `H(ω⁰, ·, ·)` from
//! `t = 1` down to `t = 0`.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use nalgebra::linalg::SVD;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::homotopy::{
    assemble_homotopy, homotopy_jacobian, init_anchor, kkt_residual, omega_block, solve_t1_system, Anchor,
    Dimensions, HomotopyError, HomotopyState,
};
use crate::problem::{EvalCounters, Matrix, ProblemDefinition, Vector};
use crate::report::{join, Method, RunSummary, SolveReport};

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
    #[error("Jacobian is rank deficient (smallest singular value {sigma_min:.3e}, largest {sigma_max:.3e})")]
    SingularPoint { sigma_min: f64, sigma_max: f64 },
    #[error("corrector failed: {0}")]
    StepFailure(String),
    #[error("invalid tracker configuration: {0}")]
    Config(String),
    #[error("every weight failed; first error: {0}")]
    AllWeightsFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackerConfig {
    pub alpha0: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eps_t: f64,
    pub k_max: usize,
    /// Gauss–Newton corrections per step; stops early at `corrector_tol`.
    pub corrector_iters: usize,
    /// A corrected point is accepted only when `‖H‖` is at most this.
    pub corrector_tol: f64,
    pub backtrack_max: usize,
    pub h_low: f64,
    pub h_high: f64,
    pub t0: f64,
    /// Solve the `t = 1` system before tracking.
    pub prepass: bool,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub endgame_tol: f64,
    pub endgame_max_iter: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            alpha0: 0.05,
            alpha_min: 1e-5,
            alpha_max: 0.2,
            eps_t: 1e-6,
            k_max: 5000,
            corrector_iters: 10,
            corrector_tol: 1e-10,
            backtrack_max: 30,
            h_low: 0.01,
            h_high: 1.0,
            t0: 1.0,
            prepass: true,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            endgame_tol: 1e-12,
            endgame_max_iter: 50,
        }
    }
}

impl TrackerConfig {
    /// One correction per step, accepting anything below `1e-2`.
    pub fn single_correction() -> Self {
        TrackerConfig {
            corrector_iters: 1,
            corrector_tol: 1e-2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrackerError> {
        let bad = |msg: &str| Err(TrackerError::Config(msg.to_string()));
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha0 && self.alpha0 <= self.alpha_max) {
            return bad("need 0 < alpha_min <= alpha0 <= alpha_max");
        }
        if !(self.eps_t > 0.0) {
            return bad("eps_t must be positive");
        }
        if !(self.h_low < self.h_high) {
            return bad("need h_low < h_high");
        }
        if !(self.t0 > 0.0 && self.t0 <= 1.0) {
            return bad("t0 must lie in (0, 1]");
        }
        if self.corrector_iters == 0 {
            return bad("corrector_iters must be at least 1");
        }
        Ok(())
    }
}

/// Unit tangent with the sign of `det([J; ξᵀ])` it was oriented by.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub xi: Vector,
    /// `+1` or `-1`; `-1` only when the continuity fallback overrode the
    /// determinant.
    pub orientation: i8,
    /// True when `|det|` was too small to trust and continuity decided.
    pub by_continuity: bool,
}

/// Relative threshold on the smallest singular value of `J`.
pub const RANK_TOL: f64 = 1e-10;
/// Below this scaled `|det([J; ξᵀ])|` the determinant sign is not trusted.
pub const DET_TOL: f64 = 1e-12;

/// Unit null vector of the `r × c` matrix `j` (`r < c`), oriented so that
/// `det([J; ξᵀ]) > 0` when `c = r + 1`. Wider matrices have no determinant
/// to orient by and fall back to continuity with `previous`.
pub fn tangent(j: &Matrix, previous: Option<&Vector>) -> Result<Tangent, TrackerError> {
    let (r, c) = j.shape();
    if r >= c {
        return Err(TrackerError::Config(format!("tangent needs more columns than rows, got {r} x {c}")));
    }
    let mut padded = Matrix::zeros(c, c);
    padded.view_mut((0, 0), (r, c)).copy_from(j);
    let svd = SVD::new(padded, false, true);
    let sv = &svd.singular_values;
    let vt = svd.v_t.as_ref().expect("requested v_t");
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let sigma_max = sv[order[c - 1]];
    if r > 0 {
        // the c - r smallest belong to the null space
        let sigma_min = sv[order[c - r]];
        if !(sigma_min >= RANK_TOL * sigma_max) || sigma_max == 0.0 {
            return Err(TrackerError::SingularPoint { sigma_min, sigma_max });
        }
    }
    let mut xi: Vector = vt.row(order[0]).transpose();
    xi /= xi.norm();

    if c != r + 1 {
        if let Some(prev) = previous {
            if xi.dot(prev) < 0.0 {
                xi = -xi;
            }
        }
        return Ok(Tangent {
            xi,
            orientation: 1,
            by_continuity: previous.is_some(),
        });
    }

    let mut aug = Matrix::zeros(c, c);
    aug.view_mut((0, 0), (r, c)).copy_from(j);
    aug.row_mut(r).copy_from(&xi.transpose());
    let det = aug.clone().lu().determinant();
    let scale: f64 = aug.row_iter().map(|row| row.norm()).product();
    let trusted = scale > 0.0 && (det / scale).abs() >= DET_TOL;
    match (trusted, previous) {
        (false, Some(prev)) => {
            if xi.dot(prev) < 0.0 {
                xi = -xi;
            }
            // det is linear in the last row
            let sign = if xi.dot(prev) * det >= 0.0 { 1 } else { -1 };
            Ok(Tangent {
                xi,
                orientation: sign,
                by_continuity: true,
            })
        }
        _ => {
            if det < 0.0 {
                xi = -xi;
            }
            Ok(Tangent {
                xi,
                orientation: 1,
                by_continuity: !trusted,
            })
        }
    }
}

/// Euler step `(ω, t) + α ξ` with `t` capped at 1.
pub fn predict(state: &HomotopyState, xi: &Vector, alpha: f64) -> HomotopyState {
    let dims = state.dimensions();
    let z = state.to_vector() + xi * alpha;
    let mut out = HomotopyState::from_vector(dims, &z).expect("tangent has the state's length");
    out.t = out.t.min(1.0);
    out
}

/// Step-size rule driven by the corrected residual.
pub fn adapt_step(alpha: f64, residual_norm: f64, cfg: &TrackerConfig) -> f64 {
    let next = if residual_norm < cfg.h_low {
        (2.0 * alpha).min(cfg.alpha_max)
    } else if residual_norm > cfg.h_high {
        (alpha / 2.0).max(cfg.alpha_min)
    } else {
        alpha
    };
    next.clamp(cfg.alpha_min, cfg.alpha_max)
}

/// Result of [`correct`].
#[derive(Debug, Clone)]
pub struct Correction {
    pub state: HomotopyState,
    pub residual: f64,
    pub iterations: usize,
    pub backtracks: usize,
    /// A ridge had to be added to `J Jᵀ`.
    pub regularized: bool,
}

#[allow(clippy::too_many_arguments)]
fn backtrack(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    state: &HomotopyState,
    delta: &Vector,
    current: f64,
    cfg: &TrackerConfig,
    fix_t: bool,
    counters: &mut EvalCounters,
) -> Result<(HomotopyState, f64, usize), TrackerError> {
    let dims = state.dimensions();
    let z = state.to_vector();
    let mut lambda = 1.0;
    for halvings in 0..=cfg.backtrack_max {
        let mut trial = HomotopyState::from_vector(dims, &(&z + delta * lambda))?;
        if fix_t {
            trial.t = state.t;
        }
        if trial.is_nonnegative() {
            let r = assemble_homotopy(problem, anchor, &trial, counters)?.norm();
            if r <= current {
                return Ok((trial, r, halvings));
            }
        }
        lambda *= 0.5;
    }
    Err(TrackerError::StepFailure(format!(
        "no admissible correction after {} halvings (residual {current:.3e})",
        cfg.backtrack_max
    )))
}

/// Minimum-norm Gauss–Newton corrections `Δ = −Jᵀ (J Jᵀ)⁻¹ H`.
pub fn correct(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    predicted: &HomotopyState,
    cfg: &TrackerConfig,
    counters: &mut EvalCounters,
) -> Result<Correction, TrackerError> {
    let mut state = predicted.clone();
    let mut res = assemble_homotopy(problem, anchor, &state, counters)?;
    let mut norm = res.norm();
    let mut out = Correction {
        state: state.clone(),
        residual: norm,
        iterations: 0,
        backtracks: 0,
        regularized: false,
    };
    for it in 0..cfg.corrector_iters {
        if norm <= cfg.corrector_tol {
            break;
        }
        let j = homotopy_jacobian(problem, anchor, &state, counters)?;
        let jjt = &j * j.transpose();
        let y = match jjt.clone().cholesky() {
            Some(ch) => ch.solve(&res),
            None => {
                out.regularized = true;
                let ridge = 1e-12 * jjt.trace().max(f64::MIN_POSITIVE);
                let shifted = &jjt + Matrix::identity(jjt.nrows(), jjt.nrows()) * ridge;
                match shifted.cholesky() {
                    Some(ch) => ch.solve(&res),
                    None => {
                        return Err(TrackerError::StepFailure("J Jᵀ is singular even after regularization".into()))
                    }
                }
            }
        };
        let delta = -j.tr_mul(&y);
        let (next, r, halvings) = backtrack(problem, anchor, &state, &delta, norm, cfg, false, counters)?;
        out.backtracks += halvings;
        out.iterations = it + 1;
        state = next;
        norm = r;
        res = assemble_homotopy(problem, anchor, &state, counters)?;
    }
    out.state = state;
    out.residual = norm;
    Ok(out)
}

/// Gauss–Newton at fixed `t` with an SVD pseudo-inverse of the `ω`-block,
/// which may be singular at `t = 0`.
pub fn fixed_t_newton(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    start: &HomotopyState,
    tol: f64,
    max_iter: usize,
    cfg: &TrackerConfig,
    counters: &mut EvalCounters,
) -> Result<Correction, TrackerError> {
    let dims = start.dimensions();
    let mut state = start.clone();
    let mut res = assemble_homotopy(problem, anchor, &state, counters)?;
    let mut norm = res.norm();
    let mut out = Correction {
        state: state.clone(),
        residual: norm,
        iterations: 0,
        backtracks: 0,
        regularized: false,
    };
    for it in 0..max_iter {
        if norm <= tol {
            break;
        }
        let jw = omega_block(&homotopy_jacobian(problem, anchor, &state, counters)?);
        let svd = SVD::new(jw, true, true);
        let eps = 1e-12 * svd.singular_values.max();
        let step = svd.solve(&res, eps).map_err(|e| TrackerError::StepFailure(e.to_string()))?;
        let mut delta = Vector::zeros(dims.cols());
        delta.rows_mut(0, dims.omega()).copy_from(&(-step));
        match backtrack(problem, anchor, &state, &delta, norm, cfg, true, counters) {
            Ok((next, r, halvings)) => {
                out.backtracks += halvings;
                out.iterations = it + 1;
                let stalled = r >= norm * (1.0 - 1e-3);
                state = next;
                norm = r;
                res = assemble_homotopy(problem, anchor, &state, counters)?;
                if stalled {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    out.state = state;
    out.residual = norm;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub before: HomotopyState,
    pub after: HomotopyState,
    pub tangent: Vec<f64>,
    pub alpha: f64,
    pub residual: f64,
    pub orientation: i8,
    pub backtracks: usize,
    pub regularized: bool,
    /// ‖J ξ‖ at `before`.
    pub tangent_residual: f64,
    /// ‖J‖ (Frobenius) at `before`.
    pub jacobian_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    MaxIters,
    StepFailure,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Converged => "converged",
            Outcome::MaxIters => "max_iters",
            Outcome::StepFailure => "step_failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathTrace {
    /// State the predictor–corrector loop started from.
    pub start: HomotopyState,
    pub records: Vec<StepRecord>,
    pub outcome: Outcome,
    pub final_state: HomotopyState,
    /// `‖H‖` at the final state.
    pub final_residual: f64,
    pub final_kkt_residual: f64,
    /// Residual of the `t = 1` pre-pass when it ran.
    pub prepass_residual: Option<f64>,
    pub message: Option<String>,
}

impl PathTrace {
    /// Columns `k, t, alpha, residual, orientation, backtracks, x…, w…, u…,
    /// v…`: the start as row `k = 0`, then one row per accepted step.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let dims = self.start.dimensions();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> =
            ["k", "t", "alpha", "residual", "orientation", "backtracks"].map(String::from).to_vec();
        for (name, len) in [("x", dims.n), ("w", dims.p), ("u", dims.m), ("v", dims.s)] {
            header.extend((1..=len).map(|i| format!("{name}{i}")));
        }
        w.write_record(&header)?;
        let row = |k: usize, s: &HomotopyState, alpha: f64, residual: f64, orientation: i8, backtracks: usize| {
            let mut rec = vec![
                k.to_string(),
                format!("{:e}", s.t),
                format!("{alpha:e}"),
                format!("{residual:e}"),
                orientation.to_string(),
                backtracks.to_string(),
            ];
            rec.extend(s.x.iter().chain(&s.w).chain(&s.u).chain(&s.v).map(|v| format!("{v:e}")));
            rec
        };
        w.write_record(row(0, &self.start, 0.0, self.prepass_residual.unwrap_or(f64::NAN), 0, 0))?;
        for r in &self.records {
            w.write_record(row(r.k, &r.after, r.alpha, r.residual, r.orientation, r.backtracks))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Follows the path from `t0` to `t = 0` and polishes the end point.
pub fn trace(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    cfg: &TrackerConfig,
    counters: &mut EvalCounters,
) -> Result<PathTrace, TrackerError> {
    cfg.validate()?;
    let dims = Dimensions::of(problem);
    let mut prepass_residual = None;
    let mut state = if cfg.prepass && cfg.t0 == 1.0 {
        match solve_t1_system(problem, anchor, cfg.newton_tol, cfg.newton_max_iter, counters) {
            Ok(s) => {
                prepass_residual = Some(assemble_homotopy(problem, anchor, &s, counters)?.norm());
                s
            }
            Err(HomotopyError::NoConvergence { residual, best, .. }) => {
                prepass_residual = Some(residual);
                *best
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        anchor.state(cfg.t0)
    };
    let start = state.clone();

    let mut records = Vec::new();
    let mut alpha = cfg.alpha0;
    let mut previous: Option<Vector> = None;
    // +1 keeps det([J; ξᵀ]) > 0; flipped once if that would move t upward at the start
    let mut convention = 1.0;
    let mut outcome = None;
    let mut message = None;
    let mut k = 0;

    while state.t > cfg.eps_t && k < cfg.k_max {
        let j = match homotopy_jacobian(problem, anchor, &state, counters) {
            Ok(j) => j,
            Err(e) => {
                outcome = Some(Outcome::StepFailure);
                message = Some(e.to_string());
                break;
            }
        };
        let mut tan = match tangent(&j, previous.as_ref()) {
            Ok(t) => t,
            Err(e) => {
                outcome = Some(Outcome::StepFailure);
                message = Some(e.to_string());
                break;
            }
        };
        if previous.is_none() && tan.xi[dims.omega()] > 0.0 {
            convention = -1.0;
        }
        if !tan.by_continuity {
            tan.xi *= convention;
        }
        let xi = tan.xi.clone();
        let xi_t = xi[dims.omega()];
        let tangent_residual = (&j * &xi).norm();

        let mut step = alpha;
        let accepted = loop {
            let terminal = xi_t < 0.0 && state.t + step * xi_t <= 0.0;
            let used = if terminal { state.t / -xi_t } else { step };
            let mut pred = predict(&state, &xi, used);
            let attempt = if terminal {
                pred.t = 0.0;
                if pred.is_nonnegative() {
                    fixed_t_newton(problem, anchor, &pred, cfg.endgame_tol, cfg.endgame_max_iter, cfg, counters)
                        .map(|c| (c, cfg.corrector_tol.max(1e-8)))
                } else {
                    Err(TrackerError::StepFailure("prediction left w, u >= 0".into()))
                }
            } else if pred.is_nonnegative() {
                correct(problem, anchor, &pred, cfg, counters).map(|c| (c, cfg.corrector_tol))
            } else {
                Err(TrackerError::StepFailure("prediction left w, u >= 0".into()))
            };
            match attempt {
                Ok((c, tol)) if c.residual <= tol && c.state.t <= state.t + 1e-12 => break Some((c, used)),
                Ok((c, _)) if c.residual <= cfg.corrector_tol && c.state.t > state.t + 1e-12 => {
                    outcome = Some(Outcome::StepFailure);
                    message = Some(format!("t increased from {} to {}", state.t, c.state.t));
                    break None;
                }
                _ => {}
            }
            step /= 2.0;
            if step < cfg.alpha_min {
                outcome = Some(Outcome::StepFailure);
                message = Some(format!("step size fell below {} at t = {}", cfg.alpha_min, state.t));
                break None;
            }
        };
        let Some((c, used)) = accepted else { break };
        k += 1;
        records.push(StepRecord {
            k,
            before: state.clone(),
            after: c.state.clone(),
            tangent: xi.as_slice().to_vec(),
            alpha: used,
            residual: c.residual,
            orientation: tan.orientation,
            backtracks: c.backtracks,
            regularized: c.regularized,
            tangent_residual,
            jacobian_norm: j.norm(),
        });
        alpha = adapt_step(step, c.residual, cfg);
        state = c.state;
        previous = Some(xi);
    }

    let outcome = match outcome {
        Some(o) => o,
        None if state.t <= cfg.eps_t => {
            let mut polish = state.clone();
            polish.t = 0.0;
            let c = fixed_t_newton(problem, anchor, &polish, cfg.endgame_tol, cfg.endgame_max_iter, cfg, counters)?;
            state = c.state;
            Outcome::Converged
        }
        None => Outcome::MaxIters,
    };
    let final_residual = assemble_homotopy(problem, anchor, &state, counters)?.norm();
    let mut scratch = EvalCounters::new(problem.p());
    let final_kkt_residual = kkt_residual(problem, &state.x, &state.w, &state.u, &state.v, &mut scratch)?;
    Ok(PathTrace {
        start,
        records,
        outcome,
        final_state: state,
        final_residual,
        final_kkt_residual,
        prepass_residual,
        message,
    })
}

/// Runs one trace per weight. Failed weights come back with
/// `success = false`; only an all-failed sweep is an error.
#[allow(clippy::too_many_arguments)]
pub fn pareto_front_homotopy(
    problem: &ProblemDefinition,
    weights: &[Vector],
    x0: &Vector,
    u0: &Vector,
    cfg: &TrackerConfig,
    parallel: bool,
    counters: &mut EvalCounters,
) -> Result<Vec<SolveReport>, TrackerError> {
    let run = |w: &Vector| -> (Result<SolveReport, TrackerError>, EvalCounters) {
        let mut local = EvalCounters::new(problem.p());
        let r = solve_homotopy(problem, x0, w, u0, cfg, &mut local).map(|(report, _)| report);
        (r, local)
    };
    let results: Vec<_> = if parallel {
        weights.par_iter().map(run).collect()
    } else {
        weights.iter().map(run).collect()
    };
    let mut reports = Vec::with_capacity(results.len());
    let mut first_error = None;
    for (r, local) in results {
        *counters += &local;
        match r {
            Ok(rep) => reports.push(rep),
            Err(e) => {
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if !reports.iter().any(|r| r.success) {
        return Err(TrackerError::AllWeightsFailed(
            first_error.unwrap_or_else(|| "no weight converged".to_string()),
        ));
    }
    Ok(reports)
}

/// Builds the anchor, traces, and packages the result.
pub fn solve_homotopy(
    problem: &ProblemDefinition,
    x0: &Vector,
    w: &Vector,
    u0: &Vector,
    cfg: &TrackerConfig,
    counters: &mut EvalCounters,
) -> Result<(SolveReport, PathTrace), TrackerError> {
    let started = Instant::now();
    let mut local = EvalCounters::new(problem.p());
    let anchor = init_anchor(problem, x0, w, u0, &mut local)?;
    let path = trace(problem, &anchor, cfg, &mut local)?;
    *counters += &local;
    let s = &path.final_state;
    let report = SolveReport::build(
        problem,
        RunSummary {
            method: Method::Homotopy,
            params: format!("w={}", join(anchor.w0().as_slice())),
            success: path.outcome == Outcome::Converged,
            status: path.outcome.to_string(),
            x: s.x.clone(),
            w: s.w.clone(),
            u: s.u.clone(),
            v: s.v.clone(),
            kkt_residual: path.final_kkt_residual,
            counters: local,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    )
    .map_err(HomotopyError::from)?;
    Ok((report, path))
}
