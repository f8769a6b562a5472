//! The homotopy map `H(ω⁰, ω, t)` over `ω = (x, w, u, v)`, its Jacobian, the
//! `t = 1` start system and the KKT residual it reduces to at `t = 0`.
//!
//! Rows are ordered (stationarity, h, complementarity, weight) and columns
//! (x, w, u, v, t).

use nalgebra::linalg::SVD;
use serde::Serialize;
use thiserror::Error;

use crate::problem::{EvalCounters, Matrix, ProblemDefinition, ProblemError, Vector};

/// Tolerance on `Σ w0 = 1` after renormalization.
pub const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HomotopyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("weight component {index} is negative ({value}); w^(3/2) is undefined")]
    NegativeWeight { index: usize, value: f64 },
    #[error("state has {actual} components, expected {expected}")]
    StateDimension { expected: usize, actual: usize },
    #[error("invalid anchor: {0}")]
    InvalidAnchor(String),
    #[error("t = 1 system did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        best: Box<HomotopyState>,
    },
}

/// Block sizes of a homotopy system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dimensions {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub s: usize,
}

impl Dimensions {
    pub fn of(problem: &ProblemDefinition) -> Self {
        Dimensions {
            n: problem.n(),
            p: problem.p(),
            m: problem.m(),
            s: problem.s(),
        }
    }

    /// Length of `ω`.
    pub fn omega(&self) -> usize {
        self.n + self.p + self.m + self.s
    }

    /// Number of residual rows, `n + s + m + p`.
    pub fn rows(&self) -> usize {
        self.omega()
    }

    /// Length of the flattened `(ω, t)`.
    pub fn cols(&self) -> usize {
        self.omega() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyState {
    pub x: Vector,
    pub w: Vector,
    pub u: Vector,
    pub v: Vector,
    pub t: f64,
}

impl HomotopyState {
    pub fn dimensions(&self) -> Dimensions {
        Dimensions {
            n: self.x.len(),
            p: self.w.len(),
            m: self.u.len(),
            s: self.v.len(),
        }
    }

    /// Flattened `(x, w, u, v, t)`.
    pub fn to_vector(&self) -> Vector {
        let d = self.dimensions();
        let mut out = Vector::zeros(d.cols());
        let mut k = 0;
        for block in [&self.x, &self.w, &self.u, &self.v] {
            out.rows_mut(k, block.len()).copy_from(block);
            k += block.len();
        }
        out[k] = self.t;
        out
    }

    pub fn from_vector(dims: Dimensions, z: &Vector) -> Result<Self, HomotopyError> {
        if z.len() != dims.cols() {
            return Err(HomotopyError::StateDimension {
                expected: dims.cols(),
                actual: z.len(),
            });
        }
        let Dimensions { n, p, m, s } = dims;
        Ok(HomotopyState {
            x: z.rows(0, n).into_owned(),
            w: z.rows(n, p).into_owned(),
            u: z.rows(n + p, m).into_owned(),
            v: z.rows(n + p + m, s).into_owned(),
            t: z[n + p + m + s],
        })
    }

    /// True when `w ≥ 0` and `u ≥ 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.w.iter().chain(self.u.iter()).all(|&c| c >= 0.0)
    }
}

/// Fixed start data `ω⁰ = (x0, w0, u0, 0)` with `g(x0)` cached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anchor {
    x0: Vector,
    w0: Vector,
    u0: Vector,
    v0: Vector,
    g0: Vector,
    renormalized: bool,
}

impl Anchor {
    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn w0(&self) -> &Vector {
        &self.w0
    }

    pub fn u0(&self) -> &Vector {
        &self.u0
    }

    /// Always zero.
    pub fn v0(&self) -> &Vector {
        &self.v0
    }

    pub fn g0(&self) -> &Vector {
        &self.g0
    }

    /// Whether the weights passed to [`init_anchor`] had to be rescaled onto
    /// the simplex.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    /// The state `(x0, w0, u0, 0, t)`.
    pub fn state(&self, t: f64) -> HomotopyState {
        HomotopyState {
            x: self.x0.clone(),
            w: self.w0.clone(),
            u: self.u0.clone(),
            v: self.v0.clone(),
            t,
        }
    }
}

/// Builds an anchor. `x0` may violate `h`, but `g(x0) < 0` is required.
pub fn init_anchor(
    problem: &ProblemDefinition,
    x0: &Vector,
    w: &Vector,
    u0: &Vector,
    counters: &mut EvalCounters,
) -> Result<Anchor, HomotopyError> {
    let dims = Dimensions::of(problem);
    if w.len() != dims.p {
        return Err(HomotopyError::InvalidAnchor(format!(
            "expected {} weights, got {}",
            dims.p,
            w.len()
        )));
    }
    if u0.len() != dims.m {
        return Err(HomotopyError::InvalidAnchor(format!(
            "expected {} inequality multipliers, got {}",
            dims.m,
            u0.len()
        )));
    }
    if let Some(i) = w.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(HomotopyError::InvalidAnchor(format!(
            "weight {i} must be strictly positive, got {}",
            w[i]
        )));
    }
    if let Some(i) = u0.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(HomotopyError::InvalidAnchor(format!(
            "u0[{i}] must be strictly positive, got {}",
            u0[i]
        )));
    }
    let (g0, _) = problem.evaluate_constraints(x0, counters)?;
    if let Some(i) = g0.iter().position(|&c| c >= 0.0) {
        return Err(HomotopyError::InvalidAnchor(format!(
            "g[{i}](x0) = {} but the start must satisfy g(x0) < 0",
            g0[i]
        )));
    }
    let total: f64 = w.sum();
    let renormalized = (total - 1.0).abs() > SIMPLEX_TOL;
    let w0 = if renormalized { w / total } else { w.clone() };
    Ok(Anchor {
        x0: x0.clone(),
        w0,
        u0: u0.clone(),
        v0: Vector::zeros(dims.s),
        g0,
        renormalized,
    })
}

fn check_state(dims: Dimensions, state: &HomotopyState) -> Result<(), HomotopyError> {
    if state.dimensions() != dims {
        return Err(HomotopyError::StateDimension {
            expected: dims.cols(),
            actual: state.dimensions().cols(),
        });
    }
    if let Some(i) = state.w.iter().position(|&c| c < 0.0) {
        return Err(HomotopyError::NegativeWeight {
            index: i,
            value: state.w[i],
        });
    }
    Ok(())
}

// With `anchor = None` the anchor terms are left out entirely; this is the
// KKT residual when `t = 0`.
fn residual_blocks(
    problem: &ProblemDefinition,
    anchor: Option<&Anchor>,
    state: &HomotopyState,
    counters: &mut EvalCounters,
) -> Result<Vector, HomotopyError> {
    let dims = Dimensions::of(problem);
    let Dimensions { n, p, m, s } = dims;
    let HomotopyState { x, w, u, v, t } = state;
    let t = *t;
    let jac = problem.jacobians(x, counters)?;
    let (g, h) = problem.evaluate_constraints(x, counters)?;

    let mut out = Vector::zeros(dims.rows());
    let mut b1 = (jac.f.tr_mul(w) + jac.g.tr_mul(u)) * (1.0 - t) + jac.h.tr_mul(v);
    let simplex = 1.0 - w.sum();
    let mut b3 = u.component_mul(&g);
    let mut b4 = Vector::from_element(p, (1.0 - t) * simplex);
    if let Some(a) = anchor {
        b1 += (x - &a.x0) * t;
        b3 -= a.u0.component_mul(&a.g0) * t;
        b4 -= (w.map(|c| c.powf(1.5)) - a.w0.map(|c| c.powf(1.5))) * t;
    }
    out.rows_mut(0, n).copy_from(&b1);
    out.rows_mut(n, s).copy_from(&h);
    out.rows_mut(n + s, m).copy_from(&b3);
    out.rows_mut(n + s + m, p).copy_from(&b4);
    Ok(out)
}

/// Stacked residual `H(ω⁰, ω, t)` of length `n + s + m + p`.
pub fn assemble_homotopy(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    state: &HomotopyState,
    counters: &mut EvalCounters,
) -> Result<Vector, HomotopyError> {
    check_state(Dimensions::of(problem), state)?;
    counters.homotopy_maps += 1;
    let mut scratch = EvalCounters::new(problem.p());
    residual_blocks(problem, Some(anchor), state, &mut scratch)
}

/// `∂H/∂(x, w, u, v, t)`, an `(n+s+m+p) × (n+p+m+s+1)` matrix.
pub fn homotopy_jacobian(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    state: &HomotopyState,
    counters: &mut EvalCounters,
) -> Result<Matrix, HomotopyError> {
    let dims = Dimensions::of(problem);
    check_state(dims, state)?;
    counters.homotopy_jacobians += 1;
    let mut scratch = EvalCounters::new(problem.p());
    let Dimensions { n, p, m, s } = dims;
    let HomotopyState { x, w, u, v, t } = state;
    let t = *t;
    let jac = problem.jacobians(x, &mut scratch)?;
    let hess = problem.hessians(x, &mut scratch)?;
    let (g, _) = problem.evaluate_constraints(x, &mut scratch)?;

    let mut q = Matrix::identity(n, n) * t;
    for (wi, hi) in w.iter().zip(&hess.f) {
        q += hi * ((1.0 - t) * wi);
    }
    for (uj, hj) in u.iter().zip(&hess.g) {
        q += hj * ((1.0 - t) * uj);
    }
    for (vk, hk) in v.iter().zip(&hess.h) {
        q += hk * *vk;
    }

    let (cw, cu, cv, ct) = (n, n + p, n + p + m, n + p + m + s);
    let (r2, r3, r4) = (n, n + s, n + s + m);
    let mut jm = Matrix::zeros(dims.rows(), dims.cols());

    jm.view_mut((0, 0), (n, n)).copy_from(&q);
    jm.view_mut((0, cw), (n, p)).copy_from(&(jac.f.transpose() * (1.0 - t)));
    jm.view_mut((0, cu), (n, m)).copy_from(&(jac.g.transpose() * (1.0 - t)));
    jm.view_mut((0, cv), (n, s)).copy_from(&jac.h.transpose());
    let dt1 = -(jac.f.tr_mul(w) + jac.g.tr_mul(u)) + (x - &anchor.x0);
    jm.view_mut((0, ct), (n, 1)).copy_from(&dt1);

    jm.view_mut((r2, 0), (s, n)).copy_from(&jac.h);

    for j in 0..m {
        for c in 0..n {
            jm[(r3 + j, c)] = u[j] * jac.g[(j, c)];
        }
        jm[(r3 + j, cu + j)] = g[j];
        jm[(r3 + j, ct)] = -anchor.u0[j] * anchor.g0[j];
    }

    let simplex = 1.0 - w.sum();
    for i in 0..p {
        for k in 0..p {
            jm[(r4 + i, cw + k)] = -(1.0 - t);
        }
        jm[(r4 + i, cw + i)] -= t * 1.5 * w[i].sqrt();
        jm[(r4 + i, ct)] = -simplex - (w[i].powf(1.5) - anchor.w0[i].powf(1.5));
    }
    Ok(jm)
}

/// Euclidean norm of the stacked KKT residual
/// `(∇f w + ∇g u + ∇h v, h, U g, (1 − Σw) e)`.
///
/// Computed with the same arithmetic as [`assemble_homotopy`] at `t = 0`,
/// so the two agree exactly for any anchor.
pub fn kkt_residual(
    problem: &ProblemDefinition,
    x: &Vector,
    w: &Vector,
    u: &Vector,
    v: &Vector,
    counters: &mut EvalCounters,
) -> Result<f64, HomotopyError> {
    let state = HomotopyState {
        x: x.clone(),
        w: w.clone(),
        u: u.clone(),
        v: v.clone(),
        t: 0.0,
    };
    let dims = Dimensions::of(problem);
    if state.dimensions() != dims {
        return Err(HomotopyError::StateDimension {
            expected: dims.cols(),
            actual: state.dimensions().cols(),
        });
    }
    Ok(residual_blocks(problem, None, &state, counters)?.norm())
}

/// Square `ω`-block of the Jacobian (the `t` column dropped).
pub fn omega_block(jacobian: &Matrix) -> Matrix {
    jacobian.columns(0, jacobian.ncols() - 1).into_owned()
}

/// Damped Newton on `H(ω⁰, ω, 1) = 0` from `(x0, w0, u0, 0)`.
///
/// At `t = 1` the weight rows decouple and force `w = w0`, so `w` is held
/// there exactly. A feasible anchor is returned unchanged.
pub fn solve_t1_system(
    problem: &ProblemDefinition,
    anchor: &Anchor,
    newton_tol: f64,
    max_iter: usize,
    counters: &mut EvalCounters,
) -> Result<HomotopyState, HomotopyError> {
    let dims = Dimensions::of(problem);
    let mut state = anchor.state(1.0);
    let mut res = assemble_homotopy(problem, anchor, &state, counters)?;
    let mut norm = res.norm();
    for _ in 0..max_iter {
        if norm <= newton_tol {
            return Ok(state);
        }
        let jm = omega_block(&homotopy_jacobian(problem, anchor, &state, counters)?);
        let step = match jm.clone().lu().solve(&res) {
            Some(d) if d.iter().all(|c| c.is_finite()) => d,
            _ => SVD::new(jm, true, true)
                .solve(&res, 1e-14)
                .map_err(|e| HomotopyError::InvalidAnchor(e.to_string()))?,
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut z = state.to_vector();
            z.rows_mut(0, dims.omega()).axpy(-lambda, &step, 1.0);
            let mut trial = HomotopyState::from_vector(dims, &z)?;
            trial.w.copy_from(&anchor.w0);
            trial.t = 1.0;
            if trial.u.iter().all(|&c| c > 0.0) {
                let r = assemble_homotopy(problem, anchor, &trial, counters)?;
                if r.norm() < norm {
                    state = trial;
                    norm = r.norm();
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= newton_tol {
        return Ok(state);
    }
    Err(HomotopyError::NoConvergence {
        iterations: max_iter,
        residual: norm,
        best: Box::new(state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ScalarFunction;
    use crate::registry::get_problem;
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn ex1_anchor() -> (ProblemDefinition, Anchor) {
        let p = get_problem("ex1_2d").unwrap();
        let a = init_anchor(&p, &v(&[-1.0, 1.0]), &v(&[0.5, 0.5]), &v(&[1.0]), &mut EvalCounters::new(2))
            .unwrap();
        (p, a)
    }

    fn random_state(dims: Dimensions, rng: &mut ChaCha8Rng, scale: f64) -> HomotopyState {
        let mut r = |k: usize, lo: f64, hi: f64| Vector::from_fn(k, |_, _| rng.random_range(lo..hi));
        HomotopyState {
            x: r(dims.n, -scale, scale),
            w: r(dims.p, 0.05, 1.0),
            u: r(dims.m, 0.05, 2.0),
            v: r(dims.s, -2.0, 2.0),
            t: r(1, 0.05, 0.95)[0],
        }
    }

    #[test]
    fn feasible_anchor_is_a_zero_at_t1() {
        let (p, a) = ex1_anchor();
        let mut c = EvalCounters::new(2);
        let r = assemble_homotopy(&p, &a, &a.state(1.0), &mut c).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.norm() <= 1e-12, "{r}");
        assert_eq!(c.homotopy_maps, 1);
        assert_eq!(c.objectives, vec![0, 0]);
    }

    #[test]
    fn t0_reduces_to_kkt_residual_for_any_anchor() {
        let p = get_problem("ex2_5d").unwrap();
        let mut c = EvalCounters::new(2);
        let a1 = init_anchor(&p, &v(&[1.0, 2.0, 0.0, 1.0, 1.0]), &v(&[0.4, 0.6]), &v(&[1.0]), &mut c).unwrap();
        let a2 = init_anchor(&p, &v(&[-2.0, 0.0, 0.0, 0.0, 4.0]), &v(&[0.9, 0.1]), &v(&[3.0]), &mut c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut st = random_state(Dimensions::of(&p), &mut rng, 2.0);
            st.t = 0.0;
            let k = kkt_residual(&p, &st.x, &st.w, &st.u, &st.v, &mut c).unwrap();
            let h1 = assemble_homotopy(&p, &a1, &st, &mut c).unwrap().norm();
            let h2 = assemble_homotopy(&p, &a2, &st, &mut c).unwrap().norm();
            assert_eq!(k, h1);
            assert_eq!(k, h2);
            let blocks = assemble_homotopy(&p, &a1, &st, &mut c).unwrap();
            for i in 0..2 {
                assert_eq!(blocks[5 + 2 + 1 + i], 1.0 - st.w.sum());
            }
        }
    }

    #[test]
    fn infeasible_point_has_positive_kkt_residual() {
        let p = get_problem("ex1_2d").unwrap();
        let r = kkt_residual(&p, &v(&[0.0, 0.0]), &v(&[0.5, 0.5]), &v(&[0.0]), &v(&[0.0]), &mut EvalCounters::new(2))
            .unwrap();
        assert!(r > 0.0);
    }

    fn fd_check(p: &ProblemDefinition, a: &Anchor, seed: u64, scale: f64) {
        let dims = Dimensions::of(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = EvalCounters::new(p.p());
        for _ in 0..50 {
            let st = random_state(dims, &mut rng, scale);
            let jm = homotopy_jacobian(p, a, &st, &mut c).unwrap();
            let z = st.to_vector();
            for col in 0..dims.cols() {
                let hstep = 1e-6 * (1.0 + z[col].abs());
                let mut zp = z.clone();
                zp[col] += hstep;
                let mut zm = z.clone();
                zm[col] -= hstep;
                let hp = assemble_homotopy(p, a, &HomotopyState::from_vector(dims, &zp).unwrap(), &mut c).unwrap();
                let hm = assemble_homotopy(p, a, &HomotopyState::from_vector(dims, &zm).unwrap(), &mut c).unwrap();
                let fd = (hp - hm) / (2.0 * hstep);
                for row in 0..dims.rows() {
                    let an = jm[(row, col)];
                    let err = (an - fd[row]).abs() / (1.0 + an.abs());
                    assert!(err <= 1e-5, "entry ({row},{col}): analytic {an}, fd {}", fd[row]);
                }
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_ex1() {
        let (p, a) = ex1_anchor();
        fd_check(&p, &a, 11, 2.0);
    }

    #[test]
    fn jacobian_matches_finite_differences_ex2() {
        let p = get_problem("ex2_5d").unwrap();
        let a = init_anchor(&p, &v(&[1.0, 2.0, 0.0, 1.0, 1.0]), &v(&[0.4, 0.6]), &v(&[1.0]), &mut EvalCounters::new(2))
            .unwrap();
        fd_check(&p, &a, 12, 3.0);
    }

    #[test]
    fn linear_problem_has_identity_q_at_t1() {
        let lin = ProblemDefinition::builder("lin", 3)
            .objective(ScalarFunction::new(|x| x[0] + x[1]).with_gradient(|_| v(&[1.0, 1.0, 0.0])).with_hessian(|_| Matrix::zeros(3, 3)))
            .objective(ScalarFunction::new(|x| x[2]).with_gradient(|_| v(&[0.0, 0.0, 1.0])).with_hessian(|_| Matrix::zeros(3, 3)))
            .inequality(ScalarFunction::new(|x| x[0] - 1.0).with_gradient(|_| v(&[1.0, 0.0, 0.0])).with_hessian(|_| Matrix::zeros(3, 3)))
            .sampling_box(crate::problem::SamplingBox::cube(3, -1.0, 1.0).unwrap())
            .build()
            .unwrap();
        let mut c = EvalCounters::new(2);
        let a = init_anchor(&lin, &v(&[0.0, 0.0, 0.0]), &v(&[0.5, 0.5]), &v(&[1.0]), &mut c).unwrap();
        let mut st = a.state(1.0);
        st.x = v(&[0.3, -0.2, 0.9]);
        let jm = homotopy_jacobian(&lin, &a, &st, &mut c).unwrap();
        assert_eq!(jm.view((0, 0), (3, 3)).into_owned(), Matrix::identity(3, 3));
        assert_eq!(c.homotopy_jacobians, 1);
    }

    #[test]
    fn anchor_weights_and_errors() {
        let p = get_problem("ex2_5d").unwrap();
        let x0 = v(&[1.0, 2.0, 0.0, 1.0, 1.0]);
        let mut c = EvalCounters::new(2);
        let a = init_anchor(&p, &x0, &v(&[0.4, 0.6]), &v(&[1.0]), &mut c).unwrap();
        assert_eq!(a.w0(), &v(&[0.4, 0.6]));
        assert!(!a.renormalized());
        assert_eq!(a.v0(), &v(&[0.0, 0.0]));
        let a = init_anchor(&p, &x0, &v(&[2.0, 3.0]), &v(&[1.0]), &mut c).unwrap();
        assert_abs_diff_eq!(a.w0(), &v(&[0.4, 0.6]), epsilon = 1e-15);
        assert!(a.renormalized());
        assert!(init_anchor(&p, &x0, &v(&[0.4, 0.6]), &v(&[0.0]), &mut c).is_err());
        assert!(init_anchor(&p, &x0, &v(&[0.0, 1.0]), &v(&[1.0]), &mut c).is_err());
        // g(x0) = 0 on the sphere
        assert!(init_anchor(&p, &v(&[1.0, 3.0, 0.0, 0.0, 0.0]), &v(&[0.4, 0.6]), &v(&[1.0]), &mut c).is_err());
    }

    #[test]
    fn negative_weight_is_a_domain_error() {
        let (p, a) = ex1_anchor();
        let mut st = a.state(0.5);
        st.w[1] = -0.1;
        let mut c = EvalCounters::new(2);
        assert!(matches!(
            assemble_homotopy(&p, &a, &st, &mut c),
            Err(HomotopyError::NegativeWeight { index: 1, .. })
        ));
        assert!(homotopy_jacobian(&p, &a, &st, &mut c).is_err());
    }

    #[test]
    fn flatten_round_trip() {
        let (_, a) = ex1_anchor();
        let st = a.state(0.25);
        let z = st.to_vector();
        assert_eq!(z.len(), 7);
        assert_eq!(HomotopyState::from_vector(st.dimensions(), &z).unwrap(), st);
        assert!(HomotopyState::from_vector(st.dimensions(), &Vector::zeros(3)).is_err());
    }

    #[test]
    fn t1_system_feasible_anchor_is_fixed_point() {
        let (p, a) = ex1_anchor();
        let mut c = EvalCounters::new(2);
        let st = solve_t1_system(&p, &a, 1e-12, 50, &mut c).unwrap();
        assert_eq!(st, a.state(1.0));
        let jm = omega_block(&homotopy_jacobian(&p, &a, &st, &mut c).unwrap());
        let sv = jm.singular_values();
        assert!(sv.min() > 1e-8 * sv.max(), "{sv}");
    }

    #[test]
    fn t1_system_restores_equalities_from_infeasible_start() {
        let p = get_problem("ex2_5d").unwrap();
        let mut c = EvalCounters::new(2);
        let x0 = v(&[1.0, 2.0, 0.0, 1.0, 1.0]);
        let a = init_anchor(&p, &x0, &v(&[0.4, 0.6]), &v(&[1.0]), &mut c).unwrap();
        let st = solve_t1_system(&p, &a, 1e-12, 50, &mut c).unwrap();
        let (_, h) = p.evaluate_constraints(&st.x, &mut c).unwrap();
        assert!(h.amax() <= 1e-10, "{h}");
        assert!((&st.x - &x0).norm() > 1e-3);
        assert_eq!(st.w, a.w0().clone());
        assert_eq!(st.t, 1.0);
    }
}
