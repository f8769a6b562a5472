use moo_homotopy::homotopy::init_anchor;
use moo_homotopy::registry::{defaults, get_problem};
use moo_homotopy::tracker::{solve_homotopy, trace, Outcome, TrackerConfig};
use moo_homotopy::{EvalCounters, Vector};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn ex2_default_weight_reaches_tabulated_point() {
    let p = get_problem("ex2_5d").unwrap();
    let mut c = EvalCounters::new(2);
    let (rep, path) = solve_homotopy(
        &p,
        &v(&[1.0, 2.0, 0.0, 1.0, 1.0]),
        &v(&[0.4, 0.6]),
        &v(&[1.0]),
        &TrackerConfig::default(),
        &mut c,
    )
    .unwrap();
    assert_eq!(path.outcome, Outcome::Converged, "{:?}", path.message);
    assert!(close(&rep.x, &[-0.1390, -0.0518, -0.5309, -0.4189, 1.5023], 2e-2), "{:?}", rep.x);
    assert!(close(&rep.f, &[2.7363, -0.4147], 2e-2), "{:?}", rep.f);
    assert!(rep.h.iter().all(|h| h.abs() <= 1e-5));
    assert!(rep.g[0] <= 1e-8);
    assert!(rep.kkt_residual <= 1e-4);
    assert!(rep.u.iter().all(|&u| u >= -1e-10));
    assert!((1.0 - rep.w.iter().sum::<f64>()).abs() <= 1e-8);
    assert_eq!(c, rep.counters);
    assert!(c.homotopy_maps > 0 && c.homotopy_jacobians > 0);
}

#[test]
fn ex2_every_tabulated_start_converges() {
    let p = get_problem("ex2_5d").unwrap();
    for start in defaults("ex2_5d").unwrap().starts {
        let mut c = EvalCounters::new(2);
        let (rep, path) =
            solve_homotopy(&p, &v(&start.x0), &v(&[0.4, 0.6]), &v(&[1.0]), &TrackerConfig::default(), &mut c)
                .unwrap();
        assert_eq!(path.outcome, Outcome::Converged, "{}: {:?}", start.label, path.message);
        assert!(close(&rep.f, &[2.73, -0.41], 3e-2), "{}: {:?}", start.label, rep.f);
        assert!(path.final_residual <= 1e-4, "{}: {}", start.label, path.final_residual);
    }
}

#[test]
fn ex2_alternate_weight() {
    let p = get_problem("ex2_5d").unwrap();
    let mut c = EvalCounters::new(2);
    let (rep, path) = solve_homotopy(
        &p,
        &v(&[1.0, 2.0, 0.0, 1.0, 1.0]),
        &v(&[0.96, 0.04]),
        &v(&[1.0]),
        &TrackerConfig::default(),
        &mut c,
    )
    .unwrap();
    assert_eq!(path.outcome, Outcome::Converged, "{:?}", path.message);
    assert!(close(&rep.f, &[0.5561, 2.0819], 2e-2), "{:?}", rep.f);
}

#[test]
fn accepted_steps_meet_corrector_tolerance_and_t_decreases() {
    let p = get_problem("ex2_5d").unwrap();
    let mut c = EvalCounters::new(2);
    let a = init_anchor(&p, &v(&[-2.0, 0.0, 0.0, 0.0, 4.0]), &v(&[0.4, 0.6]), &v(&[1.0]), &mut c).unwrap();
    let cfg = TrackerConfig::default();
    let path = trace(&p, &a, &cfg, &mut c).unwrap();
    assert_eq!(path.outcome, Outcome::Converged);
    let last = path.records.len() - 1;
    for (i, r) in path.records.iter().enumerate() {
        let tol = if i == last { 1e-8 } else { cfg.corrector_tol };
        assert!(r.residual <= tol, "step {}: {}", r.k, r.residual);
        assert!(r.after.t <= r.before.t + 1e-12);
        assert!(r.tangent_residual <= 1e-10 * (1.0 + r.jacobian_norm));
        assert_eq!(r.orientation.abs(), 1);
    }
    assert!(path.records[0].tangent[10] < 0.0);
    assert!(path.final_state.t.abs() <= cfg.eps_t);
}

#[test]
fn single_correction_preset_still_converges() {
    let p = get_problem("ex1_2d").unwrap();
    let mut c = EvalCounters::new(2);
    let (rep, path) = solve_homotopy(
        &p,
        &v(&[-1.0, 1.0]),
        &v(&[0.5, 0.5]),
        &v(&[1.0]),
        &TrackerConfig::single_correction(),
        &mut c,
    )
    .unwrap();
    assert_eq!(path.outcome, Outcome::Converged, "{:?}", path.message);
    assert!(close(&rep.f, &[0.75, 0.85], 5e-2), "{:?}", rep.f);
}
