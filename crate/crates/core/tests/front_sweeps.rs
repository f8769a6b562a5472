use moo_homotopy::registry::{defaults, get_problem};
use moo_homotopy::scalarization::{weighted_sum_front, weighted_sum_solve, FrontSet, WeightGrid};
use moo_homotopy::tracker::{pareto_front_homotopy, TrackerConfig};
use moo_homotopy::{EvalCounters, Vector};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn ex1_homotopy_sweep_collapses_to_one_point() {
    let p = get_problem("ex1_2d").unwrap();
    let d = defaults("ex1_2d").unwrap();
    let grid = WeightGrid::uniform(2, 50).unwrap();
    let reports = pareto_front_homotopy(
        &p,
        grid.weights(),
        &Vector::from_column_slice(&d.homotopy_x0),
        &Vector::from_element(p.m(), 1.0),
        &TrackerConfig::default(),
        true,
        &mut EvalCounters::new(2),
    )
    .unwrap();
    assert_eq!(reports.len(), 50);
    let set = FrontSet::assemble(&p, reports);
    assert_eq!(set.runs.len(), 50);
    assert_eq!(set.entries.len(), 50);
    assert_eq!(set.distinct(1e-6).len(), 1);
}

// The homotopy endpoint carries its own weight; near the steep part of the
// ex2 front a drift of 1e-3 in w moves f by several tenths, so the runs are
// paired on that endpoint weight.
#[test]
fn ex2_homotopy_and_weighted_sum_agree() {
    let p = get_problem("ex2_5d").unwrap();
    let d = defaults("ex2_5d").unwrap();
    let grid = WeightGrid::uniform(2, 50).unwrap();
    let x0 = Vector::from_column_slice(&d.x0);
    let reports = pareto_front_homotopy(
        &p,
        grid.weights(),
        &Vector::from_column_slice(&d.homotopy_x0),
        &Vector::from_element(p.m(), 1.0),
        &TrackerConfig::default(),
        true,
        &mut EvalCounters::new(2),
    )
    .unwrap();
    let wsm = weighted_sum_front(&p, &grid, &x0, true, &mut EvalCounters::new(2)).unwrap();
    let mut close_at_start_weight = 0;
    for (h, w0) in reports.iter().zip(grid.weights()) {
        assert!(h.success, "{}: {}", h.params, h.status);
        let w_end = Vector::from_column_slice(&h.w);
        assert!(dist(w_end.as_slice(), w0.as_slice()) <= 5e-3, "{}: {:?}", h.params, h.w);
        let s = weighted_sum_solve(&p, &w_end, &x0, &mut EvalCounters::new(2)).unwrap();
        assert!(s.success);
        assert!(dist(&h.f, &s.f) <= 5e-2, "{}: {:?} vs {:?}", h.params, h.f, s.f);
        let same = wsm.entries.iter().find(|e| e.report.params == h.params).unwrap();
        if dist(&h.f, &same.report.f) <= 5e-2 {
            close_at_start_weight += 1;
        }
    }
    assert!(close_at_start_weight >= 45, "{close_at_start_weight}");
}
