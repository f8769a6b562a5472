//! Built-in benchmark problems and their registered run defaults.

use crate::problem::{Matrix, ProblemDefinition, ProblemError, SamplingBox, ScalarFunction, Vector};

/// Names accepted by [`get_problem`].
pub const PROBLEM_NAMES: [&str; 2] = ["ex2_5d", "ex1_2d"];

pub fn get_problem(name: &str) -> Result<ProblemDefinition, ProblemError> {
    match name {
        "ex2_5d" => Ok(ex2_5d()),
        "ex1_2d" => Ok(ex1_2d()),
        _ => Err(ProblemError::UnknownProblem {
            name: name.to_string(),
            available: PROBLEM_NAMES.join(", "),
        }),
    }
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Five variables, two objectives, one ball-like inequality and two
/// equalities (one of them quadratic in `x5`).
pub fn ex2_5d() -> ProblemDefinition {
    let f1 = ScalarFunction::new(|x| x.dot(x))
        .with_gradient(|x| x * 2.0)
        .with_hessian(|_| Matrix::identity(5, 5) * 2.0);
    let f2 = ScalarFunction::new(|x| {
        3.0 * x[0] + 2.0 * x[1] - x[2] / 3.0 + 0.01 * (x[3] - x[4]).powi(3)
    })
    .with_gradient(|x| {
        let d = 0.03 * (x[3] - x[4]).powi(2);
        v(&[3.0, 2.0, -1.0 / 3.0, d, -d])
    })
    .with_hessian(|x| {
        let c = 0.06 * (x[3] - x[4]);
        let mut h = Matrix::zeros(5, 5);
        h[(3, 3)] = c;
        h[(4, 4)] = c;
        h[(3, 4)] = -c;
        h[(4, 3)] = -c;
        h
    });
    let g = ScalarFunction::new(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - 10.0)
        .with_gradient(|x| v(&[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3], 0.0]))
        .with_hessian(|_| Matrix::from_diagonal(&v(&[2.0, 2.0, 2.0, 2.0, 0.0])));
    let h1 = ScalarFunction::new(|x| {
        4.0 * x[0] - 2.0 * x[1] + 0.8 * x[2] + 0.6 * x[3] + 0.5 * x[4] * x[4]
    })
    .with_gradient(|x| v(&[4.0, -2.0, 0.8, 0.6, x[4]]))
    .with_hessian(|_| {
        let mut h = Matrix::zeros(5, 5);
        h[(4, 4)] = 1.0;
        h
    });
    let h2 = ScalarFunction::new(|x| x[0] + 2.0 * x[1] - x[2] - 0.5 * x[3] + x[4] - 2.0)
        .with_gradient(|_| v(&[1.0, 2.0, -1.0, -0.5, 1.0]))
        .with_hessian(|_| Matrix::zeros(5, 5));
    ProblemDefinition::builder("ex2_5d", 5)
        .objective(f1)
        .objective(f2)
        .inequality(g)
        .equality(h1)
        .equality(h2)
        .sampling_box(SamplingBox::cube(5, -5.0, 5.0).expect("static box"))
        .build()
        .expect("static problem")
}

/// Two variables, two objectives; the feasible set is a short arc of the
/// quartic `x1 = -x2^4` and the problem has a single nondominated point.
pub fn ex1_2d() -> ProblemDefinition {
    let f1 = ScalarFunction::new(|x| x[0] * x[0] + 2.0 * x[1] * x[1])
        .with_gradient(|x| v(&[2.0 * x[0], 4.0 * x[1]]))
        .with_hessian(|_| Matrix::from_diagonal(&v(&[2.0, 4.0])));
    let f2 = ScalarFunction::new(|x| -3.0 * x[0] + x[1] * x[1] - x[0] * x[1])
        .with_gradient(|x| v(&[-3.0 - x[1], 2.0 * x[1] - x[0]]))
        .with_hessian(|_| Matrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 2.0]));
    let g = ScalarFunction::new(|x| x[0] * x[0] - 5.0 * x[1] + 3.0)
        .with_gradient(|x| v(&[2.0 * x[0], -5.0]))
        .with_hessian(|_| Matrix::from_diagonal(&v(&[2.0, 0.0])));
    let h = ScalarFunction::new(|x| x[0] + x[1].powi(4))
        .with_gradient(|x| v(&[1.0, 4.0 * x[1].powi(3)]))
        .with_hessian(|x| Matrix::from_diagonal(&v(&[0.0, 12.0 * x[1] * x[1]])));
    ProblemDefinition::builder("ex1_2d", 2)
        .objective(f1)
        .objective(f2)
        .inequality(g)
        .equality(h)
        .sampling_box(SamplingBox::new(vec![-4.0, -2.0], vec![4.0, 2.0]).expect("static box"))
        .build()
        .expect("static problem")
}

/// A labelled starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPreset {
    pub label: &'static str,
    pub x0: Vec<f64>,
    /// Whether the start satisfies every constraint.
    pub feasible: bool,
}

/// Registered setups used by the bench harness and the CLI when flags are
/// omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkDefaults {
    /// Start for the scalarization subsolvers.
    pub x0: Vec<f64>,
    /// Start for homotopy runs; must satisfy `g(x0) < 0`.
    pub homotopy_x0: Vec<f64>,
    pub weights: Vec<f64>,
    /// Alternate weight preset.
    pub alt_weights: Vec<f64>,
    /// Primary objective index for the epsilon-constraint preset.
    pub epsilon_primary: usize,
    /// Bounds for the non-primary objectives (entry at the primary index unused).
    pub epsilon_bounds: Vec<f64>,
    pub starts: Vec<StartPreset>,
    pub nsga_population: usize,
    pub nsga_generations: usize,
}

pub fn defaults(name: &str) -> Result<BenchmarkDefaults, ProblemError> {
    match name {
        "ex2_5d" => Ok(BenchmarkDefaults {
            x0: vec![1.0, 2.0, 0.0, 1.0, 1.0],
            homotopy_x0: vec![1.0, 2.0, 0.0, 1.0, 1.0],
            weights: vec![0.4, 0.6],
            alt_weights: vec![0.96, 0.04],
            epsilon_primary: 0,
            epsilon_bounds: vec![f64::NAN, -0.4],
            starts: vec![
                StartPreset {
                    label: "start-a",
                    x0: vec![1.0, 2.0, 0.0, 1.0, 1.0],
                    feasible: false,
                },
                StartPreset {
                    label: "start-b",
                    x0: vec![0.5, 0.5, 0.5, 0.5, 0.5],
                    feasible: false,
                },
                StartPreset {
                    label: "start-c",
                    x0: vec![-2.0, 0.0, 0.0, 0.0, 4.0],
                    feasible: true,
                },
                StartPreset {
                    label: "start-d",
                    x0: vec![0.4, 0.8, 0.0, 0.0, 0.0],
                    feasible: true,
                },
            ],
            nsga_population: 100,
            nsga_generations: 200,
        }),
        "ex1_2d" => Ok(BenchmarkDefaults {
            x0: vec![0.0, 0.0],
            homotopy_x0: vec![-1.0, 1.0],
            weights: vec![0.5, 0.5],
            alt_weights: vec![0.9, 0.1],
            epsilon_primary: 0,
            epsilon_bounds: vec![f64::NAN, 1.0],
            starts: vec![StartPreset {
                label: "anchor",
                x0: vec![-1.0, 1.0],
                feasible: true,
            }],
            nsga_population: 100,
            nsga_generations: 100,
        }),
        _ => Err(ProblemError::UnknownProblem {
            name: name.to_string(),
            available: PROBLEM_NAMES.join(", "),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{EvalCounters, FeasibilityTolerances};
    use approx::assert_abs_diff_eq;

    fn x(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn registry_dimensions() {
        let p = get_problem("ex2_5d").unwrap();
        assert_eq!((p.n(), p.p(), p.m(), p.s()), (5, 2, 1, 2));
        let p = get_problem("ex1_2d").unwrap();
        assert_eq!((p.n(), p.p(), p.m(), p.s()), (2, 2, 1, 1));
    }

    #[test]
    fn unknown_problem_lists_available() {
        let err = get_problem("nonexistent").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ex2_5d") && msg.contains("ex1_2d"), "{msg}");
        assert!(defaults("nonexistent").is_err());
    }

    #[test]
    fn hand_evaluated_objectives() {
        let mut c = EvalCounters::new(2);
        let ex2 = get_problem("ex2_5d").unwrap();
        let f = ex2.evaluate_objectives(&x(&[1.0, 2.0, 0.0, 1.0, 1.0]), &mut c).unwrap();
        assert_abs_diff_eq!(f, x(&[7.0, 7.0]), epsilon = 1e-14);
        let ex1 = get_problem("ex1_2d").unwrap();
        let f = ex1.evaluate_objectives(&x(&[-1.0, 1.0]), &mut c).unwrap();
        assert_abs_diff_eq!(f, x(&[3.0, 5.0]), epsilon = 1e-14);
        let f = ex1.evaluate_objectives(&x(&[0.0, 0.0]), &mut c).unwrap();
        assert_eq!(f, x(&[0.0, 0.0]));
    }

    #[test]
    fn literature_constraint_values() {
        let ex2 = get_problem("ex2_5d").unwrap();
        let mut c = EvalCounters::new(2);
        let (g, h) = ex2
            .evaluate_constraints(&x(&[0.3077, 0.5374, -0.2703, -0.1336, 0.2804]), &mut c)
            .unwrap();
        assert_abs_diff_eq!(h[0], -0.1011, epsilon = 1e-3);
        assert_abs_diff_eq!(h[1], 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g[0], -9.5256, epsilon = 1e-3);
        let (g, h) = ex2
            .evaluate_constraints(&x(&[-1.3074, -2.8605, -1.0470, 0.4103, 0.4475]), &mut c)
            .unwrap();
        assert_abs_diff_eq!(h[0], 1.08e-4, epsilon = 1e-3);
        assert_abs_diff_eq!(h[1], -7.7391, epsilon = 1e-3);
        assert_abs_diff_eq!(g[0], 1.1563, epsilon = 1e-3);
        assert_eq!(c.constraints, 2);

        let ex1 = get_problem("ex1_2d").unwrap();
        let (g, h) = ex1.evaluate_constraints(&x(&[-1.0, 1.0]), &mut c).unwrap();
        assert_eq!((g[0], h[0]), (-1.0, 0.0));
    }

    #[test]
    fn symbolic_derivatives_of_ex1() {
        let ex1 = get_problem("ex1_2d").unwrap();
        let mut c = EvalCounters::new(2);
        let j = ex1.jacobians(&x(&[-1.0, 1.0]), &mut c).unwrap();
        assert_eq!(j.f.row(0).iter().copied().collect::<Vec<_>>(), vec![-2.0, 4.0]);
        assert_eq!(j.h.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 4.0]);
        let hs = ex1.hessians(&x(&[0.3, 1.0]), &mut c).unwrap();
        assert_eq!(hs.f[0], Matrix::from_diagonal(&x(&[2.0, 4.0])));
        assert_eq!(hs.h[0], Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 12.0]));
        assert_eq!((c.gradients, c.hessians), (1, 1));
        // h2 of ex2 is linear
        let ex2 = get_problem("ex2_5d").unwrap();
        let hs = ex2.hessians(&x(&[0.1, 0.2, 0.3, 0.4, 0.5]), &mut c).unwrap();
        assert_eq!(hs.h[1], Matrix::zeros(5, 5));
    }

    #[test]
    fn start_presets_feasibility_flags() {
        let ex2 = get_problem("ex2_5d").unwrap();
        let mut c = EvalCounters::new(2);
        let tol = FeasibilityTolerances::default();
        for start in defaults("ex2_5d").unwrap().starts {
            let r = ex2.feasibility_report(&x(&start.x0), tol, &mut c).unwrap();
            assert_eq!(r.feasible, start.feasible, "{}", start.label);
        }
        let r = ex2.feasibility_report(&x(&[1.0, 2.0, 0.0, 1.0, 1.0]), tol, &mut c).unwrap();
        assert_abs_diff_eq!(r.h_values[0], 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.h_values[1], 3.5, epsilon = 1e-12);
        assert_eq!(c.objectives, vec![0, 0]);
    }

    #[test]
    fn exact_zero_constraint_is_active() {
        // g(x) = x1^2 + ... - 10 vanishes on the sphere of radius sqrt(10)
        let ex2 = get_problem("ex2_5d").unwrap();
        let r = ex2
            .feasibility_report(
                &x(&[1.0, 3.0, 0.0, 0.0, 0.0]),
                FeasibilityTolerances::default(),
                &mut EvalCounters::new(2),
            )
            .unwrap();
        assert_eq!(r.g_values[0], 0.0);
        assert_eq!(r.active_set, vec![0]);
    }
}
