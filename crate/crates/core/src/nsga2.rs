//! NSGA-II with constraint domination, simulated binary crossover and
//! polynomial mutation.

use std::cmp::Ordering;
use std::io::Write;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::problem::{EvalCounters, ProblemDefinition, ProblemError, SamplingBox, Vector};
use crate::report::{Method, RunSummary, SolveReport};
use crate::scalarization::FrontSet;

#[derive(Debug, Error)]
pub enum NsgaError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaConfig {
    /// Population size `N`, even and at least 4.
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    /// Per-gene mutation probability; `None` means `1/n`.
    pub mutation_prob: Option<f64>,
    pub mutation_eta: f64,
    /// Equality residuals up to `δ_h` count as satisfied.
    pub delta_h: f64,
    pub seed: u64,
    /// Evaluate each generation's offspring with rayon.
    pub parallel: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            generations: 100,
            crossover_prob: 0.9,
            crossover_eta: 15.0,
            mutation_prob: None,
            mutation_eta: 20.0,
            delta_h: 1e-2,
            seed: 42,
            parallel: false,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), NsgaError> {
        let bad = |m: &str| Err(NsgaError::Config(m.to_string()));
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return bad("population must be even and at least 4");
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.crossover_prob) || !self.mutation_prob.is_none_or(prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.crossover_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return bad("distribution indices must be nonnegative");
        }
        if !(self.delta_h > 0.0) {
            return bad("delta_h must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Individual {
    pub x: Vector,
    pub f: Vector,
    pub g: Vector,
    pub h: Vector,
    /// `Σ max(gᵢ, 0) + Σ max(|hⱼ| − δ_h, 0)`.
    pub violation: f64,
    /// Front index, 1 for the nondominated front; 0 before sorting.
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn evaluate(
        problem: &ProblemDefinition,
        x: Vector,
        delta_h: f64,
        counters: &mut EvalCounters,
    ) -> Result<Self, ProblemError> {
        let f = problem.evaluate_objectives(&x, counters)?;
        let (g, h) = problem.evaluate_constraints(&x, counters)?;
        let violation =
            g.iter().map(|v| v.max(0.0)).sum::<f64>() + h.iter().map(|v| (v.abs() - delta_h).max(0.0)).sum::<f64>();
        Ok(Individual {
            x,
            f,
            g,
            h,
            violation,
            rank: 0,
            crowding: 0.0,
        })
    }

    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

fn pareto_dominates(a: &Vector, b: &Vector) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x <= y) && a.iter().zip(b.iter()).any(|(x, y)| x < y)
}

/// Feasible beats infeasible, lower violation beats higher, and two
/// feasible individuals compare by Pareto dominance.
pub fn constraint_dominates(a: &Individual, b: &Individual) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => pareto_dominates(&a.f, &b.f),
    }
}

/// Fronts of `population` under constraint domination, best first.
pub fn fast_nondominated_sort(population: &[Individual]) -> Vec<Vec<usize>> {
    let n = population.len();
    let mut dominated: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if constraint_dominates(&population[i], &population[j]) {
                dominated[i].push(j);
                count[j] += 1;
            } else if constraint_dominates(&population[j], &population[i]) {
                dominated[j].push(i);
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each point in one front.
#[allow(clippy::needless_range_loop)]
pub fn crowding_distance(objectives: &[&Vector]) -> Vec<f64> {
    let n = objectives.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut dist = vec![0.0; n];
    let p = objectives[0].len();
    let mut idx: Vec<usize> = (0..n).collect();
    for k in 0..p {
        idx.sort_by(|&a, &b| objectives[a][k].total_cmp(&objectives[b][k]).then(a.cmp(&b)));
        let lo = objectives[idx[0]][k];
        let hi = objectives[idx[n - 1]][k];
        dist[idx[0]] = f64::INFINITY;
        dist[idx[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        for w in 1..n - 1 {
            dist[idx[w]] += (objectives[idx[w + 1]][k] - objectives[idx[w - 1]][k]) / range;
        }
    }
    dist
}

fn assign_ranks(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let fronts = fast_nondominated_sort(pop);
    for (r, front) in fronts.iter().enumerate() {
        let fs: Vec<&Vector> = front.iter().map(|&i| &pop[i].f).collect();
        let d = crowding_distance(&fs);
        for (&i, di) in front.iter().zip(d) {
            pop[i].rank = r + 1;
            pop[i].crowding = di;
        }
    }
    fronts
}

// lower rank, then larger crowding
fn better(a: &Individual, b: &Individual) -> bool {
    a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding)
}

fn tournament<'a>(pop: &'a [Individual], rng: &mut ChaCha8Rng) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if better(b, a) {
        b
    } else {
        a
    }
}

fn sbx(a: &Vector, b: &Vector, bounds: &SamplingBox, cfg: &GaConfig, rng: &mut ChaCha8Rng) -> (Vector, Vector) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    if rng.random::<f64>() > cfg.crossover_prob {
        return (c1, c2);
    }
    let eta = cfg.crossover_eta;
    for i in 0..a.len() {
        if rng.random::<f64>() > 0.5 || (a[i] - b[i]).abs() <= 1e-14 {
            continue;
        }
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        let (y1, y2) = if a[i] < b[i] { (a[i], b[i]) } else { (b[i], a[i]) };
        let u: f64 = rng.random();
        let child = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = child(1.0 + 2.0 * (y1 - lo) / (y2 - y1));
        let bq2 = child(1.0 + 2.0 * (hi - y2) / (y2 - y1));
        let mut v1 = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(lo, hi);
        let mut v2 = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(lo, hi);
        if rng.random::<f64>() < 0.5 {
            std::mem::swap(&mut v1, &mut v2);
        }
        c1[i] = v1;
        c2[i] = v2;
    }
    (c1, c2)
}

fn mutate(x: &mut Vector, bounds: &SamplingBox, cfg: &GaConfig, rng: &mut ChaCha8Rng) {
    let pm = cfg.mutation_prob.unwrap_or(1.0 / x.len() as f64);
    let eta = cfg.mutation_eta;
    for i in 0..x.len() {
        if rng.random::<f64>() >= pm {
            continue;
        }
        let (lo, hi) = (bounds.lower[i], bounds.upper[i]);
        let span = hi - lo;
        let d1 = (x[i] - lo) / span;
        let d2 = (hi - x[i]) / span;
        let u: f64 = rng.random();
        let pw = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            val.powf(pw) - 1.0
        } else {
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - val.powf(pw)
        };
        x[i] = (x[i] + dq * span).clamp(lo, hi);
    }
}

fn evaluate_all(
    problem: &ProblemDefinition,
    xs: Vec<Vector>,
    cfg: &GaConfig,
    counters: &mut EvalCounters,
) -> Result<Vec<Individual>, ProblemError> {
    if !cfg.parallel {
        return xs.into_iter().map(|x| Individual::evaluate(problem, x, cfg.delta_h, counters)).collect();
    }
    let results: Vec<_> = xs
        .into_par_iter()
        .map(|x| {
            let mut local = EvalCounters::new(problem.p());
            (Individual::evaluate(problem, x, cfg.delta_h, &mut local), local)
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (r, local) in results {
        *counters += &local;
        out.push(r?);
    }
    Ok(out)
}

/// Per-generation summary; generation 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub min_violation: f64,
    pub feasible: usize,
    pub front_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NsgaResult {
    /// Final population, sorted by (rank, −crowding).
    pub population: Vec<Individual>,
    pub history: Vec<GenerationStats>,
    /// Final rank-1 individuals; the run's total counters sit on the set.
    pub front: FrontSet,
    pub counters: EvalCounters,
    pub wall_time_s: f64,
    pub params: String,
}

impl NsgaResult {
    /// The rank-1 individual of least violation, ties broken by the
    /// smallest `w · f`.
    pub fn best(&self, w: &Vector) -> &Individual {
        self.population
            .iter()
            .filter(|i| i.rank == 1)
            .min_by(|a, b| {
                a.violation
                    .total_cmp(&b.violation)
                    .then(w.dot(&a.f).total_cmp(&w.dot(&b.f)))
            })
            .expect("rank-1 front is nonempty")
    }

    /// Report for [`NsgaResult::best`] carrying the whole run's counters.
    pub fn best_report(&self, problem: &ProblemDefinition, w: &Vector) -> Result<SolveReport, ProblemError> {
        let b = self.best(w);
        individual_report(problem, b, &self.params, self.counters.clone(), self.wall_time_s)
    }

    /// Columns `x…, f…, violation, rank, crowding`.
    pub fn write_population_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let Some(first) = self.population.first() else {
            return Ok(());
        };
        let mut header: Vec<String> = (1..=first.x.len()).map(|i| format!("x{i}")).collect();
        header.extend((1..=first.f.len()).map(|i| format!("f{i}")));
        header.extend(["violation", "rank", "crowding"].map(String::from));
        w.write_record(&header)?;
        for ind in &self.population {
            let mut row: Vec<String> = ind.x.iter().chain(ind.f.iter()).map(|v| v.to_string()).collect();
            row.push(ind.violation.to_string());
            row.push(ind.rank.to_string());
            row.push(ind.crowding.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn individual_report(
    problem: &ProblemDefinition,
    ind: &Individual,
    params: &str,
    counters: EvalCounters,
    wall_time_s: f64,
) -> Result<SolveReport, ProblemError> {
    SolveReport::build(
        problem,
        RunSummary {
            method: Method::Nsga2,
            params: params.to_string(),
            success: ind.is_feasible(),
            status: if ind.is_feasible() { "feasible_within_delta_h" } else { "infeasible" }.to_string(),
            x: ind.x.clone(),
            w: Vector::zeros(0),
            u: Vector::zeros(0),
            v: Vector::zeros(0),
            kkt_residual: f64::NAN,
            counters,
            wall_time_s,
        },
    )
}

/// Runs `cfg.generations` elitist generations from a uniform population in
/// the problem's sampling box. Objectives are evaluated exactly
/// `N · (T + 1)` times.
pub fn evolve(problem: &ProblemDefinition, cfg: &GaConfig, counters: &mut EvalCounters) -> Result<NsgaResult, NsgaError> {
    cfg.validate()?;
    let start = Instant::now();
    let bounds = problem.sampling_box().clone();
    let n = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut local = EvalCounters::new(problem.p());

    let init: Vec<Vector> = (0..n)
        .map(|_| Vector::from_iterator(bounds.dim(), (0..bounds.dim()).map(|i| rng.random_range(bounds.lower[i]..=bounds.upper[i]))))
        .collect();
    let mut pop = evaluate_all(problem, init, cfg, &mut local)?;
    assign_ranks(&mut pop);
    let mut history = vec![stats(0, &pop)];

    for gen in 1..=cfg.generations {
        let mut children = Vec::with_capacity(n);
        while children.len() < n {
            let a = tournament(&pop, &mut rng).x.clone();
            let b = tournament(&pop, &mut rng).x.clone();
            let (mut c1, mut c2) = sbx(&a, &b, &bounds, cfg, &mut rng);
            mutate(&mut c1, &bounds, cfg, &mut rng);
            mutate(&mut c2, &bounds, cfg, &mut rng);
            children.push(c1);
            children.push(c2);
        }
        let offspring = evaluate_all(problem, children, cfg, &mut local)?;
        let mut combined = pop;
        combined.extend(offspring);
        let fronts = assign_ranks(&mut combined);
        let mut keep: Vec<usize> = Vec::with_capacity(n);
        for front in fronts {
            if keep.len() + front.len() <= n {
                keep.extend(front);
                continue;
            }
            let mut split = front;
            split.sort_by(|&a, &b| combined[b].crowding.total_cmp(&combined[a].crowding).then(a.cmp(&b)));
            keep.extend(split.into_iter().take(n - keep.len()));
            break;
        }
        let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
        pop = keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect();
        history.push(stats(gen, &pop));
    }
    pop.sort_by(|a, b| {
        a.rank
            .cmp(&b.rank)
            .then_with(|| b.crowding.partial_cmp(&a.crowding).unwrap_or(Ordering::Equal))
    });
    *counters += &local;
    let wall_time_s = start.elapsed().as_secs_f64();
    let params = format!("N={};T={};seed={};delta_h={}", cfg.population, cfg.generations, cfg.seed, cfg.delta_h);
    let reports = pop
        .iter()
        .filter(|i| i.rank == 1)
        .map(|i| individual_report(problem, i, &params, EvalCounters::new(problem.p()), 0.0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut front = FrontSet::from_reports(problem, reports);
    front.counters = local.clone();
    Ok(NsgaResult {
        population: pop,
        history,
        front,
        counters: local,
        wall_time_s,
        params,
    })
}

fn stats(generation: usize, pop: &[Individual]) -> GenerationStats {
    GenerationStats {
        generation,
        min_violation: pop.iter().map(|i| i.violation).fold(f64::INFINITY, f64::min),
        feasible: pop.iter().filter(|i| i.is_feasible()).count(),
        front_size: pop.iter().filter(|i| i.rank == 1).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(f: &[f64], violation: f64) -> Individual {
        Individual {
            x: Vector::zeros(1),
            f: Vector::from_column_slice(f),
            g: Vector::zeros(0),
            h: Vector::zeros(0),
            violation,
            rank: 0,
            crowding: 0.0,
        }
    }

    #[test]
    fn three_point_fronts() {
        let pop = vec![ind(&[1.0, 2.0], 0.0), ind(&[2.0, 1.0], 0.0), ind(&[3.0, 3.0], 0.0)];
        assert_eq!(fast_nondominated_sort(&pop), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn infeasible_point_leaves_first_front() {
        let pop = vec![ind(&[1.0, 2.0], 0.0), ind(&[0.0, 0.0], 0.5), ind(&[2.0, 1.0], 0.0)];
        let fronts = fast_nondominated_sort(&pop);
        assert_eq!(fronts[0], vec![0, 2]);
        assert_eq!(fronts[1], vec![1]);
    }

    #[test]
    fn crowding_boundaries_and_symmetry() {
        let a = Vector::from_column_slice(&[0.0, 1.0]);
        let b = Vector::from_column_slice(&[1.0, 0.0]);
        assert!(crowding_distance(&[&a, &b]).iter().all(|d| d.is_infinite()));
        let line: Vec<Vector> = (0..5).map(|i| Vector::from_column_slice(&[i as f64, 4.0 - i as f64])).collect();
        let refs: Vec<&Vector> = line.iter().collect();
        let d = crowding_distance(&refs);
        assert!(d[0].is_infinite() && d[4].is_infinite());
        assert!((d[1] - d[2]).abs() < 1e-15 && (d[2] - d[3]).abs() < 1e-15);
        assert!((d[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(GaConfig::default().validate().is_ok());
        for bad in [
            GaConfig { population: 5, ..GaConfig::default() },
            GaConfig { population: 2, ..GaConfig::default() },
            GaConfig { crossover_prob: 1.5, ..GaConfig::default() },
            GaConfig { mutation_prob: Some(-0.1), ..GaConfig::default() },
            GaConfig { delta_h: 0.0, ..GaConfig::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
