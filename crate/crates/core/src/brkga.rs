//! Biased random-key genetic algorithm over sequence genotypes.
//!
//! A genotype is `2N` keys in `[0, 1]`: the first `N` encode action
//! activity and order (key > 0.5 = inactive; active actions sorted by
//! ascending key), the last `N` interpolate each action's tweaking value
//! into its declared value space. Every key vector decodes to a
//! structurally valid — possibly empty — sequence, so the genetic operators
//! never have to repair anything.
//!
//! Selection uses *constrained* dominance: feasible beats infeasible,
//! fewer violations beat more, and only equally-constrained solutions are
//! compared on their objective vectors. Elites are the feasible front-0
//! solutions (one slot per distinct phenotype, capped), parents pair one
//! elite with one non-elite under a biased coin, and a fresh batch of
//! random mutants keeps exploration alive. The returned front is the
//! feasible front-0 of the last generation, deduplicated by phenotype.
//!
//! # Determinism
//!
//! All randomness comes from one seeded generator, consumed in a fixed
//! order: population initialization (slot by slot, keys in order), then per
//! generation first the mutants, then per offspring slot the elite index,
//! the non-elite index and `2N` crossover coin flips. Fitness evaluation is
//! pure and written to pre-assigned slots, so results are bitwise
//! reproducible regardless of how many threads evaluate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::actions::{ActionCatalog, Sequence, Step};
use crate::feature_space::{FeatureSpace, Value};
use crate::objectives::{
    evaluate_with_genotype, EvalError, EvaluatedSolution, ObjectiveVector, Problem,
};
use crate::scalar::Scalar;

/// Random-key genotype: `2N` keys in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Genotype<S> {
    pub keys: Vec<S>,
}

/// Optimizer parameters. The defaults follow the usual evaluation setup:
/// population 500, mutant fraction 0.2, offspring fraction 0.8, crossover
/// bias 0.7, 150 generations. Elites are capped at 20% of the population
/// and the offspring count shrinks to absorb whatever the elites occupy.
#[derive(Debug, Clone, PartialEq)]
pub struct BrkgaParams {
    pub population_size: usize,
    pub mutant_fraction: f64,
    pub offspring_fraction: f64,
    pub crossover_bias: f64,
    pub elite_capacity_fraction: f64,
    pub generations: usize,
    pub seed: u64,
}

impl Default for BrkgaParams {
    fn default() -> Self {
        Self {
            population_size: 500,
            mutant_fraction: 0.2,
            offspring_fraction: 0.8,
            crossover_bias: 0.7,
            elite_capacity_fraction: 0.2,
            generations: 150,
            seed: 0,
        }
    }
}

/// Parameter and runtime errors of the optimizer.
#[derive(Debug, Error)]
pub enum BrkgaError {
    #[error("population_size must be at least 4, got {0}")]
    PopulationTooSmall(usize),
    #[error("{0} must lie strictly between 0 and 1")]
    FractionOutOfRange(&'static str),
    #[error("crossover_bias must lie strictly between 0.5 and 1, got {0}")]
    BiasOutOfRange(f64),
    #[error("mutant_fraction + offspring_fraction must not exceed 1")]
    FractionsOverlap,
    #[error("generations must be at least 1")]
    NoGenerations,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl BrkgaParams {
    pub fn validate(&self) -> Result<(), BrkgaError> {
        if self.population_size < 4 {
            return Err(BrkgaError::PopulationTooSmall(self.population_size));
        }
        for (name, v) in [
            ("mutant_fraction", self.mutant_fraction),
            ("offspring_fraction", self.offspring_fraction),
            ("elite_capacity_fraction", self.elite_capacity_fraction),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(BrkgaError::FractionOutOfRange(name));
            }
        }
        if !(self.crossover_bias > 0.5 && self.crossover_bias < 1.0) {
            return Err(BrkgaError::BiasOutOfRange(self.crossover_bias));
        }
        if self.mutant_fraction + self.offspring_fraction > 1.0 + 1e-12 {
            return Err(BrkgaError::FractionsOverlap);
        }
        if self.generations == 0 {
            return Err(BrkgaError::NoGenerations);
        }
        Ok(())
    }
}

/// Decodes a genotype into a sequence: stable ascending argsort of the
/// activity keys (ties break toward the lower action index), actions with
/// keys above 0.5 dropped (0.5 itself is active), and each surviving
/// action's value key interpolated into its declared value space.
pub fn decode<S: Scalar>(
    space: &FeatureSpace<S>,
    catalog: &ActionCatalog<S>,
    genotype: &Genotype<S>,
) -> Sequence<S> {
    let n = catalog.len();
    assert_eq!(genotype.keys.len(), 2 * n, "genotype must hold 2N keys");
    let half = S::from_f64_lossy(0.5);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        genotype.keys[a]
            .partial_cmp(&genotype.keys[b])
            .expect("keys are never NaN")
            .then(a.cmp(&b))
    });

    let steps: Vec<Step<S>> = order
        .into_iter()
        .filter(|&i| genotype.keys[i] <= half)
        .map(|i| {
            let action = catalog.action(i);
            let value = action.value_space.interpolate(
                space,
                action.direct_feature,
                genotype.keys[n + i],
            );
            Step { action: i, value }
        })
        .collect();

    Sequence::new(steps).expect("argsort yields distinct action indices")
}

/// Pareto dominance under minimization: `u` dominates `v` iff it is no
/// worse in every component and strictly better in at least one.
///
/// # Panics
///
/// If the two vectors disagree in length — they then belong to different
/// problems and comparing them is a programming error.
pub fn dominates<S: Scalar>(u: &ObjectiveVector<S>, v: &ObjectiveVector<S>) -> bool {
    assert_eq!(u.len(), v.len(), "objective vectors of different lengths");
    let mut strictly_better = false;
    for i in 0..u.len() {
        let (a, b) = (u.component(i), v.component(i));
        if a > b {
            return false;
        }
        if a < b {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Constrained dominance: feasible dominates infeasible; among infeasible,
/// fewer violations dominate; otherwise plain objective dominance.
pub fn constrained_dominates<S: Scalar>(
    a: &EvaluatedSolution<S>,
    b: &EvaluatedSolution<S>,
) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => {
            if a.violation_count != b.violation_count {
                a.violation_count < b.violation_count
            } else {
                dominates(&a.objectives, &b.objectives)
            }
        }
        (true, true) => dominates(&a.objectives, &b.objectives),
    }
}

/// Fast non-dominated sort under constrained dominance. Returns fronts of
/// indices into `solutions`; front 0 holds the constrained-non-dominated
/// set, and every solution of front `k+1` is dominated by one of front `k`.
pub fn nondominated_sort<S: Scalar>(solutions: &[EvaluatedSolution<S>]) -> Vec<Vec<usize>> {
    let n = solutions.len();
    if n == 0 {
        return Vec::new();
    }
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if constrained_dominates(&solutions[i], &solutions[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if constrained_dominates(&solutions[j], &solutions[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::take(&mut current));
        current = next;
    }
    fronts
}

/// Biased crossover: each key is copied from the elite parent with
/// probability `bias`, else from the non-elite parent. Consumes exactly
/// one uniform draw per key.
pub fn biased_crossover<S: Scalar, R: Rng>(
    elite: &Genotype<S>,
    non_elite: &Genotype<S>,
    bias: f64,
    rng: &mut R,
) -> Genotype<S> {
    assert_eq!(elite.keys.len(), non_elite.keys.len(), "parents of different lengths");
    let keys = elite
        .keys
        .iter()
        .zip(&non_elite.keys)
        .map(|(&e, &o)| if rng.random::<f64>() < bias { e } else { o })
        .collect();
    Genotype { keys }
}

/// Per-generation progress record.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats<S> {
    pub generation: usize,
    /// Number of feasible solutions in the population.
    pub feasible: usize,
    /// Size of the constrained front 0 (before elite capping).
    pub front_size: usize,
    /// Best (lowest) cost and distance among feasible solutions.
    pub best_cost: Option<S>,
    pub best_distance: Option<S>,
}

/// Result of an optimizer run.
#[derive(Debug, Clone)]
pub struct BrkgaOutcome<S: Scalar> {
    /// Feasible front-0 of the final generation, phenotype-deduplicated and
    /// sorted by (cost, distance, phenotype). Empty when the run never
    /// reached feasibility — see `best_violation_count`.
    pub front: Vec<EvaluatedSolution<S>>,
    pub stats: Vec<GenerationStats<S>>,
    /// Lowest violation count seen across the whole run; the diagnostic
    /// when `front` is empty.
    pub best_violation_count: u32,
    /// Total number of evaluated candidates.
    pub evaluations: usize,
    /// Whether the start instance was already accepted by the classifier —
    /// the caller may want to warn, the run proceeds regardless.
    pub start_already_accepted: bool,
    /// Every evaluated solution of the run; populated only by
    /// [`evolve_with_archive`].
    pub archive: Option<Vec<EvaluatedSolution<S>>>,
}

/// Runs the optimizer. Deterministic for a fixed seed, problem and
/// parameters, independent of evaluation parallelism.
pub fn evolve<S: Scalar>(
    problem: &Problem<S>,
    params: &BrkgaParams,
) -> Result<BrkgaOutcome<S>, BrkgaError> {
    run(problem, params, false)
}

/// [`evolve`], additionally retaining every evaluated solution. Intended
/// for tests that check no evaluated solution dominates a front member.
pub fn evolve_with_archive<S: Scalar>(
    problem: &Problem<S>,
    params: &BrkgaParams,
) -> Result<BrkgaOutcome<S>, BrkgaError> {
    run(problem, params, true)
}

fn run<S: Scalar>(
    problem: &Problem<S>,
    params: &BrkgaParams,
    keep_archive: bool,
) -> Result<BrkgaOutcome<S>, BrkgaError> {
    params.validate()?;
    let n = problem.catalog.len();
    let pop_size = params.population_size;
    let mutant_count = ((params.mutant_fraction * pop_size as f64).round() as usize).max(1);
    let elite_cap = ((params.elite_capacity_fraction * pop_size as f64).floor() as usize).max(1);

    let start_already_accepted = problem
        .accept_proba(&problem.x0)
        .map(crate::classifier::accepts)
        .unwrap_or(false);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut population: Vec<Genotype<S>> = (0..pop_size)
        .map(|_| random_genotype(n, &mut rng))
        .collect();

    let mut archive: Vec<EvaluatedSolution<S>> = Vec::new();
    let mut stats = Vec::with_capacity(params.generations + 1);
    let mut best_violation_count = u32::MAX;
    let mut evaluations = 0usize;

    let mut evaluated = evaluate_population(problem, &population)?;
    evaluations += evaluated.len();
    record(&evaluated, 0, &mut stats, &mut best_violation_count);
    if keep_archive {
        archive.extend(evaluated.iter().cloned());
    }

    for generation in 1..=params.generations {
        // elites: feasible front-0, capped, preferring low cost then low
        // distance then lexicographically smallest phenotype. One slot per
        // distinct phenotype — otherwise clones of the cheapest solution
        // fill the cap and evict rarer front members that happen to cost
        // more, losing them again right after discovery.
        let mut elite_indices = feasible_front0(&evaluated);
        elite_indices.sort_by(|&a, &b| {
            let (sa, sb) = (&evaluated[a], &evaluated[b]);
            sa.objectives
                .cost
                .partial_cmp(&sb.objectives.cost)
                .expect("costs are finite")
                .then(
                    sa.objectives
                        .distance
                        .partial_cmp(&sb.objectives.distance)
                        .expect("distances are finite"),
                )
                .then_with(|| cmp_phenotype(&sa.phenotype, &sb.phenotype))
        });
        elite_indices.dedup_by(|&mut a, &mut b| evaluated[a].phenotype == evaluated[b].phenotype);
        elite_indices.truncate(elite_cap);
        let elite_set: Vec<bool> = {
            let mut mask = vec![false; pop_size];
            for &i in &elite_indices {
                mask[i] = true;
            }
            mask
        };
        let non_elite_indices: Vec<usize> = (0..pop_size).filter(|&i| !elite_set[i]).collect();

        let mut next: Vec<Genotype<S>> = Vec::with_capacity(pop_size);
        for &i in &elite_indices {
            next.push(population[i].clone());
        }
        // mutants are drawn before offspring — fixed RNG consumption order
        let mutants = mutant_count.min(pop_size - next.len());
        for _ in 0..mutants {
            next.push(random_genotype(n, &mut rng));
        }
        while next.len() < pop_size {
            let child = if elite_indices.is_empty() {
                // no feasible solution yet: fall back to two uniform parents
                // from the full population
                let a = rng.random_range(0..pop_size);
                let b = rng.random_range(0..pop_size);
                biased_crossover(&population[a], &population[b], params.crossover_bias, &mut rng)
            } else {
                let e = elite_indices[rng.random_range(0..elite_indices.len())];
                let o = non_elite_indices[rng.random_range(0..non_elite_indices.len())];
                biased_crossover(&population[e], &population[o], params.crossover_bias, &mut rng)
            };
            next.push(child);
        }

        population = next;
        evaluated = evaluate_population(problem, &population)?;
        evaluations += evaluated.len();
        record(&evaluated, generation, &mut stats, &mut best_violation_count);
        if keep_archive {
            archive.extend(evaluated.iter().cloned());
        }
    }

    // final front: feasible front-0 of the last generation, deduplicated by
    // phenotype and canonically ordered
    let mut front: Vec<EvaluatedSolution<S>> = feasible_front0(&evaluated)
        .into_iter()
        .map(|i| evaluated[i].clone())
        .collect();
    front.sort_by(|a, b| cmp_phenotype(&a.phenotype, &b.phenotype));
    front.dedup_by(|a, b| a.phenotype == b.phenotype);
    front.sort_by(|a, b| {
        a.objectives
            .cost
            .partial_cmp(&b.objectives.cost)
            .expect("costs are finite")
            .then(
                a.objectives
                    .distance
                    .partial_cmp(&b.objectives.distance)
                    .expect("distances are finite"),
            )
            .then_with(|| cmp_phenotype(&a.phenotype, &b.phenotype))
    });

    Ok(BrkgaOutcome {
        front,
        stats,
        best_violation_count,
        evaluations,
        start_already_accepted,
        archive: keep_archive.then_some(archive),
    })
}

fn random_genotype<S: Scalar, R: Rng>(n: usize, rng: &mut R) -> Genotype<S> {
    let keys = (0..2 * n)
        .map(|_| S::from_f64_lossy(rng.random::<f64>()))
        .collect();
    Genotype { keys }
}

fn evaluate_population<S: Scalar>(
    problem: &Problem<S>,
    population: &[Genotype<S>],
) -> Result<Vec<EvaluatedSolution<S>>, EvalError> {
    // pre-assigned slots: collect preserves input order, so the outcome is
    // independent of the evaluation schedule
    population
        .par_iter()
        .map(|genotype| {
            let seq = decode(&problem.space, &problem.catalog, genotype);
            evaluate_with_genotype(problem, &seq, Some(genotype.keys.clone()))
        })
        .collect()
}

/// Indices of the feasible constrained-front-0 solutions, ascending.
fn feasible_front0<S: Scalar>(evaluated: &[EvaluatedSolution<S>]) -> Vec<usize> {
    let feasible: Vec<usize> = (0..evaluated.len()).filter(|&i| evaluated[i].feasible).collect();
    feasible
        .iter()
        .copied()
        .filter(|&i| {
            !feasible
                .iter()
                .any(|&j| j != i && dominates(&evaluated[j].objectives, &evaluated[i].objectives))
        })
        .collect()
}

fn record<S: Scalar>(
    evaluated: &[EvaluatedSolution<S>],
    generation: usize,
    stats: &mut Vec<GenerationStats<S>>,
    best_violation_count: &mut u32,
) {
    let feasible = evaluated.iter().filter(|s| s.feasible).count();
    for s in evaluated {
        *best_violation_count = (*best_violation_count).min(s.violation_count);
    }
    let front_size = if feasible > 0 {
        feasible_front0(evaluated).len()
    } else {
        // constrained front 0 among infeasibles: minimal violation count,
        // objective-non-dominated within that tier
        let min_v = evaluated.iter().map(|s| s.violation_count).min().unwrap_or(0);
        let tier: Vec<&EvaluatedSolution<S>> =
            evaluated.iter().filter(|s| s.violation_count == min_v).collect();
        tier.iter()
            .filter(|s| {
                !tier
                    .iter()
                    .any(|t| !std::ptr::eq(*t, **s) && dominates(&t.objectives, &s.objectives))
            })
            .count()
    };
    let best_cost = evaluated
        .iter()
        .filter(|s| s.feasible)
        .map(|s| s.objectives.cost)
        .min_by(|a, b| a.partial_cmp(b).expect("costs are finite"));
    let best_distance = evaluated
        .iter()
        .filter(|s| s.feasible)
        .map(|s| s.objectives.distance)
        .min_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    stats.push(GenerationStats {
        generation,
        feasible,
        front_size,
        best_cost,
        best_distance,
    });
}

/// Total lexicographic order on phenotypes: step-wise by action index then
/// value (numbers before levels, which cannot mix on one action), shorter
/// prefix first. Used for deterministic tie-breaking and output ordering.
pub fn cmp_phenotype<S: Scalar>(a: &Sequence<S>, b: &Sequence<S>) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    for (x, y) in a.steps().iter().zip(b.steps()) {
        let ord = x.action.cmp(&y.action).then_with(|| match (x.value, y.value) {
            (Value::Num(p), Value::Num(q)) => p.partial_cmp(&q).unwrap_or(Ordering::Equal),
            (Value::Level(p), Value::Level(q)) => p.cmp(&q),
            (Value::Num(_), Value::Level(_)) => Ordering::Less,
            (Value::Level(_), Value::Num(_)) => Ordering::Greater,
        });
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Rollout;
    use crate::consequence::CostBreakdown;
    use crate::demo;
    use crate::feature_space::Instance;

    fn keys(v: &[f64]) -> Genotype<f64> {
        Genotype { keys: v.to_vec() }
    }

    #[test]
    fn decoder_drops_inactive_and_orders_by_key() {
        let p = demo::relocation_problem();
        // activity [0.70, 0.45, 0.02]: action 0 inactive, then 2 before 1
        let g = keys(&[0.70, 0.45, 0.02, 0.0, 0.0, 0.0]);
        let seq = decode(&p.space, &p.catalog, &g);
        let order: Vec<usize> = seq.steps().iter().map(|s| s.action).collect();
        assert_eq!(order, vec![2, 1]);
    }

    #[test]
    fn decoder_with_all_keys_high_yields_the_empty_sequence() {
        let p = demo::relocation_problem();
        let g = keys(&[0.51, 0.9, 0.75, 0.0, 0.0, 0.0]);
        assert!(decode(&p.space, &p.catalog, &g).is_empty());
    }

    #[test]
    fn key_exactly_half_is_active_and_ties_break_by_index() {
        let p = demo::relocation_problem();
        let g = keys(&[0.5, 0.5, 0.9, 0.0, 0.0, 0.0]);
        let seq = decode(&p.space, &p.catalog, &g);
        let order: Vec<usize> = seq.steps().iter().map(|s| s.action).collect();
        assert_eq!(order, vec![0, 1]);
    }

    #[test]
    fn value_keys_interpolate_to_range_endpoints() {
        let p = demo::career_problem();
        // only "cut-hours"-style numeric grids in career are singletons;
        // build a genotype activating the numeric-grid action with keys 0/1
        let n = p.catalog.len();
        let mut low = vec![1.0; 2 * n];
        low[0] = 0.0; // activate action 0 (cut-hours, grid [10])
        low[n] = 0.0;
        let seq = decode(&p.space, &p.catalog, &keys(&low));
        assert_eq!(seq.steps()[0].value, Value::Num(10.0));

        let mut high = low.clone();
        high[n] = 1.0; // key 1.0 stays inside the singleton grid
        let seq = decode(&p.space, &p.catalog, &keys(&high));
        assert_eq!(seq.steps()[0].value, Value::Num(10.0));
    }

    fn vector(cost: f64, distance: f64) -> ObjectiveVector<f64> {
        ObjectiveVector { cost, distance, frequencies: vec![] }
    }

    #[test]
    fn dominance_requires_strict_improvement_somewhere() {
        assert!(dominates(&vector(1.0, 2.0), &vector(2.0, 2.0)));
        assert!(!dominates(&vector(1.0, 2.0), &vector(1.0, 2.0)));
        assert!(!dominates(&vector(1.0, 3.0), &vector(2.0, 2.0)));
        assert!(!dominates(&vector(2.0, 2.0), &vector(1.0, 3.0)));
    }

    #[test]
    #[should_panic(expected = "different lengths")]
    fn dominance_panics_on_length_mismatch() {
        let a = vector(1.0, 2.0);
        let b = ObjectiveVector { cost: 1.0, distance: 2.0, frequencies: vec![1] };
        dominates(&a, &b);
    }

    fn solution(cost: f64, distance: f64, feasible: bool, violations: u32) -> EvaluatedSolution<f64> {
        EvaluatedSolution {
            genotype: None,
            phenotype: Sequence::empty(),
            rollout: Rollout {
                states: vec![Instance::new(vec![])],
                steps: vec![],
                violation_count: violations,
            },
            cost: CostBreakdown {
                total: cost,
                efforts: vec![],
                discounts: vec![],
                costs: vec![],
            },
            objectives: vector(cost, distance),
            violation_count: violations,
            accept_proba: if feasible { 0.9 } else { 0.1 },
            feasible,
        }
    }

    #[test]
    fn sort_splits_tradeoff_and_dominated_solutions() {
        let sols = vec![
            solution(1.0, 2.0, true, 0),
            solution(2.0, 1.0, true, 0),
            solution(3.0, 3.0, true, 0),
        ];
        assert_eq!(nondominated_sort(&sols), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn feasibility_beats_better_objectives() {
        let sols = vec![solution(5.0, 5.0, true, 0), solution(1.0, 1.0, false, 2)];
        assert_eq!(nondominated_sort(&sols), vec![vec![0], vec![1]]);
    }

    #[test]
    fn fewer_violations_rank_higher_among_infeasible() {
        let sols = vec![
            solution(1.0, 1.0, false, 3),
            solution(9.0, 9.0, false, 1),
            solution(9.0, 9.0, false, 2),
        ];
        assert_eq!(nondominated_sort(&sols), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn single_solution_is_one_front() {
        let sols = vec![solution(1.0, 1.0, true, 0)];
        assert_eq!(nondominated_sort(&sols), vec![vec![0]]);
    }

    #[test]
    fn identical_parents_cross_to_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let parent = keys(&[0.1, 0.2, 0.3, 0.4]);
        let child = biased_crossover(&parent, &parent, 0.7, &mut rng);
        assert_eq!(child, parent);
    }

    #[test]
    fn bias_one_copies_the_elite() {
        // random::<f64>() < 1.0 always holds, so the child is the elite
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let elite = keys(&[0.1, 0.2, 0.3, 0.4]);
        let other = keys(&[0.9, 0.8, 0.7, 0.6]);
        assert_eq!(biased_crossover(&elite, &other, 1.0, &mut rng), elite);
    }

    #[test]
    fn crossover_bias_matches_its_monte_carlo_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let n = 10_000;
        let elite = Genotype { keys: vec![1.0f64; n] };
        let other = Genotype { keys: vec![0.0f64; n] };
        let child = biased_crossover(&elite, &other, 0.7, &mut rng);
        let from_elite: f64 = child.keys.iter().sum::<f64>() / n as f64;
        assert!((from_elite - 0.7).abs() < 0.02, "rate {from_elite}");
    }

    #[test]
    fn relocation_front_is_the_single_cheapest_ordering() {
        let p = demo::relocation_problem();
        let params = BrkgaParams {
            population_size: 60,
            generations: 40,
            seed: 0,
            ..BrkgaParams::default()
        };
        let out = evolve(&p, &params).unwrap();
        assert_eq!(out.front.len(), 1, "front: {:?}", front_costs(&out));
        let best = &out.front[0];
        assert_eq!(best.objectives.cost, 22.5);
        assert_eq!(best.cost.undiscounted_total(), 30.0);
        let order: Vec<&str> = best
            .phenotype
            .steps()
            .iter()
            .map(|s| p.catalog.action(s.action).id.as_str())
            .collect();
        assert_eq!(order, vec!["add-edu", "move", "switch-job"]);
    }

    fn front_costs(out: &BrkgaOutcome<f64>) -> Vec<f64> {
        out.front.iter().map(|s| s.objectives.cost).collect()
    }

    #[test]
    fn single_flipping_action_gives_a_singleton_front() {
        // one action, already sufficient to flip the class
        let p = demo::relocation_problem();
        let flip_on_edu = crate::classifier::ModelSpec::Linear {
            // encoding: Job(2) | Edu(3) | Location(2); BSc or MSc flips
            weights: vec![0.0, 0.0, 0.0, 8.0, 8.0, 0.0, 0.0],
            bias: -4.0,
        };
        let catalog = crate::actions::ActionCatalog::new(vec![p.catalog.action(1).clone()]).unwrap();
        let efforts = std::collections::BTreeMap::from([(
            "add-edu".to_string(),
            crate::consequence::EffortFn::Constant(5.0),
        )]);
        let cost = crate::consequence::CostConfig::new(&p.space, &catalog, efforts, None, false).unwrap();
        let problem = Problem::new(p.space.clone(), catalog, cost, flip_on_edu, p.x0.clone()).unwrap();
        let params = BrkgaParams {
            population_size: 20,
            generations: 10,
            seed: 3,
            ..BrkgaParams::default()
        };
        let out = evolve(&problem, &params).unwrap();
        assert_eq!(out.front.len(), 1);
        assert_eq!(out.front[0].phenotype.len(), 1);
        assert!(out.front[0].feasible);
    }

    #[test]
    fn same_seed_reproduces_the_run_exactly() {
        let p = demo::relocation_problem();
        let params = BrkgaParams {
            population_size: 40,
            generations: 15,
            seed: 11,
            ..BrkgaParams::default()
        };
        let a = evolve(&p, &params).unwrap();
        let b = evolve(&p, &params).unwrap();
        assert_eq!(a.front.len(), b.front.len());
        for (x, y) in a.front.iter().zip(&b.front) {
            assert_eq!(x.phenotype, y.phenotype);
            assert_eq!(x.objectives, y.objectives);
            assert_eq!(x.genotype, y.genotype);
        }
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn short_hopeless_runs_return_empty_fronts_gracefully() {
        // classifier that nothing in the catalog can satisfy
        let p = demo::relocation_problem();
        let never = crate::classifier::ModelSpec::Linear {
            weights: vec![0.0; 7],
            bias: -10.0,
        };
        let problem = Problem::new(p.space.clone(), p.catalog.clone(), p.cost.clone(), never, p.x0.clone()).unwrap();
        let params = BrkgaParams {
            population_size: 8,
            generations: 2,
            seed: 0,
            ..BrkgaParams::default()
        };
        let out = evolve(&problem, &params).unwrap();
        assert!(out.front.is_empty());
        assert_eq!(out.stats.len(), 3); // generations 0, 1, 2
        assert!(out.best_violation_count > 0 || out.front.is_empty());
    }

    #[test]
    fn no_archived_solution_dominates_a_front_member() {
        let p = demo::relocation_problem();
        let params = BrkgaParams {
            population_size: 40,
            generations: 20,
            seed: 5,
            ..BrkgaParams::default()
        };
        let out = evolve_with_archive(&p, &params).unwrap();
        let archive = out.archive.as_ref().unwrap();
        assert_eq!(archive.len(), out.evaluations);
        for member in &out.front {
            for other in archive.iter().filter(|s| s.feasible) {
                assert!(
                    !dominates(&other.objectives, &member.objectives),
                    "front member dominated by an evaluated solution"
                );
            }
        }
    }

    #[test]
    fn params_are_validated() {
        let ok = BrkgaParams::default();
        assert!(ok.validate().is_ok());
        assert!(matches!(
            BrkgaParams { population_size: 3, ..ok.clone() }.validate(),
            Err(BrkgaError::PopulationTooSmall(3))
        ));
        assert!(matches!(
            BrkgaParams { crossover_bias: 0.4, ..ok.clone() }.validate(),
            Err(BrkgaError::BiasOutOfRange(_))
        ));
        assert!(matches!(
            BrkgaParams { mutant_fraction: 0.5, offspring_fraction: 0.6, ..ok.clone() }.validate(),
            Err(BrkgaError::FractionsOverlap)
        ));
        assert!(matches!(
            BrkgaParams { generations: 0, ..ok }.validate(),
            Err(BrkgaError::NoGenerations)
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            /// Every key vector decodes, the result is duplicate-free, only
            /// sub-threshold actions appear, and they are ordered by key.
            #[test]
            fn decode_is_total_and_ordered(
                keys in proptest::collection::vec(0.0f64..=1.0, 10),
            ) {
                let p = demo::career_problem(); // N = 5
                let g = Genotype { keys };
                let seq = decode(&p.space, &p.catalog, &g);
                prop_assert!(seq.len() <= 5);
                let mut seen = std::collections::BTreeSet::new();
                for w in seq.steps().windows(2) {
                    prop_assert!(g.keys[w[0].action] <= g.keys[w[1].action]);
                }
                for s in seq.steps() {
                    prop_assert!(g.keys[s.action] <= 0.5);
                    prop_assert!(seen.insert(s.action));
                }
                // purity: decoding twice gives the same phenotype
                prop_assert_eq!(decode(&p.space, &p.catalog, &g), seq);
            }

            /// Perturbing only the value half never changes the action order.
            #[test]
            fn value_keys_do_not_reorder_actions(
                activity in proptest::collection::vec(0.0f64..=1.0, 5),
                values_a in proptest::collection::vec(0.0f64..=1.0, 5),
                values_b in proptest::collection::vec(0.0f64..=1.0, 5),
            ) {
                let p = demo::career_problem();
                let mut ka = activity.clone();
                ka.extend(values_a);
                let mut kb = activity;
                kb.extend(values_b);
                let sa = decode(&p.space, &p.catalog, &Genotype { keys: ka });
                let sb = decode(&p.space, &p.catalog, &Genotype { keys: kb });
                let order_a: Vec<usize> = sa.steps().iter().map(|s| s.action).collect();
                let order_b: Vec<usize> = sb.steps().iter().map(|s| s.action).collect();
                prop_assert_eq!(order_a, order_b);
            }
        }
    }
}
