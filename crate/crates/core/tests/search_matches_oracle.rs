//! End-to-end agreement between the heuristic search and the exhaustive
//! oracle on small generated problems, plus the optimizer's archive and
//! determinism guarantees.

use cscf_core::brkga::{dominates, evolve, evolve_with_archive, BrkgaParams};
use cscf_core::objectives::EvaluatedSolution;
use cscf_core::oracle::{enumerate_front, OracleConfig};
use cscf_core::synth::random_problem;
use cscf_core::Real;

const COST_TOL: f64 = 1e-9;

/// Canonical, deduplicated list of objective vectors of a front.
fn objective_set(front: &[EvaluatedSolution<Real>]) -> Vec<(f64, f64, Vec<u32>)> {
    let mut set: Vec<(f64, f64, Vec<u32>)> = front
        .iter()
        .map(|s| {
            (
                s.objectives.cost,
                s.objectives.distance,
                s.objectives.frequencies.clone(),
            )
        })
        .collect();
    set.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    set.dedup_by(|a, b| {
        (a.0 - b.0).abs() <= COST_TOL && (a.1 - b.1).abs() <= COST_TOL && a.2 == b.2
    });
    set
}

fn assert_same_objective_sets(
    ga: &[EvaluatedSolution<Real>],
    oracle: &[EvaluatedSolution<Real>],
    context: &str,
) {
    let ga_set = objective_set(ga);
    let oracle_set = objective_set(oracle);
    assert_eq!(
        ga_set.len(),
        oracle_set.len(),
        "{context}: front sizes differ\n  search: {ga_set:?}\n  oracle: {oracle_set:?}"
    );
    for (g, o) in ga_set.iter().zip(&oracle_set) {
        assert!(
            (g.0 - o.0).abs() <= COST_TOL && (g.1 - o.1).abs() <= COST_TOL && g.2 == o.2,
            "{context}: objective vectors differ: search {g:?} vs oracle {o:?}"
        );
    }
}

#[test]
fn search_recovers_the_exact_front_on_generated_problems() {
    for seed in 0..3u64 {
        let synth = random_problem(seed);
        let oracle = enumerate_front(&synth.problem, &OracleConfig::default()).unwrap();
        let params = BrkgaParams {
            population_size: 200,
            generations: 80,
            seed: 7,
            ..BrkgaParams::default()
        };
        let out = evolve(&synth.problem, &params).unwrap();
        assert_same_objective_sets(&out.front, &oracle.front, &format!("problem seed {seed}"));
    }
}

#[test]
fn no_archived_evaluation_dominates_a_front_member() {
    for seed in [3u64, 4] {
        let synth = random_problem(seed);
        let params = BrkgaParams {
            population_size: 100,
            generations: 40,
            seed: 1,
            ..BrkgaParams::default()
        };
        let out = evolve_with_archive(&synth.problem, &params).unwrap();
        let archive = out.archive.as_ref().expect("archive was requested");
        assert_eq!(archive.len(), out.evaluations);
        for member in &out.front {
            for other in archive.iter().filter(|s| s.feasible) {
                assert!(
                    !dominates(&other.objectives, &member.objectives),
                    "problem seed {seed}: an evaluated solution dominates a front member"
                );
            }
        }
    }
}

#[test]
fn outcome_is_bitwise_identical_across_thread_counts() {
    let synth = random_problem(5);
    let params = BrkgaParams {
        population_size: 120,
        generations: 40,
        seed: 9,
        ..BrkgaParams::default()
    };
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool builds")
            .install(|| evolve(&synth.problem, &params).unwrap())
    };
    let single = run_with(1);
    let parallel = run_with(4);
    assert_eq!(single.front.len(), parallel.front.len());
    for (a, b) in single.front.iter().zip(&parallel.front) {
        assert_eq!(a.phenotype, b.phenotype);
        assert_eq!(a.objectives, b.objectives); // bitwise: PartialEq on f64
        assert_eq!(a.genotype, b.genotype);
        assert_eq!(a.accept_proba, b.accept_proba);
    }
    assert_eq!(single.stats, parallel.stats);
    assert_eq!(single.evaluations, parallel.evaluations);
}
