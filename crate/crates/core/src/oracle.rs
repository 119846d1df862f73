//! Exhaustive ground-truth search for small problems.
//!
//! The oracle enumerates every ordered subset of distinct actions (lengths
//! 1 through N) crossed with every value assignment from the actions'
//! finite value grids, evaluates each candidate exactly like the optimizer
//! would, and returns the exact feasible non-dominated set. It exists to
//! validate the heuristic search: on a problem small enough to enumerate,
//! the optimizer's front can be compared against the oracle's.
//!
//! Only finitely-valued action spaces can be enumerated; continuous ranges
//! are rejected up front. The enumeration size is computed before any work
//! happens and runs exceeding the configured cap are refused with the
//! computed count, so a misconfigured call fails in microseconds instead
//! of hours.

use itertools::Itertools;
use thiserror::Error;

use crate::actions::{Sequence, Step};
use crate::brkga::{cmp_phenotype, dominates};
use crate::feature_space::Value;
use crate::objectives::{evaluate, EvalError, EvaluatedSolution, Problem};
use crate::scalar::Scalar;

/// Enumeration limits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    /// Maximum number of candidate sequences the oracle will evaluate.
    pub max_candidates: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_candidates: 10_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "enumeration would evaluate {candidates} candidate sequences, \
         exceeding the cap of {cap}"
    )]
    TooLarge { candidates: u128, cap: u128 },
    #[error("action `{0}` has a continuous value space; the oracle needs finite grids")]
    UnboundedValueSpace(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The oracle's result: the exact feasible non-dominated set.
#[derive(Debug, Clone)]
pub struct OracleFront<S: Scalar> {
    /// Feasible non-dominated solutions, phenotype-deduplicated and sorted
    /// by (cost, distance, phenotype). Solutions with equal objective
    /// vectors are all retained.
    pub front: Vec<EvaluatedSolution<S>>,
    /// Number of candidate sequences evaluated.
    pub candidates: u128,
    /// How many of them were feasible.
    pub feasible_count: usize,
}

/// Number of candidate sequences the oracle would evaluate: the sum over
/// all non-empty action subsets of (subset size)! times the product of the
/// subset's value-grid sizes. Saturates at `u128::MAX`.
pub fn enumeration_count<S: Scalar>(problem: &Problem<S>) -> Result<u128, OracleError> {
    let grids = value_grids(problem)?;
    let n = grids.len();
    let mut total: u128 = 0;
    for k in 1..=n {
        let factorial: u128 = (1..=k as u128).product();
        for subset in (0..n).combinations(k) {
            let product = subset
                .iter()
                .map(|&i| grids[i].len() as u128)
                .try_fold(1u128, u128::checked_mul)
                .unwrap_or(u128::MAX);
            total = total.saturating_add(factorial.saturating_mul(product));
        }
    }
    Ok(total)
}

/// Enumerates and evaluates every candidate sequence, returning the exact
/// feasible non-dominated set. Deterministic: the enumeration order is
/// fixed and the returned front is canonically sorted.
pub fn enumerate_front<S: Scalar>(
    problem: &Problem<S>,
    config: &OracleConfig,
) -> Result<OracleFront<S>, OracleError> {
    let candidates = enumeration_count(problem)?;
    if candidates > config.max_candidates {
        return Err(OracleError::TooLarge {
            candidates,
            cap: config.max_candidates,
        });
    }

    let grids = value_grids(problem)?;
    let n = grids.len();
    let mut evaluated: u128 = 0;
    let mut feasible_count = 0usize;
    // incrementally maintained non-dominated set: a newcomer is dropped if
    // dominated, otherwise it evicts everything it dominates
    let mut front: Vec<EvaluatedSolution<S>> = Vec::new();

    for k in 1..=n {
        for perm in (0..n).permutations(k) {
            let value_choices: Vec<Vec<Value<S>>> =
                perm.iter().map(|&i| grids[i].clone()).collect();
            for assignment in value_choices.into_iter().multi_cartesian_product() {
                let steps: Vec<Step<S>> = perm
                    .iter()
                    .zip(&assignment)
                    .map(|(&action, &value)| Step { action, value })
                    .collect();
                let seq = Sequence::new(steps).expect("permutations have distinct actions");
                let sol = evaluate(problem, &seq)?;
                evaluated += 1;
                if !sol.feasible {
                    continue;
                }
                feasible_count += 1;
                if front
                    .iter()
                    .any(|f| dominates(&f.objectives, &sol.objectives))
                {
                    continue;
                }
                front.retain(|f| !dominates(&sol.objectives, &f.objectives));
                front.push(sol);
            }
        }
    }
    debug_assert_eq!(evaluated, candidates, "count formula disagrees with enumeration");

    // phenotypes are unique by construction, but dedup defensively so the
    // contract holds even if a future grid contains repeated values
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

    Ok(OracleFront {
        front,
        candidates: evaluated,
        feasible_count,
    })
}

fn value_grids<S: Scalar>(problem: &Problem<S>) -> Result<Vec<Vec<Value<S>>>, OracleError> {
    problem
        .catalog
        .actions()
        .iter()
        .map(|action| {
            action
                .value_space
                .finite_values(&problem.space, action.direct_feature)
                .ok_or_else(|| OracleError::UnboundedValueSpace(action.id.clone()))
        })
        .collect()
}
