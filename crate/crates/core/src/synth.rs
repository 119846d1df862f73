//! Deterministic random problem generator for validation tests.
//!
//! [`random_problem`] produces a small problem — five features, four
//! actions with finite value grids of at most three values, a random
//! linear model that rejects the start instance — that is guaranteed to be
//! solvable: generation rejection-samples until the exhaustive oracle finds
//! at least one feasible sequence. That makes these problems suitable for
//! comparing the heuristic search against ground truth, which is the whole
//! point of this module.
//!
//! Generation is fully deterministic in the seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actions::{
    Action, ActionCatalog, CmpOp, EffectKind, EffectRule, ValueDescriptor,
};
use crate::classifier::ModelSpec;
use crate::consequence::{ConsequenceGraph, CostConfig, Edge, EffortFn, TauFn};
use crate::feature_space::{FeatureDef, FeatureKind, FeatureSpace, Instance, Value};
use crate::objectives::Problem;
use crate::oracle::{enumerate_front, OracleConfig};
use crate::Real;

/// A generated problem together with its ground-truth enumeration size.
#[derive(Debug, Clone)]
pub struct SynthProblem {
    pub problem: Problem<Real>,
    /// Oracle enumeration size of the problem.
    pub candidates: u128,
    /// How many attempts the rejection sampler needed.
    pub attempts: u32,
}

/// Generates a solvable random problem: 5 mixed-kind features, 4 actions
/// with value grids of ≤ 3 values, constant efforts, an occasional
/// consequence graph, and a random linear model rejecting the start
/// instance. Panics only if 64 attempts in a row produce unsolvable
/// problems, which would indicate a generator bug.
pub fn random_problem(seed: u64) -> SynthProblem {
    for attempt in 0..64u32 {
        let derived = seed ^ (u64::from(attempt).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(derived);
        let problem = generate(&mut rng);
        let oracle = match enumerate_front(&problem, &OracleConfig::default()) {
            Ok(front) => front,
            Err(_) => continue,
        };
        if !oracle.front.is_empty() {
            return SynthProblem {
                problem,
                candidates: oracle.candidates,
                attempts: attempt + 1,
            };
        }
    }
    panic!("no solvable problem within 64 attempts for seed {seed}");
}

fn generate(rng: &mut ChaCha8Rng) -> Problem<Real> {
    let space = random_space(rng);
    let x0 = random_instance(rng, &space);
    let catalog = random_catalog(rng, &space);
    let cost = random_cost(rng, &space, &catalog);
    let model = random_model(rng, &space, &x0);
    Problem::new(space, catalog, cost, model, x0).expect("generated problems are valid")
}

fn random_space(rng: &mut ChaCha8Rng) -> FeatureSpace<Real> {
    let features = (0..5)
        .map(|h| {
            let kind = match rng.random_range(0..3u32) {
                0 => {
                    let lo = rng.random_range(-10.0..10.0);
                    let span = rng.random_range(1.0..10.0);
                    FeatureKind::Numeric { min: lo, max: lo + span }
                }
                1 => FeatureKind::OrderedCategorical {
                    levels: level_names(h, rng.random_range(3..=4)),
                },
                _ => FeatureKind::Categorical {
                    levels: level_names(h, 3),
                },
            };
            FeatureDef { name: format!("f{h}"), kind }
        })
        .collect();
    FeatureSpace::new(features).expect("generated schema is valid")
}

fn level_names(feature: usize, count: usize) -> Vec<String> {
    (0..count).map(|l| format!("f{feature}_l{l}")).collect()
}

fn random_instance(rng: &mut ChaCha8Rng, space: &FeatureSpace<Real>) -> Instance<Real> {
    let values = space
        .features()
        .iter()
        .map(|def| match &def.kind {
            FeatureKind::Numeric { min, max } => Value::Num(rng.random_range(*min..*max)),
            other => {
                let n = other.levels().expect("level kinds have levels").len();
                Value::Level(rng.random_range(0..n as u32))
            }
        })
        .collect();
    Instance::new(values)
}

fn random_catalog(rng: &mut ChaCha8Rng, space: &FeatureSpace<Real>) -> ActionCatalog<Real> {
    let actions = (0..4)
        .map(|i| {
            let direct = rng.random_range(0..space.len());
            let value_space = random_value_space(rng, space, direct);
            let indirect = random_indirect(rng, space, direct);
            Action::new(
                space,
                format!("a{i}"),
                EffectRule { target: direct, kind: EffectKind::SetToValue },
                indirect,
                value_space,
                vec![],
            )
            .expect("generated action is valid")
        })
        .collect();
    ActionCatalog::new(actions).expect("ids are unique")
}

fn random_value_space(
    rng: &mut ChaCha8Rng,
    space: &FeatureSpace<Real>,
    direct: usize,
) -> ValueDescriptor<Real> {
    match &space.feature(direct).kind {
        FeatureKind::Numeric { min, max } => {
            let count = rng.random_range(2..=3);
            let mut grid: Vec<Real> = Vec::with_capacity(count);
            while grid.len() < count {
                // exact duplicates are astronomically unlikely, but the
                // check makes the loop self-correcting either way
                let v = rng.random_range(*min..*max);
                if !grid.contains(&v) {
                    grid.push(v);
                }
            }
            grid.sort_by(|a, b| a.partial_cmp(b).expect("draws are finite"));
            ValueDescriptor::NumericGrid(grid)
        }
        other => {
            let n = other.levels().expect("level kinds have levels").len() as u32;
            let count = rng.random_range(1..=3.min(n));
            let mut subset = BTreeSet::new();
            while subset.len() < count as usize {
                subset.insert(rng.random_range(0..n));
            }
            ValueDescriptor::LevelSubset(subset.into_iter().collect())
        }
    }
}

fn random_indirect(
    rng: &mut ChaCha8Rng,
    space: &FeatureSpace<Real>,
    direct: usize,
) -> Vec<EffectRule<Real>> {
    if rng.random_range(0.0..1.0) >= 0.35 {
        return vec![];
    }
    let target = (direct + rng.random_range(1..space.len())) % space.len();
    let kind = match &space.feature(target).kind {
        FeatureKind::Numeric { .. } => EffectKind::AddConstant(rng.random_range(-2.0..2.0)),
        other => {
            let n = other.levels().expect("level kinds have levels").len() as u32;
            EffectKind::SetLevel(rng.random_range(0..n))
        }
    };
    vec![EffectRule { target, kind }]
}

fn random_cost(
    rng: &mut ChaCha8Rng,
    space: &FeatureSpace<Real>,
    catalog: &ActionCatalog<Real>,
) -> CostConfig<Real> {
    let efforts: BTreeMap<String, EffortFn<Real>> = catalog
        .actions()
        .iter()
        .map(|a| (a.id.clone(), EffortFn::Constant(rng.random_range(1.0..10.0))))
        .collect();
    let graph = if rng.random_range(0.0..1.0) < 0.5 {
        random_graph(rng, space)
    } else {
        None
    };
    CostConfig::new(space, catalog, efforts, graph, true).expect("generated costs are valid")
}

fn random_graph(
    rng: &mut ChaCha8Rng,
    space: &FeatureSpace<Real>,
) -> Option<ConsequenceGraph<Real>> {
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let source = rng.random_range(0..space.len());
        let target = (source + rng.random_range(1..space.len())) % space.len();
        if !seen.insert((source, target)) {
            continue;
        }
        let lo = rng.random_range(0.25..1.0);
        let hi = rng.random_range(0.25..1.0);
        let tau = match &space.feature(source).kind {
            FeatureKind::Numeric { min, max } => TauFn::ThresholdStep {
                op: CmpOp::Ge,
                threshold: Value::Num((min + max) / 2.0),
                if_true: lo,
                if_false: hi,
            },
            FeatureKind::OrderedCategorical { levels } => TauFn::ThresholdStep {
                op: CmpOp::Ge,
                threshold: Value::Level(levels.len() as u32 / 2),
                if_true: lo,
                if_false: hi,
            },
            FeatureKind::Categorical { levels } => TauFn::LevelMap {
                map: BTreeMap::from([(rng.random_range(0..levels.len() as u32), lo)]),
                default: hi,
            },
        };
        edges.push(Edge { source, target, tau });
    }
    if edges.is_empty() {
        return None;
    }
    let nodes: BTreeSet<usize> = edges
        .iter()
        .flat_map(|e| [e.source, e.target])
        .collect();
    Some(ConsequenceGraph::new(space, nodes, edges).expect("generated graph is valid"))
}

fn random_model(
    rng: &mut ChaCha8Rng,
    space: &FeatureSpace<Real>,
    x0: &Instance<Real>,
) -> ModelSpec<Real> {
    let encoding = crate::classifier::Encoding::for_space(space);
    let weights: Vec<Real> = (0..encoding.width())
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    // pin the bias so the start instance sits just on the rejected side
    let encoded = crate::classifier::encode(space, &encoding, x0);
    let logit: Real = weights.iter().zip(&encoded).map(|(w, x)| w * x).sum();
    ModelSpec::Linear { weights, bias: -logit - 1.0 }
}
