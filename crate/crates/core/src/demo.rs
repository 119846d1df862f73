//! Ready-made worked examples.
//!
//! Two small, fully wired problems used throughout the test-suite and the
//! documentation. Both model a person currently rejected by a salary
//! classifier who needs a better job, a degree and a move to the US:
//!
//! * [`relocation_problem`] — the minimal three-action version with a
//!   consequence graph. Getting the job is easier with a degree and easier
//!   in the US, while studying is cheaper at home; the graph makes
//!   "study first, then move, then switch jobs" strictly cheaper than any
//!   other order of the same three actions.
//! * [`career_problem`] — the five-action version whose reference solution
//!   temporarily cuts working hours to free up time for the degree and
//!   restores them after the job switch, so the hours feature is tweaked
//!   twice along the way.

use std::collections::BTreeMap;

use crate::actions::{
    Action, ActionCatalog, CmpOp, EffectKind, EffectRule, Monotone, Sequence, Step,
    ValueDescriptor,
};
use crate::classifier::ModelSpec;
use crate::consequence::{ConsequenceGraph, CostConfig, Edge, EffortFn, TauFn};
use crate::feature_space::{FeatureDef, FeatureKind, FeatureSpace, Instance, Value};
use crate::objectives::Problem;
use crate::Real;

fn num(name: &str, min: Real, max: Real) -> FeatureDef<Real> {
    FeatureDef {
        name: name.into(),
        kind: FeatureKind::Numeric { min, max },
    }
}

fn ordered(name: &str, levels: &[&str]) -> FeatureDef<Real> {
    FeatureDef {
        name: name.into(),
        kind: FeatureKind::OrderedCategorical {
            levels: levels.iter().map(|s| s.to_string()).collect(),
        },
    }
}

fn unordered(name: &str, levels: &[&str]) -> FeatureDef<Real> {
    FeatureDef {
        name: name.into(),
        kind: FeatureKind::Categorical {
            levels: levels.iter().map(|s| s.to_string()).collect(),
        },
    }
}

/// A linear model over the one-hot encoding that accepts exactly when the
/// instance has a Developer job, at least a BSc and a US location: each of
/// the three conditions contributes logit 8 against a bias of −20, so any
/// two alone stay firmly below the 0.5 threshold.
fn developer_bsc_us_model(weights_layout: &[(usize, Real)], width: usize) -> ModelSpec<Real> {
    let mut weights = vec![0.0; width];
    for &(i, w) in weights_layout {
        weights[i] = w;
    }
    ModelSpec::Linear {
        weights,
        bias: -20.0,
    }
}

/// The three-action relocation problem with a consequence graph.
///
/// Features: `Job ∈ {Seller, Developer}`, `Edu ∈ HS < BSc < MSc`,
/// `Location ∈ {Germany, US}`; start `(Seller, HS, Germany)`. Actions (all
/// pinned to a single tweaking value): `switch-job` (effort 10), `add-edu`
/// (effort 5), `move` (effort 15). Consequences: a degree or a US location
/// each halve the job-switch effort (two incoming edges on `Job`), and
/// studying costs half in Germany (one edge on `Edu`).
pub fn relocation_problem() -> Problem<Real> {
    let space = FeatureSpace::new(vec![
        unordered("Job", &["Seller", "Developer"]),
        ordered("Edu", &["HS", "BSc", "MSc"]),
        unordered("Location", &["Germany", "US"]),
    ])
    .unwrap();

    let single_level = |id: &str, feature: usize, level: u32| {
        Action::new(
            &space,
            id,
            EffectRule {
                target: feature,
                kind: EffectKind::SetToValue,
            },
            vec![],
            ValueDescriptor::LevelSubset(vec![level]),
            vec![],
        )
        .unwrap()
    };
    let catalog = ActionCatalog::new(vec![
        single_level("switch-job", 0, 1),
        single_level("add-edu", 1, 1),
        single_level("move", 2, 1),
    ])
    .unwrap();

    let graph = ConsequenceGraph::new(
        &space,
        [0, 1, 2],
        vec![
            // a degree halves the job-switch effort
            Edge {
                source: 1,
                target: 0,
                tau: TauFn::ThresholdStep {
                    op: CmpOp::Ge,
                    threshold: Value::Level(1),
                    if_true: 0.5,
                    if_false: 1.0,
                },
            },
            // being in the US halves the job-switch effort
            Edge {
                source: 2,
                target: 0,
                tau: TauFn::LevelMap {
                    map: BTreeMap::from([(1, 0.5)]),
                    default: 1.0,
                },
            },
            // studying is cheaper in Germany
            Edge {
                source: 2,
                target: 1,
                tau: TauFn::LevelMap {
                    map: BTreeMap::from([(1, 1.0)]),
                    default: 0.5,
                },
            },
        ],
    )
    .unwrap();

    let efforts = BTreeMap::from([
        ("switch-job".to_string(), EffortFn::Constant(10.0)),
        ("add-edu".to_string(), EffortFn::Constant(5.0)),
        ("move".to_string(), EffortFn::Constant(15.0)),
    ]);
    let cost = CostConfig::new(&space, &catalog, efforts, Some(graph), true).unwrap();

    // encoding layout: Job(2) | Edu(3) | Location(2)
    let model = developer_bsc_us_model(&[(1, 8.0), (3, 8.0), (4, 8.0), (6, 8.0)], 7);

    let x0 = Instance::new(vec![Value::Level(0), Value::Level(0), Value::Level(0)]);
    Problem::new(space, catalog, cost, model, x0).unwrap()
}

/// A sequence over the relocation catalog by action ids; every action takes
/// its single admissible value.
pub fn relocation_sequence(problem: &Problem<Real>, ids: &[&str]) -> Sequence<Real> {
    let steps = ids
        .iter()
        .map(|id| Step {
            action: problem.catalog.index_of(id).expect("known action id"),
            value: Value::Level(1),
        })
        .collect();
    Sequence::new(steps).expect("ids are distinct")
}

/// The five-action career problem.
///
/// Features: `Age`, `Job ∈ {Seller, Developer}`, `Edu ∈ HS < BSc < MSc`,
/// `WorkHrs`, `Location ∈ {Germany, US}`; start
/// `(19, Seller, HS, 40, Germany)`. Getting a degree takes four years (an
/// indirect effect on `Age`); the working-hours actions allow dropping to
/// part time and returning to full time, so a full plan can tweak `WorkHrs`
/// twice.
pub fn career_problem() -> Problem<Real> {
    let space = FeatureSpace::new(vec![
        num("Age", 10.0, 90.0),
        unordered("Job", &["Seller", "Developer"]),
        ordered("Edu", &["HS", "BSc", "MSc"]),
        num("WorkHrs", 0.0, 99.0),
        unordered("Location", &["Germany", "US"]),
    ])
    .unwrap();

    let catalog = ActionCatalog::new(vec![
        Action::new(
            &space,
            "cut-hours",
            EffectRule { target: 3, kind: EffectKind::SetToValue },
            vec![],
            ValueDescriptor::NumericGrid(vec![10.0]),
            vec![],
        )
        .unwrap(),
        Action::new(
            &space,
            "add-edu",
            EffectRule { target: 2, kind: EffectKind::SetToValue },
            vec![EffectRule { target: 0, kind: EffectKind::AddConstant(4.0) }],
            ValueDescriptor::MonotoneLevels { direction: Monotone::IncreaseOnly },
            vec![],
        )
        .unwrap(),
        Action::new(
            &space,
            "move",
            EffectRule { target: 4, kind: EffectKind::SetToValue },
            vec![],
            ValueDescriptor::LevelSubset(vec![1]),
            vec![],
        )
        .unwrap(),
        Action::new(
            &space,
            "switch-job",
            EffectRule { target: 1, kind: EffectKind::SetToValue },
            vec![],
            ValueDescriptor::LevelSubset(vec![1]),
            vec![],
        )
        .unwrap(),
        Action::new(
            &space,
            "restore-hours",
            EffectRule { target: 3, kind: EffectKind::SetToValue },
            vec![],
            ValueDescriptor::NumericGrid(vec![40.0]),
            vec![],
        )
        .unwrap(),
    ])
    .unwrap();

    let efforts = BTreeMap::from([
        ("cut-hours".to_string(), EffortFn::Constant(2.0)),
        ("add-edu".to_string(), EffortFn::Constant(5.0)),
        ("move".to_string(), EffortFn::Constant(15.0)),
        ("switch-job".to_string(), EffortFn::Constant(10.0)),
        ("restore-hours".to_string(), EffortFn::Constant(2.0)),
    ]);
    let cost = CostConfig::new(&space, &catalog, efforts, None, false).unwrap();

    // encoding layout: Age(1) | Job(2) | Edu(3) | WorkHrs(1) | Location(2)
    let model = developer_bsc_us_model(&[(2, 8.0), (4, 8.0), (5, 8.0), (8, 8.0)], 9);

    let x0 = Instance::new(vec![
        Value::Num(19.0),
        Value::Level(0),
        Value::Level(0),
        Value::Num(40.0),
        Value::Level(0),
    ]);
    Problem::new(space, catalog, cost, model, x0).unwrap()
}

/// The reference plan through [`career_problem`]: cut hours, earn the BSc,
/// move, switch jobs, restore full-time hours.
pub fn career_reference_sequence(problem: &Problem<Real>) -> Sequence<Real> {
    let step = |id: &str, value: Value<Real>| Step {
        action: problem.catalog.index_of(id).expect("known action id"),
        value,
    };
    Sequence::new(vec![
        step("cut-hours", Value::Num(10.0)),
        step("add-edu", Value::Level(1)),
        step("move", Value::Level(1)),
        step("switch-job", Value::Level(1)),
        step("restore-hours", Value::Num(40.0)),
    ])
    .expect("distinct actions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::evaluate;

    #[test]
    fn both_start_instances_are_rejected() {
        let career = career_problem();
        let relocation = relocation_problem();
        assert!(career.accept_proba(&career.x0).unwrap() < 0.5);
        assert!(relocation.accept_proba(&relocation.x0).unwrap() < 0.5);
    }

    #[test]
    fn career_reference_plan_is_feasible() {
        let p = career_problem();
        let seq = career_reference_sequence(&p);
        let sol = evaluate(&p, &seq).unwrap();
        assert!(sol.feasible, "violations: {}", sol.violation_count);
        let xt = sol.final_state();
        assert_eq!(xt.values[0], Value::Num(23.0));
        assert_eq!(xt.values[1], Value::Level(1));
        assert_eq!(xt.values[2], Value::Level(1));
        assert_eq!(xt.values[3], Value::Num(40.0));
        assert_eq!(xt.values[4], Value::Level(1));
    }
}
