//! Objective vector and solution evaluation.
//!
//! A candidate sequence is scored on `2 + d` minimization objectives: the
//! sequence cost `o1`, the Gower distance `o2` between the start instance
//! and the reached counterfactual, and one tweaking-frequency objective per
//! feature — how many actions of the sequence affect it. The frequency
//! objectives keep the front diverse: sequences that touch different
//! features are mutually non-dominated even at equal cost and distance.
//!
//! Feasibility is a constraint, not an objective: a solution is feasible
//! iff its rollout has zero violations, the classifier accepts the final
//! state, and the sequence is non-empty.

use thiserror::Error;

use crate::actions::{rollout, ActionCatalog, ActionError, Rollout, Sequence};
use crate::classifier::{
    accepts, encode, predict_accept_proba, ClassifierError, Encoding, ModelSpec,
};
use crate::consequence::{sequence_cost, CostBreakdown, CostConfig, CostError};
use crate::feature_space::{validate_instance, FeatureKind, FeatureSpace, Instance, Value};
use crate::scalar::Scalar;

/// The `(2 + d)`-dimensional objective vector, all components minimized.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector<S> {
    /// o1: sequence cost C_S.
    pub cost: S,
    /// o2: Gower distance between `x_0` and `x_T`, in `[0, 1]`.
    pub distance: S,
    /// o_{2+h}: per-feature tweaking frequency, length `d`.
    pub frequencies: Vec<u32>,
}

impl<S: Scalar> ObjectiveVector<S> {
    /// Total number of objective components, `2 + d`.
    pub fn len(&self) -> usize {
        2 + self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        false // cost and distance are always present
    }

    /// The `i`-th component as a scalar (frequencies are exact small
    /// integers, so the conversion is lossless).
    pub fn component(&self, i: usize) -> S {
        match i {
            0 => self.cost,
            1 => self.distance,
            _ => S::from_u32(self.frequencies[i - 2]).expect("frequency fits the scalar type"),
        }
    }
}

/// A fully evaluated candidate: phenotype, trajectory, costs, objectives
/// and the feasibility verdict. The genotype is kept when the candidate
/// came from the optimizer (the oracle has none).
#[derive(Debug, Clone)]
pub struct EvaluatedSolution<S> {
    pub genotype: Option<Vec<S>>,
    pub phenotype: Sequence<S>,
    pub rollout: Rollout<S>,
    pub cost: CostBreakdown<S>,
    pub objectives: ObjectiveVector<S>,
    /// Rollout violations, plus one synthetic violation when the decoded
    /// sequence is empty — so `violation_count == 0` already implies
    /// `T ≥ 1` and the optimizer has a gradient toward non-empty sequences.
    pub violation_count: u32,
    pub accept_proba: S,
    pub feasible: bool,
}

impl<S: Scalar> EvaluatedSolution<S> {
    /// The reached counterfactual candidate `x_T`.
    pub fn final_state(&self) -> &Instance<S> {
        self.rollout.final_state()
    }
}

/// Gower distance between two instances of the same space, in `[0, 1]`:
/// the mean over features of range-normalized numeric distance, level-index
/// distance over `L − 1` for ordered categoricals, and a plain inequality
/// indicator for unordered ones.
pub fn gower<S: Scalar>(space: &FeatureSpace<S>, a: &Instance<S>, b: &Instance<S>) -> S {
    debug_assert_eq!(a.values.len(), space.len());
    debug_assert_eq!(b.values.len(), space.len());
    let mut sum = S::zero();
    for (h, def) in space.features().iter().enumerate() {
        let delta = match (&def.kind, a.values[h], b.values[h]) {
            (FeatureKind::Numeric { min, max }, Value::Num(x), Value::Num(y)) => {
                (x - y).abs() / (*max - *min)
            }
            (FeatureKind::OrderedCategorical { levels }, Value::Level(x), Value::Level(y)) => {
                if levels.len() > 1 {
                    S::from_u32(x.abs_diff(y)).expect("level distance fits the scalar type")
                        / S::from_usize(levels.len() - 1).expect("level count fits the scalar type")
                } else {
                    S::zero()
                }
            }
            (FeatureKind::Categorical { .. }, Value::Level(x), Value::Level(y)) => {
                if x == y {
                    S::zero()
                } else {
                    S::one()
                }
            }
            // mixed value kinds cannot occur on validated instances
            _ => S::one(),
        };
        sum += delta;
    }
    sum / S::from_usize(space.len()).expect("feature count fits the scalar type")
}

/// Per-feature tweaking frequencies of a sequence: entry `h` counts the
/// actions whose affected set contains `h` — membership, not value change,
/// so even a clamped no-op write counts.
pub fn tweak_frequencies<S: Scalar>(
    space: &FeatureSpace<S>,
    catalog: &ActionCatalog<S>,
    seq: &Sequence<S>,
) -> Vec<u32> {
    let mut freqs = vec![0u32; space.len()];
    for step in seq.steps() {
        for &h in catalog.action(step.action).affected() {
            freqs[h] += 1;
        }
    }
    freqs
}

/// Problem bundle construction errors.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("start instance is invalid: {0}")]
    InvalidStart(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Evaluation errors (all propagate from the underlying modules).
#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Everything needed to evaluate a sequence: schema, catalog, cost model,
/// black-box classifier and the start instance. Immutable after
/// construction and safe to share across evaluation threads.
#[derive(Debug, Clone)]
pub struct Problem<S: Scalar> {
    pub space: FeatureSpace<S>,
    pub catalog: ActionCatalog<S>,
    pub cost: CostConfig<S>,
    pub model: ModelSpec<S>,
    pub x0: Instance<S>,
    encoding: Encoding<S>,
}

impl<S: Scalar> Problem<S> {
    pub fn new(
        space: FeatureSpace<S>,
        catalog: ActionCatalog<S>,
        cost: CostConfig<S>,
        model: ModelSpec<S>,
        x0: Instance<S>,
    ) -> Result<Self, ProblemError> {
        let report = validate_instance(&space, &x0);
        if let Some(v) = report.violations.first() {
            return Err(ProblemError::InvalidStart(v.reason.clone()));
        }
        model.validate()?;
        let encoding = Encoding::for_space(&space);
        if model.input_width() != encoding.width() {
            return Err(ProblemError::Classifier(ClassifierError::WidthMismatch {
                expected: encoding.width(),
                found: model.input_width(),
            }));
        }
        Ok(Self {
            space,
            catalog,
            cost,
            model,
            x0,
            encoding,
        })
    }

    pub fn encoding(&self) -> &Encoding<S> {
        &self.encoding
    }

    /// P(accept) for an arbitrary instance of this problem's space.
    pub fn accept_proba(&self, inst: &Instance<S>) -> Result<S, ClassifierError> {
        predict_accept_proba(&self.model, &encode(&self.space, &self.encoding, inst))
    }

    /// The same problem started from a different instance.
    pub fn with_start(&self, x0: Instance<S>) -> Result<Self, ProblemError> {
        let mut p = self.clone();
        let report = validate_instance(&p.space, &x0);
        if let Some(v) = report.violations.first() {
            return Err(ProblemError::InvalidStart(v.reason.clone()));
        }
        p.x0 = x0;
        Ok(p)
    }

    /// The same problem with consequential discounting switched off.
    pub fn without_discount(&self) -> Self {
        let mut p = self.clone();
        p.cost = p.cost.without_discount();
        p
    }
}

/// Evaluates a sequence against the problem: rollout, costing, distance,
/// frequencies, classifier verdict. Infeasible solutions still receive a
/// complete objective vector so the optimizer can rank them.
pub fn evaluate<S: Scalar>(
    problem: &Problem<S>,
    seq: &Sequence<S>,
) -> Result<EvaluatedSolution<S>, EvalError> {
    evaluate_with_genotype(problem, seq, None)
}

/// [`evaluate`], additionally recording the genotype the sequence was
/// decoded from.
pub fn evaluate_with_genotype<S: Scalar>(
    problem: &Problem<S>,
    seq: &Sequence<S>,
    genotype: Option<Vec<S>>,
) -> Result<EvaluatedSolution<S>, EvalError> {
    let r = rollout(&problem.space, &problem.x0, &problem.catalog, seq)?;
    let cost = sequence_cost(&problem.cost, &problem.catalog, &r, seq)?;
    let distance = gower(&problem.space, &problem.x0, r.final_state());
    let frequencies = tweak_frequencies(&problem.space, &problem.catalog, seq);
    let accept_proba = problem.accept_proba(r.final_state())?;

    let violation_count = r.violation_count + u32::from(seq.is_empty());
    let feasible = violation_count == 0 && accepts(accept_proba);

    Ok(EvaluatedSolution {
        genotype,
        phenotype: seq.clone(),
        objectives: ObjectiveVector {
            cost: cost.total,
            distance,
            frequencies,
        },
        rollout: r,
        cost,
        violation_count,
        accept_proba,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Step;
    use crate::demo;
    use crate::feature_space::FeatureDef;

    fn mixed_space() -> FeatureSpace<f64> {
        FeatureSpace::new(vec![
            FeatureDef {
                name: "Age".into(),
                kind: FeatureKind::Numeric { min: 0.0, max: 100.0 },
            },
            FeatureDef {
                name: "Loc".into(),
                kind: FeatureKind::Categorical {
                    levels: vec!["DE".into(), "US".into()],
                },
            },
        ])
        .unwrap()
    }

    #[test]
    fn gower_of_identical_instances_is_zero() {
        let space = mixed_space();
        let x = Instance::new(vec![Value::Num(33.0), Value::Level(1)]);
        assert_eq!(gower(&space, &x, &x), 0.0);
    }

    #[test]
    fn gower_hand_example() {
        let space = mixed_space();
        let a = Instance::new(vec![Value::Num(20.0), Value::Level(0)]);
        let b = Instance::new(vec![Value::Num(70.0), Value::Level(0)]);
        assert_eq!(gower(&space, &a, &b), 0.25); // (0.5 + 0) / 2
    }

    #[test]
    fn gower_of_fully_differing_categoricals_is_one() {
        let space: FeatureSpace<f64> = FeatureSpace::new(vec![
            FeatureDef {
                name: "a".into(),
                kind: FeatureKind::Categorical { levels: vec!["x".into(), "y".into()] },
            },
            FeatureDef {
                name: "b".into(),
                kind: FeatureKind::Categorical { levels: vec!["x".into(), "y".into()] },
            },
        ])
        .unwrap();
        let a = Instance::new(vec![Value::Level(0), Value::Level(0)]);
        let b = Instance::new(vec![Value::Level(1), Value::Level(1)]);
        assert_eq!(gower(&space, &a, &b), 1.0);
    }

    #[test]
    fn gower_ordered_levels_use_index_distance() {
        let space: FeatureSpace<f64> = FeatureSpace::new(vec![FeatureDef {
            name: "Edu".into(),
            kind: FeatureKind::OrderedCategorical {
                levels: vec!["HS".into(), "BSc".into(), "MSc".into()],
            },
        }])
        .unwrap();
        let hs = Instance::new(vec![Value::Level(0)]);
        let bsc = Instance::new(vec![Value::Level(1)]);
        let msc = Instance::new(vec![Value::Level(2)]);
        assert_eq!(gower(&space, &hs, &bsc), 0.5);
        assert_eq!(gower(&space, &hs, &msc), 1.0);
    }

    #[test]
    fn career_sequence_frequencies() {
        let p = demo::career_problem();
        let seq = demo::career_reference_sequence(&p);
        let freqs = tweak_frequencies(&p.space, &p.catalog, &seq);
        // (Age, Job, Edu, WorkHrs, Location): WorkHrs is affected twice
        assert_eq!(freqs, vec![1, 1, 1, 2, 1]);
        // conservation: sum of frequencies equals sum of affected-set sizes
        let total: u32 = seq
            .steps()
            .iter()
            .map(|s| p.catalog.action(s.action).affected().len() as u32)
            .sum();
        assert_eq!(freqs.iter().sum::<u32>(), total);
    }

    #[test]
    fn single_action_gives_a_unit_frequency_vector() {
        let p = demo::relocation_problem();
        let seq = Sequence::new(vec![Step {
            action: p.catalog.index_of("add-edu").unwrap(),
            value: Value::Level(1),
        }])
        .unwrap();
        let freqs = tweak_frequencies(&p.space, &p.catalog, &seq);
        assert_eq!(freqs, vec![0, 1, 0]);
    }

    #[test]
    fn relocation_full_sequence_is_feasible_at_cost_22_5() {
        let p = demo::relocation_problem();
        let seq = demo::relocation_sequence(&p, &["add-edu", "move", "switch-job"]);
        let sol = evaluate(&p, &seq).unwrap();
        assert!(sol.feasible);
        assert_eq!(sol.objectives.cost, 22.5);
        assert_eq!(sol.violation_count, 0);
        assert!(sol.accept_proba >= 0.5);
    }

    #[test]
    fn partial_sequence_is_rejected_by_the_classifier() {
        let p = demo::relocation_problem();
        let seq = demo::relocation_sequence(&p, &["add-edu"]);
        let sol = evaluate(&p, &seq).unwrap();
        assert!(!sol.feasible);
        assert_eq!(sol.violation_count, 0); // rollout fine, classifier says no
        assert!(sol.accept_proba < 0.5);
    }

    #[test]
    fn order_changes_cost_only() {
        let p = demo::relocation_problem();
        let s1 = demo::relocation_sequence(&p, &["move", "switch-job", "add-edu"]);
        let s2 = demo::relocation_sequence(&p, &["add-edu", "move", "switch-job"]);
        let e1 = evaluate(&p, &s1).unwrap();
        let e2 = evaluate(&p, &s2).unwrap();
        assert_eq!(e1.objectives.cost, 27.5);
        assert_eq!(e2.objectives.cost, 22.5);
        assert_eq!(e1.objectives.distance, e2.objectives.distance);
        assert_eq!(e1.objectives.frequencies, e2.objectives.frequencies);
        assert_eq!(e1.final_state(), e2.final_state());
    }

    #[test]
    fn empty_sequence_is_infeasible_with_one_synthetic_violation() {
        let p = demo::relocation_problem();
        let sol = evaluate(&p, &Sequence::empty()).unwrap();
        assert!(!sol.feasible);
        assert_eq!(sol.violation_count, 1);
        assert_eq!(sol.objectives.cost, 0.0);
        assert_eq!(sol.objectives.distance, 0.0);
    }

    #[test]
    fn objective_vector_components_line_up() {
        let v = ObjectiveVector::<f64> {
            cost: 3.5,
            distance: 0.25,
            frequencies: vec![1, 0, 2],
        };
        assert_eq!(v.len(), 5);
        assert_eq!(v.component(0), 3.5);
        assert_eq!(v.component(1), 0.25);
        assert_eq!(v.component(2), 1.0);
        assert_eq!(v.component(4), 2.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_instance() -> impl Strategy<Value = Instance<f64>> {
            (0.0f64..=100.0, 0u32..2, 0u32..4).prop_map(|(age, loc, edu)| {
                Instance::new(vec![Value::Num(age), Value::Level(loc), Value::Level(edu)])
            })
        }

        fn triple_space() -> FeatureSpace<f64> {
            FeatureSpace::new(vec![
                FeatureDef {
                    name: "Age".into(),
                    kind: FeatureKind::Numeric { min: 0.0, max: 100.0 },
                },
                FeatureDef {
                    name: "Loc".into(),
                    kind: FeatureKind::Categorical {
                        levels: vec!["DE".into(), "US".into()],
                    },
                },
                FeatureDef {
                    name: "Edu".into(),
                    kind: FeatureKind::OrderedCategorical {
                        levels: vec!["HS".into(), "BSc".into(), "MSc".into(), "PhD".into()],
                    },
                },
            ])
            .unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            /// Symmetry, identity, range and the triangle inequality.
            #[test]
            fn gower_is_a_bounded_metric(
                a in arb_instance(),
                b in arb_instance(),
                c in arb_instance(),
            ) {
                let space = triple_space();
                let ab = gower(&space, &a, &b);
                let ba = gower(&space, &b, &a);
                let ac = gower(&space, &a, &c);
                let cb = gower(&space, &c, &b);
                prop_assert_eq!(ab, ba);
                prop_assert_eq!(gower(&space, &a, &a), 0.0);
                prop_assert!((0.0..=1.0).contains(&ab));
                prop_assert!(ab <= ac + cb + 1e-12);
            }
        }
    }
}
