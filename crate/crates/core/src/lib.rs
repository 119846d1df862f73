//! Consequence-aware sequential counterfactual search.
//!
//! Given an instance a black-box classifier rejects, this crate finds
//! Pareto-optimal *ordered sequences* of feature-changing actions that flip
//! the decision. Actions have side effects, state-dependent admissible
//! values and pre/post constraints, and their costs are discounted by a
//! consequence graph — so the order of otherwise identical actions changes
//! what the plan costs.
//!
//! The pipeline: [`feature_space`] describes instances, [`actions`] rolls
//! sequences out, [`consequence`] prices them, [`classifier`] judges the
//! reached state, [`objectives`] bundles everything into an evaluation,
//! [`brkga`] searches the sequence space with a biased random-key genetic
//! algorithm, and [`oracle`] exhaustively enumerates small problems to
//! validate the search. [`demo`] ships two small worked problems used
//! throughout the tests.
//!
//! Everything is generic over the float width via [`Scalar`]; [`Real`] is
//! the `f64` default used by the command-line tools.

pub mod actions;
pub mod brkga;
pub mod classifier;
pub mod consequence;
pub mod demo;
pub mod feature_space;
pub mod objectives;
pub mod oracle;
pub mod scalar;
pub mod synth;

pub use actions::{Action, ActionCatalog, Rollout, Sequence, Step, ValueDescriptor};
pub use brkga::{evolve, BrkgaOutcome, BrkgaParams, Genotype};
pub use classifier::{accepts, ModelSpec};
pub use consequence::{ConsequenceGraph, CostConfig, EffortFn};
pub use feature_space::{FeatureDef, FeatureKind, FeatureSpace, Instance, Value};
pub use objectives::{evaluate, EvaluatedSolution, ObjectiveVector, Problem};
pub use oracle::{enumerate_front, OracleConfig, OracleFront};
pub use scalar::Scalar;

/// Default scalar type used by the CLI and most tests.
pub type Real = f64;
