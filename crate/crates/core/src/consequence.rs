//! The consequence-aware cost model.
//!
//! Each action has a base *effort* `b_i`. A directed [`ConsequenceGraph`]
//! over features carries τ functions that map the current state to a factor
//! in `[0, 1]`; from these, an action applied in state `x_{t−1}` receives a
//! *consequential discount* `g_i ∈ [0, 1]`, and its cost is `c_i = b_i · g_i`.
//! The sequence cost is the sum of step costs — which is exactly where the
//! order of a sequence starts to matter: earlier actions can move the state
//! into regions where later actions are cheaper.
//!
//! Discounts never inflate: `g_i ≤ 1`, so `c_i ≤ b_i` always. With
//! discounting disabled every `g_i` is 1 and the cost degenerates to the
//! order-independent sum of efforts.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::actions::{ActionCatalog, CmpOp, Rollout, Sequence};
use crate::feature_space::{FeatureSpace, Instance, Value};
use crate::scalar::Scalar;

/// Action effort `b_i ≥ 0`: the direct cost of applying an action, measured
/// on the change of the direct feature.
#[derive(Debug, Clone, PartialEq)]
pub enum EffortFn<S> {
    /// Fixed cost, regardless of the change.
    Constant(S),
    /// `rate · |Δ|`, where Δ is measured in numeric units, or in level
    /// steps when the direct feature is ordered-categorical.
    PerUnit(S),
    /// Explicit cost per (from-level, to-level) pair. Missing pairs are a
    /// hard error so silent zero-costs cannot slip in.
    Table(BTreeMap<(u32, u32), S>),
}

/// A τ function: maps the current value of its source feature to a factor
/// in `[0, 1]` (1 = no consequence, 0 = full discount).
#[derive(Debug, Clone, PartialEq)]
pub enum TauFn<S> {
    /// Per-level factor with a default for unlisted levels.
    LevelMap { map: BTreeMap<u32, S>, default: S },
    /// `if value ⋈ threshold then if_true else if_false`, with ⋈ one of
    /// `<, ≤, ≥, >`. Works on numeric and ordered-categorical sources.
    ThresholdStep {
        op: CmpOp,
        threshold: Value<S>,
        if_true: S,
        if_false: S,
    },
}

impl<S: Scalar> TauFn<S> {
    /// Evaluates the factor for the current value of `source` in `state`.
    fn eval(&self, state: &Instance<S>, source: usize) -> S {
        match (self, state.values[source]) {
            (TauFn::LevelMap { map, default }, Value::Level(l)) => {
                map.get(&l).copied().unwrap_or(*default)
            }
            (
                TauFn::ThresholdStep { op, threshold, if_true, if_false },
                value,
            ) => {
                let holds = match (value, threshold) {
                    (Value::Num(x), Value::Num(t)) => op_eval(*op, &x, t),
                    (Value::Level(l), Value::Level(t)) => op_eval(*op, &l, t),
                    _ => false, // construction rules this out
                };
                if holds {
                    *if_true
                } else {
                    *if_false
                }
            }
            // level map on a numeric value: ruled out at construction
            (TauFn::LevelMap { default, .. }, Value::Num(_)) => *default,
        }
    }
}

fn op_eval<T: PartialOrd>(op: CmpOp, a: &T, b: &T) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Ge => a >= b,
        CmpOp::Gt => a > b,
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
    }
}

/// One consequence edge: applying changes to `target` is discounted by
/// `tau(state[source])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<S> {
    pub source: usize,
    pub target: usize,
    pub tau: TauFn<S>,
}

/// Graph construction errors.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph node index {0} out of range")]
    BadNode(usize),
    #[error("self-loop on feature index {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0} -> {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0} -> {1}) endpoints must be graph nodes")]
    EdgeOutsideNodes(usize, usize),
    #[error("edge ({0} -> {1}): {2}")]
    BadTau(usize, usize, String),
}

/// The feature-relationship graph 𝒢 = (X, E): nodes are a subset of feature
/// indices, edges carry τ functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsequenceGraph<S> {
    nodes: BTreeSet<usize>,
    edges: Vec<Edge<S>>,
}

impl<S: Scalar> ConsequenceGraph<S> {
    pub fn new(
        space: &FeatureSpace<S>,
        nodes: impl IntoIterator<Item = usize>,
        edges: Vec<Edge<S>>,
    ) -> Result<Self, GraphError> {
        let nodes: BTreeSet<usize> = nodes.into_iter().collect();
        for &n in &nodes {
            if n >= space.len() {
                return Err(GraphError::BadNode(n));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if e.source == e.target {
                return Err(GraphError::SelfLoop(e.source));
            }
            if !nodes.contains(&e.source) || !nodes.contains(&e.target) {
                return Err(GraphError::EdgeOutsideNodes(e.source, e.target));
            }
            if edges[..i].iter().any(|d| d.source == e.source && d.target == e.target) {
                return Err(GraphError::DuplicateEdge(e.source, e.target));
            }
            validate_tau(space, e).map_err(|r| GraphError::BadTau(e.source, e.target, r))?;
        }
        Ok(Self { nodes, edges })
    }

    pub fn is_node(&self, h: usize) -> bool {
        self.nodes.contains(&h)
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().copied()
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    fn incoming(&self, h: usize) -> impl Iterator<Item = &Edge<S>> {
        self.edges.iter().filter(move |e| e.target == h)
    }
}

fn validate_tau<S: Scalar>(space: &FeatureSpace<S>, edge: &Edge<S>) -> Result<(), String> {
    let in_unit = |v: S| v.is_finite() && v >= S::zero() && v <= S::one();
    let source_kind = &space.feature(edge.source).kind;
    match &edge.tau {
        TauFn::LevelMap { map, default } => {
            let levels = source_kind
                .levels()
                .ok_or("level map on a numeric source feature")?;
            if !in_unit(*default) || map.values().any(|v| !in_unit(*v)) {
                return Err("tau values must lie in [0, 1]".into());
            }
            if map.keys().any(|l| *l as usize >= levels.len()) {
                return Err("level map key out of range".into());
            }
            Ok(())
        }
        TauFn::ThresholdStep { op, threshold, if_true, if_false } => {
            if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                return Err("threshold step requires an ordered comparison".into());
            }
            if !in_unit(*if_true) || !in_unit(*if_false) {
                return Err("tau values must lie in [0, 1]".into());
            }
            match (source_kind.is_numeric(), source_kind.is_ordered(), threshold) {
                (true, _, Value::Num(t)) if t.is_finite() => Ok(()),
                (false, true, Value::Level(l)) => {
                    let n = source_kind.levels().map_or(0, <[String]>::len);
                    if *l as usize >= n {
                        Err("threshold level out of range".into())
                    } else {
                        Ok(())
                    }
                }
                (false, false, _) => {
                    Err("threshold step needs a numeric or ordered source feature".into())
                }
                _ => Err("threshold type does not match the source feature".into()),
            }
        }
    }
}

/// Per-feature discount ĝ_h: the mean of τ over all incoming edges of `h`,
/// or 1 when `h` has no incoming edges (or is not a graph node at all).
pub fn feature_discount<S: Scalar>(
    graph: &ConsequenceGraph<S>,
    state: &Instance<S>,
    h: usize,
) -> S {
    if !graph.is_node(h) {
        return S::one();
    }
    let mut sum = S::zero();
    let mut count = 0usize;
    for edge in graph.incoming(h) {
        sum += edge.tau.eval(state, edge.source);
        count += 1;
    }
    if count == 0 {
        S::one()
    } else {
        sum / S::from_usize(count).expect("edge count fits the scalar type")
    }
}

/// Action discount g_i: the mean of ĝ_h over the affected features that are
/// graph nodes, or 1 when none of them is.
pub fn action_discount<S: Scalar>(
    graph: &ConsequenceGraph<S>,
    state: &Instance<S>,
    affected: &[usize],
) -> S {
    let mut sum = S::zero();
    let mut count = 0usize;
    for &h in affected.iter().filter(|h| graph.is_node(**h)) {
        sum += feature_discount(graph, state, h);
        count += 1;
    }
    if count == 0 {
        S::one()
    } else {
        sum / S::from_usize(count).expect("node count fits the scalar type")
    }
}

/// Cost evaluation errors.
#[derive(Debug, Error)]
pub enum CostError {
    #[error("no effort table entry for level pair ({from} -> {to})")]
    MissingTableEntry { from: u32, to: u32 },
    #[error("effort function cannot read the direct feature: {0}")]
    BadEffortInput(String),
}

/// Evaluates an effort function on one applied step.
pub fn effort<S: Scalar>(
    effort_fn: &EffortFn<S>,
    before: &Instance<S>,
    after: &Instance<S>,
    direct_feature: usize,
) -> Result<S, CostError> {
    match effort_fn {
        EffortFn::Constant(c) => Ok(*c),
        EffortFn::PerUnit(rate) => match (before.values[direct_feature], after.values[direct_feature]) {
            (Value::Num(a), Value::Num(b)) => Ok(*rate * (b - a).abs()),
            (Value::Level(a), Value::Level(b)) => Ok(*rate
                * S::from_u32(a.abs_diff(b)).expect("level distance fits the scalar type")),
            _ => Err(CostError::BadEffortInput(
                "state changed the feature's value kind".into(),
            )),
        },
        EffortFn::Table(table) => match (before.values[direct_feature], after.values[direct_feature]) {
            (Value::Level(a), Value::Level(b)) => table
                .get(&(a, b))
                .copied()
                .ok_or(CostError::MissingTableEntry { from: a, to: b }),
            _ => Err(CostError::BadEffortInput(
                "effort table on a non-categorical feature".into(),
            )),
        },
    }
}

/// Cost configuration errors.
#[derive(Debug, Error)]
pub enum CostConfigError {
    #[error("no effort declared for action `{0}`")]
    MissingEffort(String),
    #[error("effort declared for unknown action `{0}`")]
    UnknownAction(String),
    #[error("action `{id}`: {reason}")]
    BadEffort { id: String, reason: String },
}

/// Everything needed to cost a rollout: per-action efforts, the optional
/// consequence graph, and the discount switch. With `discount_enabled` off
/// (or no graph), costs reduce to plain efforts.
#[derive(Debug, Clone)]
pub struct CostConfig<S> {
    /// Positionally aligned with the catalog.
    efforts: Vec<EffortFn<S>>,
    pub graph: Option<ConsequenceGraph<S>>,
    pub discount_enabled: bool,
}

impl<S: Scalar> CostConfig<S> {
    pub fn new(
        space: &FeatureSpace<S>,
        catalog: &ActionCatalog<S>,
        mut efforts: BTreeMap<String, EffortFn<S>>,
        graph: Option<ConsequenceGraph<S>>,
        discount_enabled: bool,
    ) -> Result<Self, CostConfigError> {
        let mut ordered = Vec::with_capacity(catalog.len());
        for action in catalog.actions() {
            let effort_fn = efforts
                .remove(&action.id)
                .ok_or_else(|| CostConfigError::MissingEffort(action.id.clone()))?;
            validate_effort(space, catalog, &action.id, &effort_fn).map_err(|reason| {
                CostConfigError::BadEffort {
                    id: action.id.clone(),
                    reason,
                }
            })?;
            ordered.push(effort_fn);
        }
        if let Some(id) = efforts.into_keys().next() {
            return Err(CostConfigError::UnknownAction(id));
        }
        Ok(Self {
            efforts: ordered,
            graph,
            discount_enabled,
        })
    }

    pub fn effort_fn(&self, action: usize) -> &EffortFn<S> {
        &self.efforts[action]
    }

    /// Discounting takes effect only when enabled *and* a graph is present.
    pub fn discount_active(&self) -> bool {
        self.discount_enabled && self.graph.is_some()
    }

    /// The same configuration with discounting switched off — the baseline
    /// cost model `c_i = b_i`.
    pub fn without_discount(&self) -> Self {
        Self {
            efforts: self.efforts.clone(),
            graph: self.graph.clone(),
            discount_enabled: false,
        }
    }
}

fn validate_effort<S: Scalar>(
    space: &FeatureSpace<S>,
    catalog: &ActionCatalog<S>,
    id: &str,
    effort_fn: &EffortFn<S>,
) -> Result<(), String> {
    let direct = catalog
        .action(catalog.index_of(id).expect("caller resolved the id"))
        .direct_feature;
    let kind = &space.feature(direct).kind;
    let nonneg = |v: S| v.is_finite() && v >= S::zero();
    match effort_fn {
        EffortFn::Constant(c) => {
            if !nonneg(*c) {
                return Err("constant effort must be finite and >= 0".into());
            }
        }
        EffortFn::PerUnit(rate) => {
            if !nonneg(*rate) {
                return Err("per-unit rate must be finite and >= 0".into());
            }
            if !kind.is_numeric() && !kind.is_ordered() {
                return Err("per-unit effort needs a numeric or ordered direct feature".into());
            }
        }
        EffortFn::Table(table) => {
            let levels = kind
                .levels()
                .ok_or("effort table needs a categorical direct feature")?;
            if table.is_empty() {
                return Err("effort table must not be empty".into());
            }
            for (&(from, to), v) in table {
                if from as usize >= levels.len() || to as usize >= levels.len() {
                    return Err(format!("table pair ({from} -> {to}) out of range"));
                }
                if !nonneg(*v) {
                    return Err("table costs must be finite and >= 0".into());
                }
            }
        }
    }
    Ok(())
}

/// Per-step cost record of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown<S> {
    /// The sequence cost C_S = Σ c_i.
    pub total: S,
    /// Base efforts b_i per step.
    pub efforts: Vec<S>,
    /// Discounts g_i per step (all 1 when discounting is inactive).
    pub discounts: Vec<S>,
    /// Discounted costs c_i = b_i · g_i per step.
    pub costs: Vec<S>,
}

impl<S: Scalar> CostBreakdown<S> {
    /// Σ b_i — what the sequence would cost with discounting disabled.
    pub fn undiscounted_total(&self) -> S {
        let mut sum = S::zero();
        for b in &self.efforts {
            sum += *b;
        }
        sum
    }
}

/// Costs a rolled-out sequence. The discount of step `t` is evaluated on
/// `x_{t−1}` — the state *before* the action applies — and the effort on the
/// `(x_{t−1}, x_t)` pair.
pub fn sequence_cost<S: Scalar>(
    config: &CostConfig<S>,
    catalog: &ActionCatalog<S>,
    rollout: &Rollout<S>,
    seq: &Sequence<S>,
) -> Result<CostBreakdown<S>, CostError> {
    assert_eq!(
        rollout.states.len(),
        seq.len() + 1,
        "rollout does not belong to this sequence"
    );
    let mut efforts = Vec::with_capacity(seq.len());
    let mut discounts = Vec::with_capacity(seq.len());
    let mut costs = Vec::with_capacity(seq.len());
    let mut total = S::zero();
    for (t, step) in seq.steps().iter().enumerate() {
        let action = catalog.action(step.action);
        let before = &rollout.states[t];
        let after = &rollout.states[t + 1];
        let b = effort(config.effort_fn(step.action), before, after, action.direct_feature)?;
        let g = match (&config.graph, config.discount_enabled) {
            (Some(graph), true) => action_discount(graph, before, action.affected()),
            _ => S::one(),
        };
        let c = b * g;
        total += c;
        efforts.push(b);
        discounts.push(g);
        costs.push(c);
    }
    Ok(CostBreakdown {
        total,
        efforts,
        discounts,
        costs,
    })
}
