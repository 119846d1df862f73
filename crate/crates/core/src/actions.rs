//! The action catalog and sequence rollout.
//!
//! An [`Action`] changes one *direct* feature using a tweaking value and may
//! carry deterministic *indirect* effects on other features. Applying an
//! ordered [`Sequence`] of action–value pairs to a start instance produces a
//! [`Rollout`]: the full state trajectory `x_0, x_1, …, x_T` together with a
//! per-step record of constraint and admissibility checks. Rollouts are never
//! truncated on violation — the optimizer ranks infeasible sequences by their
//! violation count, so it needs the whole trajectory either way.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_space::{FeatureKind, FeatureSpace, Instance, Value};
use crate::scalar::Scalar;

/// How a single effect rule changes its target feature.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectKind<S> {
    /// Write the tweaking value `v` to the target. Only allowed as the
    /// direct rule: `v` is typed against the direct feature.
    SetToValue,
    /// Write a numeric constant.
    SetConstant(S),
    /// Add a numeric constant.
    AddConstant(S),
    /// Add `k · |Δ_direct|`, where `Δ_direct` is the absolute change the
    /// direct rule made (numeric units, or level steps when the direct
    /// feature is ordered-categorical).
    AddScaled(S),
    /// Write a fixed level (index into the target feature's level list).
    SetLevel(u32),
}

/// One effect: a target feature and the rule applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectRule<S> {
    pub target: usize,
    pub kind: EffectKind<S>,
}

/// Direction of a monotone value restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    IncreaseOnly,
    DecreaseOnly,
}

/// Describes the feasible value space 𝒱 of an action: which tweaking values
/// may be proposed, possibly relative to the current state.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueDescriptor<S> {
    /// Any numeric value in `[lo, hi]`.
    NumericRange { lo: S, hi: S },
    /// Numeric value in `[lo, hi]` that must strictly increase (or
    /// decrease) the current value.
    NumericMonotone { lo: S, hi: S, direction: Monotone },
    /// Explicit finite list of numeric values, strictly ascending. This is
    /// the grid form used by the brute-force oracle; the genetic decoder
    /// maps value keys onto the same grid so both search one space.
    NumericGrid(Vec<S>),
    /// Admissible level indices of the direct feature, in decode order.
    LevelSubset(Vec<u32>),
    /// Any level strictly above (or below) the current one, in the declared
    /// level order of the direct feature.
    MonotoneLevels { direction: Monotone },
}

impl<S: Scalar> ValueDescriptor<S> {
    /// Is `v` admissible relative to the `current` value of the direct
    /// feature? Type mismatches are simply inadmissible.
    pub fn admissible(&self, current: Value<S>, v: Value<S>) -> bool {
        match (self, current, v) {
            (ValueDescriptor::NumericRange { lo, hi }, _, Value::Num(x)) => *lo <= x && x <= *hi,
            (
                ValueDescriptor::NumericMonotone { lo, hi, direction },
                Value::Num(cur),
                Value::Num(x),
            ) => {
                let in_range = *lo <= x && x <= *hi;
                let moves = match direction {
                    Monotone::IncreaseOnly => x > cur,
                    Monotone::DecreaseOnly => x < cur,
                };
                in_range && moves
            }
            (ValueDescriptor::NumericGrid(grid), _, Value::Num(x)) => {
                grid.iter().any(|g| *g == x)
            }
            (ValueDescriptor::LevelSubset(levels), _, Value::Level(l)) => levels.contains(&l),
            (
                ValueDescriptor::MonotoneLevels { direction },
                Value::Level(cur),
                Value::Level(l),
            ) => match direction {
                Monotone::IncreaseOnly => l > cur,
                Monotone::DecreaseOnly => l < cur,
            },
            _ => false,
        }
    }

    /// Maps a random key in `[0, 1]` onto a concrete tweaking value.
    ///
    /// Ranges interpolate linearly (`lo + key·(hi − lo)`); list-like
    /// descriptors use uniform bins `min(⌊key·L⌋, L − 1)` over their decode
    /// list. The decode domain is state-independent; whether the decoded
    /// value is admissible *here and now* is checked during rollout.
    pub fn interpolate(&self, space: &FeatureSpace<S>, feature: usize, key: S) -> Value<S> {
        let bin = |len: usize| -> usize {
            let raw = (key.to_f64_lossy() * len as f64).floor() as usize;
            raw.min(len - 1)
        };
        match self {
            ValueDescriptor::NumericRange { lo, hi }
            | ValueDescriptor::NumericMonotone { lo, hi, .. } => {
                Value::Num(*lo + key * (*hi - *lo))
            }
            ValueDescriptor::NumericGrid(grid) => Value::Num(grid[bin(grid.len())]),
            ValueDescriptor::LevelSubset(levels) => Value::Level(levels[bin(levels.len())]),
            ValueDescriptor::MonotoneLevels { .. } => {
                let n = space.feature(feature).kind.levels().map_or(1, <[String]>::len);
                Value::Level(bin(n) as u32)
            }
        }
    }

    /// The finite list of decodable values, when one exists. Range
    /// descriptors are continuous and return `None`; the oracle refuses
    /// them. For `MonotoneLevels` this is every declared level — values
    /// inadmissible in a particular state are weeded out by the rollout.
    pub fn finite_values(&self, space: &FeatureSpace<S>, feature: usize) -> Option<Vec<Value<S>>> {
        match self {
            ValueDescriptor::NumericRange { .. } | ValueDescriptor::NumericMonotone { .. } => None,
            ValueDescriptor::NumericGrid(grid) => {
                Some(grid.iter().map(|g| Value::Num(*g)).collect())
            }
            ValueDescriptor::LevelSubset(levels) => {
                Some(levels.iter().map(|l| Value::Level(*l)).collect())
            }
            ValueDescriptor::MonotoneLevels { .. } => {
                let n = space.feature(feature).kind.levels().map_or(0, <[String]>::len);
                Some((0..n as u32).map(Value::Level).collect())
            }
        }
    }
}

/// When a constraint is checked: against the state before the action
/// (`x_{t−1}`) or after it (`x_t`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pre,
    Post,
}

/// Comparison operator of a constraint leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    fn eval<T: PartialOrd>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    fn is_ordered(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

/// A comparison operand: a feature of the checked state, the tweaking value
/// of the current step, or a constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Operand<S> {
    Feature(usize),
    TweakValue,
    Num(S),
    Level(u32),
}

/// Boolean predicate tree over comparisons.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate<S> {
    Cmp {
        lhs: Operand<S>,
        op: CmpOp,
        rhs: Operand<S>,
    },
    And(Vec<Predicate<S>>),
    Or(Vec<Predicate<S>>),
    Not(Box<Predicate<S>>),
}

impl<S: Scalar> Predicate<S> {
    /// Evaluates the predicate on `state`, with `v` standing in for the
    /// step's tweaking value. Side-effect-free.
    pub fn eval(&self, state: &Instance<S>, v: Value<S>) -> bool {
        match self {
            Predicate::Cmp { lhs, op, rhs } => {
                let a = resolve(lhs, state, v);
                let b = resolve(rhs, state, v);
                match (a, b) {
                    (Value::Num(x), Value::Num(y)) => op.eval(&x, &y),
                    (Value::Level(x), Value::Level(y)) => op.eval(&x, &y),
                    // Catalog validation rejects mixed-type comparisons;
                    // treat one anyway as simply unsatisfied.
                    _ => false,
                }
            }
            Predicate::And(ps) => ps.iter().all(|p| p.eval(state, v)),
            Predicate::Or(ps) => ps.iter().any(|p| p.eval(state, v)),
            Predicate::Not(p) => !p.eval(state, v),
        }
    }
}

fn resolve<S: Scalar>(operand: &Operand<S>, state: &Instance<S>, v: Value<S>) -> Value<S> {
    match operand {
        Operand::Feature(h) => state.values[*h],
        Operand::TweakValue => v,
        Operand::Num(c) => Value::Num(*c),
        Operand::Level(l) => Value::Level(*l),
    }
}

/// A pre- or post-requirement attached to an action.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub phase: Phase,
    pub predicate: Predicate<S>,
}

/// Catalog construction errors.
#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog must declare at least one action")]
    Empty,
    #[error("duplicate action id `{0}`")]
    DuplicateActionId(String),
    #[error("action `{id}`: {reason}")]
    Invalid { id: String, reason: String },
}

fn invalid(id: &str, reason: impl Into<String>) -> CatalogError {
    CatalogError::Invalid {
        id: id.to_owned(),
        reason: reason.into(),
    }
}

/// One action of the catalog 𝒜: direct effect, indirect effects, feasible
/// value space and constraints. Construction validates every cross-reference
/// against the feature space, so a built `Action` cannot point at a missing
/// feature or level.
#[derive(Debug, Clone, PartialEq)]
pub struct Action<S> {
    pub id: String,
    pub direct_feature: usize,
    pub direct_rule: EffectRule<S>,
    pub indirect_rules: Vec<EffectRule<S>>,
    pub value_space: ValueDescriptor<S>,
    pub constraints: Vec<Constraint<S>>,
    /// Affected feature set ℐ = {direct} ∪ indirect targets, sorted.
    affected: Vec<usize>,
}

impl<S: Scalar> Action<S> {
    pub fn new(
        space: &FeatureSpace<S>,
        id: impl Into<String>,
        direct_rule: EffectRule<S>,
        indirect_rules: Vec<EffectRule<S>>,
        value_space: ValueDescriptor<S>,
        constraints: Vec<Constraint<S>>,
    ) -> Result<Self, CatalogError> {
        let id = id.into();
        let direct_feature = direct_rule.target;
        if direct_feature >= space.len() {
            return Err(invalid(&id, format!("direct feature index {direct_feature} out of range")));
        }
        validate_rule(space, &id, &direct_rule, direct_feature, true)?;
        for rule in &indirect_rules {
            if rule.target == direct_feature {
                return Err(invalid(&id, "indirect rule targets the direct feature"));
            }
            validate_rule(space, &id, rule, direct_feature, false)?;
        }
        validate_descriptor(space, &id, direct_feature, &value_space)?;
        for c in &constraints {
            validate_predicate(space, &id, direct_feature, &c.predicate)?;
        }

        let mut affected: Vec<usize> = std::iter::once(direct_feature)
            .chain(indirect_rules.iter().map(|r| r.target))
            .collect();
        affected.sort_unstable();
        affected.dedup();

        Ok(Self {
            id,
            direct_feature,
            direct_rule,
            indirect_rules,
            value_space,
            constraints,
            affected,
        })
    }

    /// The affected feature set ℐ, sorted ascending.
    pub fn affected(&self) -> &[usize] {
        &self.affected
    }
}

fn validate_rule<S: Scalar>(
    space: &FeatureSpace<S>,
    id: &str,
    rule: &EffectRule<S>,
    direct_feature: usize,
    is_direct: bool,
) -> Result<(), CatalogError> {
    if rule.target >= space.len() {
        return Err(invalid(id, format!("rule target index {} out of range", rule.target)));
    }
    let target_kind = &space.feature(rule.target).kind;
    match &rule.kind {
        EffectKind::SetToValue => {
            if !is_direct {
                return Err(invalid(id, "set_to_value is only allowed as the direct rule"));
            }
        }
        EffectKind::SetConstant(c) | EffectKind::AddConstant(c) => {
            if !target_kind.is_numeric() {
                return Err(invalid(id, "numeric rule on a categorical feature"));
            }
            if !c.is_finite() {
                return Err(invalid(id, "rule constant must be finite"));
            }
        }
        EffectKind::AddScaled(k) => {
            if !target_kind.is_numeric() {
                return Err(invalid(id, "numeric rule on a categorical feature"));
            }
            if !k.is_finite() {
                return Err(invalid(id, "rule constant must be finite"));
            }
            let direct_kind = &space.feature(direct_feature).kind;
            if !direct_kind.is_numeric() && !direct_kind.is_ordered() {
                return Err(invalid(
                    id,
                    "add_scaled needs a numeric or ordered-categorical direct feature",
                ));
            }
        }
        EffectKind::SetLevel(l) => {
            let n = target_kind.levels().map_or(0, <[String]>::len);
            if target_kind.is_numeric() {
                return Err(invalid(id, "set_level on a numeric feature"));
            }
            if *l as usize >= n {
                return Err(invalid(id, format!("set_level index {l} out of range")));
            }
        }
    }
    Ok(())
}

fn validate_descriptor<S: Scalar>(
    space: &FeatureSpace<S>,
    id: &str,
    direct_feature: usize,
    descriptor: &ValueDescriptor<S>,
) -> Result<(), CatalogError> {
    let kind = &space.feature(direct_feature).kind;
    match descriptor {
        ValueDescriptor::NumericRange { lo, hi }
        | ValueDescriptor::NumericMonotone { lo, hi, .. } => {
            let (min, max) = space
                .numeric_bounds(direct_feature)
                .ok_or_else(|| invalid(id, "numeric value space on a categorical feature"))?;
            if !lo.is_finite() || !hi.is_finite() || lo > hi || *lo < min || *hi > max {
                return Err(invalid(id, "value range must lie within the feature bounds"));
            }
        }
        ValueDescriptor::NumericGrid(grid) => {
            let (min, max) = space
                .numeric_bounds(direct_feature)
                .ok_or_else(|| invalid(id, "numeric value space on a categorical feature"))?;
            if grid.is_empty() {
                return Err(invalid(id, "value grid must not be empty"));
            }
            if grid.iter().any(|g| !g.is_finite() || *g < min || *g > max) {
                return Err(invalid(id, "value grid entry outside the feature bounds"));
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(id, "value grid must be strictly ascending"));
            }
        }
        ValueDescriptor::LevelSubset(levels) => {
            let n = kind.levels().map_or(0, <[String]>::len);
            if kind.is_numeric() {
                return Err(invalid(id, "level value space on a numeric feature"));
            }
            if levels.is_empty() {
                return Err(invalid(id, "level subset must not be empty"));
            }
            if levels.iter().any(|l| *l as usize >= n) {
                return Err(invalid(id, "level subset entry out of range"));
            }
            let mut seen = levels.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != levels.len() {
                return Err(invalid(id, "level subset contains duplicates"));
            }
        }
        ValueDescriptor::MonotoneLevels { .. } => {
            if !kind.is_ordered() {
                return Err(invalid(
                    id,
                    "monotone levels need an ordered-categorical direct feature",
                ));
            }
        }
    }
    Ok(())
}

/// Static type of an operand during validation.
enum OperandType {
    Num,
    /// Level of a concrete feature.
    LevelOf(usize),
    /// Bare level constant, not yet tied to a feature.
    LevelConst(u32),
}

fn validate_predicate<S: Scalar>(
    space: &FeatureSpace<S>,
    id: &str,
    direct_feature: usize,
    predicate: &Predicate<S>,
) -> Result<(), CatalogError> {
    match predicate {
        Predicate::And(ps) | Predicate::Or(ps) => {
            for p in ps {
                validate_predicate(space, id, direct_feature, p)?;
            }
            Ok(())
        }
        Predicate::Not(p) => validate_predicate(space, id, direct_feature, p),
        Predicate::Cmp { lhs, op, rhs } => {
            let a = operand_type(space, id, direct_feature, lhs)?;
            let b = operand_type(space, id, direct_feature, rhs)?;
            let levels_of = |h: usize| space.feature(h).kind.levels().unwrap().len() as u32;
            match (a, b) {
                (OperandType::Num, OperandType::Num) => Ok(()),
                (OperandType::LevelOf(h), OperandType::LevelConst(l))
                | (OperandType::LevelConst(l), OperandType::LevelOf(h)) => {
                    if l >= levels_of(h) {
                        return Err(invalid(id, format!("constraint level {l} out of range")));
                    }
                    if op.is_ordered() && !space.feature(h).kind.is_ordered() {
                        return Err(invalid(
                            id,
                            "ordered comparison on an unordered categorical feature",
                        ));
                    }
                    Ok(())
                }
                (OperandType::LevelOf(h1), OperandType::LevelOf(h2)) => {
                    if h1 != h2 {
                        return Err(invalid(id, "cannot compare levels of different features"));
                    }
                    if op.is_ordered() && !space.feature(h1).kind.is_ordered() {
                        return Err(invalid(
                            id,
                            "ordered comparison on an unordered categorical feature",
                        ));
                    }
                    Ok(())
                }
                (OperandType::LevelConst(_), OperandType::LevelConst(_)) => {
                    Err(invalid(id, "constraint compares two level constants"))
                }
                _ => Err(invalid(id, "constraint compares a number with a level")),
            }
        }
    }
}

fn operand_type<S: Scalar>(
    space: &FeatureSpace<S>,
    id: &str,
    direct_feature: usize,
    operand: &Operand<S>,
) -> Result<OperandType, CatalogError> {
    match operand {
        Operand::Feature(h) => {
            if *h >= space.len() {
                return Err(invalid(id, format!("constraint feature index {h} out of range")));
            }
            Ok(if space.feature(*h).kind.is_numeric() {
                OperandType::Num
            } else {
                OperandType::LevelOf(*h)
            })
        }
        Operand::TweakValue => Ok(if space.feature(direct_feature).kind.is_numeric() {
            OperandType::Num
        } else {
            OperandType::LevelOf(direct_feature)
        }),
        Operand::Num(c) => {
            if !c.is_finite() {
                return Err(invalid(id, "constraint constant must be finite"));
            }
            Ok(OperandType::Num)
        }
        Operand::Level(l) => Ok(OperandType::LevelConst(*l)),
    }
}

/// The validated action catalog 𝒜. Index positions are stable and used as
/// compact action handles throughout the engine; ids reappear at the I/O
/// boundaries.
#[derive(Debug, Clone)]
pub struct ActionCatalog<S> {
    actions: Vec<Action<S>>,
}

impl<S: Scalar> ActionCatalog<S> {
    pub fn new(actions: Vec<Action<S>>) -> Result<Self, CatalogError> {
        if actions.is_empty() {
            return Err(CatalogError::Empty);
        }
        for (i, a) in actions.iter().enumerate() {
            if actions[..i].iter().any(|b| b.id == a.id) {
                return Err(CatalogError::DuplicateActionId(a.id.clone()));
            }
        }
        Ok(Self { actions })
    }

    /// Number of actions `N`.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees N >= 1
    }

    pub fn actions(&self) -> &[Action<S>] {
        &self.actions
    }

    pub fn action(&self, index: usize) -> &Action<S> {
        &self.actions[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.id == id)
    }
}

/// One step of a sequence: which action, with which tweaking value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<S> {
    pub action: usize,
    pub value: Value<S>,
}

/// An ordered sequence of action–value pairs. Each action may appear at
/// most once (the genotype encodes one slot per action). The empty sequence
/// is representable — the decoder can produce it — but it is never feasible:
/// feasibility requires `T ≥ 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequence<S> {
    steps: Vec<Step<S>>,
}

impl<S: Scalar> Sequence<S> {
    pub fn new(steps: Vec<Step<S>>) -> Result<Self, ActionError> {
        for (i, s) in steps.iter().enumerate() {
            if steps[..i].iter().any(|t| t.action == s.action) {
                return Err(ActionError::DuplicateAction(s.action));
            }
        }
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    /// Sequence length `T`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step<S>] {
        &self.steps
    }
}

/// Errors from applying actions or building sequences.
#[derive(Debug, Error)]
pub enum ActionError {
    #[error("sequence uses action index {0} twice")]
    DuplicateAction(usize),
    #[error("sequence refers to unknown action index {0}")]
    UnknownAction(usize),
    #[error("action `{id}`: tweaking value type does not match feature `{feature}`")]
    TypeMismatch { id: String, feature: String },
    #[error("action `{id}`: level {level} does not exist for feature `{feature}`")]
    BadLevel {
        id: String,
        feature: String,
        level: u32,
    },
}

/// Validity record for a single rollout step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepReport {
    /// Was the tweaking value admissible under 𝒱 relative to `x_{t−1}`?
    pub admissible: bool,
    pub failed_pre: u32,
    pub failed_post: u32,
}

impl StepReport {
    pub fn violations(&self) -> u32 {
        u32::from(!self.admissible) + self.failed_pre + self.failed_post
    }
}

/// The trajectory produced by applying a sequence to a start instance,
/// with per-step validity checks. `states[0]` is the start instance and
/// `states[t]` the result of step `t`, so `states.len() == T + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<S> {
    pub states: Vec<Instance<S>>,
    pub steps: Vec<StepReport>,
    pub violation_count: u32,
}

impl<S: Scalar> Rollout<S> {
    pub fn overall_valid(&self) -> bool {
        self.violation_count == 0
    }

    /// The final state `x_T` (the counterfactual candidate).
    pub fn final_state(&self) -> &Instance<S> {
        self.states.last().expect("rollout always holds x_0")
    }
}

/// Applies one action to `state`: the direct rule with tweaking value `v`,
/// then each indirect rule in declaration order. Numeric results are clamped
/// to the feature's schema bounds, so a valid input instance always yields a
/// valid output instance. The input is not modified.
pub fn apply_action<S: Scalar>(
    space: &FeatureSpace<S>,
    state: &Instance<S>,
    action: &Action<S>,
    v: Value<S>,
) -> Result<Instance<S>, ActionError> {
    let h = action.direct_feature;
    let before = state.values[h];
    let mut next = state.clone();
    apply_rule(space, &mut next, action, &action.direct_rule, v, S::zero())?;
    let delta = direct_delta(space, h, before, next.values[h]);
    for rule in &action.indirect_rules {
        apply_rule(space, &mut next, action, rule, v, delta)?;
    }
    Ok(next)
}

/// Absolute direct change: numeric units, or level steps for ordered
/// categoricals (level index distance).
fn direct_delta<S: Scalar>(
    space: &FeatureSpace<S>,
    feature: usize,
    before: Value<S>,
    after: Value<S>,
) -> S {
    match (&space.feature(feature).kind, before, after) {
        (FeatureKind::Numeric { .. }, Value::Num(a), Value::Num(b)) => (b - a).abs(),
        (_, Value::Level(a), Value::Level(b)) => {
            S::from_u32(a.abs_diff(b)).expect("level distance fits the scalar type")
        }
        _ => S::zero(),
    }
}

fn apply_rule<S: Scalar>(
    space: &FeatureSpace<S>,
    state: &mut Instance<S>,
    action: &Action<S>,
    rule: &EffectRule<S>,
    v: Value<S>,
    direct_delta: S,
) -> Result<(), ActionError> {
    let target = rule.target;
    let kind = &space.feature(target).kind;
    let mismatch = || ActionError::TypeMismatch {
        id: action.id.clone(),
        feature: space.feature(target).name.clone(),
    };
    match &rule.kind {
        EffectKind::SetToValue => match (kind, v) {
            (FeatureKind::Numeric { min, max }, Value::Num(x)) => {
                state.values[target] = Value::Num(clamp(x, *min, *max));
            }
            (k, Value::Level(l)) if !k.is_numeric() => {
                let n = k.levels().map_or(0, <[String]>::len);
                if l as usize >= n {
                    return Err(ActionError::BadLevel {
                        id: action.id.clone(),
                        feature: space.feature(target).name.clone(),
                        level: l,
                    });
                }
                state.values[target] = Value::Level(l);
            }
            _ => return Err(mismatch()),
        },
        EffectKind::SetConstant(c) => {
            let (min, max) = space.numeric_bounds(target).ok_or_else(mismatch)?;
            state.values[target] = Value::Num(clamp(*c, min, max));
        }
        EffectKind::AddConstant(c) => {
            let (min, max) = space.numeric_bounds(target).ok_or_else(mismatch)?;
            let cur = state.values[target].as_num().ok_or_else(mismatch)?;
            state.values[target] = Value::Num(clamp(cur + *c, min, max));
        }
        EffectKind::AddScaled(k) => {
            let (min, max) = space.numeric_bounds(target).ok_or_else(mismatch)?;
            let cur = state.values[target].as_num().ok_or_else(mismatch)?;
            state.values[target] = Value::Num(clamp(cur + *k * direct_delta, min, max));
        }
        EffectKind::SetLevel(l) => {
            state.values[target] = Value::Level(*l);
        }
    }
    Ok(())
}

fn clamp<S: Scalar>(v: S, min: S, max: S) -> S {
    if v < min {
        min
    } else if v > max {
        max
    } else {
        v
    }
}

/// Rolls a sequence out from `x0`, checking value admissibility and pre
/// constraints on `x_{t−1}` and post constraints on `x_t` at every step.
/// Every failed check counts as one violation; the trajectory is always
/// completed so infeasible sequences can still be ranked by how badly they
/// fail.
pub fn rollout<S: Scalar>(
    space: &FeatureSpace<S>,
    x0: &Instance<S>,
    catalog: &ActionCatalog<S>,
    seq: &Sequence<S>,
) -> Result<Rollout<S>, ActionError> {
    let mut states = Vec::with_capacity(seq.len() + 1);
    states.push(x0.clone());
    let mut steps = Vec::with_capacity(seq.len());
    let mut violation_count = 0u32;

    for step in seq.steps() {
        let action = catalog
            .actions()
            .get(step.action)
            .ok_or(ActionError::UnknownAction(step.action))?;
        let prev = states.last().expect("states never empty");

        let current = prev.values[action.direct_feature];
        let admissible = action.value_space.admissible(current, step.value);
        let failed_pre = count_failed(action, Phase::Pre, prev, step.value);

        let next = apply_action(space, prev, action, step.value)?;
        let failed_post = count_failed(action, Phase::Post, &next, step.value);

        let report = StepReport {
            admissible,
            failed_pre,
            failed_post,
        };
        violation_count += report.violations();
        steps.push(report);
        states.push(next);
    }

    Ok(Rollout {
        states,
        steps,
        violation_count,
    })
}

fn count_failed<S: Scalar>(
    action: &Action<S>,
    phase: Phase,
    state: &Instance<S>,
    v: Value<S>,
) -> u32 {
    action
        .constraints
        .iter()
        .filter(|c| c.phase == phase && !c.predicate.eval(state, v))
        .count() as u32
}
