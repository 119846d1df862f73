//! The black-box classifier runtime.
//!
//! The engine only ever calls [`predict_accept_proba`] — it never inspects
//! model internals, preserving the black-box contract. The runtime itself is
//! deliberately small: instances are encoded by min-max scaling numerics and
//! one-hot encoding categoricals (both fixed by the *schema*, not by data,
//! because rollout states may leave the data distribution and must still
//! encode), and models are either a linear logit or a small feed-forward
//! stack ending in one logit. [`fit_logistic`] provides a deterministic
//! desk-scale trainer so the repository is self-contained.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feature_space::{FeatureKind, FeatureSpace, Instance, Value};
use crate::scalar::Scalar;

/// Version tag of the model file format.
pub const MODEL_SCHEMA: &str = "cscf.model.v1";

/// Decision rule: accept iff P(accept) ≥ 0.5. The boundary case counts as
/// accept so the rule is deterministic.
pub fn accepts<S: Scalar>(proba: S) -> bool {
    proba >= S::from_f64_lossy(0.5)
}

/// How one feature maps into the encoded vector.
#[derive(Debug, Clone, PartialEq)]
enum EncBlock<S> {
    /// `(v − min) / (max − min)`, clamped into `[0, 1]`.
    Scaled { min: S, max: S },
    /// One-hot block over the declared levels.
    OneHot { len: usize },
}

/// Schema-derived instance encoding: numeric features min-max scaled,
/// categorical features one-hot, concatenated in feature order.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding<S> {
    blocks: Vec<EncBlock<S>>,
    width: usize,
}

impl<S: Scalar> Encoding<S> {
    pub fn for_space(space: &FeatureSpace<S>) -> Self {
        let mut blocks = Vec::with_capacity(space.len());
        let mut width = 0;
        for def in space.features() {
            let block = match &def.kind {
                FeatureKind::Numeric { min, max } => EncBlock::Scaled { min: *min, max: *max },
                kind => EncBlock::OneHot {
                    len: kind.levels().map_or(0, <[String]>::len),
                },
            };
            width += match &block {
                EncBlock::Scaled { .. } => 1,
                EncBlock::OneHot { len } => *len,
            };
            blocks.push(block);
        }
        Self { blocks, width }
    }

    /// Total encoded width `m`.
    pub fn width(&self) -> usize {
        self.width
    }
}

/// Encodes an instance into a dense vector of width `enc.width()`.
pub fn encode<S: Scalar>(
    space: &FeatureSpace<S>,
    enc: &Encoding<S>,
    inst: &Instance<S>,
) -> Vec<S> {
    debug_assert_eq!(inst.values.len(), space.len());
    let mut out = Vec::with_capacity(enc.width);
    for (block, value) in enc.blocks.iter().zip(&inst.values) {
        match (block, value) {
            (EncBlock::Scaled { min, max }, Value::Num(v)) => {
                let scaled = (*v - *min) / (*max - *min);
                out.push(scaled.max(S::zero()).min(S::one()));
            }
            (EncBlock::OneHot { len }, Value::Level(l)) => {
                for i in 0..*len {
                    out.push(if i as u32 == *l { S::one() } else { S::zero() });
                }
            }
            // validated instances cannot hit these arms; encode defensively
            (EncBlock::Scaled { .. }, Value::Level(_)) => out.push(S::zero()),
            (EncBlock::OneHot { len }, Value::Num(_)) => {
                out.extend(std::iter::repeat(S::zero()).take(*len));
            }
        }
    }
    out
}

/// Activation function of an MLP layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Relu => z.max(S::zero()),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }
}

/// One dense layer: `y = act(W·x + b)` with `W` given row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<S> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<S>,
    pub bias: Vec<S>,
    pub activation: Activation,
}

/// A loaded model: a linear logit or a small feed-forward network whose
/// final width-1 output is the logit. `predict` maps it through a sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec<S> {
    Linear { weights: Vec<S>, bias: S },
    Mlp { layers: Vec<Layer<S>> },
}

impl<S: Scalar> ModelSpec<S> {
    /// Input width the model expects.
    pub fn input_width(&self) -> usize {
        match self {
            ModelSpec::Linear { weights, .. } => weights.len(),
            ModelSpec::Mlp { layers } => layers.first().map_or(0, |l| l.cols),
        }
    }

    /// Checks internal dimension consistency (layer chaining, final width 1).
    pub fn validate(&self) -> Result<(), ClassifierError> {
        match self {
            ModelSpec::Linear { weights, bias } => {
                if weights.is_empty() {
                    return Err(ClassifierError::BadDimensions {
                        layer: 0,
                        reason: "linear model needs at least one weight".into(),
                    });
                }
                if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
                    return Err(ClassifierError::BadDimensions {
                        layer: 0,
                        reason: "weights must be finite".into(),
                    });
                }
                Ok(())
            }
            ModelSpec::Mlp { layers } => {
                if layers.is_empty() {
                    return Err(ClassifierError::BadDimensions {
                        layer: 0,
                        reason: "mlp needs at least one layer".into(),
                    });
                }
                let mut width = layers[0].cols;
                for (i, layer) in layers.iter().enumerate() {
                    if layer.cols != width {
                        return Err(ClassifierError::BadDimensions {
                            layer: i,
                            reason: format!(
                                "layer expects {} inputs but receives {width}",
                                layer.cols
                            ),
                        });
                    }
                    if layer.weights.len() != layer.rows * layer.cols
                        || layer.bias.len() != layer.rows
                    {
                        return Err(ClassifierError::BadDimensions {
                            layer: i,
                            reason: "weight or bias length does not match rows x cols".into(),
                        });
                    }
                    if layer.weights.iter().chain(&layer.bias).any(|w| !w.is_finite()) {
                        return Err(ClassifierError::BadDimensions {
                            layer: i,
                            reason: "weights must be finite".into(),
                        });
                    }
                    width = layer.rows;
                }
                if width != 1 {
                    return Err(ClassifierError::BadDimensions {
                        layer: layers.len() - 1,
                        reason: format!("final layer must output width 1, got {width}"),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Classifier runtime errors.
#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("encoded width {found} does not match the model's expected width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("model layer {layer}: {reason}")]
    BadDimensions { layer: usize, reason: String },
    #[error("model file: {0}")]
    BadFile(String),
    #[error("cannot fit: {0}")]
    CannotFit(String),
}

fn sigmoid<S: Scalar>(z: S) -> S {
    // standard numerically stable split
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Runs the model on an encoded instance and returns P(accept) ∈ (0, 1):
/// the sigmoid of the final logit.
pub fn predict_accept_proba<S: Scalar>(
    model: &ModelSpec<S>,
    encoded: &[S],
) -> Result<S, ClassifierError> {
    let expected = model.input_width();
    if encoded.len() != expected {
        return Err(ClassifierError::WidthMismatch {
            expected,
            found: encoded.len(),
        });
    }
    let logit = match model {
        ModelSpec::Linear { weights, bias } => dot(weights, encoded) + *bias,
        ModelSpec::Mlp { layers } => {
            let mut current = encoded.to_vec();
            for layer in layers {
                let mut next = Vec::with_capacity(layer.rows);
                for r in 0..layer.rows {
                    let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    next.push(layer.activation.apply(dot(row, &current) + layer.bias[r]));
                }
                current = next;
            }
            current[0]
        }
    };
    Ok(sigmoid(logit))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut sum = S::zero();
    for (x, y) in a.iter().zip(b) {
        sum += *x * *y;
    }
    sum
}

/// Mean logistic loss of a model on an encoded dataset.
pub fn logistic_loss<S: Scalar>(
    model: &ModelSpec<S>,
    data: &[Vec<S>],
    labels: &[bool],
) -> Result<S, ClassifierError> {
    let mut loss = S::zero();
    for (x, &y) in data.iter().zip(labels) {
        let p = predict_accept_proba(model, x)?;
        // clamp away from 0/1 to keep the log finite
        let eps = S::from_f64_lossy(1e-12);
        let p = p.max(eps).min(S::one() - eps);
        loss += if y { -p.ln() } else { -(S::one() - p).ln() };
    }
    Ok(loss / S::from_usize(data.len()).expect("dataset size fits the scalar type"))
}

/// Result of [`fit_logistic`].
#[derive(Debug, Clone)]
pub struct LogisticFit<S> {
    pub model: ModelSpec<S>,
    /// Fraction of training rows classified correctly at the 0.5 threshold.
    pub accuracy: f64,
}

/// Trains a logistic regression by deterministic full-batch gradient
/// descent. Identical inputs and seed produce bitwise-identical weights.
pub fn fit_logistic<S: Scalar>(
    data: &[Vec<S>],
    labels: &[bool],
    steps: usize,
    learning_rate: S,
    seed: u64,
) -> Result<LogisticFit<S>, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::CannotFit("empty dataset".into()));
    }
    if data.len() != labels.len() {
        return Err(ClassifierError::CannotFit(format!(
            "{} rows but {} labels",
            data.len(),
            labels.len()
        )));
    }
    let width = data[0].len();
    if width == 0 || data.iter().any(|row| row.len() != width) {
        return Err(ClassifierError::CannotFit("ragged or empty rows".into()));
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(ClassifierError::CannotFit(
            "labels contain a single class".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights: Vec<S> = (0..width)
        .map(|_| S::from_f64_lossy(rng.random_range(-0.01..0.01)))
        .collect();
    let mut bias = S::zero();
    let n = S::from_usize(data.len()).expect("dataset size fits the scalar type");

    for _ in 0..steps {
        let mut grad_w = vec![S::zero(); width];
        let mut grad_b = S::zero();
        for (x, &y) in data.iter().zip(labels) {
            let p = sigmoid(dot(&weights, x) + bias);
            let err = p - if y { S::one() } else { S::zero() };
            for (g, xi) in grad_w.iter_mut().zip(x) {
                *g += err * *xi;
            }
            grad_b += err;
        }
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w = *w - learning_rate * *g / n;
        }
        bias = bias - learning_rate * grad_b / n;
    }

    let model = ModelSpec::Linear { weights, bias };
    let mut correct = 0usize;
    for (x, &y) in data.iter().zip(labels) {
        let p = predict_accept_proba(&model, x)?;
        if accepts(p) == y {
            correct += 1;
        }
    }
    Ok(LogisticFit {
        model,
        accuracy: correct as f64 / data.len() as f64,
    })
}

/// Schema stamp of one feature, recorded in model files so a model trained
/// against one encoding fails fast when used with another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStamp {
    pub name: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bounds: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub levels: Option<Vec<String>>,
}

/// The full encoding fingerprint: feature order, kinds, bounds and levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingFingerprint {
    pub features: Vec<FeatureStamp>,
}

impl EncodingFingerprint {
    pub fn of<S: Scalar>(space: &FeatureSpace<S>) -> Self {
        let features = space
            .features()
            .iter()
            .map(|def| match &def.kind {
                FeatureKind::Numeric { min, max } => FeatureStamp {
                    name: def.name.clone(),
                    kind: "numeric".into(),
                    bounds: Some((min.to_f64_lossy(), max.to_f64_lossy())),
                    levels: None,
                },
                FeatureKind::OrderedCategorical { levels } => FeatureStamp {
                    name: def.name.clone(),
                    kind: "ordered_categorical".into(),
                    bounds: None,
                    levels: Some(levels.clone()),
                },
                FeatureKind::Categorical { levels } => FeatureStamp {
                    name: def.name.clone(),
                    kind: "categorical".into(),
                    bounds: None,
                    levels: Some(levels.clone()),
                },
            })
            .collect();
        Self { features }
    }

    /// Encoded width implied by the fingerprint.
    pub fn width(&self) -> usize {
        self.features
            .iter()
            .map(|f| f.levels.as_ref().map_or(1, Vec::len))
            .sum()
    }
}

/// On-disk model representation: version tag, encoding fingerprint, model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile<S> {
    pub schema: String,
    pub fingerprint: EncodingFingerprint,
    pub model: ModelSpec<S>,
}

impl<S: Scalar> ModelFile<S> {
    pub fn new(space: &FeatureSpace<S>, model: ModelSpec<S>) -> Result<Self, ClassifierError> {
        let file = Self {
            schema: MODEL_SCHEMA.into(),
            fingerprint: EncodingFingerprint::of(space),
            model,
        };
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.schema != MODEL_SCHEMA {
            return Err(ClassifierError::BadFile(format!(
                "unsupported schema `{}` (expected `{MODEL_SCHEMA}`)",
                self.schema
            )));
        }
        self.model.validate()?;
        let expected = self.fingerprint.width();
        let found = self.model.input_width();
        if expected != found {
            return Err(ClassifierError::WidthMismatch { expected, found });
        }
        Ok(())
    }

    /// Does this model's fingerprint match the given feature space?
    pub fn matches_space(&self, space: &FeatureSpace<S>) -> bool {
        self.fingerprint == EncodingFingerprint::of(space)
    }
}

/// Parses and validates a model file.
pub fn load_model<S: Scalar + DeserializeOwned>(content: &str) -> Result<ModelFile<S>, ClassifierError> {
    let file: ModelFile<S> =
        serde_json::from_str(content).map_err(|e| ClassifierError::BadFile(e.to_string()))?;
    file.validate()?;
    Ok(file)
}

/// Serializes a model file. Output bytes are deterministic for a given
/// model, which the train command's reproducibility contract relies on.
pub fn save_model<S: Scalar + Serialize>(file: &ModelFile<S>) -> String {
    serde_json::to_string_pretty(file).expect("model file serializes")
}
