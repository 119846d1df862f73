//! Feature schema and instances: the typed mixed numeric/categorical space
//! every other module operates on.
//!
//! A [`FeatureSpace`] is an ordered list of feature definitions; an
//! [`Instance`] is a point in that space, positionally aligned to it.
//! Categorical values are stored as level indices into the declared level
//! list; labels only appear at the text boundaries (CSV, JSON).

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

/// What kind of values a feature takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind<S: Scalar> {
    /// Real-valued feature with fixed, finite bounds.
    Numeric { min: S, max: S },
    /// Categorical feature whose levels carry a total order (first = lowest).
    OrderedCategorical { levels: Vec<String> },
    /// Categorical feature without any order between levels.
    Categorical { levels: Vec<String> },
}

impl<S: Scalar> FeatureKind<S> {
    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureKind::Numeric { .. })
    }

    pub fn is_ordered(&self) -> bool {
        matches!(self, FeatureKind::OrderedCategorical { .. })
    }

    pub fn levels(&self) -> Option<&[String]> {
        match self {
            FeatureKind::Numeric { .. } => None,
            FeatureKind::OrderedCategorical { levels } | FeatureKind::Categorical { levels } => {
                Some(levels)
            }
        }
    }
}

/// A single named feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef<S: Scalar> {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind<S>,
}

/// Schema construction errors.
#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("feature space must declare at least one feature")]
    Empty,
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("feature `{0}`: numeric bounds must be finite with min < max")]
    BadNumericBounds(String),
    #[error("feature `{0}`: categorical features need at least one level")]
    NoLevels(String),
    #[error("feature `{0}`: duplicate level label `{1}`")]
    DuplicateLevel(String, String),
}

/// Ordered, validated collection of feature definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace<S: Scalar> {
    features: Vec<FeatureDef<S>>,
}

impl<S: Scalar> FeatureSpace<S> {
    pub fn new(features: Vec<FeatureDef<S>>) -> Result<Self, SchemaError> {
        if features.is_empty() {
            return Err(SchemaError::Empty);
        }
        for (i, def) in features.iter().enumerate() {
            if features[..i].iter().any(|d| d.name == def.name) {
                return Err(SchemaError::DuplicateFeature(def.name.clone()));
            }
            match &def.kind {
                FeatureKind::Numeric { min, max } => {
                    if !min.is_finite() || !max.is_finite() || *min >= *max {
                        return Err(SchemaError::BadNumericBounds(def.name.clone()));
                    }
                }
                FeatureKind::OrderedCategorical { levels } | FeatureKind::Categorical { levels } => {
                    if levels.is_empty() {
                        return Err(SchemaError::NoLevels(def.name.clone()));
                    }
                    for (j, level) in levels.iter().enumerate() {
                        if levels[..j].contains(level) {
                            return Err(SchemaError::DuplicateLevel(
                                def.name.clone(),
                                level.clone(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Self { features })
    }

    /// Number of features `d`.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees d >= 1
    }

    pub fn features(&self) -> &[FeatureDef<S>] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> &FeatureDef<S> {
        &self.features[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|d| d.name == name)
    }

    /// Resolves a level label to its index within feature `index`.
    pub fn level_index(&self, index: usize, label: &str) -> Option<u32> {
        self.features[index]
            .kind
            .levels()
            .and_then(|levels| levels.iter().position(|l| l == label))
            .map(|p| p as u32)
    }

    pub fn level_label(&self, index: usize, level: u32) -> Option<&str> {
        self.features[index]
            .kind
            .levels()
            .and_then(|levels| levels.get(level as usize))
            .map(|s| s.as_str())
    }

    pub fn numeric_bounds(&self, index: usize) -> Option<(S, S)> {
        match self.features[index].kind {
            FeatureKind::Numeric { min, max } => Some((min, max)),
            _ => None,
        }
    }
}

impl<S: Scalar> Serialize for FeatureSpace<S>
where
    S: Serialize,
{
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        self.features.serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for FeatureSpace<S>
where
    S: Deserialize<'de>,
{
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let features = Vec::<FeatureDef<S>>::deserialize(deserializer)?;
        FeatureSpace::new(features).map_err(serde::de::Error::custom)
    }
}

/// One feature value: a real number or a level index into the feature's
/// declared level list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<S> {
    Num(S),
    Level(u32),
}

impl<S: Scalar> Value<S> {
    pub fn as_num(&self) -> Option<S> {
        match self {
            Value::Num(v) => Some(*v),
            Value::Level(_) => None,
        }
    }

    pub fn as_level(&self) -> Option<u32> {
        match self {
            Value::Num(_) => None,
            Value::Level(l) => Some(*l),
        }
    }

    /// Renders the value with its label when the feature is categorical.
    pub fn display<'a>(&self, space: &'a FeatureSpace<S>, feature: usize) -> String {
        match self {
            Value::Num(v) => format!("{v}"),
            Value::Level(l) => space
                .level_label(feature, *l)
                .map(str::to_owned)
                .unwrap_or_else(|| format!("<level {l}>")),
        }
    }
}

/// A point in the feature space, positionally aligned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    pub values: Vec<Value<S>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(values: Vec<Value<S>>) -> Self {
        Self { values }
    }

    pub fn get(&self, index: usize) -> Value<S> {
        self.values[index]
    }
}

impl<S: Scalar> fmt::Display for Instance<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match v {
                Value::Num(x) => write!(f, "{x}")?,
                Value::Level(l) => write!(f, "#{l}")?,
            }
        }
        write!(f, ")")
    }
}

/// One rule violation found while validating an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index of the offending feature; `None` for structural problems such
    /// as a length mismatch.
    pub feature: Option<usize>,
    pub reason: String,
}

/// Outcome of [`validate_instance`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every value of `inst` against its feature definition and reports
/// all violations instead of stopping at the first.
pub fn validate_instance<S: Scalar>(
    space: &FeatureSpace<S>,
    inst: &Instance<S>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    if inst.values.len() != space.len() {
        report.violations.push(Violation {
            feature: None,
            reason: format!(
                "instance has {} values but the space declares {} features",
                inst.values.len(),
                space.len()
            ),
        });
        return report;
    }
    for (h, value) in inst.values.iter().enumerate() {
        let def = space.feature(h);
        match (&def.kind, value) {
            (FeatureKind::Numeric { min, max }, Value::Num(v)) => {
                if !v.is_finite() {
                    report.violations.push(Violation {
                        feature: Some(h),
                        reason: format!("`{}`: value is not finite", def.name),
                    });
                } else if v < min {
                    report.violations.push(Violation {
                        feature: Some(h),
                        reason: format!("`{}`: {v} below min {min}", def.name),
                    });
                } else if v > max {
                    report.violations.push(Violation {
                        feature: Some(h),
                        reason: format!("`{}`: {v} above max {max}", def.name),
                    });
                }
            }
            (FeatureKind::Numeric { .. }, Value::Level(_)) => {
                report.violations.push(Violation {
                    feature: Some(h),
                    reason: format!("`{}`: expected a number, found a level", def.name),
                });
            }
            (kind, Value::Level(l)) => {
                let n = kind.levels().map(<[String]>::len).unwrap_or(0);
                if *l as usize >= n {
                    report.violations.push(Violation {
                        feature: Some(h),
                        reason: format!("`{}`: unknown level index {l}", def.name),
                    });
                }
            }
            (_, Value::Num(_)) => {
                report.violations.push(Violation {
                    feature: Some(h),
                    reason: format!("`{}`: expected a level, found a number", def.name),
                });
            }
        }
    }
    report
}

/// CSV ingestion errors, always naming the offending location.
#[derive(Debug, Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Malformed(#[from] csv::Error),
    #[error("csv header is missing feature column `{0}`")]
    MissingColumn(String),
    #[error("csv row {row}, column `{column}`: {reason}")]
    BadCell {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("csv row {row}: expected {expected} cells, found {found}")]
    BadRowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// Parses instances from CSV text. The header must contain every feature
/// name (extra columns are ignored, any column order accepted); returned
/// instances are reordered to the schema order and fully validated.
pub fn load_instances_csv<S: Scalar, R: Read>(
    space: &FeatureSpace<S>,
    reader: R,
) -> Result<Vec<Instance<S>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut column_of = Vec::with_capacity(space.len());
    for def in space.features() {
        let pos = headers
            .iter()
            .position(|h| h == def.name)
            .ok_or_else(|| CsvError::MissingColumn(def.name.clone()))?;
        column_of.push(pos);
    }

    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1; // 1-based data row, header excluded
        let record = record?;
        if record.len() != headers.len() {
            return Err(CsvError::BadRowLength {
                row,
                expected: headers.len(),
                found: record.len(),
            });
        }
        let mut values = Vec::with_capacity(space.len());
        for (h, def) in space.features().iter().enumerate() {
            let cell = &record[column_of[h]];
            let value = parse_cell(space, h, cell).map_err(|reason| CsvError::BadCell {
                row,
                column: def.name.clone(),
                reason,
            })?;
            values.push(value);
        }
        out.push(Instance::new(values));
    }
    Ok(out)
}

/// Parses one textual cell for feature `h`, enforcing kind and bounds.
pub fn parse_cell<S: Scalar>(
    space: &FeatureSpace<S>,
    h: usize,
    cell: &str,
) -> Result<Value<S>, String> {
    match &space.feature(h).kind {
        FeatureKind::Numeric { min, max } => {
            let raw: f64 = cell
                .parse()
                .map_err(|_| format!("`{cell}` is not a number"))?;
            let v = S::from_f64(raw).ok_or_else(|| format!("`{cell}` is not representable"))?;
            if !v.is_finite() || v < *min || v > *max {
                return Err(format!("{v} outside bounds [{min}, {max}]"));
            }
            Ok(Value::Num(v))
        }
        _ => space
            .level_index(h, cell)
            .map(Value::Level)
            .ok_or_else(|| format!("unknown level `{cell}`")),
    }
}

/// Writes instances back out as CSV in schema column order, printing
/// numerics with full round-trip precision and levels verbatim.
pub fn write_instances_csv<S: Scalar>(space: &FeatureSpace<S>, instances: &[Instance<S>]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = space.features().iter().map(|d| d.name.as_str()).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for inst in instances {
        let cells: Vec<String> = inst
            .values
            .iter()
            .enumerate()
            .map(|(h, v)| v.display(space, h))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
