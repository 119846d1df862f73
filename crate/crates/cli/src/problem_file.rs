//! The problem-definition file: one JSON document describing everything a
//! run needs — feature schema, action catalog, efforts, the optional
//! consequence graph, the classifier, optimizer parameters, seeds and the
//! instances to explain.
//!
//! Loading performs *all* cross-reference resolution (feature names in
//! rules, τ functions and constraints; level labels; action ids in the
//! effort table) and lowers the document onto the validated core types.
//! The contract is: a file that loads is a file that runs. Every error
//! names the offending path into the document, e.g.
//! `actions[2].values: unknown level "PhD" for feature "Edu"`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use cscf_core::actions::{
    Action, ActionCatalog, CmpOp, Constraint, EffectKind, EffectRule, Monotone, Operand,
    Phase, Predicate, ValueDescriptor,
};
use cscf_core::brkga::BrkgaParams;
use cscf_core::classifier::{load_model, EncodingFingerprint, ModelSpec};
use cscf_core::consequence::{ConsequenceGraph, CostConfig, Edge, EffortFn, TauFn};
use cscf_core::feature_space::{
    load_instances_csv, validate_instance, FeatureSpace, Instance, Value,
};
use cscf_core::{Problem, Real};

pub const PROBLEM_SCHEMA: &str = "cscf.problem.v1";

/// A fully resolved problem file: everything lowered onto core types, plus
/// the provenance data embedded into every output file.
#[derive(Debug, Clone)]
pub struct LoweredProblem {
    pub id: String,
    pub space: FeatureSpace<Real>,
    pub catalog: ActionCatalog<Real>,
    pub cost: CostConfig<Real>,
    pub model: ModelSpec<Real>,
    pub params: BrkgaParams,
    pub seeds: Vec<u64>,
    /// `(instance id, start instance)` pairs, all schema-valid.
    pub instances: Vec<(String, Instance<Real>)>,
    pub oracle_cap: u128,
    /// `sha256:<hex>` digest of the problem file bytes.
    pub digest: String,
    /// `sha256:<hex>` digest of the classifier (encoding fingerprint + model).
    pub classifier_fingerprint: String,
}

impl LoweredProblem {
    /// Assembles the core [`Problem`] for one start instance.
    pub fn problem_for(&self, x0: Instance<Real>) -> Result<Problem<Real>> {
        Problem::new(
            self.space.clone(),
            self.catalog.clone(),
            self.cost.clone(),
            self.model.clone(),
            x0,
        )
        .map_err(|e| anyhow!("instances: {e}"))
    }
}

/// Reads, parses and lowers a problem file.
pub fn load_problem_file(path: &Path) -> Result<LoweredProblem> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = sha256_hex(&bytes);
    let file: ProblemFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("{} is not a valid problem file", path.display()))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    lower(file, base_dir, digest)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

// ---------------------------------------------------------------------------
// raw document shape

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    schema: String,
    id: String,
    features: serde_json::Value,
    actions: Vec<FileAction>,
    efforts: BTreeMap<String, FileEffort>,
    #[serde(default)]
    consequence_graph: Option<FileGraph>,
    #[serde(default)]
    cost: FileCost,
    classifier: FileClassifier,
    #[serde(default)]
    brkga: FileBrkga,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    instances: FileInstances,
    #[serde(default)]
    oracle: FileOracle,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAction {
    id: String,
    direct_feature: String,
    #[serde(default)]
    direct_rule: FileDirectRule,
    #[serde(default)]
    indirect: Vec<FileIndirectRule>,
    values: FileValues,
    #[serde(default)]
    constraints: Vec<FileConstraint>,
}

/// Direct rules: the tweaking value always lands on the direct feature, so
/// the only question is *how*.
#[derive(Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileDirectRule {
    #[default]
    SetToValue,
    SetConstant {
        value: f64,
    },
    AddConstant {
        value: f64,
    },
    SetLevel {
        level: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIndirectRule {
    feature: String,
    #[serde(flatten)]
    rule: FileIndirectKind,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileIndirectKind {
    SetConstant { value: f64 },
    AddConstant { value: f64 },
    AddScaled { factor: f64 },
    SetLevel { level: String },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileValues {
    NumericRange { lo: f64, hi: f64 },
    NumericMonotone { lo: f64, hi: f64, direction: Monotone },
    NumericGrid { values: Vec<f64> },
    LevelSubset { levels: Vec<String> },
    MonotoneLevels { direction: Monotone },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConstraint {
    phase: Phase,
    predicate: FilePredicate,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FilePredicate {
    Cmp {
        lhs: FileOperand,
        op: CmpOp,
        rhs: FileOperand,
    },
    And {
        all: Vec<FilePredicate>,
    },
    Or {
        any: Vec<FilePredicate>,
    },
    Not {
        not: Box<FilePredicate>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileOperand {
    Feature { name: String },
    TweakValue,
    Num { value: f64 },
    /// A level constant, spelled as a label of the named feature.
    Level { feature: String, level: String },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileEffort {
    Constant { value: f64 },
    PerUnit { rate: f64 },
    Table { entries: Vec<FileTableEntry> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTableEntry {
    from: String,
    to: String,
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGraph {
    nodes: Vec<String>,
    edges: Vec<FileEdge>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEdge {
    source: String,
    target: String,
    tau: FileTau,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileTau {
    /// Keys are level labels of the source feature.
    LevelMap {
        map: BTreeMap<String, f64>,
        default: f64,
    },
    ThresholdStep {
        op: CmpOp,
        threshold: FileValue,
        if_true: f64,
        if_false: f64,
    },
}

/// A literal value: a JSON number for numeric features, a level label
/// string for categorical ones.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum FileValue {
    Num(f64),
    Label(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileCost {
    #[serde(default = "default_true")]
    discount_enabled: bool,
}

impl Default for FileCost {
    fn default() -> Self {
        Self { discount_enabled: true }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
enum FileClassifier {
    /// A bare model spec; the encoding fingerprint is derived from the
    /// problem's own feature section.
    #[serde(rename = "inline")]
    Inline(ModelSpec<Real>),
    /// A model file (with fingerprint) on disk, relative to the problem file.
    #[serde(rename = "path")]
    Path(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBrkga {
    population_size: Option<usize>,
    generations: Option<usize>,
    mutant_fraction: Option<f64>,
    offspring_fraction: Option<f64>,
    crossover_bias: Option<f64>,
    elite_capacity_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum FileInstances {
    Inline(Vec<BTreeMap<String, FileValue>>),
    Csv(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOracle {
    max_candidates: Option<u64>,
}

// ---------------------------------------------------------------------------
// lowering

fn lower(file: ProblemFile, base_dir: &Path, digest: String) -> Result<LoweredProblem> {
    if file.schema != PROBLEM_SCHEMA {
        bail!(
            "schema: unsupported value `{}` (expected `{PROBLEM_SCHEMA}`)",
            file.schema
        );
    }

    let space: FeatureSpace<Real> = serde_json::from_value(file.features)
        .map_err(|e| anyhow!("features: {e}"))?;

    let mut actions = Vec::with_capacity(file.actions.len());
    for (i, raw) in file.actions.iter().enumerate() {
        actions.push(
            lower_action(&space, raw).with_context(|| format!("actions[{i}] (`{}`)", raw.id))?,
        );
    }
    let catalog = ActionCatalog::new(actions).map_err(|e| anyhow!("actions: {e}"))?;

    let mut efforts = BTreeMap::new();
    for (id, raw) in &file.efforts {
        let direct = catalog
            .index_of(id)
            .ok_or_else(|| anyhow!("efforts.{id}: no action with this id"))?;
        let effort = lower_effort(&space, catalog.action(direct).direct_feature, raw)
            .with_context(|| format!("efforts.{id}"))?;
        efforts.insert(id.clone(), effort);
    }

    let graph = file
        .consequence_graph
        .as_ref()
        .map(|raw| lower_graph(&space, raw).context("consequence_graph"))
        .transpose()?;

    let cost = CostConfig::new(&space, &catalog, efforts, graph, file.cost.discount_enabled)
        .map_err(|e| anyhow!("efforts: {e}"))?;

    let model = match &file.classifier {
        FileClassifier::Inline(spec) => {
            spec.validate().map_err(|e| anyhow!("classifier.inline: {e}"))?;
            spec.clone()
        }
        FileClassifier::Path(rel) => {
            let model_path = base_dir.join(rel);
            let content = fs::read_to_string(&model_path).with_context(|| {
                format!("classifier.path: cannot read {}", model_path.display())
            })?;
            let model_file = load_model::<Real>(&content)
                .map_err(|e| anyhow!("classifier.path ({rel}): {e}"))?;
            if !model_file.matches_space(&space) {
                bail!(
                    "classifier.path ({rel}): model fingerprint does not match \
                     this problem's feature schema"
                );
            }
            model_file.model
        }
    };

    let params = lower_brkga(&file.brkga)?;
    let seeds = file.seeds.clone().unwrap_or_else(|| vec![0]);
    if seeds.is_empty() {
        bail!("seeds: must not be empty when present");
    }

    let instances = lower_instances(&space, &file.instances, base_dir)?;
    if instances.is_empty() {
        bail!("instances: at least one instance is required");
    }

    let fingerprint_json = serde_json::to_string(&EncodingFingerprint::of(&space))
        .expect("fingerprint serializes");
    let model_json = serde_json::to_string(&model).expect("model serializes");
    let classifier_fingerprint =
        sha256_hex(format!("{fingerprint_json}\n{model_json}").as_bytes());

    Ok(LoweredProblem {
        id: file.id,
        space,
        catalog,
        cost,
        model,
        params,
        seeds,
        instances,
        oracle_cap: file
            .oracle
            .max_candidates
            .map_or(10_000_000, u128::from),
        digest,
        classifier_fingerprint,
    })
}

fn feature_index(space: &FeatureSpace<Real>, name: &str) -> Result<usize> {
    space
        .index_of(name)
        .ok_or_else(|| anyhow!("unknown feature `{name}`"))
}

fn level_index(space: &FeatureSpace<Real>, feature: usize, label: &str) -> Result<u32> {
    space.level_index(feature, label).ok_or_else(|| {
        anyhow!(
            "unknown level \"{label}\" for feature \"{}\"",
            space.feature(feature).name
        )
    })
}

fn lower_action(space: &FeatureSpace<Real>, raw: &FileAction) -> Result<Action<Real>> {
    let direct = feature_index(space, &raw.direct_feature).context("direct_feature")?;
    let direct_kind = match &raw.direct_rule {
        FileDirectRule::SetToValue => EffectKind::SetToValue,
        FileDirectRule::SetConstant { value } => EffectKind::SetConstant(*value),
        FileDirectRule::AddConstant { value } => EffectKind::AddConstant(*value),
        FileDirectRule::SetLevel { level } => {
            EffectKind::SetLevel(level_index(space, direct, level).context("direct_rule")?)
        }
    };

    let mut indirect = Vec::with_capacity(raw.indirect.len());
    for (j, rule) in raw.indirect.iter().enumerate() {
        let target = feature_index(space, &rule.feature)
            .with_context(|| format!("indirect[{j}]"))?;
        let kind = match &rule.rule {
            FileIndirectKind::SetConstant { value } => EffectKind::SetConstant(*value),
            FileIndirectKind::AddConstant { value } => EffectKind::AddConstant(*value),
            FileIndirectKind::AddScaled { factor } => EffectKind::AddScaled(*factor),
            FileIndirectKind::SetLevel { level } => EffectKind::SetLevel(
                level_index(space, target, level).with_context(|| format!("indirect[{j}]"))?,
            ),
        };
        indirect.push(EffectRule { target, kind });
    }

    let values = lower_values(space, direct, &raw.values).context("values")?;

    let mut constraints = Vec::with_capacity(raw.constraints.len());
    for (j, c) in raw.constraints.iter().enumerate() {
        constraints.push(Constraint {
            phase: c.phase,
            predicate: lower_predicate(space, direct, &c.predicate)
                .with_context(|| format!("constraints[{j}]"))?,
        });
    }

    Action::new(
        space,
        raw.id.clone(),
        EffectRule { target: direct, kind: direct_kind },
        indirect,
        values,
        constraints,
    )
    .map_err(|e| anyhow!("{e}"))
}

fn lower_values(
    space: &FeatureSpace<Real>,
    direct: usize,
    raw: &FileValues,
) -> Result<ValueDescriptor<Real>> {
    Ok(match raw {
        FileValues::NumericRange { lo, hi } => ValueDescriptor::NumericRange { lo: *lo, hi: *hi },
        FileValues::NumericMonotone { lo, hi, direction } => ValueDescriptor::NumericMonotone {
            lo: *lo,
            hi: *hi,
            direction: *direction,
        },
        FileValues::NumericGrid { values } => ValueDescriptor::NumericGrid(values.clone()),
        FileValues::LevelSubset { levels } => ValueDescriptor::LevelSubset(
            levels
                .iter()
                .map(|l| level_index(space, direct, l))
                .collect::<Result<_>>()?,
        ),
        FileValues::MonotoneLevels { direction } => {
            ValueDescriptor::MonotoneLevels { direction: *direction }
        }
    })
}

fn lower_predicate(
    space: &FeatureSpace<Real>,
    direct: usize,
    raw: &FilePredicate,
) -> Result<Predicate<Real>> {
    Ok(match raw {
        FilePredicate::Cmp { lhs, op, rhs } => Predicate::Cmp {
            lhs: lower_operand(space, direct, lhs).context("lhs")?,
            op: *op,
            rhs: lower_operand(space, direct, rhs).context("rhs")?,
        },
        FilePredicate::And { all } => Predicate::And(
            all.iter()
                .map(|p| lower_predicate(space, direct, p))
                .collect::<Result<_>>()?,
        ),
        FilePredicate::Or { any } => Predicate::Or(
            any.iter()
                .map(|p| lower_predicate(space, direct, p))
                .collect::<Result<_>>()?,
        ),
        FilePredicate::Not { not } => {
            Predicate::Not(Box::new(lower_predicate(space, direct, not)?))
        }
    })
}

fn lower_operand(
    space: &FeatureSpace<Real>,
    _direct: usize,
    raw: &FileOperand,
) -> Result<Operand<Real>> {
    Ok(match raw {
        FileOperand::Feature { name } => Operand::Feature(feature_index(space, name)?),
        FileOperand::TweakValue => Operand::TweakValue,
        FileOperand::Num { value } => Operand::Num(*value),
        FileOperand::Level { feature, level } => {
            let h = feature_index(space, feature)?;
            Operand::Level(level_index(space, h, level)?)
        }
    })
}

fn lower_effort(
    space: &FeatureSpace<Real>,
    direct: usize,
    raw: &FileEffort,
) -> Result<EffortFn<Real>> {
    Ok(match raw {
        FileEffort::Constant { value } => EffortFn::Constant(*value),
        FileEffort::PerUnit { rate } => EffortFn::PerUnit(*rate),
        FileEffort::Table { entries } => {
            let mut table = BTreeMap::new();
            for (j, entry) in entries.iter().enumerate() {
                let from = level_index(space, direct, &entry.from)
                    .with_context(|| format!("entries[{j}].from"))?;
                let to = level_index(space, direct, &entry.to)
                    .with_context(|| format!("entries[{j}].to"))?;
                if table.insert((from, to), entry.cost).is_some() {
                    bail!("entries[{j}]: duplicate pair {} -> {}", entry.from, entry.to);
                }
            }
            EffortFn::Table(table)
        }
    })
}

fn lower_graph(space: &FeatureSpace<Real>, raw: &FileGraph) -> Result<ConsequenceGraph<Real>> {
    let nodes = raw
        .nodes
        .iter()
        .map(|n| feature_index(space, n).context("nodes"))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::with_capacity(raw.edges.len());
    for (j, edge) in raw.edges.iter().enumerate() {
        let context = |part: &str| format!("edges[{j}].{part}");
        let source = feature_index(space, &edge.source).with_context(|| context("source"))?;
        let target = feature_index(space, &edge.target).with_context(|| context("target"))?;
        let tau = match &edge.tau {
            FileTau::LevelMap { map, default } => {
                let mut lowered = BTreeMap::new();
                for (label, factor) in map {
                    lowered.insert(
                        level_index(space, source, label).with_context(|| context("tau.map"))?,
                        *factor,
                    );
                }
                TauFn::LevelMap { map: lowered, default: *default }
            }
            FileTau::ThresholdStep { op, threshold, if_true, if_false } => TauFn::ThresholdStep {
                op: *op,
                threshold: lower_value(space, source, threshold)
                    .with_context(|| context("tau.threshold"))?,
                if_true: *if_true,
                if_false: *if_false,
            },
        };
        edges.push(Edge { source, target, tau });
    }
    ConsequenceGraph::new(space, nodes, edges).map_err(|e| anyhow!("{e}"))
}

fn lower_value(space: &FeatureSpace<Real>, feature: usize, raw: &FileValue) -> Result<Value<Real>> {
    Ok(match raw {
        FileValue::Num(v) => Value::Num(*v),
        FileValue::Label(label) => Value::Level(level_index(space, feature, label)?),
    })
}

fn lower_brkga(raw: &FileBrkga) -> Result<BrkgaParams> {
    let defaults = BrkgaParams::default();
    let params = BrkgaParams {
        population_size: raw.population_size.unwrap_or(defaults.population_size),
        generations: raw.generations.unwrap_or(defaults.generations),
        mutant_fraction: raw.mutant_fraction.unwrap_or(defaults.mutant_fraction),
        offspring_fraction: raw.offspring_fraction.unwrap_or(defaults.offspring_fraction),
        crossover_bias: raw.crossover_bias.unwrap_or(defaults.crossover_bias),
        elite_capacity_fraction: raw
            .elite_capacity_fraction
            .unwrap_or(defaults.elite_capacity_fraction),
        ..defaults
    };
    params.validate().map_err(|e| anyhow!("brkga: {e}"))?;
    Ok(params)
}

fn lower_instances(
    space: &FeatureSpace<Real>,
    raw: &FileInstances,
    base_dir: &Path,
) -> Result<Vec<(String, Instance<Real>)>> {
    let instances: Vec<(String, Instance<Real>)> = match raw {
        FileInstances::Inline(rows) => {
            let mut out = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let inst = lower_inline_instance(space, row)
                    .with_context(|| format!("instances.inline[{i}]"))?;
                out.push((format!("i{i}"), inst));
            }
            out
        }
        FileInstances::Csv(rel) => {
            let csv_path: PathBuf = base_dir.join(rel);
            let content = fs::read(&csv_path).with_context(|| {
                format!("instances.csv: cannot read {}", csv_path.display())
            })?;
            let parsed = load_instances_csv(space, content.as_slice())
                .map_err(|e| anyhow!("instances.csv ({rel}): {e}"))?;
            parsed
                .into_iter()
                .enumerate()
                .map(|(i, inst)| (format!("i{i}"), inst))
                .collect()
        }
    };
    for (id, inst) in &instances {
        let report = validate_instance(space, inst);
        if let Some(v) = report.violations.first() {
            bail!("instances ({id}): {}", v.reason);
        }
    }
    Ok(instances)
}

fn lower_inline_instance(
    space: &FeatureSpace<Real>,
    row: &BTreeMap<String, FileValue>,
) -> Result<Instance<Real>> {
    for name in row.keys() {
        if space.index_of(name).is_none() {
            bail!("unknown feature `{name}`");
        }
    }
    let values = space
        .features()
        .iter()
        .enumerate()
        .map(|(h, def)| {
            let raw = row
                .get(&def.name)
                .ok_or_else(|| anyhow!("missing feature `{}`", def.name))?;
            lower_value(space, h, raw).with_context(|| format!("feature `{}`", def.name))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, content).unwrap();
        p
    }

    fn minimal_file() -> String {
        r#"{
          "schema": "cscf.problem.v1",
          "id": "tiny",
          "features": [
            {"name": "x", "kind": "numeric", "min": 0.0, "max": 10.0},
            {"name": "c", "kind": "categorical", "levels": ["off", "on"]}
          ],
          "actions": [
            {"id": "bump", "direct_feature": "x",
             "values": {"kind": "numeric_grid", "values": [9.0]}},
            {"id": "flip", "direct_feature": "c",
             "values": {"kind": "level_subset", "levels": ["on"]}}
          ],
          "efforts": {
            "bump": {"kind": "constant", "value": 1.0},
            "flip": {"kind": "constant", "value": 2.0}
          },
          "classifier": {"inline": {"kind": "linear", "weights": [4.0, 0.0, 1.0], "bias": -3.0}},
          "instances": {"inline": [{"x": 1.0, "c": "off"}]}
        }"#
        .to_string()
    }

    #[test]
    fn minimal_file_loads_and_lowers() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "p.json", &minimal_file());
        let lowered = load_problem_file(&path).unwrap();
        assert_eq!(lowered.id, "tiny");
        assert_eq!(lowered.catalog.len(), 2);
        assert_eq!(lowered.seeds, vec![0]);
        assert_eq!(lowered.instances.len(), 1);
        assert_eq!(lowered.instances[0].0, "i0");
        assert!(lowered.digest.starts_with("sha256:"));
        assert_eq!(lowered.params.population_size, 500);
        assert!(
            lowered.cost.discount_enabled,
            "discounting defaults to on when the cost section is omitted"
        );
    }

    #[test]
    fn unknown_level_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let bad = minimal_file().replace("\"on\"]}}", "\"sideways\"]}}");
        let path = write(dir.path(), "p.json", &bad);
        let err = format!("{:#}", load_problem_file(&path).unwrap_err());
        assert!(err.contains("actions[1]"), "{err}");
        assert!(err.contains("sideways"), "{err}");
    }

    #[test]
    fn unknown_effort_id_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let bad = minimal_file().replace("\"flip\": {", "\"fl1p\": {");
        let path = write(dir.path(), "p.json", &bad);
        let err = format!("{:#}", load_problem_file(&path).unwrap_err());
        assert!(err.contains("fl1p"), "{err}");
    }

    #[test]
    fn unknown_top_level_section_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bad = minimal_file().replace("\"id\": \"tiny\",", "\"id\": \"tiny\", \"extra\": 1,");
        let path = write(dir.path(), "p.json", &bad);
        assert!(load_problem_file(&path).is_err());
    }

    #[test]
    fn instance_with_out_of_range_value_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bad = minimal_file().replace("{\"x\": 1.0,", "{\"x\": 99.0,");
        let path = write(dir.path(), "p.json", &bad);
        let err = format!("{:#}", load_problem_file(&path).unwrap_err());
        assert!(err.contains("i0"), "{err}");
    }

    #[test]
    fn classifier_file_with_wrong_fingerprint_is_rejected() {
        use cscf_core::classifier::{save_model, ModelFile};
        use cscf_core::feature_space::{FeatureDef, FeatureKind};

        let dir = tempfile::tempdir().unwrap();
        // a model trained against a *different* schema
        let other_space: FeatureSpace<Real> = FeatureSpace::new(vec![FeatureDef {
            name: "z".into(),
            kind: FeatureKind::Numeric { min: 0.0, max: 1.0 },
        }])
        .unwrap();
        let model_file = ModelFile::new(
            &other_space,
            ModelSpec::Linear { weights: vec![1.0], bias: 0.0 },
        )
        .unwrap();
        write(dir.path(), "model.json", &save_model(&model_file));

        let with_path = minimal_file().replace(
            r#""classifier": {"inline": {"kind": "linear", "weights": [4.0, 0.0, 1.0], "bias": -3.0}}"#,
            r#""classifier": {"path": "model.json"}"#,
        );
        let path = write(dir.path(), "p.json", &with_path);
        let err = format!("{:#}", load_problem_file(&path).unwrap_err());
        assert!(err.contains("fingerprint"), "{err}");
    }
}
