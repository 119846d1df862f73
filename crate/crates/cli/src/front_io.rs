//! Versioned output files: Pareto-front files, per-generation statistics
//! and the run manifest.
//!
//! Fronts and stats are line-delimited JSON — one header line with schema
//! tag and provenance, then one record per line. All provenance travels in
//! the header: the problem-file digest, the manifest hash (digest + seed +
//! version) and the classifier fingerprint, so every analysis downstream
//! can be traced back to its exact inputs. Writers emit canonical bytes:
//! fixed field order, sorted solutions, shortest-round-trip floats — two
//! runs with the same seed produce identical files.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cscf_core::actions::{ActionCatalog, Sequence, Step};
use cscf_core::brkga::GenerationStats;
use cscf_core::feature_space::{FeatureSpace, Instance, Value};
use cscf_core::objectives::EvaluatedSolution;
use cscf_core::Real;

pub const FRONT_SCHEMA: &str = "cscf.front.v1";
pub const STATS_SCHEMA: &str = "cscf.stats.v1";
pub const MANIFEST_SCHEMA: &str = "cscf.manifest.v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `sha256:<hex>` of the given bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

/// The manifest hash stamped into every output file: digest of the problem
/// file digest, the seed (or the engine name when seedless) and the tool
/// version.
pub fn manifest_hash(problem_digest: &str, seed: Option<u64>, version: &str) -> String {
    let seed_repr = seed.map_or_else(|| "oracle".to_string(), |s| s.to_string());
    sha256_hex(format!("{problem_digest}\n{seed_repr}\n{version}").as_bytes())
}

/// Writes `content` to `path` atomically: a rename from a sibling temp file,
/// so readers never observe a half-written file.
pub fn atomic_write(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot move into {}", path.display()))?;
    Ok(())
}

/// A JSON-facing value: numbers for numeric features, level labels for
/// categorical ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonValue {
    Num(f64),
    Label(String),
}

/// Front file header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontHeader {
    pub schema: String,
    /// `brkga` or `oracle`.
    pub engine: String,
    pub instance_id: String,
    pub seed: Option<u64>,
    pub version: String,
    pub manifest_hash: String,
    pub problem_digest: String,
    pub classifier_fingerprint: String,
    pub discount_enabled: bool,
    /// Feature names, defining the column order of `trajectory` states.
    pub features: Vec<String>,
    /// Action ids of the catalog, in catalog order.
    pub actions: Vec<String>,
}

/// One step of a serialized sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontStep {
    pub action: String,
    pub value: JsonValue,
}

/// Per-step cost record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontStepCost {
    pub action: String,
    pub effort: f64,
    pub discount: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontObjectives {
    pub cost: f64,
    pub distance: f64,
    pub frequencies: Vec<u32>,
}

/// One solution line of a front file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSolution {
    pub sequence: Vec<FrontStep>,
    /// States `x_0 … x_T`; each state lists values in header feature order.
    pub trajectory: Vec<Vec<JsonValue>>,
    pub objectives: FrontObjectives,
    pub cost_discounted: f64,
    pub cost_undiscounted: f64,
    pub per_step: Vec<FrontStepCost>,
    pub accept_probability: f64,
}

fn value_to_json(space: &FeatureSpace<Real>, feature: usize, value: Value<Real>) -> JsonValue {
    match value {
        Value::Num(v) => JsonValue::Num(v),
        Value::Level(l) => JsonValue::Label(
            space
                .level_label(feature, l)
                .map_or_else(|| format!("level#{l}"), str::to_string),
        ),
    }
}

fn json_to_value(space: &FeatureSpace<Real>, feature: usize, raw: &JsonValue) -> Result<Value<Real>> {
    match raw {
        JsonValue::Num(v) => Ok(Value::Num(*v)),
        JsonValue::Label(label) => space
            .level_index(feature, label)
            .map(Value::Level)
            .ok_or_else(|| {
                anyhow!(
                    "unknown level \"{label}\" for feature \"{}\"",
                    space.feature(feature).name
                )
            }),
    }
}

/// Converts an evaluated solution into its front file record.
pub fn solution_record(
    space: &FeatureSpace<Real>,
    catalog: &ActionCatalog<Real>,
    sol: &EvaluatedSolution<Real>,
) -> FrontSolution {
    let sequence = sol
        .phenotype
        .steps()
        .iter()
        .map(|step| {
            let action = catalog.action(step.action);
            FrontStep {
                action: action.id.clone(),
                value: value_to_json(space, action.direct_feature, step.value),
            }
        })
        .collect();
    let trajectory = sol
        .rollout
        .states
        .iter()
        .map(|state| {
            state
                .values
                .iter()
                .enumerate()
                .map(|(h, &v)| value_to_json(space, h, v))
                .collect()
        })
        .collect();
    let per_step = sol
        .phenotype
        .steps()
        .iter()
        .enumerate()
        .map(|(t, step)| FrontStepCost {
            action: catalog.action(step.action).id.clone(),
            effort: sol.cost.efforts[t],
            discount: sol.cost.discounts[t],
            cost: sol.cost.costs[t],
        })
        .collect();
    FrontSolution {
        sequence,
        trajectory,
        objectives: FrontObjectives {
            cost: sol.objectives.cost,
            distance: sol.objectives.distance,
            frequencies: sol.objectives.frequencies.clone(),
        },
        cost_discounted: sol.cost.total,
        cost_undiscounted: sol.cost.undiscounted_total(),
        per_step,
        accept_probability: sol.accept_proba,
    }
}

impl FrontSolution {
    /// Reconstructs the core sequence against a catalog (for replays).
    pub fn to_sequence(
        &self,
        space: &FeatureSpace<Real>,
        catalog: &ActionCatalog<Real>,
    ) -> Result<Sequence<Real>> {
        let steps = self
            .sequence
            .iter()
            .map(|s| {
                let action = catalog
                    .index_of(&s.action)
                    .ok_or_else(|| anyhow!("unknown action id `{}`", s.action))?;
                let value =
                    json_to_value(space, catalog.action(action).direct_feature, &s.value)?;
                Ok(Step { action, value })
            })
            .collect::<Result<Vec<_>>>()?;
        Sequence::new(steps).map_err(|e| anyhow!("{e}"))
    }

    /// Reconstructs the start instance `x_0` of the stored trajectory.
    pub fn start_instance(&self, space: &FeatureSpace<Real>) -> Result<Instance<Real>> {
        let first = self
            .trajectory
            .first()
            .ok_or_else(|| anyhow!("trajectory is empty"))?;
        if first.len() != space.len() {
            bail!(
                "trajectory state has {} values, schema has {} features",
                first.len(),
                space.len()
            );
        }
        let values = first
            .iter()
            .enumerate()
            .map(|(h, raw)| json_to_value(space, h, raw))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance::new(values))
    }
}

/// Serializes a front file: header line plus one line per solution.
pub fn render_front_file(header: &FrontHeader, solutions: &[FrontSolution]) -> String {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(header).expect("header serializes"));
    out.push('\n');
    for sol in solutions {
        out.push_str(&serde_json::to_string(sol).expect("solution serializes"));
        out.push('\n');
    }
    out
}

/// Parses a front file.
pub fn parse_front_file(content: &str) -> Result<(FrontHeader, Vec<FrontSolution>)> {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| anyhow!("front file is empty"))?;
    let header: FrontHeader =
        serde_json::from_str(header_line).context("front file header")?;
    if header.schema != FRONT_SCHEMA {
        bail!(
            "unsupported front schema `{}` (expected `{FRONT_SCHEMA}`)",
            header.schema
        );
    }
    let solutions = lines
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).with_context(|| format!("front file solution {}", i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, solutions))
}

/// Reads and parses a front file from disk.
pub fn read_front_file(path: &Path) -> Result<(FrontHeader, Vec<FrontSolution>)> {
    let content =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_front_file(&content).with_context(|| path.display().to_string())
}

/// Stats file header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsHeader {
    pub schema: String,
    pub instance_id: String,
    pub seed: Option<u64>,
    pub version: String,
    pub manifest_hash: String,
    pub problem_digest: String,
}

/// One generation line of a stats file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub generation: usize,
    pub feasible: usize,
    pub front_size: usize,
    pub best_cost: Option<f64>,
    pub best_distance: Option<f64>,
}

/// Serializes a stats file from the optimizer's per-generation records.
pub fn render_stats_file(header: &StatsHeader, stats: &[GenerationStats<Real>]) -> String {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(header).expect("header serializes"));
    out.push('\n');
    for s in stats {
        let record = StatsRecord {
            generation: s.generation,
            feasible: s.feasible,
            front_size: s.front_size,
            best_cost: s.best_cost,
            best_distance: s.best_distance,
        };
        out.push_str(&serde_json::to_string(&record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// One optimization (or enumeration) run inside the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub instance_id: String,
    pub seed: Option<u64>,
    pub manifest_hash: String,
    /// Instance was already accepted; nothing to explain, no files written.
    pub skipped_already_accepted: bool,
    pub front_file: Option<String>,
    pub stats_file: Option<String>,
    pub front_size: usize,
    pub evaluations: u64,
    pub best_violation_count: Option<u32>,
    pub elapsed_ms: u64,
}

/// The run manifest indexing all per-instance output files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub command: String,
    pub problem_id: String,
    pub problem_digest: String,
    pub classifier_fingerprint: String,
    pub discount_enabled: bool,
    pub params: serde_json::Value,
    pub seeds: Vec<u64>,
    pub runs: Vec<ManifestRun>,
}

/// Writes the manifest (pretty-printed, single JSON document).
pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut content = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    content.push('\n');
    atomic_write(path, &content)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cscf_core::demo;
    use cscf_core::objectives::evaluate;

    fn example_header() -> FrontHeader {
        FrontHeader {
            schema: FRONT_SCHEMA.into(),
            engine: "brkga".into(),
            instance_id: "i0".into(),
            seed: Some(0),
            version: VERSION.into(),
            manifest_hash: manifest_hash("sha256:abc", Some(0), VERSION),
            problem_digest: "sha256:abc".into(),
            classifier_fingerprint: "sha256:def".into(),
            discount_enabled: true,
            features: vec!["Job".into(), "Edu".into(), "Location".into()],
            actions: vec!["switch-job".into(), "add-edu".into(), "move".into()],
        }
    }

    #[test]
    fn front_file_round_trips() {
        let p = demo::relocation_problem();
        let seq = demo::relocation_sequence(&p, &["add-edu", "move", "switch-job"]);
        let sol = evaluate(&p, &seq).unwrap();
        let record = solution_record(&p.space, &p.catalog, &sol);
        let content = render_front_file(&example_header(), &[record.clone()]);
        let (header, solutions) = parse_front_file(&content).unwrap();
        assert_eq!(header, example_header());
        assert_eq!(solutions, vec![record]);
    }

    #[test]
    fn solution_record_spells_labels_and_costs() {
        let p = demo::relocation_problem();
        let seq = demo::relocation_sequence(&p, &["add-edu", "move", "switch-job"]);
        let sol = evaluate(&p, &seq).unwrap();
        let record = solution_record(&p.space, &p.catalog, &sol);
        assert_eq!(record.sequence[0].action, "add-edu");
        assert_eq!(record.sequence[0].value, JsonValue::Label("BSc".into()));
        assert_eq!(record.cost_discounted, 22.5);
        assert_eq!(record.cost_undiscounted, 30.0);
        assert_eq!(record.per_step[0].discount, 0.5);
        assert_eq!(record.trajectory.len(), 4);
        assert_eq!(record.trajectory[0][0], JsonValue::Label("Seller".into()));
        // replay reconstruction inverts the serialization
        let seq2 = record.to_sequence(&p.space, &p.catalog).unwrap();
        assert_eq!(seq2, seq);
        let x0 = record.start_instance(&p.space).unwrap();
        assert_eq!(x0, p.x0);
    }

    #[test]
    fn manifest_hash_depends_on_all_parts() {
        let base = manifest_hash("sha256:abc", Some(0), "0.1.0");
        assert_ne!(base, manifest_hash("sha256:abd", Some(0), "0.1.0"));
        assert_ne!(base, manifest_hash("sha256:abc", Some(1), "0.1.0"));
        assert_ne!(base, manifest_hash("sha256:abc", None, "0.1.0"));
        assert_ne!(base, manifest_hash("sha256:abc", Some(0), "0.2.0"));
        assert_eq!(base, manifest_hash("sha256:abc", Some(0), "0.1.0"));
    }

    #[test]
    fn wrong_schema_tag_is_rejected() {
        let mut header = example_header();
        header.schema = "cscf.front.v999".into();
        let content = render_front_file(&header, &[]);
        assert!(parse_front_file(&content).is_err());
    }
}
