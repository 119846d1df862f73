//! The CLI subcommands. Each returns the process exit code on success and
//! surfaces hard errors through `anyhow` (which the binary maps to exit
//! code 1).
//!
//! Exit codes: `0` — every attempted search found at least one feasible
//! sequence (instances that already carry the desired label are skipped
//! with a warning and do not count against this); `2` — at least one
//! search come up empty; `1` — any error (unreadable files, schema
//! violations, oracle refusals, fingerprint mismatches).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use cscf_core::brkga::{evolve, BrkgaParams};
use cscf_core::classifier::{accepts, encode, fit_logistic, save_model, Encoding, ModelFile};
use cscf_core::feature_space::{load_instances_csv, FeatureSpace, Instance};
use cscf_core::objectives::evaluate;
use cscf_core::oracle::{enumerate_front, OracleConfig};
use cscf_core::Real;

use crate::analysis::{
    aggregate_flows, compare_costs, render_comparison_csv, summarize_positions, PositionSample,
    PositionsFile, POSITIONS_SCHEMA,
};
use crate::front_io::{
    atomic_write, manifest_hash, read_front_file, render_front_file, render_stats_file,
    solution_record, write_manifest, FrontHeader, FrontSolution, Manifest, ManifestRun,
    StatsHeader, FRONT_SCHEMA, MANIFEST_SCHEMA, STATS_SCHEMA, VERSION,
};
use crate::problem_file::{load_problem_file, LoweredProblem};

/// Common overrides for the `run` subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub generations: Option<usize>,
    pub population: Option<usize>,
    pub no_discount: bool,
}

fn front_header(
    lowered: &LoweredProblem,
    engine: &str,
    instance_id: &str,
    seed: Option<u64>,
    discount_enabled: bool,
) -> FrontHeader {
    FrontHeader {
        schema: FRONT_SCHEMA.into(),
        engine: engine.into(),
        instance_id: instance_id.into(),
        seed,
        version: VERSION.into(),
        manifest_hash: manifest_hash(&lowered.digest, seed, VERSION),
        problem_digest: lowered.digest.clone(),
        classifier_fingerprint: lowered.classifier_fingerprint.clone(),
        discount_enabled,
        features: lowered
            .space
            .features()
            .iter()
            .map(|d| d.name.clone())
            .collect(),
        actions: lowered
            .catalog
            .actions()
            .iter()
            .map(|a| a.id.clone())
            .collect(),
    }
}

/// `cscf run`: optimize every (instance, seed) pair of the problem file and
/// write one front and one stats file per pair, plus a manifest.
pub fn cmd_run(problem_path: &Path, out_dir: &Path, overrides: &RunOverrides) -> Result<u8> {
    let mut lowered = load_problem_file(problem_path)?;
    if overrides.no_discount {
        lowered.cost = lowered.cost.without_discount();
    }
    let mut params = lowered.params.clone();
    if let Some(g) = overrides.generations {
        params.generations = g;
    }
    if let Some(p) = overrides.population {
        params.population_size = p;
    }
    let seeds = overrides.seed.map_or_else(|| lowered.seeds.clone(), |s| vec![s]);
    let discount_enabled = lowered.cost.discount_active();

    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let mut runs = Vec::new();
    let mut any_empty_front = false;

    for (instance_id, x0) in &lowered.instances {
        let problem = lowered.problem_for(x0.clone())?;
        let p0 = problem
            .accept_proba(x0)
            .map_err(|e| anyhow!("instances ({instance_id}): {e}"))?;
        if accepts(p0) {
            eprintln!(
                "warning: instance {instance_id} is already accepted \
                 (P = {p0:.3}); skipping"
            );
            for &seed in &seeds {
                runs.push(ManifestRun {
                    instance_id: instance_id.clone(),
                    seed: Some(seed),
                    manifest_hash: manifest_hash(&lowered.digest, Some(seed), VERSION),
                    skipped_already_accepted: true,
                    front_file: None,
                    stats_file: None,
                    front_size: 0,
                    evaluations: 0,
                    best_violation_count: None,
                    elapsed_ms: 0,
                });
            }
            continue;
        }

        for &seed in &seeds {
            let started = Instant::now();
            let run_params = BrkgaParams { seed, ..params.clone() };
            let outcome = evolve(&problem, &run_params)
                .map_err(|e| anyhow!("run ({instance_id}, seed {seed}): {e}"))?;
            let elapsed_ms = started.elapsed().as_millis() as u64;

            let header =
                front_header(&lowered, "brkga", instance_id, Some(seed), discount_enabled);
            let records: Vec<FrontSolution> = outcome
                .front
                .iter()
                .map(|sol| solution_record(&lowered.space, &lowered.catalog, sol))
                .collect();
            let front_name = format!("{instance_id}-seed{seed}.front.jsonl");
            let stats_name = format!("{instance_id}-seed{seed}.stats.jsonl");
            atomic_write(&out_dir.join(&front_name), &render_front_file(&header, &records))?;

            let stats_header = StatsHeader {
                schema: STATS_SCHEMA.into(),
                instance_id: instance_id.clone(),
                seed: Some(seed),
                version: VERSION.into(),
                manifest_hash: header.manifest_hash.clone(),
                problem_digest: lowered.digest.clone(),
            };
            atomic_write(
                &out_dir.join(&stats_name),
                &render_stats_file(&stats_header, &outcome.stats),
            )?;

            if outcome.front.is_empty() {
                any_empty_front = true;
                eprintln!(
                    "warning: no feasible sequence found for {instance_id} \
                     with seed {seed}"
                );
            }
            runs.push(ManifestRun {
                instance_id: instance_id.clone(),
                seed: Some(seed),
                manifest_hash: header.manifest_hash,
                skipped_already_accepted: false,
                front_file: Some(front_name),
                stats_file: Some(stats_name),
                front_size: outcome.front.len(),
                evaluations: outcome.evaluations as u64,
                best_violation_count: if outcome.front.is_empty() { None } else { Some(0) },
                elapsed_ms,
            });
        }
    }

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        version: VERSION.into(),
        command: "run".into(),
        problem_id: lowered.id.clone(),
        problem_digest: lowered.digest.clone(),
        classifier_fingerprint: lowered.classifier_fingerprint.clone(),
        discount_enabled,
        params: serde_json::json!({
            "population_size": params.population_size,
            "generations": params.generations,
            "mutant_fraction": params.mutant_fraction,
            "offspring_fraction": params.offspring_fraction,
            "crossover_bias": params.crossover_bias,
            "elite_capacity_fraction": params.elite_capacity_fraction,
        }),
        seeds: seeds.clone(),
        runs,
    };
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;

    Ok(if any_empty_front { 2 } else { 0 })
}

/// `cscf oracle`: exhaustively enumerate the exact front per instance.
pub fn cmd_oracle(problem_path: &Path, out_dir: &Path, no_discount: bool) -> Result<u8> {
    let mut lowered = load_problem_file(problem_path)?;
    if no_discount {
        lowered.cost = lowered.cost.without_discount();
    }
    let discount_enabled = lowered.cost.discount_active();
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;

    let config = OracleConfig { max_candidates: lowered.oracle_cap };
    let mut runs = Vec::new();
    let mut any_empty_front = false;

    for (instance_id, x0) in &lowered.instances {
        let problem = lowered.problem_for(x0.clone())?;
        let p0 = problem
            .accept_proba(x0)
            .map_err(|e| anyhow!("instances ({instance_id}): {e}"))?;
        if accepts(p0) {
            eprintln!(
                "warning: instance {instance_id} is already accepted \
                 (P = {p0:.3}); skipping"
            );
            runs.push(ManifestRun {
                instance_id: instance_id.clone(),
                seed: None,
                manifest_hash: manifest_hash(&lowered.digest, None, VERSION),
                skipped_already_accepted: true,
                front_file: None,
                stats_file: None,
                front_size: 0,
                evaluations: 0,
                best_violation_count: None,
                elapsed_ms: 0,
            });
            continue;
        }

        let started = Instant::now();
        let oracle = enumerate_front(&problem, &config)
            .map_err(|e| anyhow!("oracle ({instance_id}): {e}"))?;
        let elapsed_ms = started.elapsed().as_millis() as u64;

        let header = front_header(&lowered, "oracle", instance_id, None, discount_enabled);
        let records: Vec<FrontSolution> = oracle
            .front
            .iter()
            .map(|sol| solution_record(&lowered.space, &lowered.catalog, sol))
            .collect();
        let front_name = format!("{instance_id}-oracle.front.jsonl");
        atomic_write(&out_dir.join(&front_name), &render_front_file(&header, &records))?;

        if oracle.front.is_empty() {
            any_empty_front = true;
            eprintln!("warning: no feasible sequence exists for {instance_id}");
        }
        runs.push(ManifestRun {
            instance_id: instance_id.clone(),
            seed: None,
            manifest_hash: header.manifest_hash,
            skipped_already_accepted: false,
            front_file: Some(front_name),
            stats_file: None,
            front_size: oracle.front.len(),
            evaluations: oracle.candidates.min(u128::from(u64::MAX)) as u64,
            best_violation_count: if oracle.front.is_empty() { None } else { Some(0) },
            elapsed_ms,
        });
    }

    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        version: VERSION.into(),
        command: "oracle".into(),
        problem_id: lowered.id.clone(),
        problem_digest: lowered.digest.clone(),
        classifier_fingerprint: lowered.classifier_fingerprint.clone(),
        discount_enabled,
        params: serde_json::json!({ "max_candidates": lowered.oracle_cap as u64 }),
        seeds: vec![],
        runs,
    };
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;

    Ok(if any_empty_front { 2 } else { 0 })
}

fn read_fronts(paths: &[PathBuf]) -> Result<Vec<(FrontHeader, Vec<FrontSolution>)>> {
    paths.iter().map(|p| read_front_file(p)).collect()
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => atomic_write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// `cscf compare-costs`: per-instance minimum undiscounted cost of side A
/// versus side B, over solutions no longer than `max_length` steps.
pub fn cmd_compare_costs(
    a: &[PathBuf],
    b: &[PathBuf],
    max_length: usize,
    out: Option<&Path>,
) -> Result<u8> {
    let side_a = read_fronts(a)?;
    let side_b = read_fronts(b)?;
    let rows = compare_costs(&side_a, &side_b, max_length)?;
    write_or_print(out, &render_comparison_csv(&rows))?;
    Ok(0)
}

/// `cscf flows`: aggregate action-position flow counts over front files.
pub fn cmd_flows(fronts: &[PathBuf], out: Option<&Path>) -> Result<u8> {
    if fronts.is_empty() {
        bail!("at least one front file is required");
    }
    let loaded = read_fronts(fronts)?;
    let counts = aggregate_flows(&loaded);
    counts.verify_conservation()?;
    let sources = loaded.iter().map(|(h, _)| h.manifest_hash.clone()).collect();
    let file = counts.to_file(VERSION, sources);
    let mut content = serde_json::to_string_pretty(&file).expect("flows serialize");
    content.push('\n');
    write_or_print(out, &content)?;
    Ok(0)
}

/// `cscf probe-positions`: replay every front solution against the
/// problem's classifier and report the class probability right after each
/// step, grouped by (action, position).
pub fn cmd_probe_positions(
    problem_path: &Path,
    fronts: &[PathBuf],
    out: Option<&Path>,
) -> Result<u8> {
    if fronts.is_empty() {
        bail!("at least one front file is required");
    }
    let lowered = load_problem_file(problem_path)?;
    let loaded = read_fronts(fronts)?;

    let mut samples = Vec::new();
    let mut sources = Vec::new();
    for (path, (header, solutions)) in fronts.iter().zip(&loaded) {
        if header.classifier_fingerprint != lowered.classifier_fingerprint {
            bail!(
                "{}: classifier fingerprint {} does not match the problem file's {} — \
                 this front was produced against a different classifier",
                path.display(),
                header.classifier_fingerprint,
                lowered.classifier_fingerprint
            );
        }
        sources.push(header.manifest_hash.clone());
        for (i, sol) in solutions.iter().enumerate() {
            let context = || format!("{} solution {}", path.display(), i + 1);
            let x0 = sol.start_instance(&lowered.space).with_context(context)?;
            let problem = lowered.problem_for(x0).with_context(context)?;
            let seq = sol.to_sequence(&lowered.space, &lowered.catalog).with_context(context)?;
            let replay = evaluate(&problem, &seq).with_context(context)?;
            for (t, step) in seq.steps().iter().enumerate() {
                let state = &replay.rollout.states[t + 1];
                let probability = problem.accept_proba(state).with_context(context)?;
                samples.push(PositionSample {
                    action: lowered.catalog.action(step.action).id.clone(),
                    position: t + 1,
                    probability,
                });
            }
        }
    }

    let file = PositionsFile {
        schema: POSITIONS_SCHEMA.into(),
        version: VERSION.into(),
        sources,
        summary: summarize_positions(&samples),
        samples,
    };
    let mut content = serde_json::to_string_pretty(&file).expect("positions serialize");
    content.push('\n');
    write_or_print(out, &content)?;
    Ok(0)
}

/// `cscf train`: fit a logistic regression on a labelled CSV and save it as
/// a model file (with the schema fingerprint baked in).
#[allow(clippy::too_many_arguments)]
pub fn cmd_train(
    schema_path: &Path,
    csv_path: &Path,
    label_column: &str,
    out_model: &Path,
    steps: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<u8> {
    let schema_text = fs::read_to_string(schema_path)
        .with_context(|| format!("cannot read {}", schema_path.display()))?;
    let space: FeatureSpace<Real> =
        serde_json::from_str(&schema_text).with_context(|| schema_path.display().to_string())?;

    let csv_bytes =
        fs::read(csv_path).with_context(|| format!("cannot read {}", csv_path.display()))?;
    let instances: Vec<Instance<Real>> = load_instances_csv(&space, csv_bytes.as_slice())
        .map_err(|e| anyhow!("{}: {e}", csv_path.display()))?;
    let labels = parse_labels(&csv_bytes, label_column)
        .with_context(|| csv_path.display().to_string())?;
    if labels.len() != instances.len() {
        bail!(
            "{}: {} rows but {} labels",
            csv_path.display(),
            instances.len(),
            labels.len()
        );
    }

    let encoding = Encoding::for_space(&space);
    let data: Vec<Vec<Real>> = instances
        .iter()
        .map(|inst| encode(&space, &encoding, inst))
        .collect();
    let fit = fit_logistic(&data, &labels, steps, learning_rate, seed)
        .map_err(|e| anyhow!("training failed: {e}"))?;

    let file = ModelFile::new(&space, fit.model).map_err(|e| anyhow!("{e}"))?;
    atomic_write(out_model, &save_model(&file))?;
    println!(
        "trained on {} rows, accuracy {:.4}, model written to {}",
        instances.len(),
        fit.accuracy,
        out_model.display()
    );
    Ok(0)
}

fn parse_labels(csv_bytes: &[u8], label_column: &str) -> Result<Vec<bool>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_bytes);
    let headers = rdr.headers().context("csv header")?.clone();
    let column = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| anyhow!("missing label column `{label_column}`"))?;
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.with_context(|| format!("csv row {}", i + 1))?;
        let cell = record
            .get(column)
            .ok_or_else(|| anyhow!("csv row {}: too short", i + 1))?;
        let label = match cell.to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => bail!("csv row {}: label `{other}` is not 0/1/true/false", i + 1),
        };
        labels.push(label);
    }
    Ok(labels)
}
