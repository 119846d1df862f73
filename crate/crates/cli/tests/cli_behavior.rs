//! End-to-end behavior of the `cscf` binary and the command layer: running
//! the worked relocation example, oracle enumeration, output provenance,
//! analysis commands, classifier training and the documented exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cscf_cli::front_io::{
    self, read_front_file, render_front_file, FrontHeader, FrontObjectives, FrontSolution,
    FrontStep, JsonValue,
};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/relocation.json")
}

fn cscf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cscf"))
        .args(args)
        .env_remove("CSCF_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn run_finds_the_known_front_and_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&["run", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let (header, solutions) = read_front_file(&out.join("i0-seed0.front.jsonl")).unwrap();
    assert_eq!(header.engine, "brkga");
    assert_eq!(header.instance_id, "i0");
    assert_eq!(header.seed, Some(0));
    assert!(header.discount_enabled);
    assert_eq!(header.features, vec!["Job", "Edu", "Location"]);

    assert_eq!(solutions.len(), 1, "the graph makes one order strictly cheapest");
    let sol = &solutions[0];
    let order: Vec<&str> = sol.sequence.iter().map(|s| s.action.as_str()).collect();
    assert_eq!(order, vec!["add-edu", "move", "switch-job"]);
    assert_eq!(sol.objectives.cost, 22.5);
    assert_eq!(sol.cost_undiscounted, 30.0);
    assert!(sol.accept_probability >= 0.5);

    assert!(out.join("i0-seed0.stats.jsonl").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], "cscf.manifest.v1");
    assert_eq!(manifest["runs"][0]["front_size"], 1);
    assert_eq!(manifest["runs"][0]["skipped_already_accepted"], false);
}

#[test]
fn repeated_runs_write_identical_front_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let output = cscf(&["run", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert_eq!(output.status.code(), Some(0));
    }
    let bytes_a = fs::read(a.join("i0-seed0.front.jsonl")).unwrap();
    let bytes_b = fs::read(b.join("i0-seed0.front.jsonl")).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn no_discount_flag_switches_to_plain_efforts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&[
        "run",
        fixture().to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
        "--no-discount",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let (header, solutions) = read_front_file(&out.join("i0-seed0.front.jsonl")).unwrap();
    assert!(!header.discount_enabled);
    assert!(!solutions.is_empty());
    for sol in &solutions {
        assert_eq!(sol.cost_discounted, sol.cost_undiscounted);
        assert_eq!(sol.objectives.cost, 30.0, "all three efforts, undiscounted");
        for step in &sol.per_step {
            assert_eq!(step.discount, 1.0);
        }
    }
}

#[test]
fn oracle_writes_the_exact_front_and_counts_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&["oracle", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let (header, solutions) = read_front_file(&out.join("i0-oracle.front.jsonl")).unwrap();
    assert_eq!(header.engine, "oracle");
    assert_eq!(header.seed, None);
    assert_eq!(solutions.len(), 1);
    assert_eq!(solutions[0].objectives.cost, 22.5);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"][0]["evaluations"], 15);
}

#[test]
fn malformed_problem_files_exit_1_naming_the_trouble() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    // not JSON at all
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ this is not json").unwrap();
    let output = cscf(&["run", broken.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("broken.json"));

    // well-formed JSON, dangling level reference
    let bad = dir.path().join("bad.json");
    let text = fs::read_to_string(fixture()).unwrap().replace("\"BSc\"]}", "\"PhD\"]}");
    fs::write(&bad, text).unwrap();
    let output = cscf(&["run", bad.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let err = stderr_of(&output);
    assert!(err.contains("PhD"), "{err}");
    assert!(err.contains("add-edu"), "{err}");
}

#[test]
fn already_accepted_instances_are_skipped_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let accepted = dir.path().join("accepted.json");
    let text = fs::read_to_string(fixture())
        .unwrap()
        .replace(
            r#"{"Job": "Seller", "Edu": "HS", "Location": "Germany"}"#,
            r#"{"Job": "Developer", "Edu": "BSc", "Location": "US"}"#,
        );
    fs::write(&accepted, text).unwrap();

    let output = cscf(&["run", accepted.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    assert!(stderr_of(&output).contains("already accepted"));
    assert!(!out.join("i0-seed0.front.jsonl").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"][0]["skipped_already_accepted"], true);
}

// ---------------------------------------------------------------------------
// analysis commands

/// A minimal front file for the analysis commands; only the pieces the
/// analyses read need to be meaningful.
fn synthetic_front(instance_id: &str, costs_and_lengths: &[(f64, usize)]) -> String {
    let header = FrontHeader {
        schema: front_io::FRONT_SCHEMA.into(),
        engine: "brkga".into(),
        instance_id: instance_id.into(),
        seed: Some(0),
        version: front_io::VERSION.into(),
        manifest_hash: format!("sha256:test-{instance_id}"),
        problem_digest: "sha256:test".into(),
        classifier_fingerprint: "sha256:test".into(),
        discount_enabled: true,
        features: vec![],
        actions: vec![],
    };
    let solutions: Vec<FrontSolution> = costs_and_lengths
        .iter()
        .map(|&(cost, len)| FrontSolution {
            sequence: (0..len)
                .map(|i| FrontStep {
                    action: format!("a{i}"),
                    value: JsonValue::Num(1.0),
                })
                .collect(),
            trajectory: vec![vec![]; len + 1],
            objectives: FrontObjectives {
                cost,
                distance: 0.0,
                frequencies: vec![],
            },
            cost_discounted: cost,
            cost_undiscounted: cost,
            per_step: vec![],
            accept_probability: 1.0,
        })
        .collect();
    render_front_file(&header, &solutions)
}

#[test]
fn compare_costs_reports_relative_differences_and_na() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        p
    };
    // i0: 10 vs 20 → +0.5; i1: equal; i2: B has only too-long solutions → n/a
    let a0 = write("a0.front.jsonl", &synthetic_front("i0", &[(10.0, 1)]));
    let a1 = write("a1.front.jsonl", &synthetic_front("i1", &[(7.0, 1)]));
    let a2 = write("a2.front.jsonl", &synthetic_front("i2", &[(5.0, 1)]));
    let b0 = write("b0.front.jsonl", &synthetic_front("i0", &[(20.0, 1)]));
    let b1 = write("b1.front.jsonl", &synthetic_front("i1", &[(7.0, 1)]));
    let b2 = write("b2.front.jsonl", &synthetic_front("i2", &[(5.0, 3)]));

    let out_csv = dir.path().join("cmp.csv");
    let output = cscf(&[
        "compare-costs",
        "--a", a0.to_str().unwrap(), a1.to_str().unwrap(), a2.to_str().unwrap(),
        "--b", b0.to_str().unwrap(), b1.to_str().unwrap(), b2.to_str().unwrap(),
        "--max-length", "2",
        "--out", out_csv.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let csv = fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "instance_id,cost_a,cost_b,relative_difference");
    assert_eq!(lines[1], "i0,10,20,0.5");
    assert_eq!(lines[2], "i1,7,7,0");
    assert_eq!(lines[3], "i2,5,n/a,n/a");
}

#[test]
fn compare_costs_rejects_mismatched_instance_sets() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.front.jsonl");
    let b = dir.path().join("b.front.jsonl");
    fs::write(&a, synthetic_front("i0", &[(10.0, 1)])).unwrap();
    fs::write(&b, synthetic_front("i9", &[(10.0, 1)])).unwrap();
    let output = cscf(&[
        "compare-costs",
        "--a", a.to_str().unwrap(),
        "--b", b.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("instance ids"));
}

#[test]
fn flows_over_a_real_front_conserve_and_serialize() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&["run", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));

    let front = out.join("i0-seed0.front.jsonl");
    let flows_path = dir.path().join("flows.json");
    let output = cscf(&[
        "flows",
        front.to_str().unwrap(),
        "--out",
        flows_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let flows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&flows_path).unwrap()).unwrap();
    assert_eq!(flows["schema"], "cscf.flows.v1");
    assert_eq!(
        flows["positions"],
        serde_json::json!([
            {"action": "add-edu", "position": 1, "count": 1},
            {"action": "move", "position": 2, "count": 1},
            {"action": "switch-job", "position": 3, "count": 1},
        ])
    );
    assert_eq!(flows["terminations"], serde_json::json!([{"position": 3, "count": 1}]));
}

#[test]
fn probe_positions_reports_the_acceptance_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&["run", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let front = out.join("i0-seed0.front.jsonl");

    let probe_path = dir.path().join("positions.json");
    let output = cscf(&[
        "probe-positions",
        fixture().to_str().unwrap(),
        front.to_str().unwrap(),
        "--out",
        probe_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));

    let probe: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&probe_path).unwrap()).unwrap();
    assert_eq!(probe["schema"], "cscf.positions.v1");
    let samples = probe["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 3);
    // only the final step crosses the decision threshold
    for s in &samples[..2] {
        assert!(s["probability"].as_f64().unwrap() < 0.5);
    }
    assert_eq!(samples[2]["action"], "switch-job");
    assert_eq!(samples[2]["position"], 3);
    assert!(samples[2]["probability"].as_f64().unwrap() >= 0.5);
    // singleton groups: median equals the one sample
    let summary = probe["summary"].as_array().unwrap();
    assert_eq!(summary.len(), 3);
    for group in summary {
        assert_eq!(group["count"], 1);
        assert_eq!(group["median"], group["p2_5"]);
        assert_eq!(group["median"], group["p97_5"]);
    }
}

#[test]
fn probe_positions_rejects_foreign_fronts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = cscf(&["run", fixture().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));

    // tamper with the recorded classifier fingerprint
    let front = out.join("i0-seed0.front.jsonl");
    let text = fs::read_to_string(&front).unwrap();
    let (header_line, rest) = text.split_once('\n').unwrap();
    let mut header: serde_json::Value = serde_json::from_str(header_line).unwrap();
    header["classifier_fingerprint"] = serde_json::json!("sha256:somebody-else");
    let tampered = dir.path().join("tampered.front.jsonl");
    fs::write(&tampered, format!("{header}\n{rest}")).unwrap();

    let output = cscf(&[
        "probe-positions",
        fixture().to_str().unwrap(),
        tampered.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("fingerprint"));
}

// ---------------------------------------------------------------------------
// training

#[test]
fn train_fits_separable_data_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    fs::write(
        &schema,
        r#"[{"name": "x", "kind": "numeric", "min": 0.0, "max": 10.0}]"#,
    )
    .unwrap();
    let data = dir.path().join("train.csv");
    fs::write(&data, "x,label\n1.0,0\n2.0,0\n3.0,0\n7.0,1\n8.0,1\n9.0,1\n").unwrap();

    let model_a = dir.path().join("a.model.json");
    let output = cscf(&[
        "train",
        "--schema", schema.to_str().unwrap(),
        "--data", data.to_str().unwrap(),
        "--out", model_a.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_of(&output));
    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    assert!(stdout.contains("accuracy 1.0000"), "{stdout}");

    // same inputs, same seed, same bytes
    let model_b = dir.path().join("b.model.json");
    let output = cscf(&[
        "train",
        "--schema", schema.to_str().unwrap(),
        "--data", data.to_str().unwrap(),
        "--out", model_b.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(fs::read(&model_a).unwrap(), fs::read(&model_b).unwrap());

    // the saved model carries the schema fingerprint and loads back
    let loaded = cscf_core::classifier::load_model::<cscf_core::Real>(
        &fs::read_to_string(&model_a).unwrap(),
    )
    .unwrap();
    let space: cscf_core::FeatureSpace<cscf_core::Real> =
        serde_json::from_str(&fs::read_to_string(&schema).unwrap()).unwrap();
    assert!(loaded.matches_space(&space));
}

#[test]
fn train_rejects_missing_label_column_and_single_class() {
    let dir = tempfile::tempdir().unwrap();
    let schema = dir.path().join("schema.json");
    fs::write(
        &schema,
        r#"[{"name": "x", "kind": "numeric", "min": 0.0, "max": 10.0}]"#,
    )
    .unwrap();
    let model = dir.path().join("m.json");

    let unlabeled = dir.path().join("unlabeled.csv");
    fs::write(&unlabeled, "x,verdict\n1.0,0\n").unwrap();
    let output = cscf(&[
        "train",
        "--schema", schema.to_str().unwrap(),
        "--data", unlabeled.to_str().unwrap(),
        "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("label"));

    let one_class = dir.path().join("one_class.csv");
    fs::write(&one_class, "x,label\n1.0,1\n2.0,1\n").unwrap();
    let output = cscf(&[
        "train",
        "--schema", schema.to_str().unwrap(),
        "--data", one_class.to_str().unwrap(),
        "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("single class"));
}
