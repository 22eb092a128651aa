//! Command-surface tests: exit codes, file formats, schema conformance and
//! the probability-space ablation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use htdet_core::bits::Bits;
use htdet_core::store::WaveformStore;

fn htdet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_htdet"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawning htdet")
}

fn fig7_bench(dir: &Path) -> PathBuf {
    let path = dir.join("fig7.bench");
    fs::write(
        &path,
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\nd = AND(a, b)\ne = NOT(c)\nf = OR(d, e)\n",
    )
    .unwrap();
    path
}

#[test]
fn simulate_writes_store_with_magic() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let out = dir.path().join("waves.htdw");
    let res = run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "64", "--seed", "7", "--out"])
        .arg(&out));
    assert!(res.status.success(), "{:?}", res);
    let bytes = fs::read(&out).unwrap();
    assert_eq!(&bytes[0..4], b"HTDW");
    let store = WaveformStore::read_file(&out).unwrap();
    assert_eq!(store.cycles, 64);
    assert_eq!(store.pi_names, vec!["a", "b", "c"]);
}

#[test]
fn simulate_cycles_too_small_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let res = run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "1", "--seed", "0", "--out"])
        .arg(dir.path().join("w.htdw")));
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("too small"), "stderr: {}", err);
}

#[test]
fn missing_required_flag_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let res = run(htdet()
        .args(["simulate", "--cycles", "64", "--out"])
        .arg(dir.path().join("w.htdw")));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn detect_rejects_corrupted_magic() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("bogus.htdw");
    fs::write(&bogus, b"NOPEnotastore").unwrap();
    let res = run(htdet()
        .args(["detect", "--waves"])
        .arg(&bogus)
        .args(["--report"])
        .arg(dir.path().join("r.json")));
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad magic"), "stderr: {}", err);
}

#[test]
fn unreadable_netlist_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.bench");
    fs::write(&bad, "INPUT(a)\nx = FROB(a, a)\n").unwrap();
    let res = run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bad)
        .args(["--cycles", "16", "--out"])
        .arg(dir.path().join("w.htdw")));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("unsupported gate kind"));
}

fn detect_to_report(dir: &Path, waves: &Path, extra: &[&str]) -> PathBuf {
    let report = dir.join(format!(
        "report_{}.json",
        extra.join("_").replace(['-', '.'], "")
    ));
    let mut cmd = htdet();
    cmd.args(["detect", "--waves"])
        .arg(waves)
        .args(["--report"])
        .arg(&report)
        .args(["--no-timestamp"])
        .args(extra);
    let res = run(&mut cmd);
    assert!(res.status.success(), "{:?}", res);
    report
}

#[test]
fn full_pipeline_produces_schema_valid_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "4096", "--seed", "3", "--out"])
        .arg(&waves))
    .status
    .success());

    let report_path = detect_to_report(dir.path(), &waves, &["--minpts", "2"]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();

    let schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../schemas/report.schema.json"
        ))
        .unwrap(),
    )
    .unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&report)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "schema violations: {:?}", errors);

    // testgen consumes the report and emits a schema-valid stimulus
    let spec_path = dir.path().join("spec.json");
    let res = run(htdet()
        .args(["testgen", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report_path)
        .args(["--out"])
        .arg(&spec_path));
    assert!(res.status.success(), "{:?}", res);
    let spec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&spec_path).unwrap()).unwrap();
    let spec_schema: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../schemas/stimulus.schema.json"
        ))
        .unwrap(),
    )
    .unwrap();
    let spec_validator = jsonschema::validator_for(&spec_schema).unwrap();
    assert!(spec_validator.validate(&spec).is_ok());

    // the updated report still conforms and carries the testgen section
    let updated: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(validator.validate(&updated).is_ok());
    assert!(updated["testgen"].is_object());

    // CSV sidecars exist by default
    assert!(dir
        .path()
        .join(format!(
            "{}.sorted.csv",
            report_path.file_stem().unwrap().to_string_lossy()
        ))
        .exists());
}

#[test]
fn testgen_without_suspects_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "256", "--seed", "1", "--out"])
        .arg(&waves))
    .status
    .success());
    // min_pts too strict for three points: everything is noise
    let report = dir.path().join("empty.json");
    let res = run(htdet()
        .args(["detect", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report)
        .args(["--minpts", "10", "--no-timestamp", "--no-csv"]));
    assert!(res.status.success());
    let res = run(htdet()
        .args(["testgen", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report)
        .args(["--out"])
        .arg(dir.path().join("spec.json")));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("nothing to cover"));
}

#[test]
fn testgen_on_handmade_report_pins_non_cover_inputs() {
    // a report naming `e` as the only suspect: the cover must be {c} and
    // a, b become constants
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "4096", "--seed", "11", "--out"])
        .arg(&waves))
    .status
    .success());
    let report_path = detect_to_report(dir.path(), &waves, &["--minpts", "2"]);
    let mut report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    report["suspects"] = serde_json::json!(["e"]);
    fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap()).unwrap();

    let spec_path = dir.path().join("spec.json");
    let res = run(htdet()
        .args(["testgen", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report_path)
        .args(["--out"])
        .arg(&spec_path));
    assert!(res.status.success(), "{:?}", res);
    let spec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&spec_path).unwrap()).unwrap();
    assert_eq!(spec["inputs"]["c"], "random");
    assert!(spec["inputs"]["a"].as_str().unwrap().starts_with("const"));
    assert!(spec["inputs"]["b"].as_str().unwrap().starts_with("const"));
}

/// Builds a store whose fourteen wires have exact transition probabilities
/// 1/1000, 1/800, 1/500, 1/200, 1/100, 1/80, 1/50, 1/20, 1/10, 1/8, 1/5,
/// 3/10, 1/2, 6/10 over 12000 encoded symbols.
fn reference_band_store(path: &Path) {
    let n = 12_000usize;
    let probs: [(u32, u32); 14] = [
        (1, 1000),
        (1, 800),
        (1, 500),
        (1, 200),
        (1, 100),
        (1, 80),
        (1, 50),
        (1, 20),
        (1, 10),
        (1, 8),
        (1, 5),
        (3, 10),
        (1, 2),
        (6, 10),
    ];
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (i, &(num, den)) in probs.iter().enumerate() {
        let transitions = (n as u32 * num / den) as usize;
        let mut samples = Vec::with_capacity(n + 1);
        let mut level = false;
        samples.push(level);
        for k in 0..n {
            if k < transitions {
                level = !level;
            }
            samples.push(level);
        }
        names.push(format!("W{}", i + 1));
        rows.push(Bits::from_bools(&samples));
    }
    names.push("stim".to_string());
    rows.push(Bits::from_bools(&vec![false; n + 1]));
    let store = WaveformStore::new(
        "reference_band",
        0,
        (n + 1) as u64,
        0,
        names,
        rows,
        vec!["stim".to_string()],
    );
    store.write_file(path).unwrap();
}

#[test]
fn probability_space_ablation_inflates_suspects() {
    let dir = tempfile::tempdir().unwrap();
    let waves = dir.path().join("band.htdw");
    reference_band_store(&waves);

    let entropy_report = detect_to_report(
        dir.path(),
        &waves,
        &["--minpts", "2", "--no-csv", "--space", "entropy"],
    );
    let probability_report = detect_to_report(
        dir.path(),
        &waves,
        &["--minpts", "2", "--no-csv", "--space", "probability"],
    );
    let suspects = |p: &Path| -> Vec<String> {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v["suspects"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s.as_str().unwrap().to_string())
            .collect()
    };
    let entropy_suspects = suspects(&entropy_report);
    let probability_suspects = suspects(&probability_report);
    assert_eq!(
        entropy_suspects,
        vec!["W1", "W2", "W3", "W4", "W5", "W6", "W7"]
    );
    assert_eq!(
        probability_suspects,
        vec!["W1", "W2", "W3", "W4", "W5", "W6", "W7", "W8", "W9", "W10"]
    );
}

#[test]
fn reports_are_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "2048", "--seed", "5", "--out"])
        .arg(&waves))
    .status
    .success());
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for r in [&r1, &r2] {
        let res = run(htdet()
            .args(["detect", "--waves"])
            .arg(&waves)
            .args(["--report"])
            .arg(r)
            .args(["--minpts", "2", "--no-timestamp"]));
        assert!(res.status.success());
    }
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    // and the default mode carries a timestamp field
    let r3 = dir.path().join("r3.json");
    assert!(run(htdet()
        .args(["detect", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&r3)
        .args(["--minpts", "2", "--no-csv"]))
    .status
    .success());
    assert!(fs::read_to_string(&r3).unwrap().contains("\"timestamp\""));
}

#[test]
fn vcd_import_feeds_detect() {
    let dir = tempfile::tempdir().unwrap();
    let vcd = dir.path().join("dump.vcd");
    let mut text = String::from(
        "$scope module top $end\n$var wire 1 ! a $end\n$var wire 1 \" b $end\n$upscope $end\n$enddefinitions $end\n#0\n0!\n0\"\n",
    );
    // a toggles every tick, b toggles rarely
    for t in 1..=600 {
        text.push_str(&format!("#{}\n", t));
        text.push_str(if t % 2 == 0 { "0!\n" } else { "1!\n" });
        if t % 150 == 0 {
            text.push_str(if (t / 150) % 2 == 1 { "1\"\n" } else { "0\"\n" });
        }
    }
    fs::write(&vcd, text).unwrap();
    let waves = dir.path().join("fromvcd.htdw");
    let res = run(htdet()
        .args(["import-vcd", "--vcd"])
        .arg(&vcd)
        .args(["--scope", "top", "--sample-period", "1", "--out"])
        .arg(&waves));
    assert!(res.status.success(), "{:?}", res);
    let store = WaveformStore::read_file(&waves).unwrap();
    assert_eq!(store.cycles, 601);
    let report = detect_to_report(dir.path(), &waves, &["--minpts", "1", "--no-csv"]);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    // no provenance in a VCD store: both wires are analyzed
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["suspects"].as_array().unwrap()[0], "top.b");
}

#[test]
fn eval_identical_stores_reports_equal_rows() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "2048", "--seed", "5", "--out"])
        .arg(&waves))
    .status
    .success());
    let report = detect_to_report(dir.path(), &waves, &["--minpts", "2", "--no-csv"]);
    let res = run(htdet()
        .args(["eval", "--before"])
        .arg(&waves)
        .args(["--after"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report));
    assert!(res.status.success(), "{:?}", res);
    let out = String::from_utf8_lossy(&res.stdout);
    let lines: Vec<&str> = out.lines().collect();
    let before = lines.iter().find(|l| l.starts_with("before")).unwrap();
    let after = lines.iter().find(|l| l.starts_with("after")).unwrap();
    assert_eq!(
        before.trim_start_matches("before").trim(),
        after.trim_start_matches("after").trim()
    );
}

#[test]
fn eval_cycle_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let w1 = dir.path().join("w1.htdw");
    let w2 = dir.path().join("w2.htdw");
    for (w, c) in [(&w1, "1024"), (&w2, "2048")] {
        assert!(run(htdet()
            .args(["simulate", "--netlist"])
            .arg(&bench)
            .args(["--cycles", c, "--seed", "5", "--out"])
            .arg(w))
        .status
        .success());
    }
    let report = detect_to_report(dir.path(), &w1, &["--minpts", "2", "--no-csv"]);
    let res = run(htdet()
        .args(["eval", "--before"])
        .arg(&w1)
        .args(["--after"])
        .arg(&w2)
        .args(["--report"])
        .arg(&report));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("cycle counts"));
}

#[test]
fn thread_cap_env_var_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .env("HTDET_THREADS", "1")
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "512", "--seed", "2", "--out"])
        .arg(&waves))
    .status
    .success());
    let res = run(htdet()
        .env("HTDET_THREADS", "1")
        .args(["detect", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(dir.path().join("r.json"))
        .args(["--minpts", "2", "--no-timestamp", "--no-csv"]));
    assert!(res.status.success());
}

#[test]
fn labels_embed_metrics_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "2048", "--seed", "5", "--out"])
        .arg(&waves))
    .status
    .success());
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, "# planted\nd\n").unwrap();
    let report = dir.path().join("r.json");
    let res = run(htdet()
        .args(["detect", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report)
        .args(["--minpts", "2", "--no-timestamp", "--no-csv", "--labels"])
        .arg(&labels));
    assert!(res.status.success(), "{:?}", res);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["eval"]["tpr"].is_number());
    // unresolvable label names are hard errors
    fs::write(&labels, "ghost_wire\n").unwrap();
    let res = run(htdet()
        .args(["detect", "--waves"])
        .arg(&waves)
        .args(["--report"])
        .arg(&report)
        .args(["--minpts", "2", "--no-timestamp", "--no-csv", "--labels"])
        .arg(&labels));
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn debug_json_export() {
    let dir = tempfile::tempdir().unwrap();
    let bench = fig7_bench(dir.path());
    let waves = dir.path().join("waves.htdw");
    let dump = dir.path().join("waves.json");
    assert!(run(htdet()
        .args(["simulate", "--netlist"])
        .arg(&bench)
        .args(["--cycles", "8", "--seed", "1", "--out"])
        .arg(&waves)
        .args(["--debug-json"])
        .arg(&dump))
    .status
    .success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&dump).unwrap()).unwrap();
    let wave = v["waveforms"]["d"].as_str().unwrap();
    assert_eq!(wave.len(), 8);
    assert!(wave.chars().all(|c| c == '0' || c == '1'));
}
