use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_entryshift"));
    cmd.args(args).env_remove("ENTRYSHIFT_SEED").env_remove("ENTRYSHIFT_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn ok(args: &[&str]) -> Value {
    let r = run(args, &[]);
    assert_eq!(r.code, 0, "{args:?} failed: {}", r.stderr);
    serde_json::from_str(r.stdout.trim()).expect("stdout is JSON")
}

/// The last stderr line must be a one-line JSON error object.
fn error_line(r: &Run) -> Value {
    let line = r.stderr.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn path(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn quick_conf(dir: &tempfile::TempDir) -> String {
    let p = path(dir, "quick.conf");
    std::fs::write(&p, "hidden_dim = 16\nfeature_dim = 1024\nepochs = 1\n").unwrap();
    p
}

#[test]
fn ingest_validates_mini_corpus() {
    let v = ok(&["ingest", "--data", &fixture("mini.jsonl"), "--validate"]);
    assert_eq!(v["entries"], 18);
    assert_eq!(v["taxonomy_tags"], 79);
    assert_eq!(v["splits"]["train"], 8);
    assert_eq!(v["splits"]["validation"], 5);
    assert_eq!(v["splits"]["test"], 5);
    assert_eq!(v["groups"]["sectors"]["tags"], 11);
}

#[test]
fn ingest_writes_a_normalized_copy() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(&dir, "copy.jsonl");
    ok(&["ingest", "--data", &fixture("mini.jsonl"), "--out", &out]);
    let again = path(&dir, "again.jsonl");
    ok(&["ingest", "--data", &out, "--out", &again]);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn unknown_tag_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(&dir, "bad.jsonl");
    std::fs::write(
        &data,
        "{\"id\":\"e1\",\"text\":\"crops failed\",\"lang\":\"en\",\"split\":\"train\",\"labels\":{\"sectors\":[\"Farming\"]}}\n",
    )
    .unwrap();
    let r = run(&["ingest", "--data", &data], &[]);
    assert_eq!(r.code, 1);
    let e = error_line(&r);
    assert_eq!(e["error"], "runtime");
    assert!(e["message"].as_str().unwrap().contains("Farming"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["flag", "--data", "x.jsonl", "--attribute", "age", "--out", "y"],
        vec!["train", "--data", "x.jsonl"],
        vec!["ingest", "--data", "x", "--validate", "--out", "y"],
    ] {
        let r = run(&args, &[]);
        assert_eq!(r.code, 2, "{args:?}");
        assert_eq!(error_line(&r)["error"], "usage");
        assert_eq!(r.stderr.lines().count(), 1, "{args:?}: {}", r.stderr);
    }
}

#[test]
fn help_succeeds() {
    let r = run(&["--help"], &[]);
    assert_eq!(r.code, 0);
    for sub in ["ingest", "flag", "augment", "train", "tune", "eval", "audit", "cda-experiment", "zeroshot", "report"] {
        assert!(r.stdout.contains(sub), "help lacks {sub}");
    }
    assert!(run(&["audit", "--help"], &[]).stdout.contains("--svg"));
}

#[test]
fn flag_and_augment_mini() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(&dir, "gender.jsonl");
    let c = path(&dir, "country.jsonl");
    let v = ok(&["flag", "--data", &fixture("mini.jsonl"), "--attribute", "gender", "--out", &g]);
    assert_eq!(v["flagged"], 7);
    ok(&["flag", "--data", &fixture("mini.jsonl"), "--attribute", "country", "--out", &c]);
    let counts = std::fs::read_to_string(format!("{g}.counts.csv")).unwrap();
    assert!(counts.lines().any(|l| l == "gender,Sum,3,2,2,7"), "{counts}");

    let out = path(&dir, "augmented.jsonl");
    let v = ok(&["augment", "--data", &fixture("mini.jsonl"), "--subset", &g, "--subset", &c, "--out", &out]);
    assert_eq!(v["total"], 28);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 28);

    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert_eq!(
        names,
        ["augmented.jsonl", "country.jsonl", "country.jsonl.counts.csv", "gender.jsonl", "gender.jsonl.counts.csv"]
    );
}

#[test]
fn augment_rejects_foreign_subset() {
    let dir = tempfile::tempdir().unwrap();
    let g = path(&dir, "gender.jsonl");
    ok(&["flag", "--data", &fixture("mini.jsonl"), "--attribute", "gender", "--out", &g]);
    let r = run(&["augment", "--data", &fixture("planted.jsonl"), "--subset", &g, "--out", &path(&dir, "o")], &[]);
    assert_eq!(r.code, 1);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn train_tune_eval_audit_report_chain() {
    let dir = tempfile::tempdir().unwrap();
    let conf = quick_conf(&dir);
    let model = path(&dir, "model.bin");
    let data = fixture("planted.jsonl");
    let v = ok(&["train", "--data", &data, "--config", &conf, "--seed", "5", "--out", &model]);
    assert_eq!(v["history"].as_array().unwrap().len(), 1);
    let echo = std::fs::read_to_string(format!("{model}.config")).unwrap();
    assert!(echo.contains("hidden_dim = 16") && echo.contains("seed = 5") && echo.contains("epochs = 1"), "{echo}");

    let thr = path(&dir, "thresholds.csv");
    ok(&["tune", "--model", &model, "--data", &data, "--out", &thr]);
    let table = std::fs::read_to_string(&thr).unwrap();
    assert_eq!(table.lines().next(), Some("tag,threshold"));
    assert_eq!(table.lines().count(), 11);

    let report = path(&dir, "report.json");
    ok(&["eval", "--model", &model, "--thresholds", &thr, "--data", &data, "--out", &report]);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["groups", "avg", "per_tag"] {
        assert!(!r[key].is_null(), "metrics report lacks {key}");
    }
    assert_eq!(r["per_tag"].as_array().unwrap().len(), 10);

    let audit = path(&dir, "audit.json");
    let (csv, svg) = (path(&dir, "audit.csv"), path(&dir, "audit.svg"));
    let v = ok(&[
        "audit",
        "--model",
        &model,
        "--data",
        &data,
        "--attribute",
        "gender",
        "--out",
        &audit,
        "--csv",
        &csv,
        "--svg",
        &svg,
    ]);
    assert!(v["overall_shift"].as_f64().unwrap() >= 0.0);
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(csv_text.lines().count(), 1 + 6 * 6);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    // Re-rendering the saved report gives the same heatmap data.
    let again = path(&dir, "again.csv");
    ok(&["report", "--input", &audit, "--csv", &again]);
    assert_eq!(std::fs::read_to_string(&again).unwrap(), csv_text);

    let all = path(&dir, "audit_all.json");
    ok(&["audit", "--model", &model, "--data", &data, "--attribute", "country", "--tags", "all", "--out", &all]);
    let a: Value = serde_json::from_str(&std::fs::read_to_string(&all).unwrap()).unwrap();
    assert_eq!(a["report"]["tag_count"], 10);
}

#[test]
fn seeds_come_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let conf = quick_conf(&dir);
    let data = fixture("planted.jsonl");
    let train = |out: &str, seed: Option<&str>, env: &[(&str, &str)]| {
        let mut args = vec!["train", "--data", &data, "--config", &conf, "--out", out];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let r = run(&args, env);
        assert_eq!(r.code, 0, "{}", r.stderr);
        std::fs::read(out).unwrap()
    };
    let a = train(&path(&dir, "a.bin"), Some("3"), &[]);
    let b = train(&path(&dir, "b.bin"), None, &[("ENTRYSHIFT_SEED", "3")]);
    let c = train(&path(&dir, "c.bin"), Some("4"), &[("ENTRYSHIFT_SEED", "3")]);
    let d = train(&path(&dir, "d.bin"), Some("3"), &[("ENTRYSHIFT_THREADS", "1")]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a, d);
}

#[test]
fn bad_config_key_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = path(&dir, "bad.conf");
    std::fs::write(&conf, "epochs = 1\nlearning_rat = 0.1\n").unwrap();
    let r = run(&["train", "--data", &fixture("mini.jsonl"), "--config", &conf, "--out", &path(&dir, "m.bin")], &[]);
    assert_eq!(r.code, 1);
    let msg = error_line(&r)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("line 2") && msg.contains("learning_rat"), "{msg}");
    assert!(!dir.path().join("m.bin").exists());
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let model = path(&dir, "m.bin");
    std::fs::write(&model, b"not a model").unwrap();
    let r = run(&["tune", "--model", &model, "--data", &fixture("mini.jsonl"), "--out", &path(&dir, "t.csv")], &[]);
    assert_eq!(r.code, 1);
    assert_eq!(error_line(&r)["error"], "runtime");
}

#[test]
fn zeroshot_with_stub_and_file_providers() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "zeroshot",
        "--data",
        &fixture("zeroshot/entries.jsonl"),
        "--taxonomy",
        &fixture("planted_taxonomy.json"),
        "--verbalizer",
        &fixture("zeroshot/verbalizer.csv"),
    ];
    let stub_out = path(&dir, "stub.json");
    let mut args = base.to_vec();
    args.extend(["--provider", "stub", "--out", &stub_out]);
    ok(&args);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&stub_out).unwrap()).unwrap();
    assert_eq!(r["provider"], "stub");
    assert_eq!(r["entries"], 5);
    assert_eq!(r["predictions"][1]["tags"], serde_json::json!(["Displacement", "Displacement->Push factors"]));

    let file_out = path(&dir, "file.json");
    let provider = format!("file:{}", fixture("zeroshot/provider.jsonl"));
    let mut args = base.to_vec();
    args.extend(["--provider", &provider, "--out", &file_out]);
    ok(&args);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&file_out).unwrap()).unwrap();
    assert_eq!(r["provider"], "file");
    // z3: abuse, threatened and precarious are the only scored words in their groups.
    assert_eq!(
        r["predictions"][2]["tags"],
        serde_json::json!(["Protection", "At Risk", "At Risk->Risk and vulnerabilities"])
    );

    let mut args = base.to_vec();
    args.extend(["--provider", "gpt", "--out", &file_out]);
    assert_eq!(run(&args, &[]).code, 2);
    let mut args = base.to_vec();
    args.extend(["--provider", "stub", "--template", "no mask here", "--out", &file_out]);
    assert_eq!(run(&args, &[]).code, 2);
}

#[test]
fn report_needs_an_output() {
    let r = run(&["report", "--input", "x.json"], &[]);
    assert_eq!(r.code, 2);
}
