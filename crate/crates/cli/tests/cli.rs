use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fatiguelab"));
    cmd.env_remove("FATIGUELAB_THREADS").env_remove("RUST_LOG");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Parses the one-line JSON error and checks the exit code agrees with it.
fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr
        .lines()
        .find_map(|l| l.strip_prefix("error: "))
        .unwrap_or_else(|| panic!("no error line in {stderr:?}"));
    let v: Value = serde_json::from_str(line).expect("error line is JSON");
    assert_eq!(v["exit"].as_i64(), out.status.code().map(i64::from));
    v
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn manifest(&self) -> String {
        self.root
            .join("data/manifest.json")
            .to_string_lossy()
            .into_owned()
    }
}

/// One small synthetic study shared by every test.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let root = dir.path().to_path_buf();
        let data = root.join("data");
        ok(&[
            "synth",
            "--subjects",
            "10",
            "--seed",
            "7",
            "--block-seconds",
            "20",
            "--out",
            data.to_str().unwrap(),
        ]);
        Fixture { _dir: dir, root }
    })
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let rel = entry
            .strip_prefix(dir)
            .unwrap()
            .to_string_lossy()
            .into_owned();
        out.push((rel, fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn synth_then_evaluate_lstm_writes_report_with_recall() {
    let f = fixture();
    let out = f.root.join("eval_lstm");
    let stdout = ok(&[
        "evaluate",
        "--manifest",
        &f.manifest(),
        "--target",
        "CF",
        "--modality",
        "all",
        "--model",
        "lstm",
        "--window",
        "full",
        "--lstm-hidden",
        "8",
        "--lstm-epochs",
        "5",
        "--cv-folds",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(stdout.contains("LSTM"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let cell = &report["cells"][0];
    assert_eq!(cell["model"], "lstm");
    let recall = cell["test"]["recall"].as_f64().expect("recall field");
    assert!((0.0..=1.0).contains(&recall));
    assert!(out.join("predictions.csv").exists());
    assert!(out.join("report.txt").exists());
}

#[test]
fn missing_manifest_exits_2_with_path() {
    let out = run(&["ingest-check", "--manifest", "/no/such/dir/manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["kind"], "ingest");
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("/no/such/dir/manifest.json"));

    let out = run(&[
        "evaluate",
        "--manifest",
        "/no/such/m.json",
        "--out",
        "/tmp/unused",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["message"]
        .as_str()
        .unwrap()
        .contains("/no/such/m.json"));
}

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["evaluate", "--bogus"],
        vec!["frobnicate"],
        vec!["evaluate", "--manifest", "m.json", "--target", "XF"],
        vec!["evaluate", "--manifest", "m.json", "--window", "ten"],
        vec![
            "train",
            "--manifest",
            "m.json",
            "--model",
            "lstm",
            "--pca",
            "10",
            "--out",
            "x",
        ],
        vec!["features", "--manifest", "m.json"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(error_line(&out)["kind"], "usage", "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));

    let out = bin()
        .args(["ingest-check", "--manifest", "m.json"])
        .env("FATIGUELAB_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ingest_check_summarizes_blocks_and_vas() {
    let stdout = ok(&["ingest-check", "--manifest", &fixture().manifest()]);
    assert!(stdout.contains("subjects: 10"));
    assert!(stdout.contains("blocks: 100"));
    assert!(stdout.contains("alignment: ok"));
    assert!(stdout.contains("EEG_TP9 @ 256 Hz"));
    assert!(stdout.contains("CF labels: 100 blocks, 40 positive, 60 negative"));
    assert!(stdout.contains("reading  question"));
}

#[test]
fn report_round_trips_evaluate_output() {
    let f = fixture();
    let out = f.root.join("eval_rt");
    let o = out.to_str().unwrap();
    ok(&[
        "evaluate",
        "--manifest",
        &f.manifest(),
        "--target",
        "PF",
        "--modality",
        "physio",
        "--window",
        "10,full",
        "--model",
        "rf,logreg",
        "--cv-folds",
        "3",
        "--rf-trees",
        "20",
        "--out",
        o,
    ]);
    let json = fs::read_to_string(out.join("report.json")).unwrap();
    let rendered = ok(&[
        "report",
        "--report",
        out.join("report.json").to_str().unwrap(),
    ]);
    assert_eq!(
        rendered,
        fs::read_to_string(out.join("report.txt")).unwrap()
    );

    let parsed = fatiguelab::eval::ExperimentReport::from_json(&json).unwrap();
    assert_eq!(parsed.to_json().unwrap(), json);
    assert_eq!(parsed.cells.len(), 4);

    let dest = f.root.join("rendered.txt");
    ok(&[
        "report",
        "--report",
        out.join("report.json").to_str().unwrap(),
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(dest).unwrap(), rendered);
}

#[test]
fn reruns_are_byte_identical() {
    let f = fixture();
    let runs: Vec<_> = (0..2)
        .map(|i| {
            let root = f.root.join(format!("rerun{i}"));
            let r = |s: &str| root.join(s).to_string_lossy().into_owned();
            ok(&[
                "synth",
                "--subjects",
                "4",
                "--seed",
                "3",
                "--block-seconds",
                "10",
                "--out",
                &r("synth"),
            ]);
            ok(&[
                "features",
                "--manifest",
                &f.manifest(),
                "--target",
                "PF",
                "--window",
                "5",
                "--out",
                &r("features"),
            ]);
            ok(&[
                "train",
                "--manifest",
                &f.manifest(),
                "--target",
                "PF",
                "--model",
                "svm",
                "--seed",
                "5",
                "--out",
                &r("train"),
            ]);
            ok(&[
                "evaluate",
                "--manifest",
                &f.manifest(),
                "--modality",
                "eeg",
                "--window",
                "20",
                "--model",
                "rf",
                "--rf-trees",
                "10",
                "--cv-folds",
                "2",
                "--seed",
                "5",
                "--out",
                &r("evaluate"),
            ]);
            read_dir_sorted(&root)
        })
        .collect();
    assert!(runs[0].len() > 10);
    assert_eq!(runs[0].len(), runs[1].len());
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        assert_eq!(a.0, b.0);
        assert!(a.1 == b.1, "{} differs between reruns", a.0);
    }
}

#[test]
fn flags_override_config_file() {
    let f = fixture();
    let cfg = f.root.join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"manifest": {:?}, "target": "PF", "modality": "eeg", "seed": 11, "model": "logreg", "window": "20", "cv_folds": 2}}"#,
            f.manifest()
        ),
    )
    .unwrap();
    let out = f.root.join("eval_cfg");
    ok(&[
        "evaluate",
        "--config",
        cfg.to_str().unwrap(),
        "--target",
        "CF",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["target"], "CF");
    assert_eq!(report["metadata"]["modality"], "eeg");
    assert_eq!(report["metadata"]["seed"], 11);
    assert_eq!(report["config"]["cv_folds"], 2);
    assert_eq!(report["cells"].as_array().unwrap().len(), 1);

    let bad = f.root.join("bad.json");
    fs::write(&bad, r#"{"colour": "blue"}"#).unwrap();
    let o = run(&["ingest-check", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o)["message"]
        .as_str()
        .unwrap()
        .contains("colour"));
}

#[test]
fn features_and_train_write_artifacts() {
    let f = fixture();
    let feat = f.root.join("feat");
    ok(&[
        "features",
        "--manifest",
        &f.manifest(),
        "--target",
        "CF",
        "--modality",
        "eeg",
        "--window",
        "10",
        "--out",
        feat.to_str().unwrap(),
    ]);
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(feat.join("examples.json")).unwrap()).unwrap();
    let columns = meta["columns"].as_array().unwrap().len();
    let examples = meta["examples"].as_u64().unwrap() as usize;
    assert_eq!(examples, 100 * 2);
    let mut reader = csv::Reader::from_path(feat.join("examples.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 4 + columns);
    assert_eq!(reader.records().count(), examples);

    let model_dir = f.root.join("model");
    ok(&[
        "train",
        "--manifest",
        &f.manifest(),
        "--target",
        "CF",
        "--modality",
        "eeg",
        "--window",
        "10",
        "--model",
        "logreg",
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    let model = fatiguelab::models::TrainedModel::load(&model_dir.join("model.json")).unwrap();
    assert_eq!(model.config.kind, fatiguelab::models::ModelKind::Logreg);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(model_dir.join("train.json")).unwrap()).unwrap();
    let split = &summary["split"];
    let trained: Vec<&str> = summary["trained_subjects"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    for s in split["test"].as_array().unwrap() {
        assert!(
            !trained.contains(&s.as_str().unwrap()),
            "test subject used in training"
        );
    }
}
