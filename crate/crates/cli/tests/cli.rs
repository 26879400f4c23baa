//! End-to-end tests of the `samlp` binary: every command runs as a child
//! process against small fixtures, checking outputs and exit codes.

use std::path::{Path, PathBuf};
use std::process::Output;
use std::sync::OnceLock;

use samlp_core::profile::{emit_v1_json, emit_v2_json};
use samlp_core::synth::{generate_profile_datasets, write_corpus, SyntheticSpec};
use tempfile::TempDir;

fn samlp(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_samlp"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// A small on-disk corpus plus a cheap training configuration.
struct Fixture {
    dir: TempDir,
    config: PathBuf,
    records: Vec<PathBuf>,
}

fn small_corpus(n_datasets: usize, rows: usize, seed: u64) -> Fixture {
    let dir = TempDir::new().unwrap();
    let spec = SyntheticSpec {
        n_datasets,
        rows_per_dataset: rows,
        seed,
        ..SyntheticSpec::default()
    };
    let records = write_corpus(dir.path(), &spec).unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(
        &config,
        "cv_folds = 3\nselection_repetitions = 3\nconfigs_per_family = 3\nalpha_points = 12\n",
    )
    .unwrap();
    Fixture { dir, config, records }
}

/// A 40-row, 3-feature CSV that is trivially separable on its first
/// column, with deliberately non-standard feature names.
fn toy_features_csv(path: &Path) {
    let mut text = String::from("alpha_gap,beat,carrier,label,user_id\n");
    for i in 0..40 {
        let bot = i % 2 == 1;
        let wobble = 0.05 * ((i as f64) * 0.37).sin();
        text.push_str(&format!(
            "{},{},{},{},u{i}\n",
            f64::from(u8::from(bot)) + wobble,
            ((i * 7) % 11) as f64 / 11.0,
            ((i * 13) % 17) as f64 / 17.0,
            if bot { "bot" } else { "human" },
        ));
    }
    std::fs::write(path, text).unwrap();
}

/// Artifact trained once from the toy CSV and shared by the tests that
/// only need *some* valid small model.
fn toy_artifact() -> &'static (TempDir, PathBuf, PathBuf) {
    static TOY: OnceLock<(TempDir, PathBuf, PathBuf)> = OnceLock::new();
    TOY.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let features = dir.path().join("toy.csv");
        toy_features_csv(&features);
        let model = dir.path().join("toy.samlp");
        let out = samlp(&[
            "train",
            "--features",
            path_str(&features),
            "--out",
            path_str(&model),
            "--cv-folds",
            "3",
            "--selection-repetitions",
            "3",
            "--configs-per-family",
            "3",
            "--alpha-points",
            "12",
            "--seed",
            "5",
        ]);
        assert_exit(&out, 0);
        (dir, model, features)
    })
}

#[test]
fn version_names_the_artifact_format() {
    let out = samlp(&["--version"]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("artifact format samlp-artifact-v1"), "{}", stdout(&out));
}

#[test]
fn extract_writes_features_plus_label_and_user_id() {
    let fixture = small_corpus(1, 24, 91);
    let records = &fixture.records[0];
    let labels = records.with_extension("labels.csv");
    let out_csv = fixture.dir.path().join("features.csv");

    let out = samlp(&[
        "extract",
        "--records",
        path_str(records),
        "--labels",
        path_str(&labels),
        "--collection-date",
        "2024-06-01",
        "--out",
        path_str(&out_csv),
    ]);
    assert_exit(&out, 0);

    let text = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 51);
    assert_eq!(header[49], "label");
    assert_eq!(header[50], "user_id");
    assert_eq!(lines.count(), 24);

    // The corpus alternates v1.1 and v2 lines, so forcing one shape fails.
    let forced = samlp(&[
        "extract",
        "--records",
        path_str(records),
        "--labels",
        path_str(&labels),
        "--collection-date",
        "2024-06-01",
        "--api-version",
        "v1",
        "--out",
        path_str(&fixture.dir.path().join("forced.csv")),
    ]);
    assert_exit(&forced, 2);
}

#[test]
fn extract_missing_labels_file_exits_2_and_names_it() {
    let fixture = small_corpus(1, 8, 92);
    let records = &fixture.records[0];
    let out = samlp(&[
        "extract",
        "--records",
        path_str(records),
        "--labels",
        "/nonexistent/labels.csv",
        "--collection-date",
        "2024-06-01",
        "--out",
        path_str(&fixture.dir.path().join("f.csv")),
    ]);
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("/nonexistent/labels.csv"), "{}", stderr(&out));
}

#[test]
fn train_predict_explain_work_end_to_end() {
    let fixture = small_corpus(2, 60, 93);
    let corpus = path_str(fixture.dir.path());
    let model = fixture.dir.path().join("bots.samlp");
    let report_path = fixture.dir.path().join("bots.report.json");

    let train = |extra: &[&str]| {
        let mut args = vec![
            "train",
            "--corpus",
            corpus,
            "--config",
            path_str(&fixture.config),
            "--seed",
            "7",
            "--out",
            path_str(&model),
            "--report",
            path_str(&report_path),
        ];
        args.extend_from_slice(extra);
        samlp(&args)
    };

    let first = train(&["--jobs", "1"]);
    assert_exit(&first, 0);
    let printed = stdout(&first);
    assert!(printed.contains("winner:"), "{printed}");
    assert!(printed.contains("threshold:"), "{printed}");
    assert!(printed.contains("test F1:"), "{printed}");
    let first_bytes = std::fs::read(&model).unwrap();

    // The effective config is echoed into the report, file value included.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["pipeline"]["cv_folds"], 3);
    assert_eq!(report["pipeline"]["seed"], 7);

    // Same seed, different thread cap: identical artifact bytes.
    let second = train(&["--jobs", "3"]);
    assert_exit(&second, 0);
    assert_eq!(first_bytes, std::fs::read(&model).unwrap(), "artifact differs across --jobs");

    // Predict the first dataset's records; every user gets a row.
    let predictions = fixture.dir.path().join("scores.csv");
    let predict = samlp(&[
        "predict",
        "--model",
        path_str(&model),
        "--records",
        path_str(&fixture.records[0]),
        "--out",
        path_str(&predictions),
    ]);
    assert_exit(&predict, 0);
    let lines: Vec<String> = std::fs::read_to_string(&predictions)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    assert_eq!(lines[0], "user_id,score,label");
    assert_eq!(lines.len(), 61);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        let score: f64 = cells[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&score), "{line}");
        assert!(cells[2] == "bot" || cells[2] == "human", "{line}");
    }

    // The same profile serialized in both API shapes scores identically.
    let profile = &generate_profile_datasets(&SyntheticSpec {
        n_datasets: 1,
        rows_per_dataset: 8,
        seed: 93,
        ..SyntheticSpec::default()
    })[0]
        .profiles[3];
    let twin_scores: Vec<String> = [emit_v1_json(profile), emit_v2_json(profile)]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            let records = fixture.dir.path().join(format!("twin{i}.jsonl"));
            std::fs::write(&records, format!("{line}\n")).unwrap();
            let out_csv = fixture.dir.path().join(format!("twin{i}.csv"));
            let out = samlp(&[
                "predict",
                "--model",
                path_str(&model),
                "--records",
                path_str(&records),
                "--out",
                path_str(&out_csv),
            ]);
            assert_exit(&out, 0);
            std::fs::read_to_string(&out_csv).unwrap().lines().nth(1).unwrap().to_string()
        })
        .collect();
    assert_eq!(twin_scores[0], twin_scores[1]);

    // Explain a 10-record slice in sampled mode with a small budget.
    let slice: String = std::fs::read_to_string(&fixture.records[1])
        .unwrap()
        .lines()
        .take(10)
        .fold(String::new(), |acc, l| acc + l + "\n");
    let slice_path = fixture.dir.path().join("slice.jsonl");
    std::fs::write(&slice_path, slice).unwrap();
    let explain_dir = fixture.dir.path().join("explained");
    let explain = samlp(&[
        "explain",
        "--model",
        path_str(&model),
        "--records",
        path_str(&slice_path),
        "--mode",
        "sampled",
        "--samples",
        "60",
        "--background",
        "8",
        "--top-k",
        "5",
        "--out",
        path_str(&explain_dir),
    ]);
    assert_exit(&explain, 0);
    for name in ["explanations.json", "explanations.csv", "summary.json", "summary.csv"] {
        assert!(explain_dir.join(name).exists(), "{name} missing");
    }
    let svg = std::fs::read_to_string(explain_dir.join("summary.svg")).unwrap();
    assert!(svg.starts_with("<svg"), "not an svg: {}", &svg[..40.min(svg.len())]);
    let summary_rows = std::fs::read_to_string(explain_dir.join("summary.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    let selected = report["selection"]["selected_indices"].as_array().unwrap().len();
    assert_eq!(summary_rows, selected.min(5));
}

#[test]
fn predict_rejects_empty_records_and_foreign_schemas() {
    let (dir, model, _) = toy_artifact();

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = samlp(&[
        "predict",
        "--model",
        path_str(model),
        "--records",
        path_str(&empty),
        "--collection-date",
        "2024-06-01",
        "--out",
        path_str(&dir.path().join("p.csv")),
    ]);
    assert_exit(&out, 2);

    // Raw records extract the standard 49-feature schema, which the
    // 3-feature toy artifact must refuse.
    let corpus = small_corpus(1, 8, 94);
    let out = samlp(&[
        "predict",
        "--model",
        path_str(model),
        "--records",
        path_str(&corpus.records[0]),
        "--collection-date",
        "2024-06-01",
        "--out",
        path_str(&dir.path().join("p.csv")),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn exact_explanations_verify_local_accuracy() {
    let (dir, model, features) = toy_artifact();
    let explain_dir = dir.path().join("exact");
    let run = |seed: &str, out: &Path| {
        samlp(&[
            "explain",
            "--model",
            path_str(model),
            "--features",
            path_str(features),
            "--mode",
            "exact",
            "--seed",
            seed,
            "--out",
            path_str(out),
        ])
    };
    let out = run("5", &explain_dir);
    assert_exit(&out, 0);
    let printed = stdout(&out);
    assert!(printed.contains("local accuracy check"), "{printed}");

    // Sampled mode with a fixed seed reproduces byte-identical output.
    let sampled_dir = dir.path().join("sampled");
    let sampled_dir2 = dir.path().join("sampled2");
    for out_dir in [&sampled_dir, &sampled_dir2] {
        let out = samlp(&[
            "explain",
            "--model",
            path_str(model),
            "--features",
            path_str(features),
            "--mode",
            "sampled",
            "--samples",
            "200",
            "--seed",
            "11",
            "--out",
            path_str(out_dir),
        ]);
        assert_exit(&out, 0);
    }
    assert_eq!(
        std::fs::read(sampled_dir.join("explanations.json")).unwrap(),
        std::fs::read(sampled_dir2.join("explanations.json")).unwrap()
    );
}

#[test]
fn explain_help_documents_the_default_top_k() {
    let out = samlp(&["explain", "--help"]);
    assert_exit(&out, 0);
    assert!(stdout(&out).contains("default: 20"), "{}", stdout(&out));
}

#[test]
fn bench_runs_both_scenarios_on_a_synthetic_corpus() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("tiny.toml");
    std::fs::write(
        &config,
        "cv_folds = 3\nselection_repetitions = 3\nconfigs_per_family = 3\nalpha_points = 12\n",
    )
    .unwrap();
    let base = |scenario: &str, out: &Path| {
        samlp(&[
            "bench",
            "--synthetic",
            "--datasets",
            "3",
            "--rows",
            "60",
            "--scenario",
            scenario,
            "--config",
            path_str(&config),
            "--out",
            path_str(out),
        ])
    };

    let per_out = dir.path().join("per");
    let per = base("per-dataset", &per_out);
    assert_exit(&per, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(per_out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["scenario"], "per_dataset");
    assert_eq!(report["datasets"].as_array().unwrap().len(), 3);
    assert!(report["average_f1"].is_number());

    let combined_out = dir.path().join("combined");
    let combined = base("combined", &combined_out);
    assert_exit(&combined, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(combined_out.join("report.json")).unwrap())
            .unwrap();
    assert!(report["total_f1"].is_number());
    let table = std::fs::read_to_string(combined_out.join("report.txt")).unwrap();
    assert!(table.contains("Total"), "{table}");
    assert!(stdout(&combined).contains("Total"));
}

#[test]
fn bench_unknown_scenario_exits_2_with_usage() {
    let out = samlp(&[
        "bench",
        "--synthetic",
        "--scenario",
        "leave-one-out",
        "--out",
        "/tmp/unused",
    ]);
    assert_exit(&out, 2);
    let err = stderr(&out);
    assert!(err.contains("possible values"), "{err}");
    assert!(err.to_lowercase().contains("usage"), "{err}");
}

#[test]
fn config_file_typos_are_rejected() {
    let fixture = small_corpus(1, 8, 95);
    let bad = fixture.dir.path().join("bad.toml");
    std::fs::write(&bad, "cv_fodls = 3\n").unwrap();
    let out = samlp(&[
        "train",
        "--corpus",
        path_str(fixture.dir.path()),
        "--config",
        path_str(&bad),
        "--out",
        path_str(&fixture.dir.path().join("m.samlp")),
    ]);
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("cv_fodls"), "{}", stderr(&out));
}
