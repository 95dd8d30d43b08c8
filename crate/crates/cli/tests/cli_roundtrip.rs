//! End-to-end runs of the `selfsort` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn selfsort() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selfsort"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = selfsort().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "selfsort {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_linear_spec(dir: &Path) -> PathBuf {
    let path = dir.join("linear.json");
    let spec = serde_json::json!({
        "format_version": 1,
        "model": "linear",
        "n": 8,
        "rho": 0.5,
        "degenerates": { "7": 42.0 },
        "classes": [
            {
                "indices": [0, 2, 4],
                "slopes": [1.0, 2.0, -1.0],
                "intercepts": [0.0, 1.0, 10.0],
                "parameter_dist": { "kind": "uniform", "a": 0.0, "b": 1.0 }
            },
            {
                "indices": [1, 3, 5, 6],
                "slopes": [1.0, 1.0, 1.0, -2.0],
                "intercepts": [20.0, 21.0, 22.0, 60.0],
                "parameter_dist": { "kind": "uniform", "a": 0.0, "b": 1.0 }
            }
        ]
    });
    std::fs::write(&path, spec.to_string()).unwrap();
    path
}

fn write_mixture_spec(dir: &Path, n: usize, m: usize) -> PathBuf {
    let path = dir.join(format!("mixture-{n}-{m}.json"));
    let dists: Vec<serde_json::Value> = (0..n)
        .map(|i| serde_json::json!({ "kind": "uniform", "a": 3.0 * i as f64, "b": 3.0 * i as f64 + 1.0 }))
        .collect();
    let spec = serde_json::json!({
        "format_version": 1,
        "model": "mixture",
        "n": n,
        "m": m,
        "components": [ { "weight": 1.0, "dists": dists } ]
    });
    std::fs::write(&path, spec.to_string()).unwrap();
    path
}

#[test]
fn shipped_sample_specs_work_end_to_end() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let dir = tempfile::tempdir().unwrap();
    for (name, train_args) in [
        ("linear-bands.json", vec!["train-linear"]),
        ("mixture-demo.json", vec!["train-mixture", "--m", "2"]),
    ] {
        let spec = root.join(name);
        assert!(spec.exists(), "missing shipped spec {name}");
        let stream = dir.path().join(format!("{name}.stream"));
        let model = dir.path().join(format!("{name}.model"));
        run_ok(&[
            "gen",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            stream.to_str().unwrap(),
            "--count",
            "60",
            "--seed",
            "3",
        ]);
        let mut args: Vec<&str> = train_args.clone();
        args.extend([
            "--in",
            stream.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
        ]);
        run_ok(&args);
        let out = run_ok(&[
            "verify",
            "--model",
            model.to_str().unwrap(),
            "--in",
            stream.to_str().unwrap(),
        ]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("sorted: 60/60"));
    }
}

#[test]
fn gen_is_deterministic_and_carries_header() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_linear_spec(dir.path());
    let out1 = dir.path().join("a.txt");
    let out2 = dir.path().join("b.txt");
    for out in [&out1, &out2] {
        run_ok(&[
            "gen",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--count",
            "19",
            "--seed",
            "7",
        ]);
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed must give byte-identical streams");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("n=8 count=19\n"));
    assert_eq!(text.lines().count(), 20);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split_whitespace().count() == 8));
}

#[test]
fn linear_train_sort_verify_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_linear_spec(dir.path());
    let stream = dir.path().join("train.txt");
    let model = dir.path().join("model.json");
    let fresh = dir.path().join("fresh.txt");
    let perms = dir.path().join("perms.txt");

    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        stream.to_str().unwrap(),
        "--count",
        "40",
        "--seed",
        "1",
    ]);
    run_ok(&[
        "train-linear",
        "--in",
        stream.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epsilon",
        "0.5",
    ]);
    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        fresh.to_str().unwrap(),
        "--count",
        "50",
        "--seed",
        "999",
    ]);
    run_ok(&[
        "sort",
        "--model",
        model.to_str().unwrap(),
        "--in",
        fresh.to_str().unwrap(),
        "--out",
        perms.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    let perm_text = std::fs::read_to_string(&perms).unwrap();
    assert!(perm_text.starts_with("n=8 count=50\n"));
    assert!(dir.path().join("perms.txt.report.jsonl").exists());

    let out = run_ok(&[
        "verify",
        "--model",
        model.to_str().unwrap(),
        "--in",
        fresh.to_str().unwrap(),
        "--spec",
        spec.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sorted: 50/50"), "{stdout}");
    assert!(stdout.contains("partition: match"), "{stdout}");
}

#[test]
fn mixture_cycle_with_binary_stream() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_mixture_spec(dir.path(), 4, 2);
    let stream = dir.path().join("train.bin");
    let model = dir.path().join("model.json");

    // mixture training needs n * m * ceil(ln(mn)) + ceil((mn)^eps) instances
    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        stream.to_str().unwrap(),
        "--count",
        "40",
        "--seed",
        "5",
        "--format",
        "binary",
    ]);
    let bytes = std::fs::read(&stream).unwrap();
    assert_eq!(&bytes[..8], b"SISORT1\0");

    run_ok(&[
        "train-mixture",
        "--in",
        stream.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epsilon",
        "0.5",
        "--m",
        "2",
    ]);
    let out = run_ok(&[
        "verify",
        "--model",
        model.to_str().unwrap(),
        "--in",
        stream.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sorted: 40/40"), "{stdout}");
}

#[test]
fn inspect_reports_bucket_sizes_for_m_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_mixture_spec(dir.path(), 5, 1);
    let stream = dir.path().join("train.txt");
    let model = dir.path().join("model.json");
    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        stream.to_str().unwrap(),
        "--count",
        "20",
        "--seed",
        "2",
    ]);
    run_ok(&[
        "train-mixture",
        "--in",
        stream.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epsilon",
        "0.5",
        "--m",
        "1",
    ]);
    let out = run_ok(&["inspect", "--model", model.to_str().unwrap()]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("buckets: 5 sizes=[1, 1, 1, 1, 2]"),
        "{stdout}"
    );
}

#[test]
fn sort_csv_format_writes_csv_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_mixture_spec(dir.path(), 4, 1);
    let stream = dir.path().join("s.txt");
    let model = dir.path().join("m.json");
    let perms = dir.path().join("p.txt");
    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        stream.to_str().unwrap(),
        "--count",
        "30",
    ]);
    run_ok(&[
        "train-mixture",
        "--in",
        stream.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--m",
        "1",
    ]);
    run_ok(&[
        "sort",
        "--model",
        model.to_str().unwrap(),
        "--in",
        stream.to_str().unwrap(),
        "--out",
        perms.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let sidecar = dir.path().join("p.txt.report.csv");
    assert!(sidecar.exists());
    let text = std::fs::read_to_string(&sidecar).unwrap();
    assert!(text.lines().next().unwrap().starts_with("# config:"));
    assert!(text.contains("comparisons_total"));
}

#[test]
fn bench_writes_report_with_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_mixture_spec(dir.path(), 4, 2);
    let report_path = dir.path().join("report.jsonl");
    run_ok(&[
        "bench",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
        "--count",
        "30",
        "--seed",
        "11",
        "--epsilon",
        "0.5",
    ]);
    let text = std::fs::read_to_string(&report_path).unwrap();
    assert!(text.lines().next().unwrap().contains("\"config\""));
    // config line + 30 rows + aggregates line
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn config_errors_exit_2_and_missing_training_data_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = selfsort()
        .args([
            "inspect",
            "--model",
            dir.path().join("nope.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // a stream too short for training
    let spec = write_linear_spec(dir.path());
    let stream = dir.path().join("short.txt");
    let model = dir.path().join("model.json");
    run_ok(&[
        "gen",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        stream.to_str().unwrap(),
        "--count",
        "5",
        "--seed",
        "1",
    ]);
    let out = selfsort()
        .args([
            "train-linear",
            "--in",
            stream.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("needed 19"), "{stderr}");
}

#[test]
fn malformed_spec_reports_location_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("broken.json");
    std::fs::write(&spec, "{ \"format_version\": 1, \"model\": \"linear\"").unwrap();
    let out = selfsort()
        .args([
            "gen",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            dir.path().join("x.txt").to_str().unwrap(),
            "--count",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn dimension_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec8 = write_linear_spec(dir.path());
    let spec4 = write_mixture_spec(dir.path(), 4, 1);
    let stream8 = dir.path().join("train8.txt");
    let stream4 = dir.path().join("train4.txt");
    let model = dir.path().join("model.json");
    run_ok(&[
        "gen",
        "--spec",
        spec8.to_str().unwrap(),
        "--out",
        stream8.to_str().unwrap(),
        "--count",
        "40",
    ]);
    run_ok(&[
        "gen",
        "--spec",
        spec4.to_str().unwrap(),
        "--out",
        stream4.to_str().unwrap(),
        "--count",
        "40",
    ]);
    run_ok(&[
        "train-linear",
        "--in",
        stream8.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    let out = selfsort()
        .args([
            "sort",
            "--model",
            model.to_str().unwrap(),
            "--in",
            stream4.to_str().unwrap(),
            "--out",
            dir.path().join("p.txt").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n=8"));
}
