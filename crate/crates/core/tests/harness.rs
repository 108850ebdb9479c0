use std::path::Path;
use std::process::Command;

use kftrack::harness::io;
use kftrack::motion::BBox;
use kftrack::sim::{corrupt, scenario, simulate, ScenarioKind};

fn kftrack(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_kftrack"))
        .args(args)
        .env("KFTRACK_OUT", out)
        .output()
        .unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn detections_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (court, k) = scenario(ScenarioKind::Rally, 3);
    let seq = corrupt(&[simulate(&court).unwrap()], (court.width, court.height), &k, 3).unwrap();
    let (det, emb) = (dir.path().join("det.txt"), dir.path().join("emb.txt"));
    io::write_detections(&det, &seq.frames, Some(&emb)).unwrap();
    let back = io::ingest_detections(&det, Some(&emb)).unwrap();
    let written: Vec<_> = seq.frames.iter().filter(|(_, d)| !d.is_empty()).collect();
    assert_eq!(back.len(), written.len());
    for ((f1, a), (f2, b)) in written.iter().zip(&back) {
        assert_eq!(f1, f2);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x.bbox.x - y.bbox.x).abs() < 1e-6 && (x.bbox.w - y.bbox.w).abs() < 1e-6);
            assert!((x.confidence - y.confidence).abs() < 1e-6);
            let (ex, ey) = (x.embedding.as_ref().unwrap(), y.embedding.as_ref().unwrap());
            assert!(ex.iter().zip(ey).all(|(u, v)| (u - v).abs() < 1e-6));
        }
    }
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = kftrack(&["track", "--bogus"], dir.path());
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let (code, _, _) = kftrack(&["track", "--tracker", "sort", "--detections", p(&missing)], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn simulate_track_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    let (code, _, err) = kftrack(&["simulate", "--scenario", "rally", "--seed", "2", "--out", p(&sim)], dir.path());
    assert_eq!(code, 0, "{err}");
    for f in ["gt.txt", "det.txt", "emb.txt", "affines.txt"] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let run = dir.path().join("run");
    let det = sim.join("det.txt");
    let emb = sim.join("emb.txt");
    let (code, _, err) = kftrack(
        &["track", "--tracker", "deepocsort", "--detections", p(&det), "--embeddings", p(&emb), "--out", p(&run), "--interp", "linear"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(run.join("results.txt").exists() && run.join("results_linear.txt").exists());

    let (code, text, err) = kftrack(&["eval", "--results", p(&run.join("results.txt")), "--truth", p(&sim.join("gt.txt"))], dir.path());
    assert_eq!(code, 0, "{err}");
    let ade: f64 = text.lines().find_map(|l| l.strip_prefix("ade=")).unwrap().parse().unwrap();
    assert!(ade < 10.0, "{text}");
}

#[test]
fn strongsort_without_embeddings_is_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(kftrack(&["simulate", "--scenario", "occlusion", "--out", p(&sim)], dir.path()).0, 0);
    let (code, _, err) = kftrack(&["track", "--tracker", "strongsort", "--detections", p(&sim.join("det.txt"))], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("embedding"), "{err}");
}

#[test]
fn eval_with_short_results_reports_partial_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let truth: Vec<(u32, BBox)> = (1..=10).map(|f| (f, BBox::new(10.0 * f as f64, 50.0, 40.0, 40.0).unwrap())).collect();
    io::write_truth(&dir.path().join("gt.txt"), std::slice::from_ref(&truth)).unwrap();
    let outputs = truth[..5].iter().map(|(f, b)| (*f, vec![(1u64, *b)])).collect();
    io::write_boxes(&dir.path().join("res.txt"), &outputs).unwrap();
    let (code, text, _) = kftrack(
        &["eval", "--results", p(&dir.path().join("res.txt")), "--truth", p(&dir.path().join("gt.txt"))],
        dir.path(),
    );
    assert_eq!(code, 0);
    assert!(text.contains("coverage=0.500000"), "{text}");
    assert!(text.contains("ade=0"), "{text}");
}

#[test]
fn bench_rows_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let (code, _, err) = kftrack(&["bench", "--seed", "4", "--out", p(&out)], dir.path());
    assert_eq!(code, 0, "{err}");
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 21);
    assert!(out.join("table_accuracy.csv").exists() && out.join("failures.log").exists());
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = kftrack(&["simulate", "--scenario", "camera_pan", "--seed", "5"], dir.path());
    assert_eq!(code, 0, "{err}");
    let affines = io::read_affines(&dir.path().join("affines.txt")).unwrap();
    assert!(affines.values().any(|a| !a.is_identity()));
}
