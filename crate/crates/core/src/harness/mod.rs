//! Benchmark driver: scenario inputs, per-sequence tracking, post-processing,
//! evaluation and report files.

pub mod cli;
pub mod config;
pub mod io;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cmc::{estimate_affine, Affine, DEFAULT_INLIER_PX, DEFAULT_RANSAC_ITERS};
use crate::interp::{gsi_smooth, linear_interpolate, Tracklet, DEFAULT_GSI_LENGTH_SCALE, DEFAULT_GSI_NOISE_VAR, DEFAULT_MAX_GAP};
use crate::metrics::{fmt_opt, reduce_to_truth, reference, EvalReport, FrameTiming, Trajectory};
use crate::motion::BBox;
use crate::sim::{background_correspondences, corrupt, scenario, simulate, ScenarioKind, SensorSequence};
use crate::trackers::{FrameResult, Tracker, TrackerConfig, TrackerKind};
use crate::{Error, Result};

pub use config::ConfigFile;
pub use io::FrameDetections;

/// Environment variable that supplies the output directory when `--out` is
/// not given.
pub const OUT_DIR_ENV: &str = "KFTRACK_OUT";

pub const SUMMARY_HEADER: &str = "tracker,scenario,seed,ade,amd,coverage,n_pairs";
pub const TIMING_HEADER: &str = "tracker,scenario,seed,mean_inference_ms,mean_update_ms";

/// Post-processing applied to tracker output before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    None,
    Linear,
    Gsi,
}

impl fmt::Display for Interp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interp::None => "none",
            Interp::Linear => "linear",
            Interp::Gsi => "gsi",
        })
    }
}

impl FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Interp::None),
            "linear" => Ok(Interp::Linear),
            "gsi" => Ok(Interp::Gsi),
            other => Err(Error::contract(format!("unknown interpolation `{other}`"))),
        }
    }
}

/// Everything a tracker consumes for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceInput {
    pub frames: FrameDetections,
    /// Camera motion into each frame, when known.
    pub affines: BTreeMap<u32, Affine>,
    /// Boxes of the evaluated object.
    pub truth: Vec<(u32, BBox)>,
}

/// Simulated sequence for an archetype. For the panning archetype the
/// per-frame affines are estimated from synthetic background
/// correspondences, as a feature-based camera motion estimator would.
pub fn scenario_input(kind: ScenarioKind, seed: u64) -> Result<(SequenceInput, SensorSequence)> {
    let (court, corruption) = scenario(kind, seed);
    let track = simulate(&court)?;
    let seq = corrupt(&[track], (court.width, court.height), &corruption, seed)?;
    let mut affines = BTreeMap::new();
    if corruption.camera_pan.is_some() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xcafe_f00d);
        for (k, (frame, truth)) in seq.affines.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let pairs = background_correspondences(truth, 80, 0.5, 0.2, (court.width, court.height), &mut rng);
            let est = estimate_affine(&pairs, DEFAULT_RANSAC_ITERS, DEFAULT_INLIER_PX, seed.wrapping_add(*frame as u64))
                .map(|(a, _)| a)
                .unwrap_or_default();
            affines.insert(*frame, est);
        }
    }
    let input = SequenceInput {
        frames: seq.frames.clone(),
        affines,
        truth: seq.truth[0].clone(),
    };
    Ok((input, seq))
}

/// Runs a tracker over every frame of a sequence.
pub fn track_sequence(kind: TrackerKind, cfg: &TrackerConfig, frames: &FrameDetections, affines: &BTreeMap<u32, Affine>) -> Result<Vec<FrameResult>> {
    let mut tracker = Tracker::new(kind, cfg.clone())?;
    frames
        .iter()
        .map(|(f, dets)| tracker.step(*f, dets, affines.get(f)))
        .collect()
}

/// Per-frame `(id, box)` outputs, optionally gap-filled per track id.
pub fn postprocess(results: &[FrameResult], interp: Interp) -> Result<BTreeMap<u32, Vec<(u64, BBox)>>> {
    let mut by_frame: BTreeMap<u32, Vec<(u64, BBox)>> = BTreeMap::new();
    if interp == Interp::None {
        for r in results {
            by_frame.insert(r.frame, r.outputs.iter().map(|o| (o.id, o.bbox)).collect());
        }
        return Ok(by_frame);
    }
    let mut by_id: BTreeMap<u64, Vec<(u32, BBox)>> = BTreeMap::new();
    for r in results {
        for o in &r.outputs {
            by_id.entry(o.id).or_default().push((r.frame, o.bbox));
        }
    }
    for (id, samples) in by_id {
        let t = Tracklet::new(id, samples)?;
        let filled = match interp {
            Interp::Linear => linear_interpolate(&t, DEFAULT_MAX_GAP),
            Interp::Gsi => gsi_smooth(&t, DEFAULT_GSI_LENGTH_SCALE, DEFAULT_GSI_NOISE_VAR, DEFAULT_MAX_GAP)?.tracklet,
            Interp::None => unreachable!(),
        };
        for (f, b) in filled.samples {
            by_frame.entry(f).or_default().push((id, b));
        }
    }
    Ok(by_frame)
}

/// Accuracy of reduced outputs against one ground-truth object.
pub fn evaluate(outputs: &BTreeMap<u32, Vec<(u64, BBox)>>, truth: &[(u32, BBox)], timing: &[FrameTiming]) -> Result<(EvalReport, Trajectory)> {
    let pred = reduce_to_truth(truth, outputs);
    let truth_traj = Trajectory::new(truth.iter().map(|(f, b)| (*f, b.center())).collect())?;
    Ok((EvalReport::compute(&pred, &truth_traj, timing)?, pred))
}

/// `frame,gt_x,gt_y,pred_x,pred_y`; prediction columns are empty for frames
/// without output.
pub fn trajectory_csv(truth: &[(u32, BBox)], pred: &Trajectory) -> String {
    let pred: BTreeMap<u32, [f64; 2]> = pred.points().iter().cloned().collect();
    let mut s = String::from("frame,gt_x,gt_y,pred_x,pred_y\n");
    for (f, b) in truth {
        let [gx, gy] = b.center();
        match pred.get(f) {
            Some([px, py]) => writeln!(s, "{f},{gx:.6},{gy:.6},{px:.6},{py:.6}"),
            None => writeln!(s, "{f},{gx:.6},{gy:.6},,"),
        }
        .expect("writing to a String");
    }
    s
}

/// A full benchmark matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trackers: Vec<TrackerKind>,
    pub scenarios: Vec<ScenarioKind>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub interp: Interp,
    pub config: ConfigFile,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trackers.is_empty() || self.scenarios.is_empty() || self.seeds.is_empty() {
            return Err(Error::contract("a run needs at least one tracker, scenario and seed"));
        }
        Ok(())
    }

    /// Tracker configuration for one cell of the matrix. Camera motion
    /// compensation is switched on for the panning archetype.
    pub fn tracker_config(&self, kind: TrackerKind, scenario: ScenarioKind) -> Result<TrackerConfig> {
        let mut cfg = self.config.tracker_config(kind)?;
        if scenario == ScenarioKind::CameraPan && !self.config.tracker.iter().any(|(k, f, _)| f == "use_cmc" && (k.is_none() || *k == Some(kind))) {
            cfg.use_cmc = true;
        }
        Ok(cfg)
    }
}

/// One evaluated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub tracker: TrackerKind,
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub records: Vec<RunRecord>,
    pub failures: Vec<String>,
}

fn run_cell(cfg: &RunConfig, kind: TrackerKind, scenario: ScenarioKind, seed: u64, input: &SequenceInput) -> Result<RunRecord> {
    let tcfg = cfg.tracker_config(kind, scenario)?;
    let results = track_sequence(kind, &tcfg, &input.frames, &input.affines)?;
    let outputs = postprocess(&results, cfg.interp)?;
    let timing: Vec<FrameTiming> = results.iter().map(|r| r.timing).collect();
    let (report, pred) = evaluate(&outputs, &input.truth, &timing)?;
    let dir = cfg.out_dir.join(format!("{kind}_{scenario}_{seed}"));
    io::write_results(&dir.join("results.txt"), &results)?;
    if cfg.interp != Interp::None {
        io::write_boxes(&dir.join(format!("results_{}.txt", cfg.interp)), &outputs)?;
    }
    io::write_text(&dir.join("trajectory.csv"), &trajectory_csv(&input.truth, &pred))?;
    Ok(RunRecord {
        tracker: kind,
        scenario,
        seed,
        report,
    })
}

/// Runs every (tracker, scenario, seed) cell and writes the per-run files,
/// `summary.csv`, `timing.csv`, `table_accuracy.csv`, `table_timing.csv`,
/// `reference_accuracy.csv`, `reference_timing.csv` and `failures.log`.
/// A failing cell is logged and skipped.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let mut summary = RunSummary::default();
    for &scenario in &cfg.scenarios {
        for &seed in &cfg.seeds {
            let (input, _) = scenario_input(scenario, seed)?;
            for &kind in &cfg.trackers {
                match run_cell(cfg, kind, scenario, seed, &input) {
                    Ok(r) => summary.records.push(r),
                    Err(e @ Error::Io { .. }) => return Err(e),
                    Err(e) => summary.failures.push(format!("{kind},{scenario},{seed}: {e}")),
                }
            }
        }
    }
    summary
        .records
        .sort_by_key(|r| (cfg.trackers.iter().position(|k| *k == r.tracker), r.scenario, r.seed));
    write_reports(cfg, &summary)?;
    Ok(summary)
}

fn write_reports(cfg: &RunConfig, s: &RunSummary) -> Result<()> {
    let out = &cfg.out_dir;
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut timing = format!("{TIMING_HEADER}\n");
    for r in &s.records {
        let e = &r.report;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{:.6},{}",
            r.tracker,
            r.scenario,
            r.seed,
            fmt_opt(e.ade),
            fmt_opt(e.amd),
            e.coverage,
            e.n_pairs
        );
        let _ = writeln!(
            timing,
            "{},{},{},{:.6},{:.6}",
            r.tracker, r.scenario, r.seed, e.mean_inference_ms, e.mean_update_ms
        );
    }
    io::write_text(&out.join("summary.csv"), &summary)?;
    io::write_text(&out.join("timing.csv"), &timing)?;
    io::write_text(&out.join("table_accuracy.csv"), &accuracy_table(&cfg.trackers, &cfg.scenarios, &s.records))?;
    io::write_text(&out.join("table_timing.csv"), &timing_table(&cfg.trackers, &cfg.scenarios, &s.records))?;
    io::write_text(&out.join("reference_accuracy.csv"), &reference_table(&reference::ACCURACY, "ade", "amd"))?;
    io::write_text(
        &out.join("reference_timing.csv"),
        &reference_table(&reference::TIMING_MS, "inference_ms", "update_ms"),
    )?;
    let mut failures = String::new();
    for f in &s.failures {
        let _ = writeln!(failures, "{f}");
    }
    io::write_text(&out.join("failures.log"), &failures)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Table with one row per tracker and a `(first, second)` column pair per
/// scenario, each cell the mean over seeds.
fn pivot(
    trackers: &[TrackerKind],
    scenarios: &[ScenarioKind],
    names: (&str, &str),
    cell: impl Fn(TrackerKind, ScenarioKind) -> (Option<f64>, Option<f64>),
) -> String {
    let mut s = String::from("tracker");
    for sc in scenarios {
        let _ = write!(s, ",{sc}_{},{sc}_{}", names.0, names.1);
    }
    s.push('\n');
    for &k in trackers {
        s.push_str(k.label());
        for &sc in scenarios {
            let (a, b) = cell(k, sc);
            let _ = write!(s, ",{},{}", fmt_opt(a), fmt_opt(b));
        }
        s.push('\n');
    }
    s
}

/// Mean ADE and AMD per tracker and scenario.
pub fn accuracy_table(trackers: &[TrackerKind], scenarios: &[ScenarioKind], records: &[RunRecord]) -> String {
    pivot(trackers, scenarios, ("ade", "amd"), |k, sc| {
        let cell = || records.iter().filter(move |r| r.tracker == k && r.scenario == sc);
        (mean(cell().filter_map(|r| r.report.ade)), mean(cell().filter_map(|r| r.report.amd)))
    })
}

/// Mean inference and update milliseconds per tracker and scenario.
pub fn timing_table(trackers: &[TrackerKind], scenarios: &[ScenarioKind], records: &[RunRecord]) -> String {
    pivot(trackers, scenarios, ("inference_ms", "update_ms"), |k, sc| {
        let cell = || records.iter().filter(move |r| r.tracker == k && r.scenario == sc);
        (
            mean(cell().map(|r| r.report.mean_inference_ms)),
            mean(cell().map(|r| r.report.mean_update_ms)),
        )
    })
}

/// Published values in the same layout, scenarios numbered 1..4.
pub fn reference_table(values: &[[(f64, f64); 4]; 5], first: &str, second: &str) -> String {
    let mut s = String::from("tracker");
    for i in 1..=4 {
        let _ = write!(s, ",scenario{i}_{first},scenario{i}_{second}");
    }
    s.push('\n');
    for (name, row) in reference::TRACKERS.iter().zip(values) {
        s.push_str(name);
        for (a, b) in row {
            let _ = write!(s, ",{a},{b}");
        }
        s.push('\n');
    }
    s
}

/// Output directory: the explicit flag, else the environment override, else
/// `default`.
pub fn resolve_out_dir(flag: Option<&Path>, default: &str) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(default))
}
