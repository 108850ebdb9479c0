//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage errors and contract violations, 2 I/O and
//! parse failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::metrics::EvalReport;
use crate::sim::{corrupt, scenario, simulate, ScenarioKind};
use crate::trackers::TrackerKind;
use crate::{Error, Result};

use super::{evaluate, io, postprocess, resolve_out_dir, run, track_sequence, ConfigFile, Interp, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "kftrack", version, about = "Kalman-filter multi-object tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write ground truth, detections, embeddings and affines.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track a detection file and write MOT-format results.
    Track {
        #[arg(long)]
        tracker: String,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        affines: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "none")]
        interp: String,
    },
    /// Evaluate a results file against ground truth.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tracker x scenario x seed matrix.
    Bench {
        #[arg(long, default_value = "all")]
        tracker: String,
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, default_value = "1..5")]
        seed: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        interp: Option<String>,
    },
}

/// `a..b` (inclusive), a comma list, or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::contract(format!("bad seed list `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

/// `all` (the five benchmark trackers) or a comma list of names.
pub fn parse_trackers(s: &str) -> Result<Vec<TrackerKind>> {
    if s == "all" {
        return Ok(TrackerKind::BENCH.to_vec());
    }
    s.split(',').map(|x| x.trim().parse()).collect()
}

pub fn parse_scenarios(s: &str) -> Result<Vec<ScenarioKind>> {
    if s == "all" {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    s.split(',').map(|x| x.trim().parse()).collect()
}

fn load_config(path: Option<&PathBuf>) -> Result<ConfigFile> {
    path.map_or_else(|| Ok(ConfigFile::default()), |p| ConfigFile::load(p))
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    let say = |stdout: &mut dyn Write, s: String| {
        let _ = writeln!(stdout, "{s}");
    };
    match cmd {
        Command::Simulate { scenario: name, seed, out } => {
            let kind: ScenarioKind = name.parse()?;
            let out = resolve_out_dir(out.as_deref(), "sim");
            let (court, corruption) = scenario(kind, seed);
            let track = simulate(&court)?;
            let seq = corrupt(&[track], (court.width, court.height), &corruption, seed)?;
            io::write_truth(&out.join("gt.txt"), &seq.truth)?;
            io::write_detections(&out.join("det.txt"), &seq.frames, Some(&out.join("emb.txt")))?;
            io::write_affines(&out.join("affines.txt"), &seq.affines)?;
            say(stdout, format!("wrote {} frames of {kind} (seed {seed}) to {}", seq.frames.len(), out.display()));
        }
        Command::Track {
            tracker,
            detections,
            embeddings,
            affines,
            config,
            out,
            interp,
        } => {
            let kind: TrackerKind = tracker.parse()?;
            let interp: Interp = interp.parse()?;
            let cfg = load_config(config.as_ref())?.tracker_config(kind)?;
            let frames = io::ingest_detections(&detections, embeddings.as_deref())?;
            let affines = match &affines {
                Some(p) => io::read_affines(p)?,
                None => BTreeMap::new(),
            };
            let results = track_sequence(kind, &cfg, &frames, &affines)?;
            let out = resolve_out_dir(out.as_deref(), "runs");
            io::write_results(&out.join("results.txt"), &results)?;
            if interp != Interp::None {
                io::write_boxes(&out.join(format!("results_{interp}.txt")), &postprocess(&results, interp)?)?;
            }
            say(stdout, format!("tracked {} frames with {kind}; results in {}", results.len(), out.display()));
        }
        Command::Eval { results, truth, out } => {
            let outputs = io::read_results(&results)?;
            let gt = io::read_truth_object(&truth)?;
            let (report, _): (EvalReport, _) = evaluate(&outputs, &gt, &[])?;
            let text = report.to_key_values();
            if let Some(dir) = out {
                io::write_text(&dir.join("eval.txt"), &text)?;
            }
            let _ = write!(stdout, "{text}");
        }
        Command::Bench {
            tracker,
            scenario: scenarios,
            seed,
            config,
            out,
            interp,
        } => {
            let config = load_config(config.as_ref())?;
            let interp = match interp {
                Some(s) => s.parse()?,
                None => config.interp.unwrap_or_default(),
            };
            let cfg = RunConfig {
                trackers: parse_trackers(&tracker)?,
                scenarios: parse_scenarios(&scenarios)?,
                seeds: parse_seeds(&seed)?,
                out_dir: resolve_out_dir(out.as_deref(), "runs"),
                interp,
                config,
            };
            let summary = run(&cfg)?;
            say(
                stdout,
                format!(
                    "{} runs, {} failures; reports in {}",
                    summary.records.len(),
                    summary.failures.len(),
                    cfg.out_dir.display()
                ),
            );
            for f in &summary.failures {
                say(stdout, format!("failed: {f}"));
            }
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("2,9").unwrap(), vec![2, 9]);
        assert!(parse_seeds("5..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn tracker_lists() {
        assert_eq!(parse_trackers("all").unwrap().len(), 5);
        assert_eq!(parse_trackers("sort,botsort").unwrap(), vec![TrackerKind::Sort, TrackerKind::BotSort]);
        assert!(parse_trackers("nope").is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with(["kftrack", "bench", "--frobnicate"], &mut o, &mut e), 1);
        assert!(!e.is_empty());
        assert_eq!(main_with(["kftrack", "--help"], &mut o, &mut e), 0);
    }
}
