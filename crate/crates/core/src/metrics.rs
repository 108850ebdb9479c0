//! Trajectory accuracy metrics (ADE, AMD), coverage and timing aggregates.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};

use crate::assoc::iou;
use crate::motion::BBox;
use crate::{Error, Result};

/// Centimetres per pixel of the reference capture setup.
pub const PIXEL_TO_CM: f64 = 0.026;

/// Ordered `(frame, centre)` samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    points: Vec<(u32, [f64; 2])>,
}

impl Trajectory {
    pub fn new(points: Vec<(u32, [f64; 2])>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::contract("trajectory frames are not strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(u32, [f64; 2])] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.points.iter().map(|p| p.0)
    }

    /// Keeps only samples with `frame >= first`.
    pub fn from_frame(&self, first: u32) -> Trajectory {
        Trajectory {
            points: self.points.iter().filter(|p| p.0 >= first).cloned().collect(),
        }
    }
}

/// Point pairs on common frames plus the coverage of the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePairs {
    pub pairs: Vec<([f64; 2], [f64; 2])>,
    pub truth_frames: usize,
}

impl FramePairs {
    /// Fraction of truth frames that have a prediction.
    pub fn coverage(&self) -> f64 {
        if self.truth_frames == 0 {
            0.0
        } else {
            self.pairs.len() as f64 / self.truth_frames as f64
        }
    }
}

/// Pairs predictions and truth on equal frame indices.
pub fn pair_frames(pred: &Trajectory, truth: &Trajectory) -> FramePairs {
    let by_frame: BTreeMap<u32, [f64; 2]> = pred.points.iter().cloned().collect();
    let pairs = truth
        .points
        .iter()
        .filter_map(|(f, t)| by_frame.get(f).map(|p| (*p, *t)))
        .collect();
    FramePairs {
        pairs,
        truth_frames: truth.len(),
    }
}

/// Average displacement error: mean Euclidean distance over pairs.
pub fn ade(pairs: &[([f64; 2], [f64; 2])]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric("ADE over zero pairs"));
    }
    let sum: f64 = pairs.iter().map(|(p, t)| (p[0] - t[0]).hypot(p[1] - t[1])).sum();
    Ok(sum / pairs.len() as f64)
}

/// Covariance used by the Mahalanobis distance, with a ridge `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmdContext {
    pub sigma: Matrix2<f64>,
    pub epsilon: f64,
}

impl AmdContext {
    pub fn new(sigma: Matrix2<f64>, epsilon: f64) -> Self {
        Self { sigma, epsilon }
    }

    pub fn isotropic(variance: f64) -> Self {
        Self::new(Matrix2::identity() * variance, 0.0)
    }

    fn inverse(&self) -> Result<Matrix2<f64>> {
        let reg = self.sigma + Matrix2::identity() * self.epsilon;
        let pd = reg[(0, 0)] > 0.0 && reg.determinant() > 0.0 && (reg[(0, 1)] - reg[(1, 0)]).abs() <= 1e-12 * reg.abs().max();
        if !pd {
            return Err(Error::contract(format!("AMD covariance {reg:?} is not positive definite")));
        }
        reg.try_inverse()
            .ok_or_else(|| Error::contract("AMD covariance is singular"))
    }
}

/// Average Mahalanobis distance: mean of `sqrt(dᵀ (Σ + εI)⁻¹ d)`.
pub fn amd(pairs: &[([f64; 2], [f64; 2])], ctx: &AmdContext) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric("AMD over zero pairs"));
    }
    let inv = ctx.inverse()?;
    let sum: f64 = pairs
        .iter()
        .map(|(p, t)| {
            let d = Vector2::new(p[0] - t[0], p[1] - t[1]);
            d.dot(&(inv * d)).max(0.0).sqrt()
        })
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Population covariance of the truth points. `epsilon` defaults to
/// `1e-6 * trace(Σ)` (or `1e-6` for a zero-spread trajectory).
pub fn estimate_sigma(truth: &Trajectory, epsilon: Option<f64>) -> Result<AmdContext> {
    let n = truth.len();
    if n < 2 {
        return Err(Error::contract(format!("need at least 2 truth points to estimate Σ, got {n}")));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for (_, p) in &truth.points {
        mx += p[0];
        my += p[1];
    }
    mx /= n as f64;
    my /= n as f64;
    let mut s = Matrix2::zeros();
    for (_, p) in &truth.points {
        let d = Vector2::new(p[0] - mx, p[1] - my);
        s += d * d.transpose();
    }
    s /= n as f64;
    let eps = epsilon.unwrap_or_else(|| {
        let tr = s.trace();
        if tr > 0.0 {
            1e-6 * tr
        } else {
            1e-6
        }
    });
    Ok(AmdContext::new(s, eps))
}

/// Per-frame timing of one tracker step, milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameTiming {
    pub inference_ms: f64,
    pub update_ms: f64,
}

/// Mean inference and update time over frames.
pub fn timing_report(frames: &[FrameTiming]) -> (f64, f64) {
    if frames.is_empty() {
        return (0.0, 0.0);
    }
    let n = frames.len() as f64;
    let inf = frames.iter().map(|f| f.inference_ms).sum::<f64>() / n;
    let upd = frames.iter().map(|f| f.update_ms).sum::<f64>() / n;
    (inf, upd)
}

/// Accuracy and timing summary of one tracker on one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `None` when no frame could be paired.
    pub ade: Option<f64>,
    pub amd: Option<f64>,
    pub n_pairs: usize,
    pub coverage: f64,
    pub mean_inference_ms: f64,
    pub mean_update_ms: f64,
    pub pixel_to_cm: f64,
}

impl EvalReport {
    /// Builds a report from paired frames; Σ is estimated from `truth`.
    pub fn compute(pred: &Trajectory, truth: &Trajectory, timing: &[FrameTiming]) -> Result<Self> {
        let paired = pair_frames(pred, truth);
        let ade = ade(&paired.pairs).ok();
        let amd = match estimate_sigma(truth, None) {
            Ok(ctx) => amd(&paired.pairs, &ctx).ok(),
            Err(_) => None,
        };
        let (mean_inference_ms, mean_update_ms) = timing_report(timing);
        Ok(Self {
            ade,
            amd,
            n_pairs: paired.pairs.len(),
            coverage: paired.coverage(),
            mean_inference_ms,
            mean_update_ms,
            pixel_to_cm: PIXEL_TO_CM,
        })
    }

    pub fn ade_cm(&self) -> Option<f64> {
        self.ade.map(|a| a * self.pixel_to_cm)
    }

    /// Flat `key=value` text record, one field per line.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "ade={}", fmt_opt(self.ade));
        let _ = writeln!(s, "amd={}", fmt_opt(self.amd));
        let _ = writeln!(s, "n_pairs={}", self.n_pairs);
        let _ = writeln!(s, "coverage={:.6}", self.coverage);
        let _ = writeln!(s, "mean_inference_ms={:.6}", self.mean_inference_ms);
        let _ = writeln!(s, "mean_update_ms={:.6}", self.mean_update_ms);
        let _ = writeln!(s, "pixel_to_cm={}", self.pixel_to_cm);
        let _ = writeln!(s, "ade_cm={}", fmt_opt(self.ade_cm()));
        s
    }
}

/// Fixed-precision rendering; `NA` for an undefined metric.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

/// Reduces multi-track output to one predicted trajectory against a single
/// ground-truth object: per truth frame, the centre of the output box with
/// the highest IoU against the truth box, ties to the lowest id. Frames with
/// no output are left out.
pub fn reduce_to_truth(truth: &[(u32, BBox)], outputs: &BTreeMap<u32, Vec<(u64, BBox)>>) -> Trajectory {
    let mut points = Vec::new();
    for (frame, gt) in truth {
        let Some(outs) = outputs.get(frame) else { continue };
        let best = outs.iter().fold(None::<(f64, u64, BBox)>, |best, &(id, b)| {
            let v = iou(gt, &b);
            match best {
                Some((bv, bid, _)) if bv > v || (bv == v && bid < id) => best,
                _ => Some((v, id, b)),
            }
        });
        if let Some((_, _, b)) = best {
            points.push((*frame, b.center()));
        }
    }
    Trajectory { points }
}

/// Values published for the racquetball evaluation. Documentation only:
/// they are never asserted against simulated runs.
pub mod reference {
    /// Tracker column order used by both tables.
    pub const TRACKERS: [&str; 5] = ["DeepOCSORT", "OCSORT", "StrongSORT", "BoTSORT", "ByteTrack"];

    /// `(ADE, AMD)` per tracker (rows as [`TRACKERS`]) and scenario 1..4.
    pub const ACCURACY: [[(f64, f64); 4]; 5] = [
        [(22.97, 0.69), (31.31, 0.91), (50.42, 0.91), (19.9, 0.87)],
        [(65.26, 1.83), (93.5, 2.54), (111.8, 2.54), (39.16, 2.09)],
        [(99.82, 2.86), (169.7, 23.9), (157.22, 23.9), (153.7, 2.84)],
        [(51.7, 1.81), (158.0, 11.59), (74.11, 11.59), (178.5, 1.67)],
        [(39.4, 3.22), (146.4, 13.02), (56.48, 13.02), (215.0, 2.39)],
    ];

    /// `(inference ms, update ms)` per tracker and scenario 1..4.
    pub const TIMING_MS: [[(f64, f64); 4]; 5] = [
        [(31.1, 61.5), (24.8, 34.1), (24.9, 36.9), (26.2, 34.5)],
        [(30.8, 9.6), (24.7, 4.9), (24.7, 4.4), (24.8, 6.5)],
        [(31.1, 39.5), (24.9, 24.4), (25.4, 24.5), (25.3, 27.1)],
        [(32.0, 60.5), (24.8, 34.7), (25.3, 36.0), (26.5, 39.0)],
        [(32.5, 1.4), (24.7, 0.6), (24.7, 0.6), (24.6, 0.6)],
    ];
}
