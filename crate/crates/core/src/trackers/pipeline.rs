use std::time::{Duration, Instant};

use crate::assoc::{
    adaptive_weighting, cosine_distance, fuse_bot, hungarian, iou_distance, ocm_cost, unit_direction, CostMatrix,
    SENTINEL,
};
use crate::cmc::Affine;
use crate::filter::{gating_distance_with_noise, nsa_scale};
use crate::metrics::FrameTiming;
use crate::motion::{bbox_to_measurement, BBox};
use crate::{Error, Result};

use super::track::dynamic_alpha;
use super::{Detection, Stage, Track, TrackerConfig, TrackerKind};

/// 95% quantile of the chi-square distribution with 4 degrees of freedom.
pub const CHI2_95_4DOF: f64 = 9.4877;

/// One emitted track state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

/// Output of one tracker step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame: u32,
    pub outputs: Vec<TrackOutput>,
    pub timing: FrameTiming,
    /// Set when the step had to degrade, e.g. missing embeddings.
    pub warning: Option<String>,
}

struct Matching {
    pairs: Vec<(usize, usize)>,
    tracks: Vec<usize>,
    dets: Vec<usize>,
}

/// Solves one association round between the listed tracks and detections;
/// indices in the result refer to the caller's lists.
fn associate(tracks: &[usize], dets: &[usize], cost: &CostMatrix) -> Matching {
    let a = hungarian(cost);
    Matching {
        pairs: a.pairs.iter().map(|&(i, j)| (tracks[i], dets[j])).collect(),
        tracks: a.unmatched_tracks.iter().map(|&i| tracks[i]).collect(),
        dets: a.unmatched_detections.iter().map(|&j| dets[j]).collect(),
    }
}

fn gate(c: &CostMatrix, gate: f64) -> CostMatrix {
    c.map(|&d| if d < gate { d } else { SENTINEL })
}

/// Multi-object tracker for one sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    kind: TrackerKind,
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
    update_time: Duration,
}

impl Tracker {
    pub fn new(kind: TrackerKind, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            kind,
            cfg,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            update_time: Duration::ZERO,
        })
    }

    /// Tracker with the kind's default configuration.
    pub fn with_defaults(kind: TrackerKind) -> Self {
        Self::new(kind, TrackerConfig::for_kind(kind)).expect("default config is valid")
    }

    pub fn kind(&self) -> TrackerKind {
        self.kind
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live tracks (never `Removed`).
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// One-step-ahead predicted box of every live track.
    pub fn predicted_boxes(&self) -> Result<Vec<(u64, BBox)>> {
        self.tracks.iter().map(|t| Ok((t.id, t.peek_prediction()?))).collect()
    }

    /// Processes the detections of `frame`. Frames must increase strictly;
    /// skipped frames count as detection-free.
    pub fn step(&mut self, frame: u32, dets: &[Detection], affine: Option<&Affine>) -> Result<FrameResult> {
        let start = Instant::now();
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::contract(format!("frame {frame} presented after frame {last}")));
            }
        }
        for d in dets {
            d.validate()?;
            if d.frame != frame {
                return Err(Error::contract(format!("detection of frame {} passed to frame {frame}", d.frame)));
            }
        }
        let skipped = self.last_frame.map_or(0, |last| frame - last - 1);
        self.last_frame = Some(frame);
        for _ in 0..skipped.min(self.cfg.max_age + 1) {
            for t in &mut self.tracks {
                t.predict()?;
                t.mark_missed(self.cfg.max_age);
            }
            self.tracks.retain(|t| t.stage != Stage::Removed);
        }
        self.update_time = Duration::ZERO;

        let mut warning = None;
        match self.kind {
            TrackerKind::Sort => self.sort_step(dets, affine)?,
            TrackerKind::ByteTrack => self.byte_step(dets, affine, false)?,
            TrackerKind::OcSort => self.ocsort_step(dets, affine, false)?,
            TrackerKind::DeepOcSort => {
                if dets.iter().all(|d| d.embedding.is_some()) {
                    self.ocsort_step(dets, affine, true)?
                } else {
                    warning = Some("detections without embeddings; appearance disabled for this frame".to_string());
                    self.ocsort_step(dets, affine, false)?
                }
            }
            TrackerKind::BotSort => self.byte_step(dets, affine, true)?,
            TrackerKind::StrongSort => self.strongsort_step(dets, affine)?,
        }

        let outputs = self
            .tracks
            .iter()
            .filter(|t| t.stage == Stage::Confirmed && t.age_since_update == 0)
            .map(|t| {
                Ok(TrackOutput {
                    id: t.id,
                    bbox: t.bbox()?,
                    confidence: t.last_confidence,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let total = start.elapsed();
        let timing = FrameTiming {
            inference_ms: total.as_secs_f64() * 1e3 + self.cfg.detector_latency_ms,
            update_ms: self.update_time.min(total).as_secs_f64() * 1e3,
        };
        Ok(FrameResult {
            frame,
            outputs,
            timing,
            warning,
        })
    }

    fn apply_cmc(&mut self, affine: Option<&Affine>) -> Result<()> {
        if let Some(a) = affine.filter(|_| self.cfg.use_cmc) {
            for t in &mut self.tracks {
                t.apply_camera_motion(a)?;
            }
        }
        Ok(())
    }

    fn predict_all(&mut self) -> Result<()> {
        for t in &mut self.tracks {
            t.predict()?;
        }
        Ok(())
    }

    fn predicted(&self, idx: &[usize]) -> Result<Vec<BBox>> {
        idx.iter().map(|&i| self.tracks[i].bbox()).collect()
    }

    fn spawn(&mut self, det: &Detection) -> Result<()> {
        let t = Track::spawn(self.next_id, det, &self.cfg)?;
        self.next_id += 1;
        self.tracks.push(t);
        Ok(())
    }

    /// Ages unmatched tracks, spawns tracks for the given detections and drops
    /// removed tracks.
    fn finish(&mut self, matched: &[bool], spawn: &[&Detection]) -> Result<()> {
        for (t, &m) in self.tracks.iter_mut().zip(matched) {
            if !m {
                t.mark_missed(self.cfg.max_age);
            }
        }
        self.tracks.retain(|t| t.stage != Stage::Removed);
        for d in spawn {
            self.spawn(d)?;
        }
        Ok(())
    }

    fn iou_cost(&self, tracks: &[usize], dets: &[&Detection]) -> Result<CostMatrix> {
        let boxes: Vec<BBox> = dets.iter().map(|d| d.bbox).collect();
        Ok(gate(&iou_distance(&self.predicted(tracks)?, &boxes), self.cfg.theta_iou))
    }

    /// Cosine distances between track appearances and detection embeddings;
    /// tracks without an appearance get the neutral distance 1.
    fn appearance_cost(&self, tracks: &[usize], dets: &[&Detection]) -> Result<CostMatrix> {
        let mut c = CostMatrix::new(tracks.len(), dets.len(), 1.0);
        for (i, &ti) in tracks.iter().enumerate() {
            let Some(a) = &self.tracks[ti].appearance else { continue };
            for (j, d) in dets.iter().enumerate() {
                if let Some(e) = &d.embedding {
                    c.set(i, j, cosine_distance(a, e)?);
                }
            }
        }
        Ok(c)
    }

    /// IoU association, confident detections only.
    fn sort_step(&mut self, dets: &[Detection], affine: Option<&Affine>) -> Result<()> {
        self.apply_cmc(affine)?;
        self.predict_all()?;
        let timer = Instant::now();
        let dets: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= self.cfg.det_threshold).collect();
        let all: Vec<usize> = (0..self.tracks.len()).collect();
        let det_idx: Vec<usize> = (0..dets.len()).collect();
        let m = associate(&all, &det_idx, &self.iou_cost(&all, &dets)?);
        let mut matched = vec![false; self.tracks.len()];
        for &(ti, dj) in &m.pairs {
            self.tracks[ti].update(dets[dj], &self.cfg, false)?;
            matched[ti] = true;
        }
        let spawn: Vec<&Detection> = m.dets.iter().map(|&j| dets[j]).collect();
        self.finish(&matched, &spawn)?;
        self.update_time += timer.elapsed();
        Ok(())
    }

    /// Two-stage association: confident detections against all tracks, then
    /// low-confidence detections against the still unmatched confirmed
    /// tracks. Only confident leftovers spawn tracks. With `appearance` the
    /// first stage fuses IoU and embedding distances and camera motion is
    /// applied after prediction.
    fn byte_step(&mut self, dets: &[Detection], affine: Option<&Affine>, appearance: bool) -> Result<()> {
        self.predict_all()?;
        self.apply_cmc(affine)?;
        let timer = Instant::now();
        let cfg = self.cfg.clone();
        let high: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= cfg.byte_high).collect();
        let low: Vec<&Detection> = dets
            .iter()
            .filter(|d| d.confidence >= cfg.byte_low && d.confidence < cfg.byte_high)
            .collect();

        let all: Vec<usize> = (0..self.tracks.len()).collect();
        let high_idx: Vec<usize> = (0..high.len()).collect();
        let mut cost = self.iou_cost(&all, &high)?;
        let use_app = appearance
            && high.iter().all(|d| d.embedding.is_some())
            && self.tracks.iter().any(|t| t.appearance.is_some());
        if use_app {
            let d_iou = iou_distance(&self.predicted(&all)?, &high.iter().map(|d| d.bbox).collect::<Vec<_>>());
            cost = fuse_bot(&d_iou, &self.appearance_cost(&all, &high)?, cfg.theta_iou, cfg.theta_emb)?;
        }
        let first = associate(&all, &high_idx, &cost);
        let mut matched = vec![false; self.tracks.len()];
        for &(ti, dj) in &first.pairs {
            let t = &mut self.tracks[ti];
            t.update(high[dj], &cfg, false)?;
            if appearance {
                t.blend_appearance(high[dj].embedding.as_ref(), cfg.ema_alpha);
            }
            matched[ti] = true;
        }

        let remaining: Vec<usize> = first
            .tracks
            .iter()
            .cloned()
            .filter(|&i| self.tracks[i].stage == Stage::Confirmed)
            .collect();
        let low_idx: Vec<usize> = (0..low.len()).collect();
        let second = associate(&remaining, &low_idx, &self.iou_cost(&remaining, &low)?);
        for &(ti, dj) in &second.pairs {
            self.tracks[ti].update(low[dj], &cfg, false)?;
            matched[ti] = true;
        }

        let spawn: Vec<&Detection> = first
            .dets
            .iter()
            .map(|&j| high[j])
            .filter(|d| d.confidence >= cfg.det_threshold)
            .collect();
        self.finish(&matched, &spawn)?;
        self.update_time += timer.elapsed();
        Ok(())
    }

    /// Observation-centric association: IoU plus a motion-direction
    /// consistency term, a recovery round on last observations, and re-update
    /// along a virtual trajectory for re-activated tracks. With `appearance`
    /// camera motion is applied before prediction and an adaptively weighted
    /// embedding distance joins the cost.
    fn ocsort_step(&mut self, dets: &[Detection], affine: Option<&Affine>, appearance: bool) -> Result<()> {
        self.apply_cmc(affine)?;
        self.predict_all()?;
        let timer = Instant::now();
        let cfg = self.cfg.clone();
        let dets: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= cfg.det_threshold).collect();
        let frame = self.last_frame.unwrap_or(0);
        let all: Vec<usize> = (0..self.tracks.len()).collect();
        let det_idx: Vec<usize> = (0..dets.len()).collect();

        let d_iou = iou_distance(&self.predicted(&all)?, &dets.iter().map(|d| d.bbox).collect::<Vec<_>>());
        let mut cost = CostMatrix::from_fn(all.len(), dets.len(), |i, j| {
            let di = d_iou.get(i, j);
            if !(di < cfg.theta_iou) {
                return SENTINEL;
            }
            let t = &self.tracks[all[i]];
            let ocm = t
                .reference_observation(frame, cfg.delta_t_ocm)
                .and_then(|(_, from)| unit_direction(from.center(), dets[j].bbox.center()))
                .map_or(0.0, |cand| ocm_cost(t.velocity_dir, cand, cfg.lambda_ocm));
            di + ocm
        });
        if appearance {
            let weighted = adaptive_weighting(&self.appearance_cost(&all, &dets)?, cfg.z_diff_floor, cfg.boost_cap);
            cost = cost.zip_with(&weighted, |c, a| c + cfg.lambda_app * a)?;
        }
        let first = associate(&all, &det_idx, &cost);

        let last_boxes: Vec<BBox> = first.tracks.iter().map(|&i| self.tracks[i].last_observation.1).collect();
        let left_boxes: Vec<BBox> = first.dets.iter().map(|&j| dets[j].bbox).collect();
        let recovery = associate(&first.tracks, &first.dets, &gate(&iou_distance(&last_boxes, &left_boxes), cfg.theta_iou));

        let mut matched = vec![false; self.tracks.len()];
        for &(ti, dj) in first.pairs.iter().chain(&recovery.pairs) {
            let t = &mut self.tracks[ti];
            let d = dets[dj];
            t.update(d, &cfg, cfg.use_oru)?;
            if appearance {
                t.blend_appearance(d.embedding.as_ref(), dynamic_alpha(cfg.ema_alpha, cfg.da_sigma, d.confidence));
            }
            matched[ti] = true;
        }
        let spawn: Vec<&Detection> = recovery.dets.iter().map(|&j| dets[j]).collect();
        self.finish(&matched, &spawn)?;
        self.update_time += timer.elapsed();
        Ok(())
    }

    /// Single global assignment on gated appearance and IoU distances with
    /// Mahalanobis gating; confidence-scaled measurement noise.
    fn strongsort_step(&mut self, dets: &[Detection], affine: Option<&Affine>) -> Result<()> {
        if let Some(d) = dets.iter().find(|d| d.embedding.is_none()) {
            return Err(Error::contract(format!(
                "strongsort needs appearance embeddings; detection at frame {} has none",
                d.frame
            )));
        }
        self.predict_all()?;
        self.apply_cmc(affine)?;
        let timer = Instant::now();
        let cfg = self.cfg.clone();
        let dets: Vec<&Detection> = dets.iter().filter(|d| d.confidence >= cfg.det_threshold).collect();
        let all: Vec<usize> = (0..self.tracks.len()).collect();
        let det_idx: Vec<usize> = (0..dets.len()).collect();
        let d_iou = iou_distance(&self.predicted(&all)?, &dets.iter().map(|d| d.bbox).collect::<Vec<_>>());
        let d_cos = self.appearance_cost(&all, &dets)?;
        let mut cost = CostMatrix::new(all.len(), dets.len(), SENTINEL);
        for (i, &ti) in all.iter().enumerate() {
            let t = &self.tracks[ti];
            for (j, d) in dets.iter().enumerate() {
                let dc = d_cos.get(i, j);
                if !(dc < cfg.theta_emb) {
                    continue;
                }
                let z = bbox_to_measurement(t.model_kind, &d.bbox)?;
                let r = if cfg.use_nsa {
                    &t.model.r * nsa_scale(d.confidence)?
                } else {
                    t.model.r.clone()
                };
                if gating_distance_with_noise(&t.kf, &t.model, &z, &r)? > CHI2_95_4DOF {
                    continue;
                }
                cost.set(i, j, cfg.lambda_app * dc + (1.0 - cfg.lambda_app) * d_iou.get(i, j));
            }
        }
        let m = associate(&all, &det_idx, &cost);
        let mut matched = vec![false; self.tracks.len()];
        for &(ti, dj) in &m.pairs {
            let t = &mut self.tracks[ti];
            t.update(dets[dj], &cfg, false)?;
            t.blend_appearance(dets[dj].embedding.as_ref(), cfg.ema_alpha);
            matched[ti] = true;
        }
        let spawn: Vec<&Detection> = m.dets.iter().map(|&j| dets[j]).collect();
        self.finish(&matched, &spawn)?;
        self.update_time += timer.elapsed();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::ModelKind;

    fn det(frame: u32, x: f64, y: f64) -> Detection {
        Detection::new(frame, BBox::new(x, y, 40.0, 40.0).unwrap(), 0.9)
    }

    fn run(tracker: &mut Tracker, frames: &[Vec<Detection>]) -> Vec<FrameResult> {
        frames
            .iter()
            .enumerate()
            .map(|(k, d)| tracker.step(k as u32 + 1, d, None).unwrap())
            .collect()
    }

    #[test]
    fn empty_in_empty_out() {
        for kind in TrackerKind::ALL {
            let mut t = Tracker::with_defaults(kind);
            let r = t.step(1, &[], None).unwrap();
            assert!(r.outputs.is_empty());
            assert!(r.timing.update_ms >= 0.0 && r.timing.update_ms <= r.timing.inference_ms);
        }
    }

    #[test]
    fn repeated_detection_confirms_one_track() {
        for kind in TrackerKind::ALL {
            let mut t = Tracker::with_defaults(kind);
            let frames: Vec<Vec<Detection>> =
                (1..=6).map(|f| vec![det(f, 100.0, 100.0).with_embedding(vec![1.0, 0.0])]).collect();
            let out = run(&mut t, &frames);
            assert!(out[0].outputs.is_empty() && out[1].outputs.is_empty(), "{kind}");
            for r in &out[2..] {
                assert_eq!(r.outputs.len(), 1, "{kind}");
                assert_eq!(r.outputs[0].id, 1, "{kind}");
            }
        }
    }

    #[test]
    fn two_targets_converge() {
        let frames: Vec<Vec<Detection>> = (1..=20)
            .map(|f| {
                let k = f as f64;
                vec![det(f, 50.0 + 3.0 * k, 100.0), det(f, 400.0 - 2.0 * k, 300.0 + k)]
            })
            .collect();
        for kind in TrackerKind::ALL {
            let mut cfg = TrackerConfig::for_kind(kind);
            if kind == TrackerKind::StrongSort {
                cfg.use_nsa = false;
            }
            let mut t = Tracker::new(kind, cfg).unwrap();
            let frames: Vec<Vec<Detection>> = frames
                .iter()
                .map(|ds| {
                    ds.iter()
                        .enumerate()
                        .map(|(i, d)| d.clone().with_embedding(if i == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }))
                        .collect()
                })
                .collect();
            let out = run(&mut t, &frames);
            let mut ids = std::collections::BTreeSet::new();
            for (k, r) in out.iter().enumerate().skip(2) {
                assert_eq!(r.outputs.len(), 2, "{kind} frame {}", k + 1);
                for o in &r.outputs {
                    ids.insert(o.id);
                    let truth = frames[k].iter().find(|d| (d.bbox.y - o.bbox.y).abs() < 50.0).unwrap();
                    if k >= 10 {
                        let e = (o.bbox.center()[0] - truth.bbox.center()[0])
                            .hypot(o.bbox.center()[1] - truth.bbox.center()[1]);
                        assert!(e < 1.0, "{kind} frame {} error {e}", k + 1);
                    }
                }
            }
            assert_eq!(ids.len(), 2, "{kind}");
        }
    }

    #[test]
    fn out_of_order_frame_is_rejected() {
        let mut t = Tracker::with_defaults(TrackerKind::Sort);
        t.step(5, &[], None).unwrap();
        assert!(matches!(t.step(5, &[], None), Err(Error::Contract(_))));
        assert!(t.step(4, &[], None).is_err());
    }

    #[test]
    fn tracks_expire_after_max_age() {
        for kind in TrackerKind::ALL {
            let mut t = Tracker::with_defaults(kind);
            let frames: Vec<Vec<Detection>> =
                (1..=4).map(|f| vec![det(f, 100.0, 100.0).with_embedding(vec![1.0, 0.0])]).collect();
            run(&mut t, &frames);
            assert_eq!(t.tracks().len(), 1);
            let max_age = t.config().max_age;
            for f in 5..=5 + max_age {
                t.step(f, &[], None).unwrap();
            }
            assert!(t.tracks().is_empty(), "{kind}");
        }
    }

    #[test]
    fn byte_ignores_weak_detections() {
        let mut t = Tracker::with_defaults(TrackerKind::ByteTrack);
        let weak = Detection::new(1, BBox::new(10.0, 10.0, 40.0, 40.0).unwrap(), 0.3);
        t.step(1, &[weak], None).unwrap();
        assert!(t.tracks().is_empty());
        let faint = Detection::new(2, BBox::new(10.0, 10.0, 40.0, 40.0).unwrap(), 0.05);
        let r = t.step(2, &[faint], None).unwrap();
        assert!(r.outputs.is_empty() && t.tracks().is_empty());
    }

    #[test]
    fn byte_keeps_track_through_dip() {
        let frames: Vec<Vec<Detection>> = (1..=20)
            .map(|f| {
                let mut d = det(f, 50.0 + 2.0 * f as f64, 100.0);
                if (8..=10).contains(&f) {
                    d.confidence = 0.3;
                }
                vec![d]
            })
            .collect();
        let mut byte = Tracker::with_defaults(TrackerKind::ByteTrack);
        let out = run(&mut byte, &frames);
        assert!(out[2..].iter().all(|r| r.outputs.len() == 1 && r.outputs[0].id == 1));
        let mut sort = Tracker::with_defaults(TrackerKind::Sort);
        let out = run(&mut sort, &frames);
        assert!(out[7..10].iter().all(|r| r.outputs.is_empty()));
    }

    #[test]
    fn ocsort_without_occlusion_matches_sort() {
        let frames: Vec<Vec<Detection>> = (1..=30).map(|f| vec![det(f, 50.0 + 3.0 * f as f64, 100.0 + 0.5 * f as f64)]).collect();
        let mut sort = Tracker::with_defaults(TrackerKind::Sort);
        let cfg = TrackerConfig {
            lambda_ocm: 0.0,
            ..TrackerConfig::default()
        };
        let mut oc = Tracker::new(TrackerKind::OcSort, cfg).unwrap();
        let a = run(&mut sort, &frames);
        let b = run(&mut oc, &frames);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.outputs, y.outputs);
        }
    }

    #[test]
    fn ocr_recovers_stationary_target() {
        // track confirmed on a moving box that then stops dead: the
        // prediction overshoots while the last observation still overlaps
        let cfg = TrackerConfig {
            min_hits: 1,
            ..TrackerConfig::default()
        };
        let mut oc = Tracker::new(TrackerKind::OcSort, cfg.clone()).unwrap();
        let mut frames: Vec<Vec<Detection>> = (1..=6).map(|f| vec![det(f, 8.0 * f as f64, 100.0)]).collect();
        frames.push(vec![]);
        frames.push(vec![]);
        frames.push(vec![]);
        frames.push(vec![det(10, 48.0, 100.0)]);
        let out = run(&mut oc, &frames);
        let t = &oc.tracks()[0];
        assert_eq!(t.id, 1);
        assert_eq!(out[9].outputs.len(), 1);
        assert_eq!(out[9].outputs[0].id, 1);

        let mut sort = Tracker::new(TrackerKind::Sort, cfg).unwrap();
        let out = run(&mut sort, &frames);
        assert_ne!(out[9].outputs.first().map(|o| o.id), Some(1));
    }

    #[test]
    fn deep_ocsort_flags_missing_embeddings() {
        let mut t = Tracker::with_defaults(TrackerKind::DeepOcSort);
        let r = t.step(1, &[det(1, 0.0, 0.0)], None).unwrap();
        assert!(r.warning.is_some());
        let r = t.step(2, &[det(2, 0.0, 0.0).with_embedding(vec![1.0])], None).unwrap();
        assert!(r.warning.is_none());
    }

    #[test]
    fn strongsort_requires_embeddings() {
        let mut t = Tracker::with_defaults(TrackerKind::StrongSort);
        assert!(matches!(t.step(1, &[det(1, 0.0, 0.0)], None), Err(Error::Contract(_))));
    }

    #[test]
    fn strongsort_full_confidence_follows_measurements() {
        let mut t = Tracker::with_defaults(TrackerKind::StrongSort);
        let frames: Vec<Vec<Detection>> = (1..=10)
            .map(|f| {
                let mut d = det(f, 50.0 + 7.0 * f as f64, 100.0).with_embedding(vec![1.0, 0.0]);
                d.confidence = 1.0;
                vec![d]
            })
            .collect();
        let out = run(&mut t, &frames);
        for (r, ds) in out.iter().zip(&frames).skip(2) {
            let o = &r.outputs[0].bbox;
            assert!((o.x - ds[0].bbox.x).abs() < 1e-2 && (o.w - 40.0).abs() < 1e-2);
        }
    }

    #[test]
    fn botsort_identity_affine_is_noop() {
        let frames: Vec<Vec<Detection>> = (1..=25)
            .map(|f| vec![det(f, 50.0 + 3.0 * f as f64, 100.0 + (f as f64).sin() * 4.0)])
            .collect();
        let cfg = TrackerConfig {
            use_cmc: true,
            ..TrackerConfig::for_kind(TrackerKind::BotSort)
        };
        let mut with = Tracker::new(TrackerKind::BotSort, cfg).unwrap();
        let mut without = Tracker::with_defaults(TrackerKind::BotSort);
        for (k, d) in frames.iter().enumerate() {
            let f = k as u32 + 1;
            let a = with.step(f, d, Some(&Affine::identity())).unwrap();
            let b = without.step(f, d, None).unwrap();
            assert_eq!(a.outputs.len(), b.outputs.len());
            for (x, y) in a.outputs.iter().zip(&b.outputs) {
                assert!((x.bbox.x - y.bbox.x).abs() < 1e-9 && (x.bbox.y - y.bbox.y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn botsort_without_embeddings_equals_byte_on_wh() {
        let frames: Vec<Vec<Detection>> = (1..=25)
            .map(|f| {
                let mut d = det(f, 50.0 + 3.0 * f as f64, 100.0);
                d.confidence = if f % 5 == 0 { 0.3 } else { 0.9 };
                vec![d, Detection::new(f, BBox::new(400.0, 10.0 * f as f64, 30.0, 30.0).unwrap(), 0.7)]
            })
            .collect();
        let mut bot = Tracker::with_defaults(TrackerKind::BotSort);
        let cfg = TrackerConfig {
            model_kind: ModelKind::Wh,
            ..TrackerConfig::default()
        };
        let mut byte = Tracker::new(TrackerKind::ByteTrack, cfg).unwrap();
        assert_eq!(
            run(&mut bot, &frames).iter().map(|r| r.outputs.clone()).collect::<Vec<_>>(),
            run(&mut byte, &frames).iter().map(|r| r.outputs.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn deterministic_outputs() {
        let frames: Vec<Vec<Detection>> = (1..=15).map(|f| vec![det(f, 10.0 * f as f64, 50.0).with_embedding(vec![0.6, 0.8])]).collect();
        for kind in TrackerKind::ALL {
            let mut a = Tracker::with_defaults(kind);
            let mut b = Tracker::with_defaults(kind);
            let ra: Vec<_> = run(&mut a, &frames).into_iter().map(|r| r.outputs).collect();
            let rb: Vec<_> = run(&mut b, &frames).into_iter().map(|r| r.outputs).collect();
            assert_eq!(ra, rb);
        }
    }
}
