use std::collections::VecDeque;

use crate::assoc::unit_direction;
use crate::cmc::{compensate_state, warp_box, Affine};
use crate::filter::{nsa_update, predict, update, GaussianState, LinearModel};
use crate::interp::lerp_box;
use crate::motion::{bbox_to_measurement, bbox_to_state, build_model_for_area, initial_covariance, state_to_bbox_with_size, BBox, ModelKind};
use crate::Result;

use super::{normalize, Detection, TrackerConfig};

const HISTORY_LEN: usize = 32;

/// Lifecycle stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

/// One tracked object.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub stage: Stage,
    pub kf: GaussianState,
    pub model_kind: ModelKind,
    pub model: LinearModel,
    pub hits: u32,
    pub age_since_update: u32,
    pub last_observation: (u32, BBox),
    pub observation_history: VecDeque<(u32, BBox)>,
    pub appearance: Option<Vec<f64>>,
    pub velocity_dir: Option<[f64; 2]>,
    pub last_confidence: f64,
    /// Filter state right after the last real update, replayed by ORU.
    observed_state: GaussianState,
}

impl Track {
    pub fn spawn(id: u64, det: &Detection, cfg: &TrackerConfig) -> Result<Self> {
        let kind = cfg.model_kind;
        let model = build_model_for_area(kind, 1.0, cfg.q_scale, cfg.r_scale, det.bbox.area())?;
        let p0 = initial_covariance(kind, &model, cfg.r_scale);
        let kf = GaussianState::new(bbox_to_state(kind, &det.bbox)?, p0)?;
        let mut history = VecDeque::with_capacity(HISTORY_LEN);
        history.push_back((det.frame, det.bbox));
        Ok(Self {
            id,
            stage: if cfg.min_hits <= 1 { Stage::Confirmed } else { Stage::Tentative },
            observed_state: kf.clone(),
            kf,
            model_kind: kind,
            model,
            hits: 1,
            age_since_update: 0,
            last_observation: (det.frame, det.bbox),
            observation_history: history,
            appearance: det.embedding.clone(),
            velocity_dir: None,
            last_confidence: det.confidence,
        })
    }

    fn size_hint(&self) -> (f64, f64) {
        (self.last_observation.1.w, self.last_observation.1.h)
    }

    /// Box of the current filter mean.
    pub fn bbox(&self) -> Result<BBox> {
        state_to_bbox_with_size(self.model_kind, &self.kf.mean, self.size_hint())
    }

    /// Box of the one-step-ahead prediction, without changing the track.
    pub fn peek_prediction(&self) -> Result<BBox> {
        let next = predict(&self.kf, &self.model, None)?;
        state_to_bbox_with_size(self.model_kind, &next.mean, self.size_hint())
    }

    /// Zeroes size rates that would drive a size through zero.
    fn clamp_size_rates(state: &mut GaussianState, kind: ModelKind) {
        let pairs: &[(usize, usize)] = match kind {
            ModelKind::Sort => &[(2, 6)],
            ModelKind::Wh => &[(2, 6), (3, 7)],
            ModelKind::Point => &[],
        };
        for &(s, rate) in pairs {
            if state.mean[s] + state.mean[rate] <= 0.0 {
                state.mean[rate] = 0.0;
            }
        }
    }

    pub fn predict(&mut self) -> Result<()> {
        Self::clamp_size_rates(&mut self.kf, self.model_kind);
        self.kf = predict(&self.kf, &self.model, None)?;
        self.age_since_update += 1;
        Ok(())
    }

    pub fn apply_camera_motion(&mut self, a: &Affine) -> Result<()> {
        self.kf = compensate_state(a, &self.kf, self.model_kind)?;
        self.observed_state = compensate_state(a, &self.observed_state, self.model_kind)?;
        self.last_observation.1 = warp_box(a, &self.last_observation.1)?;
        for entry in self.observation_history.iter_mut() {
            entry.1 = warp_box(a, &entry.1)?;
        }
        Ok(())
    }

    fn correct(state: &GaussianState, model: &LinearModel, kind: ModelKind, b: &BBox, conf: f64, nsa: bool) -> Result<GaussianState> {
        let z = bbox_to_measurement(kind, b)?;
        let (post, _) = if nsa {
            nsa_update(state, model, &z, conf)?
        } else {
            update(state, model, &z, true)?
        };
        Ok(post)
    }

    /// Observation used as the origin of motion directions: the latest one at
    /// least `delta_t` frames before `frame`, else the oldest kept.
    pub fn reference_observation(&self, frame: u32, delta_t: u32) -> Option<(u32, BBox)> {
        let cutoff = frame.checked_sub(delta_t);
        let older = cutoff.and_then(|c| self.observation_history.iter().rev().find(|(f, _)| *f <= c));
        older.or_else(|| self.observation_history.front()).copied().filter(|(f, _)| *f < frame)
    }

    /// Replays predict/update along the straight line between the last
    /// observation and `b` observed at `frame`, leaving the filter at the
    /// prior for `frame`.
    fn re_update(&mut self, frame: u32, b: &BBox, nsa: bool) -> Result<()> {
        let (f0, b0) = self.last_observation;
        let mut state = self.observed_state.clone();
        for f in f0 + 1..=frame {
            Self::clamp_size_rates(&mut state, self.model_kind);
            state = predict(&state, &self.model, None)?;
            if f < frame {
                let virt = lerp_box(f0, &b0, frame, b, f);
                state = Self::correct(&state, &self.model, self.model_kind, &virt, self.last_confidence, nsa)?;
            }
        }
        self.kf = state;
        Ok(())
    }

    /// Fuses a matched detection.
    pub fn update(&mut self, det: &Detection, cfg: &TrackerConfig, oru: bool) -> Result<()> {
        let gap = det.frame.saturating_sub(self.last_observation.0);
        if oru && gap > 1 {
            self.re_update(det.frame, &det.bbox, cfg.use_nsa)?;
        }
        self.kf = Self::correct(&self.kf, &self.model, self.model_kind, &det.bbox, det.confidence, cfg.use_nsa)?;
        self.observed_state = self.kf.clone();

        if let Some((_, from)) = self.reference_observation(det.frame, cfg.delta_t_ocm) {
            if let Some(d) = unit_direction(from.center(), det.bbox.center()) {
                self.velocity_dir = Some(d);
            }
        }
        if self.observation_history.len() == HISTORY_LEN {
            self.observation_history.pop_front();
        }
        self.observation_history.push_back((det.frame, det.bbox));
        self.last_observation = (det.frame, det.bbox);
        self.last_confidence = det.confidence;
        self.hits += 1;
        self.age_since_update = 0;
        self.stage = match self.stage {
            Stage::Tentative if self.hits >= cfg.min_hits => Stage::Confirmed,
            Stage::Tentative => Stage::Tentative,
            _ => Stage::Confirmed,
        };
        Ok(())
    }

    /// Blends a detection embedding into the appearance with weight `1 - alpha`.
    pub fn blend_appearance(&mut self, embedding: Option<&Vec<f64>>, alpha: f64) {
        let Some(e) = embedding else { return };
        let mixed = match &self.appearance {
            Some(a) if a.len() == e.len() => a.iter().zip(e).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect(),
            _ => e.clone(),
        };
        self.appearance = normalize(&mixed).or_else(|| Some(e.clone()));
    }

    /// Bookkeeping for a frame without a matched detection.
    pub fn mark_missed(&mut self, max_age: u32) {
        self.stage = match self.stage {
            Stage::Tentative => Stage::Removed,
            _ if self.age_since_update > max_age => Stage::Removed,
            Stage::Removed => Stage::Removed,
            _ => Stage::Lost,
        };
    }
}

/// Appearance EMA weight for a detection of confidence `conf`: the lower the
/// trust in the detection, the closer the weight is to one.
pub fn dynamic_alpha(ema_alpha: f64, da_sigma: f64, conf: f64) -> f64 {
    let trust = ((conf - da_sigma) / (1.0 - da_sigma)).clamp(0.0, 1.0);
    ema_alpha + (1.0 - ema_alpha) * (1.0 - trust)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: u32, x: f64) -> Detection {
        Detection::new(frame, BBox::new(x, 50.0, 40.0, 40.0).unwrap(), 0.9)
    }

    #[test]
    fn dynamic_alpha_limits() {
        assert_eq!(dynamic_alpha(0.9, 0.6, 1.0), 0.9);
        assert_eq!(dynamic_alpha(0.9, 0.6, 0.6), 1.0);
        assert_eq!(dynamic_alpha(0.9, 0.6, 0.2), 1.0);
        assert!((dynamic_alpha(0.9, 0.6, 0.8) - 0.95).abs() < 1e-12);
    }

    #[test]
    fn lifecycle() {
        let cfg = TrackerConfig::default();
        let mut t = Track::spawn(1, &det(1, 0.0), &cfg).unwrap();
        assert_eq!(t.stage, Stage::Tentative);
        for f in 2..=3 {
            t.predict().unwrap();
            t.update(&det(f, 0.0), &cfg, false).unwrap();
        }
        assert_eq!((t.stage, t.hits), (Stage::Confirmed, 3));
        t.predict().unwrap();
        t.mark_missed(cfg.max_age);
        assert_eq!(t.stage, Stage::Lost);
        t.predict().unwrap();
        t.update(&det(5, 0.0), &cfg, true).unwrap();
        assert_eq!(t.stage, Stage::Confirmed);

        let mut tent = Track::spawn(2, &det(1, 0.0), &cfg).unwrap();
        tent.predict().unwrap();
        tent.mark_missed(cfg.max_age);
        assert_eq!(tent.stage, Stage::Removed);
    }

    #[test]
    fn velocity_direction_from_history() {
        let cfg = TrackerConfig::default();
        let mut t = Track::spawn(1, &det(1, 0.0), &cfg).unwrap();
        assert!(t.velocity_dir.is_none());
        for f in 2..=6 {
            t.predict().unwrap();
            t.update(&det(f, 4.0 * f as f64), &cfg, false).unwrap();
        }
        let d = t.velocity_dir.unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && d[1].abs() < 1e-12);
        assert_eq!(t.reference_observation(7, 3).unwrap().0, 4);
    }

    #[test]
    fn oru_shrinks_covariance() {
        let cfg = TrackerConfig::default();
        let run = |oru: bool| {
            let mut t = Track::spawn(1, &det(1, 0.0), &cfg).unwrap();
            for f in 2..=10 {
                t.predict().unwrap();
                t.update(&det(f, 3.0 * f as f64), &cfg, false).unwrap();
            }
            for _ in 11..=15 {
                t.predict().unwrap();
                t.mark_missed(cfg.max_age);
            }
            t.predict().unwrap();
            t.update(&det(16, 48.0), &cfg, oru).unwrap();
            t.kf.trace()
        };
        assert!(run(true) < run(false));
    }

    #[test]
    fn appearance_ema_stays_unit() {
        let cfg = TrackerConfig::default();
        let mut t = Track::spawn(1, &det(1, 0.0).with_embedding(vec![1.0, 0.0]), &cfg).unwrap();
        t.blend_appearance(Some(&vec![0.0, 1.0]), 0.9);
        let a = t.appearance.clone().unwrap();
        assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - 1.0).abs() < 1e-12);
        assert!(a[0] > a[1]);
    }
}
