//! Track lifecycle and the tracker pipelines.
//!
//! One [`Tracker`] instance owns the tracks of one sequence. Its behaviour is
//! selected by [`TrackerKind`]; [`Tracker::step`] dispatches to the
//! per-kind step functions and measures timing.

mod config;
mod track;
mod pipeline;

pub use config::{TrackerConfig, TrackerKind};
pub use pipeline::{FrameResult, TrackOutput, Tracker};
pub use track::{Stage, Track};

use crate::motion::BBox;
use crate::{Error, Result};

/// One detector observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub confidence: f64,
    /// Unit-norm appearance embedding, when the detector provides one.
    pub embedding: Option<Vec<f64>>,
    pub frame: u32,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, confidence: f64) -> Self {
        Self {
            bbox,
            confidence,
            embedding: None,
            frame,
        }
    }

    pub fn with_embedding(mut self, e: Vec<f64>) -> Self {
        self.embedding = Some(e);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::contract(format!(
                "detection confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        if let Some(e) = &self.embedding {
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::contract(format!("embedding norm {norm} is not 1")));
            }
        }
        Ok(())
    }
}

/// Scales `v` to unit length; `None` for a zero vector.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}
