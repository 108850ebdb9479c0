use std::fmt;
use std::str::FromStr;

use crate::motion::ModelKind;
use crate::{Error, Result};

/// The tracker pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrackerKind {
    Sort,
    ByteTrack,
    OcSort,
    DeepOcSort,
    BotSort,
    StrongSort,
}

impl TrackerKind {
    /// The five trackers compared in the benchmark, in report order.
    pub const BENCH: [TrackerKind; 5] = [
        TrackerKind::DeepOcSort,
        TrackerKind::OcSort,
        TrackerKind::StrongSort,
        TrackerKind::BotSort,
        TrackerKind::ByteTrack,
    ];

    pub const ALL: [TrackerKind; 6] = [
        TrackerKind::Sort,
        TrackerKind::ByteTrack,
        TrackerKind::OcSort,
        TrackerKind::DeepOcSort,
        TrackerKind::BotSort,
        TrackerKind::StrongSort,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::Sort => "sort",
            TrackerKind::ByteTrack => "bytetrack",
            TrackerKind::OcSort => "ocsort",
            TrackerKind::DeepOcSort => "deepocsort",
            TrackerKind::BotSort => "botsort",
            TrackerKind::StrongSort => "strongsort",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            TrackerKind::Sort => "SORT",
            TrackerKind::ByteTrack => "ByteTrack",
            TrackerKind::OcSort => "OCSORT",
            TrackerKind::DeepOcSort => "DeepOCSORT",
            TrackerKind::BotSort => "BoTSORT",
            TrackerKind::StrongSort => "StrongSORT",
        }
    }

    pub fn requires_embeddings(self) -> bool {
        self == TrackerKind::StrongSort
    }

    /// Motion model the pipeline runs on by default.
    pub fn default_model(self) -> ModelKind {
        match self {
            TrackerKind::BotSort | TrackerKind::StrongSort => ModelKind::Wh,
            _ => ModelKind::Sort,
        }
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_lowercase();
        TrackerKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::contract(format!("unknown tracker `{s}`")))
    }
}

/// Tunables shared by all pipelines. Each pipeline reads the fields it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub min_hits: u32,
    pub max_age: u32,
    /// Detections below this confidence are dropped by single-stage pipelines
    /// and cannot spawn tracks in any pipeline.
    pub det_threshold: f64,
    pub byte_high: f64,
    pub byte_low: f64,
    /// IoU distance gate; pairs with `1 - IoU >= theta_iou` are infeasible.
    pub theta_iou: f64,
    /// Cosine distance gate for appearance matches.
    pub theta_emb: f64,
    pub lambda_ocm: f64,
    pub delta_t_ocm: u32,
    pub ema_alpha: f64,
    pub da_sigma: f64,
    /// Appearance weight in the fused costs.
    pub lambda_app: f64,
    pub z_diff_floor: f64,
    pub boost_cap: f64,
    pub use_nsa: bool,
    pub use_cmc: bool,
    pub use_oru: bool,
    pub model_kind: ModelKind,
    pub q_scale: f64,
    pub r_scale: f64,
    /// Constant detector time added to every frame's inference time.
    pub detector_latency_ms: f64,
}

impl TrackerConfig {
    pub fn for_kind(kind: TrackerKind) -> Self {
        Self {
            model_kind: kind.default_model(),
            use_nsa: kind == TrackerKind::StrongSort,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_hits < 1 {
            return Err(Error::contract("min_hits must be >= 1"));
        }
        if self.max_age < 1 {
            return Err(Error::contract("max_age must be >= 1"));
        }
        if !(self.byte_low < self.byte_high) {
            return Err(Error::contract(format!(
                "byte_low {} must be below byte_high {}",
                self.byte_low, self.byte_high
            )));
        }
        for (name, v) in [
            ("det_threshold", self.det_threshold),
            ("byte_high", self.byte_high),
            ("byte_low", self.byte_low),
            ("theta_iou", self.theta_iou),
            ("ema_alpha", self.ema_alpha),
            ("lambda_app", self.lambda_app),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::contract(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(0.0..1.0).contains(&self.da_sigma) {
            return Err(Error::contract(format!("da_sigma = {} outside [0, 1)", self.da_sigma)));
        }
        if !(self.theta_emb >= 0.0) || !(self.lambda_ocm >= 0.0) {
            return Err(Error::contract("theta_emb and lambda_ocm must be >= 0"));
        }
        if self.delta_t_ocm < 1 {
            return Err(Error::contract("delta_t_ocm must be >= 1"));
        }
        if !(self.q_scale > 0.0) || !(self.r_scale > 0.0) {
            return Err(Error::contract("q_scale and r_scale must be > 0"));
        }
        if !(self.detector_latency_ms >= 0.0) {
            return Err(Error::contract("detector_latency_ms must be >= 0"));
        }
        Ok(())
    }

    /// Sets a field from its textual name and value.
    pub fn set_field(&mut self, field: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(field: &str, v: &str) -> Result<T> {
            v.trim()
                .parse()
                .map_err(|_| Error::contract(format!("bad value `{v}` for {field}")))
        }
        match field {
            "min_hits" => self.min_hits = num(field, value)?,
            "max_age" => self.max_age = num(field, value)?,
            "det_threshold" => self.det_threshold = num(field, value)?,
            "byte_high" => self.byte_high = num(field, value)?,
            "byte_low" => self.byte_low = num(field, value)?,
            "theta_iou" => self.theta_iou = num(field, value)?,
            "theta_emb" => self.theta_emb = num(field, value)?,
            "lambda_ocm" => self.lambda_ocm = num(field, value)?,
            "delta_t_ocm" => self.delta_t_ocm = num(field, value)?,
            "ema_alpha" => self.ema_alpha = num(field, value)?,
            "da_sigma" => self.da_sigma = num(field, value)?,
            "lambda_app" => self.lambda_app = num(field, value)?,
            "z_diff_floor" => self.z_diff_floor = num(field, value)?,
            "boost_cap" => self.boost_cap = num(field, value)?,
            "use_nsa" => self.use_nsa = num(field, value)?,
            "use_cmc" => self.use_cmc = num(field, value)?,
            "use_oru" => self.use_oru = num(field, value)?,
            "model_kind" => self.model_kind = value.trim().parse()?,
            "q_scale" => self.q_scale = num(field, value)?,
            "r_scale" => self.r_scale = num(field, value)?,
            "detector_latency_ms" => self.detector_latency_ms = num(field, value)?,
            other => return Err(Error::contract(format!("unknown tracker field `{other}`"))),
        }
        Ok(())
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            min_hits: 3,
            max_age: 30,
            det_threshold: 0.5,
            byte_high: 0.6,
            byte_low: 0.1,
            theta_iou: 0.5,
            theta_emb: 0.25,
            lambda_ocm: 0.2,
            delta_t_ocm: 3,
            ema_alpha: 0.9,
            da_sigma: 0.6,
            lambda_app: 0.5,
            z_diff_floor: 0.1,
            boost_cap: 1.0,
            use_nsa: false,
            use_cmc: false,
            use_oru: true,
            model_kind: ModelKind::Sort,
            q_scale: 1.0,
            r_scale: 1.0,
            detector_latency_ms: 0.0,
        }
    }
}
