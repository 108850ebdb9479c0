//! Flat key-value configuration files.
//!
//! One `key = value` per line, `#` starts a comment. Tracker fields are
//! addressed as `tracker.<kind>.<field>`, where `<kind>` is a tracker name or
//! `all`. Run-level keys: `run.detector_latency_ms`, `run.interp`.
//!
//! ```text
//! tracker.all.max_age = 20
//! tracker.botsort.use_cmc = true
//! run.interp = gsi
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::trackers::{TrackerConfig, TrackerKind};
use crate::{Error, Result};

use super::Interp;

/// Overrides read from a config file, applied on top of each kind's defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// `(kind or None for all, field, value)` in file order.
    pub tracker: Vec<(Option<TrackerKind>, String, String)>,
    pub detector_latency_ms: Option<f64>,
    pub interp: Option<Interp>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut out = ConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(n, format!("expected `key = value`, found `{line}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["tracker", kind, field] => {
                    let kind = if *kind == "all" {
                        None
                    } else {
                        Some(kind.parse::<TrackerKind>().map_err(|e| err(n, e.to_string()))?)
                    };
                    // validate the field name and value eagerly
                    TrackerConfig::default()
                        .set_field(field, value)
                        .map_err(|e| err(n, e.to_string()))?;
                    out.tracker.push((kind, field.to_string(), value.to_string()));
                }
                ["run", "detector_latency_ms"] => {
                    out.detector_latency_ms =
                        Some(value.parse().map_err(|_| err(n, format!("bad number `{value}`")))?);
                }
                ["run", "interp"] => out.interp = Some(value.parse().map_err(|e: Error| err(n, e.to_string()))?),
                _ => return Err(err(n, format!("unknown key `{key}`"))),
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Defaults for `kind` with the file's overrides applied in order.
    pub fn tracker_config(&self, kind: TrackerKind) -> Result<TrackerConfig> {
        let mut cfg = TrackerConfig::for_kind(kind);
        for (k, field, value) in &self.tracker {
            if k.is_none() || *k == Some(kind) {
                cfg.set_field(field, value)?;
            }
        }
        if let Some(l) = self.detector_latency_ms {
            cfg.detector_latency_ms = l;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-kind configs for a set of trackers.
pub fn resolve(file: &ConfigFile, kinds: &[TrackerKind]) -> Result<BTreeMap<TrackerKind, TrackerConfig>> {
    kinds.iter().map(|&k| Ok((k, file.tracker_config(k)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides() {
        let text = "# comment\ntracker.all.max_age = 20\ntracker.botsort.use_cmc = true  # trailing\nrun.interp = gsi\n";
        let f = ConfigFile::parse(text, Path::new("c.txt")).unwrap();
        let bot = f.tracker_config(TrackerKind::BotSort).unwrap();
        let sort = f.tracker_config(TrackerKind::Sort).unwrap();
        assert_eq!((bot.max_age, bot.use_cmc), (20, true));
        assert_eq!((sort.max_age, sort.use_cmc), (20, false));
        assert_eq!(f.interp, Some(Interp::Gsi));
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in ["tracker.sort.nope = 1", "tracker.kcf.max_age = 1", "max_age 3", "tracker.sort.max_age = x"] {
            match ConfigFile::parse(bad, Path::new("c.txt")) {
                Err(Error::Parse { line: 1, .. }) => {}
                other => panic!("{bad}: {other:?}"),
            }
        }
    }
}
