//! MOT-style text files: detections, results, ground truth, embeddings and
//! affines.
//!
//! Detection and result lines are `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`;
//! `id` and the trailing world coordinates are `-1` when unused. Embedding
//! sidecars hold `frame,index,e0,...,e{d-1}` where `index` is the position of
//! the detection among the lines of its frame. Affine files hold
//! `frame m00 m01 m10 m11 t0 t1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cmc::Affine;
use crate::motion::BBox;
use crate::trackers::{Detection, FrameResult};
use crate::{Error, Result};

/// Detections grouped by frame, frames ascending.
pub type FrameDetections = Vec<(u32, Vec<Detection>)>;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// One parsed MOT line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRecord {
    pub frame: u32,
    pub id: i64,
    pub bbox: BBox,
    pub confidence: f64,
}

fn parse_mot_line(path: &Path, n: usize, line: &str) -> Result<MotRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 7 {
        return Err(parse_err(path, n, format!("expected at least 7 fields, found {}", fields.len())));
    }
    let num = |i: usize| -> Result<f64> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| parse_err(path, n, format!("field {} `{}` is not a number", i + 1, fields[i])))
    };
    let frame = fields[0]
        .parse::<u32>()
        .map_err(|_| parse_err(path, n, format!("frame `{}` is not a non-negative integer", fields[0])))?;
    let id = num(1)?;
    let bbox = BBox::new(num(2)?, num(3)?, num(4)?, num(5)?).map_err(|e| parse_err(path, n, e.to_string()))?;
    let confidence = num(6)?;
    if !(0.0..=1.0).contains(&confidence) {
        return Err(parse_err(path, n, format!("confidence {confidence} outside [0, 1]")));
    }
    Ok(MotRecord {
        frame,
        id: id as i64,
        bbox,
        confidence,
    })
}

/// Reads every MOT line of a file, in file order.
pub fn read_mot(path: &Path) -> Result<Vec<MotRecord>> {
    let text = read(path)?;
    content_lines(&text).map(|(n, l)| parse_mot_line(path, n, l)).collect()
}

/// Reads a detection file, grouping by frame (ascending, file order within a
/// frame), and attaches embeddings from the optional sidecar.
pub fn ingest_detections(path: &Path, embeddings: Option<&Path>) -> Result<FrameDetections> {
    let mut frames: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    for r in read_mot(path)? {
        frames
            .entry(r.frame)
            .or_default()
            .push(Detection::new(r.frame, r.bbox, r.confidence));
    }
    if let Some(emb_path) = embeddings {
        let text = read(emb_path)?;
        for (n, line) in content_lines(&text) {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(parse_err(emb_path, n, "expected frame,index and at least one component"));
            }
            let frame: u32 = fields[0]
                .parse()
                .map_err(|_| parse_err(emb_path, n, format!("bad frame `{}`", fields[0])))?;
            let index: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(emb_path, n, format!("bad index `{}`", fields[1])))?;
            let e = fields[2..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| parse_err(emb_path, n, format!("bad component `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            let det = frames
                .get_mut(&frame)
                .and_then(|ds| ds.get_mut(index))
                .ok_or_else(|| parse_err(emb_path, n, format!("no detection {index} in frame {frame}")))?;
            let unit = crate::trackers::normalize(&e).ok_or_else(|| parse_err(emb_path, n, "zero embedding"))?;
            det.embedding = Some(unit);
        }
    }
    Ok(frames.into_iter().collect())
}

fn mot_line(s: &mut String, frame: u32, id: i64, b: &BBox, conf: f64) {
    let _ = writeln!(s, "{frame},{id},{},{},{},{},{conf},-1,-1,-1", b.x, b.y, b.w, b.h);
}

/// Writes detections with id `-1`, and the embedding sidecar when a path is
/// given and any detection carries an embedding.
pub fn write_detections(path: &Path, frames: &[(u32, Vec<Detection>)], embeddings: Option<&Path>) -> Result<()> {
    let mut s = String::new();
    let mut e = String::new();
    for (frame, dets) in frames {
        for (i, d) in dets.iter().enumerate() {
            mot_line(&mut s, *frame, -1, &d.bbox, d.confidence);
            if let Some(emb) = &d.embedding {
                let _ = write!(e, "{frame},{i}");
                for x in emb {
                    let _ = write!(e, ",{x}");
                }
                e.push('\n');
            }
        }
    }
    write(path, &s)?;
    if let Some(p) = embeddings {
        write(p, &e)?;
    }
    Ok(())
}

/// Writes tracker outputs with their ids.
pub fn write_results(path: &Path, results: &[FrameResult]) -> Result<()> {
    let mut s = String::new();
    for r in results {
        for o in &r.outputs {
            mot_line(&mut s, r.frame, o.id as i64, &o.bbox, o.confidence);
        }
    }
    write(path, &s)
}

/// Writes per-frame `(id, box)` outputs with unit confidence.
pub fn write_boxes(path: &Path, outputs: &BTreeMap<u32, Vec<(u64, BBox)>>) -> Result<()> {
    let mut s = String::new();
    for (frame, outs) in outputs {
        for (id, b) in outs {
            mot_line(&mut s, *frame, *id as i64, b, 1.0);
        }
    }
    write(path, &s)
}

/// Reads a results (or ground-truth) file into per-frame `(id, box)` lists.
pub fn read_results(path: &Path) -> Result<BTreeMap<u32, Vec<(u64, BBox)>>> {
    let mut out: BTreeMap<u32, Vec<(u64, BBox)>> = BTreeMap::new();
    for r in read_mot(path)? {
        out.entry(r.frame).or_default().push((r.id.max(0) as u64, r.bbox));
    }
    Ok(out)
}

/// Writes one ground-truth object per id, ids from 1.
pub fn write_truth(path: &Path, truth: &[Vec<(u32, BBox)>]) -> Result<()> {
    let mut rows: Vec<(u32, i64, BBox)> = truth
        .iter()
        .enumerate()
        .flat_map(|(i, obj)| obj.iter().map(move |(f, b)| (*f, i as i64 + 1, *b)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut s = String::new();
    for (f, id, b) in rows {
        mot_line(&mut s, f, id, &b, 1.0);
    }
    write(path, &s)
}

/// Reads the ground-truth boxes of the lowest id in a truth file.
pub fn read_truth_object(path: &Path) -> Result<Vec<(u32, BBox)>> {
    let records = read_mot(path)?;
    let Some(id) = records.iter().map(|r| r.id).min() else {
        return Ok(Vec::new());
    };
    let mut boxes: Vec<(u32, BBox)> = records.iter().filter(|r| r.id == id).map(|r| (r.frame, r.bbox)).collect();
    boxes.sort_by_key(|b| b.0);
    boxes.dedup_by_key(|b| b.0);
    Ok(boxes)
}

pub fn write_affines(path: &Path, affines: &[(u32, Affine)]) -> Result<()> {
    let mut s = String::new();
    for (f, a) in affines {
        let r = a.to_row();
        let _ = writeln!(s, "{f} {} {} {} {} {} {}", r[0], r[1], r[2], r[3], r[4], r[5]);
    }
    write(path, &s)
}

pub fn read_affines(path: &Path) -> Result<BTreeMap<u32, Affine>> {
    let text = read(path)?;
    let mut out = BTreeMap::new();
    for (n, line) in content_lines(&text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(parse_err(path, n, format!("expected 7 fields, found {}", fields.len())));
        }
        let frame: u32 = fields[0]
            .parse()
            .map_err(|_| parse_err(path, n, format!("bad frame `{}`", fields[0])))?;
        let mut row = [0.0; 6];
        for (k, s) in fields[1..].iter().enumerate() {
            row[k] = s.parse().map_err(|_| parse_err(path, n, format!("bad number `{s}`")))?;
        }
        out.insert(frame, Affine::from_row(row).map_err(|e| parse_err(path, n, e.to_string()))?);
    }
    Ok(out)
}

/// Writes text, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write(path, text)
}
