//! Association costs and optimal assignment.

use std::f64::consts::PI;

use crate::motion::BBox;
use crate::{Error, Result};

/// Cost of an infeasible pairing.
pub const SENTINEL: f64 = f64::INFINITY;

/// Dense row-major cost matrix: rows are tracks, columns are detections.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, fill: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![fill; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::contract("cost matrix rows have different lengths"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_feasible(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_finite()
    }

    /// Entry-wise combination of two equally shaped matrices.
    pub fn zip_with(&self, other: &CostMatrix, mut f: impl FnMut(f64, f64) -> f64) -> Result<CostMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::contract(format!(
                "cost matrix shapes differ: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(CostMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn map(&self, f: impl FnMut(&f64) -> f64) -> CostMatrix {
        CostMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Result of a track-to-detection assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// `(track index, detection index)`, sorted by track index.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(i, j)| c.get(i, j)).sum()
    }

    fn from_pairs(pairs: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(i, j) in &pairs {
            row_used[i] = true;
            col_used[j] = true;
        }
        Self {
            pairs,
            unmatched_tracks: (0..rows).filter(|&i| !row_used[i]).collect(),
            unmatched_detections: (0..cols).filter(|&j| !col_used[j]).collect(),
        }
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// `1 - IoU` between every track box (rows) and detection box (columns).
pub fn iou_distance(tracks: &[BBox], dets: &[BBox]) -> CostMatrix {
    CostMatrix::from_fn(tracks.len(), dets.len(), |i, j| 1.0 - iou(&tracks[i], &dets[j]))
}

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::contract(format!(
            "embedding lengths differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::contract("cosine distance of a zero vector"));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 2.0))
}

/// BoT-SORT style fusion of IoU and appearance distances.
///
/// Appearance is only considered when both the IoU and the embedding gates
/// pass; the entry is then the smaller of the two distances. Pairs failing the
/// IoU gate are infeasible.
pub fn fuse_bot(d_iou: &CostMatrix, d_cos: &CostMatrix, iou_gate: f64, emb_gate: f64) -> Result<CostMatrix> {
    d_iou.zip_with(d_cos, |di, dc| {
        if !(di < iou_gate) {
            return SENTINEL;
        }
        let dc = if dc < emb_gate { dc } else { SENTINEL };
        di.min(dc)
    })
}

/// Velocity-direction consistency cost: `lambda * angle / pi`.
///
/// `track_direction` is absent while the track has too few observations, in
/// which case the cost is zero.
pub fn ocm_cost(track_direction: Option<[f64; 2]>, candidate_direction: [f64; 2], lambda: f64) -> f64 {
    let Some(t) = track_direction else {
        return 0.0;
    };
    let dot = (t[0] * candidate_direction[0] + t[1] * candidate_direction[1]).clamp(-1.0, 1.0);
    lambda * dot.acos() / PI
}

/// Unit vector from `from` to `to`, `None` when the points coincide.
pub fn unit_direction(from: [f64; 2], to: [f64; 2]) -> Option<[f64; 2]> {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    let n = dx.hypot(dy);
    (n > 1e-12).then(|| [dx / n, dy / n])
}

/// Minimum-cost assignment. Infeasible (non-finite) entries are never
/// returned; among all matchings of maximal feasible size the total cost is
/// minimal. Rectangular inputs are padded implicitly.
pub fn hungarian(c: &CostMatrix) -> Assignment {
    let (rows, cols) = c.shape();
    if c.is_empty() {
        return Assignment::from_pairs(Vec::new(), rows, cols);
    }
    // Infeasible and padding cells cost more than any feasible matching, so
    // a minimum square matching first maximises the number of feasible pairs.
    let finite_sum: f64 = c.data.iter().filter(|v| v.is_finite()).map(|v| v.abs()).sum();
    let big = 2.0 * finite_sum + 1.0;
    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols && c.is_feasible(i, j) {
            c.get(i, j)
        } else {
            big
        }
    };

    // Shortest augmenting path with potentials, 1-based with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&j| p[j] != 0)
        .map(|j| (p[j] - 1, j - 1))
        .filter(|&(i, j)| i < rows && j < cols && c.is_feasible(i, j))
        .collect();
    pairs.sort_unstable();
    Assignment::from_pairs(pairs, rows, cols)
}

/// Sorted-ascending lowest and second-lowest finite value with the index of
/// the first lowest.
fn two_lowest(values: impl Iterator<Item = f64>) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut second = f64::INFINITY;
    for (idx, x) in values.enumerate() {
        if !x.is_finite() {
            continue;
        }
        match best {
            None => best = Some((idx, x)),
            Some((_, b)) if x < b => {
                second = b;
                best = Some((idx, x));
            }
            Some(_) => second = second.min(x),
        }
    }
    best.map(|(i, b)| (i, b, second))
}

fn discrimination_weight(lowest: f64, second: f64, floor: f64, cap: f64) -> f64 {
    if !second.is_finite() {
        return 1.0;
    }
    (1.0 + (second - lowest - floor).min(cap)).max(1.0)
}

/// Adaptive appearance weighting.
///
/// For every row and every column the gap between the two smallest distances
/// gives a weight `w = max(1, 1 + min(gap - floor, cap))`. An entry that is the
/// smallest of both its row and its column is divided by the larger of its
/// row and column weights; every other entry is left as is, so the position
/// of each row's minimum never moves.
pub fn adaptive_weighting(d_app: &CostMatrix, z_diff_floor: f64, boost_cap: f64) -> CostMatrix {
    let (rows, cols) = d_app.shape();
    if rows < 2 && cols < 2 {
        return d_app.clone();
    }
    let row_best: Vec<Option<(usize, f64)>> = (0..rows)
        .map(|i| {
            two_lowest(d_app.row(i).iter().cloned())
                .map(|(j, lo, hi)| (j, discrimination_weight(lo, hi, z_diff_floor, boost_cap)))
        })
        .collect();
    let col_best: Vec<Option<(usize, f64)>> = (0..cols)
        .map(|j| {
            two_lowest((0..rows).map(|i| d_app.get(i, j)))
                .map(|(i, lo, hi)| (i, discrimination_weight(lo, hi, z_diff_floor, boost_cap)))
        })
        .collect();
    let mut out = d_app.clone();
    for (i, rb) in row_best.iter().enumerate() {
        let Some((j, w_row)) = *rb else { continue };
        if let Some((ci, w_col)) = col_best[j] {
            if ci == i {
                out.set(i, j, d_app.get(i, j) / w_row.max(w_col));
            }
        }
    }
    out
}
