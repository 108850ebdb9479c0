//! Camera motion compensation.
//!
//! An [`Affine`] maps pixel coordinates of frame `k-1` to frame `k`:
//! `p_k = M p_{k-1} + T`. It is estimated from point correspondences with
//! RANSAC over minimal 3-point samples followed by a least-squares refit, and
//! applied to boxes and to filter states.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::filter::{symmetrize, GaussianState};
use crate::motion::{BBox, ModelKind};
use crate::{Error, Result};

pub const DEFAULT_RANSAC_ITERS: usize = 200;
pub const DEFAULT_INLIER_PX: f64 = 3.0;

/// 2D affine transform `p -> M p + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub m: Matrix2<f64>,
    pub t: Vector2<f64>,
}

impl Default for Affine {
    fn default() -> Self {
        Self::identity()
    }
}

impl Affine {
    pub fn new(m: Matrix2<f64>, t: Vector2<f64>) -> Result<Self> {
        if !(m.determinant().abs() > 1e-9) {
            return Err(Error::contract(format!("affine with singular M (det {})", m.determinant())));
        }
        Ok(Self { m, t })
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix2::identity(),
            t: Vector2::zeros(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: Matrix2::identity(),
            t: Vector2::new(dx, dy),
        }
    }

    /// Row-major `[m00, m01, m10, m11, t0, t1]`.
    pub fn from_row(v: [f64; 6]) -> Result<Self> {
        Self::new(Matrix2::new(v[0], v[1], v[2], v[3]), Vector2::new(v[4], v[5]))
    }

    pub fn to_row(&self) -> [f64; 6] {
        [self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)], self.t[0], self.t[1]]
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let q = self.m * Vector2::new(p[0], p[1]) + self.t;
        [q[0], q[1]]
    }

    /// Scale factors along the image axes: column norms of `M`.
    pub fn axis_scales(&self) -> (f64, f64) {
        (self.m.column(0).norm(), self.m.column(1).norm())
    }

    pub fn is_identity(&self) -> bool {
        self.m == Matrix2::identity() && self.t == Vector2::zeros()
    }
}

/// One `(previous, current)` pixel correspondence.
pub type Correspondence = ([f64; 2], [f64; 2]);

/// Exact affine through three correspondences; `None` when they are collinear.
fn solve_minimal(pts: [&Correspondence; 3]) -> Option<Affine> {
    let a = Matrix3::from_fn(|r, c| match c {
        0 => pts[r].0[0],
        1 => pts[r].0[1],
        _ => 1.0,
    });
    if a.determinant().abs() < 1e-9 {
        return None;
    }
    let lu = a.lu();
    let row_x = lu.solve(&Vector3::from_fn(|r, _| pts[r].1[0]))?;
    let row_y = lu.solve(&Vector3::from_fn(|r, _| pts[r].1[1]))?;
    Affine::new(
        Matrix2::new(row_x[0], row_x[1], row_y[0], row_y[1]),
        Vector2::new(row_x[2], row_y[2]),
    )
    .ok()
}

/// Least-squares affine over the given correspondences.
fn fit_least_squares(pairs: &[&Correspondence]) -> Option<Affine> {
    let n = pairs.len();
    let a = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => pairs[r].0[0],
        1 => pairs[r].0[1],
        _ => 1.0,
    });
    let bx = DVector::from_fn(n, |r, _| pairs[r].1[0]);
    let by = DVector::from_fn(n, |r, _| pairs[r].1[1]);
    let svd = a.svd(true, true);
    let row_x = svd.solve(&bx, 1e-12).ok()?;
    let row_y = svd.solve(&by, 1e-12).ok()?;
    Affine::new(
        Matrix2::new(row_x[0], row_x[1], row_y[0], row_y[1]),
        Vector2::new(row_x[2], row_y[2]),
    )
    .ok()
}

fn reprojection_error(a: &Affine, c: &Correspondence) -> f64 {
    let p = a.apply(c.0);
    (p[0] - c.1[0]).hypot(p[1] - c.1[1])
}

/// RANSAC affine estimation. Returns the refit model and the inlier mask of
/// the final model. Deterministic for a given `seed`.
pub fn estimate_affine(
    pairs: &[Correspondence],
    ransac_iters: usize,
    inlier_px: f64,
    seed: u64,
) -> Result<(Affine, Vec<bool>)> {
    if pairs.len() < 3 {
        return Err(Error::Estimation(format!("need at least 3 correspondences, got {}", pairs.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, f64, Affine)> = None;
    for _ in 0..ransac_iters.max(1) {
        let idx = sample(&mut rng, pairs.len(), 3);
        let Some(model) = solve_minimal([&pairs[idx.index(0)], &pairs[idx.index(1)], &pairs[idx.index(2)]]) else {
            continue;
        };
        let (count, err) = pairs.iter().fold((0usize, 0.0), |(n, e), c| {
            let r = reprojection_error(&model, c);
            if r <= inlier_px {
                (n + 1, e + r)
            } else {
                (n, e)
            }
        });
        let better = match &best {
            None => true,
            Some((bc, be, _)) => count > *bc || (count == *bc && err < *be),
        };
        if better {
            best = Some((count, err, model));
        }
    }
    let Some((count, _, model)) = best else {
        return Err(Error::Estimation("all minimal samples were degenerate".into()));
    };
    if count < 3 {
        return Err(Error::Estimation(format!("best model has only {count} inliers")));
    }
    let inliers: Vec<&Correspondence> = pairs
        .iter()
        .filter(|c| reprojection_error(&model, c) <= inlier_px)
        .collect();
    let refit = fit_least_squares(&inliers).unwrap_or(model);
    let mask = pairs.iter().map(|c| reprojection_error(&refit, c) <= inlier_px).collect();
    Ok((refit, mask))
}

/// Maps a box through the affine; the result is the axis-aligned hull of the
/// four mapped corners.
pub fn warp_box(a: &Affine, b: &BBox) -> Result<BBox> {
    let corners = [[b.x, b.y], [b.right(), b.y], [b.x, b.bottom()], [b.right(), b.bottom()]];
    let mapped = corners.map(|c| a.apply(c));
    let min_x = mapped.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = mapped.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = mapped.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_y = mapped.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    BBox::new(min_x, min_y, max_x - min_x, max_y - min_y)
}

/// Block lift of `M` onto the state of the given kind: positions and
/// velocities are transformed by `M`, sizes by the axis scale factors.
pub fn state_transform(a: &Affine, kind: ModelKind) -> DMatrix<f64> {
    let n = kind.state_dim();
    let mut lift = DMatrix::<f64>::identity(n, n);
    let put_m = |lift: &mut DMatrix<f64>, [i, j]: [usize; 2]| {
        lift[(i, i)] = a.m[(0, 0)];
        lift[(i, j)] = a.m[(0, 1)];
        lift[(j, i)] = a.m[(1, 0)];
        lift[(j, j)] = a.m[(1, 1)];
    };
    put_m(&mut lift, kind.position_indices());
    put_m(&mut lift, kind.velocity_indices());
    let (sx, sy) = a.axis_scales();
    match kind {
        ModelKind::Wh => {
            lift[(2, 2)] = sx;
            lift[(3, 3)] = sy;
            lift[(6, 6)] = sx;
            lift[(7, 7)] = sy;
        }
        ModelKind::Sort => {
            let det = a.m.determinant().abs();
            lift[(2, 2)] = det;
            lift[(3, 3)] = sx / sy;
            lift[(6, 6)] = det;
        }
        ModelKind::Point => {}
    }
    lift
}

/// Applies camera motion to a filter state: `x <- M~ x + T~`,
/// `P <- M~ P M~ᵀ`, where `T~` only touches the centre position.
pub fn compensate_state(a: &Affine, s: &GaussianState, kind: ModelKind) -> Result<GaussianState> {
    if s.dim() != kind.state_dim() {
        return Err(Error::contract(format!(
            "{kind} compensation needs a {}-dim state, got {}",
            kind.state_dim(),
            s.dim()
        )));
    }
    let lift = state_transform(a, kind);
    let mut mean = &lift * &s.mean;
    let [ix, iy] = kind.position_indices();
    mean[ix] += a.t[0];
    mean[iy] += a.t[1];
    let covariance = symmetrize(&(&lift * &s.covariance * lift.transpose()));
    Ok(GaussianState { mean, covariance })
}
