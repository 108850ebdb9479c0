//! Bounding boxes, state parameterisations and constant-velocity model builders.
//!
//! Three state layouts are supported:
//!
//! * [`ModelKind::Sort`]: `[x_c, y_c, s, r, vx, vy, vs]` with area `s` and a
//!   constant aspect ratio `r = w / h`.
//! * [`ModelKind::Wh`]: `[x_c, y_c, w, h, vx, vy, vw, vh]`.
//! * [`ModelKind::Point`]: `[x, vx, y, vy]`, only the centre is observed.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::filter::LinearModel;
use crate::{Error, Result};

/// Axis-aligned box in top-left / size form, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = Self { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        if !finite || self.w <= 0.0 || self.h <= 0.0 {
            return Err(Error::contract(format!("invalid box {self:?}: need finite values and w, h > 0")));
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x + self.w / 2.0, self.y + self.h / 2.0]
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }
}

/// Which state parameterisation a filter uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Sort,
    Wh,
    Point,
}

impl ModelKind {
    pub fn state_dim(self) -> usize {
        match self {
            ModelKind::Sort => 7,
            ModelKind::Wh => 8,
            ModelKind::Point => 4,
        }
    }

    pub fn measurement_dim(self) -> usize {
        match self {
            ModelKind::Sort | ModelKind::Wh => 4,
            ModelKind::Point => 2,
        }
    }

    /// Indices of the centre position `(x, y)` in the state vector.
    pub fn position_indices(self) -> [usize; 2] {
        match self {
            ModelKind::Sort | ModelKind::Wh => [0, 1],
            ModelKind::Point => [0, 2],
        }
    }

    /// Indices of the centre velocity `(vx, vy)` in the state vector.
    pub fn velocity_indices(self) -> [usize; 2] {
        match self {
            ModelKind::Sort | ModelKind::Wh => [4, 5],
            ModelKind::Point => [1, 3],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Sort => "sort",
            ModelKind::Wh => "wh",
            ModelKind::Point => "point",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sort" => Ok(ModelKind::Sort),
            "wh" => Ok(ModelKind::Wh),
            "point" => Ok(ModelKind::Point),
            other => Err(Error::contract(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Constant-velocity model with the default noise templates and a unit
/// reference area for the `sort` kind.
pub fn build_model(kind: ModelKind, dt: f64, q_scale: f64, r_scale: f64) -> Result<LinearModel> {
    build_model_for_area(kind, dt, q_scale, r_scale, 1.0)
}

/// Constant-velocity model whose `sort` area/aspect noise terms are scaled to
/// a box of area `area`. The other kinds ignore `area`.
///
/// Noise templates (per frame, multiplied by `dt` for `Q`):
/// positions and sizes `q²`, their rates `(0.1 q)²`, measurements `r²`.
/// For the `sort` kind the area variance is `2 A σ²` and the aspect variance
/// `2 σ² / A`, the first-order propagation of independent `σ` pixel errors
/// on width and height of a square box of area `A`.
pub fn build_model_for_area(
    kind: ModelKind,
    dt: f64,
    q_scale: f64,
    r_scale: f64,
    area: f64,
) -> Result<LinearModel> {
    if !(dt > 0.0) {
        return Err(Error::contract(format!("dt must be > 0, got {dt}")));
    }
    if !(q_scale > 0.0) || !(r_scale > 0.0) {
        return Err(Error::contract(format!(
            "noise scales must be > 0, got q_scale={q_scale}, r_scale={r_scale}"
        )));
    }
    if !(area > 0.0) || !area.is_finite() {
        return Err(Error::contract(format!("reference area must be > 0, got {area}")));
    }
    let n = kind.state_dim();
    let k = kind.measurement_dim();
    let mut f = DMatrix::<f64>::identity(n, n);
    let mut h = DMatrix::<f64>::zeros(k, n);
    let q2 = q_scale * q_scale;
    let r2 = r_scale * r_scale;
    let rate = 0.01; // (0.1)^2
    let (q_diag, r_diag): (Vec<f64>, Vec<f64>) = match kind {
        ModelKind::Sort => {
            for i in 0..3 {
                f[(i, i + 4)] = dt;
            }
            for i in 0..4 {
                h[(i, i)] = 1.0;
            }
            let area_var = 2.0 * area;
            let aspect_var = 2.0 / area;
            (
                vec![
                    q2,
                    q2,
                    q2 * area_var,
                    rate * q2 * aspect_var,
                    rate * q2,
                    rate * q2,
                    rate * q2 * area_var,
                ],
                vec![r2, r2, r2 * area_var, r2 * aspect_var],
            )
        }
        ModelKind::Wh => {
            for i in 0..4 {
                f[(i, i + 4)] = dt;
                h[(i, i)] = 1.0;
            }
            (
                vec![q2, q2, q2, q2, rate * q2, rate * q2, rate * q2, rate * q2],
                vec![r2; 4],
            )
        }
        ModelKind::Point => {
            f[(0, 1)] = dt;
            f[(2, 3)] = dt;
            h[(0, 0)] = 1.0;
            h[(1, 2)] = 1.0;
            (vec![q2, rate * q2, q2, rate * q2], vec![r2; 2])
        }
    };
    let q = DMatrix::from_diagonal(&DVector::from_vec(q_diag)) * dt;
    let r = DMatrix::from_diagonal(&DVector::from_vec(r_diag));
    LinearModel::new(f, q, h, r)
}

/// Initial covariance for a freshly spawned track: observed components get
/// four times the measurement variance, unobserved rates a `(10 r)²` prior.
pub fn initial_covariance(kind: ModelKind, model: &LinearModel, r_scale: f64) -> DMatrix<f64> {
    let n = kind.state_dim();
    let mut p = DMatrix::<f64>::zeros(n, n);
    let rate_var = (10.0 * r_scale).powi(2);
    for i in 0..n {
        let observed = (0..model.measurement_dim()).find(|&row| model.h[(row, i)] != 0.0);
        p[(i, i)] = match observed {
            Some(row) => 4.0 * model.r[(row, row)],
            None => rate_var,
        };
    }
    if kind == ModelKind::Sort {
        // area rate shares the area's units
        p[(6, 6)] = rate_var * model.r[(2, 2)] / (r_scale * r_scale);
    }
    p
}

/// Measurement vector `z` for a box.
pub fn bbox_to_measurement(kind: ModelKind, b: &BBox) -> Result<DVector<f64>> {
    b.validate()?;
    let [cx, cy] = b.center();
    Ok(match kind {
        ModelKind::Sort => DVector::from_vec(vec![cx, cy, b.w * b.h, b.w / b.h]),
        ModelKind::Wh => DVector::from_vec(vec![cx, cy, b.w, b.h]),
        ModelKind::Point => DVector::from_vec(vec![cx, cy]),
    })
}

/// Full state vector for a box, velocities zero.
pub fn bbox_to_state(kind: ModelKind, b: &BBox) -> Result<DVector<f64>> {
    let z = bbox_to_measurement(kind, b)?;
    let mut v = DVector::zeros(kind.state_dim());
    match kind {
        ModelKind::Sort | ModelKind::Wh => v.rows_mut(0, 4).copy_from(&z),
        ModelKind::Point => {
            v[0] = z[0];
            v[2] = z[1];
        }
    }
    Ok(v)
}

/// Decodes a state vector back to a box.
///
/// The `point` kind carries no size; callers must supply it via
/// [`state_to_bbox_with_size`]. This function uses a unit box for it.
pub fn state_to_bbox(kind: ModelKind, v: &DVector<f64>) -> Result<BBox> {
    state_to_bbox_with_size(kind, v, (1.0, 1.0))
}

/// Like [`state_to_bbox`] with an explicit size for the `point` kind.
pub fn state_to_bbox_with_size(kind: ModelKind, v: &DVector<f64>, point_size: (f64, f64)) -> Result<BBox> {
    if v.len() != kind.state_dim() {
        return Err(Error::contract(format!(
            "{kind} state has length {}, expected {}",
            v.len(),
            kind.state_dim()
        )));
    }
    let (cx, cy, w, h) = match kind {
        ModelKind::Sort => {
            let (s, r) = (v[2], v[3]);
            if !(s > 0.0) || !(r > 0.0) {
                return Err(Error::Degenerate(format!("sort state with area {s} and aspect {r}")));
            }
            let w = (s * r).sqrt();
            (v[0], v[1], w, s / w)
        }
        ModelKind::Wh => {
            if !(v[2] > 0.0) || !(v[3] > 0.0) {
                return Err(Error::Degenerate(format!("wh state with size {}x{}", v[2], v[3])));
            }
            (v[0], v[1], v[2], v[3])
        }
        ModelKind::Point => (v[0], v[2], point_size.0, point_size.1),
    };
    if ![cx, cy, w, h].iter().all(|x| x.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite {kind} state")));
    }
    Ok(BBox {
        x: cx - w / 2.0,
        y: cy - h / 2.0,
        w,
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const KINDS: [ModelKind; 3] = [ModelKind::Sort, ModelKind::Wh, ModelKind::Point];

    #[test]
    fn point_model_matrices() {
        let m = build_model(ModelKind::Point, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.f.row(0).iter().cloned().collect::<Vec<_>>(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.f.row(2).iter().cloned().collect::<Vec<_>>(), vec![0.0, 0.0, 1.0, 1.0]);
        let h: Vec<f64> = m.h.transpose().iter().cloned().collect();
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn wh_and_sort_transition_structure() {
        let m = build_model(ModelKind::Wh, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.f.shape(), (8, 8));
        for i in 0..4 {
            assert_eq!(m.f[(i, i + 4)], 1.0);
        }
        let m = build_model(ModelKind::Sort, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(m.f[(0, 4)], 2.0);
        // aspect ratio has no rate: row 3 of F is the unit vector
        for j in 0..7 {
            assert_eq!(m.f[(3, j)], if j == 3 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn invalid_builder_inputs() {
        assert!(build_model(ModelKind::Wh, 0.0, 1.0, 1.0).is_err());
        assert!(build_model(ModelKind::Wh, 1.0, -1.0, 1.0).is_err());
        assert!(build_model(ModelKind::Wh, 1.0, 1.0, 0.0).is_err());
        assert!("bogus".parse::<ModelKind>().is_err());
    }

    #[test]
    fn conversions() {
        let b = BBox::new(0.0, 0.0, 10.0, 20.0).unwrap();
        let sort = bbox_to_state(ModelKind::Sort, &b).unwrap();
        assert_eq!(sort.as_slice(), &[5.0, 10.0, 200.0, 0.5, 0.0, 0.0, 0.0]);
        let wh = bbox_to_state(ModelKind::Wh, &b).unwrap();
        assert_eq!(wh.as_slice(), &[5.0, 10.0, 10.0, 20.0, 0.0, 0.0, 0.0, 0.0]);
        let p = bbox_to_state(ModelKind::Point, &b).unwrap();
        assert_eq!(p.as_slice(), &[5.0, 0.0, 10.0, 0.0]);
        assert_eq!(state_to_bbox(ModelKind::Sort, &sort).unwrap(), b);
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(bbox_to_state(ModelKind::Sort, &BBox { x: 0.0, y: 0.0, w: -1.0, h: 2.0 }).is_err());
    }

    #[test]
    fn degenerate_states() {
        let v = DVector::from_vec(vec![5.0, 10.0, -1.0, 0.5, 0.0, 0.0, 0.0]);
        assert!(matches!(state_to_bbox(ModelKind::Sort, &v), Err(Error::Degenerate(_))));
        let v = DVector::from_vec(vec![5.0, 10.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(state_to_bbox(ModelKind::Wh, &v), Err(Error::Degenerate(_))));
        let v = DVector::from_vec(vec![5.0, 10.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let b = state_to_bbox(ModelKind::Wh, &v).unwrap();
        assert_eq!((b.w, b.h), (0.5, 0.5));
    }

    proptest! {
        #[test]
        fn roundtrip(x in -500.0..500.0f64, y in -500.0..500.0f64, w in 0.5..300.0f64, h in 0.5..300.0f64) {
            let b = BBox::new(x, y, w, h).unwrap();
            for kind in KINDS {
                let v = bbox_to_state(kind, &b).unwrap();
                let back = state_to_bbox_with_size(kind, &v, (w, h)).unwrap();
                prop_assert!((back.x - b.x).abs() < 1e-9 && (back.y - b.y).abs() < 1e-9);
                prop_assert!((back.w - b.w).abs() < 1e-9 && (back.h - b.h).abs() < 1e-9);
            }
        }

        #[test]
        fn models_are_valid(q in 1e-6..1e6f64, r in 1e-6..1e6f64, area in 1.0..1e5f64) {
            for kind in KINDS {
                let m = build_model_for_area(kind, 1.0, q, r, area).unwrap();
                m.validate().unwrap();
                let qd = m.q.diagonal();
                let rd = m.r.diagonal();
                prop_assert!(qd.iter().all(|&v| v >= 0.0));
                prop_assert!(rd.iter().all(|&v| v > 0.0));
                prop_assert_eq!(m.q.clone(), m.q.transpose());
            }
        }
    }
}
