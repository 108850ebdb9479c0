//! Tracklet gap filling: linear interpolation and Gaussian-process smoothing.

use nalgebra::{DMatrix, DVector};

use crate::filter::{condition_number, MAX_CONDITION};
use crate::motion::BBox;
use crate::{Error, Result};

pub const DEFAULT_GSI_LENGTH_SCALE: f64 = 10.0;
pub const DEFAULT_GSI_NOISE_VAR: f64 = 0.25;
pub const DEFAULT_MAX_GAP: usize = 20;

/// Boxes of one track id at strictly increasing frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: u64,
    pub samples: Vec<(u32, BBox)>,
}

impl Tracklet {
    pub fn new(id: u64, samples: Vec<(u32, BBox)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::contract(format!("tracklet {id} has no samples")));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::contract(format!("tracklet {id} frames are not strictly increasing")));
        }
        Ok(Self { id, samples })
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.samples.iter().map(|s| s.0)
    }
}

/// Linear interpolation between two boxes at frame `t`, `t1 <= t <= t2`.
pub fn lerp_box(t1: u32, b1: &BBox, t2: u32, b2: &BBox, t: u32) -> BBox {
    if t == t1 {
        return *b1;
    }
    if t == t2 {
        return *b2;
    }
    let a = (t - t1) as f64 / (t2 - t1) as f64;
    let lerp = |p: f64, q: f64| p + (q - p) * a;
    BBox {
        x: lerp(b1.x, b2.x),
        y: lerp(b1.y, b2.y),
        w: lerp(b1.w, b2.w),
        h: lerp(b1.h, b2.h),
    }
}

fn fillable(t1: u32, t2: u32, max_gap: usize) -> bool {
    let missing = (t2 - t1 - 1) as usize;
    missing > 0 && missing <= max_gap
}

/// Fills every gap of at most `max_gap` missing frames with the linear
/// interpolation of its two endpoints. Observed samples are kept as is.
pub fn linear_interpolate(t: &Tracklet, max_gap: usize) -> Tracklet {
    let mut out = Vec::with_capacity(t.samples.len());
    for (i, &(f, b)) in t.samples.iter().enumerate() {
        out.push((f, b));
        if let Some(&(f2, b2)) = t.samples.get(i + 1) {
            if fillable(f, f2, max_gap) {
                out.extend((f + 1..f2).map(|q| (q, lerp_box(f, &b, f2, &b2, q))));
            }
        }
    }
    Tracklet {
        id: t.id,
        samples: out,
    }
}

/// Output of [`gsi_smooth`].
#[derive(Debug, Clone, PartialEq)]
pub struct GsiResult {
    pub tracklet: Tracklet,
    /// Set when the kernel matrix was too ill-conditioned and the result is
    /// the linear interpolation instead.
    pub fell_back_to_linear: bool,
}

fn se_kernel(a: f64, b: f64, length_scale: f64) -> f64 {
    let d = a - b;
    (-d * d / (2.0 * length_scale * length_scale)).exp()
}

/// Gaussian-process smoothing and gap filling.
///
/// Centre x, centre y, width and height are regressed independently against
/// the frame index with a squared-exponential kernel plus white noise. The
/// prior mean of each component is its least-squares line over the samples,
/// which is the sample mean when the samples carry no linear trend. The output contains the
/// posterior mean at every observed frame and at every frame of gaps of at
/// most `max_gap` missing frames.
pub fn gsi_smooth(t: &Tracklet, length_scale: f64, noise_var: f64, max_gap: usize) -> Result<GsiResult> {
    if t.samples.len() < 2 {
        return Err(Error::contract("GSI needs at least 2 samples"));
    }
    if !(length_scale > 0.0) || !(noise_var >= 0.0) {
        return Err(Error::contract(format!(
            "GSI needs length_scale > 0 and noise_var >= 0, got {length_scale}, {noise_var}"
        )));
    }
    let frames: Vec<f64> = t.frames().map(f64::from).collect();
    let n = frames.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| se_kernel(frames[i], frames[j], length_scale));
    for i in 0..n {
        k[(i, i)] += noise_var;
    }
    if !(condition_number(&k) <= MAX_CONDITION) {
        return Ok(GsiResult {
            tracklet: linear_interpolate(t, max_gap),
            fell_back_to_linear: true,
        });
    }
    let Some(chol) = k.cholesky() else {
        return Ok(GsiResult {
            tracklet: linear_interpolate(t, max_gap),
            fell_back_to_linear: true,
        });
    };

    let f_mean = frames.iter().sum::<f64>() / n as f64;
    let f_var: f64 = frames.iter().map(|f| (f - f_mean).powi(2)).sum();
    let components: [fn(&BBox) -> f64; 4] = [|b| b.center()[0], |b| b.center()[1], |b| b.w, |b| b.h];
    let mut weights = Vec::with_capacity(4);
    let mut trends = Vec::with_capacity(4);
    for comp in components {
        let y = DVector::from_iterator(n, t.samples.iter().map(|(_, b)| comp(b)));
        let mean = y.mean();
        let slope = frames.iter().zip(y.iter()).map(|(f, v)| (f - f_mean) * (v - mean)).sum::<f64>() / f_var;
        let residual = DVector::from_iterator(n, frames.iter().zip(y.iter()).map(|(f, v)| v - mean - slope * (f - f_mean)));
        weights.push(chol.solve(&residual));
        trends.push((mean, slope));
    }

    let mut queries: Vec<u32> = Vec::new();
    for (i, &(f, _)) in t.samples.iter().enumerate() {
        queries.push(f);
        if let Some(&(f2, _)) = t.samples.get(i + 1) {
            if fillable(f, f2, max_gap) {
                queries.extend(f + 1..f2);
            }
        }
    }
    let mut samples = Vec::with_capacity(queries.len());
    for q in queries {
        let kq = DVector::from_iterator(n, frames.iter().map(|&f| se_kernel(f64::from(q), f, length_scale)));
        let qf = f64::from(q) - f_mean;
        let v: Vec<f64> = (0..4).map(|c| trends[c].0 + trends[c].1 * qf + kq.dot(&weights[c])).collect();
        let (w, h) = (v[2], v[3]);
        let b = BBox::from_center(v[0], v[1], w, h)
            .map_err(|_| Error::Degenerate(format!("GSI produced a {w}x{h} box at frame {q}")))?;
        samples.push((q, b));
    }
    Ok(GsiResult {
        tracklet: Tracklet { id: t.id, samples },
        fell_back_to_linear: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn midpoint_and_boundaries() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        let b = bx(10.0, 0.0, 10.0, 10.0);
        assert_eq!(lerp_box(0, &a, 10, &b, 5), bx(5.0, 0.0, 10.0, 10.0));
        assert_eq!(lerp_box(0, &a, 10, &b, 0), a);
        assert_eq!(lerp_box(0, &a, 10, &b, 10), b);
        let t = Tracklet::new(1, vec![(0, a), (10, b)]).unwrap();
        let out = linear_interpolate(&t, 20);
        assert_eq!(out.samples.len(), 11);
        assert_eq!(out.samples[5], (5, bx(5.0, 0.0, 10.0, 10.0)));
    }

    #[test]
    fn one_frame_gap_equal_endpoints() {
        let a = bx(3.0, 4.0, 5.0, 6.0);
        let t = Tracklet::new(1, vec![(1, a), (3, a)]).unwrap();
        assert_eq!(linear_interpolate(&t, 5).samples, vec![(1, a), (2, a), (3, a)]);
    }

    #[test]
    fn inserted_boxes_on_the_line() {
        let at = |f: u32| bx(3.0 * f as f64, 1.0, 4.0, 4.0);
        let t = Tracklet::new(1, vec![(2, at(2)), (6, at(6))]).unwrap();
        let out = linear_interpolate(&t, 10);
        for (f, b) in out.samples {
            assert!((b.x - 3.0 * f as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn long_gaps_untouched_and_idempotent() {
        let a = bx(0.0, 0.0, 4.0, 4.0);
        let t = Tracklet::new(1, vec![(0, a), (3, a), (30, a)]).unwrap();
        let once = linear_interpolate(&t, 5);
        assert_eq!(once.samples.len(), 5);
        assert_eq!(linear_interpolate(&once, 5), once);
    }

    #[test]
    fn invalid_tracklets() {
        let a = bx(0.0, 0.0, 4.0, 4.0);
        assert!(Tracklet::new(1, vec![]).is_err());
        assert!(Tracklet::new(1, vec![(2, a), (2, a)]).is_err());
        let single = Tracklet::new(1, vec![(2, a)]).unwrap();
        assert!(gsi_smooth(&single, 10.0, 0.1, 5).is_err());
    }

    /// Independent posterior-mean oracle: dense inverse, one query at a time.
    fn gp_oracle(xs: &[f64], ys: &[f64], q: f64, l: f64, noise: f64) -> f64 {
        let n = xs.len();
        let xm = xs.iter().sum::<f64>() / n as f64;
        let ym = ys.iter().sum::<f64>() / n as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for i in 0..n {
            sxy += (xs[i] - xm) * (ys[i] - ym);
            sxx += (xs[i] - xm) * (xs[i] - xm);
        }
        let line = |x: f64| ym + sxy / sxx * (x - xm);
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = (-(xs[i] - xs[j]).powi(2) / (2.0 * l * l)).exp() + if i == j { noise } else { 0.0 };
            }
        }
        let inv = k.try_inverse().unwrap();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (-(q - xs[i]).powi(2) / (2.0 * l * l)).exp() * inv[(i, j)] * (ys[j] - line(xs[j]));
            }
        }
        line(q) + acc
    }

    #[test]
    fn gsi_matches_dense_oracle() {
        let frames = [0u32, 1, 2, 3, 7, 8, 9, 12, 13, 14];
        let samples: Vec<_> = frames
            .iter()
            .map(|&f| (f, bx(2.0 * f as f64 + (f as f64).sin(), 0.5 * f as f64, 8.0, 8.0)))
            .collect();
        let t = Tracklet::new(3, samples.clone()).unwrap();
        let out = gsi_smooth(&t, 4.0, 0.3, 5).unwrap();
        assert!(!out.fell_back_to_linear);
        let xs: Vec<f64> = frames.iter().map(|&f| f as f64).collect();
        let cx: Vec<f64> = samples.iter().map(|(_, b)| b.center()[0]).collect();
        for (f, b) in &out.tracklet.samples {
            let o = gp_oracle(&xs, &cx, *f as f64, 4.0, 0.3);
            assert!((b.center()[0] - o).abs() < 1e-9);
        }
        let got: Vec<u32> = out.tracklet.frames().collect();
        assert_eq!(got, (0..=14).collect::<Vec<_>>());
    }

    #[test]
    fn gsi_noiseless_linear_track() {
        let truth = |f: u32| bx(100.0 + 2.5 * f as f64, 50.0 - 1.5 * f as f64, 12.0, 12.0);
        let frames: Vec<u32> = (0..10).chain(14..24).collect();
        let t = Tracklet::new(1, frames.iter().map(|&f| (f, truth(f))).collect()).unwrap();
        let out = gsi_smooth(&t, 10.0, 1e-6, 10).unwrap();
        assert!(!out.fell_back_to_linear);
        assert_eq!(out.tracklet.samples.len(), 24);
        for (f, b) in &out.tracklet.samples {
            let e = truth(*f);
            assert!((b.x - e.x).abs() < 1e-3 && (b.y - e.y).abs() < 1e-3, "frame {f}: {b:?} vs {e:?}");
        }
    }

    #[test]
    fn gsi_stationary_gap_and_shrinkage() {
        let a = bx(20.0, 30.0, 6.0, 6.0);
        let t = Tracklet::new(1, vec![(0, a), (1, a), (2, a), (12, a), (13, a), (14, a)]).unwrap();
        let out = gsi_smooth(&t, 10.0, 0.25, 20).unwrap();
        for (_, b) in &out.tracklet.samples {
            assert!((b.x - a.x).abs() < 1e-3 && (b.y - a.y).abs() < 1e-3);
        }
        // huge noise on trend-free data: posterior collapses onto the sample mean
        let bumpy: Vec<_> = (0..11u32)
            .map(|f| (f, bx(10.0 * (f as f64 - 5.0).abs(), 0.0, 4.0, 4.0)))
            .collect();
        let mean_cx = bumpy.iter().map(|(_, b)| b.center()[0]).sum::<f64>() / 11.0;
        let out = gsi_smooth(&Tracklet::new(1, bumpy).unwrap(), 10.0, 1e6, 5).unwrap();
        for (_, b) in &out.tracklet.samples {
            assert!((b.center()[0] - mean_cx).abs() < 1e-3);
        }
    }

    #[test]
    fn gsi_falls_back_when_ill_conditioned() {
        let t = Tracklet::new(1, (0..30u32).map(|f| (f, bx(f as f64, 0.0, 4.0, 4.0))).collect()).unwrap();
        let out = gsi_smooth(&t, 50.0, 0.0, 5).unwrap();
        assert!(out.fell_back_to_linear);
        assert_eq!(out.tracklet, linear_interpolate(&t, 5));
    }
}
