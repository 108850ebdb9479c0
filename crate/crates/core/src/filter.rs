//! Linear Kalman filter.
//!
//! All operations are pure: they take a [`GaussianState`] and a
//! [`LinearModel`] by reference and return new values. Covariances are
//! re-symmetrised after every step.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest condition number accepted for an innovation covariance.
pub const MAX_CONDITION: f64 = 1e12;

/// Floor applied to the confidence-scaled measurement noise factor.
pub const NSA_EPSILON: f64 = 1e-4;

/// Gaussian belief over the state: mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::contract(format!(
                "covariance is {}x{} but mean has length {n}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn trace(&self) -> f64 {
        self.covariance.trace()
    }
}

/// Linear-Gaussian process and measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// State transition.
    pub f: DMatrix<f64>,
    /// Control input matrix, `None` means no control.
    pub b: Option<DMatrix<f64>>,
    /// Process noise covariance.
    pub q: DMatrix<f64>,
    /// Measurement matrix.
    pub h: DMatrix<f64>,
    /// Measurement noise covariance.
    pub r: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(f: DMatrix<f64>, q: DMatrix<f64>, h: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let model = Self { f, b: None, q, h, r };
        model.validate()?;
        Ok(model)
    }

    pub fn with_control(mut self, b: DMatrix<f64>) -> Result<Self> {
        if b.nrows() != self.state_dim() {
            return Err(Error::contract(format!(
                "control matrix B has {} rows, state dimension is {}",
                b.nrows(),
                self.state_dim()
            )));
        }
        self.b = Some(b);
        Ok(self)
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.nrows()
    }

    /// Checks dimension consistency of all matrices.
    pub fn validate(&self) -> Result<()> {
        let n = self.f.nrows();
        check_shape("F", &self.f, n, n)?;
        check_shape("Q", &self.q, n, n)?;
        let k = self.h.nrows();
        check_shape("H", &self.h, k, n)?;
        check_shape("R", &self.r, k, k)?;
        if let Some(b) = &self.b {
            if b.nrows() != n {
                return Err(Error::contract(format!("B has {} rows, expected {n}", b.nrows())));
            }
        }
        Ok(())
    }
}

/// Measurement residual, its covariance and the gain derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub residual: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::contract(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_state(state: &GaussianState, model: &LinearModel) -> Result<()> {
    let n = model.state_dim();
    if state.mean.len() != n {
        return Err(Error::contract(format!(
            "state mean has length {}, model expects {n}",
            state.mean.len()
        )));
    }
    check_shape("P", &state.covariance, n, n)
}

fn check_measurement(z: &DVector<f64>, model: &LinearModel) -> Result<()> {
    if z.len() != model.measurement_dim() {
        return Err(Error::contract(format!(
            "measurement z has length {}, model expects {}",
            z.len(),
            model.measurement_dim()
        )));
    }
    Ok(())
}

/// `(P + Pᵀ) / 2`
pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Ratio of the extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `S X = rhs` for a well-conditioned symmetric `S`.
fn solve_spd(s: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let cond = condition_number(s);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Singular { what, cond });
    }
    if let Some(chol) = s.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    s.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Singular { what, cond })
}

/// Time update: `x = F x + B u`, `P = F P Fᵀ + Q`.
pub fn predict(
    state: &GaussianState,
    model: &LinearModel,
    control: Option<&DVector<f64>>,
) -> Result<GaussianState> {
    check_state(state, model)?;
    let mut mean = &model.f * &state.mean;
    if let Some(u) = control {
        let b = model
            .b
            .as_ref()
            .ok_or_else(|| Error::contract("control vector supplied but model has no B"))?;
        if b.ncols() != u.len() {
            return Err(Error::contract(format!(
                "control u has length {}, B has {} columns",
                u.len(),
                b.ncols()
            )));
        }
        mean += b * u;
    }
    let covariance = symmetrize(&(&model.f * &state.covariance * model.f.transpose() + &model.q));
    Ok(GaussianState { mean, covariance })
}

/// Computes `y`, `S` and `K` for measurement `z` under noise `r`.
fn innovation(
    state: &GaussianState,
    model: &LinearModel,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<Innovation> {
    let h = &model.h;
    let residual = z - h * &state.mean;
    let covariance = symmetrize(&(h * &state.covariance * h.transpose() + r));
    // K = P Hᵀ S⁻¹  <=>  Kᵀ = S⁻¹ H P  (S, P symmetric)
    let hp = h * &state.covariance;
    let gain = solve_spd(&covariance, &hp, "innovation covariance")?.transpose();
    Ok(Innovation {
        residual,
        covariance,
        gain,
    })
}

fn update_with_noise(
    state: &GaussianState,
    model: &LinearModel,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
    joseph: bool,
) -> Result<(GaussianState, Innovation)> {
    check_state(state, model)?;
    check_measurement(z, model)?;
    let inn = innovation(state, model, z, r)?;
    let mean = &state.mean + &inn.gain * &inn.residual;
    let n = state.dim();
    let i_kh = DMatrix::<f64>::identity(n, n) - &inn.gain * &model.h;
    let covariance = if joseph {
        &i_kh * &state.covariance * i_kh.transpose() + &inn.gain * r * inn.gain.transpose()
    } else {
        &i_kh * &state.covariance
    };
    Ok((
        GaussianState {
            mean,
            covariance: symmetrize(&covariance),
        },
        inn,
    ))
}

/// Measurement update. With `joseph` set the covariance uses
/// `(I-KH) P (I-KH)ᵀ + K R Kᵀ`, otherwise `(I-KH) P`.
pub fn update(
    state: &GaussianState,
    model: &LinearModel,
    z: &DVector<f64>,
    joseph: bool,
) -> Result<(GaussianState, Innovation)> {
    update_with_noise(state, model, z, &model.r, joseph)
}

/// Scale factor applied to `R` for a detection of the given confidence.
pub fn nsa_scale(confidence: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&confidence) {
        return Err(Error::contract(format!("confidence {confidence} outside [0, 1]")));
    }
    Ok((1.0 - confidence).max(NSA_EPSILON))
}

/// Confidence-scaled update: `R' = max(1 - c, 1e-4) R`, Joseph form.
pub fn nsa_update(
    state: &GaussianState,
    model: &LinearModel,
    z: &DVector<f64>,
    confidence: f64,
) -> Result<(GaussianState, Innovation)> {
    let r = &model.r * nsa_scale(confidence)?;
    update_with_noise(state, model, z, &r, true)
}

/// Squared Mahalanobis distance `yᵀ S⁻¹ y` of the innovation of `z`.
pub fn gating_distance(state: &GaussianState, model: &LinearModel, z: &DVector<f64>) -> Result<f64> {
    gating_distance_with_noise(state, model, z, &model.r)
}

pub(crate) fn gating_distance_with_noise(
    state: &GaussianState,
    model: &LinearModel,
    z: &DVector<f64>,
    r: &DMatrix<f64>,
) -> Result<f64> {
    check_state(state, model)?;
    check_measurement(z, model)?;
    let h = &model.h;
    let y = z - h * &state.mean;
    let s = symmetrize(&(h * &state.covariance * h.transpose() + r));
    let rhs = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let x = solve_spd(&s, &rhs, "innovation covariance")?;
    Ok(y.dot(&x.column(0)).max(0.0))
}
