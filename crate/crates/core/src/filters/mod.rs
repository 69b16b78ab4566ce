//! Interchangeable Gaussian filter cores.
//!
//! The same cores drive the full-filter oracle and the subsystem filters of
//! the compressed estimator: a linear Kalman filter, an extended Kalman
//! filter and an unscented Kalman filter. Each predict takes an additive
//! process noise `q` and, optionally, a covariance on the input vector, which
//! is how neighbour estimates enter a subsystem as noisy inputs.

mod ekf;
mod kf;
mod ukf;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GckfError, Result};
use crate::gaussian::GaussianBelief;

pub use ekf::{ekf_step, ekf_update};
pub use kf::{joseph_update, kf_predict, kf_update};
pub use ukf::{sigma_points, ukf_step, ukf_update, SigmaPoints};

/// `x' = F x + B u` parts of a linear process model.
#[derive(Debug, Clone, Copy)]
pub struct LinearParts<'a> {
    pub f: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
}

/// A discrete-time process `x' = step(x, u)`; additive noise is supplied to
/// the cores separately.
pub trait ProcessModel: Send + Sync {
    fn dim_state(&self) -> usize;

    fn dim_input(&self) -> usize;

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `df/dx` at `(x, u)`, when the model can provide it.
    fn jacobian_state(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.linear_parts().map(|lp| lp.f.clone())
    }

    /// `df/du` at `(x, u)`, when the model can provide it.
    fn jacobian_input(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.linear_parts().map(|lp| lp.b.clone())
    }

    fn linear_parts(&self) -> Option<LinearParts<'_>> {
        None
    }
}

/// A model given directly by its matrices.
#[derive(Debug, Clone)]
pub struct LinearProcess {
    pub f: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearProcess {
    pub fn new(f: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !f.is_square() || b.nrows() != f.nrows() {
            return Err(GckfError::arg(format!("F is {}x{}, B is {}x{}", f.nrows(), f.ncols(), b.nrows(), b.ncols())));
        }
        Ok(Self { f, b })
    }

    /// Autonomous model `x' = F x`.
    pub fn autonomous(f: DMatrix<f64>) -> Result<Self> {
        let n = f.nrows();
        Self::new(f, DMatrix::zeros(n, 0))
    }
}

impl ProcessModel for LinearProcess {
    fn dim_state(&self) -> usize {
        self.f.nrows()
    }

    fn dim_input(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.f * x + &self.b * u
    }

    fn linear_parts(&self) -> Option<LinearParts<'_>> {
        Some(LinearParts { f: &self.f, b: &self.b })
    }
}

type VecFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// Observation `z = h(x) + eta`, `eta ~ N(0, R)`.
#[derive(Clone)]
pub struct ObservationModel {
    h: Option<Arc<VecFn>>,
    jac: Option<Arc<JacFn>>,
    matrix: Option<DMatrix<f64>>,
    noise: DMatrix<f64>,
}

impl fmt::Debug for ObservationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObservationModel")
            .field("matrix", &self.matrix)
            .field("nonlinear", &self.h.is_some())
            .field("noise", &self.noise)
            .finish()
    }
}

impl ObservationModel {
    /// Linear observation `z = H x + eta`.
    pub fn linear(h: DMatrix<f64>, noise: DMatrix<f64>) -> Result<Self> {
        if noise.nrows() != h.nrows() || !noise.is_square() {
            return Err(GckfError::arg("observation noise must be square and match H rows"));
        }
        Ok(Self { h: None, jac: None, matrix: Some(h), noise })
    }

    /// Observation of the listed state indices with i.i.d. noise of variance `var`.
    pub fn selection(dim: usize, idx: &[usize], var: f64) -> Result<Self> {
        let mut h = DMatrix::zeros(idx.len(), dim);
        for (r, &i) in idx.iter().enumerate() {
            if i >= dim {
                return Err(GckfError::Index { index: i, dim });
            }
            h[(r, i)] = 1.0;
        }
        Self::linear(h, DMatrix::identity(idx.len(), idx.len()) * var)
    }

    /// Nonlinear observation with an optional Jacobian.
    pub fn nonlinear<H, J>(h: H, jac: Option<J>, noise: DMatrix<f64>) -> Self
    where
        H: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self { h: Some(Arc::new(h)), jac: jac.map(|j| Arc::new(j) as Arc<JacFn>), matrix: None, noise }
    }

    pub fn dim_obs(&self) -> usize {
        self.noise.nrows()
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    pub fn matrix(&self) -> Option<&DMatrix<f64>> {
        self.matrix.as_ref()
    }

    pub fn predict(&self, x: &DVector<f64>) -> DVector<f64> {
        match (&self.matrix, &self.h) {
            (Some(m), _) => m * x,
            (None, Some(h)) => h(x),
            (None, None) => unreachable!("observation model without h"),
        }
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        match (&self.matrix, &self.jac) {
            (Some(m), _) => Some(m.clone()),
            (None, Some(j)) => Some(j(x)),
            _ => None,
        }
    }
}

/// Sigma-point spread and weighting constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UkfParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfParams {
    fn default() -> Self {
        Self { alpha: 1e-1, beta: 2.0, kappa: 0.0 }
    }
}

/// Filter core selected by name in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterCore {
    Kf,
    Ekf,
    Ukf(UkfParams),
}

impl FilterCore {
    pub fn name(&self) -> &'static str {
        match self {
            FilterCore::Kf => "kf",
            FilterCore::Ekf => "ekf",
            FilterCore::Ukf(_) => "ukf",
        }
    }

    pub fn predict(
        &self,
        b: &GaussianBelief,
        pm: &dyn ProcessModel,
        u: &DVector<f64>,
        q: &DMatrix<f64>,
        input_cov: Option<&DMatrix<f64>>,
    ) -> Result<GaussianBelief> {
        match self {
            FilterCore::Kf => kf_predict(b, pm, u, q, input_cov),
            FilterCore::Ekf => ekf_step(b, pm, u, q, input_cov),
            FilterCore::Ukf(p) => ukf_step(b, pm, u, q, input_cov, p),
        }
    }

    pub fn update(&self, b: &GaussianBelief, om: &ObservationModel, z: &DVector<f64>) -> Result<GaussianBelief> {
        match self {
            FilterCore::Kf => kf_update(b, om, z),
            FilterCore::Ekf => ekf_update(b, om, z),
            FilterCore::Ukf(p) => ukf_update(b, om, z, p),
        }
    }
}

impl FromStr for FilterCore {
    type Err = GckfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kf" => Ok(FilterCore::Kf),
            "ekf" => Ok(FilterCore::Ekf),
            "ukf" => Ok(FilterCore::Ukf(UkfParams::default())),
            other => Err(GckfError::Config(format!("unknown filter core {other:?} (kf | ekf | ukf)"))),
        }
    }
}

pub(crate) fn check_predict_dims(
    b: &GaussianBelief,
    pm: &dyn ProcessModel,
    u: &DVector<f64>,
    q: &DMatrix<f64>,
    input_cov: Option<&DMatrix<f64>>,
) -> Result<()> {
    let n = pm.dim_state();
    if b.dim() != n || u.len() != pm.dim_input() || q.nrows() != n || q.ncols() != n {
        return Err(GckfError::arg(format!(
            "dimension mismatch: belief {}, model state {}, input {} (model {}), Q {}x{}",
            b.dim(),
            n,
            u.len(),
            pm.dim_input(),
            q.nrows(),
            q.ncols()
        )));
    }
    if let Some(qu) = input_cov {
        if qu.nrows() != u.len() || qu.ncols() != u.len() {
            return Err(GckfError::arg("input covariance does not match input dimension"));
        }
    }
    Ok(())
}

pub(crate) fn check_update_dims(b: &GaussianBelief, om: &ObservationModel, z: &DVector<f64>) -> Result<()> {
    if z.len() != om.dim_obs() {
        return Err(GckfError::arg(format!(
            "observation has length {} but the model produces {}",
            z.len(),
            om.dim_obs()
        )));
    }
    if let Some(h) = om.matrix() {
        if h.ncols() != b.dim() {
            return Err(GckfError::arg(format!("H has {} columns, belief has {}", h.ncols(), b.dim())));
        }
    }
    Ok(())
}
