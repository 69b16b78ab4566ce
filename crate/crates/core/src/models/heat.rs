//! 1D heat conduction with Dirichlet boundaries, FTCS discretisation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::truth::SemiDiscrete;
use crate::error::{GckfError, Result};
use crate::filters::{LinearParts, ProcessModel};

/// Stability limit of the explicit scheme.
pub const FTCS_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    /// Thermal conductivity, W/(m K).
    pub k: f64,
    /// Density, kg/m^3.
    pub rho: f64,
    /// Specific heat, J/(kg K).
    pub cp: f64,
    /// Rod length, m.
    pub l: f64,
    pub nos: usize,
    /// Prediction frequency, Hz.
    pub pf: f64,
    /// Left and right boundary temperatures.
    pub boundary: (f64, f64),
    pub init_temp: f64,
}

impl HeatConfig {
    /// Thermal diffusivity.
    pub fn beta(&self) -> f64 {
        self.k / (self.rho * self.cp)
    }

    pub fn dx(&self) -> f64 {
        self.l / (self.nos as f64 + 1.0)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.pf
    }

    fn check(&self) -> Result<()> {
        let vals = [self.k, self.rho, self.cp, self.l, self.pf];
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.nos == 0 {
            return Err(GckfError::arg("heat parameters must be positive"));
        }
        Ok(())
    }
}

pub fn compute_s(cfg: &HeatConfig) -> f64 {
    cfg.beta() * cfg.dt() / (cfg.dx() * cfg.dx())
}

/// Linear FTCS model: `x' = F x + B [left; right]`.
#[derive(Debug, Clone)]
pub struct HeatModel {
    pub cfg: HeatConfig,
    pub s: f64,
    f: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl HeatModel {
    pub fn boundary_input(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.cfg.boundary.0, self.cfg.boundary.1])
    }

    pub fn initial_state(&self) -> DVector<f64> {
        DVector::from_element(self.cfg.nos, self.cfg.init_temp)
    }
}

pub fn heat_transition(cfg: &HeatConfig) -> Result<HeatModel> {
    cfg.check()?;
    let s = compute_s(cfg);
    if s > FTCS_LIMIT {
        return Err(GckfError::Stability { s, limit: FTCS_LIMIT });
    }
    let n = cfg.nos;
    let f = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - 2.0 * s
        } else if i.abs_diff(j) == 1 {
            s
        } else {
            0.0
        }
    });
    let mut b = DMatrix::zeros(n, 2);
    b[(0, 0)] = s;
    b[(n - 1, 1)] = s;
    Ok(HeatModel { cfg: *cfg, s, f, b })
}

impl ProcessModel for HeatModel {
    fn dim_state(&self) -> usize {
        self.cfg.nos
    }

    fn dim_input(&self) -> usize {
        2
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let s = self.s;
        DVector::from_fn(n, |i, _| {
            let left = if i == 0 { u[0] } else { x[i - 1] };
            let right = if i + 1 == n { u[1] } else { x[i + 1] };
            (1.0 - 2.0 * s) * x[i] + s * (left + right)
        })
    }

    fn linear_parts(&self) -> Option<LinearParts<'_>> {
        Some(LinearParts { f: &self.f, b: &self.b })
    }
}

impl SemiDiscrete for HeatModel {
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let c = self.cfg.beta() / (self.cfg.dx() * self.cfg.dx());
        let (l, r) = self.cfg.boundary;
        DVector::from_fn(n, |i, _| {
            let left = if i == 0 { l } else { x[i - 1] };
            let right = if i + 1 == n { r } else { x[i + 1] };
            c * (left - 2.0 * x[i] + right)
        })
    }
}
