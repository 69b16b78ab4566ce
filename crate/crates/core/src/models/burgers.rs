//! 1D inviscid Burgers equation, first-order upwind finite volume.
//!
//! Speeds are assumed positive: the flux through face `j+1/2` is `U_j^2 / 2`,
//! the left ghost cell holds a constant inflow value and the right boundary
//! is a free outflow.

use nalgebra::{DMatrix, DVector};

use super::truth::SemiDiscrete;
use crate::error::{GckfError, Result};
use crate::filters::ProcessModel;

fn flux(u: f64) -> f64 {
    0.5 * u * u
}

fn courant(state: &DVector<f64>, dt: f64, dx: f64, inflow: f64) -> f64 {
    state.iter().fold(inflow.abs(), |m, v| m.max(v.abs())) * dt / dx
}

/// `-(F_{j+1/2} - F_{j-1/2}) / dx`.
pub fn burgers_rhs(state: &DVector<f64>, dx: f64, inflow: f64) -> DVector<f64> {
    DVector::from_fn(state.len(), |j, _| {
        let left = if j == 0 { flux(inflow) } else { flux(state[j - 1]) };
        -(flux(state[j]) - left) / dx
    })
}

/// One explicit finite-volume step.
pub fn burgers_step(state: &DVector<f64>, dt: f64, dx: f64, inflow: f64) -> Result<DVector<f64>> {
    if !(dt > 0.0 && dx > 0.0) {
        return Err(GckfError::arg("dt and dx must be positive"));
    }
    let c = courant(state, dt, dx, inflow);
    if c > 1.0 {
        return Err(GckfError::Cfl { courant: c });
    }
    Ok(state + burgers_rhs(state, dx, inflow) * dt)
}

#[derive(Debug, Clone)]
pub struct BurgersModel {
    pub cells: usize,
    pub dt: f64,
    pub dx: f64,
    pub inflow: f64,
}

impl BurgersModel {
    /// Checks the Courant number for the largest speed expected in the run.
    pub fn new(cells: usize, length: f64, pf: f64, inflow: f64, max_speed: f64) -> Result<Self> {
        if cells == 0 || !(length > 0.0 && pf > 0.0) {
            return Err(GckfError::arg("Burgers grid needs cells > 0, length > 0 and pf > 0"));
        }
        let m = Self { cells, dt: 1.0 / pf, dx: length / cells as f64, inflow };
        let c = max_speed.max(inflow.abs()) * m.dt / m.dx;
        if c > 1.0 {
            return Err(GckfError::Cfl { courant: c });
        }
        Ok(m)
    }

    /// Cell centres.
    pub fn centres(&self) -> Vec<f64> {
        (0..self.cells).map(|j| (j as f64 + 0.5) * self.dx).collect()
    }
}

impl ProcessModel for BurgersModel {
    fn dim_state(&self) -> usize {
        self.cells
    }

    fn dim_input(&self) -> usize {
        0
    }

    fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        x + burgers_rhs(x, self.dx, self.inflow) * self.dt
    }

    fn jacobian_state(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        let r = self.dt / self.dx;
        let n = x.len();
        Some(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0 - r * x[j]
            } else if j + 1 == i {
                r * x[j]
            } else {
                0.0
            }
        }))
    }

    fn jacobian_input(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(x.len(), 0))
    }
}

impl SemiDiscrete for BurgersModel {
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64> {
        burgers_rhs(x, self.dx, self.inflow)
    }
}
