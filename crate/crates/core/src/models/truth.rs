//! Initial covariance, ground-truth integration and simulated observations.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{GckfError, Result};
use crate::gaussian::min_eigenvalue;

/// Semi-discrete form `dx/dt = rhs(x)` used for the method of lines.
pub trait SemiDiscrete {
    fn rhs(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `P(i,j) = scale exp(-|i-j| / phi)`, `P(i,i) = scale + psi`.
pub fn initial_covariance(nos: usize, scale: f64, phi: f64, psi: f64) -> Result<DMatrix<f64>> {
    if !(scale > 0.0 && phi > 0.0 && psi > 0.0) {
        return Err(GckfError::arg("scale, phi and psi must be positive"));
    }
    let p =
        DMatrix::from_fn(
            nos,
            nos,
            |i, j| {
                if i == j {
                    scale + psi
                } else {
                    scale * (-(i.abs_diff(j) as f64) / phi).exp()
                }
            },
        );
    let min = min_eigenvalue(&p);
    if min < 0.0 {
        return Err(GckfError::arg(format!("initial covariance is not PSD (min eigenvalue {min:e})")));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// State at `sample_times[k]`; entry 0 is the initial state.
    pub trajectory: Vec<DVector<f64>>,
    pub sample_times: Vec<f64>,
}

impl GroundTruth {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_series(&mut w, "x", &self.sample_times, &self.trajectory)
    }
}

fn write_series<W: Write>(w: &mut W, prefix: &str, times: &[f64], rows: &[DVector<f64>]) -> std::io::Result<()> {
    let n = rows.first().map_or(0, |r| r.len());
    write!(w, "time")?;
    for i in 0..n {
        write!(w, ",{prefix}{i}")?;
    }
    writeln!(w)?;
    for (t, r) in times.iter().zip(rows) {
        write!(w, "{t}")?;
        for v in r.iter() {
            write!(w, ",{v:.12e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn rk4<M: SemiDiscrete + ?Sized>(model: &M, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = model.rhs(x);
    let k2 = model.rhs(&(x + &k1 * (h / 2.0)));
    let k3 = model.rhs(&(x + &k2 * (h / 2.0)));
    let k4 = model.rhs(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates `steps` intervals of length `dt` with `substeps` RK4 steps each.
pub fn generate_truth<M: SemiDiscrete + ?Sized>(
    model: &M,
    x0: &DVector<f64>,
    dt: f64,
    steps: usize,
    substeps: usize,
) -> GroundTruth {
    let substeps = substeps.max(1);
    let h = dt / substeps as f64;
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(x0.clone());
    let mut x = x0.clone();
    for _ in 0..steps {
        for _ in 0..substeps {
            x = rk4(model, &x, h);
        }
        trajectory.push(x.clone());
    }
    GroundTruth { trajectory, sample_times: (0..=steps).map(|k| k as f64 * dt).collect() }
}

/// Noisy samples of selected truth states at every step after the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    /// Observed state indices (0-based).
    pub locations: Vec<usize>,
    pub times: Vec<f64>,
    /// `values[k]` observes `trajectory[k + 1]`.
    pub values: Vec<DVector<f64>>,
}

impl Observations {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_series(&mut w, "z", &self.times, &self.values)
    }
}

/// `z_k = x_k[ol] + N(0, var)` drawn from a seeded ChaCha8 stream.
pub fn simulate_observations(gt: &GroundTruth, ol: &[usize], var: f64, seed: u64) -> Result<Observations> {
    let dim = gt.trajectory.first().map_or(0, |x| x.len());
    if let Some(&i) = ol.iter().find(|&&i| i >= dim) {
        return Err(GckfError::Index { index: i, dim });
    }
    if !(var >= 0.0) {
        return Err(GckfError::arg("observation variance must be non-negative"));
    }
    let normal = Normal::new(0.0, var.sqrt()).map_err(|e| GckfError::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = gt.trajectory[1..]
        .iter()
        .map(|x| DVector::from_iterator(ol.len(), ol.iter().map(|&i| x[i] + normal.sample(&mut rng))))
        .collect();
    Ok(Observations { locations: ol.to_vec(), times: gt.sample_times[1..].to_vec(), values })
}
