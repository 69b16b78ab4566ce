use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_predict_dims, check_update_dims, ObservationModel, ProcessModel, UkfParams};
use crate::error::{GckfError, Result};
use crate::gaussian::{block_diag, clamp_psd, pinv_psd, symmetrize, GaussianBelief, PINV_RTOL, SYMMETRY_RTOL};

/// Scaled sigma points of a belief (columns of `points`) and their weights.
#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: DMatrix<f64>,
    pub wm: DVector<f64>,
    pub wc: DVector<f64>,
}

impl SigmaPoints {
    /// Weighted mean and covariance of the columns of `ys` (transformed points).
    pub fn moments(&self, ys: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mean = ys * &self.wm;
        let mut dev = ys.clone();
        for mut c in dev.column_iter_mut() {
            c -= &mean;
        }
        let weighted = DMatrix::from_fn(dev.nrows(), dev.ncols(), |i, j| dev[(i, j)] * self.wc[j]);
        (mean, weighted * dev.transpose())
    }
}

/// Any `S` with `S S^T = m`. Cholesky when possible, otherwise the
/// symmetric square root of the PSD-clamped matrix.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let clamped = clamp_psd(m, SYMMETRY_RTOL)?;
    let eig = SymmetricEigen::new(clamped);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(GckfError::numerical("square root of sigma-point covariance failed"));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// `2n + 1` sigma points with the standard scaled weights.
pub fn sigma_points(b: &GaussianBelief, p: &UkfParams) -> Result<SigmaPoints> {
    let n = b.dim();
    let nf = n as f64;
    let lambda = p.alpha * p.alpha * (nf + p.kappa) - nf;
    let spread = nf + lambda;
    if spread <= 0.0 {
        return Err(GckfError::arg(format!("sigma-point scaling n + lambda = {spread} must be positive")));
    }
    let root = psd_sqrt(&(&b.cov * spread))?;
    let mut points = DMatrix::zeros(n, 2 * n + 1);
    points.set_column(0, &b.mean);
    for i in 0..n {
        let col = root.column(i);
        points.set_column(1 + i, &(&b.mean + col));
        points.set_column(1 + n + i, &(&b.mean - col));
    }
    let w = 1.0 / (2.0 * spread);
    let mut wm = DVector::from_element(2 * n + 1, w);
    let mut wc = wm.clone();
    wm[0] = lambda / spread;
    wc[0] = lambda / spread + (1.0 - p.alpha * p.alpha + p.beta);
    Ok(SigmaPoints { points, wm, wc })
}

/// Unscented prediction. Input noise, when given, is appended to the state
/// before drawing sigma points so it passes through the nonlinearity.
pub fn ukf_step(
    b: &GaussianBelief,
    pm: &dyn ProcessModel,
    u: &DVector<f64>,
    q: &DMatrix<f64>,
    input_cov: Option<&DMatrix<f64>>,
    p: &UkfParams,
) -> Result<GaussianBelief> {
    check_predict_dims(b, pm, u, q, input_cov)?;
    let n = b.dim();
    let m = input_cov.map_or(0, |qu| qu.nrows());
    let aug = match input_cov {
        Some(qu) if m > 0 => {
            let mut mean = DVector::zeros(n + m);
            mean.rows_mut(0, n).copy_from(&b.mean);
            GaussianBelief { mean, cov: block_diag(&[b.cov.clone(), qu.clone()]) }
        }
        _ => b.clone(),
    };
    let sp = sigma_points(&aug, p)?;
    let count = sp.points.ncols();
    let mut ys = DMatrix::zeros(n, count);
    for j in 0..count {
        let col = sp.points.column(j);
        let x = col.rows(0, n).into_owned();
        let y = if aug.dim() > n {
            let e = col.rows(n, m).into_owned();
            pm.step(&x, &(u + e))
        } else {
            pm.step(&x, u)
        };
        ys.set_column(j, &y);
    }
    let (mean, mut cov) = sp.moments(&ys);
    cov += q;
    symmetrize(&mut cov);
    let cov = clamp_psd(&cov, SYMMETRY_RTOL)?;
    Ok(GaussianBelief { mean, cov })
}

/// Unscented update; the covariance is `P - K S K^T`, symmetrised and
/// clamped PSD.
pub fn ukf_update(
    b: &GaussianBelief,
    om: &ObservationModel,
    z: &DVector<f64>,
    p: &UkfParams,
) -> Result<GaussianBelief> {
    check_update_dims(b, om, z)?;
    if om.dim_obs() == 0 {
        return Ok(b.clone());
    }
    let sp = sigma_points(b, p)?;
    let count = sp.points.ncols();
    let mut zs = DMatrix::zeros(om.dim_obs(), count);
    for j in 0..count {
        zs.set_column(j, &om.predict(&sp.points.column(j).into_owned()));
    }
    let (z_hat, pzz) = sp.moments(&zs);
    let s = pzz + om.noise();
    let mut pxz = DMatrix::zeros(b.dim(), om.dim_obs());
    for j in 0..count {
        let dx = sp.points.column(j) - &b.mean;
        let dz = zs.column(j) - &z_hat;
        pxz += (dx * dz.transpose()) * sp.wc[j];
    }
    let s_inv = match s.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => {
            let inv = pinv_psd(&s, PINV_RTOL);
            if inv.iter().all(|v| *v == 0.0) {
                return Err(GckfError::numerical("innovation covariance is zero"));
            }
            inv
        }
    };
    let k = &pxz * s_inv;
    let mean = &b.mean + &k * (z - z_hat);
    let mut cov = &b.cov - &k * s * k.transpose();
    symmetrize(&mut cov);
    let cov = clamp_psd(&cov, SYMMETRY_RTOL)?;
    Ok(GaussianBelief { mean, cov })
}
