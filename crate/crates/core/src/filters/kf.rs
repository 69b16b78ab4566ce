use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_predict_dims, check_update_dims, ObservationModel, ProcessModel};
use crate::error::{GckfError, Result};
use crate::gaussian::{symmetrize, GaussianBelief, PINV_RTOL};

/// Linear prediction: `m' = F m + B u`, `P' = F P F^T + Q (+ B Qu B^T)`.
pub fn kf_predict(
    b: &GaussianBelief,
    pm: &dyn ProcessModel,
    u: &DVector<f64>,
    q: &DMatrix<f64>,
    input_cov: Option<&DMatrix<f64>>,
) -> Result<GaussianBelief> {
    let lp =
        pm.linear_parts().ok_or_else(|| GckfError::Capability("kf_predict requires a linear process model".into()))?;
    check_predict_dims(b, pm, u, q, input_cov)?;
    let mean = lp.f * &b.mean + lp.b * u;
    let mut cov = lp.f * &b.cov * lp.f.transpose() + q;
    if let Some(qu) = input_cov {
        cov += lp.b * qu * lp.b.transpose();
    }
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

/// Linear update with the Joseph-form covariance.
pub fn kf_update(b: &GaussianBelief, om: &ObservationModel, z: &DVector<f64>) -> Result<GaussianBelief> {
    check_update_dims(b, om, z)?;
    let h = om.matrix().ok_or_else(|| GckfError::Capability("kf_update requires a linear observation model".into()))?;
    let innovation = z - h * &b.mean;
    joseph_update(b, h, om.noise(), &innovation)
}

fn invert_innovation(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = s.clone().cholesky() {
        return Ok(ch.inverse());
    }
    let mut sym = s.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let low = eig.eigenvalues.min();
    if top == 0.0 || low <= PINV_RTOL * top {
        return Err(GckfError::numerical(format!(
            "innovation covariance singular (eigenvalues in [{low:e}, {top:e}])"
        )));
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

/// `K = P H^T S^-1`, `m' = m + K y`, `P' = (I - KH) P (I - KH)^T + K R K^T`.
///
/// The Joseph product is applied factor by factor so the cost is
/// `O(N^2 M)` rather than `O(N^3)`.
pub fn joseph_update(
    b: &GaussianBelief,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    innovation: &DVector<f64>,
) -> Result<GaussianBelief> {
    if h.nrows() == 0 {
        return Ok(b.clone());
    }
    let pht = &b.cov * h.transpose();
    let s = h * &pht + r;
    let s_inv = invert_innovation(&s)?;
    let k = &pht * s_inv;
    let mean = &b.mean + &k * innovation;
    // (I - KH) P
    let p1 = &b.cov - &k * pht.transpose();
    // ((I - KH) P) (I - KH)^T
    let p1ht = &p1 * h.transpose();
    let mut cov = p1 - p1ht * k.transpose();
    cov += &k * r * k.transpose();
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}
