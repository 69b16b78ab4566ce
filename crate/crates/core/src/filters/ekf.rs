use nalgebra::{DMatrix, DVector};

use super::kf::joseph_update;
use super::{check_predict_dims, check_update_dims, ObservationModel, ProcessModel};
use crate::error::{GckfError, Result};
use crate::gaussian::{symmetrize, GaussianBelief};

/// First-order linearised prediction about the current mean.
pub fn ekf_step(
    b: &GaussianBelief,
    pm: &dyn ProcessModel,
    u: &DVector<f64>,
    q: &DMatrix<f64>,
    input_cov: Option<&DMatrix<f64>>,
) -> Result<GaussianBelief> {
    check_predict_dims(b, pm, u, q, input_cov)?;
    let fx = pm
        .jacobian_state(&b.mean, u)
        .ok_or_else(|| GckfError::Capability("process model has no state Jacobian".into()))?;
    let mean = pm.step(&b.mean, u);
    let mut cov = &fx * &b.cov * fx.transpose() + q;
    if let Some(qu) = input_cov {
        let fu = pm
            .jacobian_input(&b.mean, u)
            .ok_or_else(|| GckfError::Capability("process model has no input Jacobian".into()))?;
        cov += &fu * qu * fu.transpose();
    }
    symmetrize(&mut cov);
    Ok(GaussianBelief { mean, cov })
}

/// Update with the observation Jacobian evaluated at the prior mean.
pub fn ekf_update(b: &GaussianBelief, om: &ObservationModel, z: &DVector<f64>) -> Result<GaussianBelief> {
    check_update_dims(b, om, z)?;
    let h = om.jacobian(&b.mean).ok_or_else(|| GckfError::Capability("observation model has no Jacobian".into()))?;
    let innovation = z - om.predict(&b.mean);
    joseph_update(b, &h, om.noise(), &innovation)
}
