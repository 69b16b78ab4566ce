use approx::assert_relative_eq;
use gckf::filters::*;
use gckf::gaussian::GaussianBelief;
use gckf::GckfError;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

/// One Burgers cell with zero inflow: f(x) = x - r x^2 / 2.
struct BurgersCell {
    r: f64,
}

impl ProcessModel for BurgersCell {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_input(&self) -> usize {
        0
    }
    fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        dvector![x[0] - self.r * x[0] * x[0] / 2.0]
    }
    fn jacobian_state(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<DMatrix<f64>> {
        Some(dmatrix![1.0 - self.r * x[0]])
    }
}

struct NoJacobian;

impl ProcessModel for NoJacobian {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_input(&self) -> usize {
        0
    }
    fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        x.map(f64::sin)
    }
}

#[test]
fn linear_model_matches_kf() {
    let b = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
    let pm = LinearProcess::new(dmatrix![0.9, 0.1; -0.2, 1.1], dmatrix![1.0; 0.5]).unwrap();
    let u = dvector![0.3];
    let q = dmatrix![0.1, 0.0; 0.0, 0.2];
    let qu = dmatrix![0.7];
    let a = ekf_step(&b, &pm, &u, &q, Some(&qu)).unwrap();
    let k = kf_predict(&b, &pm, &u, &q, Some(&qu)).unwrap();
    assert_relative_eq!(a.mean, k.mean, epsilon = 1e-12);
    assert_relative_eq!(a.cov, k.cov, epsilon = 1e-12);
}

#[test]
fn burgers_cell_jacobian_matches_finite_differences() {
    let pm = BurgersCell { r: 0.4 };
    let u = DVector::zeros(0);
    for x0 in [0.3, 1.0, 2.5] {
        let h = 1e-6;
        let fd = (pm.step(&dvector![x0 + h], &u)[0] - pm.step(&dvector![x0 - h], &u)[0]) / (2.0 * h);
        let jac = pm.jacobian_state(&dvector![x0], &u).unwrap()[(0, 0)];
        assert!((fd - jac).abs() <= 1e-6 * jac.abs().max(1.0));
    }
}

#[test]
fn zero_prior_covariance_predicts_q() {
    let pm = BurgersCell { r: 0.4 };
    let b = GaussianBelief::new(dvector![1.0], dmatrix![0.0]).unwrap();
    let out = ekf_step(&b, &pm, &DVector::zeros(0), &dmatrix![0.25], None).unwrap();
    assert_eq!(out.cov, dmatrix![0.25]);
}

#[test]
fn missing_jacobian_is_a_capability_error() {
    let b = GaussianBelief::new(dvector![1.0], dmatrix![1.0]).unwrap();
    let r = ekf_step(&b, &NoJacobian, &DVector::zeros(0), &dmatrix![0.0], None);
    assert!(matches!(r, Err(GckfError::Capability(_))));
}
