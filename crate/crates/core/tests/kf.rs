use approx::assert_relative_eq;
use gckf::filters::*;
use gckf::gaussian::{min_eigenvalue, GaussianBelief};
use gckf::GckfError;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

#[test]
fn identity_model_without_noise_is_a_no_op() {
    let b = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
    let pm = LinearProcess::autonomous(DMatrix::identity(2, 2)).unwrap();
    let out = kf_predict(&b, &pm, &DVector::zeros(0), &DMatrix::zeros(2, 2), None).unwrap();
    assert_eq!(out, b);
}

#[test]
fn scalar_prediction() {
    let b = GaussianBelief::new(dvector![0.0], dmatrix![4.0]).unwrap();
    let pm = LinearProcess::autonomous(dmatrix![0.5]).unwrap();
    let out = kf_predict(&b, &pm, &DVector::zeros(0), &dmatrix![1.0], None).unwrap();
    assert_relative_eq!(out.cov[(0, 0)], 2.0);
}

#[test]
fn predict_rejects_dimension_mismatch() {
    let b = GaussianBelief::new(dvector![0.0], dmatrix![4.0]).unwrap();
    let pm = LinearProcess::autonomous(DMatrix::identity(2, 2)).unwrap();
    let r = kf_predict(&b, &pm, &DVector::zeros(0), &DMatrix::zeros(2, 2), None);
    assert!(matches!(r, Err(GckfError::Argument(_))));
}

#[test]
fn scalar_update() {
    let b = GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap();
    let om = ObservationModel::selection(1, &[0], 1.0).unwrap();
    let out = kf_update(&b, &om, &dvector![1.0]).unwrap();
    assert_relative_eq!(out.mean[0], 0.5, epsilon = 1e-15);
    assert_relative_eq!(out.cov[(0, 0)], 0.5, epsilon = 1e-15);
}

#[test]
fn uninformative_update_keeps_prior() {
    let b = GaussianBelief::new(dvector![1.0, -1.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
    let om = ObservationModel::selection(2, &[0, 1], 1e12).unwrap();
    let out = kf_update(&b, &om, &dvector![100.0, 100.0]).unwrap();
    assert_relative_eq!(out.mean, b.mean, epsilon = 1e-6);
    assert_relative_eq!(out.cov, b.cov, epsilon = 1e-6);
}

#[test]
fn exact_observation_pins_mean() {
    let b = GaussianBelief::new(dvector![1.0, -1.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
    let om = ObservationModel::selection(2, &[0, 1], 1e-12).unwrap();
    let z = dvector![3.0, 4.0];
    let out = kf_update(&b, &om, &z).unwrap();
    assert_relative_eq!(out.mean, z, epsilon = 1e-9);
    assert!(min_eigenvalue(&out.cov) >= -1e-9);
}

#[test]
fn singular_innovation_is_reported() {
    let b = GaussianBelief::new(dvector![0.0], dmatrix![0.0]).unwrap();
    let om = ObservationModel::selection(1, &[0], 0.0).unwrap();
    assert!(matches!(kf_update(&b, &om, &dvector![1.0]), Err(GckfError::Numerical(_))));
}

#[test]
fn joseph_matches_textbook_form() {
    let p = dmatrix![3.0, 1.0, 0.2; 1.0, 2.0, 0.4; 0.2, 0.4, 1.5];
    let b = GaussianBelief::new(dvector![0.1, 0.2, 0.3], p.clone()).unwrap();
    let h = dmatrix![1.0, 0.0, 1.0; 0.0, 2.0, 0.0];
    let r = dmatrix![0.5, 0.1; 0.1, 0.3];
    let om = ObservationModel::linear(h.clone(), r.clone()).unwrap();
    let out = kf_update(&b, &om, &dvector![1.0, -1.0]).unwrap();
    let s = &h * &p * h.transpose() + &r;
    let k = &p * h.transpose() * s.try_inverse().unwrap();
    let ikh = DMatrix::identity(3, 3) - &k * &h;
    let expected = &ikh * &p * ikh.transpose() + &k * &r * k.transpose();
    assert_relative_eq!(out.cov, expected, epsilon = 1e-12);
}
