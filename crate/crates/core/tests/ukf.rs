use approx::assert_relative_eq;
use gckf::filters::*;
use gckf::gaussian::GaussianBelief;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

struct Square;

impl ProcessModel for Square {
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_input(&self) -> usize {
        0
    }
    fn step(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v * v)
    }
}

fn prior() -> GaussianBelief {
    GaussianBelief::new(dvector![1.0, -0.5, 2.0], dmatrix![2.0, 0.4, 0.1; 0.4, 1.0, 0.3; 0.1, 0.3, 0.5]).unwrap()
}

#[test]
fn weights_sum_to_one() {
    for p in [UkfParams::default(), UkfParams { alpha: 1.0, beta: 2.0, kappa: 1.0 }] {
        let sp = sigma_points(&prior(), &p).unwrap();
        assert_relative_eq!(sp.wm.sum(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn sigma_points_reconstruct_prior() {
    let b = prior();
    let sp = sigma_points(&b, &UkfParams::default()).unwrap();
    let (m, c) = sp.moments(&sp.points);
    assert_relative_eq!(m, b.mean, epsilon = 1e-9);
    assert_relative_eq!(c, b.cov, epsilon = 1e-9);
}

#[test]
fn linear_model_matches_kf() {
    let b = prior();
    let pm =
        LinearProcess::new(dmatrix![0.9, 0.1, 0.0; 0.0, 1.0, 0.2; 0.1, 0.0, 0.8], dmatrix![1.0; 0.0; 0.5]).unwrap();
    let u = dvector![0.4];
    let q = DMatrix::identity(3, 3) * 0.05;
    let qu = dmatrix![0.3];
    let a = ukf_step(&b, &pm, &u, &q, Some(&qu), &UkfParams::default()).unwrap();
    let k = kf_predict(&b, &pm, &u, &q, Some(&qu)).unwrap();
    assert_relative_eq!(a.mean, k.mean, epsilon = 1e-8);
    assert_relative_eq!(a.cov, k.cov, epsilon = 1e-8);

    let om = ObservationModel::selection(3, &[0, 2], 0.5).unwrap();
    let z = dvector![1.5, 1.0];
    let a = ukf_update(&b, &om, &z, &UkfParams::default()).unwrap();
    let k = kf_update(&b, &om, &z).unwrap();
    assert_relative_eq!(a.mean, k.mean, epsilon = 1e-8);
    assert_relative_eq!(a.cov, k.cov, epsilon = 1e-8);
}

#[test]
fn square_reproduces_second_moment() {
    let b = GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap();
    let out = ukf_step(&b, &Square, &DVector::zeros(0), &dmatrix![0.0], None, &UkfParams::default()).unwrap();
    assert_relative_eq!(out.mean[0], 1.0, epsilon = 1e-12);
}

#[test]
fn singular_prior_uses_symmetric_root() {
    // perfectly cloned pair: [[a, a], [a, a]]
    let b = GaussianBelief::new(dvector![1.0, 1.0], dmatrix![2.0, 2.0; 2.0, 2.0]).unwrap();
    let pm = LinearProcess::autonomous(DMatrix::identity(2, 2)).unwrap();
    let out = ukf_step(&b, &pm, &DVector::zeros(0), &DMatrix::zeros(2, 2), None, &UkfParams::default()).unwrap();
    assert_relative_eq!(out.cov, b.cov, epsilon = 1e-9);
}
