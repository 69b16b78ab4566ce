mod common;

use approx::assert_relative_eq;
use gckf::engine::*;
use gckf::exchange::*;
use gckf::filters::*;
use gckf::gaussian::*;
use gckf::models::initial_covariance;
use gckf::partition::*;
use gckf::GckfError;
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use std::sync::Arc;

fn decoupled_model(f: DMatrix<f64>) -> Arc<dyn ProcessModel> {
    Arc::new(LinearProcess::autonomous(f).unwrap())
}

#[test]
fn init_copies_the_marginal_into_clone_and_current() {
    let full = GaussianBelief::new(dvector![1.0], dmatrix![2.0]).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    assert_eq!(a.belief.mean, dvector![1.0, 1.0]);
    assert_eq!(a.belief.cov, dmatrix![2.0, 2.0; 2.0, 2.0]);
}

#[test]
fn init_frozen_cross_block_comes_from_full() {
    let cov = initial_covariance(4, 10.0, 20.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::zeros(4), cov.clone()).unwrap();
    let a = init_augmented(&full, &[0, 1], &[2]).unwrap();
    for (local, global) in [(0, 0), (1, 1)] {
        assert_eq!(a.belief.cov[(local, 4)], cov[(global, 2)]);
        assert_eq!(a.belief.cov[(2 + local, 4)], cov[(global, 2)]);
    }
    assert_eq!(a.belief.cov[(4, 4)], cov[(2, 2)]);
}

#[test]
fn init_rejects_overlap() {
    let full = GaussianBelief::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
    assert!(matches!(init_augmented(&full, &[0, 1], &[1]), Err(GckfError::Argument(_))));
}

#[test]
fn likelihood_right_after_init_is_identity_map() {
    let cov = initial_covariance(6, 10.0, 20.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(6, 23.0), cov).unwrap();
    let a = init_augmented(&full, &[1, 2, 3], &[]).unwrap();
    let a0 = select(&full.cov, &[1, 2, 3], &[1, 2, 3]);
    let lik = extract_virtual_likelihood(0, &a, &a0, &select_vec(&full.mean, &[1, 2, 3])).unwrap();
    assert_relative_eq!(lik.phi, DMatrix::identity(3, 3), epsilon = 1e-9);
    assert!(lik.q_xi.norm() <= 1e-9 * a0.norm());
    assert_eq!(lik.delta_mean, DVector::zeros(3));
}

#[test]
fn identity_prediction_without_noise_is_a_no_op() {
    let full = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
    let a = init_augmented(&full, &[0, 1], &[]).unwrap();
    let pm =
        RestrictedModel::new(decoupled_model(DMatrix::identity(2, 2)), DVector::zeros(0), vec![0, 1], vec![]).unwrap();
    let out = local_predict(&a, &pm, None, &FilterCore::Kf, &DMatrix::zeros(2, 2)).unwrap();
    assert_eq!(out, a);
}

#[test]
fn clone_current_cross_covariance_after_one_step() {
    let full = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
    let f = dmatrix![0.9, 0.1; 0.05, 0.8];
    let a = init_augmented(&full, &[0, 1], &[]).unwrap();
    let pm = RestrictedModel::new(decoupled_model(f.clone()), DVector::zeros(0), vec![0, 1], vec![]).unwrap();
    let out = local_predict(&a, &pm, None, &FilterCore::Kf, &(DMatrix::identity(2, 2) * 0.1)).unwrap();
    let cross = select(&out.belief.cov, &[2, 3], &[0, 1]);
    assert_relative_eq!(cross, &f * &full.cov, epsilon = 1e-14);
    assert_eq!(out.clone_mean(), a.clone_mean());
}

#[test]
fn structured_prediction_matches_generic_kf() {
    let cov = initial_covariance(8, 10.0, 5.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_fn(8, |i, _| i as f64), cov).unwrap();
    let f = DMatrix::from_fn(8, 8, |i, j| {
        if i == j {
            0.6
        } else if i.abs_diff(j) == 1 {
            0.2
        } else {
            0.0
        }
    });
    let model = decoupled_model(f);
    let rows = vec![2, 3, 4];
    let pm = RestrictedModel::new(model, DVector::zeros(0), rows.clone(), vec![1, 5]).unwrap();
    let a = init_augmented(&full, &rows, &[1, 5]).unwrap();
    let alpha = dmatrix![0.9, 0.0; 0.1, 0.8];
    let msg = common::manual_message(
        &[1, 5],
        alpha.clone(),
        DMatrix::from_diagonal(&dvector![0.5, 0.2]),
        dvector![1.5, 4.5],
        dvector![1.0, 5.0],
    );
    let q = DMatrix::identity(3, 3) * 0.01;
    let fast = local_predict(&a, &pm, Some(&msg), &FilterCore::Kf, &q).unwrap();
    let inputs = apply_message(&a, &msg, &pm).unwrap();
    let aug = AugmentedProcess::new(&pm, &inputs.alpha, 3, 2);
    let mut qa = DMatrix::zeros(8, 8);
    qa.view_mut((3, 3), (3, 3)).copy_from(&q);
    let slow = kf_predict(&a.belief, &aug, &inputs.offset, &qa, Some(&inputs.input_cov)).unwrap();
    assert_relative_eq!(fast.belief.cov, slow.cov, epsilon = 1e-12);
    assert_relative_eq!(fast.belief.mean, slow.mean, epsilon = 1e-12);
    let ekf = local_predict(&a, &pm, Some(&msg), &FilterCore::Ekf, &q).unwrap();
    assert_relative_eq!(ekf.belief.cov, fast.belief.cov, epsilon = 1e-12);
}

#[test]
fn missing_message_is_a_protocol_error() {
    let full = GaussianBelief::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
    let pm =
        RestrictedModel::new(decoupled_model(DMatrix::identity(3, 3)), DVector::zeros(0), vec![0, 1], vec![2]).unwrap();
    let a = init_augmented(&full, &[0, 1], &[]).unwrap();
    let r = local_predict(&a, &pm, None, &FilterCore::Kf, &DMatrix::zeros(2, 2));
    assert!(matches!(r, Err(GckfError::Protocol(_))));
}

#[test]
fn frozen_mean_survives_prediction() {
    let cov = initial_covariance(5, 10.0, 3.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(5, 1.0), cov).unwrap();
    let f = DMatrix::from_fn(5, 5, |i, j| {
        if i == j {
            0.5
        } else if i.abs_diff(j) == 1 {
            0.25
        } else {
            0.0
        }
    });
    let pm = RestrictedModel::new(decoupled_model(f), DVector::zeros(0), vec![0, 1], vec![2]).unwrap();
    let a = init_augmented(&full, &[0, 1], &[2]).unwrap();
    let msg = common::manual_message(&[2], dmatrix![1.0], dmatrix![0.3], dvector![1.4], dvector![1.0]);
    for core in [FilterCore::Kf, FilterCore::Ekf, FilterCore::Ukf(Default::default())] {
        let out = local_predict(&a, &pm, Some(&msg), &core, &(DMatrix::identity(2, 2) * 0.1)).unwrap();
        assert_eq!(out.belief.mean[4], a.belief.mean[4]);
        assert_eq!(out.clone_mean(), a.clone_mean());
    }
}

#[test]
fn uninformative_update_changes_nothing() {
    let full = GaussianBelief::new(dvector![1.0, 2.0], dmatrix![2.0, 0.3; 0.3, 1.0]).unwrap();
    let a = init_augmented(&full, &[0, 1], &[]).unwrap();
    let om = a.observe_states(&[0], 1e12).unwrap();
    let out = local_update(&a, &om, &dvector![50.0], &FilterCore::Kf).unwrap();
    assert_relative_eq!(out.belief.mean, a.belief.mean, epsilon = 1e-6);
    assert_relative_eq!(out.belief.cov, a.belief.cov, epsilon = 1e-6);
}

#[test]
fn perfectly_correlated_clone_tracks_current_posterior() {
    // prior [[1,1],[1,1]], observe current with R = 1: both variances become 1/2
    let full = GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    let om = a.observe_states(&[0], 1.0).unwrap();
    let out = local_update(&a, &om, &dvector![1.0], &FilterCore::Kf).unwrap();
    assert_relative_eq!(out.belief.cov[(0, 0)], 0.5, epsilon = 1e-15);
    assert_relative_eq!(out.belief.cov[(1, 1)], 0.5, epsilon = 1e-15);
    assert!(min_eigenvalue(&out.belief.cov) >= -1e-9);
}

#[test]
fn observation_of_clone_is_rejected() {
    let full = GaussianBelief::new(dvector![0.0], dmatrix![1.0]).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    let om = ObservationModel::selection(2, &[0], 1.0).unwrap();
    assert!(matches!(local_update(&a, &om, &dvector![1.0], &FilterCore::Kf), Err(GckfError::Argument(_))));
}

#[test]
fn no_observations_gain_no_clone_information() {
    let cov = initial_covariance(3, 10.0, 20.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(3, 5.0), cov.clone()).unwrap();
    let pm = RestrictedModel::new(
        decoupled_model(dmatrix![0.9, 0.05, 0.0; 0.05, 0.9, 0.05; 0.0, 0.05, 0.9]),
        DVector::zeros(0),
        vec![0, 1, 2],
        vec![],
    )
    .unwrap();
    let mut a = init_augmented(&full, &[0, 1, 2], &[]).unwrap();
    for _ in 0..5 {
        a = local_predict(&a, &pm, None, &FilterCore::Kf, &(DMatrix::identity(3, 3) * 0.1)).unwrap();
    }
    let lik = extract_virtual_likelihood(0, &a, &cov, &full.mean).unwrap();
    assert!(lik.delta_mean.norm() == 0.0);
    assert!(lik.delta_cov.norm() <= 1e-12);
}

#[test]
fn exact_observation_removes_all_clone_uncertainty() {
    let full = GaussianBelief::new(dvector![0.0], dmatrix![3.0]).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    let om = a.observe_states(&[0], 1e-13).unwrap();
    let a = local_update(&a, &om, &dvector![1.0], &FilterCore::Kf).unwrap();
    let lik = extract_virtual_likelihood(0, &a, &dmatrix![3.0], &dvector![0.0]).unwrap();
    assert_relative_eq!(lik.delta_cov[(0, 0)], 3.0, epsilon = 1e-9);
}

fn one_subsystem_layout(n: usize) -> PartitionLayout {
    build_layout(&LayoutSpec { nos: n, noss: 1, nof: 0, mode: BoundaryMode::Anchored }, 0, 0).unwrap()
}

#[test]
fn no_information_global_update_is_identity() {
    let cov = initial_covariance(4, 10.0, 2.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(4, 2.0), cov.clone()).unwrap();
    let layout = build_layout(&LayoutSpec { nos: 4, noss: 2, nof: 0, mode: BoundaryMode::Anchored }, 0, 0).unwrap();
    let liks: Vec<_> = layout
        .subsystems
        .iter()
        .enumerate()
        .map(|(k, s)| VirtualLikelihood {
            subsystem_id: k,
            state_ids: s.clone(),
            delta_mean: DVector::zeros(2),
            delta_cov: DMatrix::zeros(2, 2),
            phi: DMatrix::identity(2, 2),
            q_xi: DMatrix::zeros(2, 2),
            new_mean_current: DVector::from_element(2, 2.0),
            clone_mean_posterior: DVector::from_element(2, 2.0),
            prior_mean: DVector::from_element(2, 2.0),
            prior_cov: select(&cov, s, s),
        })
        .collect();
    let out = global_update(&full, &liks, &layout).unwrap();
    assert_relative_eq!(out.mean, full.mean, epsilon = 1e-12);
    assert_relative_eq!(out.cov, full.cov, epsilon = 1e-12);
}

#[test]
fn constrained_step_reproduces_clone_posterior() {
    let cov = initial_covariance(5, 10.0, 4.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(5, 1.0), cov.clone()).unwrap();
    let sub = vec![1, 2, 3];
    let mut a = init_augmented(&full, &sub, &[]).unwrap();
    let om = a.observe_states(&[2], 0.5).unwrap();
    a = local_update(&a, &om, &dvector![3.0], &FilterCore::Kf).unwrap();
    let a0 = select(&cov, &sub, &sub);
    let lik = extract_virtual_likelihood(0, &a, &a0, &select_vec(&full.mean, &sub)).unwrap();
    let mut out = full.clone();
    constrained_update(&mut out, &lik).unwrap();
    let clone = a.clone_idx();
    assert_relative_eq!(select(&out.cov, &sub, &sub), select(&a.belief.cov, &clone, &clone), epsilon = 1e-9);
    // the same step computed with the plain Kalman update on the full belief
    let direct = kf_update(&full, &ObservationModel::selection(5, &[2], 0.5).unwrap(), &dvector![3.0]).unwrap();
    assert_relative_eq!(out.cov, direct.cov, epsilon = 1e-9);
    assert_relative_eq!(out.mean, direct.mean, epsilon = 1e-9);
}

#[test]
fn single_subsystem_block_matches_local_current() {
    let cov = initial_covariance(4, 10.0, 4.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(4, 1.0), cov.clone()).unwrap();
    let f = DMatrix::from_fn(4, 4, |i, j| {
        if i == j {
            0.7
        } else if i.abs_diff(j) == 1 {
            0.15
        } else {
            0.0
        }
    });
    let all: Vec<usize> = (0..4).collect();
    let pm = RestrictedModel::new(decoupled_model(f), DVector::zeros(0), all.clone(), vec![]).unwrap();
    let mut a = init_augmented(&full, &all, &[]).unwrap();
    for step in 0..4 {
        a = local_predict(&a, &pm, None, &FilterCore::Kf, &(DMatrix::identity(4, 4) * 0.2)).unwrap();
        let om = a.observe_states(&[step], 1.0).unwrap();
        a = local_update(&a, &om, &dvector![2.0], &FilterCore::Kf).unwrap();
    }
    let lik = extract_virtual_likelihood(0, &a, &cov, &full.mean).unwrap();
    let out = global_update(&full, &[lik], &one_subsystem_layout(4)).unwrap();
    let cur = a.current_idx();
    assert_relative_eq!(out.cov, select(&a.belief.cov, &cur, &cur), epsilon = 1e-9);
    assert_relative_eq!(out.mean, a.current_mean(), epsilon = 1e-9);
}

#[test]
fn mismatched_likelihoods_are_rejected() {
    let full = GaussianBelief::new(DVector::zeros(4), DMatrix::identity(4, 4)).unwrap();
    let layout = build_layout(&LayoutSpec { nos: 4, noss: 2, nof: 0, mode: BoundaryMode::Anchored }, 0, 0).unwrap();
    assert!(matches!(global_update(&full, &[], &layout), Err(GckfError::Protocol(_))));
}
