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

fn chain(nos: usize, noss: usize, nof: usize) -> PartitionLayout {
    build_layout(&LayoutSpec { nos, noss, nof, mode: BoundaryMode::Anchored }, 0, 0).unwrap()
}

fn tridiagonal(n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 - 2.0 * s
        } else if i.abs_diff(j) == 1 {
            s
        } else {
            0.0
        }
    })
}

#[test]
fn fn_message_right_after_clone_is_exact() {
    let cov = initial_covariance(6, 10.0, 20.0, 1.0).unwrap();
    let full = GaussianBelief::new(DVector::from_element(6, 3.0), cov).unwrap();
    let src = init_augmented(&full, &[3, 4, 5], &[]).unwrap();
    let part = synthesize_message(1, &src, &[3], Architecture::FrozenNeighbours, &[3]).unwrap();
    assert_relative_eq!(part.alpha, dmatrix![1.0], epsilon = 1e-12);
    assert!(part.q[(0, 0)].abs() <= 1e-12 * 11.0);
}

#[test]
fn fn_message_after_random_walk_step() {
    let full = GaussianBelief::new(dvector![0.0, 0.0], dmatrix![2.0, 0.5; 0.5, 1.0]).unwrap();
    let src = init_augmented(&full, &[0, 1], &[]).unwrap();
    let pm = RestrictedModel::new(
        Arc::new(LinearProcess::autonomous(DMatrix::identity(2, 2)).unwrap()),
        DVector::zeros(0),
        vec![0, 1],
        vec![],
    )
    .unwrap();
    let src = local_predict(&src, &pm, None, &FilterCore::Kf, &(DMatrix::identity(2, 2) * 0.3)).unwrap();
    let part = synthesize_message(0, &src, &[1], Architecture::FrozenNeighbours, &[1]).unwrap();
    assert_relative_eq!(part.alpha, dmatrix![1.0], epsilon = 1e-12);
    assert_relative_eq!(part.q, dmatrix![0.3], epsilon = 1e-12);
}

#[test]
fn independent_input_inflates_by_source_count() {
    let full = GaussianBelief::new(dvector![0.0, 1.0], dmatrix![3.0, 0.0; 0.0, 3.0]).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    let b = init_augmented(&full, &[1], &[]).unwrap();
    let parts = vec![
        synthesize_message(0, &a, &[0], Architecture::IndependentInput, &[]).unwrap(),
        synthesize_message(2, &b, &[1], Architecture::IndependentInput, &[]).unwrap(),
    ];
    let msg = ExchangeMessage { arch: Architecture::IndependentInput, target: 1, parts };
    assert_eq!(msg.assembled_q(), dmatrix![6.0, 0.0; 0.0, 6.0]);
    assert_eq!(msg.assembled_alpha().shape(), (2, 0));
}

#[test]
fn request_outside_source_is_rejected() {
    let full = GaussianBelief::new(dvector![0.0, 1.0], DMatrix::identity(2, 2)).unwrap();
    let a = init_augmented(&full, &[0], &[]).unwrap();
    let r = synthesize_message(0, &a, &[1], Architecture::IndependentInput, &[]);
    assert!(matches!(r, Err(GckfError::Protocol(_))));
}

#[test]
fn chosen_states_are_nearest_to_receiver() {
    assert_eq!(chosen_states(&[10, 11, 12, 13, 14], &[5, 6, 7, 8, 9], 2), vec![10, 11]);
    assert_eq!(chosen_states(&[0, 1, 2, 3], &[4, 5], 3), vec![1, 2, 3]);
    assert_eq!(chosen_states(&[4, 5], &[0, 1, 2, 3, 6, 7], 1), vec![4]);
    assert_eq!(chosen_states(&[0, 1], &[2], 5), vec![0, 1]);
}

#[test]
fn chain_message_layout() {
    let layout = chain(30, 3, 1);
    let plan = plan_exchange(&layout, Architecture::FrozenNeighbours, 8).unwrap();
    assert_eq!(plan.requests[1].iter().map(|r| r.source).collect::<Vec<_>>(), vec![0, 2]);
    let full = GaussianBelief::new(DVector::zeros(30), initial_covariance(30, 10.0, 20.0, 1.0).unwrap()).unwrap();
    let subs: Vec<_> =
        (0..3).map(|k| init_augmented(&full, &layout.subsystems[k], &plan.frozen_ids(k)).unwrap()).collect();
    let msgs = message_round(&subs, &plan).unwrap();
    let m1 = msgs[1].as_ref().unwrap();
    let q2: Vec<DMatrix<f64>> = m1.parts.iter().map(|p| &p.q * 2.0).collect();
    assert_eq!(m1.assembled_q(), block_diag(&q2));

    let decoupled = chain(30, 3, 0);
    let plan = plan_exchange(&decoupled, Architecture::FrozenChosen, 8).unwrap();
    assert!(message_round(&subs, &plan).unwrap().iter().all(Option::is_none));
}

#[test]
fn round_does_not_depend_on_subsystem_order() {
    let layout = chain(12, 3, 1);
    let plan = plan_exchange(&layout, Architecture::FrozenChosen, 2).unwrap();
    let full =
        GaussianBelief::new(DVector::from_fn(12, |i, _| i as f64), initial_covariance(12, 5.0, 3.0, 1.0).unwrap())
            .unwrap();
    let subs: Vec<_> =
        (0..3).map(|k| init_augmented(&full, &layout.subsystems[k], &plan.frozen_ids(k)).unwrap()).collect();
    let before = subs.clone();
    let msgs = message_round(&subs, &plan).unwrap();
    assert_eq!(subs, before);
    for k in 0..3 {
        let Some(m) = &msgs[k] else { continue };
        for (r, p) in plan.requests[k].iter().zip(&m.parts) {
            let solo = synthesize_message(r.source, &subs[r.source], &r.requested, plan.arch, &r.anchors).unwrap();
            assert_eq!(&solo, p);
        }
    }
}

fn heat_pair() -> (GaussianBelief, PartitionLayout, Arc<dyn ProcessModel>) {
    let full = GaussianBelief::new(
        DVector::from_fn(6, |i, _| 10.0 * i as f64),
        initial_covariance(6, 10.0, 20.0, 1.0).unwrap(),
    )
    .unwrap();
    let layout = chain(6, 2, 1);
    (full, layout, Arc::new(LinearProcess::autonomous(tridiagonal(6, 0.3)).unwrap()))
}

#[test]
fn fn_prediction_after_clone_equals_full_prediction_rows() {
    let (full, layout, model) = heat_pair();
    let plan = plan_exchange(&layout, Architecture::FrozenNeighbours, 8).unwrap();
    let subs: Vec<_> =
        (0..2).map(|k| init_augmented(&full, &layout.subsystems[k], &plan.frozen_ids(k)).unwrap()).collect();
    let msgs = message_round(&subs, &plan).unwrap();
    let q = DMatrix::identity(6, 6) * 0.05;
    let oracle = gckf::filters::kf_predict(&full, model.as_ref(), &DVector::zeros(0), &q, None).unwrap();
    for k in 0..2 {
        let rows = layout.subsystems[k].clone();
        let pm = RestrictedModel::new(model.clone(), DVector::zeros(0), rows.clone(), layout.external_ids(k)).unwrap();
        let out =
            local_predict(&subs[k], &pm, msgs[k].as_ref(), &FilterCore::Kf, &(DMatrix::identity(3, 3) * 0.05)).unwrap();
        let cur = out.current_idx();
        assert_relative_eq!(select(&out.belief.cov, &cur, &cur), select(&oracle.cov, &rows, &rows), epsilon = 1e-9);
        assert_relative_eq!(out.current_mean(), select_vec(&oracle.mean, &rows), epsilon = 1e-9);
    }
}

#[test]
fn zero_gain_reproduces_independent_input() {
    let (full, layout, model) = heat_pair();
    let fn_plan = plan_exchange(&layout, Architecture::FrozenNeighbours, 8).unwrap();
    let ii_plan = plan_exchange(&layout, Architecture::IndependentInput, 8).unwrap();
    let mut fn_subs: Vec<_> =
        (0..2).map(|k| init_augmented(&full, &layout.subsystems[k], &fn_plan.frozen_ids(k)).unwrap()).collect();
    let mut ii_subs: Vec<_> = (0..2).map(|k| init_augmented(&full, &layout.subsystems[k], &[]).unwrap()).collect();
    let models: Vec<_> = (0..2)
        .map(|k| {
            RestrictedModel::new(model.clone(), DVector::zeros(0), layout.subsystems[k].clone(), layout.external_ids(k))
                .unwrap()
        })
        .collect();
    let q = DMatrix::identity(3, 3) * 0.05;
    for step in 0..4 {
        let fm = message_round(&fn_subs, &fn_plan).unwrap();
        let im = message_round(&ii_subs, &ii_plan).unwrap();
        for k in 0..2 {
            let zeroed = fm[k].as_ref().unwrap().zero_gain();
            fn_subs[k] = local_predict(&fn_subs[k], &models[k], Some(&zeroed), &FilterCore::Kf, &q).unwrap();
            ii_subs[k] = local_predict(&ii_subs[k], &models[k], im[k].as_ref(), &FilterCore::Kf, &q).unwrap();
            let id = layout.subsystems[k][step % 3];
            let z = dvector![15.0];
            fn_subs[k] =
                local_update(&fn_subs[k], &fn_subs[k].observe_states(&[id], 1.0).unwrap(), &z, &FilterCore::Kf)
                    .unwrap();
            ii_subs[k] =
                local_update(&ii_subs[k], &ii_subs[k].observe_states(&[id], 1.0).unwrap(), &z, &FilterCore::Kf)
                    .unwrap();
        }
    }
    for k in 0..2 {
        let n = 6;
        let keep: Vec<usize> = (0..n).collect();
        assert_relative_eq!(select(&fn_subs[k].belief.cov, &keep, &keep), ii_subs[k].belief.cov, epsilon = 1e-10);
        assert_relative_eq!(select_vec(&fn_subs[k].belief.mean, &keep), ii_subs[k].belief.mean, epsilon = 1e-10);
    }
}

#[test]
fn anchor_mismatch_is_rejected() {
    let (full, layout, model) = heat_pair();
    let plan = plan_exchange(&layout, Architecture::FrozenNeighbours, 8).unwrap();
    let subs: Vec<_> = (0..2).map(|k| init_augmented(&full, &layout.subsystems[k], &[]).unwrap()).collect();
    let msgs = message_round(&subs, &plan).unwrap();
    let pm =
        RestrictedModel::new(model, DVector::zeros(0), layout.subsystems[0].clone(), layout.external_ids(0)).unwrap();
    let r = apply_message(&subs[0], msgs[0].as_ref().unwrap(), &pm);
    assert!(matches!(r, Err(GckfError::Protocol(_))));
}

#[test]
fn exact_gain_gives_deterministic_external_state() {
    let msg = common::manual_message(&[2], dmatrix![1.0], dmatrix![0.0], dvector![7.0], dvector![5.0]);
    let full = GaussianBelief::new(dvector![0.0, 0.0, 5.0], DMatrix::identity(3, 3)).unwrap();
    let local = init_augmented(&full, &[0, 1], &[2]).unwrap();
    let pm = RestrictedModel::new(
        Arc::new(LinearProcess::autonomous(tridiagonal(3, 0.2)).unwrap()),
        DVector::zeros(0),
        vec![0, 1],
        vec![2],
    )
    .unwrap();
    let inp = apply_message(&local, &msg, &pm).unwrap();
    let ext = &inp.alpha * local.belief.mean.rows(4, 1) + &inp.offset;
    assert_eq!(ext, dvector![7.0]);
    assert_eq!(inp.input_cov, dmatrix![0.0]);
}

proptest::proptest! {
    #[test]
    fn fn_limit_holds_after_any_clone(
        vals in proptest::collection::vec(-1.0f64..1.0, 64),
        start in 0usize..4,
        len in 1usize..4,
    ) {
        let a = DMatrix::from_fn(8, 8, |i, j| vals[i * 8 + j]);
        let cov = &a * a.transpose() + DMatrix::identity(8, 8) * 0.05;
        let full = GaussianBelief::new(DVector::from_fn(8, |i, _| i as f64), cov).unwrap();
        let block: Vec<usize> = (start..8).collect();
        let src = init_augmented(&full, &block, &[]).unwrap();
        let requested: Vec<usize> = block.iter().copied().take(len).collect();
        let part = synthesize_message(1, &src, &requested, Architecture::FrozenNeighbours, &requested).unwrap();
        let anchor_trace = select(&full.cov, &requested, &requested).trace();
        proptest::prop_assert!((&part.alpha - DMatrix::identity(len, len)).norm() <= 1e-9);
        proptest::prop_assert!(part.q.trace() <= 1e-9 * anchor_trace);
    }
}
