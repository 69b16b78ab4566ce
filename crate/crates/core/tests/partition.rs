use gckf::gaussian::GaussianBelief;
use gckf::partition::*;
use gckf::GckfError;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn spec(nos: usize, noss: usize, nof: usize) -> LayoutSpec {
    LayoutSpec { nos, noss, nof, mode: BoundaryMode::Anchored }
}

#[test]
fn hundred_states_in_three_blocks() {
    let l = build_layout(&spec(100, 3, 4), 0, 0).unwrap();
    assert_eq!(l.sizes(), vec![34, 33, 33]);
}

#[test]
fn three_point_stencil_neighbours() {
    let l = build_layout(&spec(6, 2, 1), 0, 0).unwrap();
    assert_eq!(l.neighbors[0], vec![NeighborGroup { source: 1, ids: vec![3] }]);
    assert_eq!(l.neighbors[1], vec![NeighborGroup { source: 0, ids: vec![2] }]);
}

#[test]
fn offset_rules() {
    let ring = LayoutSpec { mode: BoundaryMode::Ring, ..spec(6, 2, 1) };
    let l = build_layout(&ring, 1, 0).unwrap();
    assert_eq!(l.subsystems, vec![vec![1, 2, 3], vec![4, 5, 0]]);
    let l = build_layout(&spec(6, 2, 1), 1, 0).unwrap();
    assert_eq!(l.subsystems, vec![vec![0, 1, 2, 3], vec![4, 5]]);
}

#[test]
fn offset_out_of_range() {
    assert!(matches!(build_layout(&spec(6, 2, 1), 3, 0), Err(GckfError::Argument(_))));
    assert!(matches!(build_layout(&spec(6, 4, 1), 1, 0), Err(GckfError::Argument(_))));
    assert!(build_layout(&spec(3, 4, 1), 0, 0).is_err());
}

#[test]
fn interior_subsystem_reads_two_interfaces() {
    let l = build_layout(&spec(100, 3, 4), 0, 0).unwrap();
    assert_eq!(l.external_ids(0).len(), 4);
    assert_eq!(l.external_ids(1).len(), 8);
    assert_eq!(l.source_count(1), 2);
    assert_eq!(l.external_ids(1), vec![30, 31, 32, 33, 67, 68, 69, 70]);
}

#[test]
fn static_schedule_keeps_layout() {
    let s = SwitchSchedule::new(Archetype::Static, 1, vec![0]).unwrap();
    let l0 = s.first_layout(&spec(100, 3, 4)).unwrap();
    let l1 = next_layout(&s, &l0).unwrap();
    assert!(l1.same_blocks(&l0));
    assert_eq!(l1.epoch, 1);
    assert!(SwitchSchedule::new(Archetype::Static, 1, vec![0, 8]).is_err());
}

#[test]
fn switching_schedule_cycles() {
    let s = SwitchSchedule::new(Archetype::Switching, 1, vec![0, 8]).unwrap();
    let l0 = s.first_layout(&spec(100, 3, 4)).unwrap();
    let l1 = next_layout(&s, &l0).unwrap();
    assert_eq!(l1.subsystems[1][0], 34 + 8);
    assert_eq!(l1.subsystems[2][0], 67 + 8);
    let l2 = next_layout(&s, &l1).unwrap();
    assert!(l2.same_blocks(&l0));
}

#[test]
fn layout_csv_lists_runs() {
    let ring = LayoutSpec { mode: BoundaryMode::Ring, ..spec(6, 2, 1) };
    let l = build_layout(&ring, 1, 3).unwrap();
    let mut out = Vec::new();
    l.write_csv(&mut out, true).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "epoch,subsystem,first,last\n3,0,1,3\n3,1,4,5\n3,1,0,0\n");
}

#[test]
fn remap_matches_marginals() {
    let cov = DMatrix::from_fn(6, 6, |i, j| (-(i.abs_diff(j) as f64) / 2.0).exp() + if i == j { 1.0 } else { 0.0 });
    let full = GaussianBelief::new(DVector::from_fn(6, |i, _| i as f64), cov.clone()).unwrap();
    let old = build_layout(&spec(6, 2, 1), 0, 0).unwrap();
    let new = build_layout(&spec(6, 2, 1), 1, 1).unwrap();
    let init = remap_belief(&full, &old, &new, &[vec![], vec![3]]).unwrap();
    for s in &init {
        let ids: Vec<usize> = s.state_ids.iter().chain(&s.frozen_ids).copied().collect();
        for (a, &i) in ids.iter().enumerate() {
            assert_eq!(s.marginal.mean[a], full.mean[i]);
            for (b, &j) in ids.iter().enumerate() {
                assert_eq!(s.marginal.cov[(a, b)], cov[(i, j)]);
            }
        }
    }
    let one = build_layout(&spec(6, 1, 1), 0, 0).unwrap();
    let init = remap_belief(&full, &one, &one, &[vec![]]).unwrap();
    assert_eq!(init[0].marginal, full);
    let other = build_layout(&spec(5, 1, 1), 0, 0).unwrap();
    assert!(remap_belief(&full, &old, &other, &[vec![]]).is_err());
}

fn assert_partition(l: &PartitionLayout) {
    let mut seen = vec![0usize; l.nos()];
    for block in &l.subsystems {
        assert!(!block.is_empty());
        for &i in block {
            seen[i] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1), "not a partition: {:?}", l.subsystems);
    let owners = l.owners();
    for (k, groups) in l.neighbors.iter().enumerate() {
        for g in groups {
            assert_ne!(g.source, k);
            assert!(g.ids.iter().all(|&i| owners[i] == g.source));
        }
    }
}

proptest! {
    #[test]
    fn layouts_stay_partitions_across_switches(
        nos in 2usize..160,
        noss in 1usize..12,
        nof in 1usize..4,
        ring in any::<bool>(),
        cycle in proptest::collection::vec(0usize..1000, 1..5),
        switches in 1usize..8,
    ) {
        let noss = noss.min(nos);
        let mode = if ring { BoundaryMode::Ring } else { BoundaryMode::Anchored };
        let spec = LayoutSpec { nos, noss, nof, mode };
        let base = spec.base_block();
        let cycle: Vec<usize> = cycle.into_iter().map(|c| c % base).collect();
        let s = SwitchSchedule::new(Archetype::Switching, 1, cycle.clone()).unwrap();
        let mut l = s.first_layout(&spec).unwrap();
        assert_partition(&l);
        let first = l.clone();
        for k in 1..=switches {
            l = next_layout(&s, &l).unwrap();
            assert_partition(&l);
            prop_assert_eq!(l.offset, cycle[k % cycle.len()]);
            if k % cycle.len() == 0 {
                prop_assert!(l.same_blocks(&first));
            }
        }
    }

    #[test]
    fn static_layout_never_moves(nos in 2usize..120, noss in 1usize..10, switches in 1usize..5) {
        let spec = spec(nos, noss.min(nos), 1);
        let s = SwitchSchedule::new(Archetype::Static, 1, vec![0]).unwrap();
        let first = s.first_layout(&spec).unwrap();
        let mut l = first.clone();
        for _ in 0..switches {
            l = next_layout(&s, &l).unwrap();
            prop_assert!(l.same_blocks(&first));
        }
    }
}
