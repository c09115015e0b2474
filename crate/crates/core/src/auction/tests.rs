use std::sync::Arc;

use super::*;
use crate::instance::{generate_instance, GenerationConfig, MissionInstance};
use crate::testutil::line_fleet;
use crate::valuedp::build_quadrature;

fn oracle(inst: &MissionInstance, q: usize, step: f64) -> SetValueOracle {
    let quad = build_quadrature(inst.agents[0].speed, q).unwrap();
    SetValueOracle::new(Arc::new(inst.clone()), quad, step).unwrap()
}

/// T0 and T1 are far apart on opposite sides; T2 is close to the depot.
/// V({0,1}) = 1, V({0,2}) = V({1,2}) = 2.
fn three_task_pair() -> MissionInstance {
    line_fleet(
        &[
            (200.0, 0.0, 480.0, 10.0),
            (-200.0, 0.0, 480.0, 10.0),
            (10.0, 0.0, 480.0, 10.0),
        ],
        &[0.0, 0.0],
        2,
        0.0,
    )
}

#[test]
fn first_bids_are_singleton_values() {
    let inst = three_task_pair();
    let oracle = oracle(&inst, 1, 1.0);
    let mut bidder = MdpBidder::new(&oracle);
    let state = BundleState::new(0, 3, 2);
    let bids = compute_bids(&state, &mut bidder, true).unwrap();
    assert_eq!(bids.len(), 3);
    for bid in &bids {
        assert_eq!(bid.value, 1.0);
        assert!(bid.eligible);
    }
    assert_eq!(bidder.evaluations(), 3);
}

#[test]
fn unreachable_task_is_worth_nothing() {
    let inst = line_fleet(&[(100.0, 0.0, 20.0, 10.0)], &[0.0], 2, 0.0);
    let oracle = oracle(&inst, 1, 1.0);
    let mut bidder = MdpBidder::new(&oracle);
    let mut state = BundleState::new(0, 1, 1);
    let bids = compute_bids(&state, &mut bidder, true).unwrap();
    assert_eq!(bids[0].value, 0.0);
    assert!(!build_bundle(&mut state, &mut bidder, 2, true).unwrap());
    assert!(state.bundle.is_empty());
}

#[test]
fn second_of_two_exclusive_tasks_adds_nothing() {
    // Both at x=10 and due at 15; serving one ends at 20.
    let inst = line_fleet(&[(10.0, 0.0, 15.0, 10.0), (10.0, 0.0, 15.0, 10.0)], &[0.0], 2, 0.0);
    let oracle = oracle(&inst, 1, 1.0);
    let mut bidder = MdpBidder::new(&oracle);
    let mut state = BundleState::new(0, 2, 1);
    build_bundle(&mut state, &mut bidder, 2, true).unwrap();
    assert_eq!(state.bundle, vec![0]);
    let bids = compute_bids(&state, &mut bidder, true).unwrap();
    assert_eq!(bids[0].task_id, 1);
    assert_eq!(bids[0].value, 0.0);
}

#[test]
fn capacity_one_takes_the_single_best() {
    let inst = line_fleet(&[(10.0, 0.0, 480.0, 10.0), (20.0, 0.0, 480.0, 10.0)], &[0.0], 1, 0.0);
    let oracle = oracle(&inst, 1, 1.0);
    let mut bidder = MdpBidder::new(&oracle);
    let mut state = BundleState::new(0, 2, 1);
    assert!(build_bundle(&mut state, &mut bidder, 1, true).unwrap());
    assert_eq!(state.bundle, vec![0]);
    assert!(!build_bundle(&mut state, &mut bidder, 1, true).unwrap());
}

#[test]
fn tasks_held_by_better_bidders_are_left_alone() {
    let inst = three_task_pair();
    let oracle = oracle(&inst, 1, 1.0);
    let mut bidder = MdpBidder::new(&oracle);
    let mut state = BundleState::new(1, 3, 2);
    for j in 0..3 {
        state.winning_bids[j] = 1.0;
        state.winners[j] = Some(0);
    }
    assert!(!build_bundle(&mut state, &mut bidder, 2, true).unwrap());
    assert!(state.bundle.is_empty());
}

#[test]
fn bids_do_not_depend_on_claim_order() {
    let inst = generate_instance(&GenerationConfig::new(5, 1, 0.1, 8)).unwrap();
    let oracle = oracle(&inst, 4, 2.0);
    let mut bidder = MdpBidder::new(&oracle);
    let a = bidder.marginal_bids(0, &[0, 3], &[0, 3], &[1, 2, 4]).unwrap();
    let b = bidder.marginal_bids(0, &[3, 0], &[3, 0], &[1, 2, 4]).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.value.to_bits(), y.value.to_bits());
    }
}

#[test]
fn hand_traced_two_agent_run() {
    let inst = three_task_pair();
    let oracle = oracle(&inst, 1, 1.0);
    let result = run_auction(&inst, &NetworkModel::complete(2), &oracle, true, 50).unwrap();
    assert_eq!(result.assignment, vec![vec![0, 2], vec![1]]);
    assert!(result.unassigned.is_empty());
    assert_eq!(result.per_agent_value, vec![2.0, 1.0]);
    assert_eq!(result.expected_reward(&inst), 3.0);
    assert_eq!(result.rounds_to_converge, 2);
    assert_eq!(result.rounds_run, 3);
    // Round 1: 5 + 5, round 2: 0 + 5, round 3: 0 + 2.
    assert_eq!(result.score_evaluations, 17);
}

#[test]
fn single_agent_settles_in_one_round() {
    let inst = generate_instance(&GenerationConfig::new(4, 1, 0.1, 2)).unwrap();
    let oracle = oracle(&inst, 4, 2.0);
    let result = run_auction(&inst, &NetworkModel::complete(1), &oracle, true, 50).unwrap();
    assert!(result.rounds_to_converge <= 1);
    assert_eq!(result.rounds_run, result.rounds_to_converge + 1);
    let held = result.task_set(0);
    assert_eq!(result.per_agent_value[0], oracle.value(0, held).unwrap());
    let n = inst.task_count() as u64;
    let k = inst.agents[0].capacity as u64;
    assert!(result.score_evaluations <= result.rounds_run as u64 * n * (k + 1));
}

#[test]
fn separated_agents_converge_immediately() {
    let inst = line_fleet(
        &[(10.0, 0.0, 20.0, 10.0), (990.0, 0.0, 20.0, 10.0)],
        &[0.0, 1000.0],
        2,
        0.0,
    );
    let oracle = oracle(&inst, 1, 1.0);
    let result = run_auction(&inst, &NetworkModel::complete(2), &oracle, true, 50).unwrap();
    assert_eq!(result.assignment, vec![vec![0], vec![1]]);
    assert!(result.rounds_to_converge <= 2);
}

#[test]
fn round_limit_reports_the_contested_tasks() {
    let inst = three_task_pair();
    let oracle = oracle(&inst, 1, 1.0);
    let err = run_auction(&inst, &NetworkModel::complete(2), &oracle, true, 1).unwrap_err();
    match err {
        AuctionError::NonConvergence(nc) => {
            assert_eq!(nc.rounds, 1);
            assert_eq!(nc.oscillating_tasks, vec![0, 2]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn wrapped_bundle_bids_never_increase() {
    for seed in 0..6 {
        let inst = generate_instance(&GenerationConfig::new(6, 2, 0.2, seed)).unwrap();
        let oracle = oracle(&inst, 3, 4.0);
        let mut bidder = MdpBidder::new(&oracle);
        let network = NetworkModel::line(2);
        let config = EngineConfig {
            wrapping: true,
            max_rounds: 100,
        };
        let result = coordinate_observed(&inst, &network, &mut bidder, &config, |_, states| {
            for s in states {
                let bids = s.bundle_bids();
                assert!(bids.windows(2).all(|w| w[0] >= w[1]), "seed {seed}: {bids:?}");
            }
        })
        .unwrap();
        result.verify(&inst).unwrap();
    }
}

#[test]
fn network_size_must_match() {
    let inst = three_task_pair();
    let oracle = oracle(&inst, 1, 1.0);
    let err = run_auction(&inst, &NetworkModel::complete(3), &oracle, true, 10).unwrap_err();
    assert!(matches!(err, AuctionError::Network(_)));
}
