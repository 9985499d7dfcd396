mod common;

use ewf_core::born::{self, BornError};
use ewf_core::{
    AgentId, Certainty, CoinAmplitudes, CollapsePolicy, Label, Protocol, StageId, Variable,
};

const POLICIES: [CollapsePolicy; 2] = [
    CollapsePolicy::SequentialProjection,
    CollapsePolicy::NoCollapseMarginal,
];

fn label_digit(l: Label) -> usize {
    match l {
        Label::Ready => 0,
        Label::Head | Label::Plus | Label::Ok => 1,
        Label::Tail | Label::Minus | Label::Fail => 2,
    }
}

#[test]
fn ok_ok_is_one_twelfth_under_both_policies() {
    let p = Protocol::default();
    for policy in POLICIES {
        let joint = born::joint_distribution(&p, policy).unwrap();
        let q = joint.probability(&[(Variable::W1, Label::Ok), (Variable::W2, Label::Ok)]);
        assert!((q - 1.0 / 12.0).abs() < 1e-12, "{policy:?}");
    }
}

#[test]
fn w_marginal_matches_basis_change_expansion() {
    let p = Protocol::default();
    for policy in POLICIES {
        let m = born::joint_distribution(&p, policy)
            .unwrap()
            .marginal(&[Variable::W1, Variable::W2]);
        for ((w1, w2), expected) in common::W_MARGINAL {
            let label = |d: usize| if d == 1 { Label::Ok } else { Label::Fail };
            let q = m.probability(&[(Variable::W1, label(w1)), (Variable::W2, label(w2))]);
            assert!((q - expected).abs() < 1e-12, "{policy:?} ({w1},{w2})");
        }
    }
}

#[test]
fn full_joint_matches_final_record_weights_of_oracle() {
    let final_state = common::default_pilot_states().pop().unwrap();
    let p = Protocol::default();
    for policy in POLICIES {
        let joint = born::joint_distribution(&p, policy).unwrap();
        for (labels, q) in joint.outcomes() {
            let d: Vec<usize> = labels.iter().map(|&l| label_digit(l)).collect();
            let expected = common::weight(&final_state, |x| {
                x[common::F1] == d[0]
                    && x[common::F2] == d[1]
                    && x[common::W1] == d[2]
                    && x[common::W2] == d[3]
            });
            assert!((q - expected).abs() < 1e-12, "{policy:?} {labels:?}");
        }
    }
}

#[test]
fn joint_entries_are_forty_eighths() {
    // each (r, z) is uniform given (w1, w2): entries (1, 1, 1, 9)/48
    let joint =
        born::joint_distribution(&Protocol::default(), CollapsePolicy::SequentialProjection)
            .unwrap();
    for (labels, q) in joint.outcomes() {
        let nine = labels[2] == Label::Fail && labels[3] == Label::Fail;
        let expected = if nine { 9.0 / 48.0 } else { 1.0 / 48.0 };
        assert!((q - expected).abs() < 1e-12, "{labels:?}");
    }
}

#[test]
fn fr_quantum_facts_at_the_epoch_they_are_made() {
    let p = Protocol::default();
    let after_obs2 = p.pilot_state_after(StageId::Obs2).unwrap();
    let z = p.measurement_spec(Variable::Z).unwrap();
    let w1 = p.measurement_spec(Variable::W1).unwrap();
    let w2 = p.measurement_spec(Variable::W2).unwrap();
    assert_eq!(
        born::certainty_check_joint(&after_obs2, &[(&w1, Label::Ok), (&z, Label::Minus)]).unwrap(),
        Certainty::Impossible
    );
    let records = born::record_distribution(&p, &after_obs2, &[AgentId::F1, AgentId::F2]).unwrap();
    let plus_given_head = records
        .conditional(&[(Variable::Z, Label::Plus)], &[(Variable::R, Label::Head)])
        .unwrap();
    assert!(plus_given_head.abs() < 1e-12);
    let tail = p
        .record_projector(AgentId::F1, Label::Tail)
        .unwrap()
        .project(&after_obs2)
        .unwrap()
        .normalized()
        .unwrap();
    assert_eq!(
        born::certainty_check(&tail, &w2, Label::Ok).unwrap(),
        Certainty::Impossible
    );
    assert_eq!(
        born::certainty_check(&tail, &w2, Label::Fail).unwrap(),
        Certainty::Certain
    );
}

#[test]
fn conditional_on_impossible_event_is_undefined() {
    let p = Protocol::new(CoinAmplitudes::real(1.0, 0.0).unwrap());
    let joint = born::joint_distribution(&p, CollapsePolicy::SequentialProjection).unwrap();
    // head-only run: the W1 record is uniform, so condition on a tail record instead
    let after_obs2 = p.pilot_state_after(StageId::Obs2).unwrap();
    let records = born::record_distribution(&p, &after_obs2, &[AgentId::F1]).unwrap();
    assert_eq!(
        records.conditional(&[(Variable::R, Label::Head)], &[(Variable::R, Label::Tail)]),
        None
    );
    assert!((joint.total() - 1.0).abs() < 1e-12);
}

#[test]
fn head_only_coin_gives_even_w2() {
    // |down,-⟩ = (ok + fail)/√2 on F2S
    for (a, b, expected) in [(1.0, 0.0, 0.5), (0.0, 1.0, 0.0)] {
        let p = Protocol::new(CoinAmplitudes::real(a, b).unwrap());
        let joint = born::joint_distribution(&p, CollapsePolicy::SequentialProjection).unwrap();
        let q = joint.probability(&[(Variable::W2, Label::Ok)]);
        assert!((q - expected).abs() < 1e-12, "coin ({a}, {b})");
    }
}

#[test]
fn overlapping_targets_are_rejected() {
    let p = Protocol::default();
    let psi = p.pilot_state_after(StageId::Obs2).unwrap();
    let r = p.measurement_spec(Variable::R).unwrap();
    let w1 = p.measurement_spec(Variable::W1).unwrap();
    assert_eq!(
        born::joint_outcome_probability(&psi, &[(&r, Label::Head), (&w1, Label::Ok)]),
        Err(BornError::OverlappingTargets)
    );
}

#[test]
fn unnormalised_state_is_rejected() {
    let p = Protocol::default();
    let psi = p
        .initial_state()
        .scaled(num_complex::Complex::new(2.0, 0.0));
    let z = p.measurement_spec(Variable::Z).unwrap();
    assert!(matches!(
        born::outcome_distribution(&psi, &z),
        Err(BornError::Unnormalized(_))
    ));
}

#[test]
fn invalid_stage_order_is_rejected() {
    let p = Protocol::default();
    let mut order = StageId::ALL.to_vec();
    order.swap(1, 2);
    assert_eq!(
        born::joint_distribution_in_order(&p, CollapsePolicy::NoCollapseMarginal, &order)
            .unwrap_err(),
        BornError::InvalidOrder
    );
}

#[test]
fn f32_path_agrees_to_single_precision() {
    let p = ewf_core::ProtocolF32::default();
    let joint = born::joint_distribution(&p, CollapsePolicy::SequentialProjection).unwrap();
    let q = joint.probability(&[(Variable::W1, Label::Ok), (Variable::W2, Label::Ok)]);
    assert!((q - 1.0 / 12.0).abs() < 1e-6);
}
