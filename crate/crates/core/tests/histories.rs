use ewf_core::checks::{H1, H1_PRIME};
use ewf_core::histories::{chain_consistency_report, history_probability, HistoryError};
use ewf_core::{History, Label, Protocol, StageId, Variable};

fn parse(p: &Protocol, text: &str) -> History {
    History::parse(p, text).unwrap()
}

#[test]
fn h1_is_one_twelfth() {
    // (1/√3)|tt↑+⟩, then ⟨ok|tt⟩ = -1/√2 and ⟨ok|↑+⟩ = -1/√2: amplitude 1/(2√3)
    let p = Protocol::default();
    let q = history_probability(&p, &parse(&p, H1)).unwrap();
    assert!((q - 1.0 / 12.0).abs() < 1e-12);
}

#[test]
fn h1_prime_is_zero() {
    // the tail branch of F2S is |fail⟩_{F2S}
    let p = Protocol::default();
    let q = history_probability(&p, &parse(&p, H1_PRIME)).unwrap();
    assert!(q.abs() < 1e-12);
}

#[test]
fn from_records_matches_parse() {
    let p = Protocol::default();
    let built = History::from_records(
        &p,
        "h1",
        &[
            (Variable::R, StageId::Obs0, Label::Tail),
            (Variable::Z, StageId::Obs2, Label::Plus),
            (Variable::W1, StageId::Meas3, Label::Ok),
            (Variable::W2, StageId::Meas4, Label::Ok),
        ],
    )
    .unwrap();
    assert_eq!(built.to_string(), H1);
}

#[test]
fn h1_and_h1_prime_are_not_jointly_considerable() {
    let p = Protocol::default();
    let report = chain_consistency_report(&p, &[parse(&p, H1), parse(&p, H1_PRIME)]).unwrap();
    assert!(!report.is_consistent());
    let pair = &report.pairs[0];
    assert!(!pair.shared_epochs);
    assert_eq!(pair.unobserved.len(), 2);
    assert!(pair.unobserved.iter().any(|u| u.contains("z@obs2=+")));
    assert!(pair.unobserved.iter().any(|u| u.contains("w1@meas3=ok")));
}

#[test]
fn refining_h1_prime_over_z_interferes() {
    // each refinement is (1/√3)|tt, z⟩ followed by w2 = ok: 1/6; their sum is 1/3 but the coarse history is 0
    let p = Protocol::default();
    let family = [
        parse(&p, "plus: r@obs0=tail, z@obs2=+, w2@meas4=ok"),
        parse(&p, "minus: r@obs0=tail, z@obs2=-, w2@meas4=ok"),
    ];
    let report = chain_consistency_report(&p, &family).unwrap();
    for (_, q) in &report.probabilities {
        assert!((q - 1.0 / 6.0).abs() < 1e-12);
    }
    let pair = &report.pairs[0];
    assert!(pair.shared_epochs);
    assert!((pair.off_diagonal - 1.0 / 6.0).abs() < 1e-12);
    assert!(!report.is_consistent());
}

#[test]
fn refining_over_w1_is_consistent() {
    let p = Protocol::default();
    let family = [
        parse(&p, "ok: r@obs0=tail, w1@meas3=ok, w2@meas4=ok"),
        parse(&p, "fail: r@obs0=tail, w1@meas3=fail, w2@meas4=ok"),
    ];
    let report = chain_consistency_report(&p, &family).unwrap();
    assert!(report.is_consistent());
    assert_eq!(report.flagged().count(), 0);
}

#[test]
fn events_out_of_order_are_rejected() {
    let p = Protocol::default();
    assert!(matches!(
        History::parse(&p, "bad: w2@meas4=ok, w1@meas3=ok"),
        Err(HistoryError::NonIncreasingEpochs(_))
    ));
    assert!(matches!(
        History::parse(&p, "bad: r@obs0=tail, r@obs0=head"),
        Err(HistoryError::NonIncreasingEpochs(_))
    ));
}

#[test]
fn whitespace_and_tabs_are_tolerated() {
    let p = Protocol::default();
    let h = parse(&p, "h1:\tr@obs0=tail ,  z@obs2=+,w1@meas3=ok,w2@meas4=ok ");
    assert_eq!(h.to_string(), H1);
}
