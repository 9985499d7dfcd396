//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ewf_core::bellbohm::{self, BeableChain, Trajectory};
use ewf_core::born::{self, joint_distribution_in_order};
use ewf_core::checks::{self, H1, H1_PRIME};
use ewf_core::epistemics::profiles::{self, render_tables};
use ewf_core::epistemics::{
    check, escape_rule_audit, verify_verdict, AssumptionId, InterpretationProfile, StepId, Verdict,
};
use ewf_core::histories::history_probability;
use ewf_core::protocol::global_space;
use ewf_core::{
    CoinAmplitudes, CollapsePolicy, History, Label, Protocol, StageId, StateVector, Variable,
};

const POLICIES: [CollapsePolicy; 2] = [
    CollapsePolicy::SequentialProjection,
    CollapsePolicy::NoCollapseMarginal,
];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed())
}

fn ok_ok_one_twelfth() -> Outcome {
    let p = Protocol::default();
    let mut worst: f64 = 0.0;
    for policy in POLICIES {
        let joint = born::joint_distribution(&p, policy).unwrap();
        let q = joint.probability(&[(Variable::W1, Label::Ok), (Variable::W2, Label::Ok)]);
        worst = worst.max((q - 1.0 / 12.0).abs());
    }
    outcome(
        worst < 1e-12,
        format!("max |P(ok,ok) - 1/12| = {worst:.2e}"),
    )
}

fn fr8_state() -> Outcome {
    let p = Protocol::default();
    let dev = checks::fr8_state_deviation(&p).unwrap();
    let norm = checks::fr8_ok_minus_norm(&p).unwrap();
    outcome(
        dev < 1e-12 && norm < 1e-12,
        format!("coefficient deviation {dev:.2e}, H_(ok,-) projection norm {norm:.2e}"),
    )
}

fn fr2_orthogonality() -> Outcome {
    let overlap = checks::fr2_overlap(&Protocol::default()).unwrap();
    outcome(overlap < 1e-12, format!("|<ok|branch>| = {overlap:.2e}"))
}

fn histories_values() -> Outcome {
    let p = Protocol::default();
    let h1 = history_probability(&p, &History::parse(&p, H1).unwrap()).unwrap();
    let h1p = history_probability(&p, &History::parse(&p, H1_PRIME).unwrap()).unwrap();
    outcome(
        (h1 - 1.0 / 12.0).abs() < 1e-12 && h1p.abs() < 1e-12,
        format!("P[h1] = {h1:.12}, P[h1'] = {h1p:.2e}"),
    )
}

fn bell_bohm_chain() -> Outcome {
    let chain = bellbohm::exact_chain(&Protocol::default()).unwrap();
    let q = chain.probability(&Trajectory::paper());
    let records = chain.final_records();
    let mut worst: f64 = 0.0;
    for ((w1, w2), expected) in common::W_MARGINAL {
        let label = |d: usize| if d == 1 { Label::Ok } else { Label::Fail };
        let got = records.get(&(label(w1), label(w2))).copied().unwrap_or(0.0);
        worst = worst.max((got - expected).abs());
    }
    outcome(
        q > 0.0 && worst < 1e-10,
        format!("trajectory probability {q:.12}, record marginal deviation {worst:.2e}"),
    )
}

fn derivation_engine() -> Outcome {
    let protocol = Protocol::default();
    let all = InterpretationProfile::all_check();
    let v = check(&all, &protocol).unwrap();
    let sound = verify_verdict(&v, &all).is_ok();
    let full = matches!(&v, Verdict::ContradictionDerived { trace, .. } if trace.len() == 12);
    let expect = |name: &str, step: u8, missing: &[AssumptionId]| -> bool {
        let profile = profiles::by_name(name).unwrap();
        match check(&profile, &protocol).unwrap() {
            Verdict::BlockedAt {
                step: s,
                missing: m,
                ..
            } => s == StepId::new(step).unwrap() && m.iter().copied().eq(missing.iter().copied()),
            Verdict::ContradictionDerived { .. } => false,
        }
    };
    let consistent_with_flags = profiles::shipped().iter().all(|p| {
        let v = check(p, &protocol).unwrap();
        verify_verdict(&v, p).is_ok()
    });
    let named = expect("qbism", 7, &[AssumptionId::C])
        && expect("copenhagen", 2, &[AssumptionId::U])
        && expect("relative-state", 1, &[AssumptionId::P])
        && expect("many-worlds", 1, &[AssumptionId::P]);
    outcome(
        sound && full && named && consistent_with_flags,
        format!("all-check: {v}; sound trace {sound}; named verdicts {named}"),
    )
}

fn tables_and_audit() -> Outcome {
    let golden = include_str!("fixtures/tables.txt");
    let tables = render_tables() == golden;
    let flagged: Vec<String> = escape_rule_audit()
        .into_iter()
        .filter(|r| r.discrepancy())
        .map(|r| r.name)
        .collect();
    let audit = flagged == ["Consistent histories"];
    outcome(
        tables && audit,
        format!("tables match fixture {tables}; audit flags {flagged:?}"),
    )
}

fn random_coin(rng: &mut StdRng) -> Protocol {
    let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let coin = CoinAmplitudes::new(
        Complex::new(theta.cos(), 0.0),
        Complex::from_polar(theta.sin(), phi),
    )
    .unwrap();
    Protocol::new(coin)
}

fn property_suites() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let p = Protocol::default();
    let unitaries: Vec<_> = StageId::ALL
        .iter()
        .map(|&s| p.stage_unitary(s).unwrap())
        .collect();
    let mut norm_dev: f64 = 0.0;
    for _ in 0..1000 {
        let amps = (0..324)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = StateVector::from_amplitudes(global_space(), amps)
            .unwrap()
            .normalized()
            .unwrap();
        for u in &unitaries {
            norm_dev = norm_dev.max((u.apply_unchecked(&psi).unwrap().norm() - 1.0).abs());
        }
    }
    let mut swapped = StageId::ALL.to_vec();
    swapped.swap(4, 5);
    let (mut completeness, mut policy_dev, mut order_dev, mut chain_dev): (f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0);
    for i in 0..24 {
        let p = if i == 0 {
            Protocol::default()
        } else {
            random_coin(&mut rng)
        };
        let a = born::joint_distribution(&p, CollapsePolicy::SequentialProjection).unwrap();
        let b = born::joint_distribution(&p, CollapsePolicy::NoCollapseMarginal).unwrap();
        completeness = completeness
            .max((a.total() - 1.0).abs())
            .max((b.total() - 1.0).abs());
        policy_dev = policy_dev.max(a.max_deviation(&b));
        for (policy, base) in [
            (CollapsePolicy::SequentialProjection, &a),
            (CollapsePolicy::NoCollapseMarginal, &b),
        ] {
            let s = joint_distribution_in_order(&p, policy, &swapped).unwrap();
            order_dev = order_dev.max(base.max_deviation(&s));
        }
        if i < 6 {
            let chain = BeableChain::new(&p).unwrap();
            let paths = chain.exact_chain().unwrap();
            for stage in StageId::ALL {
                let marginal = paths.marginal_at(stage);
                for (m, w) in chain.born_weights(stage).unwrap() {
                    chain_dev = chain_dev.max((marginal.get(&m).copied().unwrap_or(0.0) - w).abs());
                }
            }
        }
    }
    outcome(
        norm_dev < 1e-12 && completeness < 1e-11 && policy_dev < 1e-11 && order_dev < 1e-11 && chain_dev < 1e-11,
        format!(
            "norm {norm_dev:.1e}, completeness {completeness:.1e}, policy {policy_dev:.1e}, order {order_dev:.1e}, chain {chain_dev:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);
    let criteria: [Criterion; 8] = [
        (
            "1 P(w1=ok, w2=ok) = 1/12 under both policies",
            ok_ok_one_twelfth,
            Some(Duration::from_secs(1)),
        ),
        (
            "2 FR8 state coefficients and H_(ok,-) orthogonality",
            fr8_state,
            None,
        ),
        ("3 FR2 orthogonality", fr2_orthogonality, None),
        (
            "4 history probabilities h1 = 1/12, h1' = 0",
            histories_values,
            None,
        ),
        (
            "5 Bell-Bohm chain trajectory and record marginal",
            bell_bohm_chain,
            Some(Duration::from_secs(5)),
        ),
        ("6 derivation engine verdicts", derivation_engine, None),
        (
            "7 table reproduction and escape-rule audit",
            tables_and_audit,
            None,
        ),
        ("8 property suites", property_suites, None),
    ];
    let mut failures = 0;
    for (name, run, budget) in criteria {
        let (o, elapsed) = timed(run);
        let in_time = budget.map_or(true, |b| elapsed < b);
        let passed = o.passed && in_time;
        if !passed {
            failures += 1;
        }
        let status = if passed { "PASS" } else { "FAIL" };
        let budget = budget
            .map(|b| format!(" (budget {}s)", b.as_secs()))
            .unwrap_or_default();
        println!(
            "{status} criterion {name}: {} [{:.3}s{budget}]",
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
