//! Text and JSON rendering for each subcommand.

use std::fmt::Display;

use serde_json::{json, Value};

use ewf_core::bellbohm::{self, Trajectory};
use ewf_core::born;
use ewf_core::checks::{self, CheckRecord, Expectation, H1, H1_PRIME};
use ewf_core::epistemics::{self, build_argument, profiles, InterpretationProfile, Verdict};
use ewf_core::exact::{self, format_fraction, format_sig};
use ewf_core::histories::{chain_consistency_report, History};
use ewf_core::{CollapsePolicy, Label, Protocol, Variable};

use crate::{Failure, Format, Rendered};

const EXACT_TOL: f64 = 1e-12;

fn internal(e: impl Display) -> Failure {
    eprintln!("error: {e}");
    Failure::Verification
}

fn clean(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

/// `1/12 (0.0833333333333)`, or just the float when no small fraction fits.
fn prob(x: f64) -> String {
    let x = clean(x);
    match exact::recognize(x, EXACT_TOL) {
        Some(q) if *q.denom() == 1 => format_fraction(q),
        Some(q) => format!("{} ({})", format_fraction(q), format_sig(x)),
        None => format_sig(x),
    }
}

fn prob_json(x: f64) -> Value {
    let x = clean(x);
    json!({
        "value": x,
        "exact": exact::recognize(x, EXACT_TOL).map(format_fraction),
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn policy_name(p: CollapsePolicy) -> &'static str {
    match p {
        CollapsePolicy::SequentialProjection => "collapse",
        CollapsePolicy::NoCollapseMarginal => "marginal",
    }
}

fn tuple(labels: &[Label]) -> String {
    let parts: Vec<String> = labels.iter().map(ToString::to_string).collect();
    format!("({})", parts.join(", "))
}

fn amplitude(a: num_complex::Complex<f64>) -> String {
    if a.im == 0.0 {
        format_sig(a.re)
    } else {
        format!("{}{:+}i", format_sig(a.re), a.im)
    }
}

pub fn simulate(
    protocol: &Protocol,
    policy: CollapsePolicy,
    format: Format,
) -> Result<Rendered, Failure> {
    let joint = born::joint_distribution(protocol, policy).map_err(internal)?;
    let marginal = joint.marginal(&[Variable::W1, Variable::W2]);
    let singles = [Variable::W1, Variable::W2].map(|v| (v, joint.probability(&[(v, Label::Ok)])));
    let coin = protocol.coin();
    let out = match format {
        Format::Text => {
            let mut s = format!(
                "coin: alpha = {}, beta = {}\npolicy: {}\n\njoint distribution of (r, z, w1, w2)\n",
                amplitude(coin.head()),
                amplitude(coin.tail()),
                policy_name(policy)
            );
            for (labels, q) in joint.outcomes() {
                s.push_str(&format!("{} {}\n", tuple(labels), prob(*q)));
            }
            s.push_str("\nmarginal of (w1, w2)\n");
            for (labels, q) in marginal.outcomes() {
                s.push_str(&format!("{} {}\n", tuple(labels), prob(*q)));
            }
            s.push('\n');
            for (v, q) in singles {
                s.push_str(&format!("P({v}=ok) {}\n", prob(q)));
            }
            s
        }
        Format::Json => {
            let rows = |d: &ewf_core::Distribution| -> Vec<Value> {
                d.outcomes()
                    .iter()
                    .map(|(labels, q)| {
                        json!({
                            "outcome": labels.iter().map(ToString::to_string).collect::<Vec<_>>(),
                            "probability": prob_json(*q),
                        })
                    })
                    .collect()
            };
            pretty(&json!({
                "coin": {
                    "alpha": [coin.head().re, coin.head().im],
                    "beta": [coin.tail().re, coin.tail().im],
                },
                "policy": policy_name(policy),
                "joint": { "variables": ["r", "z", "w1", "w2"], "outcomes": rows(&joint) },
                "marginal": { "variables": ["w1", "w2"], "outcomes": rows(&marginal) },
                "p_w1_ok": prob_json(singles[0].1),
                "p_w2_ok": prob_json(singles[1].1),
            }))
        }
    };
    Ok((out, true))
}

fn expected_text(e: Expectation) -> String {
    match e {
        Expectation::Equals(q) => format_fraction(q),
        Expectation::Positive => "> 0".to_string(),
    }
}

fn check_line(r: &CheckRecord) -> String {
    let observed = match (&r.observed, &r.error) {
        (Some(x), _) => prob(*x),
        (None, Some(e)) => format!("not computable: {e}"),
        (None, None) => "not computable".to_string(),
    };
    format!(
        "{} {}: {} = {} (expected {})\n",
        r.status(),
        r.id,
        r.claim,
        observed,
        expected_text(r.expected)
    )
}

fn check_json(r: &CheckRecord) -> Value {
    json!({
        "id": r.id,
        "claim": r.claim,
        "expected": match r.expected {
            Expectation::Equals(q) => json!({ "equals": format_fraction(q) }),
            Expectation::Positive => json!("positive"),
        },
        "observed": r.observed.map(prob_json),
        "error": r.error,
        "status": r.status(),
    })
}

pub fn verify(protocol: &Protocol, format: Format) -> Result<Rendered, Failure> {
    let records = checks::run_all(protocol);
    let passed = checks::all_passed(&records);
    let count = records.iter().filter(|r| r.passed).count();
    let out = match format {
        Format::Text => {
            let mut s: String = records.iter().map(check_line).collect();
            s.push_str(&format!("{count} of {} checks passed\n", records.len()));
            s
        }
        Format::Json => pretty(&json!({
            "checks": records.iter().map(check_json).collect::<Vec<_>>(),
            "passed": count,
            "total": records.len(),
            "all_passed": passed,
        })),
    };
    Ok((out, passed))
}

pub fn histories(
    protocol: &Protocol,
    texts: &[String],
    format: Format,
) -> Result<Rendered, Failure> {
    let defaults = [H1.to_string(), H1_PRIME.to_string()];
    let texts = if texts.is_empty() {
        &defaults[..]
    } else {
        texts
    };
    let family = texts
        .iter()
        .map(|t| History::parse(protocol, t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report =
        chain_consistency_report(protocol, &family).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = match format {
        Format::Text => {
            let mut s = String::new();
            for (h, (_, q)) in family.iter().zip(&report.probabilities) {
                s.push_str(&format!("P[{h}] = {}\n", prob(*q)));
            }
            for pair in &report.pairs {
                s.push_str(&format!(
                    "\n{} / {}: off-diagonal {}, same event epochs: {}\n",
                    pair.first,
                    pair.second,
                    prob(pair.off_diagonal),
                    if pair.shared_epochs { "yes" } else { "no" }
                ));
                for note in &pair.unobserved {
                    s.push_str(&format!("  {note}\n"));
                }
                let verdict = if pair.consistent() {
                    "jointly considerable"
                } else {
                    "not jointly considerable"
                };
                s.push_str(&format!("  {verdict}\n"));
            }
            s.push_str(&format!(
                "\nfamily consistent: {}\n",
                if report.is_consistent() { "yes" } else { "no" }
            ));
            s
        }
        Format::Json => pretty(&json!({
            "histories": family.iter().zip(&report.probabilities).map(|(h, (_, q))| json!({
                "name": h.name(),
                "text": h.to_string(),
                "probability": prob_json(*q),
            })).collect::<Vec<_>>(),
            "pairs": report.pairs.iter().map(|p| json!({
                "first": p.first,
                "second": p.second,
                "off_diagonal": prob_json(p.off_diagonal),
                "shared_epochs": p.shared_epochs,
                "unobserved": p.unobserved,
                "consistent": p.consistent(),
            })).collect::<Vec<_>>(),
            "consistent": report.is_consistent(),
        })),
    };
    Ok((out, true))
}

pub fn bellbohm(
    protocol: &Protocol,
    paper_only: bool,
    format: Format,
) -> Result<Rendered, Failure> {
    let chain = bellbohm::exact_chain(protocol).map_err(internal)?;
    let realised = Trajectory::paper();
    let q = chain.probability(&realised);
    let rows: Vec<(Trajectory, f64)> = if paper_only {
        vec![(realised, q)]
    } else {
        chain.trajectories.clone()
    };
    let out = match format {
        Format::Text => {
            let mut s = String::new();
            if paper_only {
                s.push_str(&format!(
                    "realised trajectory: {}\nprobability: {}\n",
                    rows[0].0,
                    prob(q)
                ));
            } else {
                s.push_str("memory configurations (f1, f2, w1, w2) after each stage\n");
                for (t, p) in &rows {
                    s.push_str(&format!("{} {t}\n", prob(*p)));
                }
                s.push_str(&format!(
                    "\n{} trajectories, total {}\n",
                    rows.len(),
                    prob(chain.total())
                ));
            }
            s
        }
        Format::Json => pretty(&json!({
            "trajectories": rows.iter().map(|(t, p)| json!({
                "steps": t.steps.iter().map(|(stage, m)| json!({
                    "stage": stage.token(),
                    "f1": m.f1.to_string(),
                    "f2": m.f2.to_string(),
                    "w1": m.w1.to_string(),
                    "w2": m.w2.to_string(),
                })).collect::<Vec<_>>(),
                "probability": prob_json(*p),
            })).collect::<Vec<_>>(),
            "total": prob_json(chain.total()),
        })),
    };
    Ok((out, true))
}

pub fn argue(profile: &InterpretationProfile, verdict: &Verdict, format: Format) -> String {
    let steps = build_argument();
    match format {
        Format::Text => {
            let mut s = format!("interpretation: {profile}\n");
            for id in verdict.trace() {
                let step = steps
                    .iter()
                    .find(|st| st.id == *id)
                    .expect("trace steps exist");
                s.push_str(&format!(
                    "{id} fired [requires {}]: {}\n",
                    step.requires, step.conclusion
                ));
            }
            match verdict {
                Verdict::BlockedAt { step, .. } => {
                    let st = steps.iter().find(|x| x.id == *step).expect("step exists");
                    s.push_str(&format!("{step} blocked [requires {}]\n", st.requires));
                }
                Verdict::ContradictionDerived { clash, .. } => {
                    s.push_str(&format!("clash: {clash}\n"));
                }
            }
            s.push_str(&format!("{verdict}\n"));
            s
        }
        Format::Json => {
            let (kind, step, missing, clash) = match verdict {
                Verdict::BlockedAt { step, missing, .. } => (
                    "BlockedAt",
                    Some(step.to_string()),
                    missing.iter().map(|a| a.token()).collect::<Vec<_>>(),
                    None,
                ),
                Verdict::ContradictionDerived { clash, .. } => (
                    "ContradictionDerived",
                    None,
                    Vec::new(),
                    Some(json!({
                        "certain_not": clash.certain_not.to_string(),
                        "possible": clash.possible.to_string(),
                    })),
                ),
            };
            pretty(&json!({
                "interpretation": profile.name(),
                "flags": epistemics::AssumptionId::TABLE_COLUMNS
                    .iter()
                    .map(|a| (a.token().to_string(), json!(profile.holds(*a))))
                    .collect::<serde_json::Map<_, _>>(),
                "trace": verdict.trace().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "verdict": kind,
                "step": step,
                "missing": missing,
                "clash": clash,
                "summary": verdict.to_string(),
            }))
        }
    }
}

pub fn audit(format: Format) -> String {
    let rows = epistemics::escape_rule_audit();
    let yes = |b: bool| if b { "yes" } else { "no" };
    match format {
        Format::Text => {
            let width = rows
                .iter()
                .map(|r| r.name.chars().count())
                .max()
                .unwrap_or(0);
            let mut s = format!(
                "{:width$}  escape rule  blocked  claims escape  verdict\n",
                "interpretation"
            );
            for r in &rows {
                s.push_str(&format!(
                    "{:width$}  {:11}  {:7}  {:13}  {}{}\n",
                    r.name,
                    yes(r.escape_rule),
                    yes(r.blocked),
                    yes(r.claims_escape),
                    r.verdict,
                    if r.discrepancy() {
                        "  <- discrepancy"
                    } else {
                        ""
                    }
                ));
            }
            let flagged: Vec<&str> = rows
                .iter()
                .filter(|r| r.discrepancy())
                .map(|r| r.name.as_str())
                .collect();
            s.push_str(&format!(
                "\ndiscrepancies: {}\n",
                if flagged.is_empty() {
                    "none".to_string()
                } else {
                    flagged.join(", ")
                }
            ));
            s
        }
        Format::Json => pretty(&json!({
            "rows": rows.iter().map(|r| json!({
                "interpretation": r.name,
                "escape_rule": r.escape_rule,
                "blocked": r.blocked,
                "claims_escape": r.claims_escape,
                "verdict": r.verdict,
                "discrepancy": r.discrepancy(),
            })).collect::<Vec<_>>(),
            "discrepancies": rows.iter().filter(|r| r.discrepancy()).map(|r| r.name.clone()).collect::<Vec<_>>(),
        })),
    }
}

pub fn report(protocol: &Protocol) -> Result<Rendered, Failure> {
    let (checks, passed) = verify(protocol, Format::Text)?;
    let (sim, _) = simulate(protocol, CollapsePolicy::SequentialProjection, Format::Text)?;
    let (hist, _) = histories(protocol, &[], Format::Text)?;
    let (bb, _) = bellbohm(protocol, true, Format::Text)?;
    let mut verdicts = String::new();
    for p in profiles::shipped() {
        let v = epistemics::check(&p, protocol).map_err(internal)?;
        verdicts.push_str(&format!("{}: {v}\n", p.name()));
    }
    let sections = [
        ("assumption tables", profiles::render_tables()),
        ("verification", checks),
        ("simulation", sim),
        ("histories", hist),
        ("bell-bohm", bb),
        ("verdicts", verdicts),
        ("escape-rule audit", audit(Format::Text)),
    ];
    let mut out = String::new();
    for (i, (title, body)) in sections.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("== {title} ==\n{body}"));
    }
    Ok((out, passed))
}
