//! The twelve-step argument as a derivation gated by assumptions.
//!
//! Each step names the assumptions it needs as a small boolean formula and the
//! quantum facts it leans on. [`check`] verifies those facts on a protocol,
//! then fires the steps in order under an [`InterpretationProfile`] and stops
//! at the first step whose formula the profile does not satisfy.

pub mod facts;
pub mod profiles;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, Fraction};
use crate::protocol::{AgentId, Epoch, Label, Protocol, Variable};

pub use facts::{FactCheck, QuantumFact};
pub use profiles::{Flag, InterpretationProfile, ProfileError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AssumptionId {
    Q,
    C,
    S,
    /// The memory-variable form of S. Carried as metadata on FR5 only.
    Sbar,
    T,
    P,
    U,
    L,
    M,
}

impl AssumptionId {
    pub const ALL: [AssumptionId; 9] = [
        AssumptionId::Q,
        AssumptionId::C,
        AssumptionId::S,
        AssumptionId::Sbar,
        AssumptionId::T,
        AssumptionId::P,
        AssumptionId::U,
        AssumptionId::L,
        AssumptionId::M,
    ];

    /// The eight columns of the assumption table, in table order.
    pub const TABLE_COLUMNS: [AssumptionId; 8] = [
        AssumptionId::Q,
        AssumptionId::S,
        AssumptionId::C,
        AssumptionId::P,
        AssumptionId::U,
        AssumptionId::T,
        AssumptionId::L,
        AssumptionId::M,
    ];

    pub fn token(self) -> &'static str {
        match self {
            AssumptionId::Q => "Q",
            AssumptionId::C => "C",
            AssumptionId::S => "S",
            AssumptionId::Sbar => "Sbar",
            AssumptionId::T => "T",
            AssumptionId::P => "P",
            AssumptionId::U => "U",
            AssumptionId::L => "L",
            AssumptionId::M => "M",
        }
    }
}

impl fmt::Display for AssumptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A monotone formula over assumptions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Requirement {
    Atom(AssumptionId),
    All(Vec<Requirement>),
    Any(Vec<Requirement>),
}

impl Requirement {
    pub fn none() -> Self {
        Requirement::All(Vec::new())
    }

    pub fn satisfied(&self, profile: &InterpretationProfile) -> bool {
        match self {
            Requirement::Atom(a) => profile.holds(*a),
            Requirement::All(rs) => rs.iter().all(|r| r.satisfied(profile)),
            Requirement::Any(rs) => rs.iter().any(|r| r.satisfied(profile)),
        }
    }

    /// The failed atoms responsible for the formula being unsatisfied.
    /// Empty when it is satisfied.
    pub fn missing(&self, profile: &InterpretationProfile) -> BTreeSet<AssumptionId> {
        if self.satisfied(profile) {
            return BTreeSet::new();
        }
        match self {
            Requirement::Atom(a) => BTreeSet::from([*a]),
            Requirement::All(rs) | Requirement::Any(rs) => {
                rs.iter().flat_map(|r| r.missing(profile)).collect()
            }
        }
    }

    pub fn atoms(&self) -> BTreeSet<AssumptionId> {
        match self {
            Requirement::Atom(a) => BTreeSet::from([*a]),
            Requirement::All(rs) | Requirement::Any(rs) => {
                rs.iter().flat_map(Requirement::atoms).collect()
            }
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, rs: &[Requirement], sep: &str| -> fmt::Result {
            for (i, r) in rs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match r {
                    Requirement::Atom(_) => write!(f, "{r}")?,
                    _ => write!(f, "({r})")?,
                }
            }
            Ok(())
        };
        match self {
            Requirement::Atom(a) => write!(f, "{a}"),
            Requirement::All(rs) if rs.is_empty() => f.write_str("none"),
            Requirement::All(rs) => join(f, rs, " ∧ "),
            Requirement::Any(rs) => join(f, rs, " ∨ "),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Relation {
    Eq,
    Ne,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Proposition {
    Outcome {
        variable: Variable,
        relation: Relation,
        value: Label,
    },
    /// A system is in a described state, e.g. `S` in `|→⟩`.
    InState {
        system: String,
        state: String,
    },
    Certain {
        agent: AgentId,
        epoch: Epoch,
        body: Box<Proposition>,
    },
    Negation(Box<Proposition>),
    /// The Born probability of a joint outcome.
    QuantumPossible {
        joint: Vec<(Variable, Label)>,
        probability: Fraction,
    },
}

impl Proposition {
    pub fn outcome(variable: Variable, value: Label) -> Self {
        Proposition::Outcome {
            variable,
            relation: Relation::Eq,
            value,
        }
    }

    pub fn outcome_ne(variable: Variable, value: Label) -> Self {
        Proposition::Outcome {
            variable,
            relation: Relation::Ne,
            value,
        }
    }

    pub fn certain(agent: AgentId, epoch: Epoch, body: Proposition) -> Self {
        Proposition::Certain {
            agent,
            epoch,
            body: Box::new(body),
        }
    }

    pub fn in_state(system: &str, state: &str) -> Self {
        Proposition::InState {
            system: system.to_string(),
            state: state.to_string(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Proposition::Certain { body, .. } | Proposition::Negation(body) => 1 + body.depth(),
            _ => 0,
        }
    }

    /// Whether every epoch mentioned lies on the canonical clock.
    pub fn epochs_valid(&self) -> bool {
        match self {
            Proposition::Certain { epoch, body, .. } => epoch.is_valid() && body.epochs_valid(),
            Proposition::Negation(body) => body.epochs_valid(),
            _ => true,
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::Outcome {
                variable,
                relation,
                value,
            } => {
                let op = if *relation == Relation::Eq {
                    "="
                } else {
                    "≠"
                };
                write!(f, "{variable} {op} {value}")
            }
            Proposition::InState { system, state } => write!(f, "{system} in {state}"),
            Proposition::Certain { agent, epoch, body } => {
                write!(f, "{agent} certain at t={epoch} that [{body}]")
            }
            Proposition::Negation(body) => write!(f, "not [{body}]"),
            Proposition::QuantumPossible { joint, probability } => {
                let parts: Vec<String> = joint.iter().map(|(v, l)| format!("{v}={l}")).collect();
                write!(
                    f,
                    "P({}) = {}",
                    parts.join(", "),
                    exact::format_fraction(*probability)
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StepId(u8);

impl StepId {
    pub fn new(n: u8) -> Option<StepId> {
        (1..=12).contains(&n).then_some(StepId(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn parse(text: &str) -> Option<StepId> {
        text.trim()
            .strip_prefix("FR")
            .and_then(|n| n.parse().ok())
            .and_then(StepId::new)
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FR{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Step {
    pub id: StepId,
    /// Hypotheses the step introduces itself.
    pub suppositions: Vec<Proposition>,
    pub premises: Vec<Proposition>,
    pub conclusion: Proposition,
    pub requires: Requirement,
    /// Assumptions discussed alongside the step but not required by it.
    pub related: Vec<AssumptionId>,
    pub quantum_facts: Vec<QuantumFact>,
}

/// The twelve steps, in order.
pub fn build_argument() -> Vec<Step> {
    use AgentId::{F1, F2, W1, W2};
    use AssumptionId as A;
    use Label::{Fail, Head, Minus, Ok, Plus, Tail};
    use Proposition as P;
    use Variable::{R, W1 as VW1, W2 as VW2, Z};

    let atom = Requirement::Atom;
    let c_and_l_or_m = || {
        Requirement::All(vec![
            atom(A::C),
            Requirement::Any(vec![atom(A::L), atom(A::M)]),
        ])
    };
    let t15 = Epoch::after_time(1);
    let t25 = Epoch::after_time(2);
    let t35 = Epoch::after_time(3);

    let r_tail = P::outcome(R, Tail);
    let z_plus = P::outcome(Z, Plus);
    let w1_ok = P::outcome(VW1, Ok);
    let w2_fail = P::outcome(VW2, Fail);

    let fr1 = P::certain(F1, t15, P::in_state("S", "|→⟩"));
    let fr2 = P::certain(F1, t15, P::in_state("F2S", "a state orthogonal to |ok⟩"));
    let fr3 = P::certain(F1, t15, w2_fail.clone());
    let fr4 = P::certain(F2, t25, P::outcome_ne(R, Head));
    let fr5 = P::certain(F2, t25, r_tail.clone());
    let fr6 = P::certain(F2, t25, fr3.clone());
    let fr7 = P::certain(F2, t25, w2_fail.clone());
    let fr8 = P::QuantumPossible {
        joint: vec![(VW1, Ok), (Z, Minus)],
        probability: Fraction::from_integer(0),
    };
    let fr9 = P::certain(W1, t35, fr7.clone());
    let fr10 = P::certain(W1, t35, w2_fail.clone());
    let fr11 = P::certain(W2, t35, w2_fail.clone());
    let fr12 = P::QuantumPossible {
        joint: vec![(VW1, Ok), (VW2, Ok)],
        probability: Fraction::new(1, 12),
    };

    let step = |n: u8,
                suppositions: Vec<Proposition>,
                premises: Vec<Proposition>,
                conclusion: &Proposition,
                requires: Requirement,
                quantum_facts: Vec<QuantumFact>| Step {
        id: StepId(n),
        suppositions,
        premises,
        conclusion: conclusion.clone(),
        requires,
        related: Vec::new(),
        quantum_facts,
    };

    let mut steps = vec![
        step(
            1,
            vec![r_tail.clone()],
            vec![r_tail],
            &fr1,
            atom(A::P),
            vec![],
        ),
        step(
            2,
            vec![],
            vec![fr1],
            &fr2,
            atom(A::U),
            vec![QuantumFact::TailBranchNeverOk],
        ),
        step(3, vec![], vec![fr2], &fr3, atom(A::Q), vec![]),
        step(
            4,
            vec![z_plus.clone()],
            vec![z_plus],
            &fr4,
            atom(A::Q),
            vec![QuantumFact::HeadBranchNeverPlus],
        ),
        step(5, vec![], vec![fr4], &fr5, atom(A::T), vec![]),
        step(6, vec![], vec![fr5, fr3], &fr6, Requirement::none(), vec![]),
        step(7, vec![], vec![fr6], &fr7, c_and_l_or_m(), vec![]),
        step(
            8,
            vec![],
            vec![],
            &fr8,
            Requirement::none(),
            vec![QuantumFact::OkMinusImpossible],
        ),
        step(
            9,
            vec![w1_ok.clone()],
            vec![w1_ok, fr8, fr7],
            &fr9,
            atom(A::Q),
            vec![],
        ),
        step(10, vec![], vec![fr9], &fr10, c_and_l_or_m(), vec![]),
        step(11, vec![], vec![fr10], &fr11, atom(A::C), vec![]),
        step(
            12,
            vec![],
            vec![fr11],
            &fr12,
            Requirement::All(vec![atom(A::Q), atom(A::S)]),
            vec![QuantumFact::OkOkProbability],
        ),
    ];
    steps[4].related.push(A::Sbar);
    steps
}

/// The two propositions that cannot both be held.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clash {
    /// `Certain(W2, w2 ≠ ok)`, obtained from `Certain(W2, w2 = fail)` by S.
    pub certain_not: Proposition,
    pub possible: Proposition,
}

impl fmt::Display for Clash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} versus {}", self.certain_not, self.possible)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Verdict {
    ContradictionDerived {
        trace: Vec<StepId>,
        clash: Clash,
    },
    BlockedAt {
        step: StepId,
        missing: BTreeSet<AssumptionId>,
        trace: Vec<StepId>,
    },
}

impl Verdict {
    pub fn trace(&self) -> &[StepId] {
        match self {
            Verdict::ContradictionDerived { trace, .. } | Verdict::BlockedAt { trace, .. } => trace,
        }
    }

    pub fn blocked_step(&self) -> Option<StepId> {
        match self {
            Verdict::BlockedAt { step, .. } => Some(*step),
            Verdict::ContradictionDerived { .. } => None,
        }
    }

    pub fn is_contradiction(&self) -> bool {
        matches!(self, Verdict::ContradictionDerived { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::ContradictionDerived { trace, .. } => {
                let first = trace.first().map(ToString::to_string).unwrap_or_default();
                let last = trace.last().map(ToString::to_string).unwrap_or_default();
                write!(f, "ContradictionDerived ({first}..{last})")
            }
            Verdict::BlockedAt { step, missing, .. } => {
                let names: Vec<&str> = missing.iter().map(|a| a.token()).collect();
                write!(f, "BlockedAt {step} (missing {})", names.join(", "))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundingError {
    #[error("quantum facts not verified: {}", .0.iter().map(|c| c.fact.statement()).collect::<Vec<_>>().join("; "))]
    FactsFailed(Vec<FactCheck>),
}

/// Evidence that every quantum fact the argument uses held on some protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct Grounding {
    checks: Vec<FactCheck>,
}

impl Grounding {
    pub fn checks(&self) -> &[FactCheck] {
        &self.checks
    }
}

/// Verifies every quantum fact the argument uses on `protocol`.
pub fn ground(protocol: &Protocol<f64>) -> Result<Grounding, GroundingError> {
    let checks: Vec<FactCheck> = QuantumFact::ALL.iter().map(|f| f.check(protocol)).collect();
    let failed: Vec<FactCheck> = checks.iter().filter(|c| !c.passed).cloned().collect();
    if failed.is_empty() {
        Ok(Grounding { checks })
    } else {
        Err(GroundingError::FactsFailed(failed))
    }
}

/// Fires the argument under `profile`, after grounding its quantum facts on `protocol`.
pub fn check(
    profile: &InterpretationProfile,
    protocol: &Protocol<f64>,
) -> Result<Verdict, GroundingError> {
    Ok(check_grounded(profile, &ground(protocol)?))
}

/// As [`check`], reusing facts already verified.
pub fn check_grounded(profile: &InterpretationProfile, _grounding: &Grounding) -> Verdict {
    derive(profile, &build_argument())
}

fn derive(profile: &InterpretationProfile, steps: &[Step]) -> Verdict {
    let mut derived: Vec<Proposition> = Vec::new();
    let mut trace = Vec::new();
    for step in steps {
        let mut available = derived.clone();
        available.extend(step.suppositions.iter().cloned());
        let premises_ok = step.premises.iter().all(|p| available.contains(p));
        if !premises_ok || !step.requires.satisfied(profile) {
            return Verdict::BlockedAt {
                step: step.id,
                missing: step.requires.missing(profile),
                trace,
            };
        }
        derived = available;
        derived.push(step.conclusion.clone());
        trace.push(step.id);
    }
    let premises = steps.last().map_or(&[][..], |s| s.premises.as_slice());
    match contradiction(premises, &derived) {
        Some(clash) => Verdict::ContradictionDerived { trace, clash },
        None => Verdict::BlockedAt {
            step: steps.last().map_or(StepId(12), |s| s.id),
            missing: BTreeSet::new(),
            trace,
        },
    }
}

/// S turns a certainty of one outcome into a certainty of not-the-other; a
/// derived positive joint probability involving the other outcome rules that out.
fn contradiction(certainties: &[Proposition], derived: &[Proposition]) -> Option<Clash> {
    for p in certainties {
        let Proposition::Certain { agent, epoch, body } = p else {
            continue;
        };
        let Proposition::Outcome {
            variable,
            relation: Relation::Eq,
            value,
        } = body.as_ref()
        else {
            continue;
        };
        for other in variable.outcomes().into_iter().filter(|o| o != value) {
            let hit = derived.iter().find(|q| match q {
                Proposition::QuantumPossible { joint, probability } => {
                    *probability > Fraction::from_integer(0) && joint.contains(&(*variable, other))
                }
                _ => false,
            });
            if let Some(possible) = hit {
                return Some(Clash {
                    certain_not: Proposition::certain(
                        *agent,
                        *epoch,
                        Proposition::outcome_ne(*variable, other),
                    ),
                    possible: possible.clone(),
                });
            }
        }
    }
    None
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("{0} is not a step of the argument")]
    UnknownStep(StepId),
    #[error("{step} uses a premise not derived before it: {premise}")]
    UnsupportedPremise { step: StepId, premise: String },
    #[error("{step} fired although {requires} is not granted")]
    UngrantedAssumption { step: StepId, requires: String },
    #[error("{0} fired twice or out of order")]
    OutOfOrder(StepId),
    #[error("verdict blocks at {step} but {missing} is not a failed assumption of that step")]
    BadMissingSet { step: StepId, missing: String },
}

/// Checks that every fired step's premises appear earlier in the trace and
/// that each block is justified by the profile.
pub fn verify_verdict(
    verdict: &Verdict,
    profile: &InterpretationProfile,
) -> Result<(), TraceError> {
    let steps = build_argument();
    let find = |id: StepId| {
        steps
            .iter()
            .find(|s| s.id == id)
            .ok_or(TraceError::UnknownStep(id))
    };
    let mut derived: Vec<Proposition> = Vec::new();
    let mut last: Option<StepId> = None;
    for &id in verdict.trace() {
        if last.is_some_and(|l| l >= id) {
            return Err(TraceError::OutOfOrder(id));
        }
        last = Some(id);
        let step = find(id)?;
        derived.extend(step.suppositions.iter().cloned());
        if let Some(p) = step.premises.iter().find(|p| !derived.contains(p)) {
            return Err(TraceError::UnsupportedPremise {
                step: id,
                premise: p.to_string(),
            });
        }
        if !step.requires.satisfied(profile) {
            return Err(TraceError::UngrantedAssumption {
                step: id,
                requires: step.requires.to_string(),
            });
        }
        derived.push(step.conclusion.clone());
    }
    if let Verdict::BlockedAt { step, missing, .. } = verdict {
        let s = find(*step)?;
        let atoms = s.requires.atoms();
        let justified = missing
            .iter()
            .all(|a| atoms.contains(a) && !profile.holds(*a));
        if !justified {
            let names: Vec<&str> = missing.iter().map(|a| a.token()).collect();
            return Err(TraceError::BadMissingSet {
                step: *step,
                missing: names.join(", "),
            });
        }
    }
    Ok(())
}

/// `¬Q ∨ ¬C ∨ ¬S ∨ ¬P ∨ ¬U ∨ ¬T ∨ (¬L ∧ ¬M)`.
pub fn escape_rule(profile: &InterpretationProfile) -> bool {
    use AssumptionId as A;
    [A::Q, A::C, A::S, A::P, A::U, A::T]
        .into_iter()
        .any(|a| !profile.holds(a))
        || (!profile.holds(A::L) && !profile.holds(A::M))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub name: String,
    pub escape_rule: bool,
    pub blocked: bool,
    pub claims_escape: bool,
    pub verdict: String,
}

impl AuditRow {
    /// The rule, the derivation and the interpretation's own claim disagree.
    pub fn discrepancy(&self) -> bool {
        self.escape_rule != self.blocked || self.escape_rule != self.claims_escape
    }
}

/// Cross-checks the escape rule against the derivation for each shipped profile.
pub fn escape_rule_audit() -> Vec<AuditRow> {
    let steps = build_argument();
    profiles::shipped()
        .into_iter()
        .map(|p| {
            let verdict = derive(&p, &steps);
            AuditRow {
                name: p.name().to_string(),
                escape_rule: escape_rule(&p),
                blocked: !verdict.is_contradiction(),
                claims_escape: p.claims_escape(),
                verdict: verdict.to_string(),
            }
        })
        .collect()
}
