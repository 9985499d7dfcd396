//! Quantum facts the argument leans on, evaluated on the simulator.

use std::fmt;

use serde::Serialize;

use crate::born::{self, BornError, CollapsePolicy};
use crate::exact::{self, Fraction};
use crate::protocol::{AgentId, Label, Protocol, StageId, Variable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum QuantumFact {
    /// After a tail, F2 and S end up orthogonal to `|ok⟩_{F2S}`: `P(w2 = ok | r = tail) = 0`.
    TailBranchNeverOk,
    /// After a head the spin is `|down⟩`: `P(z = + | r = head) = 0`.
    HeadBranchNeverPlus,
    /// The state W1 measures is orthogonal to `H_{ok,-}`: `P(w1 = ok, z = -) = 0`.
    OkMinusImpossible,
    /// `P(w1 = ok, w2 = ok) = 1/12`, under both collapse policies.
    OkOkProbability,
}

impl QuantumFact {
    pub const ALL: [QuantumFact; 4] = [
        QuantumFact::TailBranchNeverOk,
        QuantumFact::HeadBranchNeverPlus,
        QuantumFact::OkMinusImpossible,
        QuantumFact::OkOkProbability,
    ];

    pub fn expected(self) -> Fraction {
        match self {
            QuantumFact::OkOkProbability => Fraction::new(1, 12),
            _ => Fraction::from_integer(0),
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            QuantumFact::TailBranchNeverOk => "P(w2=ok | r=tail) after EWF2",
            QuantumFact::HeadBranchNeverPlus => "P(z=+ | r=head) after EWF2",
            QuantumFact::OkMinusImpossible => "P(w1=ok, z=-) on the state W1 measures",
            QuantumFact::OkOkProbability => "P(w1=ok, w2=ok), both collapse policies",
        }
    }

    /// The computed probability; for a two-policy fact, the one farther from the expected value.
    pub fn evaluate(self, protocol: &Protocol<f64>) -> Result<f64, BornError> {
        let after_obs2 = protocol.pilot_state_after(StageId::Obs2)?;
        let branch = |label: Label| -> Result<_, BornError> {
            let projected = protocol
                .record_projector(AgentId::F1, label)?
                .project(&after_obs2)?;
            Ok(projected.normalized()?)
        };
        match self {
            QuantumFact::TailBranchNeverOk => {
                let spec = protocol.measurement_spec(Variable::W2)?;
                born::joint_outcome_probability(&branch(Label::Tail)?, &[(&spec, Label::Ok)])
            }
            QuantumFact::HeadBranchNeverPlus => {
                let spec = protocol.measurement_spec(Variable::Z)?;
                born::joint_outcome_probability(&branch(Label::Head)?, &[(&spec, Label::Plus)])
            }
            QuantumFact::OkMinusImpossible => {
                let w1 = protocol.measurement_spec(Variable::W1)?;
                let z = protocol.measurement_spec(Variable::Z)?;
                born::joint_outcome_probability(
                    &after_obs2,
                    &[(&w1, Label::Ok), (&z, Label::Minus)],
                )
            }
            QuantumFact::OkOkProbability => {
                let expected = exact::to_f64(self.expected());
                let mut worst = expected;
                for policy in [
                    CollapsePolicy::SequentialProjection,
                    CollapsePolicy::NoCollapseMarginal,
                ] {
                    let joint = born::joint_distribution(protocol, policy)?;
                    let p =
                        joint.probability(&[(Variable::W1, Label::Ok), (Variable::W2, Label::Ok)]);
                    if (p - expected).abs() > (worst - expected).abs() {
                        worst = p;
                    }
                }
                Ok(worst)
            }
        }
    }

    pub fn check(self, protocol: &Protocol<f64>) -> FactCheck {
        let observed = self.evaluate(protocol);
        let expected = exact::to_f64(self.expected());
        let passed = matches!(observed, Ok(p) if (p - expected).abs() <= 1e-12);
        FactCheck {
            fact: self,
            observed: observed.map_err(|e| e.to_string()),
            passed,
        }
    }
}

impl fmt::Display for QuantumFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} = {}",
            self.statement(),
            exact::format_fraction(self.expected())
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactCheck {
    pub fact: QuantumFact,
    pub observed: Result<f64, String>,
    pub passed: bool,
}
