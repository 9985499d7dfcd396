//! Consistent-histories probabilities over projector sequences.
//!
//! A history's chain operator applies every stage unitary in order and, after
//! the stages where the history has an event, that event's projector. Stages
//! with no event contribute plain unitary evolution, so a history that is
//! silent about a variable is not the same as a history summed over it.
//!
//! # Text syntax
//!
//! ```text
//! history  := name ":" [ event { "," event } ]
//! name     := 1*( ALPHA / DIGIT / "_" / "-" / "'" )
//! event    := *WS variable "@" stage "=" label *WS
//! variable := "r" / "z" / "w1" / "w2"
//! stage    := "prep" / "obs0" / "prep1" / "obs2" / "meas3" / "meas4"
//! label    := "0" / "head" / "tail" / "+" / "-" / "ok" / "fail"
//! WS       := " " / TAB
//! ```
//!
//! An event `v@s=l` is the projector onto the memory of `v`'s recorder holding
//! `l`, applied at the epoch right after stage `s`. The label must be one of
//! that recorder's memory states (`0` is the ready state). Events must appear
//! in strictly increasing stage order.

use std::fmt;

use thiserror::Error;

use crate::linalg::{LinalgError, Projector, StateVector};
use crate::protocol::{Label, Protocol, ProtocolError, StageId, Variable};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("history {0}: event epochs must be strictly increasing")]
    NonIncreasingEpochs(String),
    #[error("history {0}: projector is not on the global space")]
    MalformedProjector(String),
    #[error("empty history family")]
    EmptyFamily,
    #[error("cannot parse history {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// An event: what is asserted and the projector that asserts it.
#[derive(Clone, Debug)]
pub struct Event<T> {
    pub stage: StageId,
    pub projector: Projector<T>,
    /// The record assertion this projector implements, when it came from one.
    pub record: Option<(Variable, Label)>,
}

impl<T> Event<T> {
    fn describe(&self) -> String {
        match self.record {
            Some((v, l)) => format!("{v}@{}={l}", self.stage.token()),
            None => format!("<projector>@{}", self.stage.token()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct History<T> {
    name: String,
    events: Vec<Event<T>>,
}

impl<T: Real> History<T> {
    pub fn new(name: impl Into<String>, events: Vec<Event<T>>) -> Result<Self, HistoryError> {
        let name = name.into();
        if events.windows(2).any(|w| w[0].stage >= w[1].stage) {
            return Err(HistoryError::NonIncreasingEpochs(name));
        }
        let global = crate::protocol::global_space();
        if events.iter().any(|e| e.projector.space() != &global) {
            return Err(HistoryError::MalformedProjector(name));
        }
        Ok(Self { name, events })
    }

    /// History of record assertions `(variable, stage, label)`.
    pub fn from_records(
        protocol: &Protocol<T>,
        name: impl Into<String>,
        records: &[(Variable, StageId, Label)],
    ) -> Result<Self, HistoryError> {
        let events = records
            .iter()
            .map(|&(variable, stage, label)| {
                Ok(Event {
                    stage,
                    projector: protocol.record_projector(variable.recorder(), label)?,
                    record: Some((variable, label)),
                })
            })
            .collect::<Result<Vec<_>, HistoryError>>()?;
        Self::new(name, events)
    }

    pub fn parse(protocol: &Protocol<T>, text: &str) -> Result<Self, HistoryError> {
        let fail = |reason: &str| HistoryError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (name, body) = text
            .split_once(':')
            .ok_or_else(|| fail("missing ':' after name"))?;
        let valid_name = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '\''));
        if !valid_name {
            return Err(fail("invalid history name"));
        }
        let mut records = Vec::new();
        if !body.trim_matches([' ', '\t']).is_empty() {
            for item in body.split(',') {
                let item = item.trim_matches([' ', '\t']);
                let (variable, rest) = item
                    .split_once('@')
                    .ok_or_else(|| fail("event missing '@'"))?;
                let (stage, label) = rest
                    .split_once('=')
                    .ok_or_else(|| fail("event missing '='"))?;
                let variable =
                    Variable::from_token(variable).ok_or_else(|| fail("unknown variable"))?;
                let stage = StageId::from_token(stage).ok_or_else(|| fail("unknown stage"))?;
                let label = Label::from_token(label).ok_or_else(|| fail("unknown label"))?;
                if !variable.recorder().memory_labels().contains(&label) {
                    return Err(fail(
                        "label is not a memory state of the variable's recorder",
                    ));
                }
                records.push((variable, stage, label));
            }
        }
        Self::from_records(protocol, name, &records)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn stages(&self) -> Vec<StageId> {
        self.events.iter().map(|e| e.stage).collect()
    }

    /// `K(h)|Ψ0⟩` evolved through every stage up to and including `until`.
    pub fn chain_state(
        &self,
        protocol: &Protocol<T>,
        until: StageId,
    ) -> Result<StateVector<T>, HistoryError> {
        let mut state = protocol.initial_state();
        for stage in StageId::ALL.into_iter().filter(|&s| s <= until) {
            state = protocol.stage_unitary(stage)?.apply_unchecked(&state)?;
            for event in self.events.iter().filter(|e| e.stage == stage) {
                state = event.projector.project(&state)?;
            }
        }
        Ok(state)
    }
}

impl<T> fmt::Display for History<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name)?;
        for (i, e) in self.events.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{}", e.describe())?;
        }
        Ok(())
    }
}

/// `‖P_n U_n ⋯ P_1 U_1 |Ψ0⟩‖²`.
pub fn history_probability<T: Real>(
    protocol: &Protocol<T>,
    history: &History<T>,
) -> Result<T, HistoryError> {
    Ok(history.chain_state(protocol, StageId::Meas4)?.norm_sqr())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport<T> {
    pub first: String,
    pub second: String,
    /// `|⟨Ψ|K(h)† K(h')|Ψ⟩|`.
    pub off_diagonal: T,
    pub shared_epochs: bool,
    /// Events asserted by one history at stages where the other is silent.
    pub unobserved: Vec<String>,
}

impl<T: Real> PairReport<T> {
    pub fn interferes(&self) -> bool {
        self.off_diagonal > T::consistency_tol()
    }

    /// Whether the two histories may be considered together.
    pub fn consistent(&self) -> bool {
        self.shared_epochs && !self.interferes()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    pub probabilities: Vec<(String, T)>,
    pub pairs: Vec<PairReport<T>>,
}

impl<T: Real> ConsistencyReport<T> {
    pub fn is_consistent(&self) -> bool {
        self.pairs.iter().all(PairReport::consistent)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &PairReport<T>> {
        self.pairs.iter().filter(|p| !p.consistent())
    }
}

pub fn chain_consistency_report<T: Real>(
    protocol: &Protocol<T>,
    family: &[History<T>],
) -> Result<ConsistencyReport<T>, HistoryError> {
    if family.is_empty() {
        return Err(HistoryError::EmptyFamily);
    }
    let states = family
        .iter()
        .map(|h| h.chain_state(protocol, StageId::Meas4))
        .collect::<Result<Vec<_>, _>>()?;
    let probabilities = family
        .iter()
        .zip(&states)
        .map(|(h, s)| (h.name.clone(), s.norm_sqr()))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let (a, b) = (&family[i], &family[j]);
            let silent = |x: &History<T>, y: &History<T>| -> Vec<String> {
                x.events
                    .iter()
                    .filter(|e| !y.stages().contains(&e.stage))
                    .map(|e| format!("{} asserts {}, {} is silent", x.name, e.describe(), y.name))
                    .collect()
            };
            let mut unobserved = silent(a, b);
            unobserved.extend(silent(b, a));
            pairs.push(PairReport {
                first: a.name.clone(),
                second: b.name.clone(),
                off_diagonal: states[i].inner(&states[j])?.norm(),
                shared_epochs: a.stages() == b.stages(),
                unobserved,
            });
        }
    }
    Ok(ConsistencyReport {
        probabilities,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn protocol() -> Protocol<f64> {
        Protocol::default()
    }

    #[test]
    fn empty_history_has_probability_one() {
        let h = History::parse(&protocol(), "empty:").unwrap();
        assert!((history_probability(&protocol(), &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_round_trips_through_display() {
        let text = "h1: r@obs0=tail, z@obs2=+, w1@meas3=ok, w2@meas4=ok";
        let h = History::parse(&protocol(), text).unwrap();
        assert_eq!(h.to_string(), text);
        assert_eq!(h.events().len(), 4);
    }

    #[test]
    fn parse_errors() {
        let p = protocol();
        for bad in [
            "no colon",
            ": r@obs0=tail",
            "h 1: r@obs0=tail",
            "h: r@obs0",
            "h: x@obs0=tail",
            "h: r@later=tail",
            "h: r@obs0=tails",
            "h: r@obs0=ok",
            "h: r@obs0=tail,",
        ] {
            assert!(
                matches!(History::parse(&p, bad), Err(HistoryError::Parse { .. })),
                "{bad}"
            );
        }
        assert!(matches!(
            History::parse(&p, "h: w1@meas3=ok, r@obs0=tail"),
            Err(HistoryError::NonIncreasingEpochs(_))
        ));
    }

    #[test]
    fn single_history_family_is_consistent() {
        let p = protocol();
        let h = History::parse(&p, "h: w1@meas3=ok").unwrap();
        let report = chain_consistency_report(&p, &[h]).unwrap();
        assert!(report.pairs.is_empty());
        assert!(report.is_consistent());
    }

    #[test]
    fn empty_family_is_an_error() {
        assert_eq!(
            chain_consistency_report::<f64>(&protocol(), &[]),
            Err(HistoryError::EmptyFamily)
        );
    }
}
