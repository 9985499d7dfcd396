//! Outcome probabilities extracted from pilot states.
//!
//! Two collapse policies produce the joint distribution over `(r, z, w1, w2)`:
//!
//! * [`CollapsePolicy::SequentialProjection`] runs the stages in order and, at
//!   each para-experimenter measurement (W1, W2), projects onto the outcome
//!   subspace and renormalises, chaining conditional probabilities. The
//!   friends' measurements stay unitary records inside their labs, and their
//!   records are read out by projection after the last stage.
//! * [`CollapsePolicy::NoCollapseMarginal`] reads the squared weights of record
//!   configurations straight from the final pilot state.
//!
//! The records of W1 and W2 are never touched again after they are made and
//! live on disjoint factors, so both policies give the same joint.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, StateVector};
use crate::protocol::{
    AgentId, Label, MeasurementSpec, Protocol, ProtocolError, StageId, Variable,
};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BornError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state is not normalised (squared norm {0})")]
    Unnormalized(f64),
    #[error("probabilities must be nonnegative and sum to 1 (sum {0})")]
    InvalidDistribution(f64),
    #[error("joint event measures overlapping subsystems")]
    OverlappingTargets,
    #[error("stage order must contain every stage once, with only W1/W2 swappable")]
    InvalidOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CollapsePolicy {
    SequentialProjection,
    NoCollapseMarginal,
}

impl CollapsePolicy {
    /// Whether a measurement at `stage` is collapsed under this policy.
    pub fn collapses(self, stage: StageId) -> bool {
        self == CollapsePolicy::SequentialProjection
            && matches!(stage, StageId::Meas3 | StageId::Meas4)
    }
}

/// Probabilities of joint label assignments to a fixed list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    variables: Vec<Variable>,
    outcomes: Vec<(Vec<Label>, T)>,
}

impl<T: Real> Distribution<T> {
    pub fn new(
        variables: Vec<Variable>,
        outcomes: Vec<(Vec<Label>, T)>,
    ) -> Result<Self, BornError> {
        let total = outcomes.iter().fold(T::zero(), |acc, (_, p)| acc + *p);
        let tol = T::exact_tol() * T::lit(10.0);
        let negative = outcomes.iter().any(|(_, p)| *p < -tol || !p.is_finite());
        let wrong_arity = outcomes.iter().any(|(l, _)| l.len() != variables.len());
        if negative || wrong_arity || (total - T::one()).abs() > tol {
            return Err(BornError::InvalidDistribution(total.to_f64_lossy()));
        }
        Ok(Self {
            variables,
            outcomes,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn outcomes(&self) -> &[(Vec<Label>, T)] {
        &self.outcomes
    }

    pub fn total(&self) -> T {
        self.outcomes.iter().fold(T::zero(), |acc, (_, p)| acc + *p)
    }

    fn matches(&self, labels: &[Label], event: &[(Variable, Label)]) -> bool {
        event.iter().all(|(var, label)| {
            self.variables
                .iter()
                .position(|v| v == var)
                .is_some_and(|i| labels[i] == *label)
        })
    }

    /// Probability that every `(variable, label)` pair in `event` holds.
    pub fn probability(&self, event: &[(Variable, Label)]) -> T {
        self.outcomes
            .iter()
            .filter(|(labels, _)| self.matches(labels, event))
            .fold(T::zero(), |acc, (_, p)| acc + *p)
    }

    /// `P(event | given)`, undefined when `given` is impossible.
    pub fn conditional(
        &self,
        event: &[(Variable, Label)],
        given: &[(Variable, Label)],
    ) -> Option<T> {
        let denominator = self.probability(given);
        if denominator < T::negligible() {
            return None;
        }
        let mut both = event.to_vec();
        both.extend_from_slice(given);
        Some(self.probability(&both) / denominator)
    }

    pub fn marginal(&self, keep: &[Variable]) -> Distribution<T> {
        let positions: Vec<usize> = keep
            .iter()
            .map(|k| {
                self.variables
                    .iter()
                    .position(|v| v == k)
                    .expect("variable present")
            })
            .collect();
        let mut outcomes: Vec<(Vec<Label>, T)> = Vec::new();
        for (labels, p) in &self.outcomes {
            let key: Vec<Label> = positions.iter().map(|&i| labels[i]).collect();
            match outcomes.iter_mut().find(|(k, _)| *k == key) {
                Some((_, q)) => *q += *p,
                None => outcomes.push((key, *p)),
            }
        }
        Distribution {
            variables: keep.to_vec(),
            outcomes,
        }
    }

    /// Largest absolute probability difference over the union of outcomes.
    pub fn max_deviation(&self, other: &Distribution<T>) -> T {
        let mut worst = T::zero();
        for (labels, p) in &self.outcomes {
            let event: Vec<(Variable, Label)> = self
                .variables
                .iter()
                .copied()
                .zip(labels.iter().copied())
                .collect();
            worst = worst.max((*p - other.probability(&event)).abs());
        }
        for (labels, q) in &other.outcomes {
            let event: Vec<(Variable, Label)> = other
                .variables
                .iter()
                .copied()
                .zip(labels.iter().copied())
                .collect();
            worst = worst.max((*q - self.probability(&event)).abs());
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Certainty<T> {
    Certain,
    Impossible,
    Uncertain(T),
}

fn require_normalized<T: Real>(state: &StateVector<T>) -> Result<(), BornError> {
    if !state.is_normalized() {
        return Err(BornError::Unnormalized(state.norm_sqr().to_f64_lossy()));
    }
    Ok(())
}

pub fn outcome_distribution<T: Real>(
    state: &StateVector<T>,
    spec: &MeasurementSpec<T>,
) -> Result<Distribution<T>, BornError> {
    require_normalized(state)?;
    let mut outcomes = Vec::new();
    for label in spec.labels() {
        let weight = spec.global_projector(label)?.weight(state)?;
        outcomes.push((vec![label], weight));
    }
    Distribution::new(vec![spec.variable], outcomes)
}

/// Probability that several measurements on disjoint targets all give the stated labels.
pub fn joint_outcome_probability<T: Real>(
    state: &StateVector<T>,
    events: &[(&MeasurementSpec<T>, Label)],
) -> Result<T, BornError> {
    require_normalized(state)?;
    for (i, (a, _)) in events.iter().enumerate() {
        for (b, _) in &events[i + 1..] {
            if a.targets.iter().any(|t| b.targets.contains(t)) {
                return Err(BornError::OverlappingTargets);
            }
        }
    }
    let mut v = state.clone();
    for (spec, label) in events {
        v = spec.global_projector(*label)?.project(&v)?;
    }
    Ok(v.norm_sqr())
}

fn classify<T: Real>(p: T) -> Certainty<T> {
    if (p - T::one()).abs() <= T::exact_tol() {
        Certainty::Certain
    } else if p.abs() <= T::exact_tol() {
        Certainty::Impossible
    } else {
        Certainty::Uncertain(p)
    }
}

pub fn certainty_check<T: Real>(
    state: &StateVector<T>,
    spec: &MeasurementSpec<T>,
    label: Label,
) -> Result<Certainty<T>, BornError> {
    certainty_check_joint(state, &[(spec, label)])
}

pub fn certainty_check_joint<T: Real>(
    state: &StateVector<T>,
    events: &[(&MeasurementSpec<T>, Label)],
) -> Result<Certainty<T>, BornError> {
    Ok(classify(joint_outcome_probability(state, events)?))
}

/// Distribution of the listed agents' memories (including `0`) in `state`.
pub fn record_distribution<T: Real>(
    protocol: &Protocol<T>,
    state: &StateVector<T>,
    agents: &[AgentId],
) -> Result<Distribution<T>, BornError> {
    require_normalized(state)?;
    let mut outcomes = Vec::new();
    let mut assignments: Vec<Vec<Label>> = vec![Vec::new()];
    for agent in agents {
        assignments = assignments
            .into_iter()
            .flat_map(|prefix| {
                agent.memory_labels().into_iter().map(move |l| {
                    let mut next = prefix.clone();
                    next.push(l);
                    next
                })
            })
            .collect();
    }
    for labels in assignments {
        let mut v = state.clone();
        for (agent, label) in agents.iter().zip(&labels) {
            v = protocol.record_projector(*agent, *label)?.project(&v)?;
        }
        outcomes.push((labels, v.norm_sqr()));
    }
    Distribution::new(agents.iter().map(|a| a.variable()).collect(), outcomes)
}

const JOINT: [Variable; 4] = [Variable::R, Variable::Z, Variable::W1, Variable::W2];

fn joint_assignments() -> Vec<Vec<Label>> {
    let mut out = Vec::with_capacity(16);
    for r in Variable::R.outcomes() {
        for z in Variable::Z.outcomes() {
            for w1 in Variable::W1.outcomes() {
                for w2 in Variable::W2.outcomes() {
                    out.push(vec![r, z, w1, w2]);
                }
            }
        }
    }
    out
}

fn check_order(order: &[StageId]) -> Result<(), BornError> {
    let canonical = StageId::ALL.to_vec();
    let mut swapped = canonical.clone();
    swapped.swap(4, 5);
    if order != canonical.as_slice() && order != swapped.as_slice() {
        return Err(BornError::InvalidOrder);
    }
    Ok(())
}

/// Joint distribution over `(r, z, w1, w2)` in the canonical stage order.
pub fn joint_distribution<T: Real>(
    protocol: &Protocol<T>,
    policy: CollapsePolicy,
) -> Result<Distribution<T>, BornError> {
    joint_distribution_in_order(protocol, policy, &StageId::ALL)
}

/// As [`joint_distribution`], optionally with Meas3 and Meas4 swapped.
pub fn joint_distribution_in_order<T: Real>(
    protocol: &Protocol<T>,
    policy: CollapsePolicy,
    order: &[StageId],
) -> Result<Distribution<T>, BornError> {
    check_order(order)?;
    match policy {
        CollapsePolicy::NoCollapseMarginal => final_record_weights(protocol, order),
        CollapsePolicy::SequentialProjection => sequential_projection(protocol, order),
    }
}

fn final_record_weights<T: Real>(
    protocol: &Protocol<T>,
    order: &[StageId],
) -> Result<Distribution<T>, BornError> {
    let last = protocol.run(order)?;
    let mut outcomes = Vec::with_capacity(16);
    for labels in joint_assignments() {
        let mut v = last.clone();
        for (var, label) in JOINT.iter().zip(&labels) {
            v = protocol
                .record_projector(var.recorder(), *label)?
                .project(&v)?;
        }
        outcomes.push((labels, v.norm_sqr()));
    }
    Distribution::new(JOINT.to_vec(), outcomes)
}

struct Branch<T> {
    labels: Vec<(Variable, Label)>,
    probability: T,
    state: StateVector<T>,
}

/// Splits every branch over `outcomes`, keeping the normalised projections.
fn split<T: Real, F>(
    branches: Vec<Branch<T>>,
    variable: Variable,
    mut project: F,
) -> Result<Vec<Branch<T>>, BornError>
where
    F: FnMut(Label, &StateVector<T>) -> Result<StateVector<T>, BornError>,
{
    let mut next = Vec::new();
    for branch in branches {
        for label in variable.outcomes() {
            let component = project(label, &branch.state)?;
            let weight = component.norm_sqr();
            if weight < T::negligible() {
                continue;
            }
            let mut labels = branch.labels.clone();
            labels.push((variable, label));
            next.push(Branch {
                labels,
                probability: branch.probability * weight,
                state: component.normalized()?,
            });
        }
    }
    Ok(next)
}

fn sequential_projection<T: Real>(
    protocol: &Protocol<T>,
    order: &[StageId],
) -> Result<Distribution<T>, BornError> {
    let policy = CollapsePolicy::SequentialProjection;
    let mut branches = vec![Branch {
        labels: Vec::new(),
        probability: T::one(),
        state: protocol.initial_state(),
    }];
    for &stage in order {
        let unitary = protocol.stage_unitary(stage)?;
        if policy.collapses(stage) {
            let variable = stage.measurement().expect("measurement stage");
            let spec = protocol.measurement_spec(variable)?;
            branches = split(branches, variable, |label, state| {
                Ok(spec.global_projector(label)?.project(state)?)
            })?;
        }
        for branch in &mut branches {
            branch.state = unitary.apply(&branch.state)?;
        }
    }
    for variable in [Variable::R, Variable::Z] {
        branches = split(branches, variable, |label, state| {
            Ok(protocol
                .record_projector(variable.recorder(), label)?
                .project(state)?)
        })?;
    }
    let outcomes = joint_assignments()
        .into_iter()
        .map(|labels| {
            let p = branches
                .iter()
                .filter(|b| {
                    JOINT
                        .iter()
                        .zip(&labels)
                        .all(|(v, l)| b.labels.contains(&(*v, *l)))
                })
                .fold(T::zero(), |acc, b| acc + b.probability);
            (labels, p)
        })
        .collect();
    Distribution::new(JOINT.to_vec(), outcomes)
}
