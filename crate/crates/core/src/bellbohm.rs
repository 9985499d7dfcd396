//! Bell-Bohm beables: definite agent memories driven by the pilot state.
//!
//! The beable is the configuration of the four memories. Across a stage the
//! memories the stage does not act on keep their values; the ones it acts on
//! jump according to the pilot state's weights on the configurations that
//! share the kept values:
//!
//! ```text
//! P(m' | m) = ‖Π_{m'} U_s Π_keep(m) Ψ‖² / ‖Π_keep(m) Ψ‖²
//! ```
//!
//! where `Π_keep(m)` fixes only the undisturbed memories. Summed over parents
//! this reproduces the Born weights of every configuration at every epoch.
//! Conditioning on the full parent configuration does not: W1's measurement
//! interferes the `f1 = head` and `f1 = tail` branches.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{LinalgError, Projector, Space, StateVector};
use crate::protocol::{AgentId, Label, Protocol, ProtocolError, StageId, StageUnitary};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BellBohmError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("configuration {config} has zero weight before {stage}")]
    Unreachable {
        config: MemoryConfig,
        stage: StageId,
    },
}

/// One memory label per agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MemoryConfig {
    pub f1: Label,
    pub f2: Label,
    pub w1: Label,
    pub w2: Label,
}

impl MemoryConfig {
    pub const READY: MemoryConfig = MemoryConfig {
        f1: Label::Ready,
        f2: Label::Ready,
        w1: Label::Ready,
        w2: Label::Ready,
    };

    pub fn new(f1: Label, f2: Label, w1: Label, w2: Label) -> Result<Self, ProtocolError> {
        let m = MemoryConfig { f1, f2, w1, w2 };
        for agent in AgentId::ALL {
            agent.memory_index(m.get(agent))?;
        }
        Ok(m)
    }

    /// All 81 configurations in basis order.
    pub fn all() -> Vec<MemoryConfig> {
        let mut out = Vec::with_capacity(81);
        for f1 in AgentId::F1.memory_labels() {
            for f2 in AgentId::F2.memory_labels() {
                for w1 in AgentId::W1.memory_labels() {
                    for w2 in AgentId::W2.memory_labels() {
                        out.push(MemoryConfig { f1, f2, w1, w2 });
                    }
                }
            }
        }
        out
    }

    pub fn get(&self, agent: AgentId) -> Label {
        match agent {
            AgentId::F1 => self.f1,
            AgentId::F2 => self.f2,
            AgentId::W1 => self.w1,
            AgentId::W2 => self.w2,
        }
    }

    fn index(&self, agent: AgentId) -> usize {
        agent
            .memory_index(self.get(agent))
            .expect("validated label")
    }
}

impl fmt::Display for MemoryConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.f1, self.f2, self.w1, self.w2)
    }
}

fn memory_projector<T: Real>(
    m: &MemoryConfig,
    agents: &[AgentId],
) -> Result<Projector<T>, LinalgError> {
    let factors: Vec<usize> = agents.iter().map(|a| a.subsystem().factor()).collect();
    let local = Space::new(vec![3; agents.len()])?;
    let digits: Vec<usize> = agents.iter().map(|&a| m.index(a)).collect();
    let ray = StateVector::basis(local.clone(), &digits)?;
    Projector::embed(
        &crate::protocol::global_space(),
        &factors,
        &Projector::new(local, vec![ray])?,
    )
}

/// Projector onto `m`'s four memory labels, identity on C and S.
pub fn config_projector<T: Real>(m: &MemoryConfig) -> Result<Projector<T>, BellBohmError> {
    Ok(memory_projector(m, &AgentId::ALL)?)
}

/// Ordered `(epoch, configuration)` pairs from EWF(-1) through EWF4.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Trajectory {
    pub steps: Vec<(StageId, MemoryConfig)>,
}

impl Trajectory {
    pub fn final_config(&self) -> MemoryConfig {
        self.steps
            .last()
            .map(|s| s.1)
            .unwrap_or(MemoryConfig::READY)
    }

    pub fn at(&self, stage: StageId) -> Option<MemoryConfig> {
        self.steps.iter().find(|s| s.0 == stage).map(|s| s.1)
    }

    /// The sequence of memories narrated for the experiment (EWF1 leaves memories as after EWF0).
    pub fn paper() -> Trajectory {
        let c = |f1, f2, w1, w2| MemoryConfig { f1, f2, w1, w2 };
        use Label::*;
        Trajectory {
            steps: vec![
                (StageId::Prep, c(Ready, Ready, Ready, Ready)),
                (StageId::Obs0, c(Tail, Ready, Ready, Ready)),
                (StageId::Prep1, c(Tail, Ready, Ready, Ready)),
                (StageId::Obs2, c(Tail, Plus, Ready, Ready)),
                (StageId::Meas3, c(Tail, Plus, Ok, Ready)),
                (StageId::Meas4, c(Tail, Minus, Ok, Ok)),
            ],
        }
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (_, m)) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" -> ")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Pilot states and stage unitaries for one protocol, computed once.
pub struct BeableChain<T> {
    before: Vec<StateVector<T>>,
    after: Vec<StateVector<T>>,
    unitaries: Vec<StageUnitary<T>>,
    projectors: Vec<(MemoryConfig, Projector<T>)>,
}

impl<T: Real> BeableChain<T> {
    pub fn new(protocol: &Protocol<T>) -> Result<Self, BellBohmError> {
        let mut before = Vec::new();
        let mut after = Vec::new();
        let mut unitaries = Vec::new();
        let mut state = protocol.initial_state();
        for stage in StageId::ALL {
            let u = protocol.stage_unitary(stage)?;
            before.push(state.clone());
            state = u.apply(&state)?;
            after.push(state.clone());
            unitaries.push(u);
        }
        let projectors = MemoryConfig::all()
            .into_iter()
            .map(|m| Ok((m, config_projector(&m)?)))
            .collect::<Result<Vec<_>, BellBohmError>>()?;
        Ok(Self {
            before,
            after,
            unitaries,
            projectors,
        })
    }

    /// Born weights `‖Π_m Ψ‖²` of all configurations after `stage`.
    pub fn born_weights(&self, stage: StageId) -> Result<Vec<(MemoryConfig, T)>, BellBohmError> {
        let state = &self.after[stage as usize];
        self.projectors
            .iter()
            .map(|(m, p)| Ok((*m, p.weight(state)?)))
            .collect()
    }

    pub fn transition_kernel(
        &self,
        m: &MemoryConfig,
        stage: StageId,
    ) -> Result<Vec<(MemoryConfig, T)>, BellBohmError> {
        let psi = &self.before[stage as usize];
        let full = &self
            .projectors
            .iter()
            .find(|(c, _)| c == m)
            .expect("all configs")
            .1;
        if full.weight(psi)? < T::negligible() {
            return Err(BellBohmError::Unreachable { config: *m, stage });
        }
        let unitary = &self.unitaries[stage as usize];
        let kept: Vec<AgentId> = AgentId::ALL
            .into_iter()
            .filter(|a| !unitary.disturbs().contains(a))
            .collect();
        let conditioned = memory_projector(m, &kept)?.project(psi)?;
        let denominator = conditioned.norm_sqr();
        let evolved = unitary.apply_unchecked(&conditioned)?;
        let mut row = Vec::new();
        for (next, projector) in &self.projectors {
            if kept.iter().any(|&a| next.get(a) != m.get(a)) {
                continue;
            }
            let p = projector.weight(&evolved)? / denominator;
            if p > T::negligible() {
                row.push((*next, p));
            }
        }
        Ok(row)
    }

    /// Every trajectory with positive probability, most probable first.
    pub fn exact_chain(&self) -> Result<TrajectoryDistribution<T>, BellBohmError> {
        let start = self.projectors[0].1.weight(&self.after[0])?;
        if (start - T::one()).abs() > T::exact_tol() {
            return Err(BellBohmError::Unreachable {
                config: MemoryConfig::READY,
                stage: StageId::Prep,
            });
        }
        let mut paths = vec![(
            Trajectory {
                steps: vec![(StageId::Prep, MemoryConfig::READY)],
            },
            T::one(),
        )];
        for stage in StageId::ALL.into_iter().skip(1) {
            let mut rows: BTreeMap<MemoryConfig, Vec<(MemoryConfig, T)>> = BTreeMap::new();
            let mut next = Vec::new();
            for (path, p) in paths {
                let last = path.final_config();
                if !rows.contains_key(&last) {
                    rows.insert(last, self.transition_kernel(&last, stage)?);
                }
                for (m, q) in &rows[&last] {
                    let mut extended = path.clone();
                    extended.steps.push((stage, *m));
                    next.push((extended, p * *q));
                }
            }
            paths = next;
        }
        paths.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        Ok(TrajectoryDistribution {
            trajectories: paths,
        })
    }
}

pub fn transition_kernel<T: Real>(
    protocol: &Protocol<T>,
    m: &MemoryConfig,
    stage: StageId,
) -> Result<Vec<(MemoryConfig, T)>, BellBohmError> {
    BeableChain::new(protocol)?.transition_kernel(m, stage)
}

pub fn exact_chain<T: Real>(
    protocol: &Protocol<T>,
) -> Result<TrajectoryDistribution<T>, BellBohmError> {
    BeableChain::new(protocol)?.exact_chain()
}

#[derive(Clone, Debug)]
pub struct TrajectoryDistribution<T> {
    pub trajectories: Vec<(Trajectory, T)>,
}

impl<T: Real> TrajectoryDistribution<T> {
    pub fn total(&self) -> T {
        self.trajectories
            .iter()
            .fold(T::zero(), |acc, (_, p)| acc + *p)
    }

    /// Probability of a trajectory, zero if it never occurs.
    pub fn probability(&self, trajectory: &Trajectory) -> T {
        self.trajectories
            .iter()
            .find(|(t, _)| t == trajectory)
            .map(|(_, p)| *p)
            .unwrap_or_else(T::zero)
    }

    /// Configuration distribution at one epoch.
    pub fn marginal_at(&self, stage: StageId) -> BTreeMap<MemoryConfig, T> {
        let mut out = BTreeMap::new();
        for (t, p) in &self.trajectories {
            if let Some(m) = t.at(stage) {
                *out.entry(m).or_insert_with(T::zero) += *p;
            }
        }
        out
    }

    /// Distribution of the final `(w1, w2)` records.
    pub fn final_records(&self) -> BTreeMap<(Label, Label), T> {
        let mut out = BTreeMap::new();
        for (t, p) in &self.trajectories {
            let m = t.final_config();
            *out.entry((m.w1, m.w2)).or_insert_with(T::zero) += *p;
        }
        out
    }
}
