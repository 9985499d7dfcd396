//! The six subsystems of the extended Wigner's friend experiment and its
//! stage-by-stage dynamics.
//!
//! Global layout is `(C, F1, S, F2, W1, W2)` with dimensions `(2, 3, 2, 3, 3, 3)`.
//! Basis order: coin `(head, tail)`, spin `(up, down)`, and every agent memory
//! `(0, a, b)` with F1 `(0, head, tail)`, F2 `(0, +, -)`, W1/W2 `(0, ok, fail)`.
//!
//! Every measurement is a recording isometry: the target component in outcome
//! `k` is copied into the recorder's memory, nothing is projected away. Off the
//! reachable subspace (recorder not in `|0⟩`) the isometry is extended to a
//! unitary by cyclically shifting the memory by the outcome's label index.

use std::fmt;

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{Amplitude, LinalgError, LocalOperator, Projector, Space, StateVector};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("measurement {variable} is recorded by {recorder}, not {agent}")]
    RecorderMismatch {
        variable: Variable,
        recorder: AgentId,
        agent: AgentId,
    },
    #[error("stage {stage} applied outside its reachable subspace: {condition}")]
    OutsideReachable {
        stage: StageId,
        condition: &'static str,
    },
    #[error("stage {0} executed more than once")]
    RepeatedStage(StageId),
    #[error("coin amplitudes not normalised: |alpha|^2 + |beta|^2 = {0}")]
    CoinNotNormalized(f64),
    #[error("outcome projectors overlap or do not cover the target space")]
    InvalidDecomposition,
    #[error("label {label} is not an outcome of {variable}")]
    UnknownOutcome { variable: Variable, label: Label },
    #[error("label {label} is not a memory state of {agent}")]
    UnknownMemory { agent: AgentId, label: Label },
}

/// Subsystems in global factor order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Subsystem {
    C,
    F1,
    S,
    F2,
    W1,
    W2,
}

impl Subsystem {
    pub const ALL: [Subsystem; 6] = [
        Subsystem::C,
        Subsystem::F1,
        Subsystem::S,
        Subsystem::F2,
        Subsystem::W1,
        Subsystem::W2,
    ];

    pub fn factor(self) -> usize {
        self as usize
    }

    pub fn dim(self) -> usize {
        match self {
            Subsystem::C | Subsystem::S => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn global_space() -> Space {
    Space::new(Subsystem::ALL.iter().map(|s| s.dim()).collect()).expect("positive dims")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AgentId {
    F1,
    F2,
    W1,
    W2,
}

impl AgentId {
    pub const ALL: [AgentId; 4] = [AgentId::F1, AgentId::F2, AgentId::W1, AgentId::W2];

    pub fn subsystem(self) -> Subsystem {
        match self {
            AgentId::F1 => Subsystem::F1,
            AgentId::F2 => Subsystem::F2,
            AgentId::W1 => Subsystem::W1,
            AgentId::W2 => Subsystem::W2,
        }
    }

    /// Memory labels in basis order `(0, a, b)`.
    pub fn memory_labels(self) -> [Label; 3] {
        match self {
            AgentId::F1 => [Label::Ready, Label::Head, Label::Tail],
            AgentId::F2 => [Label::Ready, Label::Plus, Label::Minus],
            AgentId::W1 | AgentId::W2 => [Label::Ready, Label::Ok, Label::Fail],
        }
    }

    pub fn memory_index(self, label: Label) -> Result<usize, ProtocolError> {
        self.memory_labels()
            .iter()
            .position(|&l| l == label)
            .ok_or(ProtocolError::UnknownMemory { agent: self, label })
    }

    /// The measurement this agent performs and records.
    pub fn variable(self) -> Variable {
        match self {
            AgentId::F1 => Variable::R,
            AgentId::F2 => Variable::Z,
            AgentId::W1 => Variable::W1,
            AgentId::W2 => Variable::W2,
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome and memory labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    Ready,
    Head,
    Tail,
    Plus,
    Minus,
    Ok,
    Fail,
}

impl Label {
    pub fn token(self) -> &'static str {
        match self {
            Label::Ready => "0",
            Label::Head => "head",
            Label::Tail => "tail",
            Label::Plus => "+",
            Label::Minus => "-",
            Label::Ok => "ok",
            Label::Fail => "fail",
        }
    }

    pub fn from_token(token: &str) -> Option<Label> {
        Some(match token {
            "0" => Label::Ready,
            "head" => Label::Head,
            "tail" => Label::Tail,
            "+" => Label::Plus,
            "-" => Label::Minus,
            "ok" => Label::Ok,
            "fail" => Label::Fail,
            _ => return None,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Outcome variables `r`, `z`, `w1`, `w2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Variable {
    R,
    Z,
    W1,
    W2,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::R, Variable::Z, Variable::W1, Variable::W2];

    pub fn recorder(self) -> AgentId {
        match self {
            Variable::R => AgentId::F1,
            Variable::Z => AgentId::F2,
            Variable::W1 => AgentId::W1,
            Variable::W2 => AgentId::W2,
        }
    }

    pub fn stage(self) -> StageId {
        match self {
            Variable::R => StageId::Obs0,
            Variable::Z => StageId::Obs2,
            Variable::W1 => StageId::Meas3,
            Variable::W2 => StageId::Meas4,
        }
    }

    /// Measured subsystems in global factor order.
    pub fn targets(self) -> Vec<Subsystem> {
        match self {
            Variable::R => vec![Subsystem::C],
            Variable::Z => vec![Subsystem::S],
            Variable::W1 => vec![Subsystem::C, Subsystem::F1],
            Variable::W2 => vec![Subsystem::S, Subsystem::F2],
        }
    }

    pub fn outcomes(self) -> [Label; 2] {
        match self {
            Variable::R => [Label::Head, Label::Tail],
            Variable::Z => [Label::Plus, Label::Minus],
            Variable::W1 | Variable::W2 => [Label::Ok, Label::Fail],
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Variable::R => "r",
            Variable::Z => "z",
            Variable::W1 => "w1",
            Variable::W2 => "w2",
        }
    }

    pub fn from_token(token: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.token() == token)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Stages EWF(-1) through EWF4, at times -1..4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StageId {
    Prep,
    Obs0,
    Prep1,
    Obs2,
    Meas3,
    Meas4,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::Prep,
        StageId::Obs0,
        StageId::Prep1,
        StageId::Obs2,
        StageId::Meas3,
        StageId::Meas4,
    ];

    pub fn time(self) -> i32 {
        self as i32 - 1
    }

    pub fn epoch(self) -> Epoch {
        Epoch::at_time(self.time())
    }

    pub fn token(self) -> &'static str {
        match self {
            StageId::Prep => "prep",
            StageId::Obs0 => "obs0",
            StageId::Prep1 => "prep1",
            StageId::Obs2 => "obs2",
            StageId::Meas3 => "meas3",
            StageId::Meas4 => "meas4",
        }
    }

    pub fn from_token(token: &str) -> Option<StageId> {
        StageId::ALL.into_iter().find(|s| s.token() == token)
    }

    pub fn previous(self) -> Option<StageId> {
        StageId::ALL.get((self as usize).checked_sub(1)?).copied()
    }

    /// Measurement performed at this stage, if any.
    pub fn measurement(self) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.stage() == self)
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EWF{}", self.time())
    }
}

/// A point on the canonical clock, in half-time units so that the
/// inter-stage epochs 1.5, 2.5, 3.5 are representable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Epoch(i32);

impl Epoch {
    pub const FIRST: Epoch = Epoch(-2);
    pub const LAST: Epoch = Epoch(8);

    pub fn at_time(t: i32) -> Epoch {
        Epoch(2 * t)
    }

    /// The epoch halfway between stage `t` and stage `t + 1`.
    pub fn after_time(t: i32) -> Epoch {
        Epoch(2 * t + 1)
    }

    pub fn half_units(self) -> i32 {
        self.0
    }

    pub fn is_valid(self) -> bool {
        (Self::FIRST..=Self::LAST).contains(&self)
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", self.0.div_euclid(2))
        }
    }
}

/// Initial coin amplitudes `alpha |head⟩ + beta |tail⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinAmplitudes<T> {
    head: Amplitude<T>,
    tail: Amplitude<T>,
}

impl<T: Real> CoinAmplitudes<T> {
    /// Accepts amplitudes normalised within 1e-9 and renormalises them exactly.
    pub fn new(head: Amplitude<T>, tail: Amplitude<T>) -> Result<Self, ProtocolError> {
        let norm_sqr = head.norm_sqr() + tail.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - T::one()).abs() > T::lit(1e-9) {
            return Err(ProtocolError::CoinNotNormalized(norm_sqr.to_f64_lossy()));
        }
        let scale = Complex::new(T::one() / norm_sqr.sqrt(), T::zero());
        Ok(Self {
            head: head * scale,
            tail: tail * scale,
        })
    }

    pub fn real(head: T, tail: T) -> Result<Self, ProtocolError> {
        Self::new(Complex::new(head, T::zero()), Complex::new(tail, T::zero()))
    }

    pub fn head(&self) -> Amplitude<T> {
        self.head
    }

    pub fn tail(&self) -> Amplitude<T> {
        self.tail
    }
}

impl<T: Real> Default for CoinAmplitudes<T> {
    fn default() -> Self {
        let third = T::one() / T::lit(3.0);
        Self {
            head: Complex::new(third.sqrt(), T::zero()),
            tail: Complex::new((third + third).sqrt(), T::zero()),
        }
    }
}

/// Deliberate corruptions used to exercise the verification paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// `|ok⟩_{F1C}` built with `+` between its terms, i.e. equal to `|fail⟩_{F1C}`.
    OkSignFlip,
    /// F1 prepares `(|up⟩ - |down⟩)/√2` instead of `|→⟩` after a tail.
    PreparationSignFlip,
}

/// Labelled orthogonal decomposition of a (local) target space.
#[derive(Clone, Debug)]
pub struct ProjectiveDecomposition<T> {
    space: Space,
    outcomes: Vec<(Label, Projector<T>)>,
}

impl<T: Real> ProjectiveDecomposition<T> {
    pub fn new(space: Space, outcomes: Vec<(Label, Projector<T>)>) -> Result<Self, ProtocolError> {
        let rank: usize = outcomes.iter().map(|(_, p)| p.rank()).sum();
        if rank != space.dim() || outcomes.iter().any(|(_, p)| p.space() != &space) {
            return Err(ProtocolError::InvalidDecomposition);
        }
        for i in 0..outcomes.len() {
            for j in i + 1..outcomes.len() {
                if !outcomes[i].1.is_orthogonal_to(&outcomes[j].1)? {
                    return Err(ProtocolError::InvalidDecomposition);
                }
            }
        }
        Ok(Self { space, outcomes })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn outcomes(&self) -> &[(Label, Projector<T>)] {
        &self.outcomes
    }

    pub fn projector(&self, label: Label) -> Option<&Projector<T>> {
        self.outcomes
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, p)| p)
    }
}

/// One measurement: what is measured, in which basis, and who records it.
#[derive(Clone, Debug)]
pub struct MeasurementSpec<T> {
    pub variable: Variable,
    pub targets: Vec<Subsystem>,
    pub basis: ProjectiveDecomposition<T>,
    pub recorder: AgentId,
}

impl<T: Real> MeasurementSpec<T> {
    fn target_factors(&self) -> Vec<usize> {
        self.targets.iter().map(|s| s.factor()).collect()
    }

    /// Outcome projector lifted to the global space.
    pub fn global_projector(&self, label: Label) -> Result<Projector<T>, ProtocolError> {
        let local = self
            .basis
            .projector(label)
            .ok_or(ProtocolError::UnknownOutcome {
                variable: self.variable,
                label,
            })?;
        Ok(Projector::embed(
            &global_space(),
            &self.target_factors(),
            local,
        )?)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.basis.outcomes().iter().map(|(l, _)| *l).collect()
    }
}

/// A stage's action on the global space, with the subspace it is meant for.
#[derive(Clone, Debug)]
pub struct StageUnitary<T> {
    stage: StageId,
    action: LocalOperator<T>,
    precondition: Option<(Projector<T>, &'static str)>,
    disturbs: Vec<AgentId>,
}

impl<T: Real> StageUnitary<T> {
    fn identity(stage: StageId) -> Self {
        Self {
            stage,
            action: LocalOperator::identity(global_space()),
            precondition: None,
            disturbs: Vec::new(),
        }
    }

    pub fn stage(&self) -> StageId {
        self.stage
    }

    pub fn action(&self) -> &LocalOperator<T> {
        &self.action
    }

    /// Agents whose memory records this stage may change.
    pub fn disturbs(&self) -> &[AgentId] {
        &self.disturbs
    }

    /// Applies the stage, refusing states outside the reachable subspace.
    pub fn apply(&self, v: &StateVector<T>) -> Result<StateVector<T>, ProtocolError> {
        if let Some((projector, condition)) = &self.precondition {
            let inside = projector.weight(v)?;
            if (v.norm_sqr() - inside).abs() > T::exact_tol() {
                return Err(ProtocolError::OutsideReachable {
                    stage: self.stage,
                    condition,
                });
            }
        }
        self.apply_unchecked(v)
    }

    /// Applies the unitary extension without checking reachability.
    pub fn apply_unchecked(&self, v: &StateVector<T>) -> Result<StateVector<T>, ProtocolError> {
        Ok(self.action.apply(v)?)
    }
}

/// Configured experiment: coin amplitudes and optional injected fault.
#[derive(Clone, Debug)]
pub struct Protocol<T> {
    coin: CoinAmplitudes<T>,
    fault: Option<Fault>,
}

impl<T: Real> Default for Protocol<T> {
    fn default() -> Self {
        Self::new(CoinAmplitudes::default())
    }
}

fn amp<T: Real>(x: T) -> Amplitude<T> {
    Complex::new(x, T::zero())
}

impl<T: Real> Protocol<T> {
    pub fn new(coin: CoinAmplitudes<T>) -> Self {
        Self { coin, fault: None }
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn coin(&self) -> &CoinAmplitudes<T> {
        &self.coin
    }

    pub fn fault(&self) -> Option<Fault> {
        self.fault
    }

    pub fn space(&self) -> Space {
        global_space()
    }

    /// `(alpha|head⟩ + beta|tail⟩)_C ⊗ |0⟩_{F1} ⊗ |down⟩_S ⊗ |0⟩_{F2,W1,W2}`.
    pub fn initial_state(&self) -> StateVector<T> {
        let single = |d: usize| Space::new(vec![d]).expect("positive");
        let coin = StateVector::from_amplitudes(single(2), vec![self.coin.head, self.coin.tail])
            .expect("finite coin amplitudes");
        let ready = StateVector::basis(single(3), &[0]).expect("in range");
        let down = StateVector::basis(single(2), &[1]).expect("in range");
        coin.tensor(&ready)
            .tensor(&down)
            .tensor(&ready)
            .tensor(&ready)
            .tensor(&ready)
    }

    fn local_space(targets: &[Subsystem]) -> Space {
        Space::new(targets.iter().map(|s| s.dim()).collect()).expect("positive")
    }

    /// `|ok⟩_{F1C}` and `|fail⟩_{F1C}` on the local `(C, F1)` space.
    pub fn f1c_basis(&self) -> (StateVector<T>, StateVector<T>) {
        let space = Self::local_space(&[Subsystem::C, Subsystem::F1]);
        let s = T::FRAC_1_SQRT_2();
        // (c, f1): head-head = (0,1), tail-tail = (1,2)
        let hh = StateVector::basis(space.clone(), &[0, 1]).expect("in range");
        let tt = StateVector::basis(space, &[1, 2]).expect("in range");
        let ok_sign = if self.fault == Some(Fault::OkSignFlip) {
            s
        } else {
            -s
        };
        let ok = hh
            .scaled(amp(s))
            .add(&tt.scaled(amp(ok_sign)))
            .expect("same space");
        let fail = hh
            .scaled(amp(s))
            .add(&tt.scaled(amp(s)))
            .expect("same space");
        (ok, fail)
    }

    /// `|ok⟩_{F2S}` and `|fail⟩_{F2S}` on the local `(S, F2)` space.
    pub fn f2s_basis(&self) -> (StateVector<T>, StateVector<T>) {
        let space = Self::local_space(&[Subsystem::S, Subsystem::F2]);
        let s = T::FRAC_1_SQRT_2();
        // (s, f2): down-minus = (1,2), up-plus = (0,1)
        let dm = StateVector::basis(space.clone(), &[1, 2]).expect("in range");
        let up = StateVector::basis(space, &[0, 1]).expect("in range");
        let ok = dm
            .scaled(amp(s))
            .add(&up.scaled(amp(-s)))
            .expect("same space");
        let fail = dm
            .scaled(amp(s))
            .add(&up.scaled(amp(s)))
            .expect("same space");
        (ok, fail)
    }

    pub fn measurement_spec(
        &self,
        variable: Variable,
    ) -> Result<MeasurementSpec<T>, ProtocolError> {
        let targets = variable.targets();
        let space = Self::local_space(&targets);
        let [first, second] = variable.outcomes();
        let outcomes = match variable {
            Variable::R | Variable::Z => {
                let ray = |i: usize| -> Result<Projector<T>, ProtocolError> {
                    Ok(Projector::new(
                        space.clone(),
                        vec![StateVector::basis(space.clone(), &[i])?],
                    )?)
                };
                vec![(first, ray(0)?), (second, ray(1)?)]
            }
            Variable::W1 | Variable::W2 => {
                let (ok, fail) = if variable == Variable::W1 {
                    self.f1c_basis()
                } else {
                    self.f2s_basis()
                };
                let ok = Projector::new(space.clone(), vec![ok])?;
                let fail_ray = Projector::new(space.clone(), vec![fail.clone()])?;
                // the fail outcome absorbs every direction orthogonal to both rays
                let mut spanned = ok.spanning_vectors().to_vec();
                spanned.push(fail.clone());
                let rest = Projector::new(space.clone(), spanned)
                    .map(|p| p.complement())
                    .unwrap_or_else(|_| fail_ray.complement());
                let mut fail_span = vec![fail];
                fail_span.extend_from_slice(rest.spanning_vectors());
                vec![
                    (first, ok),
                    (second, Projector::new(space.clone(), fail_span)?),
                ]
            }
        };
        Ok(MeasurementSpec {
            variable,
            targets,
            basis: ProjectiveDecomposition::new(space, outcomes)?,
            recorder: variable.recorder(),
        })
    }

    /// `Σ_k P_k ⊗ shift_k` on the targets and the recorder's memory.
    pub fn record_isometry(
        &self,
        agent: AgentId,
        spec: &MeasurementSpec<T>,
    ) -> Result<StageUnitary<T>, ProtocolError> {
        if spec.recorder != agent {
            return Err(ProtocolError::RecorderMismatch {
                variable: spec.variable,
                recorder: spec.recorder,
                agent,
            });
        }
        let memory = agent.subsystem();
        let mut factors = spec.target_factors();
        factors.push(memory.factor());
        factors.sort_unstable();
        let global = global_space();
        let local = global.subspace(&factors)?;
        let target_space = spec.basis.space().clone();
        let memory_pos = factors
            .iter()
            .position(|&f| f == memory.factor())
            .expect("present");
        let split = |l: usize| {
            let mut digits = local.digits(l);
            let m = digits.remove(memory_pos);
            (target_space.index(&digits).expect("in range"), m)
        };
        let d = local.dim();
        let mut matrix = vec![amp(T::zero()); d * d];
        for (k, (_, projector)) in spec.basis.outcomes().iter().enumerate() {
            let shift = k + 1;
            for row in 0..d {
                let (t_out, m_out) = split(row);
                for col in 0..d {
                    let (t_in, m_in) = split(col);
                    if m_out != (m_in + shift) % 3 {
                        continue;
                    }
                    let element = projector
                        .spanning_vectors()
                        .iter()
                        .fold(amp(T::zero()), |acc, e| {
                            acc + e.amplitudes()[t_out] * e.amplitudes()[t_in].conj()
                        });
                    matrix[row * d + col] += element;
                }
            }
        }
        let ready = Projector::new(
            Space::new(vec![3])?,
            vec![StateVector::basis(Space::new(vec![3])?, &[0])?],
        )?;
        let mut disturbs = vec![agent];
        disturbs.extend(
            AgentId::ALL
                .into_iter()
                .filter(|a| spec.targets.contains(&a.subsystem())),
        );
        disturbs.sort_unstable();
        Ok(StageUnitary {
            stage: spec.variable.stage(),
            action: LocalOperator::new(global.clone(), factors, matrix)?,
            precondition: Some((
                Projector::embed(&global, &[memory.factor()], &ready)?,
                "recorder memory must be |0⟩",
            )),
            disturbs,
        })
    }

    /// Stage EWF1: rotate `|down⟩` to `|→⟩` controlled on F1 remembering tail.
    pub fn preparation_unitary(&self) -> StageUnitary<T> {
        let s = T::FRAC_1_SQRT_2();
        let zero = amp(T::zero());
        let one = amp(T::one());
        // columns are the images of |up⟩, |down⟩
        let rotation = if self.fault == Some(Fault::PreparationSignFlip) {
            [[amp(s), amp(s)], [amp(s), amp(-s)]]
        } else {
            [[amp(s), amp(s)], [amp(-s), amp(s)]]
        };
        let factors = vec![Subsystem::F1.factor(), Subsystem::S.factor()];
        let d = 6;
        let mut matrix = vec![zero; d * d];
        for f1 in 0..3 {
            for out in 0..2 {
                for inp in 0..2 {
                    let value = if f1 == 2 {
                        rotation[out][inp]
                    } else if out == inp {
                        one
                    } else {
                        zero
                    };
                    matrix[(f1 * 2 + out) * d + f1 * 2 + inp] = value;
                }
            }
        }
        let global = global_space();
        let spin = Space::new(vec![2]).expect("positive");
        let down = Projector::new(
            spin.clone(),
            vec![StateVector::basis(spin, &[1]).expect("in range")],
        )
        .expect("unit vector");
        StageUnitary {
            stage: StageId::Prep1,
            action: LocalOperator::new(global.clone(), factors, matrix).expect("6x6"),
            precondition: Some((
                Projector::embed(&global, &[Subsystem::S.factor()], &down).expect("valid factor"),
                "spin must be |down⟩ before preparation",
            )),
            disturbs: Vec::new(),
        }
    }

    pub fn stage_unitary(&self, stage: StageId) -> Result<StageUnitary<T>, ProtocolError> {
        match stage {
            StageId::Prep => Ok(StageUnitary::identity(StageId::Prep)),
            StageId::Prep1 => Ok(self.preparation_unitary()),
            _ => {
                let variable = stage.measurement().expect("measurement stage");
                let spec = self.measurement_spec(variable)?;
                self.record_isometry(variable.recorder(), &spec)
            }
        }
    }

    /// Runs distinct stages in the given order from the initial state.
    pub fn run(&self, stages: &[StageId]) -> Result<StateVector<T>, ProtocolError> {
        let mut seen = Vec::with_capacity(stages.len());
        let mut state = self.initial_state();
        for &stage in stages {
            if seen.contains(&stage) {
                return Err(ProtocolError::RepeatedStage(stage));
            }
            seen.push(stage);
            state = self.stage_unitary(stage)?.apply(&state)?;
        }
        Ok(state)
    }

    /// Pilot state after every stage up to and including `stage`; no projection.
    pub fn pilot_state_after(&self, stage: StageId) -> Result<StateVector<T>, ProtocolError> {
        let upto: Vec<StageId> = StageId::ALL.into_iter().filter(|&s| s <= stage).collect();
        self.run(&upto)
    }

    /// Pilot states after each stage, in stage order.
    pub fn pilot_states(&self) -> Result<Vec<(StageId, StateVector<T>)>, ProtocolError> {
        let mut out = Vec::with_capacity(StageId::ALL.len());
        let mut state = self.initial_state();
        for stage in StageId::ALL {
            state = self.stage_unitary(stage)?.apply(&state)?;
            out.push((stage, state.clone()));
        }
        Ok(out)
    }

    /// Projector onto `agent`'s memory holding `label`.
    pub fn record_projector(
        &self,
        agent: AgentId,
        label: Label,
    ) -> Result<Projector<T>, ProtocolError> {
        let index = agent.memory_index(label)?;
        let memory = Space::new(vec![3])?;
        let local = Projector::new(memory.clone(), vec![StateVector::basis(memory, &[index])?])?;
        Ok(Projector::embed(
            &global_space(),
            &[agent.subsystem().factor()],
            &local,
        )?)
    }
}
