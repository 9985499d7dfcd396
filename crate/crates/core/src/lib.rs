//! Exact desk-scale laboratory for the extended Wigner's friend experiment.
//!
//! The numerical modules are generic over the scalar type ([`scalar::Real`],
//! implemented for `f32` and `f64`); the aliases below fix `f64`, which is
//! what every tolerance in the test suite is stated for.

pub mod bellbohm;
pub mod born;
pub mod checks;
pub mod epistemics;
pub mod exact;
pub mod histories;
pub mod linalg;
pub mod protocol;
pub mod scalar;

pub use born::{Certainty, CollapsePolicy};
pub use exact::Fraction;
pub use protocol::{AgentId, CoinAmplitudes, Epoch, Fault, Label, StageId, Subsystem, Variable};
pub use scalar::Real;

pub type Amplitude = linalg::Amplitude<f64>;
pub type StateVector = linalg::StateVector<f64>;
pub type Projector = linalg::Projector<f64>;
pub type Protocol = protocol::Protocol<f64>;
pub type MeasurementSpec = protocol::MeasurementSpec<f64>;
pub type StageUnitary = protocol::StageUnitary<f64>;
pub type Distribution = born::Distribution<f64>;
pub type History = histories::History<f64>;
pub type MemoryConfig = bellbohm::MemoryConfig;
pub type TrajectoryDistribution = bellbohm::TrajectoryDistribution<f64>;

pub type StateVectorF32 = linalg::StateVector<f32>;
pub type ProtocolF32 = protocol::Protocol<f32>;
pub type DistributionF32 = born::Distribution<f32>;
