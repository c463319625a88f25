//! Data-driven swarm simulation of flying insects.
//!
//! Each frame, every agent picks from a reference dataset of recorded
//! (velocity, acceleration) pairs the one minimizing a sum of behavioral
//! energy terms, then integrates its position with the chosen velocity.
//!
//! The core is generic over the scalar type through [`Real`]; the `f64`
//! aliases below are what the command-line tool uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod control;
pub mod energy;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod real;
pub mod refdata;
pub mod scenario;
pub mod sim;
pub mod synth;
pub mod trajectory;
pub mod vec3;

pub use control::{AgentControlState, ControlPath, Environment, Stimulus, StimulusKind};
pub use energy::{AgentState, EnergyTerms, NeighborContext, SimParams, Weights};
pub use noise::NoiseField;
pub use real::Real;
pub use refdata::{DataSample, ReferenceDataset, TrackletPoint};
pub use scenario::Scenario;
pub use sim::{Simulation, StepReport, SwarmState};
pub use trajectory::Trajectory;
pub use vec3::Vec3;

pub type Vec3d = Vec3<f64>;
pub type Sample = DataSample<f64>;
pub type Dataset = ReferenceDataset<f64>;
pub type Agent = AgentState<f64>;
pub type Params = SimParams<f64>;
pub type Swarm = SwarmState<f64>;
pub type Sim = Simulation<f64>;
pub type Traj = Trajectory<f64>;
pub type Env = Environment<f64>;
pub type Noise = NoiseField<f64>;
