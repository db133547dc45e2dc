//! Shallow IQP-circuit Born machines for random-graph generation.
//!
//! Graphs are encoded one qubit per potential edge. Circuits are trained
//! classically against MMD^2 written in terms of Pauli-Z expectation values,
//! sampled exactly by a Walsh-Hadamard transform of the diagonal phase vector,
//! and scored with density, degree-distribution, bipartiteness and MMD metrics.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod bits;
pub mod circuit;
pub mod error;
pub mod eval;
pub mod expval;
pub mod graph;
pub mod jacobi;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod trainer;

pub use bits::BitString;
pub use circuit::{build_shallow_ansatz, GateGenerator, IqpCircuit};
pub use error::{Error, Result};
pub use expval::{ExpvalEstimate, PauliZMask};
pub use graph::{DatasetSpec, DensityClass, GraphBits, GraphFamily};
pub use rng::StreamKey;
pub use sampler::OutputDistribution;
pub use scalar::Real;
pub use trainer::{KernelConfig, TrainConfig};

pub type Circuit = IqpCircuit<f64>;
pub type Circuit32 = IqpCircuit<f32>;
pub type Estimate = ExpvalEstimate<f64>;
pub type Distribution = OutputDistribution<f64>;
pub type Adam = trainer::AdamState<f64>;
pub type TrainOutcome = trainer::TrainOutcome<f64>;
