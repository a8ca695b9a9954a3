//! Learning Hamiltonian phase flows with symplectic neural networks.
//!
//! The crate provides:
//!
//! * built-in Hamiltonian systems and implicit symplectic reference
//!   integrators for manufacturing flow-map data,
//! * a symplectic network whose layers are symplectic maps by construction,
//!   with exact inverses and analytic Jacobians,
//! * a dense feed-forward baseline trained on the same data,
//! * full-batch Adam training, dataset generation and (de)serialization,
//! * verification routines for symplecticity, invertibility and energy
//!   drift.

pub mod dataset;
pub mod error;
pub mod fnn;
pub mod integrators;
mod math;
pub mod model;
pub mod phase;
pub mod sympnet;
pub mod train;
pub mod verify;

pub use dataset::{DataSource, Dataset, DatasetMeta, SampleBox};
pub use error::{Error, Result};
pub use fnn::Fnn;
pub use integrators::{IntegratorConfig, Scheme};
pub use model::{Batch, ModelKind, PhaseMap, TrainableModel};
pub use phase::{PhasePoint, SymplecticForm, System};
pub use sympnet::SympNet;
pub use train::{train, TrainConfig, TrainReport, TrainSession};
pub use verify::{energy_drift, gradient_check, symplectic_residual, SymplecticReport};
