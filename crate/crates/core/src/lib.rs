//! Job-shop scheduling as time-indexed QUBOs.
//!
//! The pipeline compiles an instance and timespan into a QUBO, optionally
//! prunes it with constraint-propagation windows, embeds it on a Chimera
//! graph, samples it, and wraps the resulting decision oracle in a
//! distribution-guided binary search over makespans.

pub mod chimera;
pub mod exact;
pub mod instance;
pub mod ising;
pub mod par;
pub mod qubo;
pub mod sampler;
pub mod schedule;
pub mod search;
pub mod shaving;
pub mod window;

#[cfg(test)]
pub(crate) mod fixtures;

pub use instance::{generate, EnsembleParams, InstanceError, JspInstance, Operation};
pub use par::Execution;
pub use qubo::{compile, Coeff, Formulation, PenaltyConfig, QuboError, QuboProblem};
pub use schedule::Schedule;
pub use search::{optimize, MakespanModel, SearchConfig, SearchReport};
pub use window::StartWindow;
