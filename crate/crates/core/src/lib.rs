//! Variational ground states of the single- and two-spin spin-boson model over a
//! logarithmically discretized bath, Gaussian and two-qubit correlation measures,
//! and tools to locate and characterize the localization transition.

pub mod ansatz;
pub mod bath;
pub mod criticality;
pub mod energy;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod observables;
pub mod optimize;
pub mod spin;

pub use ansatz::{coherent_overlap, ModelParams, SpinModel, VariationalState};
pub use bath::{discretize, spectral_density, BathSpec, DiscretizedBath, Mode};
pub use energy::{energy, energy_gradient, StateGradient};
pub use error::{Result, SbmError};
pub use optimize::{minimize, GroundStateResult, MinimizeOptions};
