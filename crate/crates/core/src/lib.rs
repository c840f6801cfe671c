//! TX-state Hamiltonian of the silicon T centre: orientation handling,
//! strain/Zeeman/Stark terms, optical line positions and parameter fitting.

pub mod angular_momentum;
pub mod elasticity;
pub mod error;
pub mod fitting;
pub mod hamiltonian;
pub mod numerics;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
pub use hamiltonian::{FieldConfig, ModelParams};
pub use symmetry::{enumerate_orientations, OrientationFrame, OrientationSet};
