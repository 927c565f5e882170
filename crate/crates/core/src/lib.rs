//! Entanglement, random states and quantum chaos simulation toolkit.
pub mod chaosmaps;
pub mod entan;
pub mod error;
pub mod linalg;
pub mod prcircuits;
pub mod qstate;
pub mod randgen;
pub mod stats;
pub mod witstats;
pub mod xcli;

pub use error::{Error, Result};
