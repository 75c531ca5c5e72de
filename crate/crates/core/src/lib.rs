//! Simulation and verification toolkit for r-neighbor bootstrap percolation
//! on d-dimensional tori and grids.

pub mod bounds;
pub mod certify;
pub mod engine;
pub mod error;
pub mod format;
pub mod lattice;
pub mod oracle;
pub mod sampler;

pub use error::{Error, Result};
