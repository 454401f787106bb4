//! Exact-diagonalization toolkit for quench dynamics in the extended Dicke model.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod presets;
pub mod quench;
pub mod spectral;

pub use error::{Error, Result};
