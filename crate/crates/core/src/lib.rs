//! Joint design of spectrally constrained, low-PAPR MIMO radar transmit
//! waveforms and STAP receive filters.

pub mod admm;
pub mod analysis;
pub mod cli;
pub mod design;
pub mod error;
pub mod filter;
pub mod io;
pub mod linalg;
pub mod scenario;
pub mod spectral;
pub mod stap;

pub use error::{Error, Result};

/// Value reported for the logarithm of zero power.
pub const DB_FLOOR: f64 = -300.0;
