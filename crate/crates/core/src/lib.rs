//! Two-photon polarization statistics, crypto-nonlocal membership by linear
//! programming, and numerical checks of the realistic-polarization axioms.

pub mod axioms;
pub mod behavior;
pub mod crypto;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod lp;
pub mod polarization;
pub mod separability;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
