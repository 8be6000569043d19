//! Fock-space simulation of noiseless linear amplification of Gaussian states.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod measures;
pub mod nla;
pub mod phase_space;
pub mod sweep;

pub use error::{Error, ErrorKind, Result};
