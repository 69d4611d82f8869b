//! Ground states of the semilinear curl-curl problem in a perfectly
//! conducting box, computed by minimizing over the Nehari-Pankov manifold
//! on a truncated basis of cavity modes, plus an axisymmetric reduced solver
//! on a cylinder.

pub mod axisym;
pub mod energy;
pub mod error;
pub mod io;
pub mod nehari;
pub mod nonlinearity;
pub mod spectral;

pub use error::{Error, Result};
