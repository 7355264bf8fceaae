//! Spectral hydrodynamic-stability toolkit for plane shear flows.
//!
//! The crate solves the Orr–Sommerfeld eigenproblem for shear flows in a
//! strip or on the half line, traces the marginal stability curves, and
//! evaluates the cubic Landau coefficient of the Hopf bifurcation that
//! occurs on them.

pub mod bifurcation;
pub mod error;
mod linalg;
pub mod oss;
pub mod profiles;
pub mod spectral;

pub use error::{Error, Result};
pub use profiles::{BoundaryParams, Geometry, ShearProfile};
pub use spectral::SpectralGrid;
