//! Spectral laboratory for the modified KdV equation in Fourier-Lebesgue
//! spaces: restriction norms, Airy-group estimates, bilinear smoothing
//! operators and a Picard solver for the cut-off Duhamel equation.

pub mod bilinear;
pub mod error;
pub mod lab;
pub mod norms;
pub mod probes;
pub mod solver;
pub mod spectral;

pub use error::{LabError, Result};
