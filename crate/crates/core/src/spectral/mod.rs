//! Discrete fields on uniform grids, Fourier multipliers and the retarded
//! Duhamel integral of the Airy group.

mod duhamel;
pub mod fft;
mod field;
mod grid;
mod multiplier;

pub use duhamel::{duhamel_integral, Duhamel};
pub use field::{Layout1D, Layout2D, SpaceTimeField, SpectralField};
pub use grid::{Grid1D, Representation, SpaceTimeGrid};
pub use multiplier::{apply_multiplier, apply_multiplier_st, bracket, phase, MultiplierSpec};
