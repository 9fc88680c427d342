//! Empirical verification of the linear, bilinear and trilinear estimates:
//! random families, left/right-hand sides, dilation sweeps and reports.

pub mod cutoff;
pub mod family;
pub mod fit;
pub mod flow;
pub mod params;
pub mod kinds;
pub mod regions;
pub mod runner;
