//! Picard iteration on the cut-off integral equation for mKdV, an
//! integrating-factor reference integrator, conserved quantities and the
//! data-to-solution Lipschitz probe.

pub mod invariants;
pub mod lipschitz;
pub mod nonlinear;
pub mod picard;
pub mod reference;

pub use invariants::{conserved_quantities, Conserved, Kink};
pub use lipschitz::{lipschitz_probe, LipschitzOptions, LipschitzRow};
pub use picard::{picard_solve, PicardConfig, SolveResult};
pub use reference::{l2_distance, reference_integrate, stability_limit, ReferenceConfig, Trajectory};
