//! Data-to-solution Lipschitz quotients
//! `sup_{0 <= t <= delta0} ||u(t) - v(t)||_{FL^r_s} / ||u0 - v0||_{FL^r_s}`
//! for `v0 = u0 + eps w` along a fixed random real direction `w`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::picard::{picard_solve, PicardConfig, SolveResult};
use crate::error::{LabError, Result};
use crate::norms::fl_norm;
use crate::probes::family::FamilySpec;
use crate::spectral::{Layout1D, SpectralField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzOptions {
    pub eps: Vec<f64>,
    /// Quotients are taken over `[0, delta0]`, `delta0 <= delta`.
    pub delta0: f64,
    pub seed: u64,
    /// Band of the perturbation direction.
    pub band: f64,
}

impl LipschitzOptions {
    pub fn new(eps: Vec<f64>, delta0: f64) -> Self {
        Self {
            eps,
            delta0,
            seed: 0,
            band: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub eps: f64,
    /// `sup_t ||u(t) - v(t)||_{FL^r_s}`.
    pub solution_gap: Option<f64>,
    /// `||u0 - v0||_{FL^r_s}`.
    pub data_gap: Option<f64>,
    pub quotient: Option<f64>,
    /// Failure of the perturbed solve, if any.
    pub error: Option<String>,
}

/// Real direction with unit `FL^r_s` norm, drawn from the real Gaussian family.
pub fn perturbation_direction(u0: &SpectralField, r: f64, s: f64, options: &LipschitzOptions) -> Result<SpectralField> {
    let spec = FamilySpec {
        band: options.band,
        real: true,
        gaussian_only: true,
        ..FamilySpec::default()
    };
    let data = spec.flow_data(&mut ChaCha8Rng::seed_from_u64(options.seed));
    let w = data.sample(*u0.grid());
    let norm = fl_norm(&w, r, s)?;
    Ok(w.axpby(1.0 / norm, &w, 0.0)?)
}

fn solution_gap(u: &SolveResult, v: &SolveResult, config: &PicardConfig, delta0: f64) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for t in u.nodes_up_to(delta0)? {
        let d = u.state_at(t)?.axpby(1.0, &v.state_at(t)?, -1.0)?;
        sup = sup.max(fl_norm(&d, config.r, config.s)?);
    }
    Ok(sup)
}

pub fn lipschitz_probe(u0: &SpectralField, config: &PicardConfig, options: &LipschitzOptions) -> Result<Vec<LipschitzRow>> {
    if let Some(e) = options.eps.iter().find(|e| !(e.is_finite() && **e != 0.0)) {
        return Err(LabError::Parameter(format!(
            "perturbation size {e} gives a zero or undefined denominator"
        )));
    }
    if !(options.delta0 > 0.0 && options.delta0 <= config.delta) {
        return Err(LabError::Parameter(format!(
            "delta0 = {} must lie in (0, delta = {}]",
            options.delta0, config.delta
        )));
    }
    let u0 = match u0.layout() {
        Layout1D::Frequency => u0.clone(),
        Layout1D::Physical => u0.to_frequency()?,
    };
    let w = perturbation_direction(&u0, config.r, config.s, options)?;
    let base = picard_solve(&u0, config)?;
    Ok(options
        .eps
        .par_iter()
        .map(|&eps| {
            let run = || -> Result<(f64, f64)> {
                let v0 = u0.axpby(1.0, &w, eps)?;
                let denom = fl_norm(&u0.axpby(1.0, &v0, -1.0)?, config.r, config.s)?;
                let v = picard_solve(&v0, config)?;
                if !v.converged {
                    return Err(LabError::Divergence(format!(
                        "perturbed solve did not converge in {} iterations",
                        v.iterations
                    )));
                }
                Ok((solution_gap(&base, &v, config, options.delta0)?, denom))
            };
            match run() {
                Ok((gap, denom)) => LipschitzRow {
                    eps,
                    solution_gap: Some(gap),
                    data_gap: Some(denom),
                    quotient: Some(gap / denom),
                    error: None,
                },
                Err(e) => LipschitzRow {
                    eps,
                    solution_gap: None,
                    data_gap: None,
                    quotient: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
