use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{Layout1D, Layout2D, SpaceTimeField, SpectralField};
use crate::error::{LabError, Result};

/// Japanese bracket `(1 + x^2)^{1/2}`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// The dispersion relation of the Airy group.
#[inline]
pub fn phase(xi: f64) -> f64 {
    xi * xi * xi
}

/// Fourier multipliers acting on fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MultiplierSpec {
    /// `<xi>^s`.
    Bessel(f64),
    /// `|xi|^s`. For `s > 0` the zero mode is mapped to zero; for `s < 0`
    /// the zero mode must be empty.
    Riesz(f64),
    /// `exp(i t xi^3)`, the Airy group at time `t`.
    Airy(f64),
    /// `<tau - xi^3>^b`; space-time frequency layout only.
    Lambda(f64),
}

impl MultiplierSpec {
    /// Symbol at spatial frequency `xi` (and `tau` for [`MultiplierSpec::Lambda`]).
    /// Returns `None` where the symbol is singular.
    pub fn symbol(&self, xi: f64, tau: f64) -> Option<Complex64> {
        Some(match *self {
            MultiplierSpec::Bessel(s) => Complex64::new(bracket(xi).powf(s), 0.0),
            MultiplierSpec::Riesz(s) => {
                if s == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else if xi == 0.0 {
                    if s > 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        return None;
                    }
                } else {
                    Complex64::new(xi.abs().powf(s), 0.0)
                }
            }
            MultiplierSpec::Airy(t) => Complex64::from_polar(1.0, t * phase(xi)),
            MultiplierSpec::Lambda(b) => Complex64::new(bracket(tau - phase(xi)).powf(b), 0.0),
        })
    }
}

fn singular(spec: &MultiplierSpec) -> LabError {
    LabError::Domain(format!(
        "{spec:?} is singular at xi = 0 and the zero mode is populated"
    ))
}

/// Pointwise multiplication of frequency coefficients by the symbol of `spec`.
pub fn apply_multiplier(field: &SpectralField, spec: MultiplierSpec) -> Result<SpectralField> {
    field.expect_layout(Layout1D::Frequency)?;
    if let MultiplierSpec::Lambda(_) = spec {
        return Err(LabError::Domain(
            "Lambda multipliers act on space-time fields in (xi,tau) layout".into(),
        ));
    }
    let g = *field.grid();
    let zero = g.zero_index();
    if spec.symbol(0.0, 0.0).is_none() && field.coeffs()[zero] != Complex64::new(0.0, 0.0) {
        return Err(singular(&spec));
    }
    Ok(field.map_coeffs(|i, c| {
        if i == zero && spec.symbol(0.0, 0.0).is_none() {
            c
        } else {
            c * spec.symbol(g.xi(i), 0.0).expect("regular away from zero")
        }
    }))
}

/// Space-time version: Bessel, Riesz and Airy act in mixed or frequency layout,
/// Lambda only in frequency layout.
pub fn apply_multiplier_st(field: &SpaceTimeField, spec: MultiplierSpec) -> Result<SpaceTimeField> {
    match (spec, field.layout()) {
        (MultiplierSpec::Lambda(_), Layout2D::Frequency) => {}
        (MultiplierSpec::Lambda(_), _) => field.expect_layout(Layout2D::Frequency)?,
        (_, Layout2D::Physical) => field.expect_layout(Layout2D::Mixed)?,
        _ => {}
    }
    let grid = *field.grid();
    let zero = grid.space.zero_index();
    if spec.symbol(0.0, 0.0).is_none() && field.row(zero).iter().any(|c| c.norm() != 0.0) {
        return Err(singular(&spec));
    }
    let nt = grid.n_times();
    let mut out = field.clone();
    let coeffs = out.coeffs_mut();
    for i in 0..grid.space.n_modes() {
        let xi = grid.space.xi(i);
        for n in 0..nt {
            let sym = match spec {
                MultiplierSpec::Lambda(_) => spec.symbol(xi, grid.tau(n)),
                _ => spec.symbol(xi, 0.0),
            };
            if let Some(sym) = sym {
                coeffs[i * nt + n] *= sym;
            }
        }
    }
    Ok(out)
}
