//! Conserved quantities of mKdV and the travelling kink.
//!
//! For `u_t + u_xxx = (u^3)_x`, written `u_t = d_x(u^3 - u_xx)`, the mass
//! `int u`, the `L^2` norm `int u^2` and `H = int (u_x^2 / 2 + u^4 / 4)` are
//! conserved.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{fft, Layout1D, SpectralField};

/// Largest imaginary part tolerated in a real field, relative to `max(1, sup |u|)`.
pub const REALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conserved {
    pub mass: f64,
    pub l2: f64,
    pub hamiltonian: f64,
}

/// Physical samples of a field in either layout.
fn samples(u: &SpectralField) -> Result<Vec<Complex64>> {
    Ok(match u.layout() {
        Layout1D::Physical => u.coeffs().to_vec(),
        Layout1D::Frequency => u.to_physical()?.into_coeffs(),
    })
}

/// `max |Im u(x_j)| / max(1, sup |u|)`.
pub fn imaginary_residue(u: &SpectralField) -> Result<f64> {
    let s = samples(u)?;
    let scale = s.iter().map(|c| c.norm()).fold(1.0, f64::max);
    Ok(s.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / scale)
}

pub fn check_real(u: &SpectralField) -> Result<()> {
    let r = imaginary_residue(u)?;
    if r > REALITY_TOL {
        return Err(LabError::Reality(r));
    }
    Ok(())
}

/// Mass, `L^2` norm squared and Hamiltonian by the periodic trapezoid rule,
/// with `u_x` taken spectrally.
pub fn conserved_quantities(u: &SpectralField) -> Result<Conserved> {
    check_real(u)?;
    let grid = *u.grid();
    let phys = samples(u)?;
    let mut ux = match u.layout() {
        Layout1D::Frequency => u.coeffs().to_vec(),
        Layout1D::Physical => u.to_frequency()?.into_coeffs(),
    };
    for (c, xi) in ux.iter_mut().zip(grid.xis()) {
        *c *= Complex64::new(0.0, xi);
    }
    fft::space_inverse(&mut ux, grid.dxi());
    let dx = grid.dx();
    let (mut mass, mut l2, mut h) = (0.0, 0.0, 0.0);
    for (v, d) in phys.iter().zip(&ux) {
        let (v, d) = (v.re, d.re);
        mass += v;
        l2 += v * v;
        h += 0.5 * d * d + 0.25 * v * v * v * v;
    }
    Ok(Conserved {
        mass: mass * dx,
        l2: l2 * dx,
        hamiltonian: h * dx,
    })
}

/// The kink `u = sqrt(2) b tanh(b (x + 2 b^2 t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub b: f64,
}

impl Kink {
    fn z(&self, x: f64, t: f64) -> f64 {
        self.b * (x + 2.0 * self.b * self.b * t)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        2f64.sqrt() * self.b * self.z(x, t).tanh()
    }

    /// `u_t + u_xxx - (u^3)_x` at `(x, t)`, each term from the chain rule on
    /// `tanh' = sech^2`, `(sech^2)' = -2 tanh sech^2`.
    pub fn residual(&self, x: f64, t: f64) -> f64 {
        self.residual_with_amplitude(2f64.sqrt() * self.b, x, t)
    }

    fn residual_with_amplitude(&self, a: f64, x: f64, t: f64) -> f64 {
        let b = self.b;
        let th = self.z(x, t).tanh();
        let s2 = 1.0 - th * th;
        let u = a * th;
        let u_z = a * s2;
        let u_zzz = a * (4.0 * th * th * s2 - 2.0 * s2 * s2);
        let u_t = 2.0 * b.powi(3) * u_z;
        let u_x = b * u_z;
        let u_xxx = b.powi(3) * u_zzz;
        u_t + u_xxx - 3.0 * u * u * u_x
    }

    /// Largest `|residual|` over the points, scaled by the size `b^4` of
    /// the individual terms.
    pub fn max_residual(&self, xs: &[f64], ts: &[f64]) -> f64 {
        let scale = self.b.powi(4).max(f64::MIN_POSITIVE);
        ts.iter()
            .flat_map(|&t| xs.iter().map(move |&x| self.residual(x, t).abs()))
            .fold(0.0, f64::max)
            / scale
    }
}
