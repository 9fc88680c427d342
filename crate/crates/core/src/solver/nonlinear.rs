//! The mKdV nonlinearity `d_x(u^3)` on a periodic grid, cubed in physical
//! space with the 2/3 rule applied before and after the product.
//!
//! The 2/3 rule removes quadratic aliasing exactly but not all cubic
//! aliasing, so resolution is checked against a cube computed on a grid of
//! twice the size, which is alias-free on the retained band.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectral::{fft, Grid1D, Representation};

/// Largest tolerated share of the peak, both for the aliasing error of the
/// cube and for the spectrum removed by the 2/3 rule.
pub const ALIAS_TOL: f64 = 1e-10;

/// Dealiased `P i xi ((P u)^3)^` on a fixed grid.
#[derive(Debug, Clone)]
pub struct Cubic {
    grid: Grid1D,
    keep: Vec<bool>,
    xis: Vec<f64>,
}

impl Cubic {
    pub fn new(grid: Grid1D) -> Result<Self> {
        if grid.representation() != Representation::PeriodicFft {
            return Err(LabError::Domain("the solver needs a periodic-FFT grid".into()));
        }
        let n = grid.n_modes() as i64;
        let keep = (0..grid.n_modes()).map(|i| 3 * grid.mode(i).abs() <= n).collect();
        Ok(Self {
            grid,
            keep,
            xis: grid.xis(),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Largest retained `|xi|`.
    pub fn band(&self) -> f64 {
        (self.grid.n_modes() / 3) as f64 * self.grid.dxi()
    }

    /// Zeroes the modes removed by the 2/3 rule.
    pub fn project(&self, c: &mut [Complex64]) {
        for (v, &k) in c.iter_mut().zip(&self.keep) {
            if !k {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// `d_x(u^3)` in frequency for centered coefficients `u_hat`.
    pub fn apply(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let mut buf = u_hat.to_vec();
        self.project(&mut buf);
        fft::space_inverse(&mut buf, self.grid.dxi());
        for v in buf.iter_mut() {
            *v = *v * *v * *v;
        }
        fft::space_forward(&mut buf, self.grid.dx());
        for (v, &xi) in buf.iter_mut().zip(&self.xis) {
            *v *= Complex64::new(0.0, xi);
        }
        self.project(&mut buf);
        buf
    }

    /// `P i xi ((P u)^3)^` computed on a grid with `2N` modes, where the cube
    /// of the retained band does not wrap onto it.
    pub fn apply_padded(&self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.n_modes();
        let offset = n / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (i, (&v, &k)) in u_hat.iter().zip(&self.keep).enumerate() {
            if k {
                buf[i + offset] = v;
            }
        }
        fft::space_inverse(&mut buf, self.grid.dxi());
        for v in buf.iter_mut() {
            *v = *v * *v * *v;
        }
        fft::space_forward(&mut buf, 0.5 * self.grid.dx());
        let mut out: Vec<Complex64> = buf[offset..offset + n].to_vec();
        for (v, &xi) in out.iter_mut().zip(&self.xis) {
            *v *= Complex64::new(0.0, xi);
        }
        self.project(&mut out);
        out
    }

    /// Aliasing error of [`Cubic::apply`], relative to the peak of the
    /// alias-free product.
    pub fn alias_error(&self, u_hat: &[Complex64]) -> f64 {
        let exact = self.apply_padded(u_hat);
        let peak = exact.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let err = self
            .apply(u_hat)
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        err / peak
    }

    /// Resolution check: the 2/3 rule must remove a negligible part of the
    /// spectrum and the in-grid cube must agree with the alias-free one.
    pub fn check_resolved(&self, u_hat: &[Complex64], what: &str) -> Result<()> {
        let peak = u_hat.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let removed = u_hat
            .iter()
            .zip(&self.keep)
            .filter(|(_, &k)| !k)
            .map(|(c, _)| c.norm())
            .fold(0.0, f64::max);
        if removed > ALIAS_TOL * peak {
            return Err(LabError::Resolution(format!(
                "{what}: the 2/3 rule removes {:.2e} of the peak coefficient, refine the grid",
                removed / peak
            )));
        }
        let alias = self.alias_error(u_hat);
        if alias > ALIAS_TOL {
            return Err(LabError::Resolution(format!(
                "{what}: aliasing error of the cubic term is {alias:.2e} of its peak, refine the grid"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralField;

    #[test]
    fn matches_the_analytic_derivative_of_a_cube() {
        let grid = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
        let hat = |f: &dyn Fn(f64) -> f64| SpectralField::from_physical_fn(grid, f).to_frequency().unwrap();
        let u = hat(&|x| 0.3 * (-0.25 * x * x).exp());
        let got = Cubic::new(grid).unwrap().apply(u.coeffs());
        let want = hat(&|x| -1.5 * 0.027 * x * (-0.75 * x * x).exp());
        let err = got.iter().zip(want.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn zero_mode_is_never_forced() {
        let grid = Grid1D::new(10.0, 64, Representation::PeriodicFft).unwrap();
        let u = SpectralField::from_physical_fn(grid, |x| 1.0 + (0.3 * x).sin()).to_frequency().unwrap();
        let c = Cubic::new(grid).unwrap();
        assert_eq!(c.apply(u.coeffs())[grid.zero_index()], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unresolved_data_fail_the_alias_check() {
        let grid = Grid1D::new(20.0, 128, Representation::PeriodicFft).unwrap();
        let c = Cubic::new(grid).unwrap();
        let smooth = SpectralField::from_physical_fn(grid, |x| 0.1 * (-0.125 * x * x).exp()).to_frequency().unwrap();
        assert!(c.check_resolved(smooth.coeffs(), "u0").is_ok());
        let rough = SpectralField::from_physical_fn(grid, |x| (-4.0 * x * x).exp()).to_frequency().unwrap();
        assert!(matches!(c.check_resolved(rough.coeffs(), "u0"), Err(LabError::Resolution(_))));
    }

    #[test]
    fn padded_cube_matches_the_analytic_one() {
        let grid = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
        let hat = |f: &dyn Fn(f64) -> f64| SpectralField::from_physical_fn(grid, f).to_frequency().unwrap();
        let u = hat(&|x| 0.3 * (-0.25 * x * x).exp());
        let c = Cubic::new(grid).unwrap();
        let want = hat(&|x| -1.5 * 0.027 * x * (-0.75 * x * x).exp());
        let err = c.apply_padded(u.coeffs()).iter().zip(want.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
        assert!(c.alias_error(u.coeffs()) < 1e-12);
    }

    #[test]
    fn a_band_limited_wave_at_the_edge_aliases() {
        // cos(k x) with 3k > N/2 puts its third harmonic back on the grid
        let grid = Grid1D::new(std::f64::consts::PI, 64, Representation::PeriodicFft).unwrap();
        let u = SpectralField::from_physical_fn(grid, |x| (20.0 * x).cos()).to_frequency().unwrap();
        let c = Cubic::new(grid).unwrap();
        // the wrapped harmonic lands on mode -4 with weight 4 / 8 against 20 * 3 / 8
        assert!((c.alias_error(u.coeffs()) - 1.0 / 15.0).abs() < 1e-12);
        assert!(matches!(c.check_resolved(u.coeffs(), "u"), Err(LabError::Resolution(_))));
    }
}
