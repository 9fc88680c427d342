use num_complex::Complex64;

use super::field::{Layout2D, SpaceTimeField};
use super::multiplier::phase;
use crate::error::{LabError, Result};

/// Output of [`duhamel_integral`].
#[derive(Debug, Clone)]
pub struct Duhamel {
    pub field: SpaceTimeField,
    /// Largest phase increment `|xi|^3 dt` over modes carrying forcing above
    /// 1e-12 of its peak. Trapezoid accuracy degrades once this nears 1.
    pub max_phase_step: f64,
}

impl Duhamel {
    /// Resolution warning when the phase step exceeds `limit`.
    pub fn resolution_warning(&self, limit: f64) -> Option<String> {
        (self.max_phase_step > limit).then(|| {
            format!(
                "time grid too coarse for the Airy phase: |xi|^3 dt = {:.3} > {limit}",
                self.max_phase_step
            )
        })
    }
}

/// Retarded Duhamel integral `v(t) = int_0^t U(t - t') F(t') dt'` of a
/// mixed-layout forcing, by composite trapezoid on the stored time nodes.
///
/// The time grid must contain `t = 0` as a node; `v` vanishes there exactly
/// and for earlier nodes the integral runs backwards.
pub fn duhamel_integral(forcing: &SpaceTimeField) -> Result<Duhamel> {
    forcing.expect_layout(Layout2D::Mixed)?;
    let grid = *forcing.grid();
    let n0 = grid.zero_time_index().ok_or_else(|| {
        LabError::Precondition("duhamel_integral needs t = 0 among the time nodes".into())
    })?;
    let nt = grid.n_times();
    let dt = grid.dt();
    let ts = grid.times();
    let peak = forcing.max_abs();
    let mut max_phase_step: f64 = 0.0;
    let mut out = SpaceTimeField::zeros(grid, Layout2D::Mixed);
    let coeffs = out.coeffs_mut();
    let zero = Complex64::new(0.0, 0.0);
    for i in 0..grid.space.n_modes() {
        let xi = grid.space.xi(i);
        let w = phase(xi);
        let row = forcing.row(i);
        if row.iter().any(|c| c.norm() > 1e-12 * peak) {
            max_phase_step = max_phase_step.max(w.abs() * dt);
        }
        // integrand U(-t') F(t') in xi
        let pulled: Vec<Complex64> = row
            .iter()
            .zip(&ts)
            .map(|(&f, &t)| f * Complex64::from_polar(1.0, -t * w))
            .collect();
        let dst = &mut coeffs[i * nt..(i + 1) * nt];
        let mut acc = zero;
        dst[n0] = zero;
        for n in n0 + 1..nt {
            acc += 0.5 * dt * (pulled[n - 1] + pulled[n]);
            dst[n] = acc * Complex64::from_polar(1.0, ts[n] * w);
        }
        acc = zero;
        for n in (0..n0).rev() {
            acc -= 0.5 * dt * (pulled[n + 1] + pulled[n]);
            dst[n] = acc * Complex64::from_polar(1.0, ts[n] * w);
        }
    }
    Ok(Duhamel {
        field: out,
        max_phase_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::{Grid1D, Representation, SpaceTimeGrid};
    use std::f64::consts::PI;

    fn st_grid(nt: usize) -> SpaceTimeGrid {
        let g = Grid1D::new(PI, 16, Representation::Quadrature).unwrap(); // dxi = 1
        SpaceTimeGrid::new(g, nt, -0.5, 1.5).unwrap()
    }

    #[test]
    fn zero_forcing() {
        let f = SpaceTimeField::zeros(st_grid(16), Layout2D::Mixed);
        let d = duhamel_integral(&f).unwrap();
        assert_eq!(d.field.max_abs(), 0.0);
    }

    #[test]
    fn free_wave_forcing_is_exact() {
        // F(t') = U(t') g  =>  v(t) = t U(t) g
        let grid = st_grid(32);
        let g = |xi: f64| Complex64::new((-xi * xi / 4.0).exp(), 0.1 * xi);
        let f = SpaceTimeField::from_mixed_fn(grid, |xi, t| g(xi) * Complex64::from_polar(1.0, t * phase(xi)));
        let d = duhamel_integral(&f).unwrap();
        let exact = SpaceTimeField::from_mixed_fn(grid, |xi, t| t * g(xi) * Complex64::from_polar(1.0, t * phase(xi)));
        let err = d.field.axpby(Complex64::new(1.0, 0.0), &exact, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(err.max_abs() < 1e-13);
        let n0 = grid.zero_time_index().unwrap();
        assert!(d.field.column(n0).iter().all(|c| *c == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn single_mode_oscillatory_forcing_converges_second_order() {
        // F(t') = exp(i w t') delta_xi, xi = 1:
        // v(t) = exp(i t xi^3) (exp(i t (w - xi^3)) - 1) / (i (w - xi^3))
        let omega = 2.5;
        let exact = |t: f64| {
            let d = omega - 1.0;
            Complex64::from_polar(1.0, t) * (Complex64::from_polar(1.0, t * d) - 1.0) / Complex64::new(0.0, d)
        };
        let mut errs = Vec::new();
        for nt in [64usize, 128, 256] {
            let grid = st_grid(nt);
            let f = SpaceTimeField::from_mixed_fn(grid, |xi, t| {
                if xi == 1.0 {
                    Complex64::from_polar(1.0, omega * t)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let d = duhamel_integral(&f).unwrap();
            let i1 = grid.space.index_of_mode(1).unwrap();
            let e = (0..nt)
                .map(|n| (d.field.get(i1, n) - exact(grid.t(n))).norm())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[2] < 1e-4, "{errs:?}");
        let rate = errs[1] / errs[2];
        assert!((3.5..4.5).contains(&rate), "{errs:?}");
    }

    #[test]
    fn linearity() {
        let grid = st_grid(32);
        let f = SpaceTimeField::from_mixed_fn(grid, |xi, t| Complex64::new((t * xi).sin(), t));
        let g = SpaceTimeField::from_mixed_fn(grid, |xi, t| Complex64::new(xi.cos(), -t * t));
        let (a, b) = (Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.5));
        let lhs = duhamel_integral(&f.axpby(a, &g, b).unwrap()).unwrap().field;
        let rhs = duhamel_integral(&f)
            .unwrap()
            .field
            .axpby(a, &duhamel_integral(&g).unwrap().field, b)
            .unwrap();
        let err = lhs.axpby(Complex64::new(1.0, 0.0), &rhs, Complex64::new(-1.0, 0.0)).unwrap();
        assert!(err.max_abs() < 1e-12);
    }

    #[test]
    fn needs_zero_node_and_mixed_layout() {
        let g = Grid1D::new(PI, 16, Representation::Quadrature).unwrap();
        let grid = SpaceTimeGrid::new(g, 10, 0.05, 1.0).unwrap();
        assert!(duhamel_integral(&SpaceTimeField::zeros(grid, Layout2D::Mixed)).is_err());
        assert!(duhamel_integral(&SpaceTimeField::zeros(st_grid(16), Layout2D::Physical)).is_err());
    }

    #[test]
    fn coarse_grid_warns() {
        let grid = st_grid(16);
        let f = SpaceTimeField::from_mixed_fn(grid, |_, _| Complex64::new(1.0, 0.0));
        let d = duhamel_integral(&f).unwrap();
        assert!(d.resolution_warning(0.5).is_some());
    }
}
