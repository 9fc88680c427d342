use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::{Grid1D, SpaceTimeGrid};
use crate::error::{LabError, Result};

/// Layout of a one-dimensional field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout1D {
    Physical,
    Frequency,
}

impl Layout1D {
    fn name(self) -> &'static str {
        match self {
            Layout1D::Physical => "physical",
            Layout1D::Frequency => "frequency",
        }
    }
}

/// A function on a [`Grid1D`], stored either as samples `u(x_j)` or as
/// centered frequency coefficients `u_hat(xi_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid1D,
    coeffs: Vec<Complex64>,
    layout: Layout1D,
    real: bool,
}

fn hermitian(coeffs: &[Complex64]) -> bool {
    let n = coeffs.len();
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale;
    if coeffs[0].im.abs() > tol {
        return false;
    }
    (1..n).all(|i| (coeffs[i] - coeffs[n - i].conj()).norm() <= tol)
}

impl SpectralField {
    pub fn from_frequency(grid: Grid1D, coeffs: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, coeffs.len())?;
        let real = hermitian(&coeffs);
        Ok(Self {
            grid,
            coeffs,
            layout: Layout1D::Frequency,
            real,
        })
    }

    pub fn from_physical(grid: Grid1D, samples: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, samples.len())?;
        let scale = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let real = samples.iter().all(|c| c.im.abs() <= 1e-12 * scale.max(1e-300));
        Ok(Self {
            grid,
            coeffs: samples,
            layout: Layout1D::Physical,
            real,
        })
    }

    pub fn from_real_samples(grid: Grid1D, samples: &[f64]) -> Result<Self> {
        Self::from_physical(grid, samples.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Frequency-layout field with `u_hat(xi_k) = profile(xi_k)`.
    pub fn from_profile(grid: Grid1D, profile: impl Fn(f64) -> Complex64) -> Self {
        let coeffs = grid.xis().into_iter().map(profile).collect();
        Self::from_frequency(grid, coeffs).expect("length matches by construction")
    }

    /// Physical-layout field with `u(x_j) = f(x_j)`.
    pub fn from_physical_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.xs().into_iter().map(f).collect();
        Self::from_real_samples(grid, &samples).expect("length matches by construction")
    }

    pub fn zeros(grid: Grid1D, layout: Layout1D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
            layout,
            real: true,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn layout(&self) -> Layout1D {
        self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// True when the field represents a real function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn expect_layout(&self, layout: Layout1D) -> Result<()> {
        if self.layout != layout {
            return Err(LabError::Layout {
                expected: layout.name(),
                found: self.layout.name(),
            });
        }
        Ok(())
    }

    pub fn to_frequency(&self) -> Result<Self> {
        self.expect_layout(Layout1D::Physical)?;
        let mut buf = self.coeffs.clone();
        fft::space_forward(&mut buf, self.grid.dx());
        if self.real {
            enforce_hermitian(&mut buf);
        }
        Ok(Self {
            grid: self.grid,
            coeffs: buf,
            layout: Layout1D::Frequency,
            real: self.real,
        })
    }

    pub fn to_physical(&self) -> Result<Self> {
        self.expect_layout(Layout1D::Frequency)?;
        let mut buf = self.coeffs.clone();
        fft::space_inverse(&mut buf, self.grid.dxi());
        if self.real {
            for v in &mut buf {
                v.im = 0.0;
            }
        }
        Ok(Self {
            grid: self.grid,
            coeffs: buf,
            layout: Layout1D::Physical,
            real: self.real,
        })
    }

    /// `(integral |u|^2)^{1/2}` evaluated in whichever layout the field is in,
    /// with the matching quadrature weights.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = match self.layout {
            Layout1D::Physical => self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx(),
            Layout1D::Frequency => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| self.grid.weight(i) * c.norm_sqr())
                .sum(),
        };
        s.sqrt()
    }

    pub(crate) fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        let real = match self.layout {
            Layout1D::Frequency => hermitian(&coeffs),
            Layout1D::Physical => coeffs.iter().all(|c| c.im == 0.0),
        };
        Self {
            grid: self.grid,
            coeffs,
            layout: self.layout,
            real,
        }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &SpectralField, b: f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) || self.layout != other.layout {
            return Err(LabError::Shape("axpby needs identical grids and layouts".into()));
        }
        Ok(self.map_coeffs(|i, c| a * c + b * other.coeffs[i]))
    }
}

fn check_len(grid: &Grid1D, len: usize) -> Result<()> {
    if len != grid.n_modes() {
        return Err(LabError::Shape(format!(
            "expected {} samples, got {len}",
            grid.n_modes()
        )));
    }
    Ok(())
}

fn enforce_hermitian(buf: &mut [Complex64]) {
    let n = buf.len();
    buf[0].im = 0.0;
    buf[n / 2].im = 0.0;
    for i in 1..n / 2 {
        let avg = 0.5 * (buf[i] + buf[n - i].conj());
        buf[i] = avg;
        buf[n - i] = avg.conj();
    }
}

/// Layout of a space-time field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout2D {
    /// `(x, t)` samples.
    Physical,
    /// `(xi, t)`: spatial transform only.
    Mixed,
    /// `(xi, tau)`.
    Frequency,
}

impl Layout2D {
    fn name(self) -> &'static str {
        match self {
            Layout2D::Physical => "physical (x,t)",
            Layout2D::Mixed => "mixed (xi,t)",
            Layout2D::Frequency => "frequency (xi,tau)",
        }
    }
}

/// Complex samples on a [`SpaceTimeGrid`], stored row-major with the space
/// (or xi) index outermost: entry `(i, n)` lives at `i * n_times + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: SpaceTimeGrid,
    coeffs: Vec<Complex64>,
    layout: Layout2D,
}

impl SpaceTimeField {
    pub fn new(grid: SpaceTimeGrid, coeffs: Vec<Complex64>, layout: Layout2D) -> Result<Self> {
        if coeffs.len() != grid.size() {
            return Err(LabError::Shape(format!(
                "expected {} samples, got {}",
                grid.size(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs, layout })
    }

    pub fn zeros(grid: SpaceTimeGrid, layout: Layout2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.size()],
            layout,
        }
    }

    /// Build from `f(i, n)` where `i` is the space/xi index and `n` the time/tau index.
    pub fn from_index_fn(
        grid: SpaceTimeGrid,
        layout: Layout2D,
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Self {
        let nt = grid.n_times();
        let coeffs = (0..grid.size()).map(|p| f(p / nt, p % nt)).collect();
        Self { grid, coeffs, layout }
    }

    /// Mixed-layout field with entries `f(xi, t)`.
    pub fn from_mixed_fn(grid: SpaceTimeGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xis = grid.space.xis();
        let ts = grid.times();
        Self::from_index_fn(grid, Layout2D::Mixed, |i, n| f(xis[i], ts[n]))
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn layout(&self) -> Layout2D {
        self.layout
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, i: usize, n: usize) -> Complex64 {
        self.coeffs[i * self.grid.n_times() + n]
    }

    /// Row `i` (all times or all tau for a fixed x / xi).
    pub fn row(&self, i: usize) -> &[Complex64] {
        let nt = self.grid.n_times();
        &self.coeffs[i * nt..(i + 1) * nt]
    }

    /// Column `n` (all x or xi at a fixed time / tau).
    pub fn column(&self, n: usize) -> Vec<Complex64> {
        let nt = self.grid.n_times();
        (0..self.grid.space.n_modes()).map(|i| self.coeffs[i * nt + n]).collect()
    }

    pub fn set_column(&mut self, n: usize, col: &[Complex64]) {
        let nt = self.grid.n_times();
        for (i, &v) in col.iter().enumerate() {
            self.coeffs[i * nt + n] = v;
        }
    }

    /// Spatial slice at time index `n` of a mixed-layout field.
    pub fn slice_at(&self, n: usize) -> Result<SpectralField> {
        self.expect_layout(Layout2D::Mixed)?;
        SpectralField::from_frequency(self.grid.space, self.column(n))
    }

    pub fn expect_layout(&self, layout: Layout2D) -> Result<()> {
        if self.layout != layout {
            return Err(LabError::Layout {
                expected: layout.name(),
                found: self.layout.name(),
            });
        }
        Ok(())
    }

    fn space_pass(&self, forward: bool) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        let nt = self.grid.n_times();
        let nx = self.grid.space.n_modes();
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        for n in 0..nt {
            for i in 0..nx {
                buf[i] = out[i * nt + n];
            }
            if forward {
                fft::space_forward(&mut buf, self.grid.space.dx());
            } else {
                fft::space_inverse(&mut buf, self.grid.space.dxi());
            }
            for i in 0..nx {
                out[i * nt + n] = buf[i];
            }
        }
        out
    }

    fn time_pass(&self, forward: bool) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        let nt = self.grid.n_times();
        let (t_lo, dt) = (self.grid.t_lo(), self.grid.dt());
        for row in out.chunks_mut(nt) {
            if forward {
                fft::time_forward(row, t_lo, dt);
            } else {
                fft::time_inverse(row, t_lo, dt);
            }
        }
        out
    }

    /// Physical or mixed layout to `(xi, tau)`.
    pub fn to_frequency(&self) -> Result<Self> {
        let mixed = match self.layout {
            Layout2D::Physical => self.to_mixed()?,
            Layout2D::Mixed => self.clone(),
            Layout2D::Frequency => {
                return Err(LabError::Layout {
                    expected: "physical (x,t) or mixed (xi,t)",
                    found: self.layout.name(),
                })
            }
        };
        Ok(Self {
            grid: self.grid,
            coeffs: mixed.time_pass(true),
            layout: Layout2D::Frequency,
        })
    }

    /// Frequency or mixed layout to `(x, t)`.
    pub fn to_physical(&self) -> Result<Self> {
        let mixed = match self.layout {
            Layout2D::Frequency => self.to_mixed()?,
            Layout2D::Mixed => self.clone(),
            Layout2D::Physical => {
                return Err(LabError::Layout {
                    expected: "frequency (xi,tau) or mixed (xi,t)",
                    found: self.layout.name(),
                })
            }
        };
        Ok(Self {
            grid: self.grid,
            coeffs: mixed.space_pass(false),
            layout: Layout2D::Physical,
        })
    }

    /// Physical or frequency layout to `(xi, t)`.
    pub fn to_mixed(&self) -> Result<Self> {
        let coeffs = match self.layout {
            Layout2D::Physical => self.space_pass(true),
            Layout2D::Frequency => self.time_pass(false),
            Layout2D::Mixed => {
                return Err(LabError::Layout {
                    expected: "physical (x,t) or frequency (xi,tau)",
                    found: self.layout.name(),
                })
            }
        };
        Ok(Self {
            grid: self.grid,
            coeffs,
            layout: Layout2D::Mixed,
        })
    }

    /// Discrete L^2_{xt} norm with the weights of the current layout.
    pub fn l2_norm(&self) -> f64 {
        let sp = &self.grid.space;
        let nt = self.grid.n_times();
        let s: f64 = match self.layout {
            Layout2D::Physical => {
                self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * sp.dx() * self.grid.dt()
            }
            Layout2D::Mixed | Layout2D::Frequency => {
                let tw = if self.layout == Layout2D::Mixed {
                    self.grid.dt()
                } else {
                    self.grid.dtau()
                };
                self.coeffs
                    .chunks(nt)
                    .enumerate()
                    .map(|(i, row)| sp.weight(i) * tw * row.iter().map(|c| c.norm_sqr()).sum::<f64>())
                    .sum()
            }
        };
        s.sqrt()
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: Complex64, other: &SpaceTimeField, b: Complex64) -> Result<Self> {
        if self.grid != other.grid || self.layout != other.layout {
            return Err(LabError::Shape("axpby needs identical grids and layouts".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Ok(Self {
            grid: self.grid,
            coeffs,
            layout: self.layout,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
