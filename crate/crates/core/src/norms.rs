//! Fourier-Lebesgue norms `H^r_s`, their space-time versions `H^r_{s,b}` and
//! `X^r_{s,b}`, and mixed Lebesgue norms `L^p_t(H^{sigma,q}_x)`.
//!
//! Every integral is a weighted sum with the grid quadrature weights, so at
//! `r = 2` the frequency-side norms agree with the physical-side `L^2` norms to
//! rounding.

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{
    apply_multiplier, bracket, fft, phase, Layout1D, Layout2D, MultiplierSpec, SpaceTimeField,
    SpectralField,
};

/// Lebesgue exponent `r` stored through its reciprocal, so that
/// `1/r + 1/r' = 1` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Exponent {
    inv: Ratio<i64>,
}

impl Exponent {
    /// `r` given as an exact rational; `r >= 1`.
    pub fn from_ratio(r: Ratio<i64>) -> Result<Self> {
        if r < Ratio::one() {
            return Err(LabError::Parameter(format!("exponent must be >= 1, got {r}")));
        }
        Ok(Self { inv: r.recip() })
    }

    /// `r` from a float; rationalised with denominators up to 10^6.
    pub fn from_f64(r: f64) -> Result<Self> {
        if r.is_infinite() && r > 0.0 {
            return Ok(Self::infinity());
        }
        let q = Ratio::<i64>::approximate_float(r)
            .filter(|q| ((q.to_f64().unwrap_or(f64::NAN) - r) / r).abs() < 1e-12)
            .or_else(|| {
                let den = 1_000_000i64;
                Some(Ratio::new((r * den as f64).round() as i64, den))
            })
            .ok_or_else(|| LabError::Parameter(format!("cannot represent exponent {r}")))?;
        Self::from_ratio(q)
    }

    pub fn infinity() -> Self {
        Self { inv: Ratio::zero() }
    }

    pub fn inverse(&self) -> Ratio<i64> {
        self.inv
    }

    pub fn value(&self) -> f64 {
        if self.inv.is_zero() {
            f64::INFINITY
        } else {
            self.inv.recip().to_f64().expect("finite")
        }
    }

    /// Hölder conjugate `r'`.
    pub fn conjugate(&self) -> Self {
        Self {
            inv: Ratio::one() - self.inv,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.inv.is_zero()
    }
}

/// `(r, s, b)` with the conjugate exponent derived exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub r: Exponent,
    pub s: f64,
    pub b: f64,
}

impl NormParams {
    /// `r` must exceed 1. Values above 2 are allowed for the dual spaces
    /// `X^{r'}` that appear on the left of dual estimates.
    pub fn new(r: f64, s: f64, b: f64) -> Result<Self> {
        if !(r > 1.0) {
            return Err(LabError::Parameter(format!("r must exceed 1, got {r}")));
        }
        Ok(Self {
            r: Exponent::from_f64(r)?,
            s,
            b,
        })
    }

    pub fn from_exponent(r: Exponent, s: f64, b: f64) -> Result<Self> {
        if r.inverse() >= Ratio::one() {
            return Err(LabError::Parameter("r must exceed 1".into()));
        }
        Ok(Self { r, s, b })
    }

    pub fn r(&self) -> f64 {
        self.r.value()
    }

    /// The integration exponent `r'`.
    pub fn r_conj(&self) -> f64 {
        self.r.conjugate().value()
    }
}

/// Parameters of `L^p_t(H^{sigma,q}_x)` or its homogeneous variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub homogeneous: bool,
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64, sigma: f64, homogeneous: bool) -> Result<Self> {
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(LabError::Parameter(format!("p, q must be >= 1, got p = {p}, q = {q}")));
        }
        Ok(Self {
            p,
            q,
            sigma,
            homogeneous,
        })
    }

    pub fn lebesgue(p: f64) -> Result<Self> {
        Self::new(p, p, 0.0, true)
    }
}

/// Accumulates `(sum w |f|^p)^{1/p}`, or the max for `p = inf`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LpAccumulator {
    p: f64,
    acc: f64,
}

impl LpAccumulator {
    pub(crate) fn new(p: f64) -> Self {
        Self { p, acc: 0.0 }
    }

    #[inline]
    pub(crate) fn add(&mut self, weight: f64, modulus: f64) {
        if self.p.is_infinite() {
            if weight > 0.0 {
                self.acc = self.acc.max(modulus);
            }
        } else if modulus > 0.0 {
            self.acc += weight * modulus.powf(self.p);
        }
    }

    pub(crate) fn finish(self) -> f64 {
        if self.p.is_infinite() {
            self.acc
        } else {
            self.acc.powf(1.0 / self.p)
        }
    }
}

/// `||<xi>^s u_hat||_{L^{r'}_xi}`.
pub fn fl_norm(u: &SpectralField, r: f64, s: f64) -> Result<f64> {
    let params = NormParams::new(r, s, 0.0)?;
    fl_norm_with(u, &params)
}

pub fn fl_norm_with(u: &SpectralField, params: &NormParams) -> Result<f64> {
    u.expect_layout(Layout1D::Frequency)?;
    let g = u.grid();
    let mut acc = LpAccumulator::new(params.r_conj());
    for (i, c) in u.coeffs().iter().enumerate() {
        acc.add(g.weight(i), bracket(g.xi(i)).powf(params.s) * c.norm());
    }
    Ok(acc.finish())
}

/// `int_{x - h/2}^{x + h/2} <y>^beta dy` by two-point Gauss rules on
/// subcells short against the distance to the origin, so that coarse
/// `tau` grids still see the weight's O(1) scale near `tau = 0`.
pub fn cell_weight(x: f64, h: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return h;
    }
    let scale = (x.abs() - 0.5 * h).max(1.0);
    let n = ((2.0 * h / scale).ceil() as usize).clamp(1, 4096);
    let sub = h / n as f64;
    let g = 0.5 * sub / 3f64.sqrt();
    (0..n)
        .map(|k| {
            let c = x - 0.5 * h + (k as f64 + 0.5) * sub;
            0.5 * sub * (bracket(c - g).powf(beta) + bracket(c + g).powf(beta))
        })
        .sum()
}

/// `tau` weights of one row: `<tau - centre>^{b p}` integrated over each cell,
/// or the pointwise `<tau - centre>^b` factor when `p = inf`.
fn tau_weights(taus: &[f64], dtau: f64, centre: f64, b: f64, p: f64) -> Vec<f64> {
    if p.is_infinite() {
        taus.iter().map(|&t| bracket(t - centre).powf(b)).collect()
    } else {
        taus.iter().map(|&t| cell_weight(t - centre, dtau, b * p)).collect()
    }
}

fn space_time_norm(
    f: &SpaceTimeField,
    params: &NormParams,
    shift: impl Fn(f64) -> f64,
) -> Result<f64> {
    f.expect_layout(Layout2D::Frequency)?;
    let grid = f.grid();
    let sp = &grid.space;
    let dtau = grid.dtau();
    let p = params.r_conj();
    let taus: Vec<f64> = (0..grid.n_times()).map(|m| grid.tau(m)).collect();
    let mut acc = LpAccumulator::new(p);
    let mut cached: Option<(f64, Vec<f64>)> = None;
    for i in 0..sp.n_modes() {
        let row = f.row(i);
        if row.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let xi = sp.xi(i);
        let sw = bracket(xi).powf(params.s);
        let centre = shift(xi);
        if cached.as_ref().map_or(true, |(c, _)| *c != centre) {
            cached = Some((centre, tau_weights(&taus, dtau, centre, params.b, p)));
        }
        let tw = &cached.as_ref().expect("weights cached above").1;
        for (c, w) in row.iter().zip(tw) {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            if p.is_infinite() {
                acc.add(1.0, sw * w * c.norm());
            } else {
                acc.add(sp.weight(i) * w, sw * c.norm());
            }
        }
    }
    Ok(acc.finish())
}

/// `X^r_{s,b}` norm with weight `<xi>^s <tau - xi^3>^b` of a `(xi, tau)` field.
pub fn xrsb_norm(f: &SpaceTimeField, params: &NormParams) -> Result<f64> {
    space_time_norm(f, params, phase)
}

/// `H^r_{s,b}` norm with weight `<xi>^s <tau>^b`.
pub fn hrsb_norm(f: &SpaceTimeField, params: &NormParams) -> Result<f64> {
    space_time_norm(f, params, |_| 0.0)
}

/// `||<tau>^b g_hat||_{L^{r'}_tau}` of a function of time sampled on a
/// periodic window starting at `t_lo` with step `dt`.
pub fn time_fl_norm(samples: &[Complex64], t_lo: f64, dt: f64, r: f64, b: f64) -> Result<f64> {
    let params = NormParams::new(r, 0.0, b)?;
    let p = params.r_conj();
    let mut buf = samples.to_vec();
    fft::time_forward(&mut buf, t_lo, dt);
    let m_len = buf.len();
    let dtau = 2.0 * std::f64::consts::PI / (dt * m_len as f64);
    let taus: Vec<f64> = (0..m_len).map(|m| (m as f64 - (m_len / 2) as f64) * dtau).collect();
    let tw = tau_weights(&taus, dtau, 0.0, b, p);
    let mut acc = LpAccumulator::new(p);
    for (c, w) in buf.iter().zip(&tw) {
        if p.is_infinite() {
            acc.add(1.0, w * c.norm());
        } else {
            acc.add(*w, c.norm());
        }
    }
    Ok(acc.finish())
}

/// `(int dt ||D^sigma u(t)||_{L^q_x}^p)^{1/p}` with `D = |d/dx|` when
/// homogeneous and `<d/dx>` otherwise; periodic trapezoid in `t`.
pub fn mixed_norm(f: &SpaceTimeField, params: &MixedNormParams) -> Result<f64> {
    let mixed = match f.layout() {
        Layout2D::Mixed => f.clone(),
        Layout2D::Physical => f.to_mixed()?,
        Layout2D::Frequency => {
            return Err(LabError::Layout {
                expected: "physical (x,t) or mixed (xi,t)",
                found: "frequency (xi,tau)",
            })
        }
    };
    let grid = *mixed.grid();
    let spec = if params.homogeneous {
        MultiplierSpec::Riesz(params.sigma)
    } else {
        MultiplierSpec::Bessel(params.sigma)
    };
    let dx = grid.space.dx();
    let mut outer = LpAccumulator::new(params.p);
    for n in 0..grid.n_times() {
        let slice = mixed.slice_at(n)?;
        let slice = if params.sigma == 0.0 {
            slice
        } else {
            apply_multiplier(&slice, spec)?
        };
        let phys = slice.to_physical()?;
        let mut inner = LpAccumulator::new(params.q);
        for c in phys.coeffs() {
            inner.add(dx, c.norm());
        }
        outer.add(grid.dt(), inner.finish());
    }
    Ok(outer.finish())
}

/// `L^q_x` norm of `D^sigma u` for one spatial field (frequency layout).
pub fn spatial_lq_norm(u: &SpectralField, q: f64, sigma: f64, homogeneous: bool) -> Result<f64> {
    let spec = if homogeneous {
        MultiplierSpec::Riesz(sigma)
    } else {
        MultiplierSpec::Bessel(sigma)
    };
    let v = if sigma == 0.0 { u.clone() } else { apply_multiplier(u, spec)? };
    let phys = v.to_physical()?;
    let dx = u.grid().dx();
    let mut acc = LpAccumulator::new(q);
    for c in phys.coeffs() {
        acc.add(dx, c.norm());
    }
    Ok(acc.finish())
}

/// Regularity threshold `s(r) = 1/2 - 1/(2r)` on the range `4/3 < r <= 2`.
pub fn scale_exponent(r: f64) -> Result<f64> {
    let exact = scale_exponent_exact(Exponent::from_f64(r)?)?;
    Ok(exact.to_f64().expect("finite"))
}

pub fn scale_exponent_exact(r: Exponent) -> Result<Ratio<i64>> {
    let inv = r.inverse();
    // 4/3 < r <= 2  <=>  1/2 <= 1/r < 3/4
    if !(inv >= Ratio::new(1, 2) && inv < Ratio::new(3, 4)) {
        return Err(LabError::Parameter(format!(
            "r = {} outside the range 2 >= r > 4/3 of the trilinear estimate",
            inv.recip()
        )));
    }
    Ok(Ratio::new(1, 2) - inv / 2)
}
