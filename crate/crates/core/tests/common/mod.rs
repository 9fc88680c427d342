//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls the closed forms it is used to check.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

/// `u_hat(xi) = amp * exp(-(xi - center)^2 / (2 width^2)) * exp(-i shift xi)`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub amp: Complex64,
    pub center: f64,
    pub width: f64,
    pub shift: f64,
}

impl Gaussian {
    pub fn eval(&self, xi: f64) -> Complex64 {
        let d = (xi - self.center) / self.width;
        self.amp * Complex64::from_polar((-0.5 * d * d).exp(), -self.shift * xi)
    }

    /// Interval outside which the modulus drops below `exp(-cut)` of its peak.
    pub fn support(&self, cut: f64) -> (f64, f64) {
        let r = self.width * (2.0 * cut).sqrt();
        (self.center - r, self.center + r)
    }
}

pub struct BruteForce {
    pub value: f64,
    /// Share of the value carried by the analytic tail beyond `|s| > S`.
    pub tail_fraction: f64,
}

const GAMMA_3_4: f64 = 1.225_416_702_465_177_6;

/// `||I^{1/2} I^{1/2}_-(U u1, U u2)||^2_{L^2_{xt}}` by direct quadrature.
///
/// Plancherel in `x` leaves `int dt int dxi |B(xi, t)|^2` with
/// `B = (2 pi)^{-1/2} |xi|^{1/2} int dxi1 |xi1 - xi2|^{1/2} exp(i t (xi1^3 + xi2^3)) u1_hat u2_hat`.
/// Writing `xi1 = xi/2 + eta` makes the phase `t xi^3/4 + 3 t xi eta^2`, and
/// `s = 3 xi t` turns each `xi`-slice into `(6 pi)^{-1} int ds |F(xi, s)|^2` with
/// `F(xi, s) = int deta |2 eta|^{1/2} exp(i s eta^2) u1_hat(xi/2 + eta) u2_hat(xi/2 - eta)`.
/// The `s`-window `[-S, S]` is closed on both sides by the stationary-phase tail
/// `|F|^2 ~ 2 Gamma(3/4)^2 |u1_hat(xi/2) u2_hat(xi/2)|^2 |s|^{-3/2}`.
/// The `eta` step is capped so that the phase `s eta^2` advances by at most
/// `pi/2` per step anywhere in the window.
pub fn lemma3_brute_force(u1: &Gaussian, u2: &Gaussian, s_max: f64, d_eta: f64, d_xi: f64) -> BruteForce {
    let cut = 12.0;
    let (lo1, hi1) = u1.support(cut);
    let (lo2, hi2) = u2.support(cut);
    let eta_max = ((hi1 - lo2).abs()).max((lo1 - hi2).abs()) / 2.0;
    let d_eta = d_eta.min(0.25 * PI / (s_max * eta_max));
    let ds = (0.5 * PI / (eta_max * eta_max)).min(0.05);
    let n_s = (s_max / ds).ceil() as usize;
    let ds = s_max / n_s as f64;
    let k_lo = ((lo1 + lo2) / d_xi).floor() as i64;
    let k_hi = ((hi1 + hi2) / d_xi).ceil() as i64;
    let mut total = 0.0;
    let mut tail = 0.0;
    let mut h = Vec::new();
    let mut p = Vec::new();
    let mut r = Vec::new();
    for k in k_lo..=k_hi {
        let xi = k as f64 * d_xi;
        // xi1 in [lo1, hi1] and xi - xi1 in [lo2, hi2]
        let a = lo1.max(xi - hi2) - xi / 2.0;
        let b = hi1.min(xi - lo2) - xi / 2.0;
        if a >= b {
            continue;
        }
        h.clear();
        p.clear();
        r.clear();
        for j in (a / d_eta).ceil() as i64..=(b / d_eta).floor() as i64 {
            let eta = j as f64 * d_eta;
            let v = (2.0 * eta.abs()).sqrt() * u1.eval(xi / 2.0 + eta) * u2.eval(xi / 2.0 - eta) * d_eta;
            h.push(v);
            p.push(Complex64::new(1.0, 0.0));
            r.push(Complex64::from_polar(1.0, ds * eta * eta));
        }
        let mut acc = 0.0;
        for m in 0..=n_s {
            let mut fp = Complex64::new(0.0, 0.0);
            let mut fm = Complex64::new(0.0, 0.0);
            for ((hv, pv), rv) in h.iter().zip(p.iter_mut()).zip(&r) {
                fp += hv * *pv;
                fm += hv * pv.conj();
                *pv *= rv;
            }
            let w = if m == 0 {
                0.5
            } else if m == n_s {
                0.5
            } else {
                1.0
            };
            acc += w * ds * (fp.norm_sqr() + fm.norm_sqr());
        }
        let h0 = (u1.eval(xi / 2.0) * u2.eval(xi / 2.0)).norm_sqr();
        // int_S^inf 2 Gamma^2 h0 s^{-3/2} ds, once for each sign of s
        let t = 8.0 * GAMMA_3_4 * GAMMA_3_4 * h0 / s_max.sqrt();
        total += d_xi * (acc + t);
        tail += d_xi * t;
    }
    let c = 1.0 / (6.0 * PI);
    BruteForce {
        value: c * total,
        tail_fraction: tail / total,
    }
}
