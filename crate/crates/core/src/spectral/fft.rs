//! Thin wrapper over `rustfft` with the grid conventions used everywhere else.
//!
//! Forward transforms approximate the unitary transform
//! `u_hat(xi) = (2 pi)^{-1/2} * integral of exp(-i x xi) u(x) dx`
//! on grids whose first node sits at `-L` (space) or `t_lo` (time).

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized DFT; `inverse` selects the `exp(+i ...)` kernel.
pub fn dft_in_place(buf: &mut [Complex64], inverse: bool) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let plan = if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        };
        plan.process(buf);
    });
}

fn alternate(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples at `x_j = -L + j dx` to centered coefficients at `xi_i = (i - N/2) dxi`.
pub fn space_forward(buf: &mut [Complex64], dx: f64) {
    let n = buf.len();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= alternate(j);
    }
    dft_in_place(buf, false);
    let c = dx / (2.0 * PI).sqrt();
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= c * alternate(i + n / 2);
    }
}

pub fn space_inverse(buf: &mut [Complex64], dxi: f64) {
    let n = buf.len();
    for (i, v) in buf.iter_mut().enumerate() {
        *v *= alternate(i + n / 2);
    }
    dft_in_place(buf, true);
    let c = dxi / (2.0 * PI).sqrt();
    for (j, v) in buf.iter_mut().enumerate() {
        *v *= c * alternate(j);
    }
}

/// Samples at `t_n = t_lo + n dt` to centered coefficients at `tau_m = (m - M/2) dtau`.
pub fn time_forward(buf: &mut [Complex64], t_lo: f64, dt: f64) {
    let m_len = buf.len();
    for (n, v) in buf.iter_mut().enumerate() {
        *v *= alternate(n);
    }
    dft_in_place(buf, false);
    let c = dt / (2.0 * PI).sqrt();
    let dtau = 2.0 * PI / (dt * m_len as f64);
    for (m, v) in buf.iter_mut().enumerate() {
        let tau = (m as f64 - (m_len / 2) as f64) * dtau;
        *v *= Complex64::from_polar(c, -tau * t_lo);
    }
}

pub fn time_inverse(buf: &mut [Complex64], t_lo: f64, dt: f64) {
    let m_len = buf.len();
    let dtau = 2.0 * PI / (dt * m_len as f64);
    for (m, v) in buf.iter_mut().enumerate() {
        let tau = (m as f64 - (m_len / 2) as f64) * dtau;
        *v *= Complex64::from_polar(1.0, tau * t_lo);
    }
    dft_in_place(buf, true);
    let c = dtau / (2.0 * PI).sqrt();
    for (n, v) in buf.iter_mut().enumerate() {
        *v *= c * alternate(n);
    }
}
