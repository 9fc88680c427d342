//! Random test data. Spatial data are sums of frequency packets; space-time
//! data are sums of time-enveloped Airy waves `psi_j(t) U(t) v_j`, whose
//! interaction representation `U(-t) u(t)` has a closed-form transform.
//!
//! Dilation acts as `u(x, t) -> lambda^{1/2} u(lambda x, lambda^3 t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{phase, Grid1D, Layout2D, Representation, SpaceTimeField, SpaceTimeGrid, SpectralField};


/// `exp(-CUT)` is treated as zero when sizing grids.
const CUT: f64 = 18.0;
/// Gaussian tails below `exp(-TRUNC)` are stored as exact zeros so that
/// direct convolutions can skip them.
const TRUNC: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Gaussian,
    /// `exp(1 - 1/(1 - y^2))` on `|y| < 1`.
    Bump,
}

/// `amp * shape((xi - center) / width) * exp(-i shift xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub amp: Complex64,
    pub center: f64,
    pub width: f64,
    pub shift: f64,
    pub shape: Shape,
}

impl Packet {
    pub fn eval(&self, xi: f64) -> Complex64 {
        let y = (xi - self.center) / self.width;
        let m = match self.shape {
            Shape::Gaussian => {
                let e = 0.5 * y * y;
                if e > TRUNC {
                    0.0
                } else {
                    (-e).exp()
                }
            }
            Shape::Bump => {
                if y.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - y * y)).exp()
                } else {
                    0.0
                }
            }
        };
        if m == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.amp * Complex64::from_polar(m, -self.shift * xi)
    }

    /// Half-width of the frequency support.
    pub fn reach(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => self.width * (2.0 * CUT).sqrt(),
            Shape::Bump => self.width,
        }
    }

    /// Half-width of the spatial profile around `shift`. Bumps decay like
    /// `exp(-sqrt(width |x|))`; the cut is looser there.
    pub fn spatial_reach(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => (2.0 * CUT).sqrt() / self.width,
            Shape::Bump => 60.0 / self.width,
        }
    }

    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            amp: self.amp / lambda.sqrt(),
            center: self.center * lambda,
            width: self.width * lambda,
            shift: self.shift / lambda,
            shape: self.shape,
        }
    }

    /// Packet of `conj(u)`.
    pub fn mirrored(&self) -> Self {
        Self {
            amp: self.amp.conj(),
            center: -self.center,
            ..*self
        }
    }

    fn max_abs_xi(&self) -> f64 {
        self.center.abs() + self.reach()
    }

    /// Largest `|xi|` where the profile exceeds `exp(-8)` of its peak.
    pub fn effective_xi(&self) -> f64 {
        match self.shape {
            Shape::Gaussian => self.center.abs() + 4.0 * self.width,
            Shape::Bump => self.center.abs() + self.width,
        }
    }
}

/// Spatial data `v_hat = sum of packets`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowData {
    pub packets: Vec<Packet>,
}

impl FlowData {
    pub fn eval(&self, xi: f64) -> Complex64 {
        self.packets.iter().map(|p| p.eval(xi)).sum()
    }

    /// Largest `|xi|` carrying data.
    pub fn k_max(&self) -> f64 {
        self.packets.iter().map(Packet::max_abs_xi).fold(0.0, f64::max)
    }

    /// Band carrying all but `exp(-8)` of every packet; sets group velocities
    /// and product bandwidths.
    pub fn k_eff(&self) -> f64 {
        self.packets.iter().map(Packet::effective_xi).fold(0.0, f64::max)
    }

    pub fn min_width(&self) -> f64 {
        self.packets.iter().map(|p| p.width).fold(f64::INFINITY, f64::min)
    }

    pub fn spatial_reach(&self) -> f64 {
        self.packets
            .iter()
            .map(|p| p.shift.abs() + p.spatial_reach())
            .fold(0.0, f64::max)
    }

    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            packets: self.packets.iter().map(|p| p.dilated(lambda)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            packets: self.packets.iter().map(|p| Packet { amp: p.amp * c, ..*p }).collect(),
        }
    }

    /// Samples on `grid` with the zero mode left empty.
    pub fn sample(&self, grid: Grid1D) -> SpectralField {
        SpectralField::from_profile(grid, |xi| if xi == 0.0 { Complex64::new(0.0, 0.0) } else { self.eval(xi) })
    }

    /// Quadrature grid resolving every packet: `dxi <= width / (12 refine)`.
    pub fn frequency_grid(&self, refine: f64) -> Result<Grid1D> {
        let k = self.k_max() * 1.02;
        let dxi = self.min_width() / (12.0 * refine);
        Grid1D::with_band(k, pow2_at_least(2.0 * k / dxi).max(16), Representation::Quadrature)
    }
}

/// `exp(-(t - t0)^2 / (2 w^2)) exp(i omega t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub t0: f64,
    pub w: f64,
    pub omega: f64,
}

impl Envelope {
    pub fn eval(&self, t: f64) -> Complex64 {
        let d = (t - self.t0) / self.w;
        Complex64::from_polar((-0.5 * d * d).exp(), self.omega * t)
    }

    /// Unitary time transform `w exp(-w^2 (tau - omega)^2 / 2) exp(-i t0 (tau - omega))`.
    pub fn hat(&self, tau: f64) -> Complex64 {
        let d = tau - self.omega;
        Complex64::from_polar(self.w * (-0.5 * self.w * self.w * d * d).exp(), -self.t0 * d)
    }

    pub fn time_reach(&self) -> (f64, f64) {
        let r = self.w * (2.0 * CUT).sqrt();
        (self.t0 - r, self.t0 + r)
    }

    pub fn tau_reach(&self) -> (f64, f64) {
        let r = (2.0 * CUT).sqrt() / self.w;
        (self.omega - r, self.omega + r)
    }

    pub fn dilated(&self, lambda: f64) -> Self {
        let l3 = lambda.powi(3);
        Self {
            t0: self.t0 / l3,
            w: self.w / l3,
            omega: self.omega * l3,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            omega: -self.omega,
            ..*self
        }
    }
}

/// `u(t) = sum_j psi_j(t) U(t) v_j` with one packet per term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeField {
    pub terms: Vec<(Envelope, Packet)>,
}

impl EnvelopeField {
    /// Interaction representation `U(-t) u(t)` at `(xi, t)`.
    pub fn interaction(&self, xi: f64, t: f64) -> Complex64 {
        self.terms.iter().map(|(e, p)| e.eval(t) * p.eval(xi)).sum()
    }

    /// `u_hat(xi, t)`.
    pub fn mixed(&self, xi: f64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, t * phase(xi)) * self.interaction(xi, t)
    }

    /// Space-time transform of the interaction representation.
    pub fn interaction_hat(&self, xi: f64, tau: f64) -> Complex64 {
        self.terms.iter().map(|(e, p)| e.hat(tau) * p.eval(xi)).sum()
    }

    pub fn data(&self) -> FlowData {
        FlowData {
            packets: self.terms.iter().map(|(_, p)| *p).collect(),
        }
    }

    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, p)| (e.dilated(lambda), p.dilated(lambda))).collect(),
        }
    }

    pub fn time_reach(&self) -> (f64, f64) {
        self.terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (e, _)| {
            let (a, b) = e.time_reach();
            (lo.min(a), hi.max(b))
        })
    }

    /// `max |tau|` carried by the interaction transform.
    pub fn tau_max(&self) -> f64 {
        self.terms.iter().map(|(e, _)| {
            let (a, b) = e.tau_reach();
            a.abs().max(b.abs())
        }).fold(0.0, f64::max)
    }

    /// Largest distance of a time node from zero that carries data.
    pub fn time_extent(&self) -> f64 {
        let (a, b) = self.time_reach();
        a.abs().max(b.abs())
    }

    /// Spatial half-width swept by the waves over their time support.
    pub fn spatial_reach(&self) -> f64 {
        let data = self.data();
        let k = data.k_eff();
        data.spatial_reach() + 3.0 * k * k * self.time_extent()
    }

    /// `(xi, tau)` grid for the closed-form interaction transform:
    /// `dtau` resolves the time support twice over, `dxi` every packet.
    pub fn lift_grid(&self, refine: f64) -> Result<SpaceTimeGrid> {
        let space = self.data().frequency_grid(refine)?;
        let period = 4.0 * self.time_extent() * refine;
        let dtau = 2.0 * PI / period;
        let n = pow2_at_least(2.0 * self.tau_max() / dtau * 1.05).max(16);
        SpaceTimeGrid::centered(space, n, 0.5 * period)
    }

    /// Closed-form `(xi, tau)` samples of `U(-t) u(t)`; the zero mode is empty.
    pub fn lift(&self, refine: f64) -> Result<SpaceTimeField> {
        let grid = self.lift_grid(refine)?;
        let xis = grid.space.xis();
        let taus: Vec<f64> = (0..grid.n_times()).map(|m| grid.tau(m)).collect();
        Ok(SpaceTimeField::from_index_fn(grid, Layout2D::Frequency, |i, m| {
            if xis[i] == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.interaction_hat(xis[i], taus[m])
            }
        }))
    }

    /// Samples `u_hat(xi, t)`, or `U(-t) u(t)` when `interaction`, on a
    /// mixed-layout grid. The zero mode is left empty.
    pub fn sample_mixed(&self, grid: SpaceTimeGrid, interaction: bool) -> SpaceTimeField {
        let xis = grid.space.xis();
        let ts = grid.times();
        let nt = ts.len();
        let psi: Vec<Vec<Complex64>> = self.terms.iter().map(|(e, _)| ts.iter().map(|&t| e.eval(t)).collect()).collect();
        let mut out = SpaceTimeField::zeros(grid, Layout2D::Mixed);
        let coeffs = out.coeffs_mut();
        let zero = Complex64::new(0.0, 0.0);
        for (i, &xi) in xis.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let amps: Vec<(usize, Complex64)> = self
                .terms
                .iter()
                .enumerate()
                .map(|(j, (_, p))| (j, p.eval(xi)))
                .filter(|(_, a)| *a != zero)
                .collect();
            if amps.is_empty() {
                continue;
            }
            let row = &mut coeffs[i * nt..(i + 1) * nt];
            for (n, v) in row.iter_mut().enumerate() {
                *v = amps.iter().map(|&(j, a)| a * psi[j][n]).sum();
            }
            if !interaction {
                let w = phase(xi);
                for (v, &t) in row.iter_mut().zip(&ts) {
                    *v *= Complex64::from_polar(1.0, t * w);
                }
            }
        }
        out
    }
}

/// Smallest even `2^a 3^b >= x`, at least 16.
pub fn fft_len(x: f64) -> usize {
    let target = x.max(16.0).ceil() as usize;
    let mut best = target.next_power_of_two();
    let mut p3 = 1usize;
    while p3 < best {
        let mut n = p3;
        while n < target {
            n *= 2;
        }
        if n % 2 == 0 && n < best {
            best = n;
        }
        p3 *= 3;
    }
    best
}

pub fn pow2_at_least(x: f64) -> usize {
    let n = x.max(1.0).ceil() as usize;
    n.next_power_of_two()
}

/// Generator settings for random families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Nominal frequency band `K`: packet centers lie in `[-K, K]`.
    pub band: f64,
    /// Packets (or envelope terms) per datum, drawn from `1..=max_terms`.
    pub max_terms: usize,
    pub real: bool,
    pub gaussian_only: bool,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            band: 2.0,
            max_terms: 3,
            real: false,
            gaussian_only: false,
        }
    }
}

impl FamilySpec {
    pub fn packet(&self, rng: &mut ChaCha8Rng) -> Packet {
        let k = self.band;
        let shape = if self.gaussian_only || rng.gen_bool(0.5) { Shape::Gaussian } else { Shape::Bump };
        // the empty zero mode must not cut into a packet: bumps stay off the
        // origin, Gaussians keep it 4.5 widths (exp(-10)) away
        let (width, gap) = match shape {
            Shape::Gaussian => {
                let w = k * rng.gen_range(0.1..0.2);
                (w, 4.5 * w)
            }
            Shape::Bump => {
                let w = k * rng.gen_range(0.1..0.3);
                (w, w)
            }
        };
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let center = sign * rng.gen_range(gap..k.max(gap * 1.01));
        let amp = Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..2.0 * PI));
        let shift = rng.gen_range(-4.0..4.0) / k;
        Packet {
            amp,
            center,
            width,
            shift,
            shape,
        }
    }

    fn term_count(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(1..=self.max_terms.max(1))
    }

    pub fn flow_data(&self, rng: &mut ChaCha8Rng) -> FlowData {
        let mut packets = Vec::new();
        for _ in 0..self.term_count(rng) {
            let p = self.packet(rng);
            packets.push(p);
            if self.real {
                packets.push(p.mirrored());
            }
        }
        FlowData { packets }
    }

    /// Time unit `1 / K^3`, the Airy time of the band.
    pub fn time_unit(&self) -> f64 {
        1.0 / self.band.powi(3)
    }

    pub fn envelope(&self, rng: &mut ChaCha8Rng) -> Envelope {
        let t = self.time_unit();
        Envelope {
            t0: rng.gen_range(-1.0..1.0) * t,
            w: rng.gen_range(0.3..1.0) * t,
            omega: rng.gen_range(-2.0..2.0) / t,
        }
    }

    pub fn envelope_field(&self, rng: &mut ChaCha8Rng) -> EnvelopeField {
        let mut terms = Vec::new();
        for _ in 0..self.term_count(rng) {
            let e = self.envelope(rng);
            let p = self.packet(rng);
            terms.push((e, p));
            if self.real {
                terms.push((e.conj(), p.mirrored()));
            }
        }
        EnvelopeField { terms }
    }
}
