//! Left- and right-hand sides of every estimate on one random sample.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bilinear::{i_minus, i_plus, lemma3_closed_form};
use crate::error::{LabError, Result};
use crate::norms::{fl_norm, hrsb_norm, mixed_norm, time_fl_norm, xrsb_norm, MixedNormParams, NormParams};
use crate::probes::cutoff::Cutoff;
use crate::probes::family::{fft_len, EnvelopeField, FamilySpec, FlowData};
use crate::probes::flow::free_flow_norm;
use crate::probes::params::{EstimateKind, Resolved};
use crate::probes::regions::trilinear_by_region;
use crate::spectral::{
    bracket, duhamel_integral, phase, Grid1D, Layout2D, Representation, SpaceTimeField, SpaceTimeGrid,
    SpectralField,
};

/// Largest space-time grid a single evaluation may allocate.
pub const MAX_GRID_POINTS: usize = 1 << 24;

/// Time scale of the forcing in delta-sweeps; larger than every delta swept,
/// so the measured power law is not saturated by the forcing's own decay.
pub const LEMMA2_TIME_SCALE: f64 = 4.0;

/// Inputs of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub flows: Vec<FlowData>,
    pub fields: Vec<EnvelopeField>,
    pub cutoff: Cutoff,
    /// Whether the cutoff is part of the dilated space-time function, as in
    /// `psi(t) U(t) u0`, rather than a fixed window.
    pub cutoff_dilates: bool,
}

impl Sample {
    pub fn draw(kind: EstimateKind, family: &FamilySpec, rng: &mut ChaCha8Rng) -> Self {
        use EstimateKind::*;
        let (n_flows, n_fields) = match kind {
            L8Strichartz | Lemma4 | FsAiry | Cor3General | Homog5 => (1, 0),
            BilinearL3 => (2, 0),
            Xnorm30 | Xnorm31 | Lemma2Delta | Embed4 | Embed52 => (0, 1),
            CorK1 | CorK2 | CorK10 => (0, 2),
            TrilinearT2 => (0, 3),
        };
        let flows = (0..n_flows).map(|_| family.flow_data(rng)).collect();
        let mut fields: Vec<EnvelopeField> = (0..n_fields).map(|_| family.envelope_field(rng)).collect();
        if kind == Lemma2Delta {
            let c = LEMMA2_TIME_SCALE / family.time_unit();
            for f in &mut fields {
                for (e, _) in &mut f.terms {
                    e.t0 *= c;
                    e.w *= c;
                    e.omega /= c;
                }
            }
        }
        let cutoff = if kind == Homog5 {
            Cutoff {
                scale: rng.gen_range(0.5..1.5),
                shift: rng.gen_range(-0.5..0.5),
                ..Cutoff::default()
            }
        } else {
            Cutoff::default()
        };
        Self {
            flows,
            fields,
            cutoff,
            cutoff_dilates: kind == Homog5,
        }
    }

    /// `u(x, t) -> lambda^{1/2} u(lambda x, lambda^3 t)` on every datum; the
    /// cutoff becomes `psi(lambda^3 t)` when it belongs to the data and is
    /// left alone otherwise.
    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            flows: self.flows.iter().map(|f| f.dilated(lambda)).collect(),
            fields: self.fields.iter().map(|f| f.dilated(lambda)).collect(),
            cutoff: if self.cutoff_dilates {
                self.cutoff.dilated(lambda.powi(-3))
            } else {
                self.cutoff
            },
            cutoff_dilates: self.cutoff_dilates,
        }
    }
}

/// One left/right-hand side pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lhs: f64,
    pub rhs: f64,
    /// Largest extrapolated-tail share of a flow norm.
    pub tail_fraction: Option<f64>,
    /// Region A/B/C shares of the trilinear left-hand side, when requested.
    pub regions: Option<RegionSplit>,
}

impl Evaluation {
    fn plain(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            tail_fraction: None,
            regions: None,
        }
    }

    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Trilinear left-hand side restricted to each frequency region, from a
/// direct triple sum on a coarser grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSplit {
    /// `X^r_{s,b'}` norm of the A, B and C parts.
    pub lhs: [f64; 3],
    /// Norm of the summed parts; agrees with the pseudospectral value up to
    /// the coarse grid's quadrature error.
    pub total: f64,
}

fn sized(grid: SpaceTimeGrid) -> Result<SpaceTimeGrid> {
    if grid.size() > MAX_GRID_POINTS {
        return Err(LabError::Range(format!(
            "{} x {} grid exceeds {MAX_GRID_POINTS} points; the dilated data leave the resolvable range",
            grid.space.n_modes(),
            grid.n_times()
        )));
    }
    Ok(grid)
}

fn lift_norm(u: &EnvelopeField, params: NormParams, refine: f64) -> Result<f64> {
    sized(u.lift_grid(refine)?)?;
    hrsb_norm(&u.lift(refine)?, &params)
}

/// Periodic spatial grid holding every field over its time support with
/// frequency band `band`.
fn space_grid(fields: &[&EnvelopeField], band: f64, refine: f64) -> Result<Grid1D> {
    let reach = fields.iter().map(|f| f.spatial_reach()).fold(0.0, f64::max);
    let half = 1.1 * reach * refine;
    Grid1D::new(half, fft_len(2.0 * half * band / PI), Representation::PeriodicFft)
}

/// Time grid on the union of the supports, resolving frequencies up to `omega`.
fn time_grid(space: Grid1D, fields: &[&EnvelopeField], omega: f64, refine: f64) -> Result<SpaceTimeGrid> {
    let (lo, hi) = fields.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
        let (a, b) = f.time_reach();
        (lo.min(a), hi.max(b))
    });
    let n = fft_len(1.05 * (hi - lo) * omega * refine / PI);
    sized(SpaceTimeGrid::new(space, n, lo, hi)?)
}

/// Multiplies a mixed-layout field by `exp(-i t xi^3)`.
fn pull_back(f: &mut SpaceTimeField) {
    let grid = *f.grid();
    let nt = grid.n_times();
    let ts = grid.times();
    for (i, row) in f.coeffs_mut().chunks_mut(nt).enumerate() {
        let w = phase(grid.space.xi(i));
        for (c, &t) in row.iter_mut().zip(&ts) {
            *c *= Complex64::from_polar(1.0, -t * w);
        }
    }
}

/// `int (1 + x^2)^{-a} dx` for `a > 1/2`.
fn bracket_integral(a: f64) -> f64 {
    PI.sqrt() * libm::tgamma(a - 0.5) / libm::tgamma(a)
}

/// Hoelder constant of `X^{r1}_{s1,b1} in X^{r0}_{s0,b0}`:
/// `||<xi>^{s0-s1}||_{L^p} ||<tau>^{b0-b1}||_{L^p}` with `1/p = 1/r1 - 1/r0`.
pub fn embed4_constant(res: &Resolved) -> f64 {
    let inv_p = 1.0 / res.r - 1.0 / res.r0;
    if inv_p == 0.0 {
        return 1.0;
    }
    let p = 1.0 / inv_p;
    let a_xi = 0.5 * (res.s - res.s0) * p;
    let a_tau = 0.5 * (res.b - res.b0) * p;
    (bracket_integral(a_xi) * bracket_integral(a_tau)).powf(inv_p)
}

/// `sup_t ||u(t)||_{H^r_s} <= C ||u||_{X^r_{s,b}}` with
/// `C = (2 pi)^{-1/2} ||<tau>^{-b}||_{L^r}`.
pub fn embed52_constant(r: f64, b: f64) -> f64 {
    (2.0 * PI).powf(-0.5) * bracket_integral(0.5 * b * r).powf(1.0 / r)
}

/// Evaluates both sides of `kind` on `sample`. `delta` is the cutoff scale
/// of delta-dependent estimates and is ignored elsewhere; `regions` requests
/// the trilinear region split.
pub fn evaluate(
    kind: EstimateKind,
    res: &Resolved,
    sample: &Sample,
    delta: f64,
    refine: f64,
    regions: bool,
) -> Result<Evaluation> {
    use EstimateKind::*;
    match kind {
        L8Strichartz | Lemma4 | FsAiry | Cor3General => {
            let v = &sample.flows[0];
            let params = MixedNormParams::new(res.p, res.q, res.sigma, true)?;
            let flow = free_flow_norm(v, &params, refine)?;
            let rhs = fl_norm(&v.sample(v.frequency_grid(refine)?), res.r, 0.0)?;
            Ok(Evaluation {
                tail_fraction: Some(flow.tail_fraction),
                ..Evaluation::plain(flow.value, rhs)
            })
        }
        Xnorm30 | Xnorm31 => {
            let u = &sample.fields[0];
            let k = u.data().k_eff();
            let q = if kind == Xnorm30 { res.q } else { res.q / (res.q - 1.0) };
            let space = space_grid(&[u], (0.5 * q * k).max(1.05 * k), refine)?;
            let grid = time_grid(space, &[u], k.powi(3) + u.tau_max(), refine)?;
            let field = u.sample_mixed(grid, false);
            if kind == Xnorm30 {
                let lhs = mixed_norm(&field, &MixedNormParams::new(res.p, res.q, 1.0 / res.p, false)?)?;
                let rhs = lift_norm(u, NormParams::new(res.r, 0.0, res.b)?, refine)?;
                Ok(Evaluation::plain(lhs, rhs))
            } else {
                let rc = res.r / (res.r - 1.0);
                let pc = res.p / (res.p - 1.0);
                let lhs = lift_norm(u, NormParams::new(rc, 0.0, -res.b)?, refine)?;
                let rhs = mixed_norm(&field, &MixedNormParams::new(pc, q, -1.0 / res.p, false)?)?;
                Ok(Evaluation::plain(lhs, rhs))
            }
        }
        BilinearL3 => {
            let (u1, u2) = (&sample.flows[0], &sample.flows[1]);
            let both = FlowData {
                packets: u1.packets.iter().chain(&u2.packets).copied().collect(),
            };
            let grid = both.frequency_grid(refine)?;
            let v = lemma3_closed_form(&u1.sample(grid), &u2.sample(grid))?;
            Ok(Evaluation::plain(v.value.max(0.0).sqrt(), v.norm_product.sqrt()))
        }
        CorK1 => {
            let (u, v) = (&sample.fields[0], &sample.fields[1]);
            let (ku, kv) = (u.data().k_eff(), v.data().k_eff());
            let space = space_grid(&[u, v], 1.05 * (ku + kv), refine)?;
            // |B(xi, t)|^2 has twice the band of the resonance phase, and the
            // periodic trapezoid is exact up to twice the Nyquist frequency
            let omega = 3.0 * ku * kv * (ku + kv) + u.tau_max() + v.tau_max();
            let grid = time_grid(space, &[u, v], omega, refine)?;
            let (fu, fv) = (u.sample_mixed(grid, false), v.sample_mixed(grid, false));
            let w = space.weights();
            let sw: Vec<f64> = space.xis().iter().map(|&xi| xi.abs().powf(2.0 * res.s)).collect();
            let mut acc = 0.0;
            for n in 0..grid.n_times() {
                let b = i_minus(&fu.slice_at(n)?, &fv.slice_at(n)?, res.s)?;
                acc += b.coeffs().iter().zip(&w).zip(&sw).map(|((c, w), s)| w * s * c.norm_sqr()).sum::<f64>();
            }
            let lhs = (acc * grid.dt()).sqrt();
            let rhs = lift_norm(u, NormParams::new(2.0, 0.0, res.b)?, refine)?
                * lift_norm(v, NormParams::new(2.0, 0.0, res.b_tilde)?, refine)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        CorK2 | CorK10 => {
            let (w, u) = (&sample.fields[0], &sample.fields[1]);
            let (kw, ku) = (w.data().k_eff(), u.data().k_eff());
            let space = space_grid(&[w, u], 1.05 * (kw + ku), refine)?;
            let omega = 3.0 * kw * ku * (kw + ku) + w.tau_max() + u.tau_max();
            let grid = time_grid(space, &[w, u], omega, refine)?;
            let (fw, fu) = (w.sample_mixed(grid, false), u.sample_mixed(grid, false));
            let sigma = if kind == CorK2 { res.s } else { res.sigma };
            let xis = space.xis();
            let mut out = SpaceTimeField::zeros(grid, Layout2D::Mixed);
            for n in 0..grid.n_times() {
                let iw = SpectralField::from_frequency(
                    space,
                    fw.column(n).iter().zip(&xis).map(|(c, xi)| c * xi.abs().powf(sigma)).collect(),
                )?;
                let col = i_plus(&iw, &fu.slice_at(n)?, sigma)?;
                out.set_column(n, col.coeffs());
            }
            pull_back(&mut out);
            let (r_out, b_out, b_in) = if kind == CorK2 {
                (2.0, -res.b_tilde, res.b)
            } else {
                (res.r, res.b_prime, res.b)
            };
            let lhs = hrsb_norm(&out.to_frequency()?, &NormParams::new(r_out, 0.0, b_out)?)?;
            let rhs = lift_norm(w, NormParams::new(2.0, 0.0, 0.0)?, refine)?
                * lift_norm(u, NormParams::new(2.0, 0.0, b_in)?, refine)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        Lemma2Delta => {
            let f = &sample.fields[0];
            let psi = sample.cutoff.dilated(delta);
            let half = 2.0 * psi.reach();
            let dt = (psi.transition_width() / 128.0).min(PI / (2.0 * f.tau_max())) / refine;
            let space = f.data().frequency_grid(refine)?;
            let grid = sized(SpaceTimeGrid::centered(space, fft_len(2.0 * half / dt), half)?)?;
            let forcing = f.sample_mixed(grid, false);
            let mut d = duhamel_integral(&forcing)?.field;
            let nt = grid.n_times();
            let cut: Vec<f64> = grid.times().iter().map(|&t| psi.eval(t)).collect();
            for row in d.coeffs_mut().chunks_mut(nt) {
                for (c, p) in row.iter_mut().zip(&cut) {
                    *c *= p;
                }
            }
            pull_back(&mut d);
            let lhs = hrsb_norm(&d.to_frequency()?, &NormParams::new(res.r, res.s, res.b)?)?;
            let rhs = lift_norm(f, NormParams::new(res.r, res.s, res.b_prime)?, refine)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        Homog5 => {
            let u0 = &sample.flows[0];
            let psi = sample.cutoff;
            // the identity holds mode by mode, so a coarse xi grid suffices
            let space = u0.frequency_grid(refine / 6.0)?;
            let half = 32.0 * psi.reach();
            let omega = u0.k_max().powi(3) + 400.0 / psi.transition_width();
            let n = fft_len(2.0 * half * omega * refine / PI);
            let grid = sized(SpaceTimeGrid::new(space, n, psi.shift - half, psi.shift + half)?)?;
            let ts = grid.times();
            let cut: Vec<Complex64> = ts.iter().map(|&t| Complex64::new(psi.eval(t), 0.0)).collect();
            let data = u0.sample(space);
            let field = SpaceTimeField::from_index_fn(grid, Layout2D::Mixed, |i, m| {
                let xi = space.xi(i);
                data.coeffs()[i] * cut[m] * Complex64::from_polar(1.0, ts[m] * phase(xi))
            });
            let lhs = xrsb_norm(&field.to_frequency()?, &NormParams::new(res.r, res.s, res.b)?)?;
            let c_psi = time_fl_norm(&cut, grid.t_lo(), grid.dt(), res.r, res.b)?;
            let rhs = c_psi * fl_norm(&data, res.r, res.s)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        Embed4 => {
            let u = &sample.fields[0];
            let lift = u.lift(refine)?;
            let lhs = hrsb_norm(&lift, &NormParams::new(res.r0, res.s0, res.b0)?)?;
            let rhs = embed4_constant(res) * hrsb_norm(&lift, &NormParams::new(res.r, res.s, res.b)?)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        Embed52 => {
            let u = &sample.fields[0];
            let space = u.data().frequency_grid(refine)?;
            let (lo, hi) = u.time_reach();
            let w_min = u.terms.iter().map(|(e, _)| e.w).fold(f64::INFINITY, f64::min);
            let n = ((hi - lo) / (w_min / (16.0 * refine))).ceil() as usize;
            let rc = res.r / (res.r - 1.0);
            let xis = space.xis();
            let mut lhs: f64 = 0.0;
            for j in 0..=n {
                let t = lo + (hi - lo) * j as f64 / n as f64;
                let sum: f64 = xis
                    .iter()
                    .enumerate()
                    .map(|(i, &xi)| {
                        let v = if xi == 0.0 { 0.0 } else { u.interaction(xi, t).norm() };
                        space.weight(i) * (bracket(xi).powf(res.s) * v).powf(rc)
                    })
                    .sum();
                lhs = lhs.max(sum.powf(1.0 / rc));
            }
            let rhs = embed52_constant(res.r, res.b) * lift_norm(u, NormParams::new(res.r, res.s, res.b)?, refine)?;
            Ok(Evaluation::plain(lhs, rhs))
        }
        TrilinearT2 => trilinear(res, sample, refine, regions),
    }
}

fn trilinear(res: &Resolved, sample: &Sample, refine: f64, regions: bool) -> Result<Evaluation> {
    let u: Vec<&EnvelopeField> = sample.fields.iter().collect();
    let k: Vec<f64> = u.iter().map(|f| f.data().k_eff()).collect();
    let band = 1.05 * k.iter().sum::<f64>();
    let omega = 3.0 * (k[0] + k[1]) * (k[1] + k[2]) * (k[0] + k[2]) + u.iter().map(|f| f.tau_max()).sum::<f64>();
    let out_params = NormParams::new(res.r, res.s, res.b_prime)?;
    let norm_of = |mut m: SpaceTimeField| -> Result<f64> {
        pull_back(&mut m);
        hrsb_norm(&m.to_frequency()?, &out_params)
    };

    let space = space_grid(&u, band, refine)?;
    let grid = time_grid(space, &u, omega, refine)?;
    let phys: Vec<SpaceTimeField> = u
        .iter()
        .map(|f| f.sample_mixed(grid, false).to_physical())
        .collect::<Result<_>>()?;
    let mut prod = phys[0].clone();
    for (p, (a, b)) in prod.coeffs_mut().iter_mut().zip(phys[1].coeffs().iter().zip(phys[2].coeffs())) {
        *p *= a * b;
    }
    let mut dx = prod.to_mixed()?;
    let nt = grid.n_times();
    for (i, row) in dx.coeffs_mut().chunks_mut(nt).enumerate() {
        let d = Complex64::new(0.0, space.xi(i));
        row.iter_mut().for_each(|c| *c *= d);
    }
    let lhs = norm_of(dx)?;
    let in_params = NormParams::new(res.r, res.s, res.b)?;
    let rhs = u.iter().map(|f| lift_norm(f, in_params, refine)).product::<Result<f64>>()?;

    let split = if regions {
        // the triple sum only needs the packets resolved in xi: dxi = w / 3
        let w = u.iter().map(|f| f.data().min_width()).fold(f64::INFINITY, f64::min);
        let half = 3.0 * PI / w;
        let coarse = Grid1D::new(half, fft_len(2.0 * half * band / PI), Representation::PeriodicFft)?;
        let cgrid = SpaceTimeGrid::new(coarse, nt, grid.t_lo(), grid.t_hi())?;
        let fields: Vec<SpaceTimeField> = u.iter().map(|f| f.sample_mixed(cgrid, false)).collect();
        let parts = trilinear_by_region([&fields[0], &fields[1], &fields[2]])?;
        let total = parts[0].axpby(Complex64::new(1.0, 0.0), &parts[1], Complex64::new(1.0, 0.0))?;
        let total = total.axpby(Complex64::new(1.0, 0.0), &parts[2], Complex64::new(1.0, 0.0))?;
        let [a, b, c] = parts;
        Some(RegionSplit {
            lhs: [norm_of(a)?, norm_of(b)?, norm_of(c)?],
            total: norm_of(total)?,
        })
    } else {
        None
    };
    Ok(Evaluation {
        regions: split,
        ..Evaluation::plain(lhs, rhs)
    })
}
