//! Picard iteration for the cut-off integral equation
//! `u(t) = psi(t) U(t) u0 + psi_delta(t) int_0^t U(t - t') d_x(u^3)(t') dt'`.
//!
//! Iterates live on a uniform time window slightly wider than the support of
//! `psi_delta`, so every iterate is its own `psi_delta`-extension and window
//! norms are plain `X^r_{s,b}` norms on that grid. On `[-delta, delta]` both
//! cutoffs equal 1 and the fixed point solves mKdV.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::invariants::check_real;
use super::nonlinear::Cubic;
use crate::error::{LabError, Result};
use crate::norms::{fl_norm, scale_exponent, xrsb_norm, NormParams};
use crate::probes::cutoff::Cutoff;
use crate::probes::runner::EstimateReport;
use crate::spectral::{phase, Layout1D, Layout2D, SpaceTimeField, SpaceTimeGrid, SpectralField};

/// Consecutive non-contracting steps tolerated before giving up.
const STALL_STEPS: usize = 3;
/// Window half-width in units of `delta`; `psi_delta` vanishes beyond `edge * delta`.
const WINDOW: f64 = 2.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub delta: f64,
    pub cutoff: Cutoff,
    pub r: f64,
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
    pub max_iter: usize,
    /// Convergence threshold on the `X^r_{s,b}` distance of successive iterates.
    pub tol: f64,
    pub nonlinear: bool,
    /// Time nodes per `delta` are at least `time_refine * delta * xi_c^3`,
    /// `xi_c` the dealiased band, so the Airy phase moves less than one
    /// radian per step.
    pub time_refine: f64,
    /// Constant `c` of the smallness relation `delta^{1-b+b'} <= 1/(4 c R^2)`.
    pub constant: f64,
    /// Where `constant` came from.
    pub constant_source: String,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            cutoff: Cutoff::default(),
            r: 2.0,
            s: 0.25,
            b: 0.55,
            b_prime: -0.425,
            max_iter: 60,
            tol: 1e-10,
            nonlinear: true,
            time_refine: 1.0,
            constant: 1.0,
            constant_source: "unit default".into(),
        }
    }
}

fn hypothesis(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(LabError::Precondition(msg.into()))
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        hypothesis(self.delta > 0.0 && self.delta <= 1.0, "0 < delta <= 1")?;
        hypothesis(self.r > 4.0 / 3.0 && self.r <= 2.0, "2 >= r > 4/3")?;
        hypothesis(self.b > 1.0 / self.r, "b > 1/r")?;
        hypothesis(self.b_prime > self.b - 1.0 && self.b_prime <= 0.0, "b - 1 < b' <= 0")?;
        hypothesis(self.s >= scale_exponent(self.r)?, "s >= s(r) = 1/2 - 1/(2r)")?;
        if self.max_iter == 0 || !(self.tol > 0.0) || !(self.time_refine >= 1.0) || !(self.constant > 0.0) {
            return Err(LabError::Parameter(
                "max_iter >= 1, tol > 0, time_refine >= 1 and constant > 0 are required".into(),
            ));
        }
        if !(self.cutoff.edge > 1.0 && self.cutoff.edge < 2.0 && self.cutoff.scale == 1.0 && self.cutoff.shift == 0.0) {
            return Err(LabError::Precondition(
                "psi must equal 1 on [-1, 1] and vanish outside (-2, 2)".into(),
            ));
        }
        Ok(())
    }

    /// Largest `delta` allowed by the smallness relation with
    /// `R = 2 c ||u0||_{FL^r_s}`.
    pub fn smallness_delta(&self, data_norm: f64) -> f64 {
        let radius = 2.0 * self.constant * data_norm;
        let bound = 1.0 / (4.0 * self.constant * radius * radius);
        bound.powf(1.0 / (1.0 - self.b + self.b_prime))
    }

    /// Sets `constant` to twice the product of the largest measured ratios
    /// of the given probe reports.
    pub fn with_probe_constant(mut self, reports: &[&EstimateReport]) -> Self {
        let c: f64 = reports.iter().map(|r| r.max_ratio).product();
        let parts: Vec<String> = reports.iter().map(|r| format!("{} max ratio {:.4e}", r.kind, r.max_ratio)).collect();
        self.constant = 2.0 * c;
        self.constant_source = format!("2 x product of probe maxima: {}", parts.join(", "));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub data_norm: f64,
    pub radius: f64,
    pub smallness_delta: f64,
    pub constant: f64,
    pub constant_source: String,
    pub dt: f64,
    pub time_nodes: usize,
    /// `sup_{0 <= t <= delta} ||u(t)||_{FL^r_s}`.
    pub sup_fl_norm: f64,
    /// `X^r_{s,b}` norm of `psi_delta u`, an extension of `u` off `[-delta, delta]`.
    pub extension_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Final iterate on the window, mixed layout.
    pub field: SpaceTimeField,
    pub delta: f64,
    /// `X^r_{s,b}` distances of successive iterates.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub contraction: Vec<f64>,
    /// `X^r_{s,b}` norm of `u - Lambda u` for the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: SolveDiagnostics,
}

impl SolveResult {
    fn node(&self, t: f64) -> Result<usize> {
        if t.abs() > self.delta * (1.0 + 1e-12) {
            return Err(LabError::Range(format!("t = {t} outside [-delta, delta] with delta = {}", self.delta)));
        }
        let g = self.field.grid();
        let pos = (t - g.t_lo()) / g.dt();
        let n = pos.round();
        if (pos - n).abs() > 1e-6 {
            return Err(LabError::Parameter(format!("t = {t} is not a time node")));
        }
        Ok(n as usize)
    }

    /// Solution at a time node in `[-delta, delta]`.
    pub fn state_at(&self, t: f64) -> Result<SpectralField> {
        self.field.slice_at(self.node(t)?)
    }

    pub fn final_state(&self) -> Result<SpectralField> {
        self.state_at(self.delta)
    }

    /// Time nodes in `[0, t_max]`.
    pub fn nodes_up_to(&self, t_max: f64) -> Result<Vec<f64>> {
        let g = self.field.grid();
        let (a, b) = (self.node(0.0)?, self.node(t_max.min(self.delta))?);
        Ok((a..=b).map(|n| g.t(n)).collect())
    }
}

/// Discretized `Lambda` on a fixed window.
struct Scheme {
    grid: SpaceTimeGrid,
    cubic: Cubic,
    /// `exp(i t_n xi_i^3)`, mode-major like the fields.
    airy: Vec<Complex64>,
    linear: Vec<Complex64>,
    cut: Vec<f64>,
    n0: usize,
    /// Nodes where `psi_delta` may be nonzero, plus stencil margin.
    active: (usize, usize),
    params: NormParams,
    nonlinear: bool,
}

impl Scheme {
    fn new(u0: &SpectralField, config: &PicardConfig) -> Result<Self> {
        let space = *u0.grid();
        let cubic = Cubic::new(space)?;
        let k = cubic.band();
        let need = (config.time_refine * config.delta * k.powi(3)).max(64.0);
        let mut m = 4usize;
        while (m as f64) < need {
            m *= 2;
        }
        let dt = config.delta / m as f64;
        let h = 9 * m / 4;
        let grid = SpaceTimeGrid::new(space, 2 * h, -(h as f64) * dt, h as f64 * dt)?;
        let n0 = grid.zero_time_index().expect("window centered on a node");
        let nt = grid.n_times();
        let ts = grid.times();
        let psi_delta = config.cutoff.dilated(config.delta);
        if psi_delta.reach() >= WINDOW * config.delta {
            return Err(LabError::Precondition("psi_delta must vanish inside the time window".into()));
        }
        let cut: Vec<f64> = ts.iter().map(|&t| psi_delta.eval(t)).collect();
        let reach = (psi_delta.reach() / dt).ceil() as usize + 2;
        let active = (n0 - reach.min(n0 - 2), (n0 + reach).min(nt - 3));
        let xis = space.xis();
        let airy: Vec<Complex64> = xis
            .iter()
            .flat_map(|&xi| ts.iter().map(move |&t| Complex64::from_polar(1.0, t * phase(xi))))
            .collect();
        let c0 = u0.coeffs();
        let linear = (0..grid.size())
            .map(|p| airy[p] * c0[p / nt] * config.cutoff.eval(ts[p % nt]))
            .collect();
        Ok(Self {
            grid,
            cubic,
            airy,
            linear,
            cut,
            n0,
            active,
            params: NormParams::new(config.r, config.s, config.b)?,
            nonlinear: config.nonlinear,
        })
    }

    /// `Lambda u`.
    fn apply(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.linear.clone();
        if !self.nonlinear {
            return out;
        }
        let nx = self.grid.space.n_modes();
        let nt = self.grid.n_times();
        let (lo, hi) = self.active;
        // integrand U(-t') d_x(u^3)(t'), mode-major
        let mut g = vec![Complex64::new(0.0, 0.0); nx * nt];
        let mut col = vec![Complex64::new(0.0, 0.0); nx];
        for n in lo..=hi {
            for (i, c) in col.iter_mut().enumerate() {
                *c = u[i * nt + n];
            }
            for (i, v) in self.cubic.apply(&col).into_iter().enumerate() {
                g[i * nt + n] = self.airy[i * nt + n].conj() * v;
            }
        }
        // cumulative fourth-order rule: cubic through four neighbouring nodes
        let dt = self.grid.dt();
        let w = dt / 24.0;
        for i in 0..nx {
            let row = &g[i * nt..(i + 1) * nt];
            let dst = &mut out[i * nt..(i + 1) * nt];
            let airy = &self.airy[i * nt..(i + 1) * nt];
            let mut acc = Complex64::new(0.0, 0.0);
            for n in self.n0..hi - 1 {
                acc += w * (13.0 * (row[n] + row[n + 1]) - row[n - 1] - row[n + 2]);
                dst[n + 1] += self.cut[n + 1] * airy[n + 1] * acc;
            }
            acc = Complex64::new(0.0, 0.0);
            for n in (lo + 2..=self.n0).rev() {
                acc -= w * (13.0 * (row[n] + row[n - 1]) - row[n + 1] - row[n - 2]);
                dst[n - 1] += self.cut[n - 1] * airy[n - 1] * acc;
            }
        }
        out
    }

    fn field(&self, c: Vec<Complex64>) -> SpaceTimeField {
        SpaceTimeField::new(self.grid, c, Layout2D::Mixed).expect("size matches the grid")
    }

    fn x_norm(&self, c: Vec<Complex64>) -> Result<f64> {
        xrsb_norm(&self.field(c).to_frequency()?, &self.params)
    }

    fn distance(&self, a: &[Complex64], b: &[Complex64]) -> Result<f64> {
        self.x_norm(a.iter().zip(b).map(|(x, y)| x - y).collect())
    }
}

/// Solves the cut-off integral equation by Picard iteration from the free
/// evolution `psi U(t) u0`.
pub fn picard_solve(u0: &SpectralField, config: &PicardConfig) -> Result<SolveResult> {
    config.validate()?;
    let u0 = match u0.layout() {
        Layout1D::Frequency => u0.clone(),
        Layout1D::Physical => u0.to_frequency()?,
    };
    check_real(&u0)?;
    let data_norm = fl_norm(&u0, config.r, config.s)?;
    let smallness_delta = config.smallness_delta(data_norm);
    if config.nonlinear && config.delta > smallness_delta {
        return Err(LabError::Precondition(format!(
            "smallness relation delta^(1-b+b') <= 1/(4 c R^2) fails: delta = {} > {smallness_delta:.4e} (c = {}, R = {:.4e})",
            config.delta,
            config.constant,
            2.0 * config.constant * data_norm
        )));
    }
    let scheme = Scheme::new(&u0, config)?;
    scheme.cubic.check_resolved(u0.coeffs(), "initial data")?;

    let mut u = scheme.linear.clone();
    let mut distances = Vec::new();
    let mut contraction = Vec::new();
    let mut converged = false;
    let mut stalled = 0;
    for _ in 0..config.max_iter {
        let next = scheme.apply(&u);
        let d = scheme.distance(&next, &u)?;
        u = next;
        if !d.is_finite() {
            return Err(LabError::Divergence(format!(
                "iterate distance became {d}; try a smaller delta"
            )));
        }
        if let Some(&prev) = distances.last() {
            let q = d / prev;
            contraction.push(q);
            stalled = if q >= 1.0 { stalled + 1 } else { 0 };
            if stalled >= STALL_STEPS {
                return Err(LabError::Divergence(format!(
                    "distances {:?} stopped contracting; choose a smaller delta",
                    &distances[distances.len() + 1 - STALL_STEPS..]
                )));
            }
        }
        distances.push(d);
        if d < config.tol {
            converged = true;
            break;
        }
    }
    let residual = scheme.distance(&scheme.apply(&u), &u)?;

    let nt = scheme.grid.n_times();
    let m = (config.delta / scheme.grid.dt()).round() as usize;
    let mut sup_fl_norm: f64 = 0.0;
    let field = scheme.field(u.clone());
    for n in scheme.n0..=scheme.n0 + m {
        sup_fl_norm = sup_fl_norm.max(fl_norm(&field.slice_at(n)?, config.r, config.s)?);
    }
    let extension: Vec<Complex64> = u.iter().enumerate().map(|(p, c)| c * scheme.cut[p % nt]).collect();
    let extension_norm = scheme.x_norm(extension)?;
    scheme.cubic.check_resolved(&field.column(scheme.n0 + m), "solution at t = delta")?;

    Ok(SolveResult {
        field,
        delta: config.delta,
        iterations: distances.len(),
        distances,
        contraction,
        residual,
        converged,
        diagnostics: SolveDiagnostics {
            data_norm,
            radius: 2.0 * config.constant * data_norm,
            smallness_delta,
            constant: config.constant,
            constant_source: config.constant_source.clone(),
            dt: scheme.grid.dt(),
            time_nodes: nt,
            sup_fl_norm,
            extension_norm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid1D, Representation};

    fn gaussian(amp: f64) -> SpectralField {
        let grid = Grid1D::new(20.0, 128, Representation::PeriodicFft).unwrap();
        SpectralField::from_physical_fn(grid, |x| amp * (-0.125 * x * x).exp())
            .to_frequency()
            .unwrap()
    }

    fn quick() -> PicardConfig {
        PicardConfig {
            delta: 0.25,
            ..PicardConfig::default()
        }
    }

    #[test]
    fn zero_data_converge_at_once() {
        let res = picard_solve(&gaussian(0.0), &quick()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.field.max_abs(), 0.0);
    }

    #[test]
    fn linear_problem_is_solved_by_the_free_wave() {
        let u0 = gaussian(0.3);
        let config = PicardConfig {
            nonlinear: false,
            ..quick()
        };
        let res = picard_solve(&u0, &config).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.residual < 1e-10);
        let t = res.delta;
        let want = SpectralField::from_profile(*u0.grid(), |xi| {
            let i = u0.grid().index_of_mode((xi / u0.grid().dxi()).round() as i64).unwrap();
            u0.coeffs()[i] * Complex64::from_polar(1.0, t * phase(xi))
        });
        let got = res.final_state().unwrap();
        let err = got.coeffs().iter().zip(want.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-14, "{err}");
    }

    #[test]
    fn small_data_contract_fast() {
        let res = picard_solve(&gaussian(0.1), &quick()).unwrap();
        assert!(res.converged, "{:?}", res.distances);
        assert!(res.contraction.iter().all(|&q| q <= 0.5), "{:?}", res.contraction);
        assert!(res.residual < 10.0 * quick().tol, "{}", res.residual);
        // the nonlinear flow keeps the mean and the L^2 norm
        let (a, b) = (res.state_at(0.0).unwrap(), res.final_state().unwrap());
        let z = a.grid().zero_index();
        assert!((a.coeffs()[z] - b.coeffs()[z]).norm() < 1e-14);
        assert!((a.l2_norm() - b.l2_norm()).abs() < 1e-9 * a.l2_norm());
        assert!(res.diagnostics.sup_fl_norm <= 10.0 * res.diagnostics.extension_norm);
    }

    #[test]
    fn hypotheses_are_named() {
        let bad = PicardConfig { b: 0.4, ..quick() };
        let err = picard_solve(&gaussian(0.1), &bad).unwrap_err();
        assert!(err.to_string().contains("b > 1/r"), "{err}");
        let bad = PicardConfig { r: 1.2, ..quick() };
        assert!(picard_solve(&gaussian(0.1), &bad).unwrap_err().to_string().contains("2 >= r > 4/3"));
    }

    #[test]
    fn large_delta_breaks_the_smallness_relation() {
        let config = PicardConfig {
            delta: 1.0,
            constant: 50.0,
            ..quick()
        };
        let err = picard_solve(&gaussian(1.0), &config).unwrap_err();
        assert!(err.to_string().contains("smallness"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn complex_data_are_rejected() {
        let grid = Grid1D::new(20.0, 128, Representation::PeriodicFft).unwrap();
        let u0 = SpectralField::from_profile(grid, |xi| Complex64::new((-(xi - 1.0).powi(2)).exp(), 0.0));
        assert!(matches!(picard_solve(&u0, &quick()), Err(LabError::Reality(_))));
    }
}
