//! Independent reference integrator: integrating-factor RK4 (Lawson form)
//! for `u_hat' = i xi^3 u_hat + i xi (u^3)^`, with the same dealiased cubing
//! as the Picard solver but no cutoffs and no Duhamel quadrature.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::invariants::{check_real, conserved_quantities, Conserved};
use super::nonlinear::Cubic;
use crate::error::{LabError, Result};
use crate::spectral::{phase, Grid1D, Layout1D, SpectralField};

/// Fastest phase times step allowed: the RK4 stability limit `2 sqrt 2` on
/// the imaginary axis, applied to `xi_c^3` of the dealiased band.
pub const STABILITY_LIMIT: f64 = 2.828;
/// Growth of `sup |u|` over its initial value that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub t_end: f64,
    /// Largest step; each interval between sample times is split evenly.
    pub dt: f64,
    /// Output times in `[0, t_end]`; `t_end` is always included.
    pub sample_times: Vec<f64>,
    pub nonlinear: bool,
}

impl ReferenceConfig {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            sample_times: vec![t_end],
            nonlinear: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Frequency-layout states at `times`.
    pub states: Vec<SpectralField>,
    pub steps: usize,
}

/// One line of the serialized trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub mass: f64,
    pub l2: f64,
    pub hamiltonian: f64,
    pub sup_abs: f64,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectories hold at least the final state")
    }

    pub fn conserved(&self) -> Result<Vec<Conserved>> {
        self.states.iter().map(conserved_quantities).collect()
    }

    pub fn snapshots(&self) -> Result<Vec<Snapshot>> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, u)| {
                let c = conserved_quantities(u)?;
                Ok(Snapshot {
                    t,
                    mass: c.mass,
                    l2: c.l2,
                    hamiltonian: c.hamiltonian,
                    sup_abs: sup_abs(u)?,
                })
            })
            .collect()
    }

    /// One JSON object per line, in the probe record format.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for s in self.snapshots()? {
            out.push_str(&serde_json::json!({"record": "snapshot", "snapshot": s}).to_string());
            out.push('\n');
        }
        Ok(out)
    }
}

fn sup_abs(u: &SpectralField) -> Result<f64> {
    Ok(u.to_physical()?.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max))
}

struct Stepper<'a> {
    cubic: &'a Cubic,
    xi3: Vec<f64>,
    nonlinear: bool,
}

impl Stepper<'_> {
    fn rhs(&self, u: &[Complex64]) -> Vec<Complex64> {
        if self.nonlinear {
            self.cubic.apply(u)
        } else {
            vec![Complex64::new(0.0, 0.0); u.len()]
        }
    }

    fn step(&self, u: &mut [Complex64], h: f64) {
        let e_half: Vec<Complex64> = self.xi3.iter().map(|&w| Complex64::from_polar(1.0, 0.5 * h * w)).collect();
        let e_full: Vec<Complex64> = e_half.iter().map(|e| e * e).collect();
        let a = self.rhs(u);
        let ua: Vec<Complex64> = (0..u.len()).map(|i| e_half[i] * (u[i] + 0.5 * h * a[i])).collect();
        let b = self.rhs(&ua);
        let ub: Vec<Complex64> = (0..u.len()).map(|i| e_half[i] * u[i] + 0.5 * h * b[i]).collect();
        let c = self.rhs(&ub);
        let uc: Vec<Complex64> = (0..u.len()).map(|i| e_full[i] * u[i] + h * e_half[i] * c[i]).collect();
        let d = self.rhs(&uc);
        for i in 0..u.len() {
            u[i] = e_full[i] * u[i] + h / 6.0 * (e_full[i] * a[i] + 2.0 * e_half[i] * (b[i] + c[i]) + d[i]);
        }
    }
}

/// Largest stable step on `grid`: `STABILITY_LIMIT / xi_c^3`.
pub fn stability_limit(grid: Grid1D) -> Result<f64> {
    Ok(STABILITY_LIMIT / Cubic::new(grid)?.band().powi(3))
}

pub fn reference_integrate(u0: &SpectralField, config: &ReferenceConfig) -> Result<Trajectory> {
    if !(config.t_end > 0.0 && config.dt > 0.0) {
        return Err(LabError::Parameter("t_end and dt must be positive".into()));
    }
    let u0 = match u0.layout() {
        Layout1D::Frequency => u0.clone(),
        Layout1D::Physical => u0.to_frequency()?,
    };
    check_real(&u0)?;
    let grid = *u0.grid();
    let cubic = Cubic::new(grid)?;
    let limit = stability_limit(grid)?;
    if config.dt > limit {
        return Err(LabError::Parameter(format!(
            "dt = {} exceeds the stability limit {limit:.4e} = 2.83 / xi_c^3 of the dealiased band",
            config.dt
        )));
    }
    let mut times: Vec<f64> = config.sample_times.clone();
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= config.t_end)) {
        return Err(LabError::Parameter(format!("sample time {t} outside [0, {}]", config.t_end)));
    }
    times.push(config.t_end);
    times.sort_by(f64::total_cmp);
    times.dedup();
    cubic.check_resolved(u0.coeffs(), "initial data")?;

    let stepper = Stepper {
        cubic: &cubic,
        xi3: grid.xis().into_iter().map(phase).collect(),
        nonlinear: config.nonlinear,
    };
    let sup0 = sup_abs(&u0)?;
    let mut u = u0.coeffs().to_vec();
    let mut t = 0.0;
    let mut steps = 0;
    let mut states = Vec::with_capacity(times.len());
    for &target in &times {
        let span = target - t;
        let n = (span / config.dt).ceil() as usize;
        let h = if n > 0 { span / n as f64 } else { 0.0 };
        for _ in 0..n {
            stepper.step(&mut u, h);
            steps += 1;
        }
        t = target;
        let state = SpectralField::from_frequency(grid, u.clone())?;
        let sup = sup_abs(&state)?;
        if !sup.is_finite() || (sup0 > 0.0 && sup > BLOWUP_FACTOR * sup0) {
            return Err(LabError::Instability(format!(
                "sup |u| grew from {sup0:.3e} to {sup:.3e} by t = {t}"
            )));
        }
        states.push(state);
    }
    Ok(Trajectory { times, states, steps })
}

/// `L^2_x` distance of two frequency-layout states on one grid.
pub fn l2_distance(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    let d = a.axpby(1.0, b, -1.0)?;
    Ok(d.l2_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Representation;

    fn grid() -> Grid1D {
        Grid1D::new(20.0, 128, Representation::PeriodicFft).unwrap()
    }

    fn gaussian(amp: f64) -> SpectralField {
        SpectralField::from_physical_fn(grid(), |x| amp * (-0.125 * x * x).exp())
            .to_frequency()
            .unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let tr = reference_integrate(&gaussian(0.0), &ReferenceConfig::new(0.5, 1e-3)).unwrap();
        assert!(tr.last().coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn linear_flow_is_the_exact_phase() {
        let u0 = gaussian(1.0);
        let config = ReferenceConfig {
            nonlinear: false,
            ..ReferenceConfig::new(0.7, 1e-3)
        };
        let tr = reference_integrate(&u0, &config).unwrap();
        let err = tr
            .last()
            .coeffs()
            .iter()
            .zip(u0.coeffs())
            .zip(grid().xis())
            .map(|((a, b), xi)| (a - b * Complex64::from_polar(1.0, 0.7 * phase(xi))).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn coarse_steps_are_refused() {
        let err = reference_integrate(&gaussian(0.1), &ReferenceConfig::new(1.0, 0.1)).unwrap_err();
        assert!(err.to_string().contains("stability"), "{err}");
    }

    #[test]
    fn sample_times_are_hit() {
        let config = ReferenceConfig {
            sample_times: vec![0.0, 0.25, 0.1],
            ..ReferenceConfig::new(0.3, 2e-3)
        };
        let tr = reference_integrate(&gaussian(0.3), &config).unwrap();
        assert_eq!(tr.times, vec![0.0, 0.1, 0.25, 0.3]);
        assert_eq!(tr.states[0].coeffs(), gaussian(0.3).coeffs());
        let lines = tr.to_json_lines().unwrap();
        assert_eq!(lines.lines().count(), 4);
    }

    #[test]
    fn invariants_are_kept() {
        let config = ReferenceConfig::new(1.0, 5e-4);
        let u0 = gaussian(0.5);
        let tr = reference_integrate(&u0, &config).unwrap();
        let (a, b) = (conserved_quantities(&u0).unwrap(), conserved_quantities(tr.last()).unwrap());
        assert!((a.mass - b.mass).abs() < 1e-10 * a.mass.abs());
        assert!((a.l2 - b.l2).abs() < 1e-8 * a.l2);
        assert!((a.hamiltonian - b.hamiltonian).abs() < 1e-6 * a.hamiltonian.abs());
    }
}
