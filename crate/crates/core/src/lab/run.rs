//! Experiment orchestration.

use std::time::{SystemTime, UNIX_EPOCH};

use super::config::{ExperimentConfig, ExperimentKind, LipschitzSection, ProbeSection, SolveSection};
use super::record::{finite, Row, RunRecord};
use crate::error::{LabError, Result};
use crate::probes::runner::{merge_reports, run_probe, EstimateReport, ProbeConfig};
use crate::solver::{
    l2_distance, lipschitz_probe, picard_solve, reference_integrate, stability_limit, ReferenceConfig,
    SolveResult,
};
use crate::spectral::{Grid1D, Representation, SpectralField};

/// Largest default reference step.
const REFERENCE_DT_CAP: f64 = 1e-4;

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs a validated configuration. Errors before the first result are
/// returned; later ones end the record with a failure (a partial run).
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    config.validate()?;
    let mut record = RunRecord::new(config.clone(), now());
    match config.kind {
        ExperimentKind::Probe | ExperimentKind::Sweep => {
            let probe = config.probe.as_ref().expect("validated probe section");
            run_probes(probe, config.seed, &mut record)?;
        }
        ExperimentKind::Solve => {
            let solve = config.solve.as_ref().expect("validated solve section");
            run_solves(solve, &config.resolution, &mut record)?;
        }
        ExperimentKind::Lipschitz => {
            let solve = config.solve.as_ref().expect("validated solve section");
            let lip = config.lipschitz.as_ref().expect("validated lipschitz section");
            run_lipschitz(solve, lip, config.seed, &config.resolution, &mut record)?;
        }
    }
    Ok(record)
}

/// One dilation at a time, so a failure keeps the dilations already done.
fn run_probes(section: &ProbeSection, seed: u64, record: &mut RunRecord) -> Result<()> {
    let config = section.probe_config(seed);
    let mut reports = Vec::new();
    for (i, &lambda) in config.lambdas.iter().enumerate() {
        let single = ProbeConfig {
            lambdas: vec![lambda],
            check_resolution: config.check_resolution && i == 0,
            region_samples: if i == 0 { config.region_samples } else { 0 },
            ..config.clone()
        };
        match run_probe(&single) {
            Ok(report) => {
                push_probe_rows(&report, record);
                reports.push(report);
            }
            Err(e) if reports.is_empty() => return Err(e),
            Err(e) => {
                record.fail(&e);
                break;
            }
        }
    }
    let merged = merge_reports(&config, reports)?;
    push_probe_summary(&merged, record);
    Ok(())
}

fn push_probe_rows(report: &EstimateReport, record: &mut RunRecord) {
    let res = &report.resolved;
    for s in &report.records {
        record.push_row(Row {
            kind: report.kind.name().into(),
            r: finite(res.r),
            s: finite(res.s),
            b: finite(res.b),
            b_prime: finite(res.b_prime),
            lambda: Some(s.lambda),
            delta: Some(s.delta),
            sample_id: Some(s.sample_id),
            lhs: Some(s.lhs),
            rhs: Some(s.rhs),
            ratio: Some(s.ratio),
        });
    }
}

fn push_probe_summary(report: &EstimateReport, record: &mut RunRecord) {
    record.push_summary("max_ratio", report.max_ratio);
    record.push_summary("median_ratio", report.median_ratio);
    record.push_summary("min_ratio", report.min_ratio);
    record.push_summary("max_over_median", report.max_over_median);
    record.push_summary("dilation_spread", report.spread);
    if let Some(s) = &report.slope {
        record.push_summary("predicted_slope", s.predicted);
        record.push_summary("min_slope", s.min_slope);
        record.push_summary("max_fit_residual", s.max_residual);
    }
    if let Some(c) = &report.resolution {
        record.push_summary("refinement_change", c.max_change);
    }
    if let Some(t) = report.tail_max {
        record.push_summary("max_tail_fraction", t);
    }
    for (i, name) in ["a", "b", "c"].iter().enumerate() {
        let m = report.regions.iter().map(|r| r.ratios[i]).fold(f64::NAN, f64::max);
        record.push_summary(format!("max_region_{name}_ratio"), m);
    }
    if let Some(e) = report.exponents {
        record.push_summary("sigma", e.sigma);
        record.push_summary("mu", e.mu);
    }
    for f in &report.flags {
        record.push_flag(format!("{}: {f}", report.kind));
    }
}

fn initial_data(section: &SolveSection, n: usize) -> Result<SpectralField> {
    let grid = Grid1D::new(section.half_length, n, Representation::PeriodicFft)?;
    let (a, w) = (section.amplitude, section.width);
    SpectralField::from_physical_fn(grid, |x| a * (-(x / w) * (x / w)).exp()).to_frequency()
}

/// Coefficients of `coarse` on the grid of `fine` (same period, more modes).
fn refine_to(coarse: &SpectralField, fine: &Grid1D) -> Result<SpectralField> {
    let mut c = SpectralField::zeros(*fine, crate::spectral::Layout1D::Frequency).into_coeffs();
    for (i, v) in coarse.coeffs().iter().enumerate() {
        match fine.index_of_mode(coarse.grid().mode(i)) {
            Some(j) => c[j] = *v,
            None => return Err(LabError::Shape("the resolution ladder must increase".into())),
        }
    }
    SpectralField::from_frequency(*fine, c)
}

fn push_solve(kind: &str, section: &SolveSection, res: &SolveResult, record: &mut RunRecord) {
    let q = |x| finite(crate::probes::params::to_f64(x));
    for (n, pair) in res.distances.windows(2).enumerate() {
        record.push_row(Row {
            kind: kind.into(),
            r: q(section.r),
            s: q(section.s),
            b: q(section.b),
            b_prime: q(section.b_prime),
            lambda: None,
            delta: Some(res.delta),
            sample_id: Some(n),
            lhs: Some(pair[1]),
            rhs: Some(pair[0]),
            ratio: Some(pair[1] / pair[0]),
        });
    }
}

fn run_solves(section: &SolveSection, ladder: &[usize], record: &mut RunRecord) -> Result<()> {
    let config = section.picard_config();
    let mut previous: Option<SpectralField> = None;
    for &n in ladder {
        let tag = format!("n{n}");
        let step = || -> Result<(SolveResult, Option<f64>)> {
            let u0 = initial_data(section, n)?;
            let res = picard_solve(&u0, &config)?;
            let gap = if section.reference {
                let grid = *u0.grid();
                let dt = section
                    .reference_dt
                    .unwrap_or_else(|| stability_limit(grid).map_or(REFERENCE_DT_CAP, |l| (0.5 * l).min(REFERENCE_DT_CAP)));
                let tr = reference_integrate(&u0, &ReferenceConfig::new(res.delta, dt))?;
                Some(l2_distance(&res.final_state()?, tr.last())?)
            } else {
                None
            };
            Ok((res, gap))
        };
        let (res, gap) = match step() {
            Ok(x) => x,
            Err(e) if record.is_empty() => return Err(e),
            Err(e) => {
                record.fail(&e);
                return Ok(());
            }
        };
        push_solve(&format!("SOLVE_N{n}"), section, &res, record);
        let d = &res.diagnostics;
        record.push_summary(format!("{tag}:iterations"), res.iterations as f64);
        record.push_summary(format!("{tag}:converged"), if res.converged { 1.0 } else { 0.0 });
        record.push_summary(format!("{tag}:max_contraction"), res.contraction.iter().copied().fold(f64::NAN, f64::max));
        record.push_summary(format!("{tag}:residual"), res.residual);
        record.push_summary(format!("{tag}:data_norm"), d.data_norm);
        record.push_summary(format!("{tag}:constant"), d.constant);
        record.push_summary(format!("{tag}:smallness_delta"), d.smallness_delta);
        record.push_summary(format!("{tag}:sup_fl_norm"), d.sup_fl_norm);
        record.push_summary(format!("{tag}:extension_norm"), d.extension_norm);
        if let Some(g) = gap {
            record.push_summary(format!("{tag}:reference_l2_gap"), g);
        }
        if !res.converged {
            record.push_flag(format!("N = {n}: no convergence in {} iterations", res.iterations));
        }
        let last = res.final_state()?;
        if let Some(prev) = &previous {
            let gap = l2_distance(&refine_to(prev, last.grid())?, &last)?;
            record.push_summary(format!("ladder_l2_gap:{}->{n}", prev.grid().n_modes()), gap);
        }
        previous = Some(last);
    }
    Ok(())
}

fn run_lipschitz(
    section: &SolveSection,
    lip: &LipschitzSection,
    seed: u64,
    ladder: &[usize],
    record: &mut RunRecord,
) -> Result<()> {
    let config = section.picard_config();
    let options = lip.options(seed);
    let q = |x| finite(crate::probes::params::to_f64(x));
    for &n in ladder {
        let rows = match initial_data(section, n).and_then(|u0| lipschitz_probe(&u0, &config, &options)) {
            Ok(rows) => rows,
            Err(e) if record.is_empty() => return Err(e),
            Err(e) => {
                record.fail(&e);
                return Ok(());
            }
        };
        let kind = format!("LIPSCHITZ_N{n}");
        for (i, row) in rows.iter().enumerate() {
            if let Some(err) = &row.error {
                record.push_flag(format!("N = {n}, eps = {}: {err}", row.eps));
                continue;
            }
            record.push_row(Row {
                kind: kind.clone(),
                r: q(section.r),
                s: q(section.s),
                b: q(section.b),
                b_prime: q(section.b_prime),
                lambda: Some(row.eps),
                delta: Some(options.delta0),
                sample_id: Some(i),
                lhs: row.solution_gap,
                rhs: row.data_gap,
                ratio: row.quotient,
            });
        }
        let qs: Vec<f64> = rows.iter().filter_map(|r| r.quotient).collect();
        let (lo, hi) = (
            qs.iter().copied().fold(f64::INFINITY, f64::min),
            qs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        record.push_summary(format!("n{n}:max_quotient"), hi);
        record.push_summary(format!("n{n}:min_quotient"), lo);
        record.push_summary(format!("n{n}:quotient_spread"), hi / lo);
    }
    Ok(())
}
