//! Acceptance suite. Each test checks one criterion and writes a single
//! `criterion N: PASS|FAIL ...` line to stderr, bypassing output capture.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{lemma3_brute_force, Gaussian};
use mkdv_lab::bilinear::{lemma3_closed_form, resonance_data, resonance_sides, ResonancePolynomial};
use mkdv_lab::probes::params::{q, EstimateKind, Q};
use mkdv_lab::probes::runner::{run_probe, EstimateReport, ProbeConfig, UNIFORMITY_FACTOR};
use mkdv_lab::solver::{
    conserved_quantities, l2_distance, lipschitz_probe, picard_solve, reference_integrate, stability_limit, Kink,
    LipschitzOptions, PicardConfig, ReferenceConfig,
};
use mkdv_lab::spectral::{Grid1D, Representation, SpectralField};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn finish(n: u32, checks: &[(bool, String)], elapsed: Duration) {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.0).map(|c| c.1.as_str()).collect();
    let detail = if failed.is_empty() {
        checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; ")
    } else {
        failed.join("; ")
    };
    report(n, failed.is_empty(), &format!("{detail} ({:.1} s)", elapsed.as_secs_f64()));
    assert!(failed.is_empty(), "criterion {n}: {}", failed.join("; "));
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let n: i64 = rng.gen_range(-1_000_000..=1_000_000);
    let d: i64 = rng.gen_range(1..=10_000);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// `xi1^3 + xi2^3 - eta1^3 - eta2^3` with `xi2 = xi - xi1`, `eta2 = xi - eta1`.
fn cubic_difference(xi: &BigRational, xi1: &BigRational, eta1: &BigRational) -> BigRational {
    let cube = |a: &BigRational| a * a * a;
    cube(xi1) + cube(&(xi - xi1)) - cube(eta1) - cube(&(xi - eta1))
}

#[test]
fn criterion_01_resonance_algebra() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut identity_failures = 0;
    let mut weight_failures = 0;
    let mut degenerate = 0;
    let trials = 10_000;
    for _ in 0..trials {
        let (xi, xi1, eta1) = (random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
        let (lhs, rhs) = resonance_sides(&xi, &xi1, &eta1);
        if lhs != rhs || lhs != cubic_difference(&xi, &xi1, &eta1) {
            identity_failures += 1;
        }
        // the difference is quadratic in eta1, so three samples fix its coefficients
        let g0 = cubic_difference(&xi, &xi1, &int(0));
        let g1 = cubic_difference(&xi, &xi1, &int(1));
        let g2 = cubic_difference(&xi, &xi1, &int(2));
        let c2 = (&g2 - &(&g1 * int(2)) + &g0) / int(2);
        let c1 = &g1 - &g0 - &c2;
        // the library polynomial is the difference up to sign
        let poly = ResonancePolynomial::new(&xi, &xi1);
        let coeffs = [g0.clone(), c1.clone(), c2.clone()];
        if poly.coeffs != coeffs && poly.coeffs != coeffs.clone().map(|c| -c) {
            weight_failures += 1;
            continue;
        }
        match resonance_data(&xi, &xi1) {
            Ok(data) => {
                let expected = int(3) * xi.abs() * (int(2) * &xi1 - &xi).abs();
                for (z, w) in data.zeros.iter().zip(&data.weights) {
                    let on_zero = (&g0 + z * (&c1 + z * &c2)).is_zero();
                    let slope = (&c1 + int(2) * &c2 * z).abs();
                    if !on_zero || &slope != w || w != &expected {
                        weight_failures += 1;
                    }
                }
            }
            Err(_) => degenerate += 1,
        }
    }
    let elapsed = start.elapsed();
    finish(
        1,
        &[
            (identity_failures == 0, format!("{identity_failures}/{trials} identity mismatches")),
            (weight_failures == 0, format!("{weight_failures} weight mismatches, {degenerate} degenerate draws")),
            (elapsed < Duration::from_secs(5), format!("runtime {:.2} s < 5 s", elapsed.as_secs_f64())),
        ],
        elapsed,
    );
}

fn sampled(g: Grid1D, u: &Gaussian) -> SpectralField {
    let u = *u;
    SpectralField::from_profile(g, move |xi| if xi == 0.0 { Complex64::new(0.0, 0.0) } else { u.eval(xi) })
}

fn random_gaussian(rng: &mut ChaCha8Rng) -> Gaussian {
    let width = rng.gen_range(0.5..1.0);
    let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    Gaussian {
        amp: Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU)),
        center: side * rng.gen_range(2.5 * width..3.5),
        width,
        shift: rng.gen_range(-1.0..1.0),
    }
}

#[test]
fn criterion_02_lemma3_closed_form_matches_quadrature() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let grid = Grid1D::with_band(10.0, 128, Representation::Quadrature).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (u1, u2) = (random_gaussian(&mut rng), random_gaussian(&mut rng));
        let closed = lemma3_closed_form(&sampled(grid, &u1), &sampled(grid, &u2)).unwrap().value;
        // widen the time window until the tail-corrected value settles
        let mut s_max = 40.0;
        let mut brute = lemma3_brute_force(&u1, &u2, s_max, 0.01, 0.0625).value;
        while s_max < 640.0 {
            s_max *= 2.0;
            let next = lemma3_brute_force(&u1, &u2, s_max, 0.01, 0.0625).value;
            let settled = (next - brute).abs() < 1e-3 * next;
            brute = next;
            if settled {
                break;
            }
        }
        worst = worst.max((closed - brute).abs() / brute);
    }
    let elapsed = start.elapsed();
    finish(
        2,
        &[
            (worst < 0.02, format!("worst relative gap {worst:.2e} < 2e-2 over 10 pairs")),
            (elapsed < Duration::from_secs(120), format!("runtime {:.1} s < 120 s", elapsed.as_secs_f64())),
        ],
        elapsed,
    );
}

#[test]
fn criterion_03_homogeneous_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    for i in 0..20 {
        let mut c = ProbeConfig::new(EstimateKind::Homog5);
        c.samples = 1;
        c.seed = 300 + i;
        c.params.set("r", q(1, 1) + q(rng.gen_range(1..=20), 20)).unwrap();
        c.params.set("s", q(rng.gen_range(-6..=12), 12)).unwrap();
        c.params.set("b", q(rng.gen_range(-5..=10), 10)).unwrap();
        match run_probe(&c) {
            Ok(rep) => {
                for rec in &rep.records {
                    worst = worst.max((rec.ratio - 1.0).abs());
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    finish(
        3,
        &[
            (errors.is_empty(), format!("{} failed evaluations {errors:?}", errors.len())),
            (worst <= 1e-6, format!("max |ratio - 1| = {worst:.2e} <= 1e-6 over 20 combinations")),
        ],
        start.elapsed(),
    );
}

#[test]
fn criterion_04_lemma2_delta_power() {
    let start = Instant::now();
    let pairs = [(q(3, 5), q(-3, 10)), (q(1, 2), q(-1, 10)), (q(9, 10), q(-1, 20))];
    let mut checks = Vec::new();
    for r in [q(2, 1), q(3, 2)] {
        for (b, bp) in pairs {
            let mut c = ProbeConfig::new(EstimateKind::Lemma2Delta);
            c.params.set("r", r).unwrap();
            c.params.set("b", b).unwrap();
            c.params.set("b_prime", bp).unwrap();
            let label = format!("r={r} b={b} b'={bp}");
            match run_probe(&c) {
                Ok(rep) => {
                    let slope = rep.slope.expect("several deltas give a slope fit");
                    let need = slope.predicted - 0.1;
                    checks.push((
                        slope.min_slope >= need,
                        format!("{label}: min slope {:.3} >= {:.3}", slope.min_slope, need),
                    ));
                }
                Err(e) => checks.push((false, format!("{label}: {e}"))),
            }
        }
    }
    finish(4, &checks, start.elapsed());
}

fn uniformity_config(kind: EstimateKind) -> ProbeConfig {
    let mut c = ProbeConfig::new(kind);
    c.samples = 100;
    c.seed = 5;
    c.lambdas = ProbeConfig::decade_lambdas();
    c.region_samples = 0;
    if kind == EstimateKind::Lemma2Delta {
        c.deltas = vec![1.0 / 64.0];
    }
    c
}

fn t2_config(r: Q, s: Q) -> ProbeConfig {
    let mut c = uniformity_config(EstimateKind::TrilinearT2);
    c.params.set("r", r).unwrap();
    c.params.set("s", s).unwrap();
    c.params.set("b", r.recip() + q(1, 20)).unwrap();
    c.params.set("b_prime", r.recip() / q(2, 1) - q(5, 8) - q(1, 20)).unwrap();
    c
}

#[test]
fn criterion_05_uniform_constants() {
    let start = Instant::now();
    let mut configs: Vec<(String, ProbeConfig)> = EstimateKind::ALL
        .iter()
        .filter(|&&k| k != EstimateKind::TrilinearT2)
        .map(|&k| (k.name().to_string(), uniformity_config(k)))
        .collect();
    configs.push(("TRILINEAR_T2 (2, 1/4)".into(), t2_config(q(2, 1), q(1, 4))));
    configs.push(("TRILINEAR_T2 (3/2, 1/6)".into(), t2_config(q(3, 2), q(1, 6))));
    let mut checks = Vec::new();
    for (label, config) in configs {
        let t = Instant::now();
        let outcome: Result<EstimateReport, _> = run_probe(&config);
        let (pass, detail) = match outcome {
            Ok(rep) => {
                let within = rep.max_over_median < UNIFORMITY_FACTOR;
                // a breach must be visible in the report, never passed silently
                let flagged = within || !rep.flags.is_empty();
                (
                    within && flagged,
                    format!(
                        "{label}: max/median {:.2}{}",
                        rep.max_over_median,
                        if within { String::new() } else { format!(" flagged={flagged}") }
                    ),
                )
            }
            Err(e) => (false, format!("{label}: {e}")),
        };
        let _ = std::io::stderr()
            .write_all(format!("  {detail} ({:.0} s)\n", t.elapsed().as_secs_f64()).as_bytes());
        checks.push((pass, detail));
    }
    finish(5, &checks, start.elapsed());
}

fn gaussian_datum(grid: Grid1D, amp: f64) -> SpectralField {
    SpectralField::from_physical_fn(grid, move |x| amp * (-x * x).exp())
        .to_frequency()
        .unwrap()
}

#[test]
fn criterion_06_picard_matches_the_reference_integrator() {
    let start = Instant::now();
    let grid = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
    let u0 = gaussian_datum(grid, 0.1);
    let config = PicardConfig {
        delta: 0.5,
        ..PicardConfig::default()
    };
    let sol = picard_solve(&u0, &config).unwrap();
    let dt = 1e-4f64.min(0.5 * stability_limit(grid).unwrap());
    let reference = reference_integrate(&u0, &ReferenceConfig::new(config.delta, dt)).unwrap();
    let gap = l2_distance(&sol.final_state().unwrap(), reference.last()).unwrap();
    let contraction = sol.contraction.iter().cloned().fold(0.0, f64::max);
    let smallness = sol.diagnostics.smallness_delta;
    let elapsed = start.elapsed();
    finish(
        6,
        &[
            (sol.converged, format!("converged in {} iterations", sol.iterations)),
            (gap < 1e-6, format!("L2 gap at t = delta {gap:.2e} < 1e-6")),
            (
                config.delta <= smallness,
                format!("delta {} within the smallness bound {smallness:.2e}", config.delta),
            ),
            (contraction <= 0.5, format!("max contraction {contraction:.2e} <= 1/2")),
            (elapsed < Duration::from_secs(60), format!("runtime {:.1} s < 60 s", elapsed.as_secs_f64())),
        ],
        elapsed,
    );
}

fn relative_drift(values: impl Iterator<Item = f64>, initial: f64) -> f64 {
    values.map(|v| (v - initial).abs() / initial.abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_07_reference_order_and_invariants() {
    let start = Instant::now();
    let grid = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
    let u0 = gaussian_datum(grid, 0.5);

    let dt = 1e-3;
    let run = |dt: f64| reference_integrate(&u0, &ReferenceConfig::new(0.5, dt)).unwrap();
    let fine = run(dt / 8.0);
    let e1 = l2_distance(run(dt).last(), fine.last()).unwrap();
    let e2 = l2_distance(run(dt / 2.0).last(), fine.last()).unwrap();
    let factor = e1 / e2;

    let mut config = ReferenceConfig::new(1.0, 1e-4);
    config.sample_times = (1..=10).map(|k| k as f64 / 10.0).collect();
    let traj = reference_integrate(&u0, &config).unwrap();
    let q0 = conserved_quantities(&u0).unwrap();
    let qs = traj.conserved().unwrap();
    let mass = relative_drift(qs.iter().map(|c| c.mass), q0.mass);
    let l2 = relative_drift(qs.iter().map(|c| c.l2), q0.l2);
    let ham = relative_drift(qs.iter().map(|c| c.hamiltonian), q0.hamiltonian);
    finish(
        7,
        &[
            (
                (10.0..=22.0).contains(&factor),
                format!("error reduction per halving {factor:.2} in [10, 22] (errors {e1:.2e}, {e2:.2e})"),
            ),
            (mass < 1e-10, format!("mass drift {mass:.1e} < 1e-10")),
            (l2 < 1e-8, format!("L2 drift {l2:.1e} < 1e-8")),
            (ham < 1e-6, format!("Hamiltonian drift {ham:.1e} < 1e-6")),
        ],
        start.elapsed(),
    );
}

/// Polynomials in `T = tanh(z)`, lowest degree first.
fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += scale * y;
    }
    out
}

/// `d/dx` of `p(tanh(b x))`, using `tanh' = 1 - tanh^2`.
fn poly_dx(p: &[f64], b: f64) -> Vec<f64> {
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    if dp.is_empty() {
        return vec![0.0];
    }
    poly_mul(&dp, &[b, 0.0, -b])
}

/// Residual polynomial of `u = a tanh(b (x - v t))`:
/// `u_t + u_xxx - 3 u^2 u_x` with `u_t = -v u_x`.
fn kink_residual_poly(a: f64, b: f64, v: f64) -> Vec<f64> {
    let u = vec![0.0, a];
    let ux = poly_dx(&u, b);
    let uxxx = poly_dx(&poly_dx(&ux, b), b);
    let cubic = poly_mul(&poly_mul(&u, &u), &ux);
    poly_add(&poly_add(&uxxx, &ux, -v), &cubic, -3.0)
}

#[test]
fn criterion_08_kink_residual() {
    let start = Instant::now();
    let mut checks = Vec::new();
    let xs: Vec<f64> = (0..=4000).map(|j| -30.0 + 60.0 * j as f64 / 4000.0).collect();
    let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    for b in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let scale = b * b * b * b;
        let exact = kink_residual_poly(2f64.sqrt() * b, b, -2.0 * b * b);
        let oracle = exact.iter().fold(0.0f64, |m, c| m.max(c.abs())) / scale;
        let wrong = kink_residual_poly(2f64.sqrt() * b, b, 2.0 * b * b);
        let sensitivity = wrong.iter().fold(0.0f64, |m, c| m.max(c.abs())) / scale;
        let kink = Kink { b };
        let library = kink.max_residual(&xs, &ts);
        checks.push((
            library < 1e-10 && oracle < 1e-12 && sensitivity > 1.0,
            format!("b={b}: residual {library:.1e} < 1e-10 (symbolic {oracle:.1e}, wrong speed {sensitivity:.1})"),
        ));
    }
    finish(8, &checks, start.elapsed());
}

#[test]
fn criterion_09_lipschitz_quotients() {
    let start = Instant::now();
    let grid = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
    let u0 = gaussian_datum(grid, 0.1);
    let eps = vec![1e-2, 1e-3, 1e-4];
    let config = PicardConfig {
        delta: 0.5,
        ..PicardConfig::default()
    };
    let options = LipschitzOptions::new(eps.clone(), config.delta);
    let quotients = |config: &PicardConfig| -> Vec<f64> {
        lipschitz_probe(&u0, config, &options)
            .unwrap()
            .iter()
            .map(|row| row.quotient.unwrap_or(f64::NAN))
            .collect()
    };
    let nonlinear = quotients(&config);
    let linear = quotients(&PicardConfig {
        nonlinear: false,
        ..config.clone()
    });
    let max = nonlinear.iter().cloned().fold(f64::NAN, f64::max);
    let min = nonlinear.iter().cloned().fold(f64::NAN, f64::min);
    let spread = max / min;
    let linear_gap = linear.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    finish(
        9,
        &[
            (
                nonlinear.iter().all(|x| x.is_finite()) && spread < 2.0,
                format!("quotients {nonlinear:.5?} vary by x{spread:.4} < x2"),
            ),
            (
                linear.iter().all(|x| x.is_finite()) && linear_gap <= 1e-10,
                format!("linear flow |quotient - 1| {linear_gap:.1e} <= 1e-10"),
            ),
        ],
        start.elapsed(),
    );
}

#[test]
fn criterion_10_embedding_caps() {
    let start = Instant::now();
    let mut checks = Vec::new();
    for r in [q(2, 1), q(3, 2)] {
        let b = r.recip() + q(1, 20);
        let mut e52 = ProbeConfig::new(EstimateKind::Embed52);
        e52.params.set("r", r).unwrap();
        e52.params.set("s", q(1, 2) - r.recip() / q(2, 1)).unwrap();
        e52.params.set("b", b).unwrap();

        let mut e4 = ProbeConfig::new(EstimateKind::Embed4);
        e4.params.set("r", r).unwrap();
        e4.params.set("s", q(1, 4)).unwrap();
        e4.params.set("b", b).unwrap();
        e4.params.set("r0", q(2, 1)).unwrap();
        e4.params.set("s0", q(0, 1)).unwrap();
        e4.params.set("b0", q(1, 2)).unwrap();

        for mut c in [e4, e52] {
            c.samples = 100;
            c.seed = 10;
            let label = format!("{} r={r} b={b}", c.kind);
            match run_probe(&c) {
                Ok(rep) => checks.push((
                    rep.records.len() == 100 && rep.max_ratio <= 1.0,
                    format!("{label}: max ratio {:.4} <= 1", rep.max_ratio),
                )),
                Err(e) => checks.push((false, format!("{label}: {e}"))),
            }
        }
    }
    finish(10, &checks, start.elapsed());
}
