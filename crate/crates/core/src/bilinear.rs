//! Weighted bilinear convolutions `I^s_-`, `I^s_+`, the adjoint pair built
//! from them, the cubic resonance function of two Airy waves and the exact
//! value of the bilinear smoothing quantity.
//!
//! Convolutions use the same normalization as the Fourier transform:
//! `I^s_-(f, g)_hat(xi) = (2 pi)^{-1/2} int_{xi1 + xi2 = xi} |xi1 - xi2|^s f_hat(xi1) g_hat(xi2)`,
//! so `s = 0` is the transform of the pointwise product.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Layout1D, Representation, SpectralField};

fn check_pair(f: &SpectralField, g: &SpectralField) -> Result<()> {
    f.expect_layout(Layout1D::Frequency)?;
    g.expect_layout(Layout1D::Frequency)?;
    if !f.grid().same_as(g.grid()) {
        return Err(LabError::Shape(format!(
            "bilinear operands live on different grids ({} modes, L = {} vs {} modes, L = {})",
            f.grid().n_modes(),
            f.grid().half_length(),
            g.grid().n_modes(),
            g.grid().half_length()
        )));
    }
    Ok(())
}

fn abs_pow(x: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        x.abs().powf(s)
    }
}

/// Direct convolution with weight `|m dxi|^s`, where the integer `m` is
/// `mode(k, k1, k2)` for output mode `k = k1 + k2`; output modes outside the
/// grid band are dropped.
fn weighted_convolution(
    f: &SpectralField,
    g: &SpectralField,
    s: f64,
    mode: impl Fn(i64, i64, i64) -> i64 + Sync,
) -> Result<SpectralField> {
    check_pair(f, g)?;
    let grid = *f.grid();
    let n = grid.n_modes() as i64;
    let half = n / 2;
    let dxi = grid.dxi();
    // |m| <= 2N covers every combination used below
    let table: Vec<f64> = (-2 * n..=2 * n).map(|m| abs_pow(m as f64 * dxi, s)).collect();
    let weights = grid.weights();
    let (fc, gc) = (f.coeffs(), g.coeffs());
    let norm = 1.0 / (2.0 * PI).sqrt();
    let zero = Complex64::new(0.0, 0.0);
    let (Some(f_lo), Some(g_lo)) = (support(fc).map(|r| r.0 - half), support(gc).map(|r| r.0 - half)) else {
        return SpectralField::from_frequency(grid, vec![zero; n as usize]);
    };
    let f_hi = support(fc).unwrap().1 - half;
    let g_hi = support(gc).unwrap().1 - half;
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let k = i - half;
            let mut acc = zero;
            // k1 + k2 = k with k1 in the support of f and k2 in that of g
            let lo = f_lo.max(k - g_hi);
            let hi = f_hi.min(k - g_lo);
            for k1 in lo..=hi {
                let i1 = (k1 + half) as usize;
                let i2 = (k - k1 + half) as usize;
                let (a, b) = (fc[i1], gc[i2]);
                if a == zero || b == zero {
                    continue;
                }
                let w = table[(mode(k, k1, k - k1) + 2 * n) as usize];
                acc += weights[i1] * w * a * b;
            }
            acc * norm
        })
        .collect();
    SpectralField::from_frequency(grid, out)
}

/// First and last nonzero index.
fn support(c: &[Complex64]) -> Option<(i64, i64)> {
    let zero = Complex64::new(0.0, 0.0);
    let lo = c.iter().position(|x| *x != zero)?;
    let hi = c.iter().rposition(|x| *x != zero)?;
    Some((lo as i64, hi as i64))
}

/// `I^s_-(f, g)` with weight `|xi1 - xi2|^s`.
pub fn i_minus(f: &SpectralField, g: &SpectralField, s: f64) -> Result<SpectralField> {
    weighted_convolution(f, g, s, |_, k1, k2| k1 - k2)
}

/// `I^s_+(f, g)` with weight `|xi + xi2|^s`.
pub fn i_plus(f: &SpectralField, g: &SpectralField, s: f64) -> Result<SpectralField> {
    weighted_convolution(f, g, s, |k, _, k2| k + k2)
}

/// The field `conj(u)`, whose transform is `conj(u_hat(-xi))`. The unpaired
/// Nyquist mode `-N/2` has no mirror on the grid and must be empty.
pub fn conj_field(u: &SpectralField) -> Result<SpectralField> {
    u.expect_layout(Layout1D::Frequency)?;
    let c = u.coeffs();
    let n = c.len();
    if c[0] != Complex64::new(0.0, 0.0) {
        return Err(LabError::Domain(
            "conjugation needs an empty Nyquist mode on a centered grid".into(),
        ));
    }
    let out = (0..n)
        .map(|i| if i == 0 { c[0] } else { c[n - i].conj() })
        .collect();
    SpectralField::from_frequency(*u.grid(), out)
}

/// `M^s_u v = I^s_-(u, v)`.
pub fn m_op(u: &SpectralField, v: &SpectralField, s: f64) -> Result<SpectralField> {
    i_minus(u, v, s)
}

/// `N^s_u w = I^s_+(w, conj u)`, the formal adjoint of [`m_op`].
pub fn n_op(u: &SpectralField, w: &SpectralField, s: f64) -> Result<SpectralField> {
    i_plus(w, &conj_field(u)?, s)
}

/// Weighted inner product `sum_k w_k a_k conj(b_k)` of frequency fields.
pub fn pairing(a: &SpectralField, b: &SpectralField) -> Result<Complex64> {
    check_pair(a, b)?;
    let g = a.grid();
    Ok(a.coeffs()
        .iter()
        .zip(b.coeffs())
        .enumerate()
        .map(|(i, (x, y))| g.weight(i) * x * y.conj())
        .sum())
}

/// The resonance polynomial `g(x) = 3 xi (x^2 + xi (xi1 - x) - xi1^2)` in the
/// free variable `x = eta1`, as coefficients `[c0, c1, c2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonancePolynomial {
    pub coeffs: [BigRational; 3],
}

impl ResonancePolynomial {
    pub fn new(xi: &BigRational, xi1: &BigRational) -> Self {
        let three = BigRational::from_integer(BigInt::from(3));
        let k = &three * xi;
        Self {
            coeffs: [
                &k * (xi * xi1 - xi1 * xi1),
                -(&k * xi),
                k,
            ],
        }
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let [c0, c1, c2] = &self.coeffs;
        c0 + x * (c1 + x * c2)
    }

    /// Coefficients `[d0, d1]` of the derivative.
    pub fn derivative(&self) -> [BigRational; 2] {
        let two = BigRational::from_integer(BigInt::from(2));
        [self.coeffs[1].clone(), &two * &self.coeffs[2]]
    }
}

/// Both sides of the cubic identity
/// `xi1^3 + xi2^3 - eta1^3 - eta2^3 = 3 xi (xi1^2 - eta1^2 + xi (eta1 - xi1))`
/// with `xi2 = xi - xi1`, `eta2 = xi - eta1`.
pub fn resonance_sides(
    xi: &BigRational,
    xi1: &BigRational,
    eta1: &BigRational,
) -> (BigRational, BigRational) {
    let cube = |a: &BigRational| a * a * a;
    let xi2 = xi - xi1;
    let eta2 = xi - eta1;
    let lhs = cube(xi1) + cube(&xi2) - cube(eta1) - cube(&eta2);
    let three = BigRational::from_integer(BigInt::from(3));
    let rhs = three * xi * (xi1 * xi1 - eta1 * eta1 + xi * (eta1 - xi1));
    (lhs, rhs)
}

/// Zeros of the resonance function in `eta1` and the weights `|g'|` of the
/// delta measure at each zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceData {
    pub xi: BigRational,
    pub xi1: BigRational,
    pub zeros: [BigRational; 2],
    pub weights: [BigRational; 2],
}

impl ResonanceData {
    pub fn weights_f64(&self) -> [f64; 2] {
        use num_traits::ToPrimitive;
        [
            self.weights[0].to_f64().unwrap_or(f64::NAN),
            self.weights[1].to_f64().unwrap_or(f64::NAN),
        ]
    }
}

/// Exact resonance data for `xi != 0`, `2 xi1 != xi`.
pub fn resonance_data(xi: &BigRational, xi1: &BigRational) -> Result<ResonanceData> {
    let degenerate = |reason| LabError::DegenerateResonance {
        xi: xi.to_string(),
        xi1: xi1.to_string(),
        reason,
    };
    if xi.is_zero() {
        return Err(degenerate("xi = 0 makes the resonance function vanish identically"));
    }
    let two = BigRational::from_integer(BigInt::from(2));
    if (&two * xi1 - xi).is_zero() {
        return Err(degenerate("2 xi1 = xi gives a double zero"));
    }
    let three = BigRational::from_integer(BigInt::from(3));
    let w = (&three * xi * (&two * xi1 - xi)).abs();
    Ok(ResonanceData {
        xi: xi.clone(),
        xi1: xi1.clone(),
        zeros: [xi1.clone(), xi - xi1],
        weights: [w.clone(), w],
    })
}

/// Floating-point front end of [`resonance_data`]; inputs are converted exactly.
pub fn resonance_data_f64(xi: f64, xi1: f64) -> Result<ResonanceData> {
    let conv = |x: f64| {
        BigRational::from_float(x).ok_or_else(|| LabError::Parameter(format!("non-finite frequency {x}")))
    };
    resonance_data(&conv(xi)?, &conv(xi1)?)
}

/// Value of `||I^{1/2} I^{1/2}_-(U u1, U u2)||^2_{L^2_{xt}}` after the time
/// integral has collapsed onto the resonance set.
///
/// With the unitary transform the collapse gives
/// `(1/3) int int |u1_hat(xi1)|^2 |u2_hat(xi2)|^2 + (1/3) int int u1_hat(xi1) conj(u2_hat(xi1)) u2_hat(xi2) conj(u1_hat(xi2))`.
/// The two terms factor, and the integrand extends continuously across the
/// degenerate lines `xi1 + xi2 = 0` and `xi1 = xi2`; their share of the
/// discrete sum is reported rather than dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Value {
    pub diagonal: f64,
    pub cross: Complex64,
    pub cross_modulus: f64,
    pub value: f64,
    /// `||u1||^2 ||u2||^2`, the squared right-hand side.
    pub norm_product: f64,
    pub degenerate_samples: usize,
    pub degenerate_contribution: f64,
}

/// Constant of the collapsed identity under the unitary convention.
pub const LEMMA3_CONSTANT: f64 = 1.0 / 3.0;

pub fn lemma3_closed_form(u1: &SpectralField, u2: &SpectralField) -> Result<Lemma3Value> {
    check_pair(u1, u2)?;
    let grid = *u1.grid();
    if grid.representation() != Representation::Quadrature {
        return Err(LabError::Precondition(
            "the resonant sum approximates integrals over the line; use a quadrature grid".into(),
        ));
    }
    let z = grid.zero_index();
    if u1.coeffs()[z] != Complex64::new(0.0, 0.0) || u2.coeffs()[z] != Complex64::new(0.0, 0.0) {
        return Err(LabError::Precondition("the zero mode must be empty".into()));
    }
    let (a, b) = (u1.coeffs(), u2.coeffs());
    let w = grid.weights();
    let n = grid.n_modes();
    let sq = |c: &[Complex64]| -> f64 { c.iter().zip(&w).map(|(x, w)| w * x.norm_sqr()).sum() };
    let (n1, n2) = (sq(a), sq(b));
    let overlap: Complex64 = a.iter().zip(b).zip(&w).map(|((x, y), w)| w * x * y.conj()).sum();
    let diagonal = LEMMA3_CONSTANT * n1 * n2;
    let cross = LEMMA3_CONSTANT * overlap * overlap.conj();
    let term = |i: usize, j: usize| -> f64 {
        let d = a[i].norm_sqr() * b[j].norm_sqr();
        let c = (a[i] * b[i].conj() * b[j] * a[j].conj()).re;
        LEMMA3_CONSTANT * w[i] * w[j] * (d + c)
    };
    let mut degenerate_samples = 0;
    let mut degenerate_contribution = 0.0;
    for i in 0..n {
        // xi1 = xi2
        degenerate_samples += 1;
        degenerate_contribution += term(i, i);
        // xi1 + xi2 = 0, mirror of i when it lies on the grid
        if i != 0 && i != z {
            let j = n - i;
            degenerate_samples += 1;
            degenerate_contribution += term(i, j);
        }
    }
    Ok(Lemma3Value {
        diagonal,
        cross,
        cross_modulus: cross.norm(),
        value: diagonal + cross.re,
        norm_product: n1 * n2,
        degenerate_samples,
        degenerate_contribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid1D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn unit_grid(repr: Representation) -> Grid1D {
        Grid1D::new(PI, 32, repr).unwrap() // dxi = 1
    }

    fn delta_at(g: Grid1D, k: i64) -> SpectralField {
        let i = g.index_of_mode(k).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); g.n_modes()];
        c[i] = Complex64::new(1.0, 0.0);
        SpectralField::from_frequency(g, c).unwrap()
    }

    fn random_band_field(g: Grid1D, rng: &mut ChaCha8Rng, band: usize) -> SpectralField {
        let n = g.n_modes();
        let c = (0..n)
            .map(|i| {
                if (i as i64 - (n / 2) as i64).unsigned_abs() as usize <= band {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        SpectralField::from_frequency(g, c).unwrap()
    }

    #[test]
    fn s_zero_is_the_product_transform() {
        let g = Grid1D::new(20.0, 256, Representation::PeriodicFft).unwrap();
        let f = SpectralField::from_physical_fn(g, |x| (-x * x).exp() * (1.0 + 0.3 * x));
        let h = SpectralField::from_physical_fn(g, |x| (-(x - 0.5).powi(2) / 2.0).exp());
        let (ff, hf) = (f.to_frequency().unwrap(), h.to_frequency().unwrap());
        let conv = i_minus(&ff, &hf, 0.0).unwrap();
        let prod: Vec<Complex64> = f.coeffs().iter().zip(h.coeffs()).map(|(a, b)| a * b).collect();
        let prod = SpectralField::from_physical(g, prod).unwrap().to_frequency().unwrap();
        for (x, y) in conv.coeffs().iter().zip(prod.coeffs()) {
            assert!((x - y).norm() < 1e-8);
        }
        let plus = i_plus(&ff, &hf, 0.0).unwrap();
        assert_eq!(plus, conv);
    }

    #[test]
    fn single_term_weight() {
        let g = unit_grid(Representation::PeriodicFft);
        let (f, h) = (delta_at(g, 1), delta_at(g, 3));
        let i4 = g.index_of_mode(4).unwrap();
        for s in [0.0, 0.5, 1.7] {
            let out = i_minus(&f, &h, s).unwrap();
            let expected = 2f64.powf(s) / (2.0 * PI).sqrt();
            assert!((out.coeffs()[i4].re - expected).abs() < 1e-14);
            assert_eq!(out.coeffs().iter().filter(|c| c.norm() > 0.0).count(), 1);
            // i_plus weight |xi + xi2| = 7
            let out = i_plus(&f, &h, s).unwrap();
            assert!((out.coeffs()[i4].re - 7f64.powf(s) / (2.0 * PI).sqrt()).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_in_its_arguments() {
        let g = Grid1D::with_band(6.0, 64, Representation::Quadrature).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_band_field(g, &mut rng, 20);
        let h = random_band_field(g, &mut rng, 20);
        for s in [0.0, 0.25, 0.5] {
            let a = i_minus(&f, &h, s).unwrap();
            let b = i_minus(&h, &f, s).unwrap();
            for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                assert!((x - y).norm() <= 1e-14 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn m_and_n_are_adjoint() {
        let g = Grid1D::with_band(6.0, 64, Representation::Quadrature).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [0.0, 3.0 / 16.0, 0.5] {
            for _ in 0..5 {
                // band 15 keeps every sum and difference inside the grid
                let u = random_band_field(g, &mut rng, 15);
                let v = random_band_field(g, &mut rng, 15);
                let w = random_band_field(g, &mut rng, 30);
                let lhs = pairing(&m_op(&u, &v, s).unwrap(), &w).unwrap();
                let rhs = pairing(&v, &n_op(&u, &w, s).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-8 * lhs.norm().max(1.0), "{s}: {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn grid_mismatch_is_a_shape_error() {
        let a = SpectralField::zeros(unit_grid(Representation::Quadrature), Layout1D::Frequency);
        let b = SpectralField::zeros(
            Grid1D::new(2.0, 32, Representation::Quadrature).unwrap(),
            Layout1D::Frequency,
        );
        assert!(matches!(i_minus(&a, &b, 0.5), Err(LabError::Shape(_))));
        assert!(matches!(lemma3_closed_form(&a, &b), Err(LabError::Shape(_))));
    }

    #[test]
    fn resonance_example_values() {
        let d = resonance_data(&q(3, 1), &q(1, 1)).unwrap();
        assert_eq!(d.zeros, [q(1, 1), q(2, 1)]);
        assert_eq!(d.weights, [q(9, 1), q(9, 1)]);
        let (l, r) = resonance_sides(&q(3, 1), &q(1, 1), &q(0, 1));
        assert_eq!(l, q(-18, 1));
        assert_eq!(r, q(-18, 1));
        let (l, r) = resonance_sides(&q(3, 1), &q(1, 1), &q(1, 1));
        assert!(l.is_zero() && r.is_zero());
    }

    #[test]
    fn degenerate_resonances_are_rejected() {
        assert!(matches!(
            resonance_data(&q(0, 1), &q(1, 1)),
            Err(LabError::DegenerateResonance { .. })
        ));
        assert!(matches!(
            resonance_data(&q(3, 1), &q(3, 2)),
            Err(LabError::DegenerateResonance { .. })
        ));
        assert!(resonance_data_f64(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zeros_solve_the_polynomial_and_weights_are_its_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let xi = q(rng.gen_range(-500..500), rng.gen_range(1..60));
            let xi1 = q(rng.gen_range(-500..500), rng.gen_range(1..60));
            let Ok(d) = resonance_data(&xi, &xi1) else { continue };
            let p = ResonancePolynomial::new(&xi, &xi1);
            let [d0, d1] = p.derivative();
            for (z, w) in d.zeros.iter().zip(&d.weights) {
                assert!(p.eval(z).is_zero());
                assert_eq!((&d0 + &d1 * z).abs(), *w);
            }
            // the polynomial is minus the resonance function in eta1
            let eta = q(rng.gen_range(-50..50), 7);
            let (l, _) = resonance_sides(&xi, &xi1, &eta);
            assert_eq!(p.eval(&eta), -l);
        }
    }

    #[test]
    fn closed_form_of_zero_is_zero() {
        let g = Grid1D::with_band(8.0, 128, Representation::Quadrature).unwrap();
        let u1 = SpectralField::zeros(g, Layout1D::Frequency);
        let u2 = SpectralField::from_profile(g, |xi| {
            Complex64::new(if xi == 0.0 { 0.0 } else { (-(xi - 2.0).powi(2)).exp() }, 0.0)
        });
        let v = lemma3_closed_form(&u1, &u2).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.cross_modulus, 0.0);
    }

    #[test]
    fn closed_form_bounds_and_factorization() {
        let g = Grid1D::with_band(8.0, 128, Representation::Quadrature).unwrap();
        let punctured = |c: f64, w: f64, ph: f64| {
            SpectralField::from_profile(g, move |xi| {
                if xi == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar((-(xi - c).powi(2) / (2.0 * w * w)).exp(), ph * xi)
                }
            })
        };
        let (u1, u2) = (punctured(2.0, 1.0, 0.0), punctured(-2.0, 0.7, 0.0));
        let v = lemma3_closed_form(&u1, &u2).unwrap();
        assert!(v.value <= 2.0 * LEMMA3_CONSTANT * v.norm_product);
        assert!(v.value >= LEMMA3_CONSTANT * v.norm_product);
        // identical data saturates the Cauchy-Schwarz step
        let same = lemma3_closed_form(&u1, &u1).unwrap();
        assert!((same.value - 2.0 * LEMMA3_CONSTANT * same.norm_product).abs() < 1e-12 * same.value);
        assert!((same.cross_modulus - same.diagonal).abs() < 1e-12 * same.diagonal);
        // the degenerate lines carry O(dxi) of the total
        assert!(v.degenerate_contribution < 0.1 * v.value, "{v:?}");
        assert_eq!(v.degenerate_samples, 2 * 128 - 2);
        // the zero mode must be empty
        let full = SpectralField::from_profile(g, |xi| Complex64::new((-xi * xi).exp(), 0.0));
        assert!(matches!(lemma3_closed_form(&full, &u2), Err(LabError::Precondition(_))));
    }
}
