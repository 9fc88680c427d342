//! Frequency-region decomposition of the trilinear term.
//!
//! With `a ~ b` meaning `max/min <= 4` and `a >> b` meaning `a > 4b`, an
//! ordered triple `|xi_max| >= |xi_med| >= |xi_min|` falls in
//! - A: all three comparable, or all `<= 1`;
//! - C: `|xi_max| >> |xi_med|`;
//! - B: everything else, i.e. `|xi_max| ~ |xi_med|` with `|xi_max| >> |xi_min|`.
//!
//! The classifier is symmetric in its arguments, so every unordered triple is
//! counted once.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Layout2D, SpaceTimeField};

/// Threshold behind `~` and `>>`.
pub const SIM: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
    C,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::A, Region::B, Region::C];

    pub fn index(self) -> usize {
        match self {
            Region::A => 0,
            Region::B => 1,
            Region::C => 2,
        }
    }
}

pub fn classify(x1: f64, x2: f64, x3: f64) -> Region {
    let mut v = [x1.abs(), x2.abs(), x3.abs()];
    v.sort_by(|a, b| b.total_cmp(a));
    let [max, med, min] = v;
    if max <= 1.0 || max <= SIM * min {
        Region::A
    } else if max > SIM * med {
        Region::C
    } else {
        Region::B
    }
}

/// `d_x(u1 u2 u3)` split by region, by direct summation over frequency
/// triples at every time node. Inputs are mixed-layout fields on one grid;
/// each output is the region's share in mixed layout.
pub fn trilinear_by_region(u: [&SpaceTimeField; 3]) -> Result<[SpaceTimeField; 3]> {
    for f in u {
        f.expect_layout(Layout2D::Mixed)?;
        if f.grid() != u[0].grid() {
            return Err(LabError::Shape("region split needs one common grid".into()));
        }
    }
    let grid = *u[0].grid();
    let sp = grid.space;
    let n = sp.n_modes() as i64;
    let half = n / 2;
    let nt = grid.n_times();
    let dxi = sp.dxi();
    let norm = dxi * dxi / (2.0 * std::f64::consts::PI);
    let peak = u.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    let cut = 1e-10 * peak;
    let mut out = [
        SpaceTimeField::zeros(grid, Layout2D::Mixed),
        SpaceTimeField::zeros(grid, Layout2D::Mixed),
        SpaceTimeField::zeros(grid, Layout2D::Mixed),
    ];
    let mut acc = vec![[Complex64::new(0.0, 0.0); 3]; n as usize];
    for t in 0..nt {
        let nz: Vec<Vec<(i64, Complex64)>> = u
            .iter()
            .map(|f| {
                (0..n as usize)
                    .map(|i| (i as i64 - half, f.get(i, t)))
                    .filter(|(_, c)| c.norm() > cut)
                    .collect()
            })
            .collect();
        if nz.iter().any(Vec::is_empty) {
            continue;
        }
        acc.iter_mut().for_each(|a| *a = [Complex64::new(0.0, 0.0); 3]);
        for &(k1, a) in &nz[0] {
            for &(k2, b) in &nz[1] {
                let ab = a * b;
                for &(k3, c) in &nz[2] {
                    let k = k1 + k2 + k3;
                    if k < -half || k >= half {
                        continue;
                    }
                    let r = classify(k1 as f64 * dxi, k2 as f64 * dxi, k3 as f64 * dxi);
                    acc[(k + half) as usize][r.index()] += ab * c;
                }
            }
        }
        for (i, parts) in acc.iter().enumerate() {
            let xi = sp.xi(i);
            for (o, v) in out.iter_mut().zip(parts) {
                o.coeffs_mut()[i * nt + t] = Complex64::new(0.0, xi) * norm * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid1D, Representation, SpaceTimeGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classifier_partitions_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..100_000 {
            let x: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-50.0..50.0) * rng.gen_range(0.0f64..1.0).powi(3));
            let r = classify(x[0], x[1], x[2]);
            // symmetric under permutations and sign flips
            for p in [[1, 0, 2], [2, 1, 0], [0, 2, 1]] {
                assert_eq!(classify(x[p[0]], -x[p[1]], x[p[2]]), r);
            }
            // exactly one of the defining conditions holds
            let mut v = x.map(f64::abs);
            v.sort_by(|a, b| b.total_cmp(a));
            let a = v[0] <= 1.0 || v[0] <= SIM * v[2];
            let c = !a && v[0] > SIM * v[1];
            let b = !a && !c;
            assert_eq!([a, b, c].iter().filter(|&&f| f).count(), 1);
            assert_eq!(r, if a { Region::A } else if b { Region::B } else { Region::C });
            counts[r.index()] += 1;
        }
        assert!(counts.iter().all(|&c| c > 1000), "{counts:?}");
    }

    #[test]
    fn named_examples() {
        assert_eq!(classify(0.5, -0.9, 0.2), Region::A);
        assert_eq!(classify(10.0, 12.0, -9.0), Region::A);
        assert_eq!(classify(10.0, -12.0, 0.5), Region::B);
        assert_eq!(classify(50.0, 2.0, 1.0), Region::C);
    }

    #[test]
    fn parts_sum_to_the_pseudospectral_product() {
        let space = Grid1D::with_band(6.0, 48, Representation::PeriodicFft).unwrap();
        let grid = SpaceTimeGrid::centered(space, 8, 1.0).unwrap();
        let g = |c: f64, t: f64| {
            move |xi: f64, tt: f64| {
                Complex64::from_polar((-2.0 * (xi - c) * (xi - c)).exp() * (1.0 + tt * t), xi * 0.3)
            }
        };
        let fields = [
            SpaceTimeField::from_mixed_fn(grid, g(1.0, 0.1)),
            SpaceTimeField::from_mixed_fn(grid, g(-0.5, 0.2)),
            SpaceTimeField::from_mixed_fn(grid, g(0.8, -0.1)),
        ];
        let parts = trilinear_by_region([&fields[0], &fields[1], &fields[2]]).unwrap();
        // pseudospectral d_x(u1 u2 u3) on the same grid: band 6 holds the
        // product of three band-2 fields without wrap-around
        let phys: Vec<SpaceTimeField> = fields.iter().map(|f| f.to_physical().unwrap()).collect();
        let mut prod = phys[0].clone();
        for (p, (a, b)) in prod.coeffs_mut().iter_mut().zip(phys[1].coeffs().iter().zip(phys[2].coeffs())) {
            *p *= a * b;
        }
        let prod = prod.to_mixed().unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..space.n_modes() {
            let xi = space.xi(i);
            if xi.abs() > 5.0 {
                continue;
            }
            for t in 0..8 {
                let want = Complex64::new(0.0, xi) * prod.get(i, t);
                let got: Complex64 = parts.iter().map(|p| p.get(i, t)).sum();
                worst = worst.max((want - got).norm());
            }
        }
        assert!(worst < 1e-8, "{worst}");
    }
}
