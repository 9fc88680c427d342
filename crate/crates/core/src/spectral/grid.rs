use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// How samples on a [`Grid1D`] are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    /// Samples of a function on the torus `[-L, L)`; uniform weights.
    PeriodicFft,
    /// Samples of a smooth function on the real line; trapezoid weights.
    Quadrature,
}

/// Uniform frequency grid `xi_k = k * pi / L`, `k` in `[-N/2, N/2)`.
///
/// Coefficients are stored in centered order: storage index `i` holds mode
/// `k = i - N/2`, so index `N/2` is the zero mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    half_length: f64,
    n_modes: usize,
    repr: Representation,
}

impl Grid1D {
    pub fn new(half_length: f64, n_modes: usize, repr: Representation) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(LabError::Parameter(format!(
                "half_length must be positive, got {half_length}"
            )));
        }
        if n_modes < 8 || n_modes % 2 != 0 {
            return Err(LabError::Parameter(format!(
                "n_modes must be even and >= 8, got {n_modes}"
            )));
        }
        Ok(Self {
            half_length,
            n_modes,
            repr,
        })
    }

    /// Grid whose frequency band is `[-xi_max, xi_max)`.
    pub fn with_band(xi_max: f64, n_modes: usize, repr: Representation) -> Result<Self> {
        if !(xi_max > 0.0) {
            return Err(LabError::Parameter(format!("xi_max must be positive, got {xi_max}")));
        }
        Self::new(n_modes as f64 * PI / (2.0 * xi_max), n_modes, repr)
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n_modes as f64
    }

    /// Largest representable |xi| (the Nyquist mode, `N/2 * dxi`).
    pub fn xi_max(&self) -> f64 {
        self.n_modes as f64 / 2.0 * self.dxi()
    }

    pub fn zero_index(&self) -> usize {
        self.n_modes / 2
    }

    /// Integer mode number of storage index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        i as i64 - (self.n_modes / 2) as i64
    }

    /// Storage index of mode `k`, if it lies on the grid.
    pub fn index_of_mode(&self, k: i64) -> Option<usize> {
        let i = k + (self.n_modes / 2) as i64;
        (0..self.n_modes as i64).contains(&i).then_some(i as usize)
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.mode(i) as f64 * self.dxi()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n_modes).map(|i| self.xi(i)).collect()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_modes).map(|j| self.x(j)).collect()
    }

    /// Quadrature weight of frequency sample `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match self.repr {
            Representation::PeriodicFft => self.dxi(),
            Representation::Quadrature => {
                if i == 0 || i + 1 == self.n_modes {
                    0.5 * self.dxi()
                } else {
                    self.dxi()
                }
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_modes).map(|i| self.weight(i)).collect()
    }

    pub(crate) fn same_as(&self, other: &Grid1D) -> bool {
        self.n_modes == other.n_modes
            && self.repr == other.repr
            && (self.half_length - other.half_length).abs() <= 1e-12 * self.half_length
    }
}

/// Time axis of a [`SpaceTimeGrid`]: `n_times` nodes `t_lo + n dt` on the
/// periodic window `[t_lo, t_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub space: Grid1D,
    n_times: usize,
    t_lo: f64,
    t_hi: f64,
}

impl SpaceTimeGrid {
    pub fn new(space: Grid1D, n_times: usize, t_lo: f64, t_hi: f64) -> Result<Self> {
        if n_times < 8 {
            return Err(LabError::Parameter(format!("n_times must be >= 8, got {n_times}")));
        }
        if !(t_hi > t_lo) {
            return Err(LabError::Parameter(format!(
                "time window must satisfy t_hi > t_lo, got [{t_lo}, {t_hi}]"
            )));
        }
        Ok(Self {
            space,
            n_times,
            t_lo,
            t_hi,
        })
    }

    /// Symmetric window `[-half_window, half_window)` whose node `n_times / 2` is `t = 0`.
    pub fn centered(space: Grid1D, n_times: usize, half_window: f64) -> Result<Self> {
        if n_times % 2 != 0 {
            return Err(LabError::Parameter("centered time grids need even n_times".into()));
        }
        Self::new(space, n_times, -half_window, half_window)
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_hi
    }

    pub fn period(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn dt(&self) -> f64 {
        self.period() / self.n_times as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t_lo + n as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_times).map(|n| self.t(n)).collect()
    }

    pub fn dtau(&self) -> f64 {
        2.0 * PI / self.period()
    }

    /// Dual frequency of storage index `m` (centered order as for space).
    pub fn tau(&self, m: usize) -> f64 {
        (m as f64 - (self.n_times / 2) as f64) * self.dtau()
    }

    /// Index of the node `t = 0`, if the grid has one.
    pub fn zero_time_index(&self) -> Option<usize> {
        let pos = -self.t_lo / self.dt();
        let n = pos.round();
        ((pos - n).abs() < 1e-9 && n >= 0.0 && (n as usize) < self.n_times).then_some(n as usize)
    }

    pub fn size(&self) -> usize {
        self.space.n_modes() * self.n_times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(1.0, 6, Representation::PeriodicFft).is_err());
        assert!(Grid1D::new(1.0, 9, Representation::PeriodicFft).is_err());
        assert!(Grid1D::new(0.0, 16, Representation::PeriodicFft).is_err());
        let g = Grid1D::new(1.0, 16, Representation::PeriodicFft).unwrap();
        assert!(SpaceTimeGrid::new(g, 4, 0.0, 1.0).is_err());
        assert!(SpaceTimeGrid::new(g, 8, 1.0, 1.0).is_err());
    }

    #[test]
    fn frequencies_symmetric() {
        let g = Grid1D::with_band(8.0, 128, Representation::Quadrature).unwrap();
        assert!((g.dxi() - 0.125).abs() < 1e-15);
        assert_eq!(g.xi(g.zero_index()), 0.0);
        assert!((g.xi(0) + 8.0).abs() < 1e-12);
        for k in 1..64i64 {
            let a = g.xi(g.index_of_mode(k).unwrap());
            let b = g.xi(g.index_of_mode(-k).unwrap());
            assert_eq!(a, -b);
        }
        assert!(g.index_of_mode(64).is_none());
    }

    #[test]
    fn centered_time_grid_has_zero_node() {
        let g = Grid1D::new(1.0, 8, Representation::PeriodicFft).unwrap();
        let st = SpaceTimeGrid::centered(g, 16, 2.0).unwrap();
        assert_eq!(st.zero_time_index(), Some(8));
        assert_eq!(st.t(8), 0.0);
        let st = SpaceTimeGrid::new(g, 10, 0.1, 1.0).unwrap();
        assert_eq!(st.zero_time_index(), None);
    }
}
