use serde::{Deserialize, Serialize};

/// Smooth time cutoff equal to 1 on `[-1, 1]` and vanishing outside
/// `(-edge, edge)`, `1 < edge < 2`, glued from `exp(-1/y)`.
/// Affine reparametrizations `psi((t - shift) / scale)` keep the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub edge: f64,
    pub scale: f64,
    pub shift: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Self {
            edge: 1.9,
            scale: 1.0,
            shift: 0.0,
        }
    }
}

fn bump_exp(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

/// Smooth step: 0 for `y <= 0`, 1 for `y >= 1`.
pub fn smooth_step(y: f64) -> f64 {
    let a = bump_exp(y);
    let b = bump_exp(1.0 - y);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl Cutoff {
    pub fn eval(&self, t: f64) -> f64 {
        let y = ((t - self.shift) / self.scale).abs();
        smooth_step((self.edge - y) / (self.edge - 1.0))
    }

    /// Support half-width around `shift`.
    pub fn reach(&self) -> f64 {
        self.edge * self.scale
    }

    /// `psi_delta(t) = psi(t / delta)`.
    pub fn dilated(&self, delta: f64) -> Self {
        Self {
            edge: self.edge,
            scale: self.scale * delta,
            shift: self.shift * delta,
        }
    }

    /// Largest `|psi^(k)|` scale, used to size time steps: the transition
    /// layer has width `(edge - 1) * scale`.
    pub fn transition_width(&self) -> f64 {
        (self.edge - 1.0) * self.scale
    }
}
