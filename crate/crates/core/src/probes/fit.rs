//! Least-squares line fits and order statistics for probe summaries.

use serde::{Deserialize, Serialize};

/// `y = intercept + slope x` with the root-mean-square residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Some(LineFit {
        slope,
        intercept,
        residual: (ss / nf).sqrt(),
    })
}

/// Slope of `ln y` against `ln x`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

/// `ln f = c - alpha ln t + beta t_ref / t`: a power law with its first
/// correction, `t_ref` being the last abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTail {
    pub alpha: f64,
    pub log_amp: f64,
    pub beta: f64,
    pub t_ref: f64,
    pub residual: f64,
}

impl PowerTail {
    /// `int_T^inf f dt`, expanding `exp(beta t_ref / t)` to first order.
    pub fn tail_integral(&self, t: f64) -> f64 {
        let a = self.alpha;
        self.log_amp.exp() * (t.powf(1.0 - a) / (a - 1.0) + self.beta * self.t_ref * t.powf(-a) / a)
    }
}

pub fn fit_power_tail(t: &[f64], f: &[f64]) -> Option<PowerTail> {
    let n = t.len();
    if n < 4 || f.len() != n || f.iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let t_ref = t[n - 1];
    let rows: Vec<[f64; 3]> = t.iter().map(|&x| [1.0, x.ln(), t_ref / x]).collect();
    let y: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let mut m = [[0.0; 4]; 3];
    for (r, &yv) in rows.iter().zip(&y) {
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += r[i] * r[j];
            }
            m[i][3] += r[i] * yv;
        }
    }
    // Gaussian elimination with partial pivoting on the normal equations
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        m.swap(c, p);
        if m[c][c].abs() < 1e-300 {
            return None;
        }
        for r in 0..3 {
            if r != c {
                let k = m[r][c] / m[c][c];
                for j in c..4 {
                    m[r][j] -= k * m[c][j];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..3).map(|i| m[i][3] / m[i][i]).collect();
    let ss: f64 = rows
        .iter()
        .zip(&y)
        .map(|(r, yv)| (yv - coef[0] - coef[1] * r[1] - coef[2] * r[2]).powi(2))
        .sum();
    Some(PowerTail {
        alpha: -coef[1],
        log_amp: coef[0],
        beta: coef[2],
        t_ref,
        residual: (ss / n as f64).sqrt(),
    })
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
