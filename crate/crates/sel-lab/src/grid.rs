//! Logarithmic radial grids and quadrature.
//!
//! All solvers work in the variable `s = log r`, where the radial operator
//! has smooth coefficients and the Bessel-argument growth `r^{(2-alpha)/2}`
//! becomes a plain exponential.  Nodes are uniform in `s`; integrals over
//! `(0, infinity)` in `r` become integrals in `s` with the Jacobian `e^s`
//! folded into the weight.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least {min} nodes, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("grid bounds must satisfy s_min < s_max and be finite")]
    BadBounds,
}

/// Uniform grid in `s = log r`.
#[derive(Debug, Clone, Serialize)]
pub struct LogGrid {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    /// spacing in `s`
    pub h: f64,
}

impl LogGrid {
    pub fn new(s_min: f64, s_max: f64, n: usize) -> Result<Self, GridError> {
        if n < 8 {
            return Err(GridError::TooShort { min: 8, got: n });
        }
        if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
            return Err(GridError::BadBounds);
        }
        let h = (s_max - s_min) / (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|i| s_min + h * i as f64).collect();
        let r = s.iter().map(|&si| si.exp()).collect();
        Ok(LogGrid { s, r, h })
    }

    /// Default window: the Bessel argument runs from deep power regime to
    /// deep exponential regime when `s` spans `[-12, 8] / |2 - alpha|`.
    /// Near `alpha = 2` that scaling degenerates and a fixed window is used.
    pub fn default_for(alpha: f64) -> Self {
        let m = (2.0 - alpha).abs();
        let (lo, hi) = if m < 0.1 {
            (-10.0, 10.0)
        } else {
            (-12.0 / m, 8.0 / m)
        };
        LogGrid::new(lo, hi, 4000).expect("static bounds")
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// Index of the node nearest to radius `r` (clamped to the grid).
    pub fn index_of(&self, r: f64) -> usize {
        let s = r.ln();
        let i = ((s - self.s[0]) / self.h).round();
        (i.max(0.0) as usize).min(self.len() - 1)
    }

    /// Sample a function of `r` on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.r.iter().map(|&ri| f(ri)).collect()
    }
}

/// Composite Simpson rule on a uniform grid; a 3/8 block absorbs the last
/// three panels when the panel count is odd.
pub fn simpson(h: f64, f: &[f64]) -> f64 {
    let n = f.len();
    assert!(n >= 4, "quadrature needs at least 4 nodes");
    if n % 2 == 1 {
        simpson_odd(h, f)
    } else {
        simpson_odd(h, &f[..n - 3])
            + 0.375 * h * (f[n - 4] + 3.0 * f[n - 3] + 3.0 * f[n - 2] + f[n - 1])
    }
}

fn simpson_odd(h: f64, f: &[f64]) -> f64 {
    let n = f.len();
    debug_assert!(n % 2 == 1 && n >= 3);
    let mut acc = f[0] + f[n - 1];
    let mut four = true;
    for &v in &f[1..n - 1] {
        acc += if four { 4.0 * v } else { 2.0 * v };
        four = !four;
    }
    acc * h / 3.0
}

/// Running integral `F[i] = int_{x_0}^{x_i} f`, second-order accurate with a
/// half-panel Simpson correction (quadratic through three nodes per step).
pub fn cumulative(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 3);
    let mut out = vec![0.0; n];
    let c = h / 12.0;
    for i in 0..n - 1 {
        let step = if i + 2 < n {
            c * (5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2])
        } else {
            c * (-f[i - 1] + 8.0 * f[i] + 5.0 * f[i + 1])
        };
        out[i + 1] = out[i] + step;
    }
    out
}

/// Surface measure of the unit sphere in dimension `dim`; by convention 1
/// for `dim = 1` (half-line model).
pub fn sphere_measure(dim: u32) -> f64 {
    if dim == 1 {
        1.0
    } else {
        let nf = dim as f64;
        2.0 * std::f64::consts::PI.powf(0.5 * nf) / crate::bessel::gamma(0.5 * nf)
    }
}

/// `|| r^a v ||_p = (omega_{N-1} int_0^inf |v|^p r^{a p} r^{N-1} dr)^{1/p}`
/// with `a = weight_power`, evaluated on the log grid where the integrand
/// in `s` is `|v|^p e^{(N + a p) s}`.
pub fn weighted_lp_norm(grid: &LogGrid, vals: &[f64], p: f64, dim: u32, weight_power: f64) -> f64 {
    assert_eq!(vals.len(), grid.len());
    let e = dim as f64 + weight_power * p;
    let integrand: Vec<f64> = vals
        .iter()
        .zip(&grid.s)
        .map(|(&v, &s)| v.abs().powf(p) * (e * s).exp())
        .collect();
    (sphere_measure(dim) * simpson(grid.h, &integrand)).powf(1.0 / p)
}

pub fn lp_norm(grid: &LogGrid, vals: &[f64], p: f64, dim: u32) -> f64 {
    weighted_lp_norm(grid, vals, p, dim, 0.0)
}

pub fn weighted_lp_norm_c(
    grid: &LogGrid,
    vals: &[Complex64],
    p: f64,
    dim: u32,
    weight_power: f64,
) -> f64 {
    let mags: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    weighted_lp_norm(grid, &mags, p, dim, weight_power)
}

pub fn lp_norm_c(grid: &LogGrid, vals: &[Complex64], p: f64, dim: u32) -> f64 {
    weighted_lp_norm_c(grid, vals, p, dim, 0.0)
}

/// C^2 bump supported on `[r_lo, r_hi]`, peak value 1: the cubed parabola
/// `(64 (r - a)^3 (b - r)^3 / (b - a)^6)` vanishes to third order at both
/// ends, which is smooth enough for every quadrature rule used here.
pub fn bump_profile(grid: &LogGrid, r_lo: f64, r_hi: f64) -> Vec<f64> {
    assert!(r_lo > 0.0 && r_hi > r_lo);
    let scale = 64.0 / (r_hi - r_lo).powi(6);
    grid.r
        .iter()
        .map(|&r| {
            if r <= r_lo || r >= r_hi {
                0.0
            } else {
                scale * ((r - r_lo) * (r_hi - r)).powi(3)
            }
        })
        .collect()
}

/// Real function sampled on a shared log grid.
#[derive(Debug, Clone, Serialize)]
pub struct RadialGridFunction {
    #[serde(skip)]
    pub grid: std::sync::Arc<LogGrid>,
    pub values: Vec<f64>,
}

impl RadialGridFunction {
    pub fn new(grid: std::sync::Arc<LogGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "values must match the grid");
        RadialGridFunction { grid, values }
    }

    pub fn sample(grid: std::sync::Arc<LogGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.sample(f);
        RadialGridFunction { grid, values }
    }

    pub fn zero(grid: std::sync::Arc<LogGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        RadialGridFunction { grid, values }
    }

    pub fn lp_norm(&self, p: f64, dim: u32) -> f64 {
        lp_norm(&self.grid, &self.values, p, dim)
    }

    pub fn weighted_lp_norm(&self, p: f64, dim: u32, weight_power: f64) -> f64 {
        weighted_lp_norm(&self.grid, &self.values, p, dim, weight_power)
    }
}
