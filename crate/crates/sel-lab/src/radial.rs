//! Exact radial kernel solutions of `lambda u - L u = 0`.
//!
//! For `alpha != 2` and nonnegative discriminant the substitution
//! `u = r^{-s0} B(z)` with `z = A sqrt(lambda) r^{(2-alpha)/2}`,
//! `A = 2/|2-alpha|`, turns the radial equation into the modified Bessel
//! equation of order `nu = 2 sqrt(D)/|2-alpha|`.  The two branches are
//!
//! * `u1`: power `r^{-s1}` at the small-argument end, growing exponential
//!   `exp(+(2/(2-alpha)) sqrt(lambda) r^{(2-alpha)/2})` at the other end;
//! * `u2`: power `r^{-s2}` (or `-r^{-s0} log r` at a double root), decaying
//!   exponential at the other end.
//!
//! The small-argument end sits at `r = 0` for `alpha < 2` and at
//! `r = infinity` for `alpha > 2`; the Bessel branch carrying each label
//! therefore swaps at `alpha = 2` (`u1` is the `I` branch below 2 and the
//! `K` branch above), keeping the asymptotic formulas literal on both
//! sides.

use crate::bessel::{bessel_ik_scaled, BesselError};
use crate::grid::LogGrid;
use crate::params::OperatorParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RadialError {
    #[error("alpha = 2 has power-law kernel solutions; no Bessel pair")]
    AlphaTwo,
    #[error("discriminant {0} < 0: oscillatory regime, no positive pair")]
    NegativeDiscriminant(f64),
    #[error("lambda must be finite and > 0, got {0}")]
    BadLambda(f64),
    #[error("grid too short for interior stencils (need >= 5 nodes)")]
    GridTooShort,
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// The positive kernel pair `(u1, u2)` for fixed parameters and `lambda`.
#[derive(Debug, Clone)]
pub struct RadialSolutionPair {
    pub params: OperatorParams,
    pub lambda: f64,
    /// Bessel order `2 sqrt(D) / |2 - alpha|`
    pub nu: f64,
    /// signed exponential-rate factor `2 / (2 - alpha)`
    pub gamma: f64,
    /// radius where the Bessel argument equals 1:
    /// `((2-alpha)^2 / (4 lambda))^{1/(2-alpha)}`
    pub scaling_constant: f64,
    /// half power gap `(2 - alpha) / 2`; the Bessel argument is
    /// `amplitude * r^q`
    q: f64,
    amplitude: f64,
    s0: f64,
}

/// Plain values; can overflow deep in the exponential regime.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairEval {
    pub u1: f64,
    pub du1: f64,
    pub u2: f64,
    pub du2: f64,
}

/// Overflow-free split `u1 = t1 e^w`, `u2 = t2 e^{-w}` (same factors on the
/// derivative values), where `w` increases with `r` on both sides of
/// `alpha = 2`.  Green-kernel products combine `w` differences, never bare
/// exponentials.
#[derive(Debug, Clone, Copy)]
pub struct ScaledPairEval {
    pub t1: f64,
    pub dt1: f64,
    pub t2: f64,
    pub dt2: f64,
    pub w: f64,
}

/// Logarithms and logarithmic derivatives, for boundary conditions and
/// slope fits.
#[derive(Debug, Clone, Copy)]
pub struct LogPairEval {
    pub ln_u1: f64,
    pub dlog_u1: f64,
    pub ln_u2: f64,
    pub dlog_u2: f64,
}

pub fn build_pair(params: &OperatorParams, lambda: f64) -> Result<RadialSolutionPair, RadialError> {
    if params.alpha == 2.0 {
        return Err(RadialError::AlphaTwo);
    }
    let d = params.discriminant();
    if d < 0.0 {
        return Err(RadialError::NegativeDiscriminant(d));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(RadialError::BadLambda(lambda));
    }
    let m = (2.0 - params.alpha).abs();
    Ok(RadialSolutionPair {
        params: *params,
        lambda,
        nu: 2.0 * d.sqrt() / m,
        gamma: 2.0 / (2.0 - params.alpha),
        scaling_constant: (m * m / (4.0 * lambda)).powf(1.0 / (2.0 - params.alpha)),
        q: 0.5 * (2.0 - params.alpha),
        amplitude: 2.0 * lambda.sqrt() / m,
        s0: params.s0(),
    })
}

impl RadialSolutionPair {
    /// `z = (2/|2-alpha|) sqrt(lambda) r^{(2-alpha)/2}`
    pub fn bessel_argument(&self, r: f64) -> f64 {
        self.amplitude * r.powf(self.q)
    }

    pub fn scaled_eval(&self, r: f64) -> Result<ScaledPairEval, RadialError> {
        let z = self.bessel_argument(r);
        let e = bessel_ik_scaled(self.nu, z)?;
        let pw = (-self.s0 * r.ln()).exp();
        let pd = pw / r;
        let qz = self.q * z;
        // u1 carries the I branch for alpha < 2, the K branch for alpha > 2
        if self.q > 0.0 {
            Ok(ScaledPairEval {
                t1: pw * e.i,
                dt1: pd * (-self.s0 * e.i + qz * e.di),
                t2: pw * e.k,
                dt2: pd * (-self.s0 * e.k + qz * e.dk),
                w: z,
            })
        } else {
            Ok(ScaledPairEval {
                t1: pw * e.k,
                dt1: pd * (-self.s0 * e.k + qz * e.dk),
                t2: pw * e.i,
                dt2: pd * (-self.s0 * e.i + qz * e.di),
                w: -z,
            })
        }
    }

    pub fn eval(&self, r: f64) -> Result<PairEval, RadialError> {
        let s = self.scaled_eval(r)?;
        let (ew, emw) = (s.w.exp(), (-s.w).exp());
        let out = PairEval {
            u1: s.t1 * ew,
            du1: s.dt1 * ew,
            u2: s.t2 * emw,
            du2: s.dt2 * emw,
        };
        if !(out.u1.is_finite() && out.u2.is_finite()) {
            return Err(RadialError::Bessel(BesselError::Overflow {
                nu: self.nu,
                x: self.bessel_argument(r),
            }));
        }
        Ok(out)
    }

    pub fn log_eval(&self, r: f64) -> Result<LogPairEval, RadialError> {
        let s = self.scaled_eval(r)?;
        Ok(LogPairEval {
            ln_u1: s.t1.ln() + s.w,
            dlog_u1: s.dt1 / s.t1,
            ln_u2: s.t2.ln() - s.w,
            dlog_u2: s.dt2 / s.t2,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    NearZero,
    NearInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    U1,
    U2,
}

/// End behavior of one branch on one region:
/// `u ~ r^{power_exponent} * (-log r)^{log_factor} * exp(exp_rate * r^{(2-alpha)/2})`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticDescriptor {
    pub branch: Branch,
    pub region: Region,
    pub power_exponent: f64,
    pub log_factor: bool,
    /// coefficient of `r^{(2-alpha)/2}` in the exponent; 0 on pure power ends
    pub exp_rate: f64,
}

/// The four end behaviors of the pair.  The power end is `r -> 0` for
/// `alpha < 2` and `r -> infinity` for `alpha > 2`; the exponential end is
/// the opposite one.
pub fn asymptotics(pair: &RadialSolutionPair) -> [AsymptoticDescriptor; 4] {
    let p = &pair.params;
    let d = p.discriminant();
    let (s0, rd) = (p.s0(), d.sqrt());
    let (s1, s2) = (s0 - rd, s0 + rd);
    let (power_end, exp_end) = if p.alpha < 2.0 {
        (Region::NearZero, Region::NearInfinity)
    } else {
        (Region::NearInfinity, Region::NearZero)
    };
    let exp_power = -s0 + (p.alpha - 2.0) / 4.0;
    let rate = pair.gamma * pair.lambda.sqrt();
    [
        AsymptoticDescriptor {
            branch: Branch::U1,
            region: power_end,
            power_exponent: -s1,
            log_factor: false,
            exp_rate: 0.0,
        },
        AsymptoticDescriptor {
            branch: Branch::U1,
            region: exp_end,
            power_exponent: exp_power,
            log_factor: false,
            exp_rate: rate,
        },
        AsymptoticDescriptor {
            branch: Branch::U2,
            region: power_end,
            power_exponent: -s2,
            log_factor: d == 0.0,
            exp_rate: 0.0,
        },
        AsymptoticDescriptor {
            branch: Branch::U2,
            region: exp_end,
            power_exponent: exp_power,
            log_factor: false,
            exp_rate: -rate,
        },
    ]
}

/// Decides whether `r^{weight_power} |log r|^{log_power} u` is p-integrable
/// against `r^{N-1} dr` on the descriptor's region, by exponent arithmetic.
/// Exponential decay beats every power; growth forbids membership; the pure
/// power borderline is settled by the `int r^{-1} |log r|^sigma dr`
/// criterion (finite on either region iff `sigma < -1`).
pub fn weighted_lp_membership(
    desc: &AsymptoticDescriptor,
    dim: u32,
    p: f64,
    weight_power: f64,
    log_power: f64,
) -> bool {
    if desc.exp_rate != 0.0 {
        // the exponential end always has r^{(2-alpha)/2} -> infinity
        return desc.exp_rate < 0.0;
    }
    let e = p * (weight_power + desc.power_exponent) + dim as f64 - 1.0;
    let sigma = p * (log_power + if desc.log_factor { 1.0 } else { 0.0 });
    match desc.region {
        Region::NearZero => e > -1.0 || (e == -1.0 && sigma < -1.0),
        Region::NearInfinity => e < -1.0 || (e == -1.0 && sigma < -1.0),
    }
}

/// `r^alpha (g'' + (N-1+c) g'/r - b g/r^2)` on the log grid, fourth-order
/// central stencils inside, second-order one-sided at the two outermost
/// nodes per edge.  In `s = log r` this is
/// `e^{(alpha-2)s} (g_ss + (N-2+c) g_s - b g)`.
pub fn apply_operator(
    params: &OperatorParams,
    grid: &LogGrid,
    g: &[f64],
) -> Result<Vec<f64>, RadialError> {
    let n = grid.len();
    if n < 5 || g.len() != n {
        return Err(RadialError::GridTooShort);
    }
    let h = grid.h;
    let drift = params.dim as f64 - 2.0 + params.c;
    let mut out = vec![0.0; n];
    let weight = |i: usize| ((params.alpha - 2.0) * grid.s[i]).exp();
    for i in 2..n - 2 {
        let gs = (-g[i + 2] + 8.0 * g[i + 1] - 8.0 * g[i - 1] + g[i - 2]) / (12.0 * h);
        let gss = (-g[i + 2] + 16.0 * g[i + 1] - 30.0 * g[i] + 16.0 * g[i - 1] - g[i - 2])
            / (12.0 * h * h);
        out[i] = weight(i) * (gss + drift * gs - params.b * g[i]);
    }
    for (i, i0, i1, i2) in [(0, 0, 1, 2), (1, 0, 1, 2), (n - 2, n - 3, n - 2, n - 1), (n - 1, n - 3, n - 2, n - 1)] {
        let si = grid.s[i];
        let (sa, sb, sc) = (grid.s[i0], grid.s[i1], grid.s[i2]);
        // quadratic through the three edge nodes, differentiated at s_i
        let la = (2.0 * si - sb - sc) / ((sa - sb) * (sa - sc));
        let lb = (2.0 * si - sa - sc) / ((sb - sa) * (sb - sc));
        let lc = (2.0 * si - sa - sb) / ((sc - sa) * (sc - sb));
        let gs = la * g[i0] + lb * g[i1] + lc * g[i2];
        let gss = 2.0
            * (g[i0] / ((sa - sb) * (sa - sc))
                + g[i1] / ((sb - sa) * (sb - sc))
                + g[i2] / ((sc - sa) * (sc - sb)));
        out[i] = weight(i) * (gss + drift * gs - params.b * g[i]);
    }
    Ok(out)
}
