//! Modified Bessel functions `I_nu`, `K_nu` of real order `nu >= 0` with
//! first derivatives, plus exponentially scaled variants `e^{-x} I_nu` and
//! `e^{x} K_nu` for the ranges where the plain values over/underflow.
//!
//! Three regimes, selected by (`nu`, `x`):
//!
//! * ascending power series for `I` when `x <= max(2, nu/2)`, paired with
//!   the reflection formula `K_mu = pi (I_{-mu} - I_mu) / (2 sin(pi mu))`
//!   for `x <= 2` (a limit series in the order replaces it within 1e-4 of
//!   an integer) or with the `K` continued fraction beyond;
//! * Lentz/Steed continued fractions with Wronskian normalization in the
//!   mid range;
//! * large-argument asymptotic expansions for `x >= 30 (1 + nu)`.
//!
//! Regime boundaries are internal constants; the unit tests pin adjacent
//! regimes against each other on overlap windows.  Derivatives always come
//! from the exact recurrences `I' = (nu/x) I + I_{nu+1}` and
//! `K' = (nu/x) K - K_{nu+1}`, never from finite differences.

use serde::Serialize;
use thiserror::Error;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAXIT: usize = 10_000;
/// Below this distance to an integer order the reflection formula loses too
/// many digits and the limit series takes over.
const NEAR_INT: f64 = 1e-4;
/// Lower edge of the asymptotic regime, as a multiple of `1 + nu`.
const ASYM_FACTOR: f64 = 30.0;

#[derive(Debug, Error, PartialEq)]
pub enum BesselError {
    #[error("order must be finite and >= 0, got {0}")]
    BadOrder(f64),
    #[error("argument must be finite and > 0, got {0}")]
    BadArgument(f64),
    #[error("result overflows f64 at nu = {nu}, x = {x}; use the scaled variant")]
    Overflow { nu: f64, x: f64 },
    #[error("continued fraction failed to converge at nu = {nu}, x = {x}")]
    NoConvergence { nu: f64, x: f64 },
}

/// Plain values `I_nu(x)`, `K_nu(x)` and their x-derivatives.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesselEval {
    pub nu: f64,
    pub x: f64,
    pub value_i: f64,
    pub value_k: f64,
    pub deriv_i: f64,
    pub deriv_k: f64,
}

/// Scaled values: `i = e^{-x} I_nu(x)`, `k = e^{x} K_nu(x)`, and the same
/// scalings applied to the derivative values.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaledBesselEval {
    pub nu: f64,
    pub x: f64,
    pub i: f64,
    pub k: f64,
    pub di: f64,
    pub dk: f64,
}

fn check(nu: f64, x: f64) -> Result<(), BesselError> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(BesselError::BadOrder(nu));
    }
    if !(x.is_finite() && x > 0.0) {
        return Err(BesselError::BadArgument(x));
    }
    Ok(())
}

/// Scaled `I_nu`, `K_nu` with derivatives; never overflows for moderate
/// orders, any positive `x`.
pub fn bessel_ik_scaled(nu: f64, x: f64) -> Result<ScaledBesselEval, BesselError> {
    check(nu, x)?;
    let out = if x <= 2.0 {
        let (i, i1) = series_i_pair(nu, x, true);
        let (k, k1) = small_k_pair(nu, x)?;
        let es = x.exp();
        assemble(nu, x, i, i1, k * es, k1 * es)
    } else if x <= (nu * 0.5).max(2.0) {
        let (i, i1) = series_i_pair(nu, x, true);
        let (k, k1) = cf2_k_pair(nu, x)?;
        assemble(nu, x, i, i1, k, k1)
    } else if x >= ASYM_FACTOR * (1.0 + nu) {
        let (i, i1) = (asym_i(nu, x), asym_i(nu + 1.0, x));
        let (k, k1) = (asym_k(nu, x), asym_k(nu + 1.0, x));
        assemble(nu, x, i, i1, k, k1)
    } else {
        cf_ik(nu, x)?
    };
    if !(out.k.is_finite() && out.i.is_finite()) {
        return Err(BesselError::Overflow { nu, x });
    }
    Ok(out)
}

/// Plain `I_nu`, `K_nu` with derivatives.  Signals `Overflow` when
/// `e^x I_nu(x)` leaves the representable range.
pub fn bessel_ik(nu: f64, x: f64) -> Result<BesselEval, BesselError> {
    let s = bessel_ik_scaled(nu, x)?;
    let ex = x.exp();
    let value_i = s.i * ex;
    let deriv_i = s.di * ex;
    if !value_i.is_finite() || !deriv_i.is_finite() {
        return Err(BesselError::Overflow { nu, x });
    }
    Ok(BesselEval {
        nu,
        x,
        value_i,
        value_k: s.k / ex,
        deriv_i,
        deriv_k: s.dk / ex,
    })
}

pub fn bessel_i(nu: f64, x: f64) -> Result<f64, BesselError> {
    Ok(bessel_ik(nu, x)?.value_i)
}

pub fn bessel_k(nu: f64, x: f64) -> Result<f64, BesselError> {
    Ok(bessel_ik(nu, x)?.value_k)
}

fn assemble(nu: f64, x: f64, i: f64, i1: f64, k: f64, k1: f64) -> ScaledBesselEval {
    ScaledBesselEval {
        nu,
        x,
        i,
        k,
        di: (nu / x) * i + i1,
        dk: (nu / x) * k - k1,
    }
}

// ---- regime evaluators (public so the overlap tests can pin them) --------

/// Ascending-series evaluation of scaled `(e^{-x} I_nu, e^{-x} I_{nu+1})`.
/// Converges for every `x > 0`; intended for `x <= max(2, nu/2)`.
pub fn series_i_pair(nu: f64, x: f64, scaled: bool) -> (f64, f64) {
    (series_i(nu, x, scaled), series_i(nu + 1.0, x, scaled))
}

fn series_i(nu: f64, x: f64, scaled: bool) -> f64 {
    let half = 0.5 * x;
    let shift = if scaled { -x } else { 0.0 };
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0) + shift).exp();
    let q = half * half;
    let mut sum = term;
    for m in 0..MAXIT {
        let mf = (m + 1) as f64;
        term *= q / (mf * (nu + mf));
        sum += term;
        if term <= sum.abs() * EPS {
            break;
        }
    }
    sum
}

/// Small-argument `(K_mu-reduced) -> (K_nu, K_{nu+1})`, unscaled, `x <= 2`
/// (usable slightly beyond).  Reflection formula away from integer orders,
/// order-limit series within `1e-4` of one.
pub fn small_k_pair(nu: f64, x: f64) -> Result<(f64, f64), BesselError> {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (kmu, kmu1) = if (nu - nu.round()).abs() < NEAR_INT {
        temme_k(mu, x)?
    } else {
        (reflect_k(mu, x), reflect_k(mu + 1.0, x))
    };
    recur_k_up(mu, nl as usize, x, kmu, kmu1)
}

/// `K_m` for `|m| <= 1.5`, `m` away from integers, by the reflection formula.
fn reflect_k(m: f64, x: f64) -> f64 {
    let i_pos = series_i(m, x, false);
    let i_neg = series_i_any_order(-m, x);
    std::f64::consts::PI * (i_neg - i_pos) / (2.0 * (m * std::f64::consts::PI).sin())
}

/// Ascending series valid for negative non-integer orders as well.
fn series_i_any_order(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let q = half * half;
    let mut sum = term;
    for m in 0..MAXIT {
        let mf = (m + 1) as f64;
        term *= q / (mf * (nu + mf));
        sum += term;
        if term.abs() <= sum.abs() * EPS {
            break;
        }
    }
    sum
}

/// Order-limit series for `(K_mu, K_{mu+1})`, `|mu| <= 1/2`, small `x`.
fn temme_k(mu: f64, x: f64) -> Result<(f64, f64), BesselError> {
    use std::f64::consts::PI;
    let x2 = 0.5 * x;
    let mu2 = mu * mu;
    let pimu = PI * mu;
    let fact = if pimu.abs() < 1e-12 { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < 1e-12 { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = gamma_temme(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let e_exp = e.exp();
    let mut p = 0.5 * e_exp / gampl;
    let mut q = 0.5 / (e_exp * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..=MAXIT {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(BesselError::NoConvergence { nu: mu, x })
}

/// `(gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu))` with
/// `gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` continued through 0.
fn gamma_temme(mu: f64) -> (f64, f64, f64, f64) {
    // Taylor coefficients of 1/Gamma(1+z)
    const A: [f64; 9] = [
        1.0,
        0.5772156649015329,
        -0.6558780715202538,
        -0.0420026350340952,
        0.1665386113822915,
        -0.0421977345555443,
        -0.0096219715278770,
        0.0072189432466630,
        -0.0011651675918591,
    ];
    let gampl = 1.0 / gamma(1.0 + mu);
    let gammi = 1.0 / gamma(1.0 - mu);
    let gam1 = if mu.abs() < 1e-2 {
        let m2 = mu * mu;
        -(A[1] + m2 * (A[3] + m2 * (A[5] + m2 * A[7])))
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    let gam2 = (gammi + gampl) / 2.0;
    (gam1, gam2, gampl, gammi)
}

fn recur_k_up(
    mu: f64,
    steps: usize,
    x: f64,
    kmu: f64,
    kmu1: f64,
) -> Result<(f64, f64), BesselError> {
    let xi2 = 2.0 / x;
    let (mut klo, mut khi) = (kmu, kmu1);
    for j in 0..steps {
        let knext = klo + (mu + 1.0 + j as f64) * xi2 * khi;
        klo = khi;
        khi = knext;
        if !khi.is_finite() {
            return Err(BesselError::Overflow { nu: mu + steps as f64, x });
        }
    }
    Ok((klo, khi))
}

/// Scaled `(e^x K_nu, e^x K_{nu+1})` by the Steed continued fraction at the
/// reduced order plus upward recurrence.  Requires `x >= 2` in practice.
pub fn cf2_k_pair(nu: f64, x: f64) -> Result<(f64, f64), BesselError> {
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let (kmu, kmu1) = cf2_k_scaled(mu, x)?;
    recur_k_up(mu, nl as usize, x, kmu, kmu1)
}

fn cf2_k_scaled(mu: f64, x: f64) -> Result<(f64, f64), BesselError> {
    use std::f64::consts::PI;
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..=MAXIT {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            let h = a1 * h;
            let kmu = (PI / (2.0 * x)).sqrt() / s;
            let kmu1 = kmu * (mu + x + 0.5 - h) / x;
            return Ok((kmu, kmu1));
        }
    }
    Err(BesselError::NoConvergence { nu: mu, x })
}

/// Full mid-range evaluation: Lentz continued fraction for `I'_nu/I_nu`,
/// downward recurrence, Steed fraction for `K`, Wronskian normalization.
pub fn cf_ik(nu: f64, x: f64) -> Result<ScaledBesselEval, BesselError> {
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;

    // CF1 for f = I'_nu / I_nu
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut ok = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            ok = true;
            break;
        }
    }
    if !ok {
        return Err(BesselError::NoConvergence { nu, x });
    }

    // unnormalized I, I' recursed down from nu to mu
    let mut ril = FPMIN;
    let mut ripl = h * ril;
    let ril1 = ril;
    let rip1 = ripl;
    let mut fact = nu * xi;
    for _ in 0..nl as usize {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
    }
    let f = ripl / ril;

    let (kmu, kmu1) = cf2_k_scaled(mu, x)?;
    let kmup = mu * xi * kmu - kmu1;
    let imu = xi / (f * kmu - kmup);
    let i = imu * ril1 / ril;
    let di = imu * rip1 / ril;
    let (k, k1) = recur_k_up(mu, nl as usize, x, kmu, kmu1)?;
    Ok(ScaledBesselEval { nu, x, i, k, di, dk: nu * xi * k - k1 })
}

/// Large-argument expansion of `e^{-x} I_nu(x)`; valid for
/// `x >~ 30 (1 + nu)`.
pub fn asym_i(nu: f64, x: f64) -> f64 {
    hankel_sum(nu, x, true) / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Large-argument expansion of `e^{x} K_nu(x)`.
pub fn asym_k(nu: f64, x: f64) -> f64 {
    (std::f64::consts::PI / (2.0 * x)).sqrt() * hankel_sum(nu, x, false)
}

fn hankel_sum(nu: f64, x: f64, alternating: bool) -> f64 {
    let mu4 = 4.0 * nu * nu;
    let sign = if alternating { -1.0 } else { 1.0 };
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..=200 {
        let kf = k as f64;
        let num = mu4 - (2.0 * kf - 1.0) * (2.0 * kf - 1.0);
        term *= sign * num / (8.0 * x * kf);
        // asymptotic series: stop at the smallest term
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() <= sum.abs() * EPS {
            break;
        }
    }
    sum
}

// ---- gamma helpers --------------------------------------------------------

#[allow(clippy::excessive_precision)] // published table values, all digits kept
const LANCZOS_COEF: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

/// `ln Gamma(z)` for `z > 0` (Lanczos, g = 7).
pub(crate) fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        // reflection; keeps the series argument in the stable half-line
        let s = (std::f64::consts::PI * z).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = z + 7.5;
    for (i, coef) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += coef / (z + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// `Gamma(z)` for real `z`, poles excluded; signed for negative arguments.
pub(crate) fn gamma(z: f64) -> f64 {
    use std::f64::consts::PI;
    if z >= 0.5 {
        ln_gamma(z).exp()
    } else {
        PI / ((PI * z).sin() * ln_gamma(1.0 - z).exp())
    }
}
