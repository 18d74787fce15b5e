//! Parameter algebra and the generation classifier.
//!
//! Everything here is arithmetic on the tuple `(N, alpha, b, c)` and the
//! integrability exponent `p`.  The central object is the concave parabola
//! `f(s) = b + s(N - 2 + c - s)`: its discriminant `D = b + ((N-2+c)/2)^2`
//! decides between oscillation (`D < 0`), a critical double root (`D = 0`)
//! and a genuine generation window (`D > 0`), and its roots `s1 <= s2`
//! delimit the window in the variable `N/p`.
//!
//! Classification decisions are made in exact rational arithmetic: every
//! finite `f64` input is a dyadic rational, and comparisons against the
//! irrational window endpoints `s0 ± sqrt(D) + shift` reduce to rational
//! sign tests of `(x - s0 - shift)^2 - D`.  Endpoint hits are therefore
//! decided exactly, never by a floating tolerance.

use std::cmp::Ordering;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("dimension must be >= 1, got {0}")]
    BadDimension(u32),
    #[error("coefficient {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("exponent p must satisfy 1 < p < infinity, got {0}")]
    BadExponent(f64),
    #[error("sectoriality constant undefined: dissipativity margin {margin} < 0")]
    Unsectorial { margin: f64 },
}

/// Coefficients of `L = |x|^a Δ + c |x|^{a-1} (x/|x|)·∇ - b |x|^{a-2}` on R^N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub dim: u32,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
}

impl OperatorParams {
    pub fn new(dim: u32, alpha: f64, b: f64, c: f64) -> Result<Self, ParamError> {
        if dim < 1 {
            return Err(ParamError::BadDimension(dim));
        }
        for (name, value) in [("alpha", alpha), ("b", b), ("c", c)] {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { name, value });
            }
        }
        Ok(Self { dim, alpha, b, c })
    }

    /// Vertex of the parabola, `s0 = (N - 2 + c) / 2`.
    pub fn s0(&self) -> f64 {
        (self.dim as f64 - 2.0 + self.c) / 2.0
    }

    /// `f(s) = b + s (N - 2 + c - s)`.  `f(s0) = D`, the discriminant.
    pub fn f_eval(&self, s: f64) -> f64 {
        self.b + s * (self.dim as f64 - 2.0 + self.c - s)
    }

    /// `D = b + s0^2`.
    pub fn discriminant(&self) -> f64 {
        let s0 = self.s0();
        self.b + s0 * s0
    }

    pub fn spectral(&self) -> SpectralSummary {
        let s0 = self.s0();
        let disc = self.discriminant();
        let roots = if disc > 0.0 {
            let r = disc.sqrt();
            Roots::Distinct { s1: s0 - r, s2: s0 + r }
        } else if disc == 0.0 {
            Roots::Double { s0 }
        } else {
            Roots::Complex
        };
        SpectralSummary { discriminant: disc, s0, roots }
    }

    /// Formal adjoint coefficients: `c* = 2a - c`, `b* = b + (c - a)(a - 2 + N)`.
    ///
    /// The parabola transforms as `f*(s) = f(N + a - 2 - s)`, so the
    /// discriminant is unchanged and the roots shift by `a - c`.
    pub fn adjoint(&self) -> OperatorParams {
        OperatorParams {
            dim: self.dim,
            alpha: self.alpha,
            b: self.b + (self.c - self.alpha) * (self.alpha - 2.0 + self.dim as f64),
            c: 2.0 * self.alpha - self.c,
        }
    }

    /// Image of the coefficients under the Kelvin inversion `x -> x/|x|^2`:
    /// `a -> 4 - a`, `c -> -c`, `b -> b + c(N - 2)`.  Involutive; keeps `D`.
    pub fn kelvin(&self) -> OperatorParams {
        OperatorParams {
            dim: self.dim,
            alpha: 4.0 - self.alpha,
            b: self.b + self.c * (self.dim as f64 - 2.0),
            c: -self.c,
        }
    }

    /// Dissipativity margin `f((N + a - 2) / p)`; nonnegative exactly when
    /// `L` is dissipative on `L^p` up to the usual weighted identity.
    pub fn dissipativity_margin(&self, p: f64) -> Result<f64, ParamError> {
        check_exponent(p)?;
        Ok(self.f_eval((self.dim as f64 + self.alpha - 2.0) / p))
    }

    /// Sectoriality constant
    /// `l = sqrt( (p-2)^2 / (4(p-1)) + |s0 - (N+a-2)/p|^2 / f((N+a-2)/p) )`,
    /// with the convention `0/0 = 0` when the margin vanishes at the vertex.
    pub fn sectoriality_constant(&self, p: f64) -> Result<f64, ParamError> {
        let margin = self.dissipativity_margin(p)?;
        let sp = (self.dim as f64 + self.alpha - 2.0) / p;
        let first = (p - 2.0) * (p - 2.0) / (4.0 * (p - 1.0));
        let dev = self.s0() - sp;
        if margin > 0.0 {
            Ok((first + dev * dev / margin).sqrt())
        } else if margin == 0.0 && dev == 0.0 {
            Ok(first.sqrt())
        } else {
            Err(ParamError::Unsectorial { margin })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Roots {
    Distinct { s1: f64, s2: f64 },
    Double { s0: f64 },
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub discriminant: f64,
    pub s0: f64,
    pub roots: Roots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    WholeSpace,
    Ball,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The minimal realization generates (test functions are a core).
    GeneratesMin,
    /// Only the intermediate realization generates.
    GeneratesIntOnly,
    /// The maximal realization generates.
    GeneratesMax,
    /// Minimal and maximal realizations coincide and generate.
    GeneratesMinAndMax,
    NoRealizationGenerates,
    /// `a = 2`: every exponent works and min = max.
    Alpha2AllP,
    /// `D < 0`: positivity fails outright, nothing generates.
    NegativeDiscriminant,
}

/// Interval in the variable `N/p`, with per-endpoint openness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        let lo_ok = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let hi_ok = if self.hi_closed { x <= self.hi } else { x < self.hi };
        lo_ok && hi_ok
    }
}

/// The set `I = { theta in [0,1] : f(N/p + theta (a-2)) > 0 }` together with
/// the critical weight exponent `theta0` solving `N/p = s0 + theta0 (2-a)`
/// in the double-root case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaData {
    pub interval: Option<Interval>,
    pub theta0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub domain: DomainKind,
    pub n_over_p: f64,
    pub verdict: Verdict,
    /// Generation window in `N/p`; `None` when `D < 0` or `a = 2` on the
    /// whole space (no restriction) makes it degenerate to all of `(0, N)`.
    pub interval: Option<Interval>,
    pub int_eq_min: bool,
    pub int_eq_max: bool,
    /// Only populated when `c = a` and `p = 2`: whether the minimal
    /// realization is already nonnegative self-adjoint.
    pub selfadjoint: Option<bool>,
    pub theta: ThetaData,
}

fn check_exponent(p: f64) -> Result<(), ParamError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(ParamError::BadExponent(p));
    }
    Ok(())
}

// ---- exact rational layer ----------------------------------------------

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn rat_i(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

struct Exact {
    n: BigRational,
    alpha: BigRational,
    s0: BigRational,
    disc: BigRational,
    two_minus_alpha: BigRational,
}

impl Exact {
    fn new(p: &OperatorParams) -> Self {
        let n = rat_i(p.dim as i64);
        let alpha = rat(p.alpha);
        let c = rat(p.c);
        let b = rat(p.b);
        let s0 = (&n - rat_i(2) + &c) / rat_i(2);
        let disc = &b + &s0 * &s0;
        let two_minus_alpha = rat_i(2) - &alpha;
        Exact { n, alpha, s0, disc, two_minus_alpha }
    }

    /// Order of `x` against `s0 + sign * sqrt(D) + shift`.  Requires `D >= 0`.
    fn cmp_root(&self, x: &BigRational, shift: &BigRational, sign: i8) -> Ordering {
        let t = x - &self.s0 - shift;
        let t2 = &t * &t;
        match sign {
            1 => {
                // x ? s0 + shift + sqrt(D)
                if t.is_negative() || t.is_zero() {
                    if self.disc.is_zero() && t.is_zero() {
                        Ordering::Equal
                    } else {
                        Ordering::Less
                    }
                } else {
                    t2.cmp(&self.disc)
                }
            }
            _ => {
                // x ? s0 + shift - sqrt(D)
                if t.is_positive() || t.is_zero() {
                    if self.disc.is_zero() && t.is_zero() {
                        Ordering::Equal
                    } else {
                        Ordering::Greater
                    }
                } else {
                    self.disc.cmp(&t2)
                }
            }
        }
    }
}

fn to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

// ---- classifier ----------------------------------------------------------

/// `theta`-window of weighted resolvent estimates for the pair `(params, p)`.
pub fn theta_data(params: &OperatorParams, p: f64) -> Result<ThetaData, ParamError> {
    check_exponent(p)?;
    let ex = Exact::new(params);
    let np = &ex.n / rat(p);
    let disc_sign = ex.disc.is_positive() as i8 - ex.disc.is_negative() as i8;

    if disc_sign < 0 {
        return Ok(ThetaData { interval: None, theta0: None });
    }
    if disc_sign == 0 {
        // f <= 0 everywhere: the open condition never holds, but the critical
        // weight exponent is defined whenever it lands in [0,1].
        let theta0 = if ex.alpha == rat_i(2) {
            None
        } else {
            let t0 = (&np - &ex.s0) / &ex.two_minus_alpha;
            (!t0.is_negative() && t0 <= rat_i(1)).then(|| to_f64(&t0))
        };
        return Ok(ThetaData { interval: None, theta0 });
    }

    if ex.alpha == rat_i(2) {
        // Constant in theta: either all of [0,1] or empty.
        let inside = ex.cmp_root(&np, &BigRational::zero(), -1) == Ordering::Greater
            && ex.cmp_root(&np, &BigRational::zero(), 1) == Ordering::Less;
        return Ok(ThetaData {
            interval: inside.then_some(Interval { lo: 0.0, hi: 1.0, lo_closed: true, hi_closed: true }),
            theta0: None,
        });
    }

    // Strict condition s1 < N/p + theta(alpha-2) < s2 solved for theta.
    // Exact bounds are (np - s0 ± sqrt(D)) / (2 - alpha); track them in f64
    // and decide inclusion of the ends 0, 1 exactly.
    let w = to_f64(&ex.two_minus_alpha);
    let np_f = to_f64(&np);
    let s0_f = to_f64(&ex.s0);
    let rad = to_f64(&ex.disc).sqrt();
    let (mut lo, mut hi) = {
        let a = (np_f - s0_f - rad) / w;
        let b = (np_f - s0_f + rad) / w;
        if a <= b { (a, b) } else { (b, a) }
    };
    // Openness at clamped ends: theta = 0 belongs iff f(N/p) > 0, theta = 1
    // iff f(N/p + alpha - 2) > 0, both exact.
    let at = |shift: &BigRational| -> bool {
        let x = &np + shift;
        ex.cmp_root(&x, &BigRational::zero(), -1) == Ordering::Greater
            && ex.cmp_root(&x, &BigRational::zero(), 1) == Ordering::Less
    };
    let zero_in = at(&BigRational::zero());
    let one_in = at(&(-&ex.two_minus_alpha));
    let mut lo_closed = false;
    let mut hi_closed = false;
    if lo < 0.0 || zero_in {
        lo = lo.max(0.0);
        lo_closed = zero_in && lo == 0.0;
    }
    if hi > 1.0 || one_in {
        hi = hi.min(1.0);
        hi_closed = one_in && hi == 1.0;
    }
    let nonempty = lo < hi || (lo == hi && lo_closed && hi_closed);
    let interval =
        (nonempty && lo <= 1.0 && hi >= 0.0).then_some(Interval { lo, hi, lo_closed, hi_closed });
    Ok(ThetaData { interval, theta0: None })
}

/// Decide which realizations of `L` generate an analytic semigroup on
/// `L^p(domain)`.
pub fn classify(
    params: &OperatorParams,
    p: f64,
    domain: DomainKind,
) -> Result<Classification, ParamError> {
    check_exponent(p)?;
    let ex = Exact::new(params);
    let p_rat = rat(p);
    let np = &ex.n / &p_rat;
    let theta = theta_data(params, p)?;
    let n_over_p = to_f64(&np);

    let selfadjoint = if params.c == params.alpha && p == 2.0 {
        // threshold b >= -((N-2+a)/2)^2 + ((a-2)/2)^2, i.e. D >= ((a-2)/2)^2
        let half_gap = (&ex.alpha - rat_i(2)) / rat_i(2);
        Some(ex.disc >= &half_gap * &half_gap)
    } else {
        None
    };

    let alpha_is_2 = ex.alpha == rat_i(2);
    let disc_sign = ex.disc.is_positive() as i8 - ex.disc.is_negative() as i8;
    let zero = BigRational::zero();
    let full_window = Interval {
        lo: 0.0,
        hi: params.dim as f64,
        lo_closed: false,
        hi_closed: false,
    };

    let base = Classification {
        domain,
        n_over_p,
        verdict: Verdict::NoRealizationGenerates,
        interval: None,
        int_eq_min: false,
        int_eq_max: false,
        selfadjoint,
        theta,
    };

    // Unconditional whole-exponent-range cases first.
    match domain {
        DomainKind::WholeSpace => {
            if alpha_is_2 {
                return Ok(Classification {
                    verdict: Verdict::Alpha2AllP,
                    interval: Some(full_window),
                    int_eq_min: true,
                    int_eq_max: true,
                    ..base
                });
            }
        }
        DomainKind::Ball => {
            // a >= 2: the maximal realization is closed and generates for
            // every p, with no discriminant assumption.
            if ex.alpha >= rat_i(2) {
                let verdict = if alpha_is_2 { Verdict::Alpha2AllP } else { Verdict::GeneratesMax };
                return Ok(Classification { verdict, interval: Some(full_window), ..base });
            }
        }
        DomainKind::Exterior => {
            if ex.alpha <= rat_i(2) {
                let verdict = if alpha_is_2 { Verdict::Alpha2AllP } else { Verdict::GeneratesMax };
                return Ok(Classification { verdict, interval: Some(full_window), ..base });
            }
        }
    }

    if disc_sign < 0 {
        return Ok(Classification { verdict: Verdict::NegativeDiscriminant, ..base });
    }

    let alpha_below_2 = ex.alpha < rat_i(2);
    // Endpoint shifts of the window: 2 - alpha on the minimal side, 0 on the
    // maximal side, swapped across alpha = 2.
    let shift = &ex.two_minus_alpha;

    if disc_sign == 0 {
        // Critical case: closed window [s0 + min(0, 2-a), s0 + max(0, 2-a)];
        // the intermediate realization collapses to max at N/p = s0 and to
        // min at N/p = s0 + 2 - a.  The endpoint-coincidence statements are
        // for the whole space; restricted domains only get the window.
        let whole = domain == DomainKind::WholeSpace;
        let at_max_end = whole && np == ex.s0;
        let at_min_end = whole && np == &ex.s0 + shift;
        let (lo_r, hi_r) = if alpha_below_2 {
            (ex.s0.clone(), &ex.s0 + shift)
        } else {
            (&ex.s0 + shift, ex.s0.clone())
        };
        let inside = np >= lo_r && np <= hi_r;
        let interval = Some(Interval {
            lo: to_f64(&lo_r),
            hi: to_f64(&hi_r),
            lo_closed: true,
            hi_closed: true,
        });
        let verdict = if !inside {
            Verdict::NoRealizationGenerates
        } else if at_min_end {
            Verdict::GeneratesMin
        } else if at_max_end {
            Verdict::GeneratesMax
        } else {
            Verdict::GeneratesIntOnly
        };
        return Ok(Classification {
            verdict,
            interval,
            int_eq_min: inside && at_min_end,
            int_eq_max: inside && at_max_end,
            ..base
        });
    }

    // D > 0. Window in N/p: open (s1 + min(0,2-a), s2 + max(0,2-a)).
    let (lo_shift, hi_shift) = if alpha_below_2 { (zero.clone(), shift.clone()) } else { (shift.clone(), zero.clone()) };
    let above_lo = ex.cmp_root(&np, &lo_shift, -1) == Ordering::Greater;
    let below_hi = ex.cmp_root(&np, &hi_shift, 1) == Ordering::Less;
    let rad = to_f64(&ex.disc).sqrt();
    let s0_f = to_f64(&ex.s0);
    let interval = Some(Interval {
        lo: s0_f - rad + to_f64(&lo_shift),
        hi: s0_f + rad + to_f64(&hi_shift),
        lo_closed: false,
        hi_closed: false,
    });

    if !(above_lo && below_hi) {
        return Ok(Classification { verdict: Verdict::NoRealizationGenerates, interval, ..base });
    }

    let (int_eq_min, int_eq_max) = match domain {
        DomainKind::WholeSpace => {
            // Minimal realization: [s1+2-a, s2+2-a) for a < 2, the mirror
            // half-open interval for a > 2.  Maximal: dual, (s1, s2] / [s1, s2).
            let min_flag = if alpha_below_2 {
                ex.cmp_root(&np, shift, -1) != Ordering::Less
                    && ex.cmp_root(&np, shift, 1) == Ordering::Less
            } else {
                ex.cmp_root(&np, shift, -1) == Ordering::Greater
                    && ex.cmp_root(&np, shift, 1) != Ordering::Greater
            };
            let max_flag = if alpha_below_2 {
                ex.cmp_root(&np, &zero, -1) == Ordering::Greater
                    && ex.cmp_root(&np, &zero, 1) != Ordering::Greater
            } else {
                ex.cmp_root(&np, &zero, -1) != Ordering::Less
                    && ex.cmp_root(&np, &zero, 1) == Ordering::Less
            };
            (min_flag, max_flag)
        }
        // The restricted-domain statements only name a suitable intermediate
        // realization; no endpoint-equality claims are transcribed.
        DomainKind::Ball | DomainKind::Exterior => (false, false),
    };

    let verdict = match (int_eq_min, int_eq_max) {
        (true, true) => Verdict::GeneratesMinAndMax,
        (true, false) => Verdict::GeneratesMin,
        (false, true) => Verdict::GeneratesMax,
        (false, false) => Verdict::GeneratesIntOnly,
    };
    Ok(Classification { verdict, interval, int_eq_min, int_eq_max, ..base })
}

impl Classification {
    /// Convenience: does any realization generate for this `(params, p)`?
    pub fn generates(&self) -> bool {
        !matches!(
            self.verdict,
            Verdict::NoRealizationGenerates | Verdict::NegativeDiscriminant
        )
    }
}
