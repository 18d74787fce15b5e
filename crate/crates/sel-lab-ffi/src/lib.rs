//! C ABI over the sel-lab core: operator parameters, generation
//! classification, modified Bessel evaluation, radial kernel pairs, and
//! oscillation witnesses.
//!
//! Conventions:
//!
//! * every fallible entry point returns a [`SelStatus`]; results travel
//!   through out-pointers, which are written only on `Ok`;
//! * the safety contract is uniform: pointer arguments must be valid and
//!   aligned for the duration of the call, or null, which every entry point
//!   detects and reports as `NullPointer` (handles additionally must come
//!   from the matching `_new` and not have been freed);
//! * heap objects come back as opaque handles with a matching `_free`
//!   function; `_free` accepts null;
//! * after any non-`Ok` status, [`sel_last_error`] yields a UTF-8 message
//!   for the calling thread;
//! * panics never cross the boundary: they are caught and reported as
//!   `NumericFailure`.
//!
//! The generated header lives at `include/sel_lab.h`.

// the pointer contract above covers every entry point
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use sel_lab::bessel::{self, BesselError};
use sel_lab::evolve;
use sel_lab::oscillate::{self, OscillateError};
use sel_lab::params::{classify, Classification, DomainKind, OperatorParams, ParamError, Verdict};
use sel_lab::radial::{self, RadialError, RadialSolutionPair};

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Status code returned by every fallible entry point.  `InvalidInput` and
/// `NumericFailure` match the CLI exit codes 2 and 3.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NumericFailure = 3,
}

/// Domain underlying the `L^p` space.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelDomain {
    WholeSpace = 0,
    Ball = 1,
    Exterior = 2,
}

/// Which realizations of the operator generate an analytic semigroup.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelVerdict {
    GeneratesMin = 0,
    GeneratesIntOnly = 1,
    GeneratesMax = 2,
    GeneratesMinAndMax = 3,
    NoRealizationGenerates = 4,
    Alpha2AllP = 5,
    NegativeDiscriminant = 6,
}

/// Flattened classification record.
///
/// The `lo`/`hi` fields carry the generation window in the variable `N/p`
/// and are meaningful only when `has_interval` is set; likewise the
/// `theta_*` fields and `has_theta_interval` / `has_theta0`.  `selfadjoint`
/// is a tri-state: -1 = not applicable (needs `c = alpha` and `p = 2`),
/// 0 = no, 1 = yes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelClassification {
    pub verdict: SelVerdict,
    pub n_over_p: f64,
    pub has_interval: bool,
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub int_eq_min: bool,
    pub int_eq_max: bool,
    pub selfadjoint: i8,
    pub has_theta_interval: bool,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub theta_lo_closed: bool,
    pub theta_hi_closed: bool,
    pub has_theta0: bool,
    pub theta0: f64,
}

/// Modified Bessel values of one order at one argument.  Plain
/// `I_nu(x)`, `K_nu(x)` and x-derivatives, or the exponentially scaled
/// variants `e^{-x} I`, `e^{x} K` when requested.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelBessel {
    pub i: f64,
    pub k: f64,
    pub di: f64,
    pub dk: f64,
}

/// Values and derivatives of the radial kernel pair at one radius.
/// `u1` decays at the singular end of the scale, `u2` at the other.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelPairEval {
    pub u1: f64,
    pub du1: f64,
    pub u2: f64,
    pub du2: f64,
}

/// Non-positivity witness: a location `s` in the log variable and the
/// (negative) value of the candidate kernel average there.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SelWitness {
    pub s: f64,
    pub value: f64,
}

/// Opaque handle: validated operator coefficients.
pub struct SelParams(OperatorParams);

/// Opaque handle: positive radial kernel pair for fixed `(params, lambda)`.
pub struct SelRadialPair(RadialSolutionPair);

// ---- status plumbing -----------------------------------------------------

fn guard(f: impl FnOnce() -> SelStatus) -> SelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SelStatus::NumericFailure
        }
    }
}

fn null_arg(name: &str) -> SelStatus {
    set_error(format!("{name} must not be null"));
    SelStatus::NullPointer
}

fn param_status(e: ParamError) -> SelStatus {
    set_error(e.to_string());
    SelStatus::InvalidInput
}

fn bessel_status(e: BesselError) -> SelStatus {
    let status = match e {
        BesselError::BadOrder(_) | BesselError::BadArgument(_) => SelStatus::InvalidInput,
        BesselError::Overflow { .. } | BesselError::NoConvergence { .. } => {
            SelStatus::NumericFailure
        }
    };
    set_error(e.to_string());
    status
}

fn radial_status(e: RadialError) -> SelStatus {
    match e {
        RadialError::Bessel(inner) => bessel_status(inner),
        other => {
            set_error(other.to_string());
            SelStatus::InvalidInput
        }
    }
}

fn oscillate_status(e: OscillateError) -> SelStatus {
    let status = match e {
        OscillateError::StepSizeFailure { .. } | OscillateError::NoNegativeWindow => {
            SelStatus::NumericFailure
        }
        _ => SelStatus::InvalidInput,
    };
    set_error(e.to_string());
    status
}

fn flatten(cls: &Classification) -> SelClassification {
    let verdict = match cls.verdict {
        Verdict::GeneratesMin => SelVerdict::GeneratesMin,
        Verdict::GeneratesIntOnly => SelVerdict::GeneratesIntOnly,
        Verdict::GeneratesMax => SelVerdict::GeneratesMax,
        Verdict::GeneratesMinAndMax => SelVerdict::GeneratesMinAndMax,
        Verdict::NoRealizationGenerates => SelVerdict::NoRealizationGenerates,
        Verdict::Alpha2AllP => SelVerdict::Alpha2AllP,
        Verdict::NegativeDiscriminant => SelVerdict::NegativeDiscriminant,
    };
    let mut out = SelClassification {
        verdict,
        n_over_p: cls.n_over_p,
        has_interval: false,
        lo: 0.0,
        hi: 0.0,
        lo_closed: false,
        hi_closed: false,
        int_eq_min: cls.int_eq_min,
        int_eq_max: cls.int_eq_max,
        selfadjoint: match cls.selfadjoint {
            None => -1,
            Some(false) => 0,
            Some(true) => 1,
        },
        has_theta_interval: false,
        theta_lo: 0.0,
        theta_hi: 0.0,
        theta_lo_closed: false,
        theta_hi_closed: false,
        has_theta0: false,
        theta0: 0.0,
    };
    if let Some(iv) = cls.interval {
        out.has_interval = true;
        out.lo = iv.lo;
        out.hi = iv.hi;
        out.lo_closed = iv.lo_closed;
        out.hi_closed = iv.hi_closed;
    }
    if let Some(iv) = cls.theta.interval {
        out.has_theta_interval = true;
        out.theta_lo = iv.lo;
        out.theta_hi = iv.hi;
        out.theta_lo_closed = iv.lo_closed;
        out.theta_hi_closed = iv.hi_closed;
    }
    if let Some(t0) = cls.theta.theta0 {
        out.has_theta0 = true;
        out.theta0 = t0;
    }
    out
}

// ---- entry points ----------------------------------------------------------

/// Validate coefficients of `L = |x|^a lap + c |x|^{a-1} (x/|x|).grad
/// - b |x|^{a-2}` and allocate a handle.  Free with `sel_params_free`.
#[no_mangle]
pub unsafe extern "C" fn sel_params_new(
    dim: u32,
    alpha: f64,
    b: f64,
    c: f64,
    out: *mut *mut SelParams,
) -> SelStatus {
    guard(|| {
        let Some(out) = out.as_mut() else { return null_arg("out") };
        match OperatorParams::new(dim, alpha, b, c) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(SelParams(p)));
                SelStatus::Ok
            }
            Err(e) => param_status(e),
        }
    })
}

/// Release a handle from `sel_params_new`.  Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sel_params_free(params: *mut SelParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Discriminant `D = b + ((N - 2 + c) / 2)^2` of the indicial polynomial.
#[no_mangle]
pub unsafe extern "C" fn sel_params_discriminant(
    params: *const SelParams,
    out: *mut f64,
) -> SelStatus {
    guard(|| {
        let Some(p) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        *out = p.0.discriminant();
        SelStatus::Ok
    })
}

/// Vertex `s0 = (N - 2 + c) / 2` of the indicial polynomial.
#[no_mangle]
pub unsafe extern "C" fn sel_params_s0(params: *const SelParams, out: *mut f64) -> SelStatus {
    guard(|| {
        let Some(p) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        *out = p.0.s0();
        SelStatus::Ok
    })
}

/// Indicial polynomial `f(s) = b + s (N - 2 + c - s)`.
#[no_mangle]
pub unsafe extern "C" fn sel_params_f_eval(
    params: *const SelParams,
    s: f64,
    out: *mut f64,
) -> SelStatus {
    guard(|| {
        let Some(p) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        *out = p.0.f_eval(s);
        SelStatus::Ok
    })
}

/// Growth bound `b - (N/p) (N - N/p - 2 + c)` of the `L^p` semigroup norm
/// in the scale-free case `alpha = 2`.  Requires `1 < p < infinity`.
#[no_mangle]
pub unsafe extern "C" fn sel_growth_exponent(
    params: *const SelParams,
    p: f64,
    out: *mut f64,
) -> SelStatus {
    guard(|| {
        let Some(pr) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        if !(p.is_finite() && p > 1.0) {
            set_error(format!("exponent p must satisfy 1 < p < infinity, got {p}"));
            return SelStatus::InvalidInput;
        }
        *out = evolve::growth_exponent(&pr.0, p);
        SelStatus::Ok
    })
}

/// Decide which realizations generate an analytic semigroup on
/// `L^p(domain)` and flatten the result.
#[no_mangle]
pub unsafe extern "C" fn sel_classify(
    params: *const SelParams,
    p: f64,
    domain: SelDomain,
    out: *mut SelClassification,
) -> SelStatus {
    guard(|| {
        let Some(pr) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        let kind = match domain {
            SelDomain::WholeSpace => DomainKind::WholeSpace,
            SelDomain::Ball => DomainKind::Ball,
            SelDomain::Exterior => DomainKind::Exterior,
        };
        match classify(&pr.0, p, kind) {
            Ok(cls) => {
                *out = flatten(&cls);
                SelStatus::Ok
            }
            Err(e) => param_status(e),
        }
    })
}

/// Modified Bessel `I_nu(x)`, `K_nu(x)` with derivatives; with `scaled`
/// set, the overflow-free variants `e^{-x} I`, `e^{x} K` instead.
#[no_mangle]
pub unsafe extern "C" fn sel_bessel_ik(
    nu: f64,
    x: f64,
    scaled: bool,
    out: *mut SelBessel,
) -> SelStatus {
    guard(|| {
        let Some(out) = out.as_mut() else { return null_arg("out") };
        if scaled {
            match bessel::bessel_ik_scaled(nu, x) {
                Ok(v) => {
                    *out = SelBessel { i: v.i, k: v.k, di: v.di, dk: v.dk };
                    SelStatus::Ok
                }
                Err(e) => bessel_status(e),
            }
        } else {
            match bessel::bessel_ik(nu, x) {
                Ok(v) => {
                    *out = SelBessel {
                        i: v.value_i,
                        k: v.value_k,
                        di: v.deriv_i,
                        dk: v.deriv_k,
                    };
                    SelStatus::Ok
                }
                Err(e) => bessel_status(e),
            }
        }
    })
}

/// Build the positive radial kernel pair for `lambda > 0`.  Fails on
/// `alpha = 2` (power-law kernel, no Bessel pair) and on negative
/// discriminant (oscillatory regime).  Free with `sel_radial_pair_free`.
#[no_mangle]
pub unsafe extern "C" fn sel_radial_pair_new(
    params: *const SelParams,
    lambda: f64,
    out: *mut *mut SelRadialPair,
) -> SelStatus {
    guard(|| {
        let Some(pr) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        match radial::build_pair(&pr.0, lambda) {
            Ok(pair) => {
                *out = Box::into_raw(Box::new(SelRadialPair(pair)));
                SelStatus::Ok
            }
            Err(e) => radial_status(e),
        }
    })
}

/// Release a handle from `sel_radial_pair_new`.  Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn sel_radial_pair_free(pair: *mut SelRadialPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Evaluate the kernel pair at radius `r > 0`.  Deep in the exponential
/// regime the plain values overflow and this reports `NumericFailure`.
#[no_mangle]
pub unsafe extern "C" fn sel_radial_pair_eval(
    pair: *const SelRadialPair,
    r: f64,
    out: *mut SelPairEval,
) -> SelStatus {
    guard(|| {
        let Some(pa) = pair.as_ref() else { return null_arg("pair") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        match pa.0.eval(r) {
            Ok(v) => {
                *out = SelPairEval { u1: v.u1, du1: v.du1, u2: v.u2, du2: v.du2 };
                SelStatus::Ok
            }
            Err(e) => radial_status(e),
        }
    })
}

/// In the negative-discriminant regime, search for a nonnegative bump whose
/// kernel average goes negative, certifying that no realization can be
/// resolvent-positive.  On success `out->value <= -1e-6`.
#[no_mangle]
pub unsafe extern "C" fn sel_oscillation_witness(
    params: *const SelParams,
    lambda: f64,
    out: *mut SelWitness,
) -> SelStatus {
    guard(|| {
        let Some(pr) = params.as_ref() else { return null_arg("params") };
        let Some(out) = out.as_mut() else { return null_arg("out") };
        match oscillate::build_counterexample(&pr.0, lambda) {
            Ok(cx) => {
                *out = SelWitness { s: cx.witness_s, value: cx.witness_value };
                SelStatus::Ok
            }
            Err(e) => oscillate_status(e),
        }
    })
}

/// Copy the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to `cap` bytes).  Returns the length the full
/// message needs, terminator included; call with `cap = 0` to size a buffer.
#[no_mangle]
pub unsafe extern "C" fn sel_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}
