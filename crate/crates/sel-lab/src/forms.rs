//! Quadrature checks of the weighted integral inequalities behind the
//! `L^p` theory: the dissipativity form `int (-Lu) u |u|^{p-2} dx`, a
//! weighted coercivity bound against `||r^{alpha-2} u||_p^p`, a logarithmic
//! Hardy inequality on the unit ball, and the gradient interpolation
//! estimate `||r^{alpha-1} grad u||_p <= eps ||Lu||_p + (C/eps)
//! ||r^{alpha-2} u||_p`.
//!
//! Test functions are separable `g(r) Q(omega)` with `Q` a spherical
//! harmonic of order `n`; the angular part enters only through the sphere
//! eigenvalue `lambda_n = n(n + N - 2)`, so every integral reduces to a
//! 1-D quadrature in `s = log r`.  The `|u|^{p-2}` factor is evaluated as
//! `(u^2 + delta^2)^{(p-2)/2}` with `delta = 1e-12 max|u|`, which keeps
//! `p < 2` integrable at zeros of `u` and is inert at `p = 2`.

use crate::grid::{bump_profile, lp_norm, simpson, weighted_lp_norm, LogGrid};
use crate::params::{OperatorParams, ParamError};
use crate::radial::{apply_operator, RadialError};
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

/// Pass/fail slack relative to the form's own mass scale.
const REL_TOL: f64 = 1e-8;
/// Regularization size as a fraction of `max |u|`.
const REG_FRACTION: f64 = 1e-12;
/// The interpolation inequality is probed at these `eps`.
pub const INTERPOLATION_EPS: [f64; 3] = [0.3, 0.1, 0.03];

#[derive(Debug, Error)]
pub enum FormsError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error("bad profile: {0}")]
    BadProfile(&'static str),
    #[error("profile support covers only {nodes} grid nodes; too coarse to quadrature")]
    Unresolved { nodes: usize },
    #[error("coercivity weight margin {margin} is not positive")]
    NegativeMargin { margin: f64 },
}

/// Separable test function `g(r) Q(omega)` reduced to its radial profile.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub grid: Arc<LogGrid>,
    pub g: Vec<f64>,
    /// spherical-harmonic order; contributes `lambda_n = n(n + N - 2)`
    pub n: u32,
    pub p: f64,
}

impl TestFunction {
    pub fn new(grid: Arc<LogGrid>, g: Vec<f64>, n: u32, p: f64) -> Result<Self, FormsError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(FormsError::BadProfile("exponent must be finite and > 1"));
        }
        check_support(&grid, &g)?;
        Ok(TestFunction { grid, g, n, p })
    }
}

/// Compact support strictly inside the grid (two stencil nodes of margin)
/// and wide enough to resolve; the all-zero profile is allowed.
fn check_support(grid: &LogGrid, g: &[f64]) -> Result<(), FormsError> {
    if g.len() != grid.len() || g.iter().any(|v| !v.is_finite()) {
        return Err(FormsError::BadProfile("profile must be finite and grid-sized"));
    }
    let first = g.iter().position(|&v| v != 0.0);
    let last = g.iter().rposition(|&v| v != 0.0);
    if let (Some(first), Some(last)) = (first, last) {
        if first < 2 || last + 2 >= g.len() {
            return Err(FormsError::BadProfile("support must stay strictly inside the grid"));
        }
        if last - first + 1 < 8 {
            return Err(FormsError::Unresolved { nodes: last - first + 1 });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FormReport {
    pub real_part: f64,
    /// zero for the real profiles accepted here; kept so reports state the
    /// full sesquilinear claim they were checked against
    pub imaginary_part: f64,
    /// theoretical bound the form is tested against
    pub lower_bound: f64,
    /// the `f(.)` value governing the bound
    pub margin_used: f64,
    /// mass integral the tolerances are relative to
    pub scale: f64,
    pub passed: bool,
}

fn d1(h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
    }
    out
}

fn d2(h: f64, g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / (h * h);
    }
    out
}

/// Regularized `u |u|^{p-2}`; exact at `p = 2`.
fn p_factor(v: f64, p: f64, delta: f64) -> f64 {
    if p == 2.0 {
        v
    } else {
        v * (v * v + delta * delta).powf(0.5 * p - 1.0)
    }
}

fn reg_delta(g: &[f64]) -> f64 {
    REG_FRACTION * g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `int (-L(gQ)) gQ |gQ|^{p-2} V^{p-1} dx` reduced to `s = log r`, with
/// `V = r^{extra_weight/(p-1)}`; returns the form value and the mass
/// integral `int |g|^p r^{alpha-2+extra_weight} r^{N-1} dr` both sides of
/// the inequalities are scaled by.  The angular factor of the sphere is
/// dropped on both, so they can only be compared to each other.
fn reduced_form(
    params: &OperatorParams,
    grid: &LogGrid,
    g: &[f64],
    n: u32,
    p: f64,
    extra_weight: f64,
    delta: f64,
) -> (f64, f64) {
    let nf = params.dim as f64;
    let drift = nf - 2.0 + params.c;
    let lam_n = n as f64 * (n as f64 + nf - 2.0);
    let gs = d1(grid.h, g);
    let gss = d2(grid.h, g);
    let m = grid.len();
    let mut num = vec![0.0; m];
    let mut mass = vec![0.0; m];
    for i in 0..m {
        let s = grid.s[i];
        let minus_lu = ((params.alpha - 2.0) * s).exp()
            * (-gss[i] - drift * gs[i] + (lam_n + params.b) * g[i]);
        num[i] = minus_lu * p_factor(g[i], p, delta) * ((nf + extra_weight) * s).exp();
        mass[i] = g[i].abs().powf(p) * ((nf + params.alpha - 2.0 + extra_weight) * s).exp();
    }
    (simpson(grid.h, &num), simpson(grid.h, &mass))
}

/// Sign check of `Re int (-Lu) u |u|^{p-2} dx`: nonnegative exactly when
/// the dissipativity margin `f((N + alpha - 2)/p)` is (for `n = 0`; higher
/// harmonics only add).
pub fn dissipativity_form(
    params: &OperatorParams,
    tf: &TestFunction,
) -> Result<FormReport, FormsError> {
    let margin = params.dissipativity_margin(tf.p)?;
    let (real, scale) =
        reduced_form(params, &tf.grid, &tf.g, tf.n, tf.p, 0.0, reg_delta(&tf.g));
    Ok(FormReport {
        real_part: real,
        imaginary_part: 0.0,
        lower_bound: 0.0,
        margin_used: margin,
        scale,
        passed: real >= -REL_TOL * scale,
    })
}

/// `Re int (-Lu) V^{p-1} u |u|^{p-2} dx >= M ||V u||_p^p` with
/// `V = |x|^{alpha-2}` and `M = f(N/p + alpha - 2)`; requires `M > 0`.
pub fn weighted_coercivity(
    params: &OperatorParams,
    p: f64,
    tf: &TestFunction,
) -> Result<FormReport, FormsError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(FormsError::BadProfile("exponent must be finite and > 1"));
    }
    let m = params.f_eval(params.dim as f64 / p + params.alpha - 2.0);
    if m.is_nan() || m <= 0.0 {
        return Err(FormsError::NegativeMargin { margin: m });
    }
    let extra = (params.alpha - 2.0) * (p - 1.0);
    let (real, scale) = reduced_form(params, &tf.grid, &tf.g, tf.n, p, extra, reg_delta(&tf.g));
    let lower = m * scale;
    Ok(FormReport {
        real_part: real,
        imaginary_part: 0.0,
        lower_bound: lower,
        margin_used: m,
        scale,
        passed: real >= lower - REL_TOL * (1.0 + m) * scale,
    })
}

/// `int_{B_1} |x|^{2-N} grad v . grad(v |v|^{p-2}) dx >= ((p-1)/p^2)
/// int_{B_1} |x|^{-N} |log|x||^{-2} |v|^p dx` for radial `v` supported in
/// the closed unit ball and vanishing at `r = 1`.  Both sides collapse to
/// integrals in `s`; truncating at the grid's inner edge only discards
/// mass from the right-hand side, so the check is conservative there.
pub fn log_hardy(p: f64, grid: &LogGrid, v: &[f64]) -> Result<FormReport, FormsError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(FormsError::BadProfile("exponent must be finite and > 1"));
    }
    if v.len() != grid.len() || v.iter().any(|x| !x.is_finite()) {
        return Err(FormsError::BadProfile("profile must be finite and grid-sized"));
    }
    for (i, &s) in grid.s.iter().enumerate() {
        if s > -0.5 * grid.h && v[i] != 0.0 {
            return Err(FormsError::BadProfile("profile must vanish at and beyond r = 1"));
        }
    }
    let delta = reg_delta(v);
    let vs = d1(grid.h, v);
    let m = grid.len();
    let mut lhs = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        lhs[i] = (p - 1.0) * (v[i] * v[i] + delta * delta).powf(0.5 * p - 1.0) * vs[i] * vs[i];
        if v[i] != 0.0 {
            let s = grid.s[i];
            rhs[i] = v[i].abs().powf(p) / (s * s);
        }
    }
    let real = simpson(grid.h, &lhs);
    let constant = (p - 1.0) / (p * p);
    let lower = constant * simpson(grid.h, &rhs);
    let scale = real.abs() + lower.abs();
    Ok(FormReport {
        real_part: real,
        imaginary_part: 0.0,
        lower_bound: lower,
        margin_used: constant,
        scale,
        passed: real >= lower - REL_TOL * scale,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterpolationReport {
    pub eps: [f64; 3],
    /// smallest `C` making the inequality hold at each `eps`
    pub c: [f64; 3],
    pub grad_norm: f64,
    pub op_norm: f64,
    pub weight_norm: f64,
}

/// Fits the smallest `C` with `||r^{alpha-1} grad u||_p <= eps ||Lu||_p +
/// (C/eps) ||r^{alpha-2} u||_p` at each probe `eps`.
pub fn interpolation_probe(
    params: &OperatorParams,
    p: f64,
    grid: &LogGrid,
    u: &[f64],
) -> Result<InterpolationReport, FormsError> {
    if !(p.is_finite() && p > 1.0) {
        return Err(FormsError::BadProfile("exponent must be finite and > 1"));
    }
    check_support(grid, u)?;
    // radial gradient: |grad u| = |u'| = |u_s| / r
    let us = d1(grid.h, u);
    let grad_norm = weighted_lp_norm(grid, &us, p, params.dim, params.alpha - 2.0);
    let lu = apply_operator(params, grid, u)?;
    let op_norm = lp_norm(grid, &lu, p, params.dim);
    let weight_norm = weighted_lp_norm(grid, u, p, params.dim, params.alpha - 2.0);
    let mut c = [0.0; 3];
    for (k, &eps) in INTERPOLATION_EPS.iter().enumerate() {
        if weight_norm > 0.0 {
            c[k] = (eps * (grad_norm - eps * op_norm) / weight_norm).max(0.0);
        }
    }
    Ok(InterpolationReport { eps: INTERPOLATION_EPS, c, grad_norm, op_norm, weight_norm })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorpusReport {
    pub eps: [f64; 3],
    /// per-`eps` worst fitted `C` over the corpus
    pub max_c: [f64; 3],
    pub profiles: usize,
}

/// Bump support `(r_lo, r_hi, optional second lobe)`.
type BumpSpec = (f64, f64, Option<(f64, f64)>);

/// Bump supports spread over four decades of radius; grid-independent so
/// refinements resample the same functions.
fn corpus_specs() -> Vec<BumpSpec> {
    let mut out = Vec::with_capacity(50);
    for k in 0..50u64 {
        let center = -2.2 + 4.4 * k as f64 / 49.0;
        let half = 0.35 + 1.4 * ((k as f64 * 0.618_033_988_749_895).fract());
        let main = ((center - half).exp(), (center + half).exp());
        let second = (k % 3 == 0).then(|| {
            let lo = center - half - 1.2;
            (lo.exp(), (lo + 1.1).exp())
        });
        out.push((main.0, main.1, second));
    }
    out
}

/// Runs `interpolation_probe` over the 50-profile corpus and keeps the
/// per-`eps` maxima; the assertion that these stay bounded is the discrete
/// existence check for the inequality.
pub fn interpolation_corpus(
    params: &OperatorParams,
    p: f64,
    grid: &LogGrid,
) -> Result<CorpusReport, FormsError> {
    let specs = corpus_specs();
    let mut max_c = [0.0f64; 3];
    for (lo, hi, second) in &specs {
        let mut u = bump_profile(grid, *lo, *hi);
        if let Some((lo2, hi2)) = second {
            for (ui, bi) in u.iter_mut().zip(bump_profile(grid, *lo2, *hi2)) {
                *ui += 0.6 * bi;
            }
        }
        let rep = interpolation_probe(params, p, grid, &u)?;
        for (best, c) in max_c.iter_mut().zip(rep.c) {
            *best = best.max(c);
        }
    }
    Ok(CorpusReport { eps: INTERPOLATION_EPS, max_c, profiles: specs.len() })
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// `r^{-decay}` on the log-plateau `[plateau_lo, plateau_hi]`, glued to
/// zero by C^2 ramps of log-width `ramp`, normalized to unit maximum.
pub fn power_plateau_profile(
    grid: &LogGrid,
    decay: f64,
    plateau_lo: f64,
    plateau_hi: f64,
    ramp: f64,
) -> Vec<f64> {
    assert!(ramp > 0.0 && plateau_lo < plateau_hi, "need a plateau and positive ramps");
    let chi = |s: f64| {
        if s < plateau_lo {
            smoothstep((s - (plateau_lo - ramp)) / ramp)
        } else if s > plateau_hi {
            smoothstep((plateau_hi + ramp - s) / ramp)
        } else {
            1.0
        }
    };
    let raw: Vec<f64> = grid.s.iter().map(|&s| (-decay * s).exp() * chi(s)).collect();
    let top = raw.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return raw;
    }
    raw.iter().map(|v| v / top).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationSweep {
    pub deltas: Vec<f64>,
    /// `real_part / scale` of the dissipativity form at each `delta`
    pub ratios: Vec<f64>,
    pub worst_delta: f64,
    pub worst_ratio: f64,
    /// largest sweep `delta` whose form is negative while some larger
    /// `delta` was still nonnegative; `None` if no sign change was seen
    pub flip_delta: Option<f64>,
}

/// Sharpness search for a negative dissipativity margin: sweeps the
/// near-optimizer family `g_delta = r^{-(N+alpha-2)/p + delta} chi` on a
/// wide log-plateau and records the normalized form.  For small `delta`
/// the plateau term `f((N+alpha-2)/p - delta)` dominates the cutoff energy
/// and the form goes negative.
pub fn violation_search(params: &OperatorParams, p: f64) -> Result<ViolationSweep, FormsError> {
    let sigma = (params.dim as f64 + params.alpha - 2.0) / p;
    let grid = Arc::new(
        LogGrid::new(-45.0, 3.0, 4801).expect("static sweep grid is valid"),
    );
    let deltas =
        vec![2.56, 1.28, 0.64, 0.32, 0.16, 0.08, 0.04, 0.02, 0.01, 0.005, 0.0];
    let mut ratios = Vec::with_capacity(deltas.len());
    let mut worst = (f64::INFINITY, 0.0);
    let mut flip_delta = None;
    let mut seen_nonneg = false;
    for &delta in &deltas {
        let g = power_plateau_profile(&grid, sigma - delta, -40.0, -4.0, 3.0);
        let tf = TestFunction::new(Arc::clone(&grid), g, 0, p)?;
        let rep = dissipativity_form(params, &tf)?;
        let ratio = rep.real_part / rep.scale;
        if ratio < worst.0 {
            worst = (ratio, delta);
        }
        if ratio >= 0.0 {
            seen_nonneg = true;
        } else if seen_nonneg && flip_delta.is_none() {
            flip_delta = Some(delta);
        }
        ratios.push(ratio);
    }
    Ok(ViolationSweep {
        deltas,
        ratios,
        worst_delta: worst.1,
        worst_ratio: worst.0,
        flip_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: u32, alpha: f64, b: f64, c: f64) -> OperatorParams {
        OperatorParams::new(n, alpha, b, c).unwrap()
    }

    fn bump_tf(grid: &Arc<LogGrid>, r_lo: f64, r_hi: f64, n: u32, p: f64) -> TestFunction {
        let g = bump_profile(grid, r_lo, r_hi);
        TestFunction::new(Arc::clone(grid), g, n, p).unwrap()
    }

    fn wide_grid() -> Arc<LogGrid> {
        Arc::new(LogGrid::new(-6.0, 6.0, 1201).unwrap())
    }

    #[test]
    fn dissipative_fixture_is_nonnegative() {
        let pr = params(3, 0.0, 0.0, 0.0);
        let tf = bump_tf(&wide_grid(), 0.5, 2.0, 0, 2.0);
        let rep = dissipativity_form(&pr, &tf).unwrap();
        assert_relative_eq!(rep.margin_used, 0.25, max_relative = 1e-15);
        assert!(rep.passed);
        assert!(rep.real_part > 0.0, "bump energy should be strictly positive");
        assert_eq!(rep.imaginary_part, 0.0);
    }

    #[test]
    fn higher_harmonic_adds_the_sphere_eigenvalue_term() {
        let pr = params(3, 0.0, 0.0, 0.0);
        let grid = wide_grid();
        let f0 = dissipativity_form(&pr, &bump_tf(&grid, 0.5, 2.0, 0, 2.0)).unwrap();
        let f2 = dissipativity_form(&pr, &bump_tf(&grid, 0.5, 2.0, 2, 2.0)).unwrap();
        // lambda_2 = 2(2 + 3 - 2) = 6, and the added term is lambda_n times
        // the mass integral the report already carries
        assert_relative_eq!(f2.real_part - f0.real_part, 6.0 * f0.scale, max_relative = 1e-12);
        assert!(f2.real_part > f0.real_part);
    }

    #[test]
    fn negative_margin_sweep_flips_sign() {
        // f(1/2) = -0.3 + 1/4 = -0.05: steep profiles are still fine, the
        // near-optimizer family is not
        let pr = params(3, 0.0, -0.3, 0.0);
        let sweep = violation_search(&pr, 2.0).unwrap();
        assert!(sweep.ratios[0] > 0.0, "steepest member should be positive, got {:.4}", sweep.ratios[0]);
        assert!(*sweep.ratios.last().unwrap() < 0.0);
        assert!(sweep.flip_delta.is_some());
        assert!(sweep.worst_ratio <= -1e-3, "worst {:.3e}", sweep.worst_ratio);
    }

    #[test]
    fn coercivity_fixture_holds_with_slack() {
        // M = f(5/2 - 2) = 1 + (1/2)(5/2) = 9/4
        let pr = params(5, 0.0, 1.0, 0.0);
        let grid = wide_grid();
        let rep = weighted_coercivity(&pr, 2.0, &bump_tf(&grid, 0.5, 2.0, 0, 2.0)).unwrap();
        assert_relative_eq!(rep.margin_used, 2.25, max_relative = 1e-15);
        assert!(rep.passed);
        assert!(rep.real_part > rep.lower_bound, "bump should have strict slack");

        let zero = TestFunction::new(Arc::clone(&grid), vec![0.0; grid.len()], 0, 2.0).unwrap();
        let rep0 = weighted_coercivity(&pr, 2.0, &zero).unwrap();
        assert_eq!(rep0.real_part, 0.0);
        assert_eq!(rep0.lower_bound, 0.0);
        assert!(rep0.passed);
    }

    #[test]
    fn coercivity_plateau_family_approaches_equality() {
        // at decay N/p + alpha - 2 both sides are dilation invariant and the
        // ratio drops to 1 as the plateau widens
        let pr = params(5, 0.0, 1.0, 0.0);
        let grid = Arc::new(LogGrid::new(-16.0, 16.0, 3201).unwrap());
        let mut ratios = Vec::new();
        for half in [3.0, 6.0, 12.0] {
            let g = power_plateau_profile(&grid, 0.5, -half, half, 3.0);
            let tf = TestFunction::new(Arc::clone(&grid), g, 0, 2.0).unwrap();
            let rep = weighted_coercivity(&pr, 2.0, &tf).unwrap();
            assert!(rep.passed);
            ratios.push(rep.real_part / rep.lower_bound);
        }
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
        assert!(ratios[2] >= 1.0 - 1e-9 && ratios[2] <= 1.10, "{ratios:?}");
    }

    #[test]
    fn log_hardy_ramp_has_strict_slack() {
        let grid = LogGrid::new(-50.0, 0.0, 5001).unwrap();
        let v = grid.sample(|r| if r <= 0.25 { 1.0 } else { (1.0 - r) / 0.75 });
        let rep = log_hardy(2.0, &grid, &v).unwrap();
        assert!(rep.passed);
        assert!(rep.real_part >= 1.2 * rep.lower_bound, "ratio {:.3}", rep.real_part / rep.lower_bound);

        let zero = vec![0.0; grid.len()];
        let rep0 = log_hardy(2.0, &grid, &zero).unwrap();
        assert!(rep0.passed);
        assert_eq!(rep0.lower_bound, 0.0);
    }

    #[test]
    fn log_hardy_near_optimizer_family() {
        // v = (-log r)^{1/p} chi: under t = -log r and w = |v|^{p/2} this is
        // the equality profile w = t^{1/2} of the 1-D Hardy inequality, so
        // the ratio creeps toward 1 as the window widens (logarithmically;
        // tracked, not pinned to a target)
        let grid = LogGrid::new(-50.0, 0.0, 5001).unwrap();
        let p = 2.5;
        let mut ratios = Vec::new();
        for t0 in [1.6, 0.8, 0.4, 0.2] {
            let chi = |t: f64| {
                if t < 2.0 * t0 {
                    smoothstep(t / t0 - 1.0)
                } else if t > 12.0 {
                    smoothstep((48.0 / t).ln() / (48.0f64 / 12.0).ln())
                } else {
                    1.0
                }
            };
            let v = grid.sample(|r| {
                let t = -r.ln();
                if t <= t0 {
                    0.0
                } else {
                    t.powf(1.0 / p) * chi(t)
                }
            });
            let rep = log_hardy(p, &grid, &v).unwrap();
            assert!(rep.passed, "family member t0 = {t0} must satisfy the bound");
            ratios.push(rep.real_part / rep.lower_bound);
        }
        assert!(ratios.iter().all(|r| r.is_finite() && *r >= 1.0));
        assert!(*ratios.last().unwrap() < 6.0, "{ratios:?}");
    }

    #[test]
    fn interpolation_corpus_is_bounded_and_grid_stable() {
        let pr = params(3, 0.8, 0.5, -0.2);
        let coarse = LogGrid::new(-6.0, 6.0, 1201).unwrap();
        let fine = LogGrid::new(-6.0, 6.0, 2401).unwrap();
        let rc = interpolation_corpus(&pr, 2.0, &coarse).unwrap();
        let rf = interpolation_corpus(&pr, 2.0, &fine).unwrap();
        assert_eq!(rc.profiles, 50);
        for k in 0..3 {
            assert!(rc.max_c[k].is_finite() && rc.max_c[k] <= 100.0, "{:?}", rc.max_c);
            let rel = (rc.max_c[k] - rf.max_c[k]).abs() / rf.max_c[k].max(1e-12);
            assert!(rel <= 0.2, "eps {}: coarse {} vs fine {}", rc.eps[k], rc.max_c[k], rf.max_c[k]);
        }
    }

    #[test]
    fn interpolation_constant_is_dilation_invariant() {
        let pr = params(4, 1.3, 0.7, 0.4);
        let grid = LogGrid::new(-8.0, 8.0, 1601).unwrap();
        // shift by an even node count so the quadrature pattern realigns
        let t = (200.0 * grid.h).exp();
        for (lo, hi) in [(0.4, 1.1), (0.2, 2.5), (1.0, 1.6)] {
            let base = interpolation_probe(&pr, 3.0, &grid, &bump_profile(&grid, lo, hi)).unwrap();
            let moved =
                interpolation_probe(&pr, 3.0, &grid, &bump_profile(&grid, lo * t, hi * t)).unwrap();
            for k in 0..3 {
                let rel = (base.c[k] - moved.c[k]).abs() / (1.0 + base.c[k]);
                assert!(rel <= 1e-9, "eps {}: {} vs {}", base.eps[k], base.c[k], moved.c[k]);
            }
        }
    }

    #[test]
    fn interpolation_plateau_profile_is_trivial() {
        // flat top: the gradient norm comes from the ramps alone
        let pr = params(3, 0.0, 0.0, 0.0);
        let grid = LogGrid::new(-8.0, 8.0, 1601).unwrap();
        let u = power_plateau_profile(&grid, 0.0, -2.0, 2.0, 1.5);
        let us = d1(grid.h, &u);
        for (i, &s) in grid.s.iter().enumerate() {
            if (-1.9..=1.9).contains(&s) {
                assert_eq!(us[i], 0.0, "flat top must have zero gradient at s = {s}");
            }
        }
        let rep = interpolation_probe(&pr, 2.0, &grid, &u).unwrap();
        assert!(rep.c.iter().all(|c| c.is_finite()));
        assert!(rep.grad_norm > 0.0);
    }

    #[test]
    fn regularization_is_inert_at_p_at_least_two() {
        let pr = params(3, 0.5, 0.5, 0.0);
        let grid = wide_grid();
        let g = bump_profile(&grid, 0.5, 2.0);
        for p in [2.0, 3.0] {
            let regular = reduced_form(&pr, &grid, &g, 0, p, 0.0, reg_delta(&g));
            let raw = reduced_form(&pr, &grid, &g, 0, p, 0.0, 0.0);
            assert_relative_eq!(regular.0, raw.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn sign_law_over_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let grid = wide_grid();
        let mut accepted = 0;
        for _ in 0..200 {
            let pr = params(
                rng.gen_range(2u32..=6),
                rng.gen_range(-1.0..1.5),
                rng.gen_range(-0.5..3.0),
                rng.gen_range(-1.0..1.0),
            );
            let p = rng.gen_range(1.6..4.0);
            let margin = pr.dissipativity_margin(p).unwrap();
            if margin < 0.0 {
                continue;
            }
            accepted += 1;
            let center: f64 = rng.gen_range(-2.0..2.0);
            let half: f64 = rng.gen_range(0.25..1.0);
            let g = bump_profile(&grid, (center - half).exp(), (center + half).exp());
            let n = rng.gen_range(0..=3u32);
            let tf = TestFunction::new(Arc::clone(&grid), g, n, p).unwrap();
            let rep = dissipativity_form(&pr, &tf).unwrap();
            assert!(
                rep.real_part >= -1e-8 * rep.scale,
                "margin {margin:.3} draw went negative: {:.3e}",
                rep.real_part
            );
            if let Ok(l) = pr.sectoriality_constant(p) {
                assert!(rep.imaginary_part.abs() <= l * rep.real_part + 1e-8 * rep.scale);
            }
        }
        assert!(accepted >= 50, "only {accepted} draws had nonnegative margin");

        // the matching negative side: margin <= -0.1 fixtures must yield a
        // certified violating profile
        for (pr, p) in [
            (params(3, 0.0, -0.4, 0.0), 2.0),
            (params(3, 0.0, -0.4, 0.0), 3.0),
            (params(4, 0.5, -2.0, 0.5), 2.0),
        ] {
            assert!(pr.dissipativity_margin(p).unwrap() <= -0.1);
            let sweep = violation_search(&pr, p).unwrap();
            assert!(sweep.worst_ratio <= -1e-3, "p = {p}: worst {:.3e}", sweep.worst_ratio);
        }
    }

    #[test]
    fn rejects_bad_profiles() {
        let grid = wide_grid();
        let mut edge = vec![0.0; grid.len()];
        edge[0] = 1.0;
        edge[40] = 1.0;
        assert!(matches!(
            TestFunction::new(Arc::clone(&grid), edge, 0, 2.0),
            Err(FormsError::BadProfile(_))
        ));
        let mut narrow = vec![0.0; grid.len()];
        narrow[600] = 1.0;
        narrow[603] = 1.0;
        assert!(matches!(
            TestFunction::new(Arc::clone(&grid), narrow, 0, 2.0),
            Err(FormsError::Unresolved { nodes: 4 })
        ));
        let g = bump_profile(&grid, 0.5, 2.0);
        assert!(matches!(
            TestFunction::new(Arc::clone(&grid), g, 0, 1.0),
            Err(FormsError::BadProfile(_))
        ));

        // coercivity margin f(-1/2) = -0.3 - 3/4 < 0
        let pr = params(3, 0.0, -0.3, 0.0);
        let tf = bump_tf(&grid, 0.5, 2.0, 0, 2.0);
        assert!(matches!(
            weighted_coercivity(&pr, 2.0, &tf),
            Err(FormsError::NegativeMargin { .. })
        ));

        let small = LogGrid::new(-3.0, 1.0, 401).unwrap();
        let bad = small.sample(|r| if r <= 1.2 { 1.0 } else { 0.0 });
        assert!(matches!(
            log_hardy(2.0, &small, &bad),
            Err(FormsError::BadProfile(_))
        ));
    }
}
