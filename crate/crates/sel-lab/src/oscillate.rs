//! Oscillation analysis and the positivity counterexample for `D < 0`.
//!
//! Substituting `w(s) = r^{s0} u(r)`, `r = e^s`, turns the homogeneous
//! radial equation `lambda u - L u = 0` into
//!
//! ```text
//! w''(s) = (k + lambda e^{(2-alpha)s}) w(s),      k = D
//! ```
//!
//! For `k < 0` the potential is below `k/2` on the far side of the
//! threshold `m` solving `lambda e^{(2-alpha)m} = -k/2`, so every solution
//! oscillates there with asymptotic zero spacing `pi / sqrt(-k)`.  Out of a
//! Wronskian-normalized solution pair the antisymmetric kernel
//! `G(s,t) = z1(t) z2(s) - z1(s) z2(t)` is built; a nonnegative unit-mass
//! bump `g` placed on a window where `G(s*, .) < 0` yields
//! `w(s*) = int G(s*,t) g(t) dt < 0`, the witness that no positive solution
//! with source `phi(r) = g(log r) r^{alpha - 3/2}` can exist.

use crate::params::OperatorParams;
use serde::Serialize;
use thiserror::Error;

/// Adaptive-step relative tolerance of the integrator.
const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-12;
/// Step cap; keeps cubic Hermite interpolation between accepted steps
/// accurate to ~1e-8 in located zeros and the Wronskian drift below 1e-8.
const MAX_STEP: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum OscillateError {
    #[error("alpha = 2 is scale-free in s; no oscillation threshold")]
    AlphaTwo,
    #[error("discriminant {0} >= 0: kernel solutions are positive, nothing oscillates")]
    NonNegativeDiscriminant(f64),
    #[error("lambda must be finite and > 0, got {0}")]
    BadLambda(f64),
    #[error("integration window is empty or not finite")]
    BadWindow,
    #[error("step size collapsed near s = {s}")]
    StepSizeFailure { s: f64 },
    #[error("no window with negative kernel values found in the search box")]
    NoNegativeWindow,
}

/// Coefficients of the transformed equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Transformed {
    /// constant part of the potential, `= D < 0` on the oscillation path
    pub k: f64,
    /// exponential rate `2 - alpha`
    pub rate: f64,
    /// threshold with `k + lambda e^{rate s} <= k/2` beyond `m` (below for
    /// `alpha < 2`, above for `alpha > 2`)
    pub m: f64,
}

pub fn transform(params: &OperatorParams, lambda: f64) -> Result<Transformed, OscillateError> {
    if params.alpha == 2.0 {
        return Err(OscillateError::AlphaTwo);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(OscillateError::BadLambda(lambda));
    }
    let k = params.discriminant();
    if k >= 0.0 {
        return Err(OscillateError::NonNegativeDiscriminant(k));
    }
    let rate = 2.0 - params.alpha;
    Ok(Transformed { k, rate, m: (-k / (2.0 * lambda)).ln() / rate })
}

/// Wronskian-normalized solution pair of the transformed equation, sampled
/// at the accepted integrator steps (ascending in `s`).
#[derive(Debug, Clone)]
pub struct HomogeneousPair {
    pub s: Vec<f64>,
    pub z1: Vec<f64>,
    pub dz1: Vec<f64>,
    pub z2: Vec<f64>,
    pub dz2: Vec<f64>,
    /// zeros of `z1`, ascending, bisected to 1e-8
    pub zeros: Vec<f64>,
    /// worst deviation of `z1 dz2 - dz1 z2` from 1 across the window
    pub wronskian_defect: f64,
}

fn potential(params: &OperatorParams, lambda: f64) -> impl Fn(f64) -> f64 {
    let k = params.discriminant();
    let rate = 2.0 - params.alpha;
    move |s: f64| k + lambda * (rate * s).exp()
}

/// One Dormand-Prince 5(4) step for the 4-vector `(z1, dz1, z2, dz2)`.
/// Returns the fifth-order update and the embedded error estimate.
fn dp45_step(q: &impl Fn(f64) -> f64, s: f64, y: &[f64; 4], h: f64) -> ([f64; 4], f64) {
    let f = |s: f64, y: &[f64; 4]| -> [f64; 4] {
        let qv = q(s);
        [y[1], qv * y[0], y[3], qv * y[2]]
    };
    let k1 = f(s, y);
    let add = |y: &[f64; 4], terms: &[(f64, &[f64; 4])]| -> [f64; 4] {
        let mut out = *y;
        for (c, k) in terms {
            for i in 0..4 {
                out[i] += h * c * k[i];
            }
        }
        out
    };
    let k2 = f(s + h / 5.0, &add(y, &[(1.0 / 5.0, &k1)]));
    let k3 = f(s + 3.0 * h / 10.0, &add(y, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]));
    let k4 = f(
        s + 4.0 * h / 5.0,
        &add(y, &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]),
    );
    let k5 = f(
        s + 8.0 * h / 9.0,
        &add(
            y,
            &[
                (19372.0 / 6561.0, &k1),
                (-25360.0 / 2187.0, &k2),
                (64448.0 / 6561.0, &k3),
                (-212.0 / 729.0, &k4),
            ],
        ),
    );
    let k6 = f(
        s + h,
        &add(
            y,
            &[
                (9017.0 / 3168.0, &k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
    );
    let y5 = add(
        y,
        &[
            (35.0 / 384.0, &k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = f(s + h, &y5);
    let y4 = add(
        y,
        &[
            (5179.0 / 57600.0, &k1),
            (7571.0 / 16695.0, &k3),
            (393.0 / 640.0, &k4),
            (-92097.0 / 339200.0, &k5),
            (187.0 / 2100.0, &k6),
            (1.0 / 40.0, &k7),
        ],
    );
    let mut err: f64 = 0.0;
    for i in 0..4 {
        let sc = ATOL + RTOL * y5[i].abs().max(y[i].abs());
        err = err.max((y5[i] - y4[i]).abs() / sc);
    }
    (y5, err)
}

/// Integrate the transformed equation from `s_from` to `s_to` with the two
/// initial conditions `(1, 0)` and `(0, 1)` posed at `s_from`.  Works for
/// either sign of the discriminant (the non-oscillatory case is the sanity
/// control).
pub fn integrate_homogeneous(
    params: &OperatorParams,
    lambda: f64,
    s_from: f64,
    s_to: f64,
) -> Result<HomogeneousPair, OscillateError> {
    if params.alpha == 2.0 {
        return Err(OscillateError::AlphaTwo);
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(OscillateError::BadLambda(lambda));
    }
    if !(s_from.is_finite() && s_to.is_finite()) || s_from == s_to {
        return Err(OscillateError::BadWindow);
    }
    let q = potential(params, lambda);
    let dir = (s_to - s_from).signum();
    let mut s = s_from;
    let mut y = [1.0, 0.0, 0.0, 1.0];
    let mut h = dir * MAX_STEP;
    let mut rows = vec![(s, y)];
    loop {
        if (s_to - s) * dir <= 0.0 {
            break;
        }
        if (s + h - s_to) * dir > 0.0 {
            h = s_to - s;
        }
        let (y_new, err) = dp45_step(&q, s, &y, h);
        if err <= 1.0 {
            s += h;
            y = y_new;
            rows.push((s, y));
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h.abs() > MAX_STEP {
            h = dir * MAX_STEP;
        }
        if h.abs() < 1e-12 {
            return Err(OscillateError::StepSizeFailure { s });
        }
    }
    if dir < 0.0 {
        rows.reverse();
    }
    let n = rows.len();
    let mut pair = HomogeneousPair {
        s: Vec::with_capacity(n),
        z1: Vec::with_capacity(n),
        dz1: Vec::with_capacity(n),
        z2: Vec::with_capacity(n),
        dz2: Vec::with_capacity(n),
        zeros: Vec::new(),
        wronskian_defect: 0.0,
    };
    for (s, y) in rows {
        pair.s.push(s);
        pair.z1.push(y[0]);
        pair.dz1.push(y[1]);
        pair.z2.push(y[2]);
        pair.dz2.push(y[3]);
        pair.wronskian_defect =
            pair.wronskian_defect.max((y[0] * y[3] - y[1] * y[2] - 1.0).abs());
    }
    pair.zeros = pair.locate_zeros();
    Ok(pair)
}

fn hermite(sa: f64, va: f64, da: f64, sb: f64, vb: f64, db: f64, s: f64) -> f64 {
    let h = sb - sa;
    let t = (s - sa) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * va
        + (t3 - 2.0 * t2 + t) * h * da
        + (-2.0 * t3 + 3.0 * t2) * vb
        + (t3 - t2) * h * db
}

impl HomogeneousPair {
    fn bracket(&self, s: f64) -> usize {
        match self.s.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.clamp(1, self.s.len() - 1) - 1,
        }
    }

    /// `(z1, z2)` between accepted steps by cubic Hermite interpolation.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let i = self.bracket(s);
        let (sa, sb) = (self.s[i], self.s[i + 1]);
        (
            hermite(sa, self.z1[i], self.dz1[i], sb, self.z1[i + 1], self.dz1[i + 1], s),
            hermite(sa, self.z2[i], self.dz2[i], sb, self.z2[i + 1], self.dz2[i + 1], s),
        )
    }

    /// `G(s,t) = z1(t) z2(s) - z1(s) z2(t)`; antisymmetric by construction.
    pub fn kernel(&self, s: f64, t: f64) -> f64 {
        let (a1, a2) = self.eval(t);
        let (b1, b2) = self.eval(s);
        a1 * b2 - b1 * a2
    }

    fn locate_zeros(&self) -> Vec<f64> {
        let mut zeros = Vec::new();
        for i in 0..self.s.len().saturating_sub(1) {
            if self.z1[i] * self.z1[i + 1] < 0.0 {
                let (mut a, mut b) = (self.s[i], self.s[i + 1]);
                let fa = self.z1[i];
                while b - a > 1e-8 {
                    let mid = 0.5 * (a + b);
                    let (v, _) = self.eval(mid);
                    if v * fa > 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                zeros.push(0.5 * (a + b));
            }
        }
        zeros
    }
}

/// The constructed nonnegative source together with the negative witness.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub witness_s: f64,
    /// `w(witness_s) = int G(witness_s, t) g(t) dt`, `<= -1e-6` on success
    pub witness_value: f64,
    /// support of the bump in `s`
    pub g_support: (f64, f64),
    /// `(t, g(t))` samples; `g >= 0` with unit mass
    pub g: Vec<(f64, f64)>,
    /// `(r, phi(r))` with `phi(r) = g(log r) r^{alpha - 3/2}`
    pub phi: Vec<(f64, f64)>,
}

/// Width of the bump support in `s`.
const BUMP_WIDTH: f64 = 1.0;

/// Find a witness of non-positivity: a location `s*` and a nonnegative
/// unit-mass bump `g` with `int G(s*, t) g(t) dt < 0`.
pub fn build_counterexample(
    params: &OperatorParams,
    lambda: f64,
) -> Result<Counterexample, OscillateError> {
    let tr = transform(params, lambda)?;
    // the oscillatory side: potential below k/2 past m
    let dir = if tr.rate > 0.0 { -1.0 } else { 1.0 };
    let far = tr.m + 40.0 * dir;
    let pair = integrate_homogeneous(params, lambda, tr.m, far)?;

    let (lo, hi) = if dir < 0.0 { (far, tr.m) } else { (tr.m, far) };
    // scan candidate witness points from the far side inward so both the
    // witness and the bump window stay in the deeply oscillatory zone
    let mut s_star = lo + 0.25 * (hi - lo);
    let mut found: Option<(f64, f64, f64)> = None;
    'outer: for _ in 0..60 {
        let t_lo = lo + 1.0;
        let t_hi = s_star - 1.0;
        if t_hi - t_lo > 2.0 * BUMP_WIDTH {
            // walk t and track maximal stretches with G(s*, t) < 0
            let steps = ((t_hi - t_lo) / 0.02) as usize;
            let mut run_start: Option<f64> = None;
            for j in 0..=steps + 1 {
                // one virtual positive sample past the end closes a tail run
                let t = t_lo + (t_hi - t_lo) * j.min(steps) as f64 / steps as f64;
                let neg = j <= steps && pair.kernel(s_star, t) < -1e-3;
                match (neg, run_start) {
                    (true, None) => run_start = Some(t),
                    (false, Some(a)) => {
                        if t - a > 1.5 * BUMP_WIDTH {
                            let mid = 0.5 * (a + t);
                            found = Some((s_star, mid - 0.5 * BUMP_WIDTH, mid + 0.5 * BUMP_WIDTH));
                            break 'outer;
                        }
                        run_start = None;
                    }
                    _ => {}
                }
            }
        }
        s_star += 0.37; // incommensurate with the zero spacing
        if s_star > hi - 0.5 {
            break;
        }
    }
    let (s_star, a, b) = found.ok_or(OscillateError::NoNegativeWindow)?;

    // unit-mass C^2 bump: int (t-a)^3 (b-t)^3 dt = (b-a)^7 / 140
    let norm = 140.0 / (b - a).powi(7);
    let bump = |t: f64| -> f64 {
        if t <= a || t >= b {
            0.0
        } else {
            norm * ((t - a) * (b - t)).powi(3)
        }
    };
    let m_nodes = 801;
    let ht = (b - a) / (m_nodes - 1) as f64;
    let mut g = Vec::with_capacity(m_nodes);
    let mut integrand = Vec::with_capacity(m_nodes);
    for j in 0..m_nodes {
        let t = a + ht * j as f64;
        let gv = bump(t);
        g.push((t, gv));
        integrand.push(pair.kernel(s_star, t) * gv);
    }
    let witness_value = crate::grid::simpson(ht, &integrand);
    let phi = g
        .iter()
        .map(|&(t, gv)| (t.exp(), gv * ((params.alpha - 1.5) * t).exp()))
        .collect();
    Ok(Counterexample {
        witness_s: s_star,
        witness_value,
        g_support: (a, b),
        g,
        phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n: u32, alpha: f64, b: f64, c: f64) -> OperatorParams {
        OperatorParams::new(n, alpha, b, c).unwrap()
    }

    #[test]
    fn transform_fixture_and_rejections() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let tr = transform(&pr, 1.0).unwrap();
        assert_relative_eq!(tr.k, -0.75, max_relative = 1e-15);
        assert_relative_eq!(tr.rate, 2.0, max_relative = 1e-15);
        // m solves k + lambda e^{rate m} = k/2
        assert_relative_eq!(tr.m, 0.5 * (3.0f64 / 8.0).ln(), max_relative = 1e-14);
        assert!((tr.k + (tr.rate * tr.m).exp() - tr.k / 2.0).abs() < 1e-14);
        // k is shared with the adjoint parameters
        let ta = transform(&pr.adjoint(), 1.0).unwrap();
        assert_eq!(tr.k, ta.k);

        assert_eq!(
            transform(&params(3, 0.0, 0.0, 0.0), 1.0).unwrap_err(),
            OscillateError::NonNegativeDiscriminant(0.25)
        );
        assert_eq!(transform(&params(3, 2.0, -1.0, 0.0), 1.0).unwrap_err(), OscillateError::AlphaTwo);
        assert_eq!(transform(&pr, -1.0).unwrap_err(), OscillateError::BadLambda(-1.0));
    }

    #[test]
    fn lambda_rescaling_shifts_threshold() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let t1 = transform(&pr, 1.0).unwrap();
        let t4 = transform(&pr, 4.0).unwrap();
        assert_relative_eq!(t4.m - t1.m, -2.0 * 2.0f64.ln() / t1.rate, max_relative = 1e-12);
    }

    #[test]
    fn oscillation_zero_count_and_spacing() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let tr = transform(&pr, 1.0).unwrap();
        let pair = integrate_homogeneous(&pr, 1.0, tr.m, -40.0).unwrap();
        assert!(pair.wronskian_defect <= 1e-8, "defect {:.3e}", pair.wronskian_defect);
        assert!(pair.zeros.len() >= 10, "{} zeros", pair.zeros.len());
        // constant-coefficient limit: spacing pi / sqrt(-k) deep on the left
        let target = std::f64::consts::PI / 0.75f64.sqrt();
        for w in pair.zeros.windows(2) {
            if w[1] < -20.0 {
                let gap = w[1] - w[0];
                assert!(
                    (gap - target).abs() <= 0.02 * target,
                    "spacing {gap:.4} vs {target:.4}"
                );
            }
        }
    }

    #[test]
    fn nonnegative_discriminant_does_not_oscillate() {
        // k = 1/4 and k = 0: at most one sign change over the same window
        for b in [0.0, -0.25] {
            let pr = params(3, 0.0, b, 0.0);
            let pair = integrate_homogeneous(&pr, 1.0, 0.0, -40.0).unwrap();
            assert!(pair.zeros.len() <= 1, "b = {b}: {} zeros", pair.zeros.len());
        }
    }

    #[test]
    fn kernel_is_antisymmetric() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let tr = transform(&pr, 1.0).unwrap();
        let pair = integrate_homogeneous(&pr, 1.0, tr.m, -30.0).unwrap();
        for (s, t) in [(-3.0, -7.5), (-12.25, -4.0), (-20.0, -20.0)] {
            assert_eq!(pair.kernel(s, t), -pair.kernel(t, s));
        }
        assert_eq!(pair.kernel(-9.0, -9.0), 0.0);
    }

    #[test]
    fn interpolation_matches_node_values() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let pair = integrate_homogeneous(&pr, 1.0, -0.5, -10.0).unwrap();
        let i = pair.s.len() / 2;
        let (z1, z2) = pair.eval(pair.s[i]);
        assert_relative_eq!(z1, pair.z1[i], max_relative = 1e-12);
        assert_relative_eq!(z2, pair.z2[i], max_relative = 1e-12);
    }

    #[test]
    fn counterexample_witness_is_negative() {
        let pr = params(3, 0.0, -1.0, 0.0);
        let ce = build_counterexample(&pr, 1.0).unwrap();
        assert!(ce.witness_value <= -1e-6, "witness {:.3e}", ce.witness_value);
        // the source is nonnegative, not identically zero, of unit mass
        assert!(ce.g.iter().all(|&(_, v)| v >= 0.0));
        assert!(ce.phi.iter().all(|&(_, v)| v >= 0.0));
        let peak = ce.g.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
        assert!(peak > 0.0);
        let ht = ce.g[1].0 - ce.g[0].0;
        let vals: Vec<f64> = ce.g.iter().map(|&(_, v)| v).collect();
        assert_relative_eq!(crate::grid::simpson(ht, &vals), 1.0, max_relative = 1e-8);
        // support sits strictly left of the witness location
        assert!(ce.g_support.1 < ce.witness_s);
        // phi is g in log coordinates times the stated power
        let (r, phi) = ce.phi[400];
        let (t, gv) = ce.g[400];
        assert_relative_eq!(r, t.exp(), max_relative = 1e-12);
        assert_relative_eq!(phi, gv * r.powf(pr.alpha - 1.5), max_relative = 1e-10);
    }

    #[test]
    fn counterexample_mirrors_above_two() {
        // alpha > 2: the oscillatory side flips to s -> +infinity
        let pr = params(3, 4.0, -1.0, 0.0);
        let ce = build_counterexample(&pr, 1.0).unwrap();
        assert!(ce.witness_value <= -1e-6, "witness {:.3e}", ce.witness_value);
        assert!(ce.g_support.1 < ce.witness_s);
    }
}
