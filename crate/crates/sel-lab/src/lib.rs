//! Numerical laboratory for the degenerate elliptic operator family
//!
//! ```text
//! L u = |x|^alpha lap(u) + c |x|^{alpha-1} (x/|x|) . grad(u) - b |x|^{alpha-2} u
//! ```
//!
//! on `L^p` spaces over the whole space, the unit ball, or an exterior
//! domain.  The crate classifies for which `p` the minimal, intermediate,
//! and maximal realizations generate analytic semigroups, builds the exact
//! radial kernel solutions from modified Bessel functions, solves resolvent
//! problems by two independent methods, exhibits oscillation-based
//! counterexamples in the negative-discriminant regime, time-steps the
//! parabolic problem, and verifies the weighted form inequalities behind
//! the generation theorems.  A `sel-lab` binary exposes each piece with
//! reproducible JSON/CSV output.

pub mod bessel;
pub mod evolve;
pub mod forms;
pub mod grid;
pub mod radial;
pub mod oscillate;
pub mod resolvent;
pub mod params;
