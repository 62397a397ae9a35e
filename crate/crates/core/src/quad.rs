//! Adaptive quadrature tuned for densities with square-root vanishing edges.
//!
//! Integrals over a support [L, U] are computed after the substitution
//! x = L + (U - L) sin^2(theta), which removes the sqrt singularities at both
//! endpoints and leaves a smooth integrand on [0, pi/2].

use std::f64::consts::FRAC_PI_2;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// Adaptive Simpson integration of `f` on [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    if a >= b {
        return QuadResult { value: 0.0, error_estimate: 0.0 };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut err = 0.0;
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, 52, &mut err);
    QuadResult { value, error_estimate: err }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        *err += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)
}

/// Integrates `f` over [lo, hi] clamped to the support [support_lo, support_hi],
/// using the sin^2 endpoint substitution. Empty intersection yields zero.
pub fn integrate_on_support<F: Fn(f64) -> f64>(
    f: F,
    support_lo: f64,
    support_hi: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> QuadResult {
    let lo = lo.max(support_lo);
    let hi = hi.min(support_hi);
    if !(hi > lo) {
        return QuadResult { value: 0.0, error_estimate: 0.0 };
    }
    let span = support_hi - support_lo;
    let theta = |x: f64| (((x - support_lo) / span).clamp(0.0, 1.0)).sqrt().asin();
    let (t0, t1) = (theta(lo), theta(hi));
    let g = |t: f64| {
        let x = support_lo + span * t.sin().powi(2);
        f(x) * span * (2.0 * t).sin()
    };
    debug_assert!(t1 <= FRAC_PI_2 + 1e-12);
    adaptive_simpson(g, t0, t1, tol)
}
