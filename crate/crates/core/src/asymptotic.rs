//! Deterministic large-system rate approximations.
//!
//! For m > n and m < n < 2m the normalized per-user rates converge to
//! integrals of log terms against the limiting spectrum; for 2m < n they
//! collapse to closed-form logs. All rates are normalized by m.

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::gsvd::Regime;
use crate::quad::integrate_on_support;
use crate::spectral::{limiting_law, LimitingLaw};

const QUAD_TOL: f64 = 1e-10;
const TOTAL_TOL: f64 = 1e-8;

/// Large-system normalized rates for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticRateResult {
    pub r1_norm: f64,
    pub r2_norm: f64,
    pub regime: Regime,
    pub eta: f64,
    pub quadrature_error_estimate: f64,
}

/// Dispatches on the antenna regime. Errors for n = 2m and m = n, where no
/// deterministic limit is available.
pub fn asymptotic_rates(cfg: &SystemConfig) -> Result<AsymptoticRateResult> {
    cfg.validate()?;
    match Regime::of(cfg.m, cfg.n) {
        Regime::TallOrSquare => corollary1_rates(cfg),
        Regime::Overlap => corollary2_rates(cfg),
        Regime::Wide => wide_rates(cfg),
    }
}

/// Mean shared-subchannel rates against a limiting law, split at the SIC
/// threshold theta = d1^tau / d2^tau.
struct SharedMeans {
    r1: f64,
    r2: f64,
    err: f64,
}

fn shared_means(law: &LimitingLaw, cfg: &SystemConfig) -> Result<SharedMeans> {
    let p = cfg.power_mw();
    let n0 = cfg.noise_mw();
    let (d1, d2) = (cfg.d1_tau() * n0, cfg.d2_tau() * n0);
    let l2 = cfg.l2_sq;
    // s = 1/t^2 = 2 eta - 1 in both regimes with a continuous law.
    let s = 1.0 / law.t_sq;
    let (lo, hi) = (law.support_lo, law.support_hi);
    let theta = (cfg.d1_tau() / cfg.d2_tau()).clamp(lo, hi);

    let mut err = 0.0;
    // C(a, b, c) = int_a^b log2(x + c) f(x) dx; D(a, b) = int_a^b f(x) dx.
    let mut cint = |a: f64, b: f64, c: f64| -> f64 {
        let r = integrate_on_support(
            |x| (x + c).log2() * law.pdf(x).unwrap_or(0.0),
            lo,
            hi,
            a,
            b,
            QUAD_TOL,
        );
        err += r.error_estimate;
        r.value
    };
    let c1 = d1 / (d1 + p * l2 * s);
    let c2 = d1 / (d1 + p * s);
    let r1_upper = cint(theta, hi, c1) - cint(theta, hi, 1.0);
    let r1_lower = cint(lo, theta, c2) - cint(lo, theta, c1);
    let r2_upper =
        cint(theta, hi, 1.0 + p * s / d2) - cint(theta, hi, 1.0 + p * l2 * s / d2);
    let r2_lower = cint(lo, theta, (p * l2 * s + d2) / d2) - cint(lo, theta, 1.0);

    let mut dint = |a: f64, b: f64| -> f64 {
        let r = integrate_on_support(|x| law.pdf(x).unwrap_or(0.0), lo, hi, a, b, QUAD_TOL);
        err += r.error_estimate;
        r.value
    };
    let d_upper = dint(theta, hi);
    let d_lower = dint(lo, theta);

    let r1 = r1_upper
        + ((d1 + p * l2 * s) / d1).log2() * d_upper
        + r1_lower
        + ((d1 + p * s) / (d1 + p * l2 * s)).log2() * d_lower;
    let r2 = r2_upper + r2_lower;

    if err > TOTAL_TOL {
        return Err(Error::QuadratureNonConvergence { estimate: err, tolerance: TOTAL_TOL });
    }
    Ok(SharedMeans { r1, r2, err })
}

/// Large-system rates for m > n: all n subchannels are shared.
pub fn corollary1_rates(cfg: &SystemConfig) -> Result<AsymptoticRateResult> {
    if cfg.m <= cfg.n {
        return Err(Error::Config(format!(
            "tall-regime asymptotics need m > n, got ({}, {})",
            cfg.m, cfg.n
        )));
    }
    let law = limiting_law(cfg.m, cfg.n)?;
    let means = shared_means(&law, cfg)?;
    let prefactor = 1.0 / cfg.eta();
    Ok(AsymptoticRateResult {
        r1_norm: prefactor * means.r1,
        r2_norm: prefactor * means.r2,
        regime: Regime::TallOrSquare,
        eta: cfg.eta(),
        quadrature_error_estimate: means.err,
    })
}

/// Large-system rates for m < n < 2m: 2m - n shared subchannels plus n - m
/// private subchannels per user.
pub fn corollary2_rates(cfg: &SystemConfig) -> Result<AsymptoticRateResult> {
    if !(cfg.m < cfg.n && cfg.n < 2 * cfg.m) {
        return Err(Error::Config(format!(
            "overlap-regime asymptotics need m < n < 2m, got ({}, {})",
            cfg.m, cfg.n
        )));
    }
    let eta = cfg.eta();
    let law = limiting_law(cfg.m, cfg.n)?;
    let means = shared_means(&law, cfg)?;
    let shared_frac = 2.0 - 1.0 / eta;
    let private_frac = 1.0 / eta - 1.0;
    let p = cfg.power_mw();
    let n0 = cfg.noise_mw();
    let s = 1.0 / law.t_sq;
    let oma1 = (1.0 + p * s / (cfg.d1_tau() * n0)).log2();
    let oma2 = (1.0 + p * s / (cfg.d2_tau() * n0)).log2();
    Ok(AsymptoticRateResult {
        r1_norm: shared_frac * means.r1 + private_frac * oma1,
        r2_norm: shared_frac * means.r2 + private_frac * oma2,
        regime: Regime::Overlap,
        eta,
        quadrature_error_estimate: means.err,
    })
}

/// Closed-form rates for 2m < n: each user gets m private subchannels.
pub fn wide_rates(cfg: &SystemConfig) -> Result<AsymptoticRateResult> {
    if 2 * cfg.m >= cfg.n {
        return Err(Error::Config(format!(
            "wide-regime asymptotics need n > 2m, got ({}, {})",
            cfg.m, cfg.n
        )));
    }
    let eta = cfg.eta();
    let p = cfg.power_mw();
    let n0 = cfg.noise_mw();
    let gain = p * (1.0 / (2.0 * eta) - 1.0);
    Ok(AsymptoticRateResult {
        r1_norm: (1.0 + gain / (cfg.d1_tau() * n0)).log2(),
        r2_norm: (1.0 + gain / (cfg.d2_tau() * n0)).log2(),
        regime: Regime::Wide,
        eta,
        quadrature_error_estimate: 0.0,
    })
}
