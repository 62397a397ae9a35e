//! Limiting spectra of squared generalized singular values and the long-term
//! power normalization constant.
//!
//! The continuous laws exist for 2m > n (with m != n); for 2m < n the
//! spectrum degenerates to constants and only the normalization constant
//! remains meaningful.

use std::io::Write;

use crate::error::{Error, Result};
use crate::gsvd::{GsvdFactors, Regime};
use crate::quad::{integrate_on_support, QuadResult};

/// Absolute quadrature tolerance for CDF/normalization integrals.
const CDF_TOL: f64 = 1e-10;

/// Base density family: a Marchenko-Pastur-type law with two shape
/// parameters and square-root vanishing edges.
///
/// Requires `y_prime` in (0,1); `y` may exceed 1 (the scaled overlap law
/// uses y = eta/(2*eta-1) > 1), but must be positive.
pub fn density_f(x: f64, y: f64, y_prime: f64) -> Result<f64> {
    let (lo, hi) = density_f_support(y, y_prime)?;
    if x <= lo || x >= hi {
        return Ok(0.0);
    }
    let num = (1.0 - y_prime) * ((x - lo) * (hi - x)).sqrt();
    Ok(num / (2.0 * std::f64::consts::PI * x * (x * y_prime + y)))
}

/// Support endpoints ((1 -/+ g)/(1-y'))^2 of the base density.
pub fn density_f_support(y: f64, y_prime: f64) -> Result<(f64, f64)> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("density parameter y must be positive, got {y}")));
    }
    if !(y_prime > 0.0 && y_prime < 1.0) {
        return Err(Error::Domain(format!(
            "density parameter y' must lie in (0,1), got {y_prime}"
        )));
    }
    let g = (1.0 - (1.0 - y) * (1.0 - y_prime)).sqrt();
    let lo = ((1.0 - g) / (1.0 - y_prime)).powi(2);
    let hi = ((1.0 + g) / (1.0 - y_prime)).powi(2);
    Ok((lo, hi))
}

/// The limiting distribution of w^2 for a given antenna shape, together with
/// the theoretical power normalization t^2.
#[derive(Debug, Clone)]
pub struct LimitingLaw {
    pub eta: f64,
    pub regime: Regime,
    /// First density parameter (1/eta, or eta/(2*eta-1) for the overlap law).
    pub y: f64,
    /// Second density parameter (1/eta, or eta).
    pub y_prime: f64,
    /// Argument scaling: 1 for m >= n, 2*eta-1 for m < n < 2m.
    pub scale: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    /// Theoretical long-term normalization.
    pub t_sq: f64,
}

impl LimitingLaw {
    /// Whether the law has a continuous density.
    pub fn has_density(&self) -> bool {
        self.regime != Regime::Wide
    }

    /// Density of w^2 at x. Zero outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !self.has_density() {
            return Err(Error::DegenerateLaw);
        }
        match self.regime {
            Regime::TallOrSquare => density_f(x, self.y, self.y_prime),
            Regime::Overlap => {
                // (eta/(2eta-1)^2) f_{eta/(2eta-1), eta}(x/(2eta-1))
                let s = self.scale;
                Ok(self.eta / (s * s) * density_f(x / s, self.y, self.y_prime)?)
            }
            Regime::Wide => unreachable!(),
        }
    }

    /// CDF at x via endpoint-aware quadrature over the support.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !self.has_density() {
            return Err(Error::DegenerateLaw);
        }
        if x <= self.support_lo {
            return Ok(0.0);
        }
        if x >= self.support_hi {
            return Ok(1.0);
        }
        let r = self.cdf_quad(x);
        Ok(r.value.clamp(0.0, 1.0))
    }

    fn cdf_quad(&self, x: f64) -> QuadResult {
        integrate_on_support(
            |t| self.pdf(t).unwrap_or(0.0),
            self.support_lo,
            self.support_hi,
            self.support_lo,
            x,
            CDF_TOL,
        )
    }

    /// Inverse CDF by bisection (used for self-consistency sampling).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !self.has_density() {
            return Err(Error::DegenerateLaw);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("quantile probability {p} outside [0,1]")));
        }
        let (mut lo, mut hi) = (self.support_lo, self.support_hi);
        while hi - lo > 1e-10 * (1.0 + hi.abs()) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Writes (x, pdf, cdf) triples on a uniform grid as CSV.
    pub fn write_csv<W: Write>(&self, grid: usize, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "pdf", "cdf"])
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        for i in 0..grid {
            let x = self.support_lo
                + (self.support_hi - self.support_lo) * i as f64 / (grid - 1).max(1) as f64;
            let rec = [
                format!("{x:.12e}"),
                format!("{:.12e}", self.pdf(x)?),
                format!("{:.12e}", self.cdf(x)?),
            ];
            wtr.write_record(&rec)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Theoretical long-term normalization t^2 (diverges at n = 2m).
pub fn theoretical_t_sq(m: usize, n: usize) -> Result<f64> {
    if n == 2 * m {
        return Err(Error::NormalizationDivergence { n });
    }
    let eta = m as f64 / n as f64;
    if 2 * m > n {
        Ok(1.0 / (2.0 * eta - 1.0))
    } else {
        Ok(1.0 / (1.0 / (2.0 * eta) - 1.0))
    }
}

/// Limiting law for the antenna shape (m, n).
///
/// Errors for n = 2m (divergent normalization) and m = n (the density family
/// degenerates at eta = 1; only Monte Carlo covers that shape).
pub fn limiting_law(m: usize, n: usize) -> Result<LimitingLaw> {
    let t_sq = theoretical_t_sq(m, n)?;
    let eta = m as f64 / n as f64;
    match Regime::of(m, n) {
        Regime::TallOrSquare => {
            if m == n {
                return Err(Error::Domain(
                    "no limiting density at eta = 1 (m = n)".into(),
                ));
            }
            let y = 1.0 / eta;
            let (lo, hi) = density_f_support(y, y)?;
            Ok(LimitingLaw {
                eta,
                regime: Regime::TallOrSquare,
                y,
                y_prime: y,
                scale: 1.0,
                support_lo: lo,
                support_hi: hi,
                t_sq,
            })
        }
        Regime::Overlap => {
            let scale = 2.0 * eta - 1.0;
            let y = eta / scale;
            let y_prime = eta;
            let (lo, hi) = density_f_support(y, y_prime)?;
            Ok(LimitingLaw {
                eta,
                regime: Regime::Overlap,
                y,
                y_prime,
                scale,
                support_lo: scale * lo,
                support_hi: scale * hi,
                t_sq,
            })
        }
        Regime::Wide => Ok(LimitingLaw {
            eta,
            regime: Regime::Wide,
            y: 0.0,
            y_prime: 0.0,
            scale: 1.0,
            support_lo: 0.0,
            support_hi: 0.0,
            t_sq,
        }),
    }
}

/// Sorted sample of observed squared generalized singular values.
#[derive(Debug, Clone)]
pub struct EmpiricalSpectrum {
    values: Vec<f64>,
}

impl EmpiricalSpectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("empirical spectrum"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("spectrum values must be finite and nonnegative".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    /// Pools the w^2 values of a batch of factorizations.
    pub fn from_factors(batch: &[GsvdFactors]) -> Result<Self> {
        Self::new(batch.iter().flat_map(|f| f.w_sq.iter().cloned()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// One-sample Kolmogorov-Smirnov distance between the empirical step CDF and
/// the limiting law, evaluated at the sample points (exact for a step e.d.f.).
pub fn ks_distance(emp: &EmpiricalSpectrum, law: &LimitingLaw) -> Result<f64> {
    if !law.has_density() {
        return Err(Error::DegenerateLaw);
    }
    let n = emp.count() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in emp.values().iter().enumerate() {
        let f = law.cdf(x)?;
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    Ok(d)
}

/// Mean per-realization transmit power over a batch:
/// trace(Q Q^H) for 2m > n, trace(Q B Q^H) for 2m < n.
pub fn empirical_t_sq(batch: &[GsvdFactors]) -> Result<f64> {
    let first = batch.first().ok_or(Error::EmptyInput("factor batch"))?;
    let (m, n) = (first.u.nrows(), first.q.ncols());
    if n == 2 * m {
        return Err(Error::NormalizationDivergence { n });
    }
    if batch.iter().any(|f| f.u.nrows() != m || f.q.ncols() != n) {
        return Err(Error::Config("mixed shapes in factor batch".into()));
    }
    // Sequential sum in batch order keeps the reduction deterministic.
    let sum: f64 = if 2 * m > n {
        batch.iter().map(|f| f.trace_qqh()).sum()
    } else {
        batch.iter().map(|f| f.trace_qbqh()).sum()
    };
    Ok(sum / batch.len() as f64)
}
