//! GSVD of a channel-matrix pair via Zha's construction.
//!
//! For m x n matrices H1, H2 the factorization is U H1 Q = Sigma1,
//! V H2 Q = Sigma2 with U, V unitary and Q nonsingular. The shape of the
//! Sigma blocks depends on the antenna regime; the squared generalized
//! singular values w^2 = alpha^2/beta^2 exist only when 2m > n.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::{C64, CMat, RMat};

/// Relative singular-value threshold below which a channel counts as rank
/// deficient (double-precision SVD noise floor with margin).
pub const RANK_TOL: f64 = 1e-12;

/// Antenna-count regime of the factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// m >= n: all n subchannels are shared.
    TallOrSquare,
    /// m < n < 2m: n-m private subchannels per user, 2m-n shared.
    Overlap,
    /// 2m <= n: all subchannels private, n-2m muted.
    Wide,
}

impl Regime {
    /// Regime for the given antenna counts.
    pub fn of(m: usize, n: usize) -> Regime {
        if m >= n {
            Regime::TallOrSquare
        } else if n < 2 * m {
            Regime::Overlap
        } else {
            Regime::Wide
        }
    }
}

/// The complete factorization of one channel pair.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u: CMat,
    pub v: CMat,
    pub q: CMat,
    pub sigma1: RMat,
    pub sigma2: RMat,
    /// Diagonal of S1, descending; length n (m>=n), 2m-n (overlap) or 0 (wide).
    pub alpha: Vec<f64>,
    /// Diagonal of S2, paired with `alpha` so alpha^2 + beta^2 = 1.
    pub beta: Vec<f64>,
    /// Squared generalized singular values alpha^2/beta^2, descending.
    pub w_sq: Vec<f64>,
    pub regime: Regime,
}

impl GsvdFactors {
    /// Number of shared (NOMA) subchannels.
    pub fn shared_count(&self) -> usize {
        self.w_sq.len()
    }

    /// trace(Q Q^H), the per-realization transmit power when 2m > n.
    pub fn trace_qqh(&self) -> f64 {
        self.q.iter().map(|z| z.norm_sqr()).sum()
    }

    /// trace(Q B Q^H) with B = diag[I_m, 0, I_m], the per-realization
    /// transmit power when 2m < n (only the active columns carry symbols).
    pub fn trace_qbqh(&self) -> f64 {
        let n = self.q.ncols();
        let m = self.u.nrows();
        (0..n)
            .filter(|&j| j < m || j >= n - m)
            .map(|j| self.q.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Full SVD a = U diag(s) V^H with singular values sorted descending and
/// both factors completed to square unitary matrices.
fn svd_full(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (m, n) = a.shape();
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Config("SVD failed to converge".into()))?;
    let u_thin = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;

    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());

    let mut u = CMat::zeros(m, k);
    let mut v = CMat::zeros(n, k);
    let mut sigma = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_thin.column(src));
        v.set_column(dst, &v_t.row(src).adjoint());
        sigma.push(s[src]);
    }
    Ok((complete_unitary(u), sigma, complete_unitary(v)))
}

/// Extends orthonormal columns to a square unitary matrix by orthogonalizing
/// standard basis vectors against the existing columns.
fn complete_unitary(partial: CMat) -> CMat {
    let (m, k) = partial.shape();
    if k == m {
        return partial;
    }
    let mut cols: Vec<DVector<C64>> = partial.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..m {
        if cols.len() == m {
            break;
        }
        let mut cand = DVector::<C64>::zeros(m);
        cand[i] = C64::new(1.0, 0.0);
        // Two MGS passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&cand);
                cand -= c * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            cols.push(cand / C64::new(norm, 0.0));
        }
    }
    assert_eq!(cols.len(), m, "failed to complete unitary basis");
    CMat::from_columns(&cols)
}

fn check_rank(sigma: &[f64]) -> Result<()> {
    if sigma.is_empty() {
        return Ok(());
    }
    let largest = sigma[0];
    let smallest = sigma[sigma.len() - 1];
    if !(largest > 0.0) || smallest < RANK_TOL * largest {
        return Err(Error::DegenerateChannel {
            ratio: if largest > 0.0 { smallest / largest } else { 0.0 },
        });
    }
    Ok(())
}

fn to_complex(r: &RMat) -> CMat {
    r.map(|x| C64::new(x, 0.0))
}

/// GSVD of (h1, h2), dispatched by regime. n = 2m is rejected because the
/// long-term power normalization diverges there.
pub fn gsvd(h1: &CMat, h2: &CMat) -> Result<GsvdFactors> {
    let (m, n) = h1.shape();
    if h2.shape() != (m, n) {
        return Err(Error::Config(format!(
            "shape mismatch: h1 is {:?}, h2 is {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::Config("empty channel matrices".into()));
    }
    if n == 2 * m {
        return Err(Error::NormalizationDivergence { n });
    }
    match Regime::of(m, n) {
        Regime::TallOrSquare => gsvd_tall(h1, h2),
        Regime::Overlap => gsvd_overlap(h1, h2),
        Regime::Wide => gsvd_wide(h1, h2),
    }
}

/// Construction for m >= n.
///
/// SVD of H2 gives Q1 = V2 diag(1/z); the singular values w of H1' = H1 Q1
/// are the generalized singular values, and Q2 = V3 diag(beta) rescales the
/// columns so that S1^2 + S2^2 = I.
pub fn gsvd_tall(h1: &CMat, h2: &CMat) -> Result<GsvdFactors> {
    let (m, n) = h1.shape();
    assert!(m >= n);

    let (u2_full, z, v2) = svd_full(h2)?;
    check_rank(&z)?;
    // Row-permuted adjoint so that U2 H2 V2 = [O; diag(z)].
    let mut u2 = CMat::zeros(m, m);
    let u2h = u2_full.adjoint();
    for i in 0..m - n {
        u2.set_row(i, &u2h.row(n + i));
    }
    for i in 0..n {
        u2.set_row(m - n + i, &u2h.row(i));
    }

    let inv_z = CMat::from_fn(n, n, |i, j| {
        if i == j { C64::new(1.0 / z[i], 0.0) } else { C64::default() }
    });
    let q1 = &v2 * inv_z;
    let h1p = h1 * &q1;

    let (u3_full, w, v3) = svd_full(&h1p)?;
    check_rank(&w)?;
    let u = u3_full.adjoint();

    let beta: Vec<f64> = w.iter().map(|wi| 1.0 / (1.0 + wi * wi).sqrt()).collect();
    let alpha: Vec<f64> = w.iter().zip(&beta).map(|(wi, bi)| wi * bi).collect();
    let w_sq: Vec<f64> = w.iter().map(|wi| wi * wi).collect();

    let diag_beta = CMat::from_fn(n, n, |i, j| {
        if i == j { C64::new(beta[i], 0.0) } else { C64::default() }
    });
    let q2 = &v3 * diag_beta;
    let q = &q1 * &q2;

    // V = blkdiag(I_{m-n}, V3^H) U2.
    let mut blk = CMat::identity(m, m);
    blk.view_mut((m - n, m - n), (n, n)).copy_from(&v3.adjoint());
    let v = blk * u2;

    let mut sigma1 = RMat::zeros(m, n);
    let mut sigma2 = RMat::zeros(m, n);
    for i in 0..n {
        sigma1[(i, i)] = alpha[i];
        sigma2[(m - n + i, i)] = beta[i];
    }

    Ok(GsvdFactors { u, v, q, sigma1, sigma2, alpha, beta, w_sq, regime: Regime::TallOrSquare })
}

/// Construction for m < n < 2m.
///
/// After normalizing H2 away (Q1), the first r = n-m columns of H1' are
/// reduced to the identity (Q2); the singular values of the trailing block
/// A23 are the generalized singular values, and Q3 clears the coupling
/// block A13 and applies the beta scaling.
pub fn gsvd_overlap(h1: &CMat, h2: &CMat) -> Result<GsvdFactors> {
    let (m, n) = h1.shape();
    assert!(m < n && n < 2 * m);
    let r = n - m;
    let qn = 2 * m - n;

    let (u2, z, v2_raw) = svd_full(h2)?;
    check_rank(&z)?;
    // Column-permute V2 so that U2^H H2 V2 = [O | diag(z)].
    let mut v2 = CMat::zeros(n, n);
    for j in 0..r {
        v2.set_column(j, &v2_raw.column(m + j));
    }
    for j in 0..m {
        v2.set_column(r + j, &v2_raw.column(j));
    }
    let u2 = u2.adjoint();

    let mut scale1 = CMat::identity(n, n);
    for i in 0..m {
        scale1[(r + i, r + i)] = C64::new(1.0 / z[i], 0.0);
    }
    let q1 = &v2 * scale1;
    let h1p = h1 * &q1;
    let h11 = h1p.view((0, 0), (m, r)).into_owned();
    let h12 = h1p.view((0, r), (m, m)).into_owned();

    let (u11_full, t, v11) = svd_full(&h11)?;
    check_rank(&t)?;
    let u11 = u11_full.adjoint();

    // Q2 = blkdiag(V11, I_m) blkdiag(Sigma_A^{-1}, I_m).
    let mut q2 = CMat::identity(n, n);
    let mut v11_scaled = v11.clone();
    for j in 0..r {
        let col = v11_scaled.column(j) / C64::new(t[j], 0.0);
        v11_scaled.set_column(j, &col);
    }
    q2.view_mut((0, 0), (r, r)).copy_from(&v11_scaled);

    let a = &u11 * &h12;
    let a13 = a.view((0, 0), (r, m)).into_owned();
    let a23 = a.view((r, 0), (qn, m)).into_owned();

    let (u23_full, w, v23) = svd_full(&a23)?;
    check_rank(&w)?;
    let u23 = u23_full.adjoint();

    let beta: Vec<f64> = w.iter().map(|wi| 1.0 / (1.0 + wi * wi).sqrt()).collect();
    let alpha: Vec<f64> = w.iter().zip(&beta).map(|(wi, bi)| wi * bi).collect();
    let w_sq: Vec<f64> = w.iter().map(|wi| wi * wi).collect();

    // Q3 = [[I_r, -A13],[0, I_m]] blkdiag(I_r, V23) diag(I_r, S2, I_r).
    let mut clear = CMat::identity(n, n);
    clear.view_mut((0, r), (r, m)).copy_from(&(-&a13));
    let mut rot = CMat::identity(n, n);
    rot.view_mut((r, r), (m, m)).copy_from(&v23);
    let mut scale3 = CMat::identity(n, n);
    for i in 0..qn {
        scale3[(r + i, r + i)] = C64::new(beta[i], 0.0);
    }
    let q3 = clear * rot * scale3;
    let q = &q1 * &q2 * q3;

    // U = blkdiag(I_r, U23) U11, V = V23^H U2.
    let mut ublk = CMat::identity(m, m);
    ublk.view_mut((r, r), (qn, qn)).copy_from(&u23);
    let u = ublk * u11;
    let v = v23.adjoint() * u2;

    let mut sigma1 = RMat::zeros(m, n);
    let mut sigma2 = RMat::zeros(m, n);
    for i in 0..r {
        sigma1[(i, i)] = 1.0;
        sigma2[(qn + i, m + i)] = 1.0;
    }
    for i in 0..qn {
        sigma1[(r + i, r + i)] = alpha[i];
        sigma2[(i, r + i)] = beta[i];
    }

    Ok(GsvdFactors { u, v, q, sigma1, sigma2, alpha, beta, w_sq, regime: Regime::Overlap })
}

/// Construction for 2m < n: both Sigma matrices are exact selection matrices
/// and the generalized singular values degenerate to constants.
pub fn gsvd_wide(h1: &CMat, h2: &CMat) -> Result<GsvdFactors> {
    let (m, n) = h1.shape();
    assert!(2 * m < n);
    let r = n - m;

    let (u2, z, v2_raw) = svd_full(h2)?;
    check_rank(&z)?;
    let mut v2 = CMat::zeros(n, n);
    for j in 0..r {
        v2.set_column(j, &v2_raw.column(m + j));
    }
    for j in 0..m {
        v2.set_column(r + j, &v2_raw.column(j));
    }
    let u2 = u2.adjoint();

    let mut scale1 = CMat::identity(n, n);
    for i in 0..m {
        scale1[(r + i, r + i)] = C64::new(1.0 / z[i], 0.0);
    }
    let q1 = &v2 * scale1;
    let h1p = h1 * &q1;
    let h11 = h1p.view((0, 0), (m, r)).into_owned();
    let h12 = h1p.view((0, r), (m, m)).into_owned();

    let (u11_full, t, v11) = svd_full(&h11)?;
    check_rank(&t)?;
    let u11 = u11_full.adjoint();

    let mut q2 = CMat::identity(n, n);
    let mut v11_scaled = v11.clone();
    for j in 0..m {
        let col = v11_scaled.column(j) / C64::new(t[j], 0.0);
        v11_scaled.set_column(j, &col);
    }
    q2.view_mut((0, 0), (r, r)).copy_from(&v11_scaled);

    let x = &u11 * &h12;
    let mut q3 = CMat::identity(n, n);
    q3.view_mut((0, r), (m, m)).copy_from(&(-&x));
    let q = &q1 * &q2 * q3;

    let mut sigma1 = RMat::zeros(m, n);
    let mut sigma2 = RMat::zeros(m, n);
    for i in 0..m {
        sigma1[(i, i)] = 1.0;
        sigma2[(i, r + i)] = 1.0;
    }

    Ok(GsvdFactors {
        u: u11,
        v: u2,
        q,
        sigma1,
        sigma2,
        alpha: Vec::new(),
        beta: Vec::new(),
        w_sq: Vec::new(),
        regime: Regime::Wide,
    })
}

/// Residuals of every factorization invariant.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// ||U U^H - I||_F.
    pub u_unitary: f64,
    /// ||V V^H - I||_F.
    pub v_unitary: f64,
    /// ||U H1 Q - Sigma1||_F / ||Sigma1||_F.
    pub recon1: f64,
    /// ||V H2 Q - Sigma2||_F / ||Sigma2||_F.
    pub recon2: f64,
    /// max_i |alpha_i^2 + beta_i^2 - 1|.
    pub alpha_beta: f64,
    /// ||Sigma1^T Sigma1 + Sigma2^T Sigma2 - I_n||_F when 2m >= n, else 0.
    pub sigma_sum_sq: f64,
    /// Deviation of the stored Sigma blocks from the regime pattern.
    pub structure: f64,
    /// Positive if alpha is not descending.
    pub ordering: f64,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        [
            self.u_unitary,
            self.v_unitary,
            self.recon1,
            self.recon2,
            self.alpha_beta,
            self.sigma_sum_sq,
            self.structure,
            self.ordering,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Computes every invariant residual; never fails, only reports.
pub fn verify_gsvd(h1: &CMat, h2: &CMat, f: &GsvdFactors) -> ResidualReport {
    let (m, n) = h1.shape();
    let eye_m = CMat::identity(m, m);
    let u_unitary = (&f.u * f.u.adjoint() - &eye_m).norm();
    let v_unitary = (&f.v * f.v.adjoint() - &eye_m).norm();

    let s1c = to_complex(&f.sigma1);
    let s2c = to_complex(&f.sigma2);
    let recon1 = (&f.u * h1 * &f.q - &s1c).norm() / s1c.norm();
    let recon2 = (&f.v * h2 * &f.q - &s2c).norm() / s2c.norm();

    let alpha_beta = f
        .alpha
        .iter()
        .zip(&f.beta)
        .map(|(a, b)| (a * a + b * b - 1.0).abs())
        .fold(0.0, f64::max);

    let sigma_sum_sq = if 2 * m >= n {
        let sum = f.sigma1.transpose() * &f.sigma1 + f.sigma2.transpose() * &f.sigma2;
        (sum - RMat::identity(n, n)).norm()
    } else {
        0.0
    };

    let structure = structure_residual(f, m, n);

    let ordering = f
        .alpha
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max)
        .max(f.alpha.iter().map(|a| (a - 1.0).max(-a)).fold(0.0, f64::max));

    ResidualReport {
        u_unitary,
        v_unitary,
        recon1,
        recon2,
        alpha_beta,
        sigma_sum_sq,
        structure,
        ordering,
    }
}

/// Max deviation of sigma1/sigma2 from the exact regime pattern rebuilt from
/// the stored alpha/beta vectors.
fn structure_residual(f: &GsvdFactors, m: usize, n: usize) -> f64 {
    let mut expect1 = RMat::zeros(m, n);
    let mut expect2 = RMat::zeros(m, n);
    match f.regime {
        Regime::TallOrSquare => {
            for i in 0..n {
                expect1[(i, i)] = f.alpha[i];
                expect2[(m - n + i, i)] = f.beta[i];
            }
        }
        Regime::Overlap => {
            let r = n - m;
            let q = 2 * m - n;
            for i in 0..r {
                expect1[(i, i)] = 1.0;
                expect2[(q + i, m + i)] = 1.0;
            }
            for i in 0..q {
                expect1[(r + i, r + i)] = f.alpha[i];
                expect2[(i, r + i)] = f.beta[i];
            }
        }
        Regime::Wide => {
            for i in 0..m {
                expect1[(i, i)] = 1.0;
                expect2[(i, n - m + i)] = 1.0;
            }
        }
    }
    let d1 = (&f.sigma1 - expect1).abs().max();
    let d2 = (&f.sigma2 - expect2).abs().max();
    d1.max(d2)
}

/// trace((H^H H)^{-1}) for the stacked 2m x n channel, via the singular
/// values of H (independent of the GSVD path).
pub fn trace_inv_gram(h1: &CMat, h2: &CMat) -> Result<f64> {
    let (m, n) = h1.shape();
    let mut h = CMat::zeros(2 * m, n);
    h.view_mut((0, 0), (m, n)).copy_from(h1);
    h.view_mut((m, 0), (m, n)).copy_from(h2);
    let svd = nalgebra::linalg::SVD::try_new(h, false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Config("SVD failed to converge".into()))?;
    Ok(svd.singular_values.iter().map(|s| 1.0 / (s * s)).sum())
}
