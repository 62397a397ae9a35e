//! Per-realization achievable rates for GSVD-based NOMA, plus the OMA-TDMA
//! baseline and the hybrid multi-user grouping scheme.
//!
//! All rates are in bits per channel use (log base 2). Normalized figures
//! divide by the receive antenna count m.

use nalgebra::SVD;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::gsvd::{gsvd, GsvdFactors, Regime};
use crate::spectral::theoretical_t_sq;
use crate::CMat;

/// Which user performs successive interference cancellation on a shared
/// subchannel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SicSide {
    User1,
    User2,
}

/// Role of one spatial subchannel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubchannelKind {
    /// Superposition-coded stream decoded by both users.
    NomaShared {
        alpha_sq: f64,
        beta_sq: f64,
        sic_at: SicSide,
    },
    /// Private stream seen only by user 1.
    OmaUser1,
    /// Private stream seen only by user 2.
    OmaUser2,
    /// Transmit direction in neither user's row space; carries nothing.
    Muted,
}

/// One subchannel's assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubchannelPlan {
    pub index: usize,
    pub kind: SubchannelKind,
}

/// Rates of one realization, per subchannel and aggregated.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub r1_per_sub: Vec<f64>,
    pub r2_per_sub: Vec<f64>,
    pub r1_total: f64,
    pub r2_total: f64,
    /// r1_total / m.
    pub r1_norm: f64,
    /// r2_total / m.
    pub r2_norm: f64,
    pub t_sq_used: f64,
}

impl RateReport {
    fn from_per_sub(r1: Vec<f64>, r2: Vec<f64>, m: usize, t_sq: f64) -> Self {
        let r1_total: f64 = r1.iter().sum();
        let r2_total: f64 = r2.iter().sum();
        RateReport {
            r1_norm: r1_total / m as f64,
            r2_norm: r2_total / m as f64,
            r1_per_sub: r1,
            r2_per_sub: r2,
            r1_total,
            r2_total,
            t_sq_used: t_sq,
        }
    }
}

/// Assigns a role to each of the n subchannels of a factorization.
///
/// On shared subchannels the stronger side cancels first: user 1 performs SIC
/// when w^2 exceeds the path-gain threshold d1^tau / d2^tau, user 2 otherwise
/// (ties go to user 2).
pub fn plan_subchannels(f: &GsvdFactors, cfg: &SystemConfig) -> Result<Vec<SubchannelPlan>> {
    let (m, n) = (f.u.nrows(), f.q.ncols());
    if m != cfg.m || n != cfg.n {
        return Err(Error::Config(format!(
            "factorization shape ({m}, {n}) does not match config ({}, {})",
            cfg.m, cfg.n
        )));
    }
    let threshold = cfg.d1_tau() / cfg.d2_tau();
    let shared = |i: usize| {
        let w_sq = f.w_sq[i];
        SubchannelKind::NomaShared {
            alpha_sq: f.alpha[i] * f.alpha[i],
            beta_sq: f.beta[i] * f.beta[i],
            sic_at: if w_sq > threshold { SicSide::User1 } else { SicSide::User2 },
        }
    };
    let kinds: Vec<SubchannelKind> = match f.regime {
        Regime::TallOrSquare => (0..n).map(shared).collect(),
        Regime::Overlap => {
            let r = n - m;
            (0..r)
                .map(|_| SubchannelKind::OmaUser1)
                .chain((0..f.shared_count()).map(shared))
                .chain((0..r).map(|_| SubchannelKind::OmaUser2))
                .collect()
        }
        Regime::Wide => (0..m)
            .map(|_| SubchannelKind::OmaUser1)
            .chain((0..n - 2 * m).map(|_| SubchannelKind::Muted))
            .chain((0..m).map(|_| SubchannelKind::OmaUser2))
            .collect(),
    };
    Ok(kinds
        .into_iter()
        .enumerate()
        .map(|(index, kind)| SubchannelPlan { index, kind })
        .collect())
}

/// Instantaneous rates of one realization under a given normalization t^2.
pub fn instantaneous_rates(
    plans: &[SubchannelPlan],
    cfg: &SystemConfig,
    t_sq: f64,
) -> Result<RateReport> {
    if plans.len() != cfg.n {
        return Err(Error::Config(format!(
            "{} subchannel plans for n = {}",
            plans.len(),
            cfg.n
        )));
    }
    if !(t_sq > 0.0) {
        return Err(Error::Domain(format!("normalization t^2 must be positive, got {t_sq}")));
    }
    let p = cfg.power_mw();
    let n0 = cfg.noise_mw();
    let (l1_sq, l2_sq) = (cfg.l1_sq(), cfg.l2_sq);
    let noise1 = t_sq * cfg.d1_tau() * n0;
    let noise2 = t_sq * cfg.d2_tau() * n0;
    let mut r1 = Vec::with_capacity(plans.len());
    let mut r2 = Vec::with_capacity(plans.len());
    for plan in plans {
        let (a, b) = match plan.kind {
            SubchannelKind::NomaShared { alpha_sq, beta_sq, sic_at: SicSide::User1 } => (
                (1.0 + p * alpha_sq * l2_sq / noise1).log2(),
                (1.0 + p * beta_sq * l1_sq / (p * beta_sq * l2_sq + noise2)).log2(),
            ),
            SubchannelKind::NomaShared { alpha_sq, beta_sq, sic_at: SicSide::User2 } => (
                (1.0 + p * alpha_sq * l1_sq / (p * alpha_sq * l2_sq + noise1)).log2(),
                (1.0 + p * beta_sq * l2_sq / noise2).log2(),
            ),
            SubchannelKind::OmaUser1 => ((1.0 + p / noise1).log2(), 0.0),
            SubchannelKind::OmaUser2 => (0.0, (1.0 + p / noise2).log2()),
            SubchannelKind::Muted => (0.0, 0.0),
        };
        r1.push(a);
        r2.push(b);
    }
    Ok(RateReport::from_per_sub(r1, r2, cfg.m, t_sq))
}

/// OMA-TDMA baseline: each user gets the full band half the time and
/// waterfills nothing, splitting power equally over its min(m, n) eigenmodes.
pub fn oma_tdma_rates(h1: &CMat, h2: &CMat, cfg: &SystemConfig) -> Result<RateReport> {
    if h1.shape() != (cfg.m, cfg.n) || h2.shape() != (cfg.m, cfg.n) {
        return Err(Error::Config("channel shape does not match config".into()));
    }
    let p = cfg.power_mw();
    let n0 = cfg.noise_mw();
    let k1 = cfg.m.min(cfg.n);
    let user = |h: &CMat, d_tau: f64| -> Vec<f64> {
        let sv = SVD::new_unordered(h.clone(), false, false).singular_values;
        sv.iter()
            .take(k1)
            .map(|s| 0.5 * (1.0 + (p / k1 as f64) * s * s / (d_tau * n0)).log2())
            .collect()
    };
    let r1 = user(h1, cfg.d1_tau());
    let r2 = user(h2, cfg.d2_tau());
    Ok(RateReport::from_per_sub(r1, r2, cfg.m, 1.0))
}

/// Sum rates of a hybrid multi-user scheme: users are split into disjoint
/// pairs, each pair runs two-user GSVD-NOMA on an equal share of the band.
#[derive(Debug, Clone)]
pub struct HybridRates {
    /// Normalized rate of each user, indexed as in the input slice.
    pub per_user_norm: Vec<f64>,
    pub sum_norm: f64,
}

pub fn hybrid_group_rates(
    channels: &[CMat],
    distances: &[f64],
    pairing: &[(usize, usize)],
    cfg: &SystemConfig,
) -> Result<HybridRates> {
    let k = channels.len();
    if k == 0 || pairing.is_empty() {
        return Err(Error::EmptyInput("hybrid user set"));
    }
    if distances.len() != k {
        return Err(Error::InvalidPairing(format!(
            "{} distances for {k} channels",
            distances.len()
        )));
    }
    let mut seen = vec![false; k];
    for &(i, j) in pairing {
        if i >= k || j >= k || i == j {
            return Err(Error::InvalidPairing(format!("pair ({i}, {j}) out of range")));
        }
        if seen[i] || seen[j] {
            return Err(Error::InvalidPairing(format!("user repeated in pair ({i}, {j})")));
        }
        seen[i] = true;
        seen[j] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidPairing("pairing does not cover all users".into()));
    }
    let share = 1.0 / pairing.len() as f64;
    let t_sq = theoretical_t_sq(cfg.m, cfg.n)?;
    let mut per_user_norm = vec![0.0; k];
    for &(i, j) in pairing {
        let pair_cfg = SystemConfig { d1: distances[i], d2: distances[j], ..cfg.clone() };
        let f = gsvd(&channels[i], &channels[j])?;
        let plans = plan_subchannels(&f, &pair_cfg)?;
        let report = instantaneous_rates(&plans, &pair_cfg, t_sq)?;
        per_user_norm[i] = share * report.r1_norm;
        per_user_norm[j] = share * report.r2_norm;
    }
    Ok(HybridRates { sum_norm: per_user_norm.iter().sum(), per_user_norm })
}

/// Writes per-subchannel rates as CSV rows (trial, subchannel, kind, r1, r2).
pub fn write_rates_csv<W: std::io::Write>(
    out: W,
    rows: &[(u64, &[SubchannelPlan], &RateReport)],
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["trial", "subchannel", "kind", "r1", "r2"])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for (trial, plans, report) in rows {
        for plan in plans.iter() {
            let kind = match plan.kind {
                SubchannelKind::NomaShared { .. } => "noma_shared",
                SubchannelKind::OmaUser1 => "oma_user1",
                SubchannelKind::OmaUser2 => "oma_user2",
                SubchannelKind::Muted => "muted",
            };
            let rec = [
                trial.to_string(),
                plan.index.to_string(),
                kind.to_string(),
                format!("{:.12e}", report.r1_per_sub[plan.index]),
                format!("{:.12e}", report.r2_per_sub[plan.index]),
            ];
            wtr.write_record(&rec)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channels;
    use approx::assert_relative_eq;

    fn cfg(m: usize, n: usize) -> SystemConfig {
        SystemConfig {
            m,
            n,
            d1: 10.0,
            d2: 100.0,
            tau: 2.0,
            p_dbm: 30.0,
            n0_dbm: 0.0,
            l2_sq: 0.2,
            trials: 1,
            seed: 11,
        }
    }

    fn factors_for(cfg: &SystemConfig) -> GsvdFactors {
        let pair = sample_channels(cfg, 0).unwrap();
        gsvd(&pair.h1, &pair.h2).unwrap()
    }

    #[test]
    fn plan_counts_tall() {
        let c = cfg(3, 2);
        let plans = plan_subchannels(&factors_for(&c), &c).unwrap();
        assert_eq!(plans.len(), 2);
        assert!(plans
            .iter()
            .all(|p| matches!(p.kind, SubchannelKind::NomaShared { .. })));
    }

    #[test]
    fn plan_counts_overlap() {
        let c = cfg(2, 3);
        let plans = plan_subchannels(&factors_for(&c), &c).unwrap();
        let kinds: Vec<_> = plans.iter().map(|p| p.kind).collect();
        assert_eq!(kinds.len(), 3);
        assert_eq!(kinds[0], SubchannelKind::OmaUser1);
        assert!(matches!(kinds[1], SubchannelKind::NomaShared { .. }));
        assert_eq!(kinds[2], SubchannelKind::OmaUser2);
    }

    #[test]
    fn plan_counts_wide() {
        let c = cfg(2, 7);
        let plans = plan_subchannels(&factors_for(&c), &c).unwrap();
        let kinds: Vec<_> = plans.iter().map(|p| p.kind).collect();
        assert_eq!(
            kinds,
            vec![
                SubchannelKind::OmaUser1,
                SubchannelKind::OmaUser1,
                SubchannelKind::Muted,
                SubchannelKind::Muted,
                SubchannelKind::Muted,
                SubchannelKind::OmaUser2,
                SubchannelKind::OmaUser2,
            ]
        );
    }

    #[test]
    fn shared_rate_log2_values() {
        // P = 1000 mW, N0 = 1 mW, d1^tau = 100, t^2 = 1, so P/(t^2 d1 N0) = 10.
        // With alpha^2 = 0.5 and l2^2 = 0.2 the SIC-side SINR is exactly 1.
        let mut c = cfg(1, 1);
        c.l2_sq = 0.2;
        let plans = [SubchannelPlan {
            index: 0,
            kind: SubchannelKind::NomaShared {
                alpha_sq: 0.5,
                beta_sq: 0.5,
                sic_at: SicSide::User1,
            },
        }];
        let r = instantaneous_rates(&plans, &c, 1.0).unwrap();
        assert_relative_eq!(r.r1_per_sub[0], 1.0, epsilon = 1e-12);
        // User 2: P b^2 l1^2 / (P b^2 l2^2 + t^2 d2 N0)
        //       = 500*0.8 / (500*0.2 + 10000) = 400/10100.
        assert_relative_eq!(
            r.r2_per_sub[0],
            (1.0f64 + 400.0 / 10100.0).log2(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn weak_side_rate_log2_three() {
        // P beta^2 l2^2 / (t^2 d2 N0) = 2 gives R2 = log2(3).
        let mut c = cfg(1, 1);
        c.d2 = 5.0; // d2^tau = 25
        c.l2_sq = 0.1;
        let plans = [SubchannelPlan {
            index: 0,
            kind: SubchannelKind::NomaShared {
                alpha_sq: 0.5,
                beta_sq: 0.5,
                sic_at: SicSide::User2,
            },
        }];
        let r = instantaneous_rates(&plans, &c, 1.0).unwrap();
        assert_relative_eq!(r.r2_per_sub[0], 3f64.log2(), epsilon = 1e-12);
        assert_relative_eq!(3f64.log2(), 1.584962500721156, epsilon = 1e-12);
    }

    #[test]
    fn tie_goes_to_user2() {
        // Identical channels and distances make w^2 = threshold = 1 exactly.
        use crate::CMat;
        let h = CMat::identity(2, 2);
        let f = gsvd(&h, &h).unwrap();
        let mut c = cfg(2, 2);
        c.d2 = c.d1;
        let plans = plan_subchannels(&f, &c).unwrap();
        for p in &plans {
            match p.kind {
                SubchannelKind::NomaShared { sic_at, .. } => assert_eq!(sic_at, SicSide::User2),
                _ => panic!("expected shared subchannel"),
            }
        }
    }

    #[test]
    fn alpha_substitution_identity() {
        // Rates from (alpha^2, beta^2) match the w^2-parameterized forms.
        let c = cfg(4, 3);
        let f = factors_for(&c);
        let plans = plan_subchannels(&f, &c).unwrap();
        for (i, p) in plans.iter().enumerate() {
            if let SubchannelKind::NomaShared { alpha_sq, beta_sq, .. } = p.kind {
                let w_sq = f.w_sq[i];
                assert_relative_eq!(alpha_sq, w_sq / (1.0 + w_sq), epsilon = 1e-12);
                assert_relative_eq!(beta_sq, 1.0 / (1.0 + w_sq), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rates_monotone_in_power() {
        let mut c = cfg(3, 4);
        let f = factors_for(&c);
        let plans = plan_subchannels(&f, &c).unwrap();
        let t_sq = theoretical_t_sq(c.m, c.n).unwrap();
        let mut prev = 0.0;
        for p_dbm in [0.0, 10.0, 20.0, 30.0, 40.0] {
            c.p_dbm = p_dbm;
            let r = instantaneous_rates(&plans, &c, t_sq).unwrap();
            let sum = r.r1_total + r.r2_total;
            assert!(sum > prev, "sum rate not increasing at {p_dbm} dBm");
            prev = sum;
        }
    }

    #[test]
    fn oma_single_antenna() {
        // m = n = 1, |h|^2 = 4: R = 0.5 log2(1 + 4 P/(d^tau N0)).
        use crate::{C64, CMat};
        let h = CMat::from_element(1, 1, C64::new(2.0, 0.0));
        let c = cfg(1, 1);
        let r = oma_tdma_rates(&h, &h, &c).unwrap();
        let p = c.power_mw();
        assert_relative_eq!(
            r.r1_total,
            0.5 * (1.0 + 4.0 * p / (100.0 * c.noise_mw())).log2(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn hybrid_single_pair_matches_two_user() {
        let c = cfg(3, 2);
        let pair = sample_channels(&c, 0).unwrap();
        let f = gsvd(&pair.h1, &pair.h2).unwrap();
        let plans = plan_subchannels(&f, &c).unwrap();
        let t_sq = theoretical_t_sq(c.m, c.n).unwrap();
        let direct = instantaneous_rates(&plans, &c, t_sq).unwrap();
        let hybrid = hybrid_group_rates(
            &[pair.h1.clone(), pair.h2.clone()],
            &[c.d1, c.d2],
            &[(0, 1)],
            &c,
        )
        .unwrap();
        assert_relative_eq!(hybrid.per_user_norm[0], direct.r1_norm, epsilon = 1e-12);
        assert_relative_eq!(hybrid.per_user_norm[1], direct.r2_norm, epsilon = 1e-12);
    }

    #[test]
    fn hybrid_rejects_bad_pairings() {
        let c = cfg(2, 3);
        let chans: Vec<CMat> = (0..4)
            .map(|t| sample_channels(&c, t).unwrap().h1)
            .collect();
        let d = [10.0, 20.0, 30.0, 40.0];
        assert!(hybrid_group_rates(&chans, &d, &[(0, 1)], &c).is_err());
        assert!(hybrid_group_rates(&chans, &d, &[(0, 1), (1, 2)], &c).is_err());
        assert!(hybrid_group_rates(&chans, &d, &[(0, 0), (2, 3)], &c).is_err());
        assert!(hybrid_group_rates(&chans, &d, &[(0, 1), (2, 3)], &c).is_ok());
    }
}
