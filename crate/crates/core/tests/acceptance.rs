//! End-to-end acceptance checks. Each test prints one pass/fail line.

use std::time::Instant;

use rayon::prelude::*;

use gsvd_noma::asymptotic::{asymptotic_rates, wide_rates};
use gsvd_noma::channel::{sample_channels, SystemConfig};
use gsvd_noma::gsvd::{gsvd, trace_inv_gram, verify_gsvd, GsvdFactors};
use gsvd_noma::rates::{instantaneous_rates, plan_subchannels};
use gsvd_noma::sim::{run_hybrid_monte_carlo, run_monte_carlo, run_monte_carlo_with_t_sq, Baselines};
use gsvd_noma::spectral::{empirical_t_sq, ks_distance, limiting_law, theoretical_t_sq, EmpiricalSpectrum};

fn cfg(m: usize, n: usize, trials: usize, seed: u64) -> SystemConfig {
    SystemConfig {
        m,
        n,
        d1: 10.0,
        d2: 100.0,
        tau: 2.0,
        p_dbm: 30.0,
        n0_dbm: -35.0,
        l2_sq: 0.2,
        trials,
        seed,
    }
}

fn factor_batch(m: usize, n: usize, trials: usize, seed: u64) -> Vec<GsvdFactors> {
    let c = cfg(m, n, trials, seed);
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let pair = sample_channels(&c, t).unwrap();
            gsvd(&pair.h1, &pair.h2).unwrap()
        })
        .collect()
}

struct Criterion {
    id: u32,
    desc: &'static str,
}

impl Criterion {
    fn check(self, ok: bool, detail: String) {
        let verdict = if ok { "pass" } else { "FAIL" };
        println!("acceptance criterion {:2} [{verdict}] {} ({detail})", self.id, self.desc);
        assert!(ok, "criterion {} failed: {detail}", self.id);
    }
}

#[test]
fn criterion_01_gsvd_invariants() {
    let start = Instant::now();
    let shapes = [(5usize, 3usize), (4, 4), (3, 4), (2, 5), (3, 8)];
    let mut worst = 0.0f64;
    let mut worst_ab = 0.0f64;
    for &(m, n) in &shapes {
        let c = cfg(m, n, 40, 100 + m as u64 * 10 + n as u64);
        for t in 0..40u64 {
            let pair = sample_channels(&c, t).unwrap();
            let f = gsvd(&pair.h1, &pair.h2).unwrap();
            let rep = verify_gsvd(&pair.h1, &pair.h2, &f);
            worst = worst
                .max(rep.recon1)
                .max(rep.recon2)
                .max(rep.u_unitary)
                .max(rep.v_unitary)
                .max(rep.structure)
                .max(rep.ordering);
            worst_ab = worst_ab.max(rep.alpha_beta);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Criterion { id: 1, desc: "gsvd invariants on five shapes, 200 trials" }.check(
        worst < 1e-9 && worst_ab < 1e-12 && elapsed < 5.0,
        format!("worst residual {worst:.2e}, worst alpha/beta {worst_ab:.2e}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_02_trace_identities() {
    let shapes = [(5usize, 3usize), (4, 4), (3, 4), (2, 5), (3, 8)];
    let mut worst = 0.0f64;
    for &(m, n) in &shapes {
        let c = cfg(m, n, 40, 100 + m as u64 * 10 + n as u64);
        for t in 0..40u64 {
            let pair = sample_channels(&c, t).unwrap();
            let f = gsvd(&pair.h1, &pair.h2).unwrap();
            let lhs = if 2 * m > n { f.trace_qqh() } else { f.trace_qbqh() };
            let rhs = trace_inv_gram(&pair.h1, &pair.h2).unwrap();
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    Criterion { id: 2, desc: "per-realization transmit power identities" }
        .check(worst < 1e-8, format!("worst relative error {worst:.2e}"));
}

#[test]
fn criterion_03_mean_power_overlap() {
    let start = Instant::now();
    let batch = factor_batch(40, 50, 500, 3);
    let emp = empirical_t_sq(&batch).unwrap();
    let expect = 5.0 / 3.0;
    let rel = (emp - expect).abs() / expect;
    let elapsed = start.elapsed().as_secs_f64();
    Criterion { id: 3, desc: "mean power (40, 50) near 5/3" }.check(
        rel < 0.03 && elapsed < 30.0,
        format!("empirical {emp:.4}, relative error {rel:.4}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_04_mean_power_wide() {
    let start = Instant::now();
    let batch = factor_batch(2, 8, 2000, 4);
    let emp = empirical_t_sq(&batch).unwrap();
    let expect = theoretical_t_sq(2, 8).unwrap();
    let rel = (emp - expect).abs() / expect;
    let elapsed = start.elapsed().as_secs_f64();
    Criterion { id: 4, desc: "mean power (2, 8) near 1" }.check(
        rel < 0.05 && elapsed < 10.0,
        format!("empirical {emp:.4} vs {expect:.4}, relative error {rel:.4}, {elapsed:.2}s"),
    );
}

#[test]
fn criterion_05_spectrum_convergence() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for (m, n, trials) in [(200usize, 100usize, 20usize), (120, 160, 25)] {
        let batch = factor_batch(m, n, trials, 5);
        let emp = EmpiricalSpectrum::from_factors(&batch).unwrap();
        let law = limiting_law(m, n).unwrap();
        let d = ks_distance(&emp, &law).unwrap();
        ok &= d < 0.05;
        details.push(format!("({m},{n}) KS {d:.4}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 20.0;
    Criterion { id: 5, desc: "empirical spectra match limiting laws" }
        .check(ok, format!("{}, {elapsed:.2}s", details.join(", ")));
}

#[test]
fn criterion_06_density_normalization() {
    let shapes = [(5usize, 4usize), (3, 2), (2, 1), (3, 5), (3, 4), (4, 5)];
    let mut worst = 0.0f64;
    for (m, n) in shapes {
        let law = limiting_law(m, n).unwrap();
        let mass = gsvd_noma::quad::integrate_on_support(
            |x| law.pdf(x).unwrap_or(0.0),
            law.support_lo,
            law.support_hi,
            law.support_lo,
            law.support_hi,
            1e-10,
        )
        .value;
        worst = worst.max((mass - 1.0).abs());
    }
    Criterion { id: 6, desc: "limiting densities integrate to one" }
        .check(worst < 1e-6, format!("worst |mass - 1| = {worst:.2e}"));
}

#[test]
fn criterion_07_asymptotics_match_monte_carlo() {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for (m, n) in [(28usize, 20usize), (28, 35)] {
        let c = cfg(m, n, 1000, 7);
        let mc = run_monte_carlo(&c, Baselines::default()).unwrap();
        let asy = asymptotic_rates(&c).unwrap();
        let rel1 = (mc.r1_mean - asy.r1_norm).abs() / asy.r1_norm;
        let rel2 = (mc.r2_mean - asy.r2_norm).abs() / asy.r2_norm;
        ok &= rel1 < 0.03 && rel2 < 0.03;
        details.push(format!("({m},{n}) rel ({rel1:.4}, {rel2:.4})"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 120.0;
    Criterion { id: 7, desc: "large-system rates match Monte Carlo" }
        .check(ok, format!("{}, {elapsed:.2}s", details.join(", ")));
}

#[test]
fn criterion_08_wide_regime_exact() {
    let c = cfg(2, 5, 2000, 8);
    let t_sq = theoretical_t_sq(2, 5).unwrap();
    let wide = wide_rates(&c).unwrap();

    // With the theoretical normalization the wide-regime rates are
    // channel-independent, so a single realization matches exactly.
    let pair = sample_channels(&c, 0).unwrap();
    let f = gsvd(&pair.h1, &pair.h2).unwrap();
    let plans = plan_subchannels(&f, &c).unwrap();
    let r = instantaneous_rates(&plans, &c, t_sq).unwrap();
    let exact = (r.r1_norm - wide.r1_norm).abs().max((r.r2_norm - wide.r2_norm).abs());

    let batch = factor_batch(2, 5, 2000, 8);
    let emp = empirical_t_sq(&batch).unwrap();
    let mc = run_monte_carlo_with_t_sq(&c, Baselines::default(), emp).unwrap();
    let rel = ((mc.r1_mean - wide.r1_norm).abs() / wide.r1_norm)
        .max((mc.r2_mean - wide.r2_norm).abs() / wide.r2_norm);

    Criterion { id: 8, desc: "wide regime exact and empirically consistent" }.check(
        exact < 1e-12 && rel < 0.05,
        format!("theoretical-t^2 gap {exact:.2e}, empirical-t^2 rel {rel:.4}"),
    );
}

#[test]
fn criterion_09_noma_beats_oma_and_fairness() {
    let mut ok = true;
    let mut details = Vec::new();

    // NOMA above OMA at both fig1 antenna shapes, with a widening gap.
    for n in [35usize, 70] {
        let mut prev_gap = f64::NEG_INFINITY;
        for p_dbm in [10.0, 20.0, 30.0] {
            let mut c = cfg(28, n, 200, 9);
            c.p_dbm = p_dbm;
            let agg = run_monte_carlo(&c, Baselines { oma_tdma: true, asymptotic: false }).unwrap();
            let gap = agg.sum_mean - agg.oma_sum_mean().unwrap();
            ok &= gap > 0.0 && gap > prev_gap;
            prev_gap = gap;
        }
        details.push(format!("n={n} final gap {prev_gap:.3}"));
    }

    // Equal distances give near-equal per-user rates.
    let mut c = cfg(40, 50, 200, 9);
    c.d2 = c.d1;
    let agg = run_monte_carlo(&c, Baselines::default()).unwrap();
    let fair = (agg.r1_mean - agg.r2_mean).abs() / agg.r1_mean.max(agg.r2_mean);
    ok &= fair < 0.02;
    details.push(format!("fairness gap {fair:.4}"));

    // Near-far grouping beats pairing the two near users together.
    let c4 = cfg(40, 50, 50, 9);
    let d = [15.0, 10.0, 200.0, 300.0];
    let near_near = run_hybrid_monte_carlo(&c4, &d, "12|34", &[(0, 1), (2, 3)]).unwrap();
    for (label, pairing) in [("13|24", [(0usize, 2usize), (1, 3)]), ("14|23", [(0, 3), (1, 2)])] {
        let agg = run_hybrid_monte_carlo(&c4, &d, label, &pairing).unwrap();
        ok &= agg.sum_mean > near_near.sum_mean;
        details.push(format!("{label} {:.3} vs 12|34 {:.3}", agg.sum_mean, near_near.sum_mean));
    }

    Criterion { id: 9, desc: "scheme comparisons" }.check(ok, details.join(", "));
}

#[test]
fn criterion_10_power_split_tradeoff() {
    let mut base = cfg(7, 5, 400, 10);
    base.p_dbm = 40.0;
    let lo = {
        let mut c = base.clone();
        c.l2_sq = 0.2;
        run_monte_carlo(&c, Baselines::default()).unwrap()
    };
    let hi = {
        let mut c = base.clone();
        c.l2_sq = 0.4;
        run_monte_carlo(&c, Baselines::default()).unwrap()
    };
    let sum_rel = (hi.sum_mean - lo.sum_mean).abs() / lo.sum_mean;
    let ok = hi.r1_mean > lo.r1_mean && hi.r2_mean < lo.r2_mean && sum_rel < 0.03;
    Criterion { id: 10, desc: "weak-stream power split trade-off" }.check(
        ok,
        format!(
            "r1 {:.3}->{:.3}, r2 {:.3}->{:.3}, sum rel change {sum_rel:.4}",
            lo.r1_mean, hi.r1_mean, lo.r2_mean, hi.r2_mean
        ),
    );
}
