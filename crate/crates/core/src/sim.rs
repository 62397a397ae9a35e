//! Monte Carlo driver: parameter sweeps, baselines, figure presets, CSV output.
//!
//! Trials are farmed out with rayon but each trial draws from its own
//! counter-derived RNG substream and results are reduced in trial order, so
//! aggregates are bit-identical for any worker count.

use std::io::Write;

use rayon::prelude::*;

use crate::asymptotic::{asymptotic_rates, AsymptoticRateResult};
use crate::channel::{sample_channels, SystemConfig};
use crate::error::{Error, Result};
use crate::gsvd::gsvd;
use crate::rates::{hybrid_group_rates, instantaneous_rates, oma_tdma_rates, plan_subchannels};
use crate::spectral::theoretical_t_sq;
use crate::CMat;

/// Which reference curves to compute alongside the Monte Carlo mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct Baselines {
    pub oma_tdma: bool,
    pub asymptotic: bool,
}

/// Swept parameter of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    PDbm,
    D2,
    N,
    L2Sq,
}

impl SweepParam {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepParam::PDbm => "p_dbm",
            SweepParam::D2 => "d2",
            SweepParam::N => "n",
            SweepParam::L2Sq => "l2_sq",
        }
    }

    fn apply(self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = cfg.clone();
        match self {
            SweepParam::PDbm => c.p_dbm = value,
            SweepParam::D2 => c.d2 = value,
            SweepParam::N => c.n = value as usize,
            SweepParam::L2Sq => c.l2_sq = value,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Two users, or several users grouped into pairs sharing the band.
#[derive(Debug, Clone)]
pub enum Scenario {
    TwoUser,
    Hybrid {
        distances: Vec<f64>,
        /// Labeled candidate pairings to compare.
        pairings: Vec<(String, Vec<(usize, usize)>)>,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub name: String,
    pub cfg: SystemConfig,
    pub sweep: Sweep,
    pub baselines: Baselines,
    pub scenario: Scenario,
}

/// Monte Carlo aggregates at one parameter point.
#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub r1_mean: f64,
    pub r1_se: f64,
    pub r2_mean: f64,
    pub r2_se: f64,
    pub sum_mean: f64,
    pub sum_se: f64,
    pub oma_r1_mean: Option<f64>,
    pub oma_r2_mean: Option<f64>,
    pub asymptotic: Option<AsymptoticRateResult>,
    pub trials_used: usize,
    pub skipped: usize,
}

impl AggregateResult {
    pub fn oma_sum_mean(&self) -> Option<f64> {
        Some(self.oma_r1_mean? + self.oma_r2_mean?)
    }
}

struct TrialRates {
    r1: f64,
    r2: f64,
    oma_r1: f64,
    oma_r2: f64,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the two-user Monte Carlo with the theoretical normalization t^2.
/// Deterministic in (cfg.seed, cfg.trials) regardless of worker count.
pub fn run_monte_carlo(cfg: &SystemConfig, baselines: Baselines) -> Result<AggregateResult> {
    cfg.validate()?;
    let t_sq = theoretical_t_sq(cfg.m, cfg.n)?;
    run_monte_carlo_with_t_sq(cfg, baselines, t_sq)
}

/// Same as `run_monte_carlo` but with a caller-supplied normalization,
/// e.g. an empirically estimated t^2.
pub fn run_monte_carlo_with_t_sq(
    cfg: &SystemConfig,
    baselines: Baselines,
    t_sq: f64,
) -> Result<AggregateResult> {
    cfg.validate()?;
    let outcomes: Vec<Result<Option<TrialRates>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(cfg, trial, baselines, t_sq))
        .collect();

    let mut r1 = Vec::with_capacity(cfg.trials);
    let mut r2 = Vec::with_capacity(cfg.trials);
    let mut sum = Vec::with_capacity(cfg.trials);
    let mut oma_r1 = Vec::new();
    let mut oma_r2 = Vec::new();
    let mut skipped = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some(t) => {
                r1.push(t.r1);
                r2.push(t.r2);
                sum.push(t.r1 + t.r2);
                if baselines.oma_tdma {
                    oma_r1.push(t.oma_r1);
                    oma_r2.push(t.oma_r2);
                }
            }
            None => skipped += 1,
        }
    }
    if r1.is_empty() {
        return Err(Error::DegenerateChannel { ratio: 0.0 });
    }
    let (r1_mean, r1_se) = mean_se(&r1);
    let (r2_mean, r2_se) = mean_se(&r2);
    let (sum_mean, sum_se) = mean_se(&sum);
    let asymptotic = if baselines.asymptotic { asymptotic_rates(cfg).ok() } else { None };
    Ok(AggregateResult {
        r1_mean,
        r1_se,
        r2_mean,
        r2_se,
        sum_mean,
        sum_se,
        oma_r1_mean: baselines.oma_tdma.then(|| mean_se(&oma_r1).0),
        oma_r2_mean: baselines.oma_tdma.then(|| mean_se(&oma_r2).0),
        asymptotic,
        trials_used: r1.len(),
        skipped,
    })
}

fn run_trial(
    cfg: &SystemConfig,
    trial: u64,
    baselines: Baselines,
    t_sq: f64,
) -> Result<Option<TrialRates>> {
    let pair = sample_channels(cfg, trial)?;
    let factors = match gsvd(&pair.h1, &pair.h2) {
        Ok(f) => f,
        Err(Error::DegenerateChannel { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let plans = plan_subchannels(&factors, cfg)?;
    let report = instantaneous_rates(&plans, cfg, t_sq)?;
    let (oma_r1, oma_r2) = if baselines.oma_tdma {
        let oma = oma_tdma_rates(&pair.h1, &pair.h2, cfg)?;
        (oma.r1_norm, oma.r2_norm)
    } else {
        (0.0, 0.0)
    };
    Ok(Some(TrialRates { r1: report.r1_norm, r2: report.r2_norm, oma_r1, oma_r2 }))
}

/// Monte Carlo sum-rate aggregate of one hybrid pairing.
#[derive(Debug, Clone)]
pub struct HybridAggregate {
    pub label: String,
    pub sum_mean: f64,
    pub sum_se: f64,
    pub per_user_mean: Vec<f64>,
    pub trials_used: usize,
    pub skipped: usize,
}

/// Samples one channel matrix per user per trial, deterministically.
fn sample_user_channels(cfg: &SystemConfig, trial: u64, users: usize) -> Result<Vec<CMat>> {
    let mut out = Vec::with_capacity(users);
    let draws = users.div_ceil(2) as u64;
    for j in 0..draws {
        let pair = sample_channels(cfg, trial * draws + j)?;
        out.push(pair.h1);
        if out.len() < users {
            out.push(pair.h2);
        }
    }
    Ok(out)
}

/// Runs the hybrid multi-user Monte Carlo for one labeled pairing.
pub fn run_hybrid_monte_carlo(
    cfg: &SystemConfig,
    distances: &[f64],
    label: &str,
    pairing: &[(usize, usize)],
) -> Result<HybridAggregate> {
    cfg.validate()?;
    let users = distances.len();
    let outcomes: Vec<Result<Option<Vec<f64>>>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let channels = sample_user_channels(cfg, trial, users)?;
            match hybrid_group_rates(&channels, distances, pairing, cfg) {
                Ok(h) => Ok(Some(h.per_user_norm)),
                Err(Error::DegenerateChannel { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut sums = Vec::with_capacity(cfg.trials);
    let mut per_user = vec![0.0; users];
    let mut skipped = 0usize;
    for outcome in outcomes {
        match outcome? {
            Some(rates) => {
                sums.push(rates.iter().sum());
                for (acc, r) in per_user.iter_mut().zip(&rates) {
                    *acc += r;
                }
            }
            None => skipped += 1,
        }
    }
    if sums.is_empty() {
        return Err(Error::DegenerateChannel { ratio: 0.0 });
    }
    let used = sums.len();
    let (sum_mean, sum_se) = mean_se(&sums);
    for acc in per_user.iter_mut() {
        *acc /= used as f64;
    }
    Ok(HybridAggregate {
        label: label.to_string(),
        sum_mean,
        sum_se,
        per_user_mean: per_user,
        trials_used: used,
        skipped,
    })
}

/// Results of one experiment across its sweep.
#[derive(Debug, Clone)]
pub enum ExperimentResults {
    TwoUser(Vec<(f64, AggregateResult)>),
    Hybrid(Vec<(f64, Vec<HybridAggregate>)>),
}

/// Runs the full sweep of an experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    match &spec.scenario {
        Scenario::TwoUser => {
            let mut rows = Vec::with_capacity(spec.sweep.values.len());
            for &v in &spec.sweep.values {
                let cfg = spec.sweep.param.apply(&spec.cfg, v)?;
                rows.push((v, run_monte_carlo(&cfg, spec.baselines)?));
            }
            Ok(ExperimentResults::TwoUser(rows))
        }
        Scenario::Hybrid { distances, pairings } => {
            let mut rows = Vec::with_capacity(spec.sweep.values.len());
            for &v in &spec.sweep.values {
                let cfg = spec.sweep.param.apply(&spec.cfg, v)?;
                let mut per_pairing = Vec::with_capacity(pairings.len());
                for (label, pairing) in pairings {
                    per_pairing.push(run_hybrid_monte_carlo(&cfg, distances, label, pairing)?);
                }
                rows.push((v, per_pairing));
            }
            Ok(ExperimentResults::Hybrid(rows))
        }
    }
}

/// Writes experiment results as CSV. The leading `# generated ...` comment is
/// emitted only when `timestamp` is set, so outputs are otherwise
/// byte-identical across runs.
pub fn write_results_csv<W: Write>(
    spec: &ExperimentSpec,
    results: &ExperimentResults,
    mut out: W,
    timestamp: bool,
) -> Result<()> {
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated by gsvdnoma, experiment {}, unix time {secs}", spec.name)?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    match results {
        ExperimentResults::TwoUser(rows) => {
            let mut header = vec![
                spec.sweep.param.column_name().to_string(),
                "r1_norm".into(),
                "r2_norm".into(),
                "sum_norm".into(),
            ];
            if spec.baselines.oma_tdma {
                header.push("oma_sum".into());
            }
            if spec.baselines.asymptotic {
                header.push("asy_r1".into());
                header.push("asy_r2".into());
            }
            wtr.write_record(&header).map_err(io_err)?;
            for (v, agg) in rows {
                let mut rec = vec![
                    format!("{v}"),
                    format!("{:.9e}", agg.r1_mean),
                    format!("{:.9e}", agg.r2_mean),
                    format!("{:.9e}", agg.sum_mean),
                ];
                if spec.baselines.oma_tdma {
                    rec.push(match agg.oma_sum_mean() {
                        Some(s) => format!("{s:.9e}"),
                        None => String::new(),
                    });
                }
                if spec.baselines.asymptotic {
                    match &agg.asymptotic {
                        Some(a) => {
                            rec.push(format!("{:.9e}", a.r1_norm));
                            rec.push(format!("{:.9e}", a.r2_norm));
                        }
                        None => {
                            rec.push(String::new());
                            rec.push(String::new());
                        }
                    }
                }
                wtr.write_record(&rec).map_err(io_err)?;
            }
        }
        ExperimentResults::Hybrid(rows) => {
            wtr.write_record([
                spec.sweep.param.column_name(),
                "pairing",
                "sum_norm",
                "sum_se",
            ])
            .map_err(io_err)?;
            for (v, aggs) in rows {
                for agg in aggs {
                    wtr.write_record(&[
                        format!("{v}"),
                        agg.label.clone(),
                        format!("{:.9e}", agg.sum_mean),
                        format!("{:.9e}", agg.sum_se),
                    ])
                    .map_err(io_err)?;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn base_cfg(m: usize, n: usize) -> SystemConfig {
    SystemConfig {
        m,
        n,
        d1: 10.0,
        d2: 100.0,
        tau: 2.0,
        p_dbm: 30.0,
        n0_dbm: -35.0,
        l2_sq: 0.2,
        trials: 200,
        seed: 2024,
    }
}

/// Named figure-style experiment presets.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let p_sweep = |lo: f64, hi: f64, step: f64| {
        let mut v = Vec::new();
        let mut x = lo;
        while x <= hi + 1e-9 {
            v.push(x);
            x += step;
        }
        v
    };
    let spec = match name {
        // Rate vs power, m = 28 with more transmit antennas than receive
        // antennas per user (n = 35). Override n for other shapes.
        "fig1" => ExperimentSpec {
            name: "fig1".into(),
            cfg: base_cfg(28, 35),
            sweep: Sweep { param: SweepParam::PDbm, values: p_sweep(10.0, 40.0, 5.0) },
            baselines: Baselines { oma_tdma: true, asymptotic: false },
            scenario: Scenario::TwoUser,
        },
        // Rate vs far-user distance.
        "fig2" => ExperimentSpec {
            name: "fig2".into(),
            cfg: SystemConfig { d1: 50.0, ..base_cfg(28, 35) },
            sweep: Sweep { param: SweepParam::D2, values: p_sweep(60.0, 200.0, 20.0) },
            baselines: Baselines { oma_tdma: true, asymptotic: false },
            scenario: Scenario::TwoUser,
        },
        // Sum rate vs power with both users at the same distance,
        // against the large-system curves.
        "fig3_sum" => ExperimentSpec {
            name: "fig3_sum".into(),
            cfg: SystemConfig { d1: 10.0, d2: 10.0, ..base_cfg(40, 50) },
            sweep: Sweep { param: SweepParam::PDbm, values: p_sweep(10.0, 40.0, 5.0) },
            baselines: Baselines { oma_tdma: true, asymptotic: true },
            scenario: Scenario::TwoUser,
        },
        // Rate vs transmit antenna count at small m (n = 4 would diverge and
        // is excluded from the sweep).
        "fig4" => ExperimentSpec {
            name: "fig4".into(),
            cfg: SystemConfig { d2: 40.0, p_dbm: 15.0, ..base_cfg(2, 5) },
            sweep: Sweep {
                param: SweepParam::N,
                values: (5..=30).map(|n| n as f64).collect(),
            },
            baselines: Baselines { oma_tdma: true, asymptotic: false },
            scenario: Scenario::TwoUser,
        },
        // Rate vs power in the wide regime.
        "fig5" => ExperimentSpec {
            name: "fig5".into(),
            cfg: base_cfg(2, 5),
            sweep: Sweep { param: SweepParam::PDbm, values: p_sweep(10.0, 40.0, 5.0) },
            baselines: Baselines { oma_tdma: true, asymptotic: true },
            scenario: Scenario::TwoUser,
        },
        // Rate vs weak-stream power split.
        "fig6" => ExperimentSpec {
            name: "fig6".into(),
            cfg: SystemConfig { p_dbm: 40.0, ..base_cfg(7, 5) },
            sweep: Sweep { param: SweepParam::L2Sq, values: vec![0.2, 0.3, 0.4] },
            baselines: Baselines { oma_tdma: false, asymptotic: false },
            scenario: Scenario::TwoUser,
        },
        // Four users, three candidate near-far groupings.
        "fig8" => ExperimentSpec {
            name: "fig8".into(),
            cfg: base_cfg(40, 50),
            sweep: Sweep { param: SweepParam::PDbm, values: p_sweep(10.0, 40.0, 10.0) },
            baselines: Baselines::default(),
            scenario: Scenario::Hybrid {
                distances: vec![15.0, 10.0, 200.0, 300.0],
                pairings: vec![
                    ("12|34".into(), vec![(0, 1), (2, 3)]),
                    ("13|24".into(), vec![(0, 2), (1, 3)]),
                    ("14|23".into(), vec![(0, 3), (1, 2)]),
                ],
            },
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected fig1, fig2, fig3_sum, fig4, fig5, fig6, fig8)"
            )))
        }
    };
    Ok(spec)
}
