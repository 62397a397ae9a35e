//! System parameters and random two-user MIMO channel sampling.
//!
//! Channels are i.i.d. CN(0,1): unit total variance split evenly between the
//! real and imaginary parts. Path loss 1/sqrt(d^tau) is applied later, at
//! rate-computation time, so the GSVD is always taken of the raw fading
//! matrices.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, CMat};

/// Full parameter set for a two-user GSVD-NOMA experiment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Receive antennas per user.
    pub m: usize,
    /// Transmit antennas at the base station.
    pub n: usize,
    /// Distance of user 1 in meters.
    pub d1: f64,
    /// Distance of user 2 in meters.
    pub d2: f64,
    /// Path-loss exponent.
    pub tau: f64,
    /// Total transmit power in dBm.
    pub p_dbm: f64,
    /// Noise power in dBm.
    pub n0_dbm: f64,
    /// Weak-stream power coefficient l2^2; l1^2 = 1 - l2^2.
    pub l2_sq: f64,
    /// Monte Carlo trial count.
    pub trials: usize,
    /// RNG seed.
    pub seed: u64,
}

impl SystemConfig {
    /// Checks all invariants, including the n != 2m exclusion.
    pub fn validate(&self) -> Result<()> {
        self.validate_dimensions()?;
        if self.n == 2 * self.m {
            return Err(Error::NormalizationDivergence { n: self.n });
        }
        Ok(())
    }

    /// Checks everything except the n != 2m exclusion.
    pub fn validate_dimensions(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Config(format!(
                "antenna counts must be positive (m={}, n={})",
                self.m, self.n
            )));
        }
        if !(self.d1 > 0.0) || !(self.d2 > 0.0) {
            return Err(Error::Config("distances must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("path-loss exponent must be positive".into()));
        }
        if !(self.l2_sq > 0.0 && self.l2_sq < 0.5) {
            return Err(Error::Config(format!(
                "l2_sq must lie in (0, 0.5), got {}",
                self.l2_sq
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("trial count must be positive".into()));
        }
        Ok(())
    }

    /// Total transmit power in mW.
    pub fn power_mw(&self) -> f64 {
        to_linear_power(self.p_dbm)
    }

    /// Noise power in mW.
    pub fn noise_mw(&self) -> f64 {
        to_linear_power(self.n0_dbm)
    }

    /// Strong-stream power coefficient l1^2 = 1 - l2^2.
    pub fn l1_sq(&self) -> f64 {
        1.0 - self.l2_sq
    }

    /// Path-loss factor d_i^tau for user 1.
    pub fn d1_tau(&self) -> f64 {
        self.d1.powf(self.tau)
    }

    /// Path-loss factor d_i^tau for user 2.
    pub fn d2_tau(&self) -> f64 {
        self.d2.powf(self.tau)
    }

    /// Antenna ratio eta = m/n.
    pub fn eta(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// Parses a flat `key = value` config file. Unknown keys are an error.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Parses flat `key = value` text. Unknown keys are an error.
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_dimensions()?;
        Ok(cfg)
    }
}

/// The two users' small-scale fading matrices.
#[derive(Debug, Clone)]
pub struct ChannelPair {
    pub h1: CMat,
    pub h2: CMat,
}

/// Converts dBm to linear mW: 10^(dbm/10).
pub fn to_linear_power(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Samples the trial's channel pair. Deterministic in (seed, trial_index):
/// each trial uses its own counter-derived substream, so serial and parallel
/// runs produce bit-identical matrices.
pub fn sample_channels(cfg: &SystemConfig, trial_index: u64) -> Result<ChannelPair> {
    cfg.validate_dimensions()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial_index.wrapping_add(1));
    let h1 = sample_matrix(cfg.m, cfg.n, &mut rng);
    let h2 = sample_matrix(cfg.m, cfg.n, &mut rng);
    Ok(ChannelPair { h1, h2 })
}

fn sample_matrix(m: usize, n: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(m, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}
