//! Experiment configuration: a single JSON document, schema-validated up
//! front (unknown keys rejected) so that a typo cannot silently change an
//! experiment.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form experiment id echoed into every artifact.
    pub experiment: String,
    pub n_dim: u32,
    /// Inverse temperature for the rate sweep; beta = N is the critical
    /// sweep against the quartic law, beta < N the subcritical sweep
    /// against the Gaussian.
    pub beta: f64,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    /// Independent chains per n; every sample count below is split across
    /// them.
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Total W samples per n for the rate sweeps.
    #[serde(default = "default_samples_per_n")]
    pub samples_per_n: usize,
    /// Cloud size for the reported full-dimensional exact matching.
    #[serde(default = "default_exact_matching")]
    pub exact_matching_samples: usize,
    /// Equilibrium samples per replica for the pair diagnostics.
    #[serde(default = "default_pair_samples")]
    pub pair_samples_per_replica: usize,
    /// Subcritical beta used by the full report's second sweep.
    #[serde(default)]
    pub subcritical_beta: Option<f64>,
    #[serde(default)]
    pub langevin: LangevinParams,
    pub seed: u64,
}

fn default_burn_in() -> usize {
    1000
}
fn default_thin() -> usize {
    10
}
fn default_replicas() -> usize {
    8
}
fn default_samples_per_n() -> usize {
    100_000
}
fn default_exact_matching() -> usize {
    512
}
fn default_pair_samples() -> usize {
    1250
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LangevinParams {
    pub dt: f64,
    /// B of the quartic potential spec (the rho lower-bound radius).
    pub b_radius: f64,
    pub t_grid: Vec<f64>,
    pub variation_replicas: usize,
    pub decay_replicas: usize,
    pub decay_pairs: Vec<(f64, f64)>,
    pub bel_outer: usize,
    pub bel_inner: usize,
    pub bel_t: f64,
    pub fd_replicas: usize,
    pub stein_replicas: usize,
    pub stein_t_max: f64,
    pub stein_eps: f64,
    pub ergodic_samples: usize,
    pub ergodic_t_grid: Vec<f64>,
}

impl Default for LangevinParams {
    fn default() -> Self {
        LangevinParams {
            dt: 1e-3,
            b_radius: 1.0,
            t_grid: vec![0.25, 0.5, 1.0, 2.0],
            variation_replicas: 400,
            decay_replicas: 300,
            decay_pairs: vec![(0.0, 0.5), (0.25, 1.0), (0.5, 2.0), (1.0, 4.0)],
            bel_outer: 120,
            bel_inner: 120,
            bel_t: 0.5,
            fd_replicas: 14400,
            stein_replicas: 160,
            stein_t_max: 40.0,
            stein_eps: 0.05,
            ergodic_samples: 1024,
            ergodic_t_grid: vec![0.5, 1.0, 2.0, 4.0],
        }
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults for the critical sweep at dimension N.
    pub fn default_critical(n_dim: u32, seed: u64) -> Self {
        ExperimentConfig {
            experiment: format!("critical-N{n_dim}"),
            n_dim,
            beta: f64::from(n_dim),
            n_grid: vec![16, 32, 64, 128, 256, 512, 1024],
            burn_in: default_burn_in(),
            thin: default_thin(),
            replicas: default_replicas(),
            samples_per_n: default_samples_per_n(),
            exact_matching_samples: default_exact_matching(),
            pair_samples_per_replica: default_pair_samples(),
            subcritical_beta: Some(1.0),
            langevin: LangevinParams::default(),
            seed,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dim < 2 {
            return Err(Error::Config(format!("N must be >= 2, got {}", self.n_dim)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::Config("beta must be >= 0".into()));
        }
        if self.beta > f64::from(self.n_dim) {
            return Err(Error::Config(format!(
                "beta = {} exceeds the critical point N = {}; the sweeps cover beta <= N only",
                self.beta, self.n_dim
            )));
        }
        if let Some(sb) = self.subcritical_beta {
            if !(0.0..f64::from(self.n_dim)).contains(&sb) {
                return Err(Error::Config(format!(
                    "subcritical_beta = {sb} must lie in [0, N)"
                )));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid must be non-empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.burn_in < 1 || self.thin < 1 {
            return Err(Error::Config("burn_in and thin must be >= 1".into()));
        }
        if self.replicas < 2 {
            return Err(Error::Config("need at least 2 replicas".into()));
        }
        if self.samples_per_n < self.replicas {
            return Err(Error::Config("samples_per_n must cover the replicas".into()));
        }
        if self.exact_matching_samples > crate::transport::EXACT_CAP {
            return Err(Error::Config(format!(
                "exact_matching_samples exceeds the exact solver cap {}",
                crate::transport::EXACT_CAP
            )));
        }
        if self.langevin.dt <= 0.0 {
            return Err(Error::Config("langevin.dt must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates() {
        ExperimentConfig::default_critical(2, 1).validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{
            "experiment": "x", "n_dim": 2, "beta": 2.0,
            "n_grid": [16, 32], "seed": 1, "not_a_key": true
        }"#;
        let res: std::result::Result<ExperimentConfig, _> = serde_json::from_str(json);
        assert!(res.is_err());
    }

    #[test]
    fn beta_above_critical_rejected() {
        let mut cfg = ExperimentConfig::default_critical(2, 1);
        cfg.beta = 2.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_must_increase() {
        let mut cfg = ExperimentConfig::default_critical(2, 1);
        cfg.n_grid = vec![32, 16];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn roundtrips_through_json() {
        let cfg = ExperimentConfig::default_critical(3, 9);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.n_dim, 3);
        assert_eq!(back.langevin.dt, cfg.langevin.dt);
    }
}
