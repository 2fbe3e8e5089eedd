//! Flat key=value run configuration with documented defaults.
//!
//! Every key mirrors a parameter of the deployment, energy, behavior,
//! split/fold, feature-selection, or classifier machinery. Lines starting
//! with `#` are comments; unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use crate::attack::BehaviorParams;
use crate::classifiers::{GbtParams, LogisticParams, SvmParams, TreeParams};
use crate::error::{Error, Result};
use crate::network::{Behavior, DeploymentConfig, EnergyParams};

/// Environment variable that overrides every seed in the run, for CI.
pub const SEED_ENV_VAR: &str = "FOGSHIELD_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub deployment: DeploymentConfig,
    pub energy: EnergyParams,
    pub behavior: BehaviorParams,
    pub attack_mix: BTreeMap<Behavior, f64>,
    /// Wall-clock milliseconds one round represents, for lifetime reports.
    pub ms_per_round: f64,
    pub train_ratio: f64,
    pub split_seed: u64,
    pub fold_seed: u64,
    pub k_folds: usize,
    /// Features taken from each ranking before the union.
    pub k_each: usize,
    pub tree: TreeParams,
    pub gbt: GbtParams,
    pub logistic: LogisticParams,
    pub svm: SvmParams,
    /// False-alarm weight of the cost metric.
    pub cost_phi: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            deployment: DeploymentConfig::default(),
            energy: EnergyParams::default(),
            behavior: BehaviorParams::default(),
            attack_mix: BTreeMap::new(),
            ms_per_round: 1.0,
            train_ratio: 0.8,
            split_seed: 42,
            fold_seed: 42,
            k_folds: 5,
            k_each: 10,
            tree: TreeParams::default(),
            gbt: GbtParams::default(),
            logistic: LogisticParams::default(),
            svm: SvmParams::default(),
            cost_phi: 1.0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value '{value}' for key '{key}'")))
}

impl RunConfig {
    /// Parses a config file; keys not set keep their defaults.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "{}:{}: expected key=value, found '{line}'",
                    path.display(),
                    i + 1
                )));
            };
            config.apply_key(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        self.energy.validate()?;
        self.behavior.validate()?;
        if !(self.ms_per_round > 0.0) {
            return Err(Error::config("ms_per_round must be positive"));
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::config("train_ratio must lie in (0,1)"));
        }
        if self.k_folds < 2 {
            return Err(Error::config("k_folds must be at least 2"));
        }
        if self.k_each == 0 {
            return Err(Error::config("k_each must be positive"));
        }
        let mix_sum: f64 = self.attack_mix.values().sum();
        if mix_sum > 1.0 + 1e-12 {
            return Err(Error::config("attack mix fractions must sum to at most 1"));
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "area_width" => self.deployment.area_width = parse_value(key, value)?,
            "area_height" => self.deployment.area_height = parse_value(key, value)?,
            "sensor_count" => self.deployment.sensor_count = parse_value(key, value)?,
            "fog_count" => self.deployment.fog_count = parse_value(key, value)?,
            "relay_fraction" => self.deployment.relay_fraction = parse_value(key, value)?,
            "sensor_range" => self.deployment.sensor_range = parse_value(key, value)?,
            "relay_range" => self.deployment.relay_range = parse_value(key, value)?,
            "threshold_distance" => {
                self.deployment.threshold_distance = parse_value(key, value)?
            }
            "packet_bits" => self.deployment.packet_bits = parse_value(key, value)?,
            "rounds" => self.deployment.rounds = parse_value(key, value)?,
            "seed" => self.deployment.seed = parse_value(key, value)?,
            "phi" => self.energy.phi = parse_value(key, value)?,
            "beta1" => self.energy.beta1 = parse_value(key, value)?,
            "beta2" => self.energy.beta2 = parse_value(key, value)?,
            "e0" => self.energy.e0 = parse_value(key, value)?,
            "malicious_boost" => self.energy.malicious_boost = parse_value(key, value)?,
            "p_opt" => self.energy.p_opt = parse_value(key, value)?,
            "flood_rate_multiplier" => {
                self.behavior.flood_rate_multiplier = parse_value(key, value)?
            }
            "blackhole_drop_prob" => self.behavior.blackhole_drop_prob = parse_value(key, value)?,
            "selective_drop_prob" => self.behavior.selective_drop_prob = parse_value(key, value)?,
            "grayhole_drop_prob" => self.behavior.grayhole_drop_prob = parse_value(key, value)?,
            "grayhole_active_duty" => {
                self.behavior.grayhole_active_duty = parse_value(key, value)?
            }
            "mix_flooding" => {
                self.set_mix(Behavior::Flooding, parse_value(key, value)?)?;
            }
            "mix_blackhole" => {
                self.set_mix(Behavior::BlackHole, parse_value(key, value)?)?;
            }
            "mix_selective" => {
                self.set_mix(Behavior::SelectiveForwarding, parse_value(key, value)?)?;
            }
            "mix_grayhole" => {
                self.set_mix(Behavior::GrayHole, parse_value(key, value)?)?;
            }
            "ms_per_round" => self.ms_per_round = parse_value(key, value)?,
            "train_ratio" => self.train_ratio = parse_value(key, value)?,
            "split_seed" => self.split_seed = parse_value(key, value)?,
            "fold_seed" => self.fold_seed = parse_value(key, value)?,
            "k_folds" => self.k_folds = parse_value(key, value)?,
            "k_each" => self.k_each = parse_value(key, value)?,
            "tree_max_depth" => self.tree.max_depth = parse_value(key, value)?,
            "tree_min_samples_split" => self.tree.min_samples_split = parse_value(key, value)?,
            "tree_min_gain" => self.tree.min_gain = parse_value(key, value)?,
            "gbt_rounds" => self.gbt.n_rounds = parse_value(key, value)?,
            "gbt_learning_rate" => self.gbt.learning_rate = parse_value(key, value)?,
            "gbt_lambda" => self.gbt.lambda = parse_value(key, value)?,
            "gbt_gamma" => self.gbt.gamma = parse_value(key, value)?,
            "gbt_max_depth" => self.gbt.max_depth = parse_value(key, value)?,
            "logistic_learning_rate" => {
                self.logistic.learning_rate = parse_value(key, value)?
            }
            "logistic_epochs" => self.logistic.epochs = parse_value(key, value)?,
            "logistic_l2" => self.logistic.l2 = parse_value(key, value)?,
            "logistic_seed" => self.logistic.seed = parse_value(key, value)?,
            "svm_c" => self.svm.c = parse_value(key, value)?,
            "svm_learning_rate" => self.svm.learning_rate = parse_value(key, value)?,
            "svm_epochs" => self.svm.epochs = parse_value(key, value)?,
            "cost_phi" => self.cost_phi = parse_value(key, value)?,
            other => {
                return Err(Error::config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }

    fn set_mix(&mut self, behavior: Behavior, fraction: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::config("attack mix fractions must lie in [0,1]"));
        }
        if fraction == 0.0 {
            self.attack_mix.remove(&behavior);
        } else {
            self.attack_mix.insert(behavior, fraction);
        }
        Ok(())
    }

    /// Forces every seed in the run to the given value.
    pub fn override_seeds(&mut self, seed: u64) {
        self.deployment.seed = seed;
        self.split_seed = seed;
        self.fold_seed = seed;
        self.logistic.seed = seed;
    }

    /// Reads the CI seed override from the environment.
    pub fn env_seed() -> Result<Option<u64>> {
        match std::env::var(SEED_ENV_VAR) {
            Ok(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("{SEED_ENV_VAR} must be an integer"))),
            Err(_) => Ok(None),
        }
    }
}
