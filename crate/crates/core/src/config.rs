//! System configuration: every scenario-independent parameter of the network,
//! plus the flat `key = value` config-file format consumed by the CLI.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Scenario-independent system parameters.
///
/// Powers and variances are linear (watts); `ber_target` must stay below 0.3
/// or the SNR-gap constant ζ is undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Number of cognitive users N.
    pub n_users: usize,
    /// Number of subcarriers K.
    pub n_subcarriers: usize,
    /// Total average transmit power budget P_t (watts).
    pub p_total: f64,
    /// Peak aggregate interference threshold I_th at the primary receiver (watts).
    pub i_threshold: f64,
    /// Common BER target ξ, in (0, 0.3).
    pub ber_target: f64,
    /// Receiver noise power σ²_n (watts).
    pub noise_power: f64,
    /// Received primary-network interference power σ²_ps (watts).
    pub primary_interference_power: f64,
    /// Bounds of the uniform draw of the per-(user, subcarrier) direct-link
    /// mean power gains.
    pub direct_mean_range: (f64, f64),
    /// Mean of the cross-link channel draws.
    pub cross_mean: Complex64,
    /// Total complex variance E|H - μ|² of the cross-link channel.
    pub cross_variance: f64,
    /// Variance of the cross-link estimation error (imperfect-CSI scenarios).
    pub cross_error_variance: f64,
    /// Variance of the cross-link channel estimate (imperfect-CSI scenarios).
    pub cross_estimate_variance: f64,
    /// Master seed; all randomness derives from it.
    pub rng_seed: u64,
}

impl SystemConfig {
    /// Validates every invariant; call after construction or parsing.
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_users == 0 {
            return Err(Error::param("n_users", "must be positive"));
        }
        if self.n_subcarriers == 0 {
            return Err(Error::param("n_subcarriers", "must be positive"));
        }
        for (name, v) in [
            ("p_total", self.p_total),
            ("i_threshold", self.i_threshold),
            ("noise_power", self.noise_power),
            (
                "primary_interference_power",
                self.primary_interference_power,
            ),
            ("cross_variance", self.cross_variance),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::param(
                    name,
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        if !(self.ber_target > 0.0 && self.ber_target < 0.3) {
            return Err(Error::param(
                "ber_target",
                format!("must lie in (0, 0.3), got {}", self.ber_target),
            ));
        }
        let (lo, hi) = self.direct_mean_range;
        if !(lo >= 0.0 && hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(
                "direct_mean_range",
                format!("must satisfy 0 <= lo <= hi, got ({lo}, {hi})"),
            ));
        }
        if self.cross_error_variance < 0.0 {
            return Err(Error::param("cross_error_variance", "must be nonnegative"));
        }
        if self.cross_estimate_variance < 0.0 {
            return Err(Error::param(
                "cross_estimate_variance",
                "must be nonnegative",
            ));
        }
        Ok(())
    }

    /// Combined noise-plus-primary-interference power σ²_n + σ²_ps.
    pub fn total_noise(&self) -> f64 {
        self.noise_power + self.primary_interference_power
    }

    /// Nominal per-draw power P_t/K used in the SINR definition.
    pub fn nominal_power(&self) -> f64 {
        self.p_total / self.n_subcarriers as f64
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_users: 3,
            n_subcarriers: 64,
            p_total: 30.0,
            i_threshold: 10.0,
            ber_target: 1e-2,
            noise_power: 0.5,
            primary_interference_power: 0.5,
            direct_mean_range: (0.0, 2.0),
            cross_mean: Complex64::new(0.05, 0.0),
            cross_variance: 0.1,
            cross_error_variance: 0.1,
            cross_estimate_variance: 1.0,
            rng_seed: 42,
        }
    }
}

/// A parsed flat config file: `key = value` lines, `#` comments, keys may be
/// section-prefixed (`scenario.kind`, `sweep.grid`, ...).
#[derive(Debug, Clone, Default)]
pub struct KeyValueFile {
    entries: BTreeMap<String, String>,
}

impl KeyValueFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line: idx + 1,
                    reason: "empty key".into(),
                });
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(KeyValueFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, Error> {
        self.get(key).ok_or_else(|| Error::ConfigKey {
            key: key.to_string(),
            reason: "missing required key".into(),
        })
    }

    pub fn f64(&self, key: &str) -> Result<f64, Error> {
        parse_f64(key, self.require(key)?)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, Error> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, Error> {
        match self.get(key) {
            Some(v) => v.parse::<usize>().map_err(|e| Error::ConfigKey {
                key: key.to_string(),
                reason: e.to_string(),
            }),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, Error> {
        match self.get(key) {
            Some(v) => v.parse::<u64>().map_err(|e| Error::ConfigKey {
                key: key.to_string(),
                reason: e.to_string(),
            }),
            None => Ok(default),
        }
    }

    /// Pair values are two numbers separated by whitespace or a comma.
    pub fn pair_or(&self, key: &str, default: (f64, f64)) -> Result<(f64, f64), Error> {
        match self.get(key) {
            Some(v) => {
                let parts: Vec<&str> = v
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .collect();
                if parts.len() != 2 {
                    return Err(Error::ConfigKey {
                        key: key.to_string(),
                        reason: format!("expected two numbers, got `{v}`"),
                    });
                }
                Ok((parse_f64(key, parts[0])?, parse_f64(key, parts[1])?))
            }
            None => Ok(default),
        }
    }

    /// Comma/whitespace-separated list of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, Error> {
        let raw = self.require(key)?;
        let vals: Result<Vec<f64>, Error> = raw
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64(key, s))
            .collect();
        vals
    }

    /// Builds a `SystemConfig`, falling back to defaults for absent keys.
    pub fn system_config(&self) -> Result<SystemConfig, Error> {
        let d = SystemConfig::default();
        let cross_mean = self.pair_or("cross_mean", (d.cross_mean.re, d.cross_mean.im))?;
        let cfg = SystemConfig {
            n_users: self.usize_or("n_users", d.n_users)?,
            n_subcarriers: self.usize_or("n_subcarriers", d.n_subcarriers)?,
            p_total: self.f64_or("p_total", d.p_total)?,
            i_threshold: self.f64_or("i_threshold", d.i_threshold)?,
            ber_target: self.f64_or("ber_target", d.ber_target)?,
            noise_power: self.f64_or("noise_power", d.noise_power)?,
            primary_interference_power: self
                .f64_or("primary_interference_power", d.primary_interference_power)?,
            direct_mean_range: self.pair_or("direct_mean_range", d.direct_mean_range)?,
            cross_mean: Complex64::new(cross_mean.0, cross_mean.1),
            cross_variance: self.f64_or("cross_variance", d.cross_variance)?,
            cross_error_variance: self.f64_or("cross_error_variance", d.cross_error_variance)?,
            cross_estimate_variance: self
                .f64_or("cross_estimate_variance", d.cross_estimate_variance)?,
            rng_seed: self.u64_or("rng_seed", d.rng_seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_f64(key: &str, raw: &str) -> Result<f64, Error> {
    raw.parse::<f64>().map_err(|e| Error::ConfigKey {
        key: key.to_string(),
        reason: e.to_string(),
    })
}
