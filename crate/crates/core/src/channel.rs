//! Channel sampling: direct-link Rayleigh power gains, correlated cross-link
//! draws, and the per-draw SINR matrix.
//!
//! Complex Gaussian convention: `CN(μ, v)` means E|X - μ|² = v with the real
//! and imaginary parts each carrying v/2.
//!
//! The joint (Ĥ, ΔH) draw uses the construction Ĥ = μ + ΔH + W with
//! W independent of ΔH and var(W) = δ²_Ĥ - δ²_ΔH, which realizes
//! cov(Ĥ, ΔH) = δ²_ΔH exactly.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::Error;
use crate::estimation::EstimationModel;
use crate::mat::Mat;

/// One draw of all channel state: direct power gains, cross-link gains with
/// their estimates and errors, and the resulting SINR matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// |H^ss_{n,k}|², users × subcarriers.
    pub direct_power_gains: Mat<f64>,
    /// Actual cross-link gains H^sp_k toward the primary receiver.
    pub cross_gains: Vec<Complex64>,
    /// Known channel estimates Ĥ^sp_k.
    pub cross_estimates: Vec<Complex64>,
    /// Estimation errors ΔH^sp_k; `cross_gains = cross_estimates + cross_errors`
    /// holds exactly by construction.
    pub cross_errors: Vec<Complex64>,
    /// Received SINR γ_{n,k} at nominal per-subcarrier power P_t/K.
    pub sinr: Mat<f64>,
}

/// Draws `CN(0, variance)` in the total-variance convention.
fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    if variance == 0.0 {
        // keep the stream position independent of degenerate variances? No:
        // a zero-variance draw consumes nothing, by construction.
        return Complex64::new(0.0, 0.0);
    }
    let sd = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sd, im * sd)
}

/// Channel sampler for one experiment: the per-(n,k) direct-link mean power
/// gains are drawn once at construction and reused for every realization.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cfg: SystemConfig,
    est: EstimationModel,
    direct_means: Mat<f64>,
}

impl ChannelSampler {
    /// Draws the direct-link means uniformly from `cfg.direct_mean_range`.
    pub fn new<R: Rng>(
        cfg: &SystemConfig,
        est: &EstimationModel,
        rng: &mut R,
    ) -> Result<Self, Error> {
        cfg.validate()?;
        let (lo, hi) = cfg.direct_mean_range;
        let direct_means = Mat::from_fn(cfg.n_users, cfg.n_subcarriers, |_, _| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        });
        Ok(ChannelSampler {
            cfg: cfg.clone(),
            est: *est,
            direct_means,
        })
    }

    pub fn direct_means(&self) -> &Mat<f64> {
        &self.direct_means
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn estimation(&self) -> &EstimationModel {
        &self.est
    }

    /// Draws one realization.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> ChannelRealization {
        let n = self.cfg.n_users;
        let k = self.cfg.n_subcarriers;

        // exponential power gains by inverse cdf, mean from the frozen draw
        let direct_power_gains = Mat::from_fn(n, k, |r, c| {
            let u: f64 = rng.random();
            -self.direct_means.get(r, c) * (1.0 - u).ln()
        });

        let err_var = self.est.error_variance;
        let extra_var = self.est.estimate_variance - err_var;
        let mut cross_gains = Vec::with_capacity(k);
        let mut cross_estimates = Vec::with_capacity(k);
        let mut cross_errors = Vec::with_capacity(k);
        for _ in 0..k {
            let delta = complex_gaussian(rng, err_var);
            let w = complex_gaussian(rng, extra_var);
            let estimate = self.cfg.cross_mean + delta + w;
            cross_estimates.push(estimate);
            cross_errors.push(delta);
            cross_gains.push(estimate + delta);
        }

        let scale = self.cfg.nominal_power() / self.cfg.total_noise();
        let sinr = Mat::from_fn(n, k, |r, c| scale * direct_power_gains.get(r, c));

        ChannelRealization {
            direct_power_gains,
            cross_gains,
            cross_estimates,
            cross_errors,
            sinr,
        }
    }
}

/// One-shot sampling: draws the direct-link means and a single realization
/// from the same stream.
pub fn sample_realization<R: Rng>(
    cfg: &SystemConfig,
    est: &EstimationModel,
    rng: &mut R,
) -> Result<ChannelRealization, Error> {
    Ok(ChannelSampler::new(cfg, est, rng)?.draw(rng))
}
