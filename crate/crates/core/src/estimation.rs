//! Cross-link estimation-error model.
//!
//! The actual cross-link gain decomposes as H = Ĥ + ΔH, with the estimate and
//! the error statistically correlated: cov(Ĥ, ΔH) = δ²_ΔH. Conditioning on
//! the observed estimate gives closed-form complex-Gaussian posteriors for
//! both the error and the true channel, parameterized by the correlation
//! factor ρ alone:
//!
//!   ΔH | Ĥ ~ CN(ρ²Ĥ, (1-ρ²)δ²_ΔH)
//!   H  | Ĥ ~ CN((1+ρ²)Ĥ, (1-ρ²)δ²_ΔH)
//!
//! The worst-case magnitude bound Ω comes from Chebyshev's inequality on the
//! error posterior.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Correlated estimation-error model for the cross links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationModel {
    /// Correlation factor ρ between estimate and error, in [0, 1].
    pub correlation: f64,
    /// Error variance δ²_ΔH.
    pub error_variance: f64,
    /// Estimate variance δ²_Ĥ.
    pub estimate_variance: f64,
}

impl EstimationModel {
    /// Direct construction. Requires δ²_Ĥ ≥ δ²_ΔH ≥ 0 (the joint sampling
    /// construction needs the slack), and ρ > 0 needs a positive error
    /// variance.
    pub fn new(
        correlation: f64,
        error_variance: f64,
        estimate_variance: f64,
    ) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&correlation) || !correlation.is_finite() {
            return Err(Error::param(
                "correlation",
                format!("must lie in [0, 1], got {correlation}"),
            ));
        }
        if error_variance < 0.0 || !error_variance.is_finite() {
            return Err(Error::param("error_variance", "must be nonnegative"));
        }
        if correlation > 0.0 && error_variance == 0.0 {
            return Err(Error::param(
                "error_variance",
                "must be positive when the correlation is positive",
            ));
        }
        if estimate_variance < error_variance {
            return Err(Error::param(
                "estimate_variance",
                format!(
                    "must be >= error_variance for a valid joint draw \
                     (got {estimate_variance} < {error_variance})"
                ),
            ));
        }
        Ok(EstimationModel {
            correlation,
            error_variance,
            estimate_variance,
        })
    }

    /// Construction from (error variance, channel variance):
    /// ρ = sqrt(δ²_ΔH / (δ²_ΔH + δ²_H)).
    pub fn from_error_and_channel(
        error_variance: f64,
        channel_variance: f64,
        estimate_variance: f64,
    ) -> Result<Self, Error> {
        if error_variance < 0.0 || channel_variance <= 0.0 {
            return Err(Error::param(
                "error_variance",
                "needs error_variance >= 0 and channel_variance > 0",
            ));
        }
        let rho = (error_variance / (error_variance + channel_variance)).sqrt();
        EstimationModel::new(rho, error_variance, estimate_variance)
    }

    /// Degenerate perfect-knowledge model: no error, estimate is the channel.
    pub fn perfect(channel_variance: f64) -> Self {
        EstimationModel {
            correlation: 0.0,
            error_variance: 0.0,
            estimate_variance: channel_variance,
        }
    }

    /// Posterior mean/variance of the estimation error ΔH given the estimate.
    pub fn posterior_error_params(&self, estimate: Complex64) -> (Complex64, f64) {
        let r2 = self.correlation * self.correlation;
        (estimate * r2, (1.0 - r2) * self.error_variance)
    }

    /// Posterior mean/variance of the actual channel H given the estimate.
    pub fn posterior_channel_params(&self, estimate: Complex64) -> (Complex64, f64) {
        let r2 = self.correlation * self.correlation;
        (estimate * (1.0 + r2), (1.0 - r2) * self.error_variance)
    }

    /// Chebyshev bound Ω on the error magnitude: |ΔH given Ĥ| ≤ Ω holds with
    /// probability at least `pr`.
    ///
    /// Ω adds the magnitude of the complex conditional mean to the deviation
    /// term, so the bound is real and nonnegative.
    pub fn worst_case_bound(&self, estimate: Complex64, pr: f64) -> Result<f64, Error> {
        if !(0.0..1.0).contains(&pr) {
            return Err(Error::param(
                "pr",
                format!("must lie in [0, 1); the bound diverges at 1 (got {pr})"),
            ));
        }
        let (mean, var) = self.posterior_error_params(estimate);
        Ok((var / (1.0 - pr)).sqrt() + mean.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn posterior_error_uncorrelated() {
        let m = EstimationModel::new(0.0, 0.4, 1.0).unwrap();
        let (mean, var) = m.posterior_error_params(c(1.3, -0.2));
        assert_eq!(mean, c(0.0, 0.0));
        assert_eq!(var, 0.4);
    }

    #[test]
    fn posterior_error_fully_correlated() {
        let m = EstimationModel::new(1.0, 0.4, 1.0).unwrap();
        let (mean, var) = m.posterior_error_params(c(0.7, 0.1));
        assert_eq!(mean, c(0.7, 0.1));
        assert_eq!(var, 0.0);
    }

    #[test]
    fn posterior_error_hand_value() {
        // ρ=0.5, Ĥ=0.2+0.1i, δ²_ΔH=0.4 -> (0.05+0.025i, 0.3)
        let m = EstimationModel::new(0.5, 0.4, 1.0).unwrap();
        let (mean, var) = m.posterior_error_params(c(0.2, 0.1));
        assert!((mean - c(0.05, 0.025)).norm() < 1e-15);
        assert!((var - 0.3).abs() < 1e-15);
    }

    #[test]
    fn posterior_channel_cases() {
        let m = EstimationModel::new(0.0, 0.4, 1.0).unwrap();
        let (mean, var) = m.posterior_channel_params(c(0.9, 0.0));
        assert_eq!(mean, c(0.9, 0.0));
        assert_eq!(var, 0.4);

        let m = EstimationModel::new(1.0, 0.4, 1.0).unwrap();
        let (mean, var) = m.posterior_channel_params(c(0.9, 0.0));
        assert_eq!(mean, c(1.8, 0.0));
        assert_eq!(var, 0.0);

        // ρ=0.6, Ĥ=1, δ²_ΔH=0.5 -> (1.36, 0.32)
        let m = EstimationModel::new(0.6, 0.5, 1.0).unwrap();
        let (mean, var) = m.posterior_channel_params(c(1.0, 0.0));
        assert!((mean.re - 1.36).abs() < 1e-15);
        assert_eq!(mean.im, 0.0);
        assert!((var - 0.32).abs() < 1e-15);
    }

    #[test]
    fn worst_case_bound_values() {
        // ρ=0, pr=0.75, δ²_ΔH=1 -> Ω = 2
        let m = EstimationModel::new(0.0, 1.0, 1.0).unwrap();
        assert!((m.worst_case_bound(c(0.3, 0.4), 0.75).unwrap() - 2.0).abs() < 1e-15);
        // ρ=0, pr=0 -> one-sigma bound
        assert!((m.worst_case_bound(c(0.0, 0.0), 0.0).unwrap() - 1.0).abs() < 1e-15);
        // ρ=0.5, Ĥ=0.4, δ²_ΔH=0.16, pr=0.9 -> sqrt(0.12/0.1) + 0.1
        let m = EstimationModel::new(0.5, 0.16, 1.0).unwrap();
        let omega = m.worst_case_bound(c(0.4, 0.0), 0.9).unwrap();
        assert!((omega - 1.1954451150).abs() < 1e-9, "got {omega}");
    }

    #[test]
    fn worst_case_bound_rejects_pr_one() {
        let m = EstimationModel::new(0.0, 1.0, 1.0).unwrap();
        assert!(m.worst_case_bound(c(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn construction_validates() {
        assert!(EstimationModel::new(1.2, 0.1, 1.0).is_err());
        assert!(EstimationModel::new(0.5, 0.0, 1.0).is_err());
        assert!(EstimationModel::new(0.5, 0.4, 0.3).is_err());
        // ρ from variances: δ²_ΔH = δ²_H -> ρ = sqrt(1/2)
        let m = EstimationModel::from_error_and_channel(0.1, 0.1, 0.5).unwrap();
        assert!((m.correlation - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
