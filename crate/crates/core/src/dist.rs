//! Analytic distribution machinery.
//!
//! * Gaussian approximation of the aggregate cross-link power N^sp = Σ|H_k|²
//!   (central-limit argument on a noncentral chi-square),
//! * closed-form cdf/pdf of the received SINR under the joint power and
//!   interference cap,
//! * moment-matched scaled chi-square approximation for non-equal-weighted
//!   chi-square sums,
//! * the regularized-incomplete-gamma collision probability and the
//!   deterministic power cap that provably enforces a chance constraint,
//! * per-scenario Gaussian parameterizations of N^sp under imperfect CSI.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::allocator::ScenarioSpec;
use crate::error::Error;
use crate::estimation::EstimationModel;
use crate::special::{erf, erfc, erfcx, ln_factorial, reg_lower_gamma, reg_upper_gamma};

const SQRT_PI: f64 = 1.772453850905516;

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for v in values {
        let t = sum + v;
        compensation += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + compensation
}

/// Mean/variance pair of a (real) Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub variance: f64,
}

/// What the `shared_variance` argument of [`chi_square_sum_gaussian_with`] denotes.
///
/// The printed moment formulas treat it as a per-component variance (each of
/// the real/imaginary parts carries the full value). A sampler that draws
/// `CN(μ, v)` with total complex variance v = E|X-μ|² carries v/2 per
/// component, so its moments match the `TotalComplex` reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceConvention {
    PerComponent,
    TotalComplex,
}

/// Gaussian approximation of N^sp = Σ_k |H_k|² for complex Gaussian H_k with
/// the given means and a shared variance:
/// mean δ²(2K + μ'), variance δ⁴(4K + 4μ'), μ' = Σ|μ_k/δ|².
pub fn chi_square_sum_gaussian(
    channel_means: &[Complex64],
    shared_variance: f64,
) -> GaussianParams {
    chi_square_sum_gaussian_with(
        channel_means,
        shared_variance,
        VarianceConvention::PerComponent,
    )
}

/// [`chi_square_sum_gaussian`] with an explicit variance convention.
pub fn chi_square_sum_gaussian_with(
    channel_means: &[Complex64],
    shared_variance: f64,
    convention: VarianceConvention,
) -> GaussianParams {
    assert!(!channel_means.is_empty(), "need at least one subcarrier");
    assert!(shared_variance > 0.0, "shared variance must be positive");
    let var = match convention {
        VarianceConvention::PerComponent => shared_variance,
        VarianceConvention::TotalComplex => shared_variance / 2.0,
    };
    let k = channel_means.len() as f64;
    let noncentrality: f64 = channel_means.iter().map(|m| m.norm_sqr() / var).sum();
    GaussianParams {
        mean: var * (2.0 * k + noncentrality),
        variance: var * var * (4.0 * k + 4.0 * noncentrality),
    }
}

/// Everything the SINR cdf/pdf closed forms depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrDistParams {
    /// Mean of the exponential direct-link power gain.
    pub direct_mean: f64,
    /// σ²_n + σ²_ps.
    pub total_noise: f64,
    pub p_total: f64,
    pub i_threshold: f64,
    pub k_subcarriers: usize,
    /// Gaussian approximation of the aggregate cross-link power.
    pub nsp: GaussianParams,
}

impl SinrDistParams {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("direct_mean", self.direct_mean),
            ("total_noise", self.total_noise),
            ("p_total", self.p_total),
            ("i_threshold", self.i_threshold),
            ("nsp.variance", self.nsp.variance),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::param(
                    name,
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        if self.k_subcarriers == 0 {
            return Err(Error::param("k_subcarriers", "must be positive"));
        }
        Ok(())
    }

    // Shared pieces of the closed forms. With
    //   c  = KΓσ²-rate of the power-limited branch,
    //   h₀ = standardized distance of the branch point I·K/P from the N^sp mean,
    //   h₁Γ = growth of the completed-square erf argument,
    // the interference branch B = ½·exp(-cΓ - h₀²)·erfcx(h₀ + h₁Γ), which is
    // the printed closed form rearranged so nothing overflows.
    fn pieces(&self) -> (f64, f64, f64) {
        let k = self.k_subcarriers as f64;
        let sigma = self.total_noise;
        let dn = self.nsp.variance.sqrt();
        let c = k * sigma / (self.p_total * self.direct_mean);
        let h0 = (self.i_threshold * k / self.p_total - self.nsp.mean)
            / (2.0 * self.nsp.variance).sqrt();
        let h1 = dn * sigma / (2f64.sqrt() * self.direct_mean * self.i_threshold);
        (c, h0, h1)
    }
}

fn term_a(gamma: f64, c: f64, h0: f64) -> f64 {
    0.5 * (-c * gamma).exp() * (1.0 + erf(h0))
}

fn term_b(gamma: f64, c: f64, h0: f64, h1: f64) -> f64 {
    let h = h0 + h1 * gamma;
    // t = exp(h² - h₀²)·erfc(h), evaluated without overflow on either side
    let t = if h >= 0.0 {
        (-h0 * h0).exp() * erfcx(h)
    } else {
        (h * h - h0 * h0).exp() * erfc(h)
    };
    0.5 * (-c * gamma).exp() * t
}

/// Unclamped SINR cdf 1 - A(Γ) - B(Γ). Analytically confined to [0, 1];
/// floating-point cancellation can stray a few ulps outside, which
/// [`sinr_cdf`] clamps away. Exposed for excursion diagnostics.
pub fn sinr_cdf_raw(gamma: f64, p: &SinrDistParams) -> f64 {
    let (c, h0, h1) = p.pieces();
    1.0 - term_a(gamma, c, h0) - term_b(gamma, c, h0, h1)
}

/// Closed-form cdf of the received SINR, clamped to [0, 1].
pub fn sinr_cdf(gamma: f64, p: &SinrDistParams) -> Result<f64, Error> {
    if !gamma.is_finite() {
        return Err(Error::NonFinite {
            name: "gamma",
            value: gamma,
        });
    }
    if gamma < 0.0 {
        return Err(Error::param(
            "gamma",
            format!("must be nonnegative, got {gamma}"),
        ));
    }
    p.validate()?;
    if gamma == 0.0 {
        // A(0) + B(0) = 1 analytically; skip the cancellation noise
        return Ok(0.0);
    }
    Ok(sinr_cdf_raw(gamma, p).clamp(0.0, 1.0))
}

/// Density of the received SINR: the exact derivative of [`sinr_cdf_raw`],
/// floored at zero.
pub fn sinr_pdf(gamma: f64, p: &SinrDistParams) -> Result<f64, Error> {
    if !gamma.is_finite() {
        return Err(Error::NonFinite {
            name: "gamma",
            value: gamma,
        });
    }
    if gamma < 0.0 {
        return Err(Error::param(
            "gamma",
            format!("must be nonnegative, got {gamma}"),
        ));
    }
    p.validate()?;
    let (c, h0, h1) = p.pieces();
    let h = h0 + h1 * gamma;
    let t = if h >= 0.0 {
        (-h0 * h0).exp() * erfcx(h)
    } else {
        (h * h - h0 * h0).exp() * erfc(h)
    };
    let density = 0.5
        * (-c * gamma).exp()
        * (c * (1.0 + erf(h0)) + (c - 2.0 * h1 * h) * t + 2.0 * h1 * (-h0 * h0).exp() / SQRT_PI);
    Ok(density.max(0.0))
}

/// A weighted noncentral chi-square ξ·χ²_D(δ'): the moment-matched stand-in
/// for a sum of non-equal-weighted noncentral chi-square terms.
///
/// The weight is named `chi_weight` to keep it apart from the BER target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledChiSquare {
    /// Noncentrality δ'.
    pub noncentrality: f64,
    /// Degrees of freedom D = 2K.
    pub dof: usize,
    /// Scale ξ.
    pub chi_weight: f64,
}

impl ScaledChiSquare {
    /// K = D/2, the subcarrier count behind this approximation.
    pub fn k(&self) -> usize {
        self.dof / 2
    }

    /// cdf at `x`, through the central-chi-square reduction
    /// P(ξχ²_D(δ') ≤ x) ≈ P(K, (x/ξ) / (2(1 + δ'/D))).
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let d = self.dof as f64;
        let arg = (x / self.chi_weight) / (2.0 * (1.0 + self.noncentrality / d));
        reg_lower_gamma(self.k(), arg)
    }
}

/// Moment match Σ_k β_k|Ξ_k|² (unit-variance complex Gaussian Ξ_k with
/// squared-mean ratios `means`) to a single scaled chi-square:
/// δ' = Σμ, D = 2K, ξ = Σβ(2+μ) / (2K + Σμ).
pub fn weighted_chi_square_approx(
    weights: &[f64],
    means: &[f64],
) -> Result<ScaledChiSquare, Error> {
    if weights.len() != means.len() {
        return Err(Error::LengthMismatch {
            left_name: "weights",
            left: weights.len(),
            right_name: "means",
            right: means.len(),
        });
    }
    if weights.is_empty() {
        return Err(Error::param("weights", "must be nonempty"));
    }
    if weights.iter().any(|&b| b.is_nan() || b <= 0.0) {
        return Err(Error::param("weights", "must all be positive"));
    }
    if means.iter().any(|&m| m < 0.0) {
        return Err(Error::param("means", "must all be nonnegative"));
    }
    let k = weights.len();
    let noncentrality = compensated_sum(means.iter().copied());
    // ξ = Σβ(2+μ) / (2K+Σμ) is the (2+μ)-weighted mean of β; the running
    // weighted mean returns the common β bit-for-bit in the equal-weight case
    // (the increments are exactly zero), where the approximation is exact.
    let mut chi_weight = 0.0;
    let mut total = 0.0;
    for (b, m) in weights.iter().zip(means) {
        let w = 2.0 + m;
        total += w;
        chi_weight += (b - chi_weight) * (w / total);
    }
    Ok(ScaledChiSquare {
        noncentrality,
        dof: 2 * k,
        chi_weight,
    })
}

/// Probability that the approximated interference exceeds `i_th`:
/// Q(K, (i_th/ξ) / (2(1 + δ'/D))).
pub fn collision_prob(i_th: f64, s: &ScaledChiSquare) -> Result<f64, Error> {
    if i_th.is_nan() || i_th <= 0.0 {
        return Err(Error::param(
            "i_th",
            format!("must be positive, got {i_th}"),
        ));
    }
    if s.chi_weight <= 0.0 || !s.chi_weight.is_finite() {
        return Err(Error::param("chi_weight", "must be positive and finite"));
    }
    if s.dof == 0 || !s.dof.is_multiple_of(2) {
        return Err(Error::param("dof", "must be a positive even integer"));
    }
    if s.noncentrality < 0.0 || s.noncentrality.is_nan() {
        return Err(Error::param("noncentrality", "must be nonnegative"));
    }
    let d = s.dof as f64;
    let arg = (i_th / s.chi_weight) / (2.0 * (1.0 + s.noncentrality / d));
    Ok(reg_upper_gamma(s.k(), arg))
}

/// Deterministic interference budget under which the probabilistic collision
/// constraint provably holds:
/// Ī = K·i_th / [ (K!)^{1/K} · ( -ln(1 - (1-eps)^{1/K}) ) ].
///
/// Any allocation with Σ_k α_k Σ_n φP ≤ Ī has collision probability ≤ eps.
pub fn deterministic_cap(i_th: f64, eps: f64, k: usize) -> Result<f64, Error> {
    if k < 2 {
        return Err(Error::param("k", format!("needs k >= 2, got {k}")));
    }
    if eps.is_nan() || eps <= 0.0 || eps >= 1.0 {
        return Err(Error::param(
            "eps",
            format!("must lie in (0, 1), got {eps}"),
        ));
    }
    if i_th.is_nan() || i_th <= 0.0 {
        return Err(Error::param(
            "i_th",
            format!("must be positive, got {i_th}"),
        ));
    }
    let factorial_root = (ln_factorial(k) / k as f64).exp();
    // q = 1 - (1-eps)^{1/K}, kept accurate for small eps and large K
    let q = -f64::exp_m1(f64::ln_1p(-eps) / k as f64);
    let ln_q = q.ln(); // q in (0,1) so this is negative
    Ok(k as f64 * i_th / (factorial_root * (-ln_q)))
}

/// Per-scenario Gaussian parameterization of the aggregate cross-link power
/// N^sp (or its probabilistic-case analogue N̂^sp) under imperfect CSI.
pub fn nsp_params(
    scenario: &ScenarioSpec,
    est: &EstimationModel,
    k_subcarriers: usize,
) -> Result<GaussianParams, Error> {
    if k_subcarriers == 0 {
        return Err(Error::param("k_subcarriers", "must be positive"));
    }
    let k = k_subcarriers as f64;
    let est_var = est.estimate_variance;
    let err_var = est.error_variance;
    match scenario {
        ScenarioSpec::PerfectDeterministic => Err(Error::Contract(
            "perfect-CSI scenario has no posterior N^sp; use chi_square_sum_gaussian on the \
             true channel statistics instead"
                .into(),
        )),
        ScenarioSpec::AverageCase { rho } => {
            // zero-mean posterior channel with variance δ²_Ĥ(1+ρ²)²
            let r2 = rho * rho;
            let v = est_var * (1.0 + r2) * (1.0 + r2);
            Ok(GaussianParams {
                mean: 2.0 * k * v,
                variance: 4.0 * k * v * v,
            })
        }
        ScenarioSpec::WorstCase { rho, pr } => {
            let r2 = rho * rho;
            let v = est_var * (1.0 + r2) * (1.0 + r2);
            // squared posterior mean from the Chebyshev bound, per subcarrier
            let mean_sq = err_var * (1.0 - r2) / (1.0 - pr);
            let noncentrality = k * mean_sq / v;
            Ok(GaussianParams {
                mean: v * (2.0 * k + noncentrality),
                variance: v * v * (4.0 * k + 4.0 * noncentrality),
            })
        }
        ScenarioSpec::Probabilistic { rho, .. } => {
            let r2 = rho * rho;
            let a = (1.0 + r2) * (1.0 + r2);
            let b = (1.0 - r2) * (1.0 - r2);
            Ok(GaussianParams {
                mean: 2.0 * k * est_var * a + 2.0 * k * b * err_var,
                variance: 4.0 * k * est_var * est_var * a * a,
            })
        }
    }
}
