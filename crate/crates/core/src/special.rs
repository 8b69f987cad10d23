//! Special functions: error function, scaled complementary error function,
//! and the regularized incomplete gamma function at integer shape.
//!
//! The incomplete gamma is only ever needed at integer shape K (a subcarrier
//! count), where the Poisson finite sum
//! Q(K, x) = e^{-x} Σ_{j<K} x^j / j!
//! is exact and cheap.

/// Error function, accurate to ~1 ulp.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function, erfcx(x) = exp(x²)·erfc(x).
///
/// Stays representable for large positive x where both factors over/underflow.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfcx(-x) = 2 exp(x²) - erfcx(x); overflows for x < -26.6.
        let e = (x * x).min(f64::MAX.ln()).exp();
        return 2.0 * e - erfcx(-x);
    }
    if x < 6.0 {
        return (x * x).exp() * libm::erfc(x);
    }
    // Asymptotic series 1/(x√π) · Σ (-1)^n (2n-1)!! / (2x²)^n, truncated at
    // the smallest term (error is bounded by the first omitted term).
    let inv2x2 = 1.0 / (2.0 * x * x);
    let mut sum = 1.0;
    let mut mag = 1.0;
    for n in 1..40 {
        let next = mag * (2.0 * n as f64 - 1.0) * inv2x2;
        if next >= mag {
            break;
        }
        sum += if n % 2 == 1 { -next } else { next };
        mag = next;
        if next < 1e-17 * sum {
            break;
        }
    }
    sum / (x * core::f64::consts::PI.sqrt())
}

/// ln(k!) without overflow.
#[inline]
pub fn ln_factorial(k: usize) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Regularized upper incomplete gamma Q(k, x) = Γ(k, x)/Γ(k) for integer k ≥ 1.
///
/// Q(k, x) equals the probability that a Poisson(x) count is below k, which is
/// the Poisson sum above; evaluated in log space once e^{-x} underflows.
pub fn reg_upper_gamma(k: usize, x: f64) -> f64 {
    assert!(k >= 1, "integer shape k must be >= 1");
    assert!(
        x >= 0.0 && x.is_finite(),
        "x must be finite and nonnegative"
    );
    if x == 0.0 {
        return 1.0;
    }
    if x < 700.0 {
        let mut term = (-x).exp();
        let mut sum = term;
        for j in 1..k {
            term *= x / j as f64;
            sum += term;
        }
        return sum.clamp(0.0, 1.0);
    }
    // log-sum-exp over the Poisson terms
    let ln_x = x.ln();
    let logs: Vec<f64> = (0..k)
        .map(|j| -x + j as f64 * ln_x - ln_factorial(j))
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m < -745.0 {
        return 0.0;
    }
    let sum: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    (m.exp() * sum).clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma P(k, x) = 1 - Q(k, x).
#[inline]
pub fn reg_lower_gamma(k: usize, x: f64) -> f64 {
    (1.0 - reg_upper_gamma(k, x)).clamp(0.0, 1.0)
}
