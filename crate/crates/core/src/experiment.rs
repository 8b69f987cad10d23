//! Monte-Carlo harness: parameter sweeps over seeded realization sets,
//! empirical-cdf validation of the analytic SINR distribution, the weighted
//! chi-square approximation check, and the collision-probability audit.
//!
//! All randomness flows from one master seed. Per-trial seeds are derived
//! from (master seed, point index, trial index), so trials are independent
//! and may run in any order without changing results. The direct-link mean
//! gains are drawn once per sweep from a dedicated stream, keeping grid
//! points comparable.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::allocator::{scenario_weights, solve, verify_kkt, AllocationResult, ScenarioSpec};
use crate::channel::ChannelSampler;
use crate::config::SystemConfig;
use crate::dist::{
    chi_square_sum_gaussian_with, weighted_chi_square_approx, ScaledChiSquare, SinrDistParams,
    VarianceConvention,
};
use crate::error::Error;
use crate::estimation::EstimationModel;

/// Which scalar a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    IThreshold,
    PTotal,
    Rho,
    Pr,
    Eps,
    BerTarget,
    KSubcarriers,
}

impl SweepVariable {
    pub fn parse(name: &str) -> Result<Self, Error> {
        Ok(match name {
            "i_th" | "i_threshold" => SweepVariable::IThreshold,
            "p_total" => SweepVariable::PTotal,
            "rho" => SweepVariable::Rho,
            "pr" => SweepVariable::Pr,
            "eps" => SweepVariable::Eps,
            "ber_target" => SweepVariable::BerTarget,
            "k_subcarriers" => SweepVariable::KSubcarriers,
            other => {
                return Err(Error::param(
                    "sweep.variable",
                    format!("unknown sweep variable `{other}`"),
                ))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::IThreshold => "i_th",
            SweepVariable::PTotal => "p_total",
            SweepVariable::Rho => "rho",
            SweepVariable::Pr => "pr",
            SweepVariable::Eps => "eps",
            SweepVariable::BerTarget => "ber_target",
            SweepVariable::KSubcarriers => "k_subcarriers",
        }
    }
}

/// One sweep experiment: a grid over one variable, `trials` Monte-Carlo
/// realizations per grid value, everything else from the base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub trials: usize,
    pub scenario: ScenarioSpec,
    pub base: SystemConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.grid.is_empty() {
            return Err(Error::param("sweep.grid", "must be nonempty"));
        }
        if self.trials == 0 {
            return Err(Error::param("sweep.trials", "must be at least 1"));
        }
        self.scenario.validate()?;
        self.base.validate()
    }

    /// Config and scenario at one grid value.
    fn apply(&self, value: f64) -> Result<(SystemConfig, ScenarioSpec), Error> {
        let mut cfg = self.base.clone();
        let mut scenario = self.scenario;
        match self.variable {
            SweepVariable::IThreshold => cfg.i_threshold = value,
            SweepVariable::PTotal => cfg.p_total = value,
            SweepVariable::BerTarget => cfg.ber_target = value,
            SweepVariable::KSubcarriers => {
                if value <= 0.0 || value.fract() != 0.0 {
                    return Err(Error::param(
                        "sweep.grid",
                        format!("k_subcarriers grid values must be positive integers, got {value}"),
                    ));
                }
                cfg.n_subcarriers = value as usize;
            }
            SweepVariable::Rho => match &mut scenario {
                ScenarioSpec::AverageCase { rho }
                | ScenarioSpec::WorstCase { rho, .. }
                | ScenarioSpec::Probabilistic { rho, .. } => *rho = value,
                ScenarioSpec::PerfectDeterministic => {
                    return Err(Error::Contract(
                        "cannot sweep rho under the perfect-CSI scenario".into(),
                    ))
                }
            },
            SweepVariable::Pr => match &mut scenario {
                ScenarioSpec::WorstCase { pr, .. } => *pr = value,
                _ => {
                    return Err(Error::Contract(
                        "pr sweeps require the worst-case scenario".into(),
                    ))
                }
            },
            SweepVariable::Eps => match &mut scenario {
                ScenarioSpec::Probabilistic { eps, .. } => *eps = value,
                _ => {
                    return Err(Error::Contract(
                        "eps sweeps require the probabilistic scenario".into(),
                    ))
                }
            },
        }
        cfg.validate()?;
        scenario.validate()?;
        Ok((cfg, scenario))
    }
}

/// Estimation model consistent with a scenario: the perfect case pins the
/// estimate to the true channel, imperfect cases take the scenario's ρ with
/// the config's error/estimate variances.
pub fn estimation_for(
    scenario: &ScenarioSpec,
    cfg: &SystemConfig,
) -> Result<EstimationModel, Error> {
    match scenario.rho() {
        None => Ok(EstimationModel::perfect(cfg.cross_variance)),
        Some(rho) => {
            EstimationModel::new(rho, cfg.cross_error_variance, cfg.cross_estimate_variance)
        }
    }
}

/// Aggregates of one grid value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub ase_mean: f64,
    pub ase_stderr: f64,
    /// Fraction of trials whose realized interference (true channels)
    /// exceeds the configured threshold.
    pub violation_rate: f64,
    pub mean_iterations: f64,
    pub ase_quantized_mean: f64,
    pub failed_trials: usize,
    /// Solves whose KKT report failed at relative tolerance 1e-3.
    pub kkt_failures: usize,
    /// First error message, when any trial failed.
    pub error: Option<String>,
}

/// Full sweep output plus the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub trials: usize,
    pub scenario: ScenarioSpec,
    pub base: SystemConfig,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Fixed-order CSV: value, ase_mean, ase_stderr, violation_rate,
    /// mean_iterations. One row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,ase_mean,ase_stderr,violation_rate,mean_iterations\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.value, p.ase_mean, p.ase_stderr, p.violation_rate, p.mean_iterations
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep result serializes")
    }

    pub fn any_failed(&self) -> bool {
        self.points.iter().any(|p| p.failed_trials > 0)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Seed for (master, point, trial); stable under reordering of execution.
pub fn derive_seed(master: u64, point: usize, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64(0xA11C_0000 ^ point as u64) ^ splitmix64(0x7E571 ^ trial as u64))
}

fn mean_seed(master: u64) -> u64 {
    splitmix64(master ^ 0xD1EC7_AEA15)
}

/// Runs the sweep: per grid value, `trials` independently seeded solves.
/// Solver errors are recorded per point and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, Error> {
    spec.validate()?;
    let master = spec.base.rng_seed;
    let mut points = Vec::with_capacity(spec.grid.len());
    for (point_idx, &value) in spec.grid.iter().enumerate() {
        let (cfg, scenario) = spec.apply(value)?;
        let est = estimation_for(&scenario, &cfg)?;
        // direct-link means: one draw per sweep, shared across grid points
        let mut means_rng = ChaCha8Rng::seed_from_u64(mean_seed(master));
        let sampler = ChannelSampler::new(&cfg, &est, &mut means_rng)?;

        let mut ases = Vec::with_capacity(spec.trials);
        let mut ase_q_sum = 0.0;
        let mut iter_sum = 0.0;
        let mut violations = 0usize;
        let mut failed = 0usize;
        let mut kkt_failures = 0usize;
        let mut first_error = None;
        for trial in 0..spec.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, point_idx, trial));
            let real = sampler.draw(&mut rng);
            match solve(&cfg, &est, &scenario, &real) {
                Ok(res) => {
                    if realized_interference(&res, &real) > cfg.i_threshold * (1.0 + 1e-9) {
                        violations += 1;
                    }
                    if !verify_kkt(&res, &res.duals, &res.weights, &cfg, 1e-3).pass {
                        kkt_failures += 1;
                    }
                    ase_q_sum += res.ase_quantized;
                    iter_sum += res.iterations as f64;
                    ases.push(res.ase);
                }
                Err(e) => {
                    failed += 1;
                    first_error.get_or_insert_with(|| e.to_string());
                }
            }
        }
        let n = ases.len().max(1) as f64;
        let mean = ases.iter().sum::<f64>() / n;
        let stderr = if ases.len() > 1 {
            let var = ases.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        points.push(SweepPoint {
            value,
            ase_mean: mean,
            ase_stderr: stderr,
            violation_rate: violations as f64 / spec.trials as f64,
            mean_iterations: iter_sum / n,
            kkt_failures,
            ase_quantized_mean: ase_q_sum / n,
            failed_trials: failed,
            error: first_error,
        });
    }
    Ok(SweepResult {
        variable: spec.variable,
        trials: spec.trials,
        scenario: spec.scenario,
        base: spec.base.clone(),
        seed: master,
        points,
    })
}

/// Interference actually imposed on the primary receiver by an allocation,
/// evaluated with the true cross-link gains.
pub fn realized_interference(
    res: &AllocationResult,
    real: &crate::channel::ChannelRealization,
) -> f64 {
    let mut total = 0.0;
    for n in 0..res.power.rows() {
        for k in 0..res.power.cols() {
            if *res.phi.get(n, k) == 1 {
                total += *res.power.get(n, k) * real.cross_gains[k].norm_sqr();
            }
        }
    }
    total
}

/// Kolmogorov-Smirnov-style sup gap between sorted samples and a cdf.
pub fn ks_sup_gap(sorted_samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted_samples.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in sorted_samples.iter().enumerate() {
        let f = cdf(*x);
        sup = sup
            .max((f - i as f64 / n).abs())
            .max((f - (i + 1) as f64 / n).abs());
    }
    sup
}

/// Empirical-vs-analytic cdf comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfValidation {
    /// (variate, empirical cdf, analytic cdf), subsampled evenly by rank.
    pub table: Vec<(f64, f64, f64)>,
    pub sup_gap: f64,
    pub samples: usize,
}

impl CdfValidation {
    /// CSV with a `gamma,empirical,approx` header and a sup-gap footer record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,empirical,approx\n");
        for (x, e, a) in &self.table {
            out.push_str(&format!("{x},{e},{a}\n"));
        }
        out.push_str(&format!("# sup_gap = {}\n", self.sup_gap));
        out
    }
}

const TABLE_ROWS: usize = 512;

fn build_validation(sorted: Vec<f64>, cdf: impl Fn(f64) -> f64) -> CdfValidation {
    let samples = sorted.len();
    let sup_gap = ks_sup_gap(&sorted, &cdf);
    let stride = (samples / TABLE_ROWS).max(1);
    let table = sorted
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, &x)| ((x), (i as f64 + 0.5) / samples as f64, cdf(x)))
        .collect();
    CdfValidation {
        table,
        sup_gap,
        samples,
    }
}

/// Simulates the received SINR min(P_t/K, I_th/N^sp)·|H^ss|²/(σ²_n+σ²_ps)
/// and compares it against the closed-form cdf under the perfect-CSI model.
///
/// The direct-link mean is the midpoint of `direct_mean_range`.
pub fn empirical_sinr_cdf(
    cfg: &SystemConfig,
    est: &EstimationModel,
    samples: usize,
) -> Result<CdfValidation, Error> {
    if samples < 1000 {
        return Err(Error::param("samples", "need at least 1e3 samples"));
    }
    cfg.validate()?;
    let direct_mean = 0.5 * (cfg.direct_mean_range.0 + cfg.direct_mean_range.1);
    let k = cfg.n_subcarriers;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.rng_seed ^ 0xCDF));
    let err_sd = (est.error_variance / 2.0).sqrt();
    let extra_sd = ((est.estimate_variance - est.error_variance) / 2.0).sqrt();
    let mut draws: Vec<f64> = (0..samples)
        .map(|_| {
            let mut nsp = 0.0;
            for _ in 0..k {
                let d_re: f64 = StandardNormal.sample(&mut rng);
                let d_im: f64 = StandardNormal.sample(&mut rng);
                let w_re: f64 = StandardNormal.sample(&mut rng);
                let w_im: f64 = StandardNormal.sample(&mut rng);
                let h = cfg.cross_mean
                    + Complex64::new(
                        2.0 * d_re * err_sd + w_re * extra_sd,
                        2.0 * d_im * err_sd + w_im * extra_sd,
                    );
                nsp += h.norm_sqr();
            }
            let gain = -direct_mean * (1.0 - rng.random::<f64>()).ln();
            cfg.nominal_power().min(cfg.i_threshold / nsp) * gain / cfg.total_noise()
        })
        .collect();
    draws.sort_by(f64::total_cmp);

    let params = analytic_sinr_params(cfg, est)?;
    Ok(build_validation(draws, move |x| {
        crate::dist::sinr_cdf(x.max(0.0), &params).unwrap_or(f64::NAN)
    }))
}

/// Closed-form SINR parameters matching [`empirical_sinr_cdf`]'s simulation:
/// the aggregate cross-link power uses the true channel variance
/// (δ²_Ĥ + 3δ²_ΔH under the joint draw) in the total-complex convention.
pub fn analytic_sinr_params(
    cfg: &SystemConfig,
    est: &EstimationModel,
) -> Result<SinrDistParams, Error> {
    let true_var = est.estimate_variance + 3.0 * est.error_variance;
    let means = vec![cfg.cross_mean; cfg.n_subcarriers];
    let nsp = chi_square_sum_gaussian_with(&means, true_var, VarianceConvention::TotalComplex);
    let p = SinrDistParams {
        direct_mean: 0.5 * (cfg.direct_mean_range.0 + cfg.direct_mean_range.1),
        total_noise: cfg.total_noise(),
        p_total: cfg.p_total,
        i_threshold: cfg.i_threshold,
        k_subcarriers: cfg.n_subcarriers,
        nsp,
    };
    p.validate()?;
    Ok(p)
}

/// Law of the random weights in the chi-square-sum validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightLaw {
    /// Chi-square with `dof` degrees of freedom, rescaled to the given mean.
    ChiSquare { dof: usize, mean: f64 },
    /// Gamma(shape, scale) draws shifted so the weight mean is `mean`
    /// (location = mean - shape·scale, which must be nonnegative).
    Gamma { shape: f64, scale: f64, mean: f64 },
}

/// Weighted chi-square approximation check: draws the weights once, samples
/// Σ β_k|Ξ_k|² and compares the empirical cdf with the moment-matched
/// [`ScaledChiSquare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Validation {
    pub law: WeightLaw,
    pub k_subcarriers: usize,
    pub approx: ScaledChiSquare,
    pub validation: CdfValidation,
}

pub fn fig2_validation(
    law: WeightLaw,
    k_subcarriers: usize,
    samples: usize,
    seed: u64,
) -> Result<Fig2Validation, Error> {
    if k_subcarriers == 0 {
        return Err(Error::param("k_subcarriers", "must be positive"));
    }
    if samples < 1000 {
        return Err(Error::param("samples", "need at least 1e3 samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0xF162));
    let weights: Vec<f64> = match law {
        WeightLaw::ChiSquare { dof, mean } => {
            if dof == 0 || mean.is_nan() || mean <= 0.0 {
                return Err(Error::param(
                    "weight_law",
                    "chi-square needs dof >= 1, mean > 0",
                ));
            }
            (0..k_subcarriers)
                .map(|_| {
                    let x: f64 = (0..dof)
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            z * z
                        })
                        .sum();
                    x * mean / dof as f64
                })
                .collect()
        }
        WeightLaw::Gamma { shape, scale, mean } => {
            if !(shape > 0.0 && scale > 0.0 && mean > 0.0) {
                return Err(Error::param(
                    "weight_law",
                    "gamma needs positive shape/scale/mean",
                ));
            }
            let location = mean - shape * scale;
            if location < 0.0 {
                return Err(Error::param(
                    "weight_law",
                    format!(
                        "gamma mean {mean} below the unshifted mean {}",
                        shape * scale
                    ),
                ));
            }
            let gamma = rand_distr::Gamma::new(shape, scale)
                .map_err(|e| Error::param("weight_law", e.to_string()))?;
            (0..k_subcarriers)
                .map(|_| location + gamma.sample(&mut rng))
                .collect()
        }
    };

    let approx = weighted_chi_square_approx(&weights, &vec![0.0; k_subcarriers])?;
    let mut draws: Vec<f64> = (0..samples)
        .map(|_| {
            weights
                .iter()
                .map(|b| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    b * (re * re + im * im)
                })
                .sum()
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let approx_copy = approx;
    let validation = build_validation(draws, move |x| approx_copy.cdf(x));
    Ok(Fig2Validation {
        law,
        k_subcarriers,
        approx,
        validation,
    })
}

/// Outcome of the end-to-end collision audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationAudit {
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    pub eps: f64,
    pub failed_trials: usize,
}

/// Solves `trials` probabilistic-scenario realizations and counts how often
/// the realized interference (true channels) exceeds the raw threshold.
pub fn violation_audit(
    cfg: &SystemConfig,
    est: &EstimationModel,
    scenario: &ScenarioSpec,
    trials: usize,
) -> Result<ViolationAudit, Error> {
    let eps = match scenario {
        ScenarioSpec::Probabilistic { eps, .. } => *eps,
        _ => {
            return Err(Error::Contract(
                "the collision audit requires the probabilistic scenario".into(),
            ))
        }
    };
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let mut means_rng = ChaCha8Rng::seed_from_u64(mean_seed(cfg.rng_seed));
    let sampler = ChannelSampler::new(cfg, est, &mut means_rng)?;
    let mut violations = 0usize;
    let mut failed = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, 0, trial));
        let real = sampler.draw(&mut rng);
        match solve(cfg, est, scenario, &real) {
            Ok(res) => {
                if realized_interference(&res, &real) > cfg.i_threshold {
                    violations += 1;
                }
            }
            Err(_) => failed += 1,
        }
    }
    Ok(ViolationAudit {
        trials,
        violations,
        rate: violations as f64 / trials as f64,
        eps,
        failed_trials: failed,
    })
}

/// Verifies the scenario plumbing end to end on one seeded realization.
/// Exposed for the CLI `solve` subcommand.
pub fn solve_seeded(
    cfg: &SystemConfig,
    scenario: &ScenarioSpec,
) -> Result<(AllocationResult, EstimationModel), Error> {
    let est = estimation_for(scenario, cfg)?;
    let mut means_rng = ChaCha8Rng::seed_from_u64(mean_seed(cfg.rng_seed));
    let sampler = ChannelSampler::new(cfg, &est, &mut means_rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, 0, 0));
    let real = sampler.draw(&mut rng);
    let res = solve(cfg, &est, scenario, &real)
        .map_err(|e| Error::Contract(format!("solver failed: {e}")))?;
    // internal consistency of the reported solution
    let _ = scenario_weights(scenario, &real, &est, cfg)?;
    Ok((res, est))
}
