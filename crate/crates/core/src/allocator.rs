//! Joint power / rate / subcarrier allocation by Lagrangian dual decomposition.
//!
//! The primal problem maximizes the aggregate spectral efficiency
//! Σ log₂(M_{n,k})·φ_{n,k} over the binary assignment φ and powers P, subject
//! to a total power budget and the scenario's interference budget. The dual
//! decomposes per subcarrier: for multipliers (μ, η) the optimal power is a
//! multi-level water-filling
//!
//!   P* = [ 1/(ln2·(μ + η·w_k)) - min_term/(ζΥ) ]⁺ ,
//!
//! each subcarrier goes to the user with the largest two-term metric Λ, and
//! the multipliers follow projected subgradient steps. A final exact
//! water-filling pass over the converged assignment pins feasibility and
//! complementary slackness to solver precision.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::SystemConfig;
use crate::dist::{deterministic_cap, nsp_params};
use crate::error::{Error, SolveError};
use crate::estimation::EstimationModel;
use crate::mat::Mat;

/// Which interference regime the allocator runs under.
///
/// The per-variant payloads make the scenario parameters present exactly when
/// they apply: `pr` only in the worst case, `eps` only in the probabilistic
/// case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScenarioSpec {
    /// Deterministic interference cap with perfect cross-link knowledge.
    PerfectDeterministic,
    /// Deterministic cap evaluated at the average-case error posterior.
    AverageCase { rho: f64 },
    /// Deterministic cap with Chebyshev worst-case error bound at level `pr`.
    WorstCase { rho: f64, pr: f64 },
    /// Probabilistic (collision) constraint, deterministically reformulated.
    Probabilistic { rho: f64, eps: f64 },
}

impl ScenarioSpec {
    /// Correlation factor, for the imperfect-CSI scenarios.
    pub fn rho(&self) -> Option<f64> {
        match self {
            ScenarioSpec::PerfectDeterministic => None,
            ScenarioSpec::AverageCase { rho }
            | ScenarioSpec::WorstCase { rho, .. }
            | ScenarioSpec::Probabilistic { rho, .. } => Some(*rho),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Some(rho) = self.rho() {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::param(
                    "rho",
                    format!("must lie in [0, 1], got {rho}"),
                ));
            }
        }
        if let ScenarioSpec::WorstCase { pr, .. } = self {
            if !(0.0..1.0).contains(pr) {
                return Err(Error::param("pr", format!("must lie in [0, 1), got {pr}")));
            }
        }
        if let ScenarioSpec::Probabilistic { eps, .. } = self {
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(Error::param(
                    "eps",
                    format!("must lie in (0, 1), got {eps}"),
                ));
            }
        }
        Ok(())
    }
}

/// Lagrange multipliers and step-size state of the subgradient method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    /// Per-subcarrier assignment multipliers λ_k. The argmax assignment makes
    /// them implicit; they are recorded as the winning metric per subcarrier.
    pub lambda: Vec<f64>,
    /// Power-budget multiplier μ.
    pub mu: f64,
    /// Interference-budget multiplier η.
    pub eta: f64,
    /// Base step size τ₁⁰ for μ (effective step τ₁⁰/√i).
    pub step1: f64,
    /// Base step size τ₂⁰ for η.
    pub step2: f64,
    /// Completed subgradient iterations.
    pub iteration: usize,
}

/// Per-scenario inputs to the water-filling denominator and the common
/// `min(P_t/K, i_eff/nsp)` term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeights {
    /// Per-subcarrier interference weight multiplying η.
    pub w: Vec<f64>,
    /// Realized (or effective) aggregate cross-link power N^sp.
    pub nsp_value: f64,
    /// Effective interference budget: I_th, or the deterministic cap Ī.
    pub i_eff: f64,
}

impl ScenarioWeights {
    /// min(P_t/K, i_eff/N^sp), fixed once per realization.
    pub fn min_term(&self, cfg: &SystemConfig) -> f64 {
        cfg.nominal_power().min(self.i_eff / self.nsp_value)
    }
}

/// Constraint slacks of a solved allocation, all in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub power_used: f64,
    pub power_budget: f64,
    pub power_slack: f64,
    pub interference_used: f64,
    pub interference_budget: f64,
    pub interference_slack: f64,
    /// True when neither budget is exceeded by more than 1e-6 relative.
    pub feasible: bool,
}

/// Full allocation output for one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Binary time-sharing matrix φ, users × subcarriers.
    pub phi: Mat<u8>,
    /// Transmit powers; positive only where φ = 1.
    pub power: Mat<f64>,
    /// Continuous constellation sizes M* ≥ 1; exactly 1 where the power is 0.
    pub constellation: Mat<f64>,
    /// Continuous rates log₂(M*).
    pub rates: Mat<f64>,
    /// Rates snapped down to the admissible MQAM grid {0,2,4,6,8,10}.
    pub rates_quantized: Mat<f64>,
    /// Aggregate spectral efficiency Σ φ·log₂(M*), continuous rates.
    pub ase: f64,
    /// Aggregate spectral efficiency with quantized rates.
    pub ase_quantized: f64,
    /// Cut-off SINR Υ^th below which a subcarrier stays silent.
    pub cutoff: Mat<f64>,
    pub feasibility: FeasibilityReport,
    /// Final multipliers after the exact water-filling pass.
    pub duals: DualState,
    pub weights: ScenarioWeights,
    pub min_term: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Feasibility-projected primal value at each subgradient iteration.
    pub primal_trajectory: Vec<f64>,
    /// Dual objective at each subgradient iteration.
    pub dual_trajectory: Vec<f64>,
}

/// SNR-gap constant ζ = -1.5 / ln(ξ/0.3) of the BER-constrained MQAM family.
pub fn zeta(ber_target: f64) -> Result<f64, Error> {
    if !(ber_target > 0.0 && ber_target < 0.3) {
        return Err(Error::param(
            "ber_target",
            format!("must lie in (0, 0.3), got {ber_target}"),
        ));
    }
    Ok(-1.5 / (ber_target / 0.3).ln())
}

/// Builds the per-scenario water-filling weights, realized N^sp, and the
/// effective interference budget from one channel realization.
pub fn scenario_weights(
    scenario: &ScenarioSpec,
    real: &ChannelRealization,
    est: &EstimationModel,
    cfg: &SystemConfig,
) -> Result<ScenarioWeights, Error> {
    scenario.validate()?;
    if let Some(rho) = scenario.rho() {
        if (rho - est.correlation).abs() > 1e-12 {
            return Err(Error::Contract(format!(
                "scenario rho {rho} disagrees with the estimation model correlation {}",
                est.correlation
            )));
        }
    }
    let k = real.cross_gains.len();
    let (w, nsp_value, i_eff) = match scenario {
        ScenarioSpec::PerfectDeterministic => {
            let w: Vec<f64> = real.cross_gains.iter().map(|h| h.norm_sqr()).collect();
            let nsp = w.iter().sum();
            (w, nsp, cfg.i_threshold)
        }
        ScenarioSpec::AverageCase { rho } => {
            let scale = 1.0 + rho * rho;
            let w: Vec<f64> = real
                .cross_estimates
                .iter()
                .map(|h| (h * scale).norm_sqr())
                .collect();
            let nsp = w.iter().sum();
            (w, nsp, cfg.i_threshold)
        }
        ScenarioSpec::WorstCase { pr, .. } => {
            // (|Ĥ| + Ω)²: the triangle inequality gives |H| ≤ |Ĥ| + |ΔH|,
            // so adding the magnitudes keeps the weight an actual bound
            let mut w = Vec::with_capacity(k);
            for h in &real.cross_estimates {
                let omega = est.worst_case_bound(*h, *pr)?;
                w.push((h.norm() + omega).powi(2));
            }
            let nsp = w.iter().sum();
            (w, nsp, cfg.i_threshold)
        }
        ScenarioSpec::Probabilistic { rho, eps } => {
            let r2 = rho * rho;
            let posterior_var = (1.0 - r2) * est.error_variance;
            // α_k = δ²(2 + μ_Ξ[k]) = 2δ² + |(1+ρ²)Ĥ_k|², written without the
            // ratio so ρ = 1 stays finite
            let w: Vec<f64> = real
                .cross_estimates
                .iter()
                .map(|h| 2.0 * posterior_var + (h * (1.0 + r2)).norm_sqr())
                .collect();
            let nsp = nsp_params(scenario, est, k)?.mean;
            let cap = deterministic_cap(cfg.i_threshold, *eps, k)?;
            (w, nsp, cap)
        }
    };
    if nsp_value <= 0.0 || nsp_value.is_nan() {
        return Err(Error::param("nsp_value", "realized N^sp must be positive"));
    }
    Ok(ScenarioWeights {
        w,
        nsp_value,
        i_eff,
    })
}

#[inline]
fn water_power(sinr: f64, w_k: f64, mu: f64, eta: f64, zeta: f64, min_term: f64) -> f64 {
    if sinr <= 0.0 {
        return 0.0;
    }
    (1.0 / (LN_2 * (mu + eta * w_k)) - min_term / (zeta * sinr)).max(0.0)
}

/// Multi-level water-filling power for one (user, subcarrier) pair.
pub fn water_fill(
    sinr: f64,
    w_k: f64,
    duals: &DualState,
    zeta: f64,
    min_term: f64,
) -> Result<f64, Error> {
    let denom = duals.mu + duals.eta * w_k;
    if denom <= 0.0 || denom.is_nan() {
        return Err(Error::Contract(
            "water level is unbounded: the solver must keep mu + eta*w_k > 0".into(),
        ));
    }
    Ok(water_power(sinr, w_k, duals.mu, duals.eta, zeta, min_term))
}

/// Subcarrier-selection metric Λ; zero whenever the waterfilled power is zero.
pub fn subcarrier_metric(sinr: f64, p_star: f64, zeta: f64, min_term: f64) -> f64 {
    if p_star <= 0.0 || sinr <= 0.0 {
        return 0.0;
    }
    let x = zeta * sinr * p_star / min_term;
    x / (LN_2 * (1.0 + x)) + (1.0 + x).ln() / LN_2
}

/// Per-subcarrier argmax over users; ties go to the lowest user index.
pub fn assign_subcarriers(metrics: &Mat<f64>) -> Vec<usize> {
    (0..metrics.cols())
        .map(|k| {
            let mut best = 0usize;
            let mut best_val = *metrics.get(0, k);
            for n in 1..metrics.rows() {
                let v = *metrics.get(n, k);
                if v > best_val {
                    best = n;
                    best_val = v;
                }
            }
            best
        })
        .collect()
}

fn dual_step(
    duals: &DualState,
    used_power: f64,
    used_interference: f64,
    i_eff: f64,
    p_total: f64,
) -> DualState {
    let i = duals.iteration + 1;
    let shrink = (i as f64).sqrt();
    let mu = (duals.mu - duals.step1 / shrink * (p_total - used_power)).max(0.0);
    let eta = (duals.eta - duals.step2 / shrink * (i_eff - used_interference)).max(0.0);
    DualState {
        lambda: duals.lambda.clone(),
        mu,
        eta,
        step1: duals.step1,
        step2: duals.step2,
        iteration: i,
    }
}

/// One projected-subgradient update of (μ, η) from the residuals of `result`.
pub fn subgradient_update(
    duals: &DualState,
    result: &AllocationResult,
    weights: &ScenarioWeights,
    cfg: &SystemConfig,
) -> DualState {
    let mut used_power = 0.0;
    let mut used_interference = 0.0;
    for n in 0..result.power.rows() {
        for k in 0..result.power.cols() {
            if *result.phi.get(n, k) == 1 {
                let p = *result.power.get(n, k);
                used_power += p;
                used_interference += p * weights.w[k];
            }
        }
    }
    dual_step(
        duals,
        used_power,
        used_interference,
        weights.i_eff,
        cfg.p_total,
    )
}

/// Continuous-rate constellation size M* = max(1, ζΥ/(ln2·min_term·(μ+ηw))).
pub fn constellation(sinr: f64, mu: f64, eta: f64, w_k: f64, zeta: f64, min_term: f64) -> f64 {
    if sinr <= 0.0 {
        return 1.0;
    }
    (zeta * sinr / (LN_2 * min_term * (mu + eta * w_k))).max(1.0)
}

/// Largest admissible MQAM rate (bits/symbol) with 2^rate ≤ m_star;
/// zero below 4-QAM.
pub fn quantize_rate(m_star: f64) -> f64 {
    for rate in [10u32, 8, 6, 4, 2] {
        if (1u64 << rate) as f64 <= m_star {
            return rate as f64;
        }
    }
    0.0
}

/// Which rate accounting an aggregate uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateMode {
    Continuous,
    Quantized,
}

/// Sample-mean aggregate spectral efficiency over solved realizations.
pub fn ase(results: &[AllocationResult], mode: RateMode) -> Result<f64, Error> {
    if results.is_empty() {
        return Err(Error::param(
            "results",
            "need at least one solved realization",
        ));
    }
    let total: f64 = results
        .iter()
        .map(|r| match mode {
            RateMode::Continuous => r.ase,
            RateMode::Quantized => r.ase_quantized,
        })
        .sum();
    Ok(total / results.len() as f64)
}

/// Karush-Kuhn-Tucker diagnostics of a solved allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub power_slack: f64,
    pub interference_slack: f64,
    /// μ·|power slack|, normalized by 1 + μ·P_t.
    pub cs_power_residual: f64,
    /// η·|interference slack|, normalized by 1 + η·i_eff.
    pub cs_interference_residual: f64,
    /// Max relative stationarity residual over active powers.
    pub stationarity_residual: f64,
    pub exclusivity_ok: bool,
    pub pass: bool,
}

/// Checks the KKT system of a reported solution: stationarity of the active
/// powers against the multipliers, complementary slackness of both budgets,
/// budget feasibility at 1e-6 relative, and exclusive assignment. Residual
/// tolerances are relative to `tol`.
///
/// Stationarity recovers ζΥ/min_term from the stored pair (M, P) through
/// M = 1 + ζΥP/min_term, so the check ties powers, constellations, and
/// multipliers together without the raw channel.
pub fn verify_kkt(
    result: &AllocationResult,
    duals: &DualState,
    weights: &ScenarioWeights,
    cfg: &SystemConfig,
    tol: f64,
) -> KktReport {
    let mut used_power = 0.0;
    let mut used_interference = 0.0;
    let mut stationarity: f64 = 0.0;
    let mut exclusivity_ok = true;
    for k in 0..result.phi.cols() {
        let mut assigned = 0usize;
        for n in 0..result.phi.rows() {
            if *result.phi.get(n, k) != 1 {
                continue;
            }
            assigned += 1;
            let p = *result.power.get(n, k);
            used_power += p;
            used_interference += p * weights.w[k];
            if p > 0.0 {
                let denom = duals.mu + duals.eta * weights.w[k];
                let m = *result.constellation.get(n, k);
                // ∂l/∂P = (ζΥ/min)/(ln2·(1 + ζΥP/min)) must equal μ + ηw
                let grad = ((m - 1.0) / p) / (LN_2 * m);
                stationarity = stationarity.max((grad - denom).abs() / denom.max(1e-300));
            }
        }
        if assigned > 1 {
            exclusivity_ok = false;
        }
    }

    let power_slack = cfg.p_total - used_power;
    let interference_slack = weights.i_eff - used_interference;
    let cs_power = duals.mu * power_slack.abs() / (1.0 + duals.mu * cfg.p_total);
    let cs_interference = duals.eta * interference_slack.abs() / (1.0 + duals.eta * weights.i_eff);
    let feas_ok = power_slack >= -1e-6 * cfg.p_total && interference_slack >= -1e-6 * weights.i_eff;
    KktReport {
        power_slack,
        interference_slack,
        cs_power_residual: cs_power,
        cs_interference_residual: cs_interference,
        stationarity_residual: stationarity,
        exclusivity_ok,
        pass: feas_ok
            && exclusivity_ok
            && stationarity <= tol
            && cs_power <= tol
            && cs_interference <= tol,
    }
}

/// Tunables of the subgradient loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative dual-objective change that counts as converged...
    pub convergence_tol: f64,
    /// ...when sustained for this many consecutive iterations.
    pub convergence_window: usize,
    /// Base step sizes are `step_scale · dual⁰ / budget`.
    pub step_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 500,
            convergence_tol: 1e-5,
            convergence_window: 5,
            step_scale: 0.4,
        }
    }
}

/// Solves one realization with both budgets enforced on it.
pub fn solve(
    cfg: &SystemConfig,
    est: &EstimationModel,
    scenario: &ScenarioSpec,
    real: &ChannelRealization,
) -> Result<AllocationResult, SolveError> {
    solve_with(cfg, est, scenario, real, &SolverOptions::default())
}

/// [`solve`] with explicit options.
pub fn solve_with(
    cfg: &SystemConfig,
    est: &EstimationModel,
    scenario: &ScenarioSpec,
    real: &ChannelRealization,
    opts: &SolverOptions,
) -> Result<AllocationResult, SolveError> {
    cfg.validate()?;
    let z = zeta(cfg.ber_target)?;
    let weights = scenario_weights(scenario, real, est, cfg)?;
    let min_term = weights.min_term(cfg);
    // The closed forms consume the SINR referenced to min(P_t/K, i_eff/N^sp);
    // the realization stores it at the nominal P_t/K reference. Rescaling here
    // makes ζΥP/min_term the physical post-adaptation SNR.
    let y_scale = min_term / cfg.nominal_power();
    let n_users = cfg.n_users;
    let k_sub = cfg.n_subcarriers;

    let mu0 = k_sub as f64 / (cfg.p_total * LN_2);
    let eta0 = k_sub as f64 / (weights.i_eff * LN_2);
    let mut duals = DualState {
        lambda: vec![0.0; k_sub],
        mu: mu0,
        eta: eta0,
        step1: opts.step_scale * mu0 / cfg.p_total,
        step2: opts.step_scale * eta0 / weights.i_eff,
        iteration: 0,
    };
    let mu_floor = 1e-14 * mu0;

    let mut primal_trajectory = Vec::with_capacity(opts.max_iterations);
    let mut dual_trajectory = Vec::with_capacity(opts.max_iterations);
    let mut assignment = vec![0usize; k_sub];
    let mut converged = false;
    let mut stable = 0usize;

    for _ in 0..opts.max_iterations {
        // water-filling + metric for every pair at the current duals
        let mut metrics = Mat::zeros(n_users, k_sub);
        for n in 0..n_users {
            for k in 0..k_sub {
                let sinr = y_scale * *real.sinr.get(n, k);
                let p = water_power(sinr, weights.w[k], duals.mu, duals.eta, z, min_term);
                metrics.set(n, k, subcarrier_metric(sinr, p, z, min_term));
            }
        }
        assignment = assign_subcarriers(&metrics);

        let mut used_power = 0.0;
        let mut used_interference = 0.0;
        let mut dual_value = duals.mu * cfg.p_total + duals.eta * weights.i_eff;
        for (k, &n) in assignment.iter().enumerate() {
            duals.lambda[k] = *metrics.get(n, k);
            let sinr = y_scale * *real.sinr.get(n, k);
            let p = water_power(sinr, weights.w[k], duals.mu, duals.eta, z, min_term);
            used_power += p;
            used_interference += p * weights.w[k];
            if p > 0.0 {
                let x = z * sinr * p / min_term;
                dual_value += (1.0 + x).log2() - (duals.mu + duals.eta * weights.w[k]) * p;
            }
        }

        // feasibility-projected primal value of this iterate
        let scale: f64 = 1.0f64
            .min(if used_power > 0.0 {
                cfg.p_total / used_power
            } else {
                1.0
            })
            .min(if used_interference > 0.0 {
                weights.i_eff / used_interference
            } else {
                1.0
            });
        let mut primal = 0.0;
        for (k, &n) in assignment.iter().enumerate() {
            let sinr = y_scale * *real.sinr.get(n, k);
            let p = scale * water_power(sinr, weights.w[k], duals.mu, duals.eta, z, min_term);
            if p > 0.0 {
                primal += (1.0 + z * sinr * p / min_term).log2();
            }
        }
        primal_trajectory.push(primal);

        if let Some(&prev) = dual_trajectory.last() {
            let prev: f64 = prev;
            let change = (dual_value - prev).abs() / dual_value.abs().max(1.0);
            if change < opts.convergence_tol {
                stable += 1;
            } else {
                stable = 0;
            }
        }
        dual_trajectory.push(dual_value);
        if stable >= opts.convergence_window {
            converged = true;
            break;
        }

        duals = dual_step(
            &duals,
            used_power,
            used_interference,
            weights.i_eff,
            cfg.p_total,
        );
        duals.mu = duals.mu.max(mu_floor);
    }

    // exact water-filling over the converged assignment
    let active: Vec<(usize, f64, f64)> = assignment
        .iter()
        .enumerate()
        .map(|(k, &n)| (k, y_scale * *real.sinr.get(n, k), weights.w[k]))
        .filter(|(_, sinr, _)| *sinr > 0.0)
        .collect();
    let (mu_star, eta_star) = refine_duals(&active, cfg.p_total, weights.i_eff, z, min_term);
    duals.mu = mu_star;
    duals.eta = eta_star;

    assemble_result(
        cfg,
        real,
        weights,
        min_term,
        y_scale,
        z,
        &assignment,
        duals,
        converged,
        primal_trajectory,
        dual_trajectory,
        true,
    )
}

/// Materializes the full `AllocationResult` for a fixed assignment at the
/// given multipliers. `enforce_power_budget` controls whether a blown power
/// budget is an error (per-realization solves) or reported as-is (ensemble
/// members share the power budget in the mean).
#[allow(clippy::too_many_arguments)]
fn assemble_result(
    cfg: &SystemConfig,
    real: &ChannelRealization,
    weights: ScenarioWeights,
    min_term: f64,
    y_scale: f64,
    z: f64,
    assignment: &[usize],
    mut duals: DualState,
    converged: bool,
    primal_trajectory: Vec<f64>,
    dual_trajectory: Vec<f64>,
    enforce_power_budget: bool,
) -> Result<AllocationResult, SolveError> {
    let n_users = cfg.n_users;
    let k_sub = cfg.n_subcarriers;
    let (mu_star, eta_star) = (duals.mu, duals.eta);
    let mut phi = Mat::filled(n_users, k_sub, 0u8);
    let mut power = Mat::zeros(n_users, k_sub);
    let mut constellation_m = Mat::filled(n_users, k_sub, 1.0);
    let mut rates = Mat::zeros(n_users, k_sub);
    let mut rates_q = Mat::zeros(n_users, k_sub);
    let mut cutoff = Mat::zeros(n_users, k_sub);
    let mut used_power = 0.0;
    let mut used_interference = 0.0;
    let mut ase_sum = 0.0;
    let mut ase_q_sum = 0.0;
    for n in 0..n_users {
        for k in 0..k_sub {
            cutoff.set(
                n,
                k,
                LN_2 * (mu_star + eta_star * weights.w[k]) * min_term / z,
            );
        }
    }
    for (k, &n) in assignment.iter().enumerate() {
        phi.set(n, k, 1);
        let sinr = y_scale * *real.sinr.get(n, k);
        let p = water_power(sinr, weights.w[k], mu_star, eta_star, z, min_term);
        if p > 0.0 {
            power.set(n, k, p);
            used_power += p;
            used_interference += p * weights.w[k];
            let m = constellation(sinr, mu_star, eta_star, weights.w[k], z, min_term);
            constellation_m.set(n, k, m);
            let r = m.log2();
            rates.set(n, k, r);
            let rq = quantize_rate(m);
            rates_q.set(n, k, rq);
            ase_sum += r;
            ase_q_sum += rq;
        }
        duals.lambda[k] = subcarrier_metric(sinr, p, z, min_term);
    }

    let power_slack = cfg.p_total - used_power;
    let interference_slack = weights.i_eff - used_interference;
    let power_ok = power_slack >= -1e-6 * cfg.p_total;
    let feasibility = FeasibilityReport {
        power_used: used_power,
        power_budget: cfg.p_total,
        power_slack,
        interference_used: used_interference,
        interference_budget: weights.i_eff,
        interference_slack,
        feasible: (power_ok || !enforce_power_budget)
            && interference_slack >= -1e-6 * weights.i_eff,
    };
    if !feasibility.feasible || (enforce_power_budget && !power_ok) {
        return Err(SolveError::NonConvergence {
            iterations: duals.iteration,
            primal_trajectory,
        });
    }

    Ok(AllocationResult {
        phi,
        power,
        constellation: constellation_m,
        rates,
        rates_quantized: rates_q,
        ase: ase_sum,
        ase_quantized: ase_q_sum,
        cutoff,
        feasibility,
        iterations: duals.iteration,
        duals,
        weights,
        min_term,
        converged,
        primal_trajectory,
        dual_trajectory,
    })
}

/// Output of [`solve_ensemble`]: per-realization allocations coupled through
/// one shared power multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub results: Vec<AllocationResult>,
    /// The shared power-budget multiplier μ.
    pub shared_mu: f64,
    /// Mean over realizations of the allocated power; meets P_t in the mean.
    pub mean_power: f64,
    /// Mean aggregate spectral efficiency (continuous rates).
    pub ase_mean: f64,
}

/// Solves a realization set with the power budget enforced as a sample
/// average: one shared μ couples the set, each realization keeps its own
/// interference multiplier η(Υ). Individual realizations may exceed P_t as
/// long as the mean does not.
pub fn solve_ensemble(
    cfg: &SystemConfig,
    est: &EstimationModel,
    scenario: &ScenarioSpec,
    reals: &[ChannelRealization],
) -> Result<EnsembleResult, SolveError> {
    solve_ensemble_with(cfg, est, scenario, reals, &SolverOptions::default())
}

/// [`solve_ensemble`] with explicit options.
pub fn solve_ensemble_with(
    cfg: &SystemConfig,
    est: &EstimationModel,
    scenario: &ScenarioSpec,
    reals: &[ChannelRealization],
    opts: &SolverOptions,
) -> Result<EnsembleResult, SolveError> {
    if reals.is_empty() {
        return Err(Error::param("reals", "need at least one realization").into());
    }
    cfg.validate()?;
    let z = zeta(cfg.ber_target)?;
    let n_states = reals.len();
    let k_sub = cfg.n_subcarriers;

    // (weights, min_term, sinr rescale to the min reference) per realization
    let mut per_state: Vec<(ScenarioWeights, f64, f64)> = Vec::with_capacity(n_states);
    for real in reals {
        let w = scenario_weights(scenario, real, est, cfg)?;
        let m = w.min_term(cfg);
        per_state.push((w, m, m / cfg.nominal_power()));
    }

    let mu0 = k_sub as f64 / (cfg.p_total * LN_2);
    let mu_floor = 1e-14 * mu0;
    let mut mu = mu0;
    let step1 = opts.step_scale * mu0 / cfg.p_total;
    let mut etas: Vec<f64> = per_state
        .iter()
        .map(|(w, _, _)| k_sub as f64 / (w.i_eff * LN_2))
        .collect();
    let mut assignments: Vec<Vec<usize>> = vec![vec![0; k_sub]; n_states];

    for iter in 1..=opts.max_iterations {
        let shrink = (iter as f64).sqrt();
        let mut mean_power = 0.0;
        for (s, real) in reals.iter().enumerate() {
            let (weights, min_term, y_scale) = &per_state[s];
            let mut metrics = Mat::zeros(cfg.n_users, k_sub);
            for n in 0..cfg.n_users {
                for k in 0..k_sub {
                    let sinr = y_scale * *real.sinr.get(n, k);
                    let p = water_power(sinr, weights.w[k], mu, etas[s], z, *min_term);
                    metrics.set(n, k, subcarrier_metric(sinr, p, z, *min_term));
                }
            }
            assignments[s] = assign_subcarriers(&metrics);
            let mut s_p = 0.0;
            let mut s_i = 0.0;
            for (k, &n) in assignments[s].iter().enumerate() {
                let p = water_power(
                    y_scale * *real.sinr.get(n, k),
                    weights.w[k],
                    mu,
                    etas[s],
                    z,
                    *min_term,
                );
                s_p += p;
                s_i += p * weights.w[k];
            }
            mean_power += s_p / n_states as f64;
            let step2 = opts.step_scale * (k_sub as f64 / (weights.i_eff * LN_2)) / weights.i_eff;
            etas[s] = (etas[s] - step2 / shrink * (weights.i_eff - s_i)).max(0.0);
        }
        mu = (mu - step1 / shrink * (cfg.p_total - mean_power)).max(mu_floor);
    }

    // polish: shared μ meets the mean power budget, each η_s its own budget
    let projected_power = |mu: f64, s: usize| -> (f64, f64) {
        let (weights, min_term, y_scale) = &per_state[s];
        let active: Vec<(usize, f64, f64)> = assignments[s]
            .iter()
            .enumerate()
            .map(|(k, &n)| (k, y_scale * *reals[s].sinr.get(n, k), weights.w[k]))
            .filter(|(_, sinr, _)| *sinr > 0.0)
            .collect();
        let eta = eta_for_budget(&active, mu, weights.i_eff, z, *min_term);
        let total: f64 = active
            .iter()
            .map(|&(_, sinr, w)| water_power(sinr, w, mu, eta, z, *min_term))
            .sum();
        (eta, total)
    };
    let mean_power_at = |mu: f64| -> f64 {
        (0..n_states).map(|s| projected_power(mu, s).1).sum::<f64>() / n_states as f64
    };

    let mut hi = mu0.max(mu);
    while mean_power_at(hi) > cfg.p_total {
        hi *= 2.0;
    }
    let mut lo = hi * 1e-18;
    let shared_mu = if mean_power_at(lo) <= cfg.p_total {
        0.0 // power budget slack in the mean even with a vanishing μ
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_power_at(mid) > cfg.p_total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut results = Vec::with_capacity(n_states);
    let mut mean_power = 0.0;
    let mut ase_sum = 0.0;
    for (s, real) in reals.iter().enumerate() {
        let (weights, min_term, y_scale) = per_state[s].clone();
        let (eta, total) = projected_power(shared_mu, s);
        let duals = DualState {
            lambda: vec![0.0; k_sub],
            mu: shared_mu,
            eta,
            step1,
            step2: 0.0,
            iteration: opts.max_iterations,
        };
        let res = assemble_result(
            cfg,
            real,
            weights,
            min_term,
            y_scale,
            z,
            &assignments[s],
            duals,
            true,
            Vec::new(),
            Vec::new(),
            false,
        )?;
        mean_power += total / n_states as f64;
        ase_sum += res.ase;
        results.push(res);
    }

    Ok(EnsembleResult {
        results,
        shared_mu,
        mean_power,
        ase_mean: ase_sum / n_states as f64,
    })
}

/// Smallest η ≥ 0 meeting the interference budget at the given μ; zero when
/// the budget is already slack.
fn eta_for_budget(active: &[(usize, f64, f64)], mu: f64, i_eff: f64, z: f64, min_term: f64) -> f64 {
    let interference = |eta: f64| -> f64 {
        active
            .iter()
            .filter(|&&(_, _, w)| w > 0.0)
            .map(|&(_, sinr, w)| water_power(sinr, w, mu, eta, z, min_term) * w)
            .sum()
    };
    if active.is_empty() || interference(0.0) <= i_eff {
        return 0.0;
    }
    let mut hi = 1.0;
    while interference(hi) > i_eff {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if interference(mid) > i_eff {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-multiplier water-filling over a fixed assignment.
///
/// Returns (μ, η) ≥ 0 such that the powers P_k(μ, η) satisfy both budgets
/// with complementary slackness: an inactive budget gets a zero multiplier,
/// an active one is met to bisection precision.
fn refine_duals(
    active: &[(usize, f64, f64)],
    p_total: f64,
    i_eff: f64,
    z: f64,
    min_term: f64,
) -> (f64, f64) {
    if active.is_empty() {
        return (0.0, 0.0);
    }
    let total_power = |mu: f64, eta: f64| -> f64 {
        active
            .iter()
            .map(|&(_, sinr, w)| water_power(sinr, w, mu, eta, z, min_term))
            .sum()
    };
    let total_interference = |mu: f64, eta: f64| -> f64 {
        active
            .iter()
            .filter(|&&(_, _, w)| w > 0.0)
            .map(|&(_, sinr, w)| water_power(sinr, w, mu, eta, z, min_term) * w)
            .sum()
    };

    // bisect μ with η fixed so that the power budget is exactly met
    let solve_mu = |eta: f64| -> f64 {
        let mut hi = 1.0 / (LN_2 * p_total / active.len() as f64);
        while total_power(hi, eta) > p_total {
            hi *= 2.0;
        }
        let mut lo = hi * 1e-18;
        while total_power(lo, eta) < p_total && lo > f64::MIN_POSITIVE * 1e10 {
            lo *= 0.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total_power(mid, eta) > p_total {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // bisect η with μ fixed so that the interference budget is exactly met
    let solve_eta = |mu: f64| -> f64 {
        let w_max = active.iter().map(|&(_, _, w)| w).fold(0.0f64, f64::max);
        if w_max <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0 / (LN_2 * i_eff / active.len() as f64) / w_max.max(1e-300) + 1.0;
        while total_interference(mu, hi) > i_eff {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if total_interference(mu, mid) > i_eff {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    // power-only: η = 0
    let mu_po = solve_mu(0.0);
    if total_interference(mu_po, 0.0) <= i_eff * (1.0 + 1e-12) {
        return (mu_po, 0.0);
    }
    // interference-only: μ = 0 (water levels stay finite through η·w)
    let eta_io = solve_eta(0.0);
    if total_power(0.0, eta_io) <= p_total * (1.0 + 1e-12) {
        return (0.0, eta_io);
    }
    // both active: outer bisection on μ ∈ [0, μ_po]
    let mut lo = 0.0;
    let mut hi = mu_po;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let eta_mid = solve_eta(mid);
        if total_power(mid, eta_mid) > p_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    (mu, solve_eta(mu))
}
