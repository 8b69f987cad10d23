//! Command-line front end: flat-config parsing, experiment dispatch, and
//! CSV/JSON output files.
//!
//! Exit codes: 0 success; 1 when a sweep finished with failed points (partial
//! results are still written); 2 usage errors; 3 unreadable input files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::allocator::ScenarioSpec;
use crate::config::{KeyValueFile, SystemConfig};
use crate::error::Error;
use crate::experiment::{
    empirical_sinr_cdf, estimation_for, fig2_validation, run_sweep, solve_seeded, violation_audit,
    SweepSpec, SweepVariable, WeightLaw,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cr-ofdma",
    about = "Resource allocation and spectral-efficiency experiments for \
             multi-user OFDMA underlay spectrum sharing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one seeded channel realization and write the allocation as JSON.
    Solve(CommonArgs),
    /// Run the parameter sweep described by the config's sweep.* keys.
    Sweep(CommonArgs),
    /// Compare the closed-form SINR cdf against a direct simulation.
    ValidateCdf(CommonArgs),
    /// Validate the weighted chi-square approximation against sampling.
    ValidateFig2(CommonArgs),
    /// Measure the realized collision rate under the probabilistic scenario.
    AuditCollision(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Output file path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// csv or json; each subcommand has a natural default.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

/// Parsed and validated invocation.
#[derive(Debug)]
pub struct CliInvocation {
    pub subcommand: &'static str,
    pub config_path: PathBuf,
    pub output_path: PathBuf,
    pub seed_override: Option<u64>,
    pub format: OutputFormat,
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version on stdout with success
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (name, args, default_format) = match &cli.command {
        Command::Solve(a) => ("solve", a, OutputFormat::Json),
        Command::Sweep(a) => ("sweep", a, OutputFormat::Csv),
        Command::ValidateCdf(a) => ("validate-cdf", a, OutputFormat::Csv),
        Command::ValidateFig2(a) => ("validate-fig2", a, OutputFormat::Csv),
        Command::AuditCollision(a) => ("audit-collision", a, OutputFormat::Json),
    };
    let invocation = CliInvocation {
        subcommand: name,
        config_path: args.config.clone(),
        output_path: args.out.clone(),
        seed_override: args.seed,
        format: args.format.unwrap_or(default_format),
    };
    match dispatch(&invocation) {
        Ok(code) => code,
        Err(CliError::Io(path, e)) => {
            eprintln!("error: cannot read `{}`: {e}", path.display());
            EXIT_IO
        }
        Err(CliError::Write(path, e)) => {
            eprintln!("error: cannot write `{}`: {e}", path.display());
            EXIT_IO
        }
        Err(CliError::Invalid(e)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

enum CliError {
    Io(PathBuf, std::io::Error),
    Write(PathBuf, std::io::Error),
    Invalid(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// Every key the config format understands. A misspelled key would otherwise
/// silently fall back to a default, which is the worst failure mode a flat
/// experiment config can have.
const KNOWN_KEYS: &[&str] = &[
    "n_users",
    "n_subcarriers",
    "p_total",
    "i_threshold",
    "ber_target",
    "noise_power",
    "primary_interference_power",
    "direct_mean_range",
    "cross_mean",
    "cross_variance",
    "cross_error_variance",
    "cross_estimate_variance",
    "rng_seed",
    "scenario.kind",
    "scenario.rho",
    "scenario.pr",
    "scenario.eps",
    "sweep.variable",
    "sweep.grid",
    "sweep.trials",
    "validate.samples",
    "fig2.weight_law",
    "fig2.dof",
    "fig2.mean",
    "fig2.shape",
    "fig2.scale",
    "fig2.target_mean",
    "fig2.k",
    "fig2.samples",
    "audit.trials",
];

fn load_config(inv: &CliInvocation) -> Result<(KeyValueFile, SystemConfig), CliError> {
    let text = fs::read_to_string(&inv.config_path)
        .map_err(|e| CliError::Io(inv.config_path.clone(), e))?;
    let kv = KeyValueFile::parse(&text)?;
    for key in kv.keys() {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Invalid(format!(
                "unknown config key `{key}` in {}",
                inv.config_path.display()
            )));
        }
    }
    let mut cfg = kv.system_config()?;
    if let Some(seed) = inv.seed_override {
        cfg.rng_seed = seed;
    }
    Ok((kv, cfg))
}

fn scenario_from(kv: &KeyValueFile) -> Result<ScenarioSpec, Error> {
    let kind = kv.get("scenario.kind").unwrap_or("perfect");
    let scenario = match kind {
        "perfect" => ScenarioSpec::PerfectDeterministic,
        "average" => ScenarioSpec::AverageCase {
            rho: kv.f64("scenario.rho")?,
        },
        "worst" => ScenarioSpec::WorstCase {
            rho: kv.f64("scenario.rho")?,
            pr: kv.f64("scenario.pr")?,
        },
        "probabilistic" => ScenarioSpec::Probabilistic {
            rho: kv.f64("scenario.rho")?,
            eps: kv.f64("scenario.eps")?,
        },
        other => {
            return Err(Error::param(
                "scenario.kind",
                format!("unknown scenario `{other}` (perfect|average|worst|probabilistic)"),
            ))
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

fn write_output(path: &Path, bytes: &str) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Write(path.to_path_buf(), e))
}

#[derive(Serialize)]
struct SolveDocument<'a> {
    config: &'a SystemConfig,
    scenario: &'a ScenarioSpec,
    assignment: Vec<usize>,
    result: &'a crate::allocator::AllocationResult,
}

fn dispatch(inv: &CliInvocation) -> Result<i32, CliError> {
    let (kv, cfg) = load_config(inv)?;
    let scenario = scenario_from(&kv)?;
    match inv.subcommand {
        "solve" => {
            if inv.format != OutputFormat::Json {
                return Err(CliError::Invalid("solve output is JSON only".into()));
            }
            let (result, _est) = solve_seeded(&cfg, &scenario)?;
            let assignment = (0..result.phi.cols())
                .map(|k| {
                    (0..result.phi.rows())
                        .find(|&n| *result.phi.get(n, k) == 1)
                        .unwrap_or(0)
                })
                .collect();
            let doc = SolveDocument {
                config: &cfg,
                scenario: &scenario,
                assignment,
                result: &result,
            };
            let json =
                serde_json::to_string_pretty(&doc).map_err(|e| CliError::Invalid(e.to_string()))?;
            write_output(&inv.output_path, &json)?;
            Ok(EXIT_OK)
        }
        "sweep" => {
            let spec = SweepSpec {
                variable: SweepVariable::parse(kv.require("sweep.variable")?)?,
                grid: kv.list("sweep.grid")?,
                trials: kv.usize_or("sweep.trials", 500)?,
                scenario,
                base: cfg,
            };
            let result = run_sweep(&spec)?;
            let rendered = match inv.format {
                OutputFormat::Csv => result.to_csv(),
                OutputFormat::Json => result.to_json(),
            };
            write_output(&inv.output_path, &rendered)?;
            Ok(if result.any_failed() {
                EXIT_PARTIAL
            } else {
                EXIT_OK
            })
        }
        "validate-cdf" => {
            let samples = kv.usize_or("validate.samples", 100_000)?;
            let est = estimation_for(&scenario, &cfg)?;
            let v = empirical_sinr_cdf(&cfg, &est, samples)?;
            let rendered = match inv.format {
                OutputFormat::Csv => v.to_csv(),
                OutputFormat::Json => serde_json::to_string_pretty(&v)
                    .map_err(|e| CliError::Invalid(e.to_string()))?,
            };
            write_output(&inv.output_path, &rendered)?;
            Ok(EXIT_OK)
        }
        "validate-fig2" => {
            let law = match kv.get("fig2.weight_law").unwrap_or("chi_square") {
                "chi_square" => WeightLaw::ChiSquare {
                    dof: kv.usize_or("fig2.dof", 2)?,
                    mean: kv.f64_or("fig2.mean", 2.0)?,
                },
                "gamma" => WeightLaw::Gamma {
                    shape: kv.f64_or("fig2.shape", 2.0)?,
                    scale: kv.f64_or("fig2.scale", 0.5)?,
                    mean: kv.f64_or("fig2.target_mean", 4.0)?,
                },
                other => {
                    return Err(CliError::Invalid(format!(
                        "unknown fig2.weight_law `{other}` (chi_square|gamma)"
                    )))
                }
            };
            let k = kv.usize_or("fig2.k", cfg.n_subcarriers)?;
            let samples = kv.usize_or("fig2.samples", 100_000)?;
            let v = fig2_validation(law, k, samples, cfg.rng_seed)?;
            let rendered = match inv.format {
                OutputFormat::Csv => {
                    let mut csv = v.validation.to_csv();
                    csv.push_str(&format!("# weight_law = {:?}\n", v.law));
                    csv.push_str(&format!(
                        "# approx: noncentrality = {}, dof = {}, chi_weight = {}\n",
                        v.approx.noncentrality, v.approx.dof, v.approx.chi_weight
                    ));
                    csv
                }
                OutputFormat::Json => serde_json::to_string_pretty(&v)
                    .map_err(|e| CliError::Invalid(e.to_string()))?,
            };
            write_output(&inv.output_path, &rendered)?;
            Ok(EXIT_OK)
        }
        "audit-collision" => {
            let trials = kv.usize_or("audit.trials", 10_000)?;
            let est = estimation_for(&scenario, &cfg)?;
            let audit = violation_audit(&cfg, &est, &scenario, trials)?;
            let rendered = match inv.format {
                OutputFormat::Json => serde_json::to_string_pretty(&audit)
                    .map_err(|e| CliError::Invalid(e.to_string()))?,
                OutputFormat::Csv => format!(
                    "trials,violations,rate,eps\n{},{},{},{}\n",
                    audit.trials, audit.violations, audit.rate, audit.eps
                ),
            };
            write_output(&inv.output_path, &rendered)?;
            Ok(EXIT_OK)
        }
        _ => unreachable!("clap restricts subcommands"),
    }
}
