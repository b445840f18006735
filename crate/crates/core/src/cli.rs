//! Command-line front end: instance generation, solver runs, SAA
//! experiments, and the rare-scenario variance demonstration. All outputs
//! are JSON/CSV files under `--out-dir`; result files carry no timestamps,
//! so replaying a run reproduces them byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bruteforce::{exact_two_stage, BruteForceError, Caps};
use crate::gen::{generate, GenError, GeneratorSpec};
use crate::lp::LpConfig;
use crate::model::{
    expected_cost, maxdist, ExplicitDistribution, Instance, InstanceFile, ModelError,
    ScenarioListFile, StageOneConstraint, Strategy, StrategyFile,
};
use crate::reduction::PenaltyWeighting;
use crate::robust_outlier::{
    check_rw_solution, solve_rw_homogeneous, solve_rw_matsup_inhomogeneous, RwError,
    RwInstanceFile, SolveOutcome,
};
use crate::saa::{
    evaluate, radius_search, saa_bounded_delta, saa_run, BlackBoxOracle, GeneralizableAlgorithm,
    ReductionAlgorithm, ReductionKind, SaaConfig, SaaError, Sup3Algorithm,
};
use crate::sup_rounding::{solve_sup_poly, SupError};

pub const SCHEMA_VERSION: u32 = 1;
/// Frozen column order of the run summary CSV.
pub const SUMMARY_CSV_HEADER: &str = "schema_version,command,algo,seed,eps,alpha,gamma,\
n_samples,n_formula,repetitions_used,radius,threshold,status,expected_cost,violation_prob,max_eta";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("generator error: {0}")]
    Gen(#[from] GenError),
    #[error("solver error: {0}")]
    Sup(#[from] SupError),
    #[error("solver error: {0}")]
    Rw(#[from] RwError),
    #[error("saa error: {0}")]
    Saa(#[from] SaaError),
    #[error("brute force error: {0}")]
    BruteForce(#[from] BruteForceError),
    #[error("reduction error: {0}")]
    Reduction(#[from] crate::reduction::ReductionError),
}

impl CliError {
    /// Exit code: 3 for precondition/cap/usage problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Gen(_)
            | CliError::Model(_)
            | CliError::BruteForce(_) => 3,
            CliError::Saa(SaaError::InvalidConfig(_)) => 3,
            CliError::Rw(RwError::Unsupported(_)) => 3,
            CliError::Sup(SupError::Unsupported(_)) => 3,
            _ => 1,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stochsup", about = "Two-stage stochastic supplier experiments", version)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate instance and scenario files from a generator spec.
    Generate(GenerateArgs),
    /// Run a solver on an explicit instance/distribution pair.
    Solve(SolveArgs),
    /// Run the sampling-based black-box pipeline.
    Saa(SaaArgs),
    /// Demonstrate the variance blow-up of naive cost estimation under a
    /// rare expensive scenario.
    AppendixDemo(AppendixDemoArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Generator spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON (for rw3/rw9: the extended RW schema).
    #[arg(long)]
    pub instance: PathBuf,
    /// Scenario list JSON (unused by rw3/rw9).
    #[arg(long)]
    pub dist: Option<PathBuf>,
    /// One of sup3, matsup5, musup5, matsup11, rw3, rw9, exact.
    #[arg(long)]
    pub algo: String,
    /// Homogeneous radius guess; defaults to the instance radii.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SaaArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Oracle spec JSON.
    #[arg(long)]
    pub oracle: PathBuf,
    /// Inner algorithm: sup3, matsup5, musup5, or matsup11.
    #[arg(long)]
    pub algo: String,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Explicit sample count; otherwise the formula value is used.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Homogeneous radius guess.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Optimize over the radius instead of fixing one.
    #[arg(long, default_value_t = false)]
    pub radius_search: bool,
    /// Stage-II cost bound: switches to the no-discarding scheme.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Known truth distribution for exact post-hoc evaluation.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AppendixDemoArgs {
    /// Probability of the expensive scenario.
    #[arg(long)]
    pub p: f64,
    /// Stage-II cost of the expensive scenario.
    #[arg(long)]
    pub cost: f64,
    /// Samples per estimate.
    #[arg(long)]
    pub samples: usize,
    /// Number of seeded estimates.
    #[arg(long, default_value_t = 1000)]
    pub seeds: usize,
    /// Deterministic stage-I cost included in every estimate.
    #[arg(long, default_value_t = 0.0)]
    pub stage1_cost: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Oracle spec file: either an embedded explicit distribution (by file
/// reference) or a Bernoulli activation model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OracleSpecFile {
    Explicit {
        /// Path to a scenario list JSON, relative to the spec file.
        dist: String,
    },
    Bernoulli {
        activation: BTreeMap<String, f64>,
        base_c2: BTreeMap<String, f64>,
        multipliers: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        multiplier_probs: Option<Vec<f64>>,
    },
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    input_hashes: BTreeMap<String, String>,
    outputs: Vec<String>,
    timings_ms: BTreeMap<&'a str, u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
}

/// Per-scenario coverage row of a solve report.
#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioReportRow {
    pub id: String,
    pub cost2: f64,
    pub maxdist: f64,
    pub covered: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub algo: String,
    pub status: String,
    pub radius: Option<f64>,
    pub budget: f64,
    pub expected_cost: Option<f64>,
    pub max_eta: Option<f64>,
    pub eta_bound: Option<f64>,
    pub per_scenario: Vec<ScenarioReportRow>,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io { path: parent.to_path_buf(), source: e })?;
    }
    std::fs::write(path, content).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Runs a parsed command; returns the process exit code.
pub fn run(args: &CliArgs) -> Result<i32, CliError> {
    match &args.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Saa(a) => cmd_saa(a),
        Command::AppendixDemo(a) => cmd_appendix_demo(a),
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    let spec_text = read_file(&args.spec)?;
    let spec = GeneratorSpec::parse(&spec_text)?;
    let (instance_file, scenario_file) = generate(&spec, args.seed)?;
    let instance_path = args.out_dir.join("instance.json");
    let scenario_path = args.out_dir.join("scenarios.json");
    write_file(&instance_path, &instance_file.to_json())?;
    write_file(&scenario_path, &scenario_file.to_json())?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: "generate".into(),
        config: serde_json::to_value(&spec).expect("serializable"),
        seed: Some(args.seed),
        input_hashes: BTreeMap::from([(args.spec.display().to_string(), sha256_hex(&spec_text))]),
        outputs: vec![instance_path.display().to_string(), scenario_path.display().to_string()],
        timings_ms: BTreeMap::from([("total", started.elapsed().as_millis())]),
        extra: None,
    };
    write_file(
        &args.out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(EXIT_OK)
}

fn load_instance(path: &Path) -> Result<(Instance, String), CliError> {
    let text = read_file(path)?;
    let inst = InstanceFile::parse(&text)?.build()?;
    Ok((inst, text))
}

fn load_dist(path: &Path, instance: &Instance) -> Result<(ExplicitDistribution, String), CliError> {
    let text = read_file(path)?;
    let dist = ScenarioListFile::parse(&text)?.build(instance)?;
    Ok((dist, text))
}

fn homogeneous_radius_or(instance: &Instance, radius: Option<f64>) -> Result<f64, CliError> {
    match radius {
        Some(r) => Ok(r),
        None => instance.homogeneous_radius().ok_or_else(|| {
            CliError::Usage("instance radii are inhomogeneous; pass --radius".into())
        }),
    }
}

/// Runs one of the two-stage algorithms on an in-memory instance pair.
/// Returns the strategy (when feasible), the coverage factor, and the
/// homogeneous radius the run used, if any. The CLI and the C ABI both
/// dispatch through here.
pub fn dispatch_solve(
    instance: &Instance,
    dist: &ExplicitDistribution,
    algo: &str,
    radius: Option<f64>,
    lp_cfg: &LpConfig,
) -> Result<(Option<Strategy>, Option<f64>, Option<f64>), CliError> {
    let weighting = PenaltyWeighting::ProbabilityWeighted;
    match algo {
        "sup3" => {
            if !matches!(instance.constraint, StageOneConstraint::Unconstrained) {
                return Err(CliError::Usage("sup3 requires an unconstrained instance".into()));
            }
            let r = homogeneous_radius_or(instance, radius)?;
            let out = solve_sup_poly(instance, dist, r, instance.budget, lp_cfg)?;
            Ok((out.feasible().map(|o| o.strategy), Some(3.0), Some(r)))
        }
        "matsup5" | "musup5" => {
            match (&instance.constraint, algo) {
                (StageOneConstraint::MultiKnapsack(_), "musup5") => {}
                (StageOneConstraint::Matroid(_), "matsup5")
                | (StageOneConstraint::Unconstrained, "matsup5") => {}
                _ => {
                    return Err(CliError::Usage(format!(
                        "{algo} does not match the instance constraint"
                    )))
                }
            }
            let r = homogeneous_radius_or(instance, radius)?;
            let solver = crate::reduction::HomogeneousRwSolver { radius: r, lp_cfg: lp_cfg.clone() };
            let radii = vec![r; instance.num_clients()];
            let out = crate::reduction::reduce_and_solve(
                instance,
                dist,
                &radii,
                &solver,
                weighting,
                instance.budget,
            )?;
            Ok((out.feasible().map(|o| o.strategy), Some(5.0), Some(r)))
        }
        "matsup11" => {
            if matches!(instance.constraint, StageOneConstraint::MultiKnapsack(_)) {
                return Err(CliError::Usage("matsup11 requires a matroid constraint".into()));
            }
            let solver = crate::reduction::IterativeRoundingSolver { lp_cfg: lp_cfg.clone() };
            let out = crate::reduction::reduce_and_solve(
                instance,
                dist,
                &instance.radii.clone(),
                &solver,
                weighting,
                instance.budget,
            )?;
            Ok((out.feasible().map(|o| o.strategy), Some(11.0), None))
        }
        "exact" => {
            let caps = Caps::from_env();
            let out = exact_two_stage(instance, dist, &instance.radii.clone(), &caps)?;
            let strat = out.filter(|r| r.within_budget).map(|r| r.strategy);
            Ok((strat, Some(1.0), None))
        }
        other => Err(CliError::Usage(format!("unknown algorithm {other}"))),
    }
}

/// Per-scenario coverage report for a solved strategy.
pub fn strategy_report(
    instance: &Instance,
    dist: &ExplicitDistribution,
    strategy: &Strategy,
    algo: &str,
    radius: Option<f64>,
    eta_bound: Option<f64>,
) -> Result<SolveReport, CliError> {
    let cost = expected_cost(instance, dist, strategy)?;
    let mut rows = Vec::new();
    let mut max_eta: f64 = 0.0;
    for scenario in &dist.scenarios {
        let md = maxdist(instance, scenario, strategy);
        let cost2: f64 = strategy.stage2_open[&scenario.name]
            .iter()
            .map(|&i| scenario.stage2_costs[i])
            .sum();
        let covered = eta_bound.map_or(md <= 1.0 + 1e-9, |b| md <= b + 1e-9);
        if md.is_finite() {
            max_eta = max_eta.max(md);
        }
        rows.push(ScenarioReportRow { id: scenario.name.clone(), cost2, maxdist: md, covered });
    }
    Ok(SolveReport {
        schema_version: SCHEMA_VERSION,
        algo: algo.into(),
        status: "feasible".into(),
        radius,
        budget: instance.budget,
        expected_cost: Some(cost),
        max_eta: Some(max_eta),
        eta_bound,
        per_scenario: rows,
    })
}

fn infeasible_report(algo: &str, radius: Option<f64>, budget: f64) -> SolveReport {
    SolveReport {
        schema_version: SCHEMA_VERSION,
        algo: algo.into(),
        status: "infeasible".into(),
        radius,
        budget,
        expected_cost: None,
        max_eta: None,
        eta_bound: None,
        per_scenario: Vec::new(),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    let mut input_hashes = BTreeMap::new();
    let lp_cfg = LpConfig::default();

    // the two RW algorithms run on the extended schema without scenarios
    if args.algo == "rw3" || args.algo == "rw9" {
        let text = read_file(&args.instance)?;
        input_hashes.insert(args.instance.display().to_string(), sha256_hex(&text));
        let mut rw = RwInstanceFile::parse(&text)?.build()?;
        if let Some(r) = args.radius {
            rw.radii = vec![r; rw.num_clients()];
        }
        let (outcome, rho) = match args.algo.as_str() {
            "rw3" => {
                let r = rw.radii[0];
                (
                    solve_rw_homogeneous(&rw, r, &lp_cfg)?
                        .feasible()
                        .map(|o| o.open),
                    3.0,
                )
            }
            _ => (
                solve_rw_matsup_inhomogeneous(&rw, &lp_cfg)?.feasible().map(|o| o.open),
                9.0,
            ),
        };
        let (report, code) = match outcome {
            Some(open) => {
                let chk = check_rw_solution(&rw, &open, rho);
                let names: Vec<String> =
                    open.iter().map(|&i| rw.facility_names[i].clone()).collect();
                (
                    serde_json::json!({
                        "schema_version": SCHEMA_VERSION,
                        "algo": args.algo,
                        "status": "feasible",
                        "open": names,
                        "rho": rho,
                        "budget_used": chk.budget_used,
                        "budget": rw.budget,
                        "outliers": chk.outliers.iter().map(|&j| rw.client_names[j].clone()).collect::<Vec<_>>(),
                        "ok": chk.ok,
                    }),
                    EXIT_OK,
                )
            }
            None => (
                serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "algo": args.algo,
                    "status": "infeasible",
                }),
                EXIT_INFEASIBLE,
            ),
        };
        write_file(
            &args.out_dir.join("report.json"),
            &serde_json::to_string_pretty(&report).expect("serializable"),
        )?;
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            command: format!("solve --algo {}", args.algo),
            config: serde_json::json!({"radius": args.radius}),
            seed: None,
            input_hashes,
            outputs: vec![args.out_dir.join("report.json").display().to_string()],
            timings_ms: BTreeMap::from([("total", started.elapsed().as_millis())]),
            extra: None,
        };
        write_file(
            &args.out_dir.join("manifest.json"),
            &serde_json::to_string_pretty(&manifest).expect("serializable"),
        )?;
        return Ok(code);
    }

    let (instance, inst_text) = load_instance(&args.instance)?;
    input_hashes.insert(args.instance.display().to_string(), sha256_hex(&inst_text));
    let dist_path = args
        .dist
        .as_ref()
        .ok_or_else(|| CliError::Usage("--dist is required for this algorithm".into()))?;
    let (dist, dist_text) = load_dist(dist_path, &instance)?;
    input_hashes.insert(dist_path.display().to_string(), sha256_hex(&dist_text));

    let (outcome, eta_bound, radius_used) =
        dispatch_solve(&instance, &dist, &args.algo, args.radius, &lp_cfg)?;

    let (report, code) = match &outcome {
        Some(strategy) => {
            let report =
                strategy_report(&instance, &dist, strategy, &args.algo, radius_used, eta_bound)?;
            let strategy_file = StrategyFile::from_strategy(&instance, strategy);
            write_file(&args.out_dir.join("strategy.json"), &strategy_file.to_json())?;
            (report, EXIT_OK)
        }
        None => (infeasible_report(&args.algo, radius_used, instance.budget), EXIT_INFEASIBLE),
    };
    write_file(
        &args.out_dir.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("serializable"),
    )?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: format!("solve --algo {}", args.algo),
        config: serde_json::json!({"radius": args.radius}),
        seed: None,
        input_hashes,
        outputs: vec![
            args.out_dir.join("report.json").display().to_string(),
            args.out_dir.join("strategy.json").display().to_string(),
        ],
        timings_ms: BTreeMap::from([("total", started.elapsed().as_millis())]),
        extra: None,
    };
    write_file(
        &args.out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(code)
}

fn build_oracle(
    spec: &OracleSpecFile,
    spec_dir: &Path,
    instance: &Instance,
) -> Result<(BlackBoxOracle, BTreeMap<String, String>), CliError> {
    let mut hashes = BTreeMap::new();
    match spec {
        OracleSpecFile::Explicit { dist } => {
            let path = spec_dir.join(dist);
            let (d, text) = load_dist(&path, instance)?;
            hashes.insert(path.display().to_string(), sha256_hex(&text));
            Ok((BlackBoxOracle::Explicit { dist: d }, hashes))
        }
        OracleSpecFile::Bernoulli { activation, base_c2, multipliers, multiplier_probs } => {
            let mut act = vec![0.0; instance.num_clients()];
            for (j, name) in instance.client_names.iter().enumerate() {
                act[j] = *activation.get(name).ok_or_else(|| {
                    CliError::Usage(format!("oracle spec misses activation for client {name}"))
                })?;
            }
            let mut base = vec![0.0; instance.num_facilities()];
            for (i, name) in instance.facility_names.iter().enumerate() {
                base[i] = *base_c2.get(name).ok_or_else(|| {
                    CliError::Usage(format!("oracle spec misses base cost for facility {name}"))
                })?;
            }
            if multipliers.is_empty() {
                return Err(CliError::Usage("oracle spec needs at least one multiplier".into()));
            }
            let probs = match multiplier_probs {
                Some(p) => {
                    if p.len() != multipliers.len() {
                        return Err(CliError::Usage(
                            "multiplier_probs must match multipliers".into(),
                        ));
                    }
                    p.clone()
                }
                None => vec![1.0 / multipliers.len() as f64; multipliers.len()],
            };
            Ok((
                BlackBoxOracle::Bernoulli {
                    activation: act,
                    base_costs: base,
                    multipliers: multipliers.clone(),
                    multiplier_probs: probs,
                },
                hashes,
            ))
        }
    }
}

fn build_algo(name: &str, lp_cfg: &LpConfig) -> Result<Box<dyn GeneralizableAlgorithm>, CliError> {
    match name {
        "sup3" => Ok(Box::new(Sup3Algorithm { lp_cfg: lp_cfg.clone() })),
        "matsup5" | "musup5" => Ok(Box::new(ReductionAlgorithm {
            kind: ReductionKind::Homogeneous,
            lp_cfg: lp_cfg.clone(),
            weighting: PenaltyWeighting::ProbabilityWeighted,
        })),
        "matsup11" => Ok(Box::new(ReductionAlgorithm {
            kind: ReductionKind::IterativeRounding,
            lp_cfg: lp_cfg.clone(),
            weighting: PenaltyWeighting::ProbabilityWeighted,
        })),
        other => Err(CliError::Usage(format!("unknown inner algorithm {other}"))),
    }
}

/// One CSV row in the frozen summary schema.
#[allow(clippy::too_many_arguments)]
fn summary_row(
    command: &str,
    algo: &str,
    seed: u64,
    cfg: &SaaConfig,
    n_samples: Option<usize>,
    n_formula: Option<usize>,
    reps_used: usize,
    radius: Option<f64>,
    threshold: Option<f64>,
    status: &str,
    eval: Option<&crate::saa::EvalReport>,
) -> String {
    let fmt_opt_u = |v: Option<usize>| v.map_or(String::new(), |x| x.to_string());
    let fmt_opt_f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
    format!(
        "{SCHEMA_VERSION},{command},{algo},{seed},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.epsilon,
        cfg.alpha,
        cfg.gamma,
        fmt_opt_u(n_samples),
        fmt_opt_u(n_formula),
        reps_used,
        fmt_opt_f(radius),
        fmt_opt_f(threshold),
        status,
        fmt_opt_f(eval.map(|e| e.expected_cost)),
        fmt_opt_f(eval.map(|e| e.violation_prob)),
        fmt_opt_f(eval.map(|e| e.max_eta)),
    )
}

pub fn cmd_saa(args: &SaaArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    let (instance, inst_text) = load_instance(&args.instance)?;
    let mut input_hashes =
        BTreeMap::from([(args.instance.display().to_string(), sha256_hex(&inst_text))]);
    let oracle_text = read_file(&args.oracle)?;
    input_hashes.insert(args.oracle.display().to_string(), sha256_hex(&oracle_text));
    let oracle_spec: OracleSpecFile =
        serde_json::from_str(&oracle_text).map_err(|e| CliError::Usage(e.to_string()))?;
    let spec_dir = args.oracle.parent().unwrap_or(Path::new("."));
    let (oracle, oracle_hashes) = build_oracle(&oracle_spec, spec_dir, &instance)?;
    input_hashes.extend(oracle_hashes);

    let lp_cfg = LpConfig::default();
    let algo = build_algo(&args.algo, &lp_cfg)?;
    let mut config = SaaConfig::new(args.eps, args.alpha, args.gamma, args.seed);
    config.samples = args.samples;
    config.validate()?;

    let truth = match &args.truth {
        Some(path) => {
            let (d, text) = load_dist(path, &instance)?;
            input_hashes.insert(path.display().to_string(), sha256_hex(&text));
            Some(d)
        }
        None => None,
    };

    let mut extra = serde_json::Map::new();
    let (status, radius_used, strategy, report): (
        &str,
        Option<f64>,
        Option<crate::saa::DiscardingStrategy>,
        Option<crate::saa::SaaRunReport>,
    ) = if args.radius_search {
        match radius_search(&instance, &oracle, algo.as_ref(), &config)? {
            SolveOutcome::Feasible((radius, strategy, report, trials)) => {
                extra.insert(
                    "radius_grid".into(),
                    serde_json::to_value(&trials).expect("serializable"),
                );
                ("feasible", Some(radius), Some(strategy), Some(report))
            }
            SolveOutcome::Infeasible => ("infeasible", None, None, None),
        }
    } else {
        let r = homogeneous_radius_or(&instance, args.radius)?;
        let radii = vec![r; instance.num_clients()];
        let outcome = match args.delta {
            Some(delta) => {
                saa_bounded_delta(&instance, &oracle, algo.as_ref(), &radii, delta, &config)?
            }
            None => saa_run(&instance, &oracle, algo.as_ref(), &radii, &config)?,
        };
        match outcome {
            SolveOutcome::Feasible((strategy, report)) => {
                ("feasible", Some(r), Some(strategy), Some(report))
            }
            SolveOutcome::Infeasible => ("infeasible", Some(r), None, None),
        }
    };

    let eval = match (&strategy, &truth) {
        (Some(s), Some(t)) => Some(evaluate(&instance, t, algo.as_ref(), s)),
        _ => None,
    };

    let mut outputs = Vec::new();
    if let Some(s) = &strategy {
        let stage1: Vec<String> =
            s.stage1_open().iter().map(|&i| instance.facility_names[i].clone()).collect();
        let strategy_json = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "stage1_open": stage1,
            "threshold": if s.threshold.is_finite() { serde_json::json!(s.threshold) } else { serde_json::json!("infinity") },
            "eta": s.eta,
        });
        let path = args.out_dir.join("strategy.json");
        write_file(&path, &serde_json::to_string_pretty(&strategy_json).expect("serializable"))?;
        outputs.push(path.display().to_string());
    }
    if let Some(r) = &report {
        extra.insert("run".into(), serde_json::to_value(r).expect("serializable"));
    }
    if let Some(e) = &eval {
        extra.insert("evaluation".into(), serde_json::to_value(e).expect("serializable"));
    }

    let summary = format!(
        "{}\n{}\n",
        SUMMARY_CSV_HEADER,
        summary_row(
            if args.radius_search { "saa-radius-search" } else { "saa" },
            &args.algo,
            args.seed,
            &config,
            report.as_ref().map(|r| r.samples_used),
            report.as_ref().map(|r| r.samples_formula),
            report.as_ref().map_or(0, |r| r.repetitions.len()),
            radius_used,
            report.as_ref().map(|r| r.threshold),
            status,
            eval.as_ref(),
        )
    );
    let summary_path = args.out_dir.join("summary.csv");
    write_file(&summary_path, &summary)?;
    outputs.push(summary_path.display().to_string());

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: format!("saa --algo {}", args.algo),
        config: serde_json::to_value(&config).expect("serializable"),
        seed: Some(args.seed),
        input_hashes,
        outputs,
        timings_ms: BTreeMap::from([("total", started.elapsed().as_millis())]),
        extra: Some(serde_json::Value::Object(extra)),
    };
    write_file(
        &args.out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(if status == "feasible" { EXIT_OK } else { EXIT_INFEASIBLE })
}

/// Report of the rare-scenario estimator demonstration.
#[derive(Debug, Serialize, Deserialize)]
pub struct AppendixDemoReport {
    pub schema_version: u32,
    pub p: f64,
    pub cost: f64,
    pub samples: usize,
    pub seeds: usize,
    pub mean_of_estimates: f64,
    pub std_of_estimates: f64,
    /// std / mean, or 0 when the estimates are all zero.
    pub relative_std: f64,
}

/// Simulates the empirical-mean cost estimator for a two-point cost
/// distribution (cost with probability p, zero otherwise) across many
/// seeds. With p small and cost large the estimator's relative spread
/// blows up, which is exactly why naive cost estimation cannot drive the
/// radius search.
pub fn appendix_demo_simulation(
    p: f64,
    cost: f64,
    samples: usize,
    seeds: usize,
    stage1_cost: f64,
    seed: u64,
) -> AppendixDemoReport {
    let mut estimates = Vec::with_capacity(seeds);
    for s in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
        let mut total = 0.0;
        for _ in 0..samples {
            if rng.gen::<f64>() < p {
                total += cost;
            }
        }
        estimates.push(stage1_cost + total / samples.max(1) as f64);
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len().max(1) as f64;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
        / estimates.len().max(1) as f64;
    let std = var.sqrt();
    AppendixDemoReport {
        schema_version: SCHEMA_VERSION,
        p,
        cost,
        samples,
        seeds,
        mean_of_estimates: mean,
        std_of_estimates: std,
        relative_std: if std == 0.0 { 0.0 } else { std / mean },
    }
}

pub fn cmd_appendix_demo(args: &AppendixDemoArgs) -> Result<i32, CliError> {
    let started = Instant::now();
    if args.samples == 0 || args.seeds == 0 {
        return Err(CliError::Usage("samples and seeds must be positive".into()));
    }
    if !(0.0..=1.0).contains(&args.p) {
        return Err(CliError::Usage("p must lie in [0,1]".into()));
    }
    let report = appendix_demo_simulation(
        args.p,
        args.cost,
        args.samples,
        args.seeds,
        args.stage1_cost,
        args.seed,
    );
    let path = args.out_dir.join("appendix_demo.json");
    write_file(&path, &serde_json::to_string_pretty(&report).expect("serializable"))?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: "appendix-demo".into(),
        config: serde_json::json!({
            "p": args.p, "cost": args.cost, "samples": args.samples,
            "seeds": args.seeds, "stage1_cost": args.stage1_cost,
        }),
        seed: Some(args.seed),
        input_hashes: BTreeMap::new(),
        outputs: vec![path.display().to_string()],
        timings_ms: BTreeMap::from([("total", started.elapsed().as_millis())]),
        extra: None,
    };
    write_file(
        &args.out_dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    Ok(EXIT_OK)
}
