//! Command-line frontend.
//!
//! Exit codes: 0 success, 2 invalid input (bad flags, bad config, invalid
//! model parameters), 1 runtime failure (I/O). Every JSON output embeds a
//! run manifest (crate version plus the fully resolved invocation), and
//! `sweep --config` accepts a previous JSON output to re-run it.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::classifier::{
    classify_diagonal, classify_ratio, classify_series, ChainSpec, Verdict,
};
use crate::config::{load_config, ConfigError};
use crate::drift::{validate, DriftFunction, TabulatedDrift, TailRule, Violation};
use crate::experiments::{
    evidence_report, example_spec, run_from_spec, write_csv, write_gnuplot, ExperimentSpec,
    SimulationSettings, SweepResult,
};
use crate::oracle::{expected_returns, hit_probability, stationary, HittingProblem};
use crate::simulator::{
    drift_vanishing_check, run_ensemble_detailed, run_walk, Mode, PathCapture, WalkConfig,
};

/// Environment variable naming the directory relative output paths land in.
pub const OUTPUT_DIR_ENV: &str = "BDWALK_OUTPUT_DIR";

#[derive(Parser, Debug, Serialize)]
#[command(name = "bdwalk", version, about = "Classify and simulate time-inhomogeneous birth-and-death random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Analytic recurrence/transience verdict for a drift function.
    Classify(ClassifyArgs),
    /// Sample trajectories or replica ensembles.
    Simulate(SimulateArgs),
    /// Exact computations on homogeneous chains.
    Oracle(OracleArgs),
    /// Run a config-driven parameter sweep.
    Sweep(SweepArgs),
    /// Run one of the built-in example sweeps (1-4).
    Example(ExampleArgs),
    /// Check the drift invariants on a sampled lattice.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Serialize, Clone)]
struct DriftArgs {
    /// Drift family: power_law | power_law_boundary | exponential | constant | tabulated.
    #[arg(long)]
    family: String,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Constant family value.
    #[arg(long, allow_negative_numbers = true)]
    value: Option<f64>,
    /// CSV file (`n,t,phi`) for the tabulated family.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Tail rule for tabulated drifts.
    #[arg(long, value_enum, default_value_t = TailArg::Constant)]
    tail: TailArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum TailArg {
    Constant,
    Zero,
}

impl DriftArgs {
    fn build(&self) -> Result<DriftFunction, CliError> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::invalid(format!("--{name} is required for --family {}", self.family)))
        };
        let drift = match self.family.as_str() {
            "power_law" => DriftFunction::power_law(
                need("rho", self.rho)?,
                need("alpha", self.alpha)?,
                need("beta", self.beta)?,
            ),
            "power_law_boundary" => {
                let alpha = need("alpha", self.alpha)?;
                DriftFunction::power_law(2.0 * need("rho", self.rho)?, alpha, (1.0 + alpha) / 2.0)
            }
            "exponential" => {
                DriftFunction::exponential(need("alpha", self.alpha)?, need("beta", self.beta)?)
            }
            "constant" => DriftFunction::constant(need("value", self.value)?),
            "tabulated" => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::invalid("--table is required for --family tabulated"))?;
                let tail = match self.tail {
                    TailArg::Constant => TailRule::ConstantExtend,
                    TailArg::Zero => TailRule::Zero,
                };
                TabulatedDrift::from_csv_path(path, tail).map(DriftFunction::tabulated)
            }
            other => return Err(CliError::invalid(format!("unknown --family {other}"))),
        };
        drift.map_err(|e| CliError::invalid(e.to_string()))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodArg {
    /// Diagonal test on φ(n, n²).
    Diagonal,
    /// Homogeneous ratio test on the chain frozen along the diagonal.
    Ratio,
    /// Series criterion on the same chain.
    Series,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    #[command(flatten)]
    drift: DriftArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Diagonal)]
    method: MethodArg,
    #[arg(long, default_value_t = crate::classifier::DEFAULT_N_LO)]
    n_lo: u64,
    #[arg(long, default_value_t = crate::classifier::DEFAULT_N_HI)]
    n_hi: u64,
    #[arg(long, default_value_t = crate::classifier::DEFAULT_MARGIN)]
    margin: f64,
    /// Series criterion term count.
    #[arg(long, default_value_t = 16384)]
    terms: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    drift: DriftArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Discrete)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    start_state: u64,
    #[arg(long, default_value_t = 1)]
    start_time: u64,
    #[arg(long)]
    escape_level: Option<u64>,
    #[arg(long, default_value_t = false)]
    stop_at_escape: bool,
    #[arg(long, default_value_t = false)]
    stop_at_zero: bool,
    /// Continuous mode: evaluate the jump direction at the jump instant.
    #[arg(long, default_value_t = false)]
    exact_rates: bool,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Comma-separated times at which mean state is sampled.
    #[arg(long, value_delimiter = ',')]
    sample_times: Vec<u64>,
    /// Write the (decimated) path of the first replica to this CSV.
    #[arg(long)]
    path_csv: Option<PathBuf>,
    /// Estimate E φ(X_t, t) on the sample times instead of plain ensembles.
    #[arg(long, default_value_t = false)]
    drift_check: bool,
    /// Vanishing threshold for --drift-check.
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Discrete,
    Continuous,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[command(subcommand)]
    query: OracleQuery,
}

#[derive(Args, Debug, Serialize, Clone)]
struct ChainArgs {
    /// Symmetric chain (λ = μ = 1/2).
    #[arg(long, default_value_t = false)]
    symmetric: bool,
    /// Ratio family λ_n/μ_n = 1 + c/n.
    #[arg(long, allow_negative_numbers = true)]
    ratio_c: Option<f64>,
    /// Constant birth rate (pair with --mu).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Constant death rate (pair with --lambda).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// CSV file (`n,lambda,mu`) of tabulated rates.
    #[arg(long)]
    rates_csv: Option<PathBuf>,
}

impl ChainArgs {
    fn build(&self) -> Result<ChainSpec, CliError> {
        let picked = [
            self.symmetric,
            self.ratio_c.is_some(),
            self.lambda.is_some() || self.mu.is_some(),
            self.rates_csv.is_some(),
        ]
        .iter()
        .filter(|p| **p)
        .count();
        if picked != 1 {
            return Err(CliError::invalid(
                "pick exactly one chain: --symmetric, --ratio-c, --lambda/--mu, or --rates-csv",
            ));
        }
        if self.symmetric {
            return Ok(ChainSpec::symmetric());
        }
        if let Some(c) = self.ratio_c {
            return ChainSpec::ratio_family(c).map_err(|e| CliError::invalid(e.to_string()));
        }
        if let Some(path) = &self.rates_csv {
            return ChainSpec::from_csv_path(path).map_err(|e| CliError::invalid(e.to_string()));
        }
        match (self.lambda, self.mu) {
            (Some(l), Some(m)) => ChainSpec::constant(l, m).map_err(|e| CliError::invalid(e.to_string())),
            _ => Err(CliError::invalid("--lambda and --mu must be given together")),
        }
    }
}

#[derive(Subcommand, Debug, Serialize)]
enum OracleQuery {
    /// P(hit b before a | start k), exact.
    Hit {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        k: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Truncated stationary distribution.
    Stationary {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1000)]
        trunc: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Escape/return analysis from one excursion.
    Returns {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1000)]
        horizon_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    /// TOML config, or a JSON output of a previous run (its manifest re-runs).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Attach Monte Carlo evidence and emit the evidence report.
    #[arg(long, default_value_t = false)]
    evidence: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct ExampleArgs {
    /// Example id, 1-4.
    id: u8,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Attach Monte Carlo evidence and emit the evidence report.
    #[arg(long, default_value_t = false)]
    evidence: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    #[command(flatten)]
    drift: DriftArgs,
    #[arg(long, default_value_t = 64)]
    n_max: u64,
    #[arg(long, default_value_t = 1_048_576.0)]
    t_max: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Serialize, Clone)]
struct OutArgs {
    /// Output file; stdout when absent. Relative paths land in
    /// $BDWALK_OUTPUT_DIR when it is set.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json (default) or csv (sweeps, examples and ensembles only).
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug)]
struct CliError {
    message: String,
    exit_code: i32,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 2,
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            exit_code: 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::runtime(e.to_string()),
            _ => CliError::invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

/// Full JSON document: run manifest plus the result payload.
#[derive(Serialize)]
struct Document<C: Serialize, R: Serialize> {
    manifest: DocManifest<C>,
    result: R,
}

#[derive(Serialize)]
struct DocManifest<C: Serialize> {
    version: &'static str,
    command: C,
}

fn manifest_doc<C: Serialize, R: Serialize>(command: C, result: R) -> Document<C, R> {
    Document {
        manifest: DocManifest {
            version: env!("CARGO_PKG_VERSION"),
            command,
        },
        result,
    }
}

fn resolve_output(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

fn emit(out: &OutArgs, text: String) -> Result<(), CliError> {
    match &out.output {
        None => {
            let mut stdout = std::io::stdout();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
        Some(path) => write_file(path, text.as_bytes()),
    }
}

fn emit_json<C: Serialize, R: Serialize>(out: &OutArgs, command: C, result: R) -> Result<(), CliError> {
    if out.format == FormatArg::Csv {
        return Err(CliError::invalid(
            "--format csv is only available for sweep, example, and multi-replica simulate outputs",
        ));
    }
    let doc = manifest_doc(command, result);
    emit(out, serde_json::to_string_pretty(&doc)?)
}

fn run_classify(args: &ClassifyArgs) -> Result<(), CliError> {
    let drift = args.drift.build()?;
    let verdict: Verdict = match args.method {
        MethodArg::Diagonal => classify_diagonal(&drift, args.n_lo, args.n_hi, args.margin),
        MethodArg::Ratio => classify_ratio(
            &ChainSpec::diagonal_of(drift.clone()),
            args.n_lo,
            args.n_hi,
            args.margin,
        ),
        MethodArg::Series => classify_series(
            &ChainSpec::diagonal_of(drift.clone()),
            args.terms,
            args.margin,
        ),
    }
    .map_err(|e| CliError::invalid(e.to_string()))?;
    emit_json(&args.out, args, verdict)
}

#[derive(Serialize)]
struct SimulateResult<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<&'a crate::simulator::TrajectoryStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ensemble: Option<&'a crate::simulator::EnsembleStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift_check: Option<&'a crate::simulator::DriftVanishingReport>,
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let drift = args.drift.build()?;
    let mut cfg = WalkConfig::new(
        drift,
        args.horizon,
        args.seed,
        match args.mode {
            ModeArg::Discrete => Mode::Discrete,
            ModeArg::Continuous => Mode::Continuous,
        },
    );
    cfg.start_state = args.start_state;
    cfg.start_time = args.start_time;
    cfg.escape_level = args.escape_level;
    cfg.stop_at_escape = args.stop_at_escape;
    cfg.stop_at_zero = args.stop_at_zero;
    cfg.exact_rates = args.exact_rates;
    cfg.max_steps = args.max_steps;
    cfg.sample_times = args.sample_times.clone();
    if args.path_csv.is_some() {
        cfg.capture = PathCapture::Decimated { max_points: 4096 };
    }
    let invalid = |e: crate::simulator::SimError| CliError::invalid(e.to_string());

    if args.drift_check {
        if args.sample_times.is_empty() {
            return Err(CliError::invalid("--drift-check needs --sample-times"));
        }
        let report = drift_vanishing_check(&cfg, args.replicas.max(1), &args.sample_times, args.threshold)
            .map_err(invalid)?;
        return emit_json(
            &args.out,
            args,
            SimulateResult {
                trajectory: None,
                ensemble: None,
                drift_check: Some(&report),
            },
        );
    }

    if args.replicas <= 1 {
        let stats = run_walk(&cfg).map_err(invalid)?;
        if let Some(path_csv) = &args.path_csv {
            write_path_csv(path_csv, stats.path.as_deref().unwrap_or_default())?;
        }
        return emit_json(
            &args.out,
            args,
            SimulateResult {
                trajectory: Some(&stats),
                ensemble: None,
                drift_check: None,
            },
        );
    }

    let (ensemble, runs) = run_ensemble_detailed(&cfg, args.replicas, None).map_err(invalid)?;
    if let Some(path_csv) = &args.path_csv {
        write_path_csv(path_csv, runs[0].path.as_deref().unwrap_or_default())?;
    }
    if args.out.format == FormatArg::Csv {
        let mut buf = String::new();
        buf.push_str("replica,seed,returns,first_return_time,max_state,final_state,hit_level,hit_time,time_at_zero,steps,draws\n");
        for (i, r) in runs.iter().enumerate() {
            buf.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                i,
                crate::simulator::split_seed(args.seed, i as u64),
                r.returns_to_zero,
                r.first_return_time.map(|t| t.to_string()).unwrap_or_default(),
                r.max_state,
                r.final_state,
                r.hit_upper.map(|h| h.level.to_string()).unwrap_or_default(),
                r.hit_upper.map(|h| h.time.to_string()).unwrap_or_default(),
                r.time_at_zero,
                r.steps,
                r.draws,
            ));
        }
        buf.push_str(&format!(
            "summary,{},{},,{},,,,{},{},{}\n",
            ensemble.master_seed,
            ensemble.return_frequency,
            ensemble
                .escape_frequency
                .map(|p| p.to_string())
                .unwrap_or_default(),
            ensemble.mean_returns,
            ensemble.total_steps,
            ensemble.total_draws,
        ));
        return emit(&args.out, buf);
    }
    emit_json(
        &args.out,
        args,
        SimulateResult {
            trajectory: None,
            ensemble: Some(&ensemble),
            drift_check: None,
        },
    )
}

fn write_path_csv(path: &Path, points: &[(f64, u64)]) -> Result<(), CliError> {
    let mut buf = String::from("t,state\n");
    for (t, state) in points {
        buf.push_str(&format!("{t},{state}\n"));
    }
    write_file(path, buf.as_bytes())
}

fn run_oracle(args: &OracleArgs) -> Result<(), CliError> {
    let invalid = |e: crate::oracle::OracleError| CliError::invalid(e.to_string());
    match &args.query {
        OracleQuery::Hit { chain, a, b, k, out } => {
            let problem = HittingProblem::new(chain.build()?, *k, *a, *b).map_err(invalid)?;
            let p = hit_probability(&problem).map_err(invalid)?;
            #[derive(Serialize)]
            struct HitResult {
                probability: f64,
            }
            emit_json(out, args, HitResult { probability: p })
        }
        OracleQuery::Stationary { chain, trunc, out } => {
            let dist = stationary(&chain.build()?, *trunc).map_err(invalid)?;
            emit_json(out, args, dist)
        }
        OracleQuery::Returns {
            chain,
            horizon_states,
            out,
        } => {
            let analysis = expected_returns(&chain.build()?, *horizon_states).map_err(invalid)?;
            emit_json(out, args, analysis)
        }
    }
}

#[derive(Serialize)]
struct SweepDocument<'a, C: Serialize> {
    manifest: &'a crate::experiments::Manifest,
    command: C,
    records: &'a [crate::experiments::SweepRecord],
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<crate::experiments::EvidenceReport>,
    timings: &'a crate::experiments::Timings,
}

fn emit_sweep<C: Serialize>(out: &OutArgs, command: C, sweep: &SweepResult, with_report: bool) -> Result<(), CliError> {
    match out.format {
        FormatArg::Csv => {
            let mut buf = Vec::new();
            write_csv(sweep, &mut buf)?;
            emit(out, String::from_utf8(buf).expect("csv is utf-8"))
        }
        FormatArg::Json => {
            let doc = SweepDocument {
                manifest: &sweep.manifest,
                command,
                records: &sweep.records,
                evidence: with_report.then(|| evidence_report(sweep)),
                timings: &sweep.timings,
            };
            emit(out, serde_json::to_string_pretty(&doc)?)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let path = resolve_output(path);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, bytes)?;
    Ok(())
}

fn write_auxiliary_outputs(sweep: &SweepResult) -> Result<(), CliError> {
    let spec = &sweep.manifest.spec;
    if let Some(path) = &spec.outputs.json {
        let doc = serde_json::json!({
            "manifest": sweep.manifest,
            "records": sweep.records,
            "timings": sweep.timings,
        });
        write_file(Path::new(path), serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    if let Some(path) = &spec.outputs.csv {
        let mut buf = Vec::new();
        write_csv(sweep, &mut buf)?;
        write_file(Path::new(path), &buf)?;
    }
    if let Some(path) = &spec.outputs.gnuplot {
        let mut buf = Vec::new();
        write_gnuplot(sweep, &mut buf)?;
        write_file(Path::new(path), &buf)?;
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut spec: ExperimentSpec = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        spec.simulation.seed = seed;
    }
    if args.evidence {
        spec.outputs.evidence = true;
    }
    let sweep = run_from_spec(&spec).map_err(|e| match e {
        crate::experiments::ExperimentError::Io(io) => CliError::runtime(io.to_string()),
        other => CliError::invalid(other.to_string()),
    })?;
    write_auxiliary_outputs(&sweep)?;
    emit_sweep(&args.out, args, &sweep, spec.outputs.evidence)
}

fn run_example_cmd(args: &ExampleArgs) -> Result<(), CliError> {
    let mut overrides = crate::experiments::ExampleOverrides {
        rho: args.rho,
        evidence: args.evidence,
        ..Default::default()
    };
    if args.replicas.is_some() || args.horizon.is_some() || args.seed.is_some() {
        let mut sim = SimulationSettings::default();
        if let Some(r) = args.replicas {
            sim.replicas = r;
        }
        if let Some(h) = args.horizon {
            sim.horizon = h;
        }
        if let Some(s) = args.seed {
            sim.seed = s;
        }
        overrides.simulation = Some(sim);
    }
    let spec = example_spec(args.id, &overrides).map_err(|e| CliError::invalid(e.to_string()))?;
    let sweep = run_from_spec(&spec).map_err(|e| CliError::invalid(e.to_string()))?;
    write_auxiliary_outputs(&sweep)?;
    emit_sweep(&args.out, args, &sweep, args.evidence)
}

#[derive(Serialize)]
struct ValidateResult {
    violations: Vec<Violation>,
    n_max: u64,
    t_max: f64,
}

fn run_validate(args: &ValidateArgs) -> Result<(), CliError> {
    let drift = args.drift.build()?;
    let violations = validate(&drift, args.n_max, args.t_max);
    emit_json(
        &args.out,
        args,
        ValidateResult {
            violations,
            n_max: args.n_max,
            t_max: args.t_max,
        },
    )
}

/// Parses `argv` and executes; returns the process exit code. Never panics
/// on user input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Classify(args) => run_classify(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Example(args) => run_example_cmd(args),
        Command::Validate(args) => run_validate(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.exit_code
        }
    }
}
