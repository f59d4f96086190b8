use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use slotplan::bench::{pairwise_tests, run_experiment, write_grid_csv, write_report_csv, SensitivitySpec};
use slotplan::generate::{generate_instance, GenerateSpec};
use slotplan::io::{parse_instance, parse_proposal, serialize_instance, ConfigFile};
use slotplan::model::MarketParams;
use slotplan::optimizer::{run, Algorithm, AlgorithmConfig, ConvergenceTrace, OptimizerError};
use slotplan::plot::{convergence_svg, marey_svg};
use slotplan::scheduler::{
    evaluate_proposal, exhaustive_oracle, requested_vector, EvalOptions, ScheduleResult, DEFAULT_ORACLE_CAP,
};
use slotplan::ProblemInstance;

#[derive(Parser)]
#[command(name = "slotplan", version, about = "Revenue-maximising train slot allocation on a corridor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Optimise departures with one metaheuristic.
    Solve(SolveArgs),
    /// Best conflict-free subset by exhaustive search (small instances only).
    Oracle(OracleArgs),
    /// Score a proposal with the greedy scheduler.
    Evaluate(EvaluateArgs),
    /// Multi-run comparison of several algorithms.
    Bench(BenchArgs),
    /// Mean revenue over a grid of headways and margins.
    Sensitivity(SensitivityArgs),
    /// Render SVG charts.
    #[command(subcommand)]
    Plot(PlotCommand),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 25)]
    services: usize,
    #[arg(long, default_value_t = 4)]
    operators: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full generator spec (JSON); --services, --operators and --seed override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "GA")]
    algo: String,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Optimizer config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named budget preset instead of a config file.
    #[arg(long, conflicts_with = "config", value_parser = ["defaults", "tuned-25"])]
    preset: Option<String>,
    #[arg(long)]
    no_repair: bool,
    #[arg(long)]
    no_seed_request: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Departures to evaluate; the requested times when omitted.
    #[arg(long)]
    proposal: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
    cap: usize,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    proposal: Option<PathBuf>,
    /// Override the instance's safety headway.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    no_repair: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',', default_value = "GA,PSO,SA,DE,ACOR,GWO,WOA,GWO_WOA")]
    algos: Vec<String>,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config", value_parser = ["defaults", "tuned-25"])]
    preset: Option<String>,
    /// Per-run CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary and pairwise tests as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    /// Grid spec (JSON); built-in defaults when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Time-distance chart of an instance or a result.
    Marey {
        #[arg(long)]
        instance: PathBuf,
        /// Output of `solve`, `evaluate` or `oracle`.
        #[arg(long)]
        result: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best fitness per epoch for one or more `solve` outputs.
    Convergence {
        #[arg(long, num_args = 1.., required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes, mapped to exit codes 1 (usage), 2 (data), 3 (runtime).
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<OptimizerError> for Failure {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InvalidConfig(_) | OptimizerError::UnknownAlgorithm(_) => Failure::Usage(e.into()),
            _ => Failure::Runtime(e.into()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn data<T, E: Into<anyhow::Error>>(r: Result<T, E>, what: &Path) -> Outcome<T> {
    r.map_err(|e| Failure::Data(e.into().context(format!("{}", what.display()))))
}

fn runtime<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Outcome<T> {
    r.map_err(|e| Failure::Runtime(e.into()))
}

fn read(path: &Path) -> Outcome<String> {
    data(fs::read_to_string(path), path)
}

fn load_instance(path: &Path) -> Outcome<ProblemInstance> {
    data(parse_instance(&read(path)?), path)
}

fn with_omega(instance: ProblemInstance, omega: Option<f64>) -> Outcome<ProblemInstance> {
    match omega {
        None => Ok(instance),
        Some(omega) => instance
            .with_params(MarketParams { omega, ..*instance.params() })
            .map_err(|e| Failure::Usage(e.into())),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(p) => runtime(fs::write(p, text).with_context(|| format!("writing {}", p.display()))),
        None => runtime(std::io::stdout().write_all(text.as_bytes())),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Outcome<()> {
    let mut text = runtime(serde_json::to_string_pretty(value))?;
    text.push('\n');
    emit(out, &text)
}

fn parse_algorithm(name: &str) -> Outcome<Algorithm> {
    name.parse().map_err(|e: OptimizerError| Failure::Usage(e.into()))
}

fn config_source(config: Option<&Path>, preset: Option<&str>) -> Outcome<ConfigFile> {
    if let Some(path) = config {
        return data(ConfigFile::parse(&read(path)?), path);
    }
    Ok(ConfigFile { preset: preset.map(str::to_string), ..ConfigFile::default() })
}

fn proposal_vector(instance: &ProblemInstance, path: Option<&Path>) -> Outcome<Vec<f64>> {
    match path {
        Some(p) => data(parse_proposal(&read(p)?, instance), p),
        None => Ok(requested_vector(instance)),
    }
}

fn generate(args: GenerateArgs) -> Outcome<()> {
    let mut spec = match &args.spec {
        Some(p) => data(serde_json::from_str::<GenerateSpec>(&read(p)?), p)?,
        None => GenerateSpec::default(),
    };
    spec.n_services = args.services;
    spec.n_operators = args.operators;
    spec.seed = args.seed;
    let instance = generate_instance(&spec).map_err(|e| Failure::Usage(e.into()))?;
    emit(args.out.as_deref(), &(serialize_instance(&instance) + "\n"))
}

fn solve(args: SolveArgs) -> Outcome<()> {
    let instance = load_instance(&args.instance)?;
    let source = config_source(args.config.as_deref(), args.preset.as_deref())?;
    let algorithm = parse_algorithm(&args.algo)?;
    let mut config: AlgorithmConfig = source.resolve(algorithm);
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(p) = args.pop {
        config.population = p;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.repair &= !args.no_repair;
    config.seed_with_request &= !args.no_seed_request;
    let trace = run(&instance, &config)?;
    eprintln!(
        "{}: revenue {:.2}, {} of {} services, {} evaluations in {:.3} s",
        trace.algorithm,
        trace.best_fitness,
        trace.result.scheduled_count(),
        instance.len(),
        trace.evaluations,
        trace.wall_time.as_secs_f64()
    );
    emit_json(args.out.as_deref(), &trace)
}

fn oracle(args: OracleArgs) -> Outcome<()> {
    let instance = with_omega(load_instance(&args.instance)?, args.omega)?;
    let x = proposal_vector(&instance, args.proposal.as_deref())?;
    let result = runtime(exhaustive_oracle(&instance, &x, EvalOptions::default(), args.cap))?;
    emit_json(args.out.as_deref(), &result)
}

fn evaluate(args: EvaluateArgs) -> Outcome<()> {
    let instance = with_omega(load_instance(&args.instance)?, args.omega)?;
    let x = proposal_vector(&instance, args.proposal.as_deref())?;
    let result = runtime(evaluate_proposal(&instance, &x, EvalOptions { repair: !args.no_repair }))?;
    emit_json(args.out.as_deref(), &result)
}

fn bench(args: BenchArgs) -> Outcome<()> {
    let instance = load_instance(&args.instance)?;
    let source = config_source(args.config.as_deref(), args.preset.as_deref())?;
    let configs = args
        .algos
        .iter()
        .map(|a| parse_algorithm(a).map(|a| source.resolve(a)))
        .collect::<Outcome<Vec<_>>>()?;
    if args.runs == 0 {
        return Err(Failure::Usage(anyhow!("--runs must be at least 1")));
    }
    let report = run_experiment(&instance, &configs, args.runs, args.base_seed).map_err(|e| match e {
        slotplan::bench::BenchError::Optimizer(o) => Failure::from(o),
        other => Failure::Runtime(other.into()),
    })?;
    let mut csv = Vec::new();
    runtime(write_report_csv(&report, &mut csv))?;
    emit(args.out.as_deref(), &runtime(String::from_utf8(csv))?)?;
    eprintln!("{:<8} {:>12} {:>10} {:>10} {:>8}", "algo", "revenue", "sd", "time_s", "trains");
    for s in &report.summary {
        eprintln!(
            "{:<8} {:>12.2} {:>10.2} {:>10.3} {:>8.1}",
            s.algorithm.name(),
            s.revenue.mean,
            s.revenue.std,
            s.time_s.mean,
            s.scheduled_trains.mean
        );
    }
    if let Some(path) = &args.summary {
        #[derive(Serialize)]
        struct Summary<'a> {
            summary: &'a [slotplan::bench::AlgorithmSummary],
            comparisons: Vec<slotplan::bench::Comparison>,
        }
        let comparisons = runtime(pairwise_tests(&report))?;
        emit_json(Some(path), &Summary { summary: &report.summary, comparisons })?;
    }
    Ok(())
}

fn sensitivity(args: SensitivityArgs) -> Outcome<()> {
    let spec = match &args.spec {
        Some(p) => data(serde_json::from_str::<SensitivitySpec>(&read(p)?), p)?,
        None => SensitivitySpec::default(),
    };
    let cells = spec.run().map_err(|e| match e {
        slotplan::bench::BenchError::Optimizer(o) => Failure::from(o),
        slotplan::bench::BenchError::Empty(_) | slotplan::bench::BenchError::NoRuns => Failure::Usage(e.into()),
        other => Failure::Runtime(other.into()),
    })?;
    let mut csv = Vec::new();
    runtime(write_grid_csv(&cells, &mut csv))?;
    emit(args.out.as_deref(), &runtime(String::from_utf8(csv))?)
}

fn load_result(path: &Path) -> Outcome<ScheduleResult> {
    let text = read(path)?;
    if let Ok(trace) = serde_json::from_str::<ConvergenceTrace>(&text) {
        return Ok(trace.result);
    }
    data(serde_json::from_str::<ScheduleResult>(&text), path)
}

fn plot(cmd: PlotCommand) -> Outcome<()> {
    match cmd {
        PlotCommand::Marey { instance, result, out } => {
            let inst = load_instance(&instance)?;
            let result = result.as_deref().map(load_result).transpose()?;
            if let Some(r) = &result {
                if r.departures.len() != inst.len() {
                    return Err(Failure::Data(anyhow!("result does not match the instance")));
                }
            }
            let svg = marey_svg(&inst, result.as_ref().map(|r| r.departures.as_slice()), result.as_ref().map(|r| r.scheduled.as_slice()))
                .map_err(|e| Failure::Data(e.into()))?;
            emit(out.as_deref(), &svg)
        }
        PlotCommand::Convergence { traces, out } => {
            let traces = traces
                .iter()
                .map(|p| data(serde_json::from_str::<ConvergenceTrace>(&read(p)?), p))
                .collect::<Outcome<Vec<_>>>()?;
            emit(out.as_deref(), &convergence_svg(&traces))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Oracle(a) => oracle(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => bench(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Plot(p) => plot(p),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Data(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}
