//! `intent` subcommands. Exit codes: 0 success, 1 output I/O failure,
//! 2 bad input or parameters, 3 server bind failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use intent_core::geometry::{GoalId, SamplePattern, Vec3};
use intent_core::{Observation, SessionConfig};
use rayon::prelude::*;

use crate::metrics::SweepMetrics;
use crate::scenario::{self, Scenario};
use crate::trace::{write_trace, TraceFormat, TraceMeta};
use crate::{builtins, replay, resolve_scenario, server};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BIND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "intent", version, about = "Goal intention estimation from gaze and hand motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the estimator over a scenario and write the per-step trace.
    Replay(ReplayArgs),
    /// Replay a scenario once per parameter value and tabulate summary metrics.
    Sweep(SweepArgs),
    /// Write the synthesized observation stream of a scenario as JSON lines.
    Synth(SynthArgs),
    /// Serve the websocket protocol, a health endpoint and static assets.
    Serve(ServeArgs),
    /// List built-in scenarios, optionally exporting them as TOML files.
    Scenarios(ScenariosArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternArg {
    Sphere,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Alpha,
    Beta,
    Gamma,
    Delta,
    M,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::Delta => "delta",
            SweepParam::M => "m",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Evidence window length in samples.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_enum)]
    pub pattern: Option<PatternArg>,
    /// Candidate points per sample.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub epsilon_motion: Option<f64>,
}

impl ModelArgs {
    pub fn config(&self) -> SessionConfig {
        let mut config = SessionConfig::default();
        let p = &mut config.params;
        p.alpha = self.alpha.unwrap_or(p.alpha);
        p.beta = self.beta.unwrap_or(p.beta);
        p.gamma = self.gamma.unwrap_or(p.gamma);
        p.delta = self.delta.unwrap_or(p.delta);
        p.m = self.m.unwrap_or(p.m);
        let count = self.samples.unwrap_or(config.pattern.count);
        config.pattern = match self.pattern.unwrap_or(PatternArg::Sphere) {
            PatternArg::Sphere => SamplePattern::sphere(count),
            PatternArg::Circle => SamplePattern::circle(Vec3::Z, count),
        };
        config.epsilon_motion = self.epsilon_motion.unwrap_or(config.epsilon_motion);
        config
    }
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Scenario TOML file or `builtin:<name>`.
    pub scenario: String,
    /// Replay this observation file (JSON lines) instead of synthesizing.
    #[arg(long)]
    pub observations: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    /// Omit wall-clock timestamps so reruns are byte-identical.
    #[arg(long)]
    pub deterministic: bool,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: String,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    pub format: TraceFormat,
    #[arg(long)]
    pub deterministic: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Directory of static playground assets.
    #[arg(long, default_value = "assets")]
    pub assets: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScenariosArgs {
    /// Write every built-in scenario to `<dir>/<name>.toml`.
    #[arg(long)]
    pub export: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Bind(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Bind(_) => EXIT_BIND,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Replay(args) => cmd_replay(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Serve(args) => cmd_serve(&args),
        Command::Scenarios(args) => cmd_scenarios(&args),
    }
}

fn load(source: &str, seed: Option<u64>) -> Result<Scenario, CliError> {
    let mut scenario = resolve_scenario(source).map_err(input)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn with_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
            let mut out = std::io::BufWriter::new(file);
            write(&mut out).and_then(|_| out.flush()).map_err(io)
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            write(&mut out).map_err(io)
        }
    }
}

fn goal_ids(scenario: &Scenario) -> Vec<String> {
    scenario.goals.iter().map(|g| g.id.0.clone()).collect()
}

pub fn cmd_replay(args: &ReplayArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario, args.seed)?;
    let config = args.model.config();
    let goals = scenario.goal_set().map_err(input)?;
    config.validate(goals.len()).map_err(input)?;
    let observations: Vec<Observation> = match &args.observations {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            scenario::read_observations(&text).map_err(input)?
        }
        None => scenario.synthesize().map_err(input)?,
    };
    let estimates = replay(goals, config.clone(), &observations).map_err(input)?;
    let meta = TraceMeta::new(&scenario.name, scenario.seed, &config, goal_ids(&scenario), args.deterministic);
    with_output(args.output.as_deref(), |out| write_trace(args.format, &meta, &estimates, out))
}

fn apply(config: &SessionConfig, param: SweepParam, value: f64) -> Result<SessionConfig, CliError> {
    let mut config = config.clone();
    let p = &mut config.params;
    match param {
        SweepParam::Alpha => p.alpha = value,
        SweepParam::Beta => p.beta = value,
        SweepParam::Gamma => p.gamma = value,
        SweepParam::Delta => p.delta = value,
        SweepParam::M => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(input(format!("m must be a positive integer, got {value}")));
            }
            p.m = value as usize;
        }
    }
    Ok(config)
}

/// One metrics row per value, in the order given.
pub fn sweep(scenario: &Scenario, base: &SessionConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepMetrics>, CliError> {
    if values.is_empty() {
        return Err(input("sweep needs at least one value"));
    }
    let goals = scenario.goal_set().map_err(input)?;
    let configs = values.iter().map(|&v| apply(base, param, v)).collect::<Result<Vec<_>, _>>()?;
    for (config, value) in configs.iter().zip(values) {
        config.validate(goals.len()).map_err(|e| input(format!("{}={value}: {e}", param.name())))?;
    }
    let observations = scenario.synthesize().map_err(input)?;
    let visits = scenario.visits();
    let ids: Vec<GoalId> = scenario.goals.iter().map(|g| g.id.clone()).collect();
    configs
        .into_par_iter()
        .zip(values.par_iter())
        .map(|(config, &value)| {
            let trace = replay(goals.clone(), config, &observations).map_err(input)?;
            Ok(SweepMetrics::compute(param.name(), value, &ids, &trace, &visits))
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_sweep(
    format: TraceFormat,
    meta: &TraceMeta,
    rows: &[SweepMetrics],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(out, "# tool: {} {}", meta.tool, meta.version)?;
            writeln!(out, "# scenario: {}", meta.scenario)?;
            writeln!(out, "# seed: {}", meta.seed)?;
            if let Some(t) = meta.created_unix {
                writeln!(out, "# created_unix: {t}")?;
            }
            write!(out, "parameter,value,argmax_switches,time_in_unknown,mean_commit_latency,uncommitted_visits")?;
            for id in &meta.goals {
                write!(out, ",latency_{id}")?;
            }
            writeln!(out)?;
            for r in rows {
                write!(
                    out,
                    "{},{},{},{},{},{}",
                    r.parameter,
                    r.value,
                    r.argmax_switches,
                    r.time_in_unknown,
                    fmt_opt(r.mean_commit_latency),
                    r.uncommitted_visits
                )?;
                for (_, l) in &r.goal_latencies {
                    write!(out, ",{}", fmt_opt(*l))?;
                }
                writeln!(out)?;
            }
        }
        TraceFormat::Jsonl => {
            serde_json::to_writer(&mut *out, &serde_json::json!({ "meta": meta }))?;
            writeln!(out)?;
            for r in rows {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario, args.seed)?;
    let base = args.model.config();
    let rows = sweep(&scenario, &base, args.param, &args.values)?;
    let meta = TraceMeta::new(&scenario.name, scenario.seed, &base, goal_ids(&scenario), args.deterministic);
    with_output(args.output.as_deref(), |out| write_sweep(args.format, &meta, &rows, out))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario, args.seed)?;
    let observations = scenario.synthesize().map_err(input)?;
    with_output(args.output.as_deref(), |out| scenario::write_observations(&observations, out))
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(io)?;
    runtime.block_on(async {
        let listener = server::bind(&args.bind).await.map_err(|e| CliError::Bind(format!("{}: {e}", args.bind)))?;
        let addr = listener.local_addr().map_err(io)?;
        eprintln!("listening on http://{addr}");
        server::serve(listener, server::AppConfig { assets: args.assets.clone() }, server::shutdown_signal())
            .await
            .map_err(io)
    })
}

pub fn cmd_scenarios(args: &ScenariosArgs) -> Result<(), CliError> {
    for name in builtins::NAMES {
        let scenario = builtins::by_name(name).expect("listed built-in");
        match &args.export {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(io)?;
                let path = dir.join(format!("{name}.toml"));
                std::fs::write(&path, scenario.to_toml()).map_err(|e| io(format!("{}: {e}", path.display())))?;
                println!("{}", path.display());
            }
            None => println!("{name}\t{:.1} s\t{}", scenario.duration(), scenario.description),
        }
    }
    Ok(())
}
