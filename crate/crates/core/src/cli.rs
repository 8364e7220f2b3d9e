//! The `metamodel` command line.
//!
//! Exit codes: 0 success, 1 goal not met, 2 usage error, 3 toolchain error.
//! Standard output carries only data; notes and diagnostics go to standard
//! error.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::ann::{layered_milieu, train, Strategy, TrainingConfig};
use crate::autoprog::{self, AmpDocument, AutoprogError, Backend, ToolchainConfig, UpdatePayload, Verdict};
use crate::ca::{ca_system, parse_state, RuleNumber};
use crate::search::{attempt_line, exhaustive_rule_search, random_rule_search, Route, SearchOptions, SearchProblem};
use crate::state::EntityTuple;
use crate::system::demodulate;
use crate::trajectory::{format_line, format_real};

pub const EXIT_GOAL_NOT_MET: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TOOLCHAIN: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "metamodel", version, about = "Build, run, search and compile entity/milieu/update-function models")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for every random choice; a fresh one is generated and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write data to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Suppress notes on standard error.
    #[arg(long, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Extra notes on standard error.
    #[arg(long, global = true)]
    pub verbose: bool,
    /// File of `key value` lines supplying defaults for flags of the same name.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an elementary cellular automaton on a ring and print every state.
    CaRun(CaRunArgs),
    /// Random search for a rule mapping --init to --target in --steps steps.
    CaSearch(CaSearchArgs),
    /// List every rule mapping --init to --target in --steps steps.
    CaEnumerate(CaProblemArgs),
    /// Train a layered perceptron network toward a target output.
    AnnTrain(AnnTrainArgs),
    /// Write the model-program (AMP) document of a cellular automaton.
    Emit(CaModelArgs),
    /// Generate program source from an AMP document or model flags.
    Codegen(CodegenArgs),
    /// Build and run the generated program and compare it with the interpreter.
    Verify(VerifyArgs),
    /// Print the structural and operational parameters of an AMP document.
    Demodulate(AmpArgs),
}

#[derive(Debug, Args)]
pub struct CaModelArgs {
    #[arg(long)]
    pub rule: u8,
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub steps: u64,
    /// Recorded as metadata in emitted documents.
    #[arg(long)]
    pub target: Option<String>,
}

#[derive(Debug, Args)]
pub struct CaRunArgs {
    #[arg(long)]
    pub rule: u8,
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub steps: u64,
}

#[derive(Debug, Args)]
pub struct CaProblemArgs {
    #[arg(long)]
    pub init: String,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub steps: u64,
    /// Minimum match score counted as a solution.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ToolchainArgs {
    /// Build command template with {src}, {bin} and {dir} placeholders.
    #[arg(long)]
    pub toolchain: Option<String>,
    /// Toolchain configuration file (`build`, `run`, `timeout`, ... lines).
    #[arg(long)]
    pub toolchain_config: Option<PathBuf>,
    /// Seconds allowed for each build and each run.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CaSearchArgs {
    #[command(flatten)]
    pub problem: CaProblemArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    /// Execute every candidate as a generated, compiled program.
    #[arg(long)]
    pub via_codegen: bool,
    /// Never draw the same rule twice.
    #[arg(long)]
    pub dedup: bool,
    /// Evaluate attempts in parallel (same report as sequential).
    #[arg(long)]
    pub parallel: bool,
    #[command(flatten)]
    pub toolchain: ToolchainArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    OutputLayer,
    Layerwise,
}

#[derive(Debug, Args)]
pub struct AnnTrainArgs {
    #[arg(long, default_value_t = 15)]
    pub layers: usize,
    #[arg(long, default_value_t = 31)]
    pub width: usize,
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::OutputLayer)]
    pub strategy: StrategyArg,
    /// Target of one hidden layer (layerwise strategy); repeat once per hidden layer.
    #[arg(long)]
    pub hidden_target: Vec<String>,
    /// Exit 0 when the best match reaches this score.
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// Write the best network as an AMP document.
    #[arg(long)]
    pub export_amp: Option<PathBuf>,
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct AmpArgs {
    #[arg(long)]
    pub amp: PathBuf,
}

#[derive(Debug, Args)]
pub struct CodegenArgs {
    #[arg(long, conflicts_with_all = ["rule", "init", "steps"])]
    pub amp: Option<PathBuf>,
    #[arg(long, requires_all = ["init", "steps"])]
    pub rule: Option<u8>,
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Where to write the program; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "c")]
    pub backend: String,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub amp: PathBuf,
    #[command(flatten)]
    pub toolchain: ToolchainArgs,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

impl From<AutoprogError> for Failure {
    fn from(e: AutoprogError) -> Self {
        let code = if e.is_toolchain() { EXIT_TOOLCHAIN } else { EXIT_USAGE };
        Failure { code, message: e.to_string() }
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        usage(format!("i/o error: {e}"))
    }
}

/// Command-line entry point.
pub fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    ExitCode::from(run(args))
}

/// Parse `args` (including the program name) and execute; returns the exit code.
pub fn run(args: Vec<String>) -> u8 {
    let args = match apply_config_file(args) {
        Ok(a) => a,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return f.code;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn parse_config_lines(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        if key.is_empty() {
            return Err(usage(format!("{}:{}: missing key", path.display(), n + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Splice `--key value` pairs from a `--config` file right after the
/// subcommand name, so flags given on the command line still win.
fn apply_config_file(args: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(args.get(pos + 1).ok_or_else(|| usage("--config needs a file"))?),
    };
    let entries = parse_config_lines(&path)?;

    let command = Cli::command();
    let sub_pos =
        args.iter().position(|a| command.find_subcommand(a).is_some()).ok_or_else(|| usage("no subcommand given"))?;
    let sub = command.find_subcommand(&args[sub_pos]).expect("found above");

    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(usage("config files cannot include other config files"));
        }
        let arg = sub
            .get_arguments()
            .chain(command.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| usage(format!("unknown config key {key:?}")))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.as_str() {
                "" | "true" => injected.push(format!("--{key}")),
                "false" => {}
                other => return Err(usage(format!("config key {key:?} takes true or false, not {other:?}"))),
            }
        }
    }
    let mut out = args[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub_pos + 1..]);
    Ok(out)
}

struct Context<'a> {
    cli: &'a Cli,
    out: Box<dyn Write>,
}

impl Context<'_> {
    fn line(&mut self, line: &str) -> Result<(), Failure> {
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    fn note(&self, message: &str) {
        if !self.cli.quiet {
            eprintln!("{message}");
        }
    }

    fn verbose(&self, message: &str) {
        if self.cli.verbose {
            eprintln!("{message}");
        }
    }

    fn seed(&self) -> u64 {
        match self.cli.seed {
            Some(s) => s,
            None => {
                let s = rand::random::<u64>();
                eprintln!("seed {s}");
                s
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, Failure> {
    let out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::LineWriter::new(io::stdout())),
    };
    let mut ctx = Context { cli, out };
    let code = match &cli.command {
        Command::CaRun(a) => ca_run(&mut ctx, a),
        Command::CaSearch(a) => ca_search(&mut ctx, a),
        Command::CaEnumerate(a) => ca_enumerate(&mut ctx, a),
        Command::AnnTrain(a) => ann_train(&mut ctx, a),
        Command::Emit(a) => emit_amp(&mut ctx, a),
        Command::Codegen(a) => codegen(&mut ctx, a),
        Command::Verify(a) => verify(&mut ctx, a),
        Command::Demodulate(a) => demodulate_cmd(&mut ctx, a),
    }?;
    ctx.out.flush()?;
    Ok(code)
}

fn state_arg(name: &str, text: &str) -> Result<EntityTuple, Failure> {
    parse_state(text).map_err(|e| usage(format!("--{name}: {e}")))
}

fn ca_run(ctx: &mut Context, a: &CaRunArgs) -> Result<u8, Failure> {
    let mut system = ca_system(RuleNumber::new(a.rule), state_arg("init", &a.init)?)?;
    ctx.line(&format_line(system.current()))?;
    for _ in 0..a.steps {
        system.advance()?;
        ctx.line(&format_line(system.current()))?;
    }
    Ok(0)
}

fn problem(a: &CaProblemArgs) -> Result<SearchProblem, Failure> {
    let init = state_arg("init", &a.init)?;
    let target = state_arg("target", &a.target)?;
    Ok(SearchProblem::ring(init, target, a.steps)?.with_threshold(a.threshold)?)
}

fn toolchain(args: &ToolchainArgs) -> Result<ToolchainConfig, Failure> {
    let mut config = if let Some(path) = &args.toolchain_config {
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read toolchain config {}: {e}", path.display())))?;
        ToolchainConfig::from_config_text(&text)?
    } else if let Some(template) = &args.toolchain {
        ToolchainConfig::new(template.clone())?
    } else {
        ToolchainConfig::detect().ok_or_else(|| Failure {
            code: EXIT_TOOLCHAIN,
            message: format!(
                "no toolchain configured: pass --toolchain 'cc -o {{bin}} {{src}}', set {}, or put `cc` on PATH",
                autoprog::TOOLCHAIN_ENV
            ),
        })?
    };
    if let Some(secs) = args.timeout {
        if !(secs > 0.0 && secs.is_finite()) {
            return Err(usage("--timeout must be positive"));
        }
        config.timeout = Duration::from_secs_f64(secs);
    }
    Ok(config)
}

fn ca_search(ctx: &mut Context, a: &CaSearchArgs) -> Result<u8, Failure> {
    let problem = problem(&a.problem)?;
    let seed = ctx.seed();
    let mut options = SearchOptions::new(a.budget as usize, seed);
    options.dedup = a.dedup;
    options.parallel = a.parallel;
    if a.via_codegen {
        options.route = Route::Codegen(toolchain(&a.toolchain)?);
    }
    let report = random_rule_search(&problem, &options)?;
    for record in &report.log {
        ctx.line(&attempt_line(record))?;
    }
    ctx.line(&report.final_line())?;
    Ok(if report.succeeded() { 0 } else { EXIT_GOAL_NOT_MET })
}

fn ca_enumerate(ctx: &mut Context, a: &CaProblemArgs) -> Result<u8, Failure> {
    let solutions = exhaustive_rule_search(&problem(a)?)?;
    for rule in &solutions {
        ctx.line(&format!("rule {rule}"))?;
    }
    ctx.line(&format!("count {}", solutions.len()))?;
    Ok(0)
}

fn ann_train(ctx: &mut Context, a: &AnnTrainArgs) -> Result<u8, Failure> {
    let topology = layered_milieu(a.layers, a.width)?;
    let input = state_arg("input", &a.input)?;
    let target = state_arg("target", &a.target)?;
    for (name, t) in [("input", &input), ("target", &target)] {
        if t.len() != a.width {
            return Err(usage(format!("--{name} has {} entries but --width is {}", t.len(), a.width)));
        }
    }
    let strategy = match a.strategy {
        StrategyArg::OutputLayer => Strategy::OutputLayerOnly,
        StrategyArg::Layerwise => Strategy::LayerwiseTargets,
    };
    let hidden_targets = if a.hidden_target.is_empty() {
        None
    } else {
        Some(a.hidden_target.iter().map(|t| state_arg("hidden-target", t)).collect::<Result<Vec<_>, _>>()?)
    };
    let config = TrainingConfig {
        rate: a.rate,
        epochs: a.epochs as usize,
        budget: a.budget as usize,
        strategy,
        hidden_targets,
        parallel: a.parallel,
        ..TrainingConfig::default()
    };
    let seed = ctx.seed();
    let report = train(&topology, &input, &target, &config, seed)?;
    let mut best = 0.0f64;
    for (k, m) in report.history.iter().enumerate() {
        best = best.max(*m);
        ctx.line(&format!("attempt {} match {} best {}", k + 1, format_real(*m), format_real(best)))?;
    }
    ctx.line(&format!("best-match {} attempts {}", format_real(report.best_match), report.attempts))?;
    if report.exact() {
        ctx.note("note: exact match reached");
    }
    if let Some(path) = &a.export_amp {
        let mut doc = autoprog::emit(&report.best.system(&input)?, (a.layers - 1) as u64, None)?;
        if let UpdatePayload::Perceptron { strategy: s, .. } = &mut doc.update {
            *s = Some(strategy);
        }
        let mut full_target = vec![0u8; a.layers * a.width];
        full_target[(a.layers - 1) * a.width..].copy_from_slice(&target.bits());
        // Only the output layer is constrained; earlier layers hold the
        // trained network's own activations.
        let forward = report.best.forward(&input)?;
        for (layer, bits) in forward.layers.iter().enumerate().take(a.layers - 1) {
            full_target[layer * a.width..(layer + 1) * a.width].copy_from_slice(bits);
        }
        doc.target = Some(EntityTuple::from_bits(&full_target)?);
        fs::write(path, doc.to_text())?;
        ctx.verbose(&format!("wrote {}", path.display()));
    }
    Ok(if report.best_match >= a.threshold { 0 } else { EXIT_GOAL_NOT_MET })
}

fn emit_amp(ctx: &mut Context, a: &CaModelArgs) -> Result<u8, Failure> {
    let system = ca_system(RuleNumber::new(a.rule), state_arg("init", &a.init)?)?;
    let target = a.target.as_deref().map(|t| state_arg("target", t)).transpose()?;
    let doc = autoprog::emit(&system, a.steps, target.as_ref())?;
    write!(ctx.out, "{doc}")?;
    Ok(0)
}

fn read_amp(path: &Path) -> Result<AmpDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    AmpDocument::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn codegen(ctx: &mut Context, a: &CodegenArgs) -> Result<u8, Failure> {
    let doc = match (&a.amp, a.rule, &a.init, a.steps) {
        (Some(path), ..) => read_amp(path)?,
        (None, Some(rule), Some(init), Some(steps)) => {
            autoprog::emit(&ca_system(RuleNumber::new(rule), state_arg("init", init)?)?, steps, None)?
        }
        _ => return Err(usage("give --amp FILE or --rule, --init and --steps")),
    };
    let program = autoprog::generate_source(&doc, Backend::from_name(&a.backend)?)?;
    match &a.out {
        Some(path) => {
            fs::write(path, program.text())?;
            ctx.verbose(&format!("wrote {}", path.display()));
        }
        None => write!(ctx.out, "{}", program.text())?,
    }
    Ok(0)
}

fn verify(ctx: &mut Context, a: &VerifyArgs) -> Result<u8, Failure> {
    let doc = read_amp(&a.amp)?;
    let config = toolchain(&a.toolchain)?;
    let system = doc.to_system()?;
    match autoprog::verify_equivalence(&system, doc.steps, &config)? {
        Verdict::Equal => {
            ctx.line("equal")?;
            Ok(0)
        }
        Verdict::Mismatch { step, expected, actual } => {
            ctx.line(&format!("mismatch step {step}"))?;
            ctx.note(&format!("interpreter: {}", expected.as_deref().unwrap_or("<end>")));
            ctx.note(&format!("program:     {}", actual.as_deref().unwrap_or("<end>")));
            Ok(EXIT_GOAL_NOT_MET)
        }
    }
}

fn demodulate_cmd(ctx: &mut Context, a: &AmpArgs) -> Result<u8, Failure> {
    let doc = read_amp(&a.amp)?;
    let parts = demodulate(&doc.to_system()?);
    let s = &parts.structural;
    let o = &parts.operational;
    ctx.line("structural")?;
    ctx.line(&format!("  p {}", s.p))?;
    ctx.line(&format!("  states {}", s.states))?;
    ctx.line(&format!("  init {}", format_line(&s.initial)))?;
    ctx.line("operational")?;
    match &doc.update {
        UpdatePayload::Table(table) => {
            ctx.line(&format!("  update rule-table {}", table.rule_number()))?;
            for (l, c, r) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (1, 0, 0), (1, 0, 1), (1, 1, 0), (1, 1, 1)] {
                ctx.line(&format!("  phi({l},{c},{r}) = {}", table.output(l, c, r)))?;
            }
        }
        UpdatePayload::Perceptron { layers, width, strategy, biases } => {
            let strategy = strategy.map(|s| format!(" strategy {}", s.name())).unwrap_or_default();
            ctx.line(&format!("  update perceptron layers {layers} width {width}{strategy}"))?;
            ctx.line(&format!("  biases {}", biases.len()))?;
        }
    }
    let q_min = o.milieu_sizes.iter().min().copied().unwrap_or(0);
    let q_max = o.milieu_sizes.iter().max().copied().unwrap_or(0);
    let kind = match o.milieu.kind() {
        crate::milieu::LinkKind::Boolean => "boolean",
        crate::milieu::LinkKind::Weighted => "weighted",
    };
    ctx.line(&format!("  milieu {kind} links {} q-min {q_min} q-max {q_max}", o.milieu.link_count()))?;
    ctx.line(&format!("  schedule {}", o.schedule.name()))?;
    ctx.line(&format!("  steps {}", doc.steps))?;
    Ok(0)
}
