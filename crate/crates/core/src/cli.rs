//! Command-line front end.
//!
//! Exit codes: 0 success, 1 the target program crashed, 2 usage error,
//! 3 corpus, parse or transform error.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::frontend::check::CheckedProgram;
use crate::frontend::{parse_units, print, SourceUnit};
use crate::harness::{self, emit_report, Corpus, Format, Report};
use crate::runtime::{
    log_to_json_lines, run, Controller, DeploymentTable, RepairMode, RunError, RunOptions, StrategyId, DEFAULT_DEPTH,
    DEFAULT_SEED,
};
use crate::transform::{seed_remove_null_checks, transform_all, TransformConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRASH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "npefix", version, about = "Runtime repair of null dereferences in MiniJ programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Instrument MiniJ sources for runtime repair.
    Transform(TransformArgs),
    /// Remove null checks from sources, or run a seeding campaign on a project.
    Seed(SeedArgs),
    /// Run a program, optionally instrumented with a repair strategy.
    Run(RunArgs),
    /// Run every crashing corpus case under each strategy.
    Matrix(MatrixArgs),
    /// Measure instrumentation overhead on the non-crashing corpus cases.
    Bench(BenchArgs),
    /// Explore strategies on a failing program until one is deployed.
    Explore(ExploreArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FormatArg {
    #[default]
    Json,
    Text,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Text => Format::Text,
        }
    }
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    /// MiniJ source files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file (one input) or directory (several inputs); stdout if absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SeedArgs {
    /// MiniJ source files to strip of null checks.
    #[arg(required_unless_present = "campaign", conflicts_with = "campaign")]
    pub inputs: Vec<PathBuf>,
    /// Project directory (src/ and test/) for a full seeding campaign.
    #[arg(long, value_name = "DIR")]
    pub campaign: Option<PathBuf>,
    /// Output file or directory for the seeded sources; stdout if absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the seeding report here (stderr for plain seeding, stdout for campaigns).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
    /// Worker threads for the campaign's strategy runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RepairArgs {
    /// RNG seed for strategy exploration.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Nesting budget for manufacturing objects.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: u32,
    /// JSON deployment table (crash point -> strategy).
    #[arg(long, value_name = "FILE")]
    pub deployments: Option<PathBuf>,
    /// Print the repair log as JSON lines on stderr.
    #[arg(long)]
    pub trace: bool,
    /// Write the run (or session) report here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// MiniJ source files making up the program.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Entry point: `Class` runs `main`, `Class.method` runs that method.
    #[arg(long, default_value = "Main")]
    pub entry: String,
    /// Apply one fixed strategy at every harmful dereference.
    #[arg(long, value_parser = parse_strategy, conflicts_with = "explore")]
    pub strategy: Option<StrategyId>,
    /// Pick strategies at random among untried candidates.
    #[arg(long)]
    pub explore: bool,
    #[command(flatten)]
    pub repair: RepairArgs,
}

#[derive(Args, Debug)]
pub struct MatrixArgs {
    /// Corpus manifest (JSON).
    pub manifest: PathBuf,
    /// Restrict to these strategies (default: all nine).
    #[arg(long, value_parser = parse_strategy, value_delimiter = ',')]
    pub strategy: Vec<StrategyId>,
    /// Worker threads; cases run in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write the matrix here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Corpus manifest (JSON).
    pub manifest: PathBuf,
    /// Timed runs per program.
    #[arg(long, default_value_t = harness::overhead::DEFAULT_REPS)]
    pub reps: usize,
    /// Also time the first case against itself.
    #[arg(long)]
    pub self_check: bool,
    /// Write the overhead table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct ExploreArgs {
    /// MiniJ source files making up the program.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Entry point: `Class` runs `main`, `Class.method` runs that method.
    #[arg(long, default_value = "Main")]
    pub entry: String,
    /// Stop after this many runs.
    #[arg(long, default_value_t = harness::session::DEFAULT_MAX_RUNS)]
    pub max_runs: u32,
    #[command(flatten)]
    pub repair: RepairArgs,
}

fn parse_strategy(s: &str) -> Result<StrategyId, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<RunError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_INPUT
            }
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Transform(a) => transform_cmd(a, out),
        Command::Seed(a) => seed_cmd(a, out, err),
        Command::Run(a) => run_cmd(a, out, err),
        Command::Matrix(a) => matrix_cmd(a, out),
        Command::Bench(a) => bench_cmd(a, out),
        Command::Explore(a) => explore_cmd(a, out, err),
    }
}

fn read_units(paths: &[PathBuf]) -> anyhow::Result<Vec<SourceUnit>> {
    paths.iter().map(|p| SourceUnit::read(p).with_context(|| format!("cannot read {}", p.display()))).collect()
}

fn load(paths: &[PathBuf]) -> anyhow::Result<CheckedProgram> {
    Ok(parse_units(&read_units(paths)?)?)
}

/// Writes printed units to `output` (file or directory) or `out`.
fn write_units(units: &[SourceUnit], output: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<()> {
    match output {
        None => {
            for u in units {
                out.write_all(u.text.as_bytes())?;
            }
        }
        Some(p) if units.len() == 1 && !p.is_dir() => {
            std::fs::write(p, &units[0].text).with_context(|| format!("cannot write {}", p.display()))?
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for u in units {
                let name = Path::new(&u.path).file_name().context("unit without file name")?;
                let p = dir.join(name);
                std::fs::write(&p, &u.text).with_context(|| format!("cannot write {}", p.display()))?;
            }
        }
    }
    Ok(())
}

fn transform_cmd(a: TransformArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let program = load(&a.inputs)?;
    let instrumented = transform_all(&program, &TransformConfig::all())?;
    write_units(&print(&instrumented.program), a.output.as_deref(), out)?;
    Ok(EXIT_OK)
}

fn seed_cmd(a: SeedArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    if let Some(dir) = &a.campaign {
        let report = harness::run_seeding_campaign(dir, a.jobs)?;
        let text = emit_report(&Report::Seeding(&report), a.format.into(), a.report.as_deref())?;
        if a.report.is_none() {
            out.write_all(text.as_bytes())?;
        }
        return Ok(EXIT_OK);
    }
    let program = load(&a.inputs)?;
    let (seeded, report) = seed_remove_null_checks(program.program);
    write_units(&print(&seeded), a.output.as_deref(), out)?;
    let text = match a.format {
        FormatArg::Json => serde_json::to_string_pretty(&report)? + "\n",
        FormatArg::Text => {
            let mut s = format!("removed {} null checks\n", report.count());
            for r in &report.removed {
                s += &format!("  {}:{}-{} {} ({})\n", r.file, r.start, r.end, r.target, r.guarded);
            }
            s
        }
    };
    match &a.report {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => err.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn load_deployments(path: &Path) -> anyhow::Result<DeploymentTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed deployment table {}", path.display()))
}

fn controller(mode: RepairMode, r: &RepairArgs) -> anyhow::Result<Controller> {
    let mut ctl = Controller::new(mode, r.seed).with_depth(r.depth);
    if let Some(p) = &r.deployments {
        if p.exists() {
            ctl.load_deployments(&load_deployments(p)?).map_err(anyhow::Error::msg)?;
        }
    }
    Ok(ctl)
}

fn run_cmd(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let program = load(&a.inputs)?;
    let mode = match (a.strategy, a.explore) {
        (Some(id), _) => RepairMode::Fixed(id),
        (None, true) => RepairMode::explore_all(),
        (None, false) if a.repair.deployments.is_some() => RepairMode::Explore(Vec::new()),
        (None, false) => RepairMode::Off,
    };
    let program = if mode == RepairMode::Off { program } else { transform_all(&program, &TransformConfig::all())? };
    if a.explore {
        writeln!(err, "seed: {}", a.repair.seed)?;
    }
    let mut ctl = controller(mode.clone(), &a.repair)?;
    let result = run(&program, &a.entry, &mut ctl, &RunOptions::default())?;
    out.write_all(result.stdout.as_bytes())?;
    if a.repair.trace {
        err.write_all(log_to_json_lines(&result.log).as_bytes())?;
    }
    if mode != RepairMode::Off {
        writeln!(err, "outcome: {}", result.outcome)?;
    }
    if !result.exit.is_normal() {
        writeln!(err, "{}", result.exit)?;
    }
    if let Some(p) = &a.repair.report {
        let text = match a.repair.format {
            FormatArg::Json => serde_json::to_string_pretty(&result)? + "\n",
            FormatArg::Text => log_to_json_lines(&result.log),
        };
        std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?;
    }
    if a.explore {
        if let Some(p) = &a.repair.deployments {
            std::fs::write(p, serde_json::to_string_pretty(&ctl.deployments())? + "\n")?;
        }
    }
    Ok(if result.exit.is_normal() { EXIT_OK } else { EXIT_CRASH })
}

fn matrix_cmd(a: MatrixArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let corpus = Corpus::load(&a.manifest)?;
    let strategies = if a.strategy.is_empty() { StrategyId::ALL.to_vec() } else { a.strategy };
    let matrix = harness::run_matrix(&corpus, &strategies, a.jobs)?;
    let text = emit_report(&Report::Matrix(&matrix), a.format.into(), a.report.as_deref())?;
    if a.report.is_none() {
        out.write_all(text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn bench_cmd(a: BenchArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let corpus = Corpus::load(&a.manifest)?;
    let report = harness::measure_overhead(&corpus, a.reps, a.self_check)?;
    let text = emit_report(&Report::Overhead(&report), a.format.into(), a.report.as_deref())?;
    if a.report.is_none() {
        out.write_all(text.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn explore_cmd(a: ExploreArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let original = load(&a.inputs)?;
    let instrumented = transform_all(&original, &TransformConfig::all())?;
    writeln!(err, "seed: {}", a.repair.seed)?;
    let ctl = controller(RepairMode::explore_all(), &a.repair)?;
    let session = harness::session::continue_session(&original, &instrumented, &a.entry, ctl, a.max_runs)?;
    if a.repair.trace {
        err.write_all(log_to_json_lines(&session.log).as_bytes())?;
    }
    out.write_all(harness::report::session_text(&session).as_bytes())?;
    if let Some(p) = &a.repair.report {
        emit_report(&Report::Session(&session), a.repair.format.into(), Some(p))?;
    }
    if let Some(p) = &a.repair.deployments {
        std::fs::write(p, serde_json::to_string_pretty(&session.deployments)? + "\n")?;
    }
    Ok(if session.final_exit().is_normal() { EXIT_OK } else { EXIT_CRASH })
}
