//! Command-line front end.
//!
//! Exit codes: 0 success, 1 output could not be written, 2 usage or input
//! error, 3 numeric or terminal-diagnostic outcome (support collapse, kernel
//! error, instance too large for an exact computation).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bpdyn_core::analysis::compute_alpha;
use bpdyn_core::dynamics::{
    least_squares_start, run_with, theorem_step_size, RunOptions, State, StepConfig,
    StoppingRule, Variant,
};
use bpdyn_core::model::{
    appendix_a_graph, appendix_a_state, build_graph_instance, random_instance,
    random_integer_instance, Instance, Provenance,
};
use bpdyn_core::oracle::{solve_l1_exact, OracleResult};
use bpdyn_core::trace::{TerminalStatus, Trace};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::format::{read_graph_file, read_instance_file, read_vector_file, FormatError};
use crate::sweep::{run_sweep, write_summary, SweepCell};
use crate::trace_io::{write_csv, write_iterates_csv, write_json, TraceIoError};

/// Stationary tolerance used for IRLS-type runs when `--tol` is not given.
pub const DEFAULT_IRLS_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: u64 = 1000;

#[derive(Debug, Parser)]
#[command(name = "bpdyn", version, about = "IRLS and Physarum dynamics for basis pursuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one variant of the dynamics and optionally write its trace.
    Solve(SolveArgs),
    /// Exact ℓ1 optimum by vertex enumeration.
    Oracle(SourceArgs),
    /// The constant α of the constraint matrix.
    Alpha(SourceArgs),
    /// IRLS on the eight-vertex counterexample from its fixed start.
    #[command(name = "appendix-a")]
    AppendixA(OutputArgs),
    /// Physarum over a grid of step sizes and accuracies.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceSelect {
    /// Dense instance file (`.bpinst`).
    #[arg(long, value_name = "PATH")]
    pub instance: Option<PathBuf>,
    /// Graph file (`.bpgraph`); the instance is its s-t shortest path.
    #[arg(long, value_name = "PATH")]
    pub graph: Option<PathBuf>,
    /// Random instance with an s-sparse planted solution.
    #[arg(long, value_name = "M,N,S", value_parser = parse_random)]
    pub random: Option<RandomSpec>,
    /// The built-in eight-vertex counterexample graph.
    #[arg(long = "appendix-a")]
    pub appendix_a: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[command(flatten)]
    pub select: SourceSelect,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw `--random` entries uniformly from [-B, B] instead of N(0, 1).
    #[arg(long, value_name = "B", requires = "random")]
    pub integer_bound: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub m: usize,
    pub n: usize,
    pub s: usize,
}

fn parse_random(text: &str) -> Result<RandomSpec, String> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [m, n, s] => Ok(RandomSpec { m, n, s }),
        _ => Err(format!("expected M,N,S, got {text:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Irls,
    Physarum,
    Unified,
    #[value(name = "reg-irls")]
    RegIrls,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    LeastSquares,
    Figure2,
    File(PathBuf),
}

impl FromStr for Start {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "least-squares" => Ok(Start::LeastSquares),
            "figure2" => Ok(Start::Figure2),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(Start::File(PathBuf::from(p))),
                _ => Err(format!(
                    "expected least-squares, figure2 or file:<path>, got {s:?}"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Full trace as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Potentials per iteration as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Iterates y^(k) as CSV, one column per coordinate.
    #[arg(long, value_name = "PATH")]
    pub iterates: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value = "irls")]
    pub variant: VariantArg,
    #[arg(long, conflicts_with = "theorem_h")]
    pub h: Option<f64>,
    /// Accuracy ε: stops once ‖w‖₁ ≤ (1+ε)·OPT and enables the lemma checks.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Smoothing for `reg-irls`.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Use h = ε/(40·n²·α²).
    #[arg(long, requires = "eps")]
    pub theorem_h: bool,
    /// Override the computed α.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: u64,
    #[arg(long, default_value = "least-squares")]
    pub start: Start,
    /// Stop once consecutive iterates agree to this relative tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Record every n-th row only.
    #[arg(long, default_value_t = 1)]
    pub every: u64,
    /// Attach the exact optimum even without `--eps`.
    #[arg(long)]
    pub oracle: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub h_grid: Vec<f64>,
    /// Comma-separated accuracies.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_grid: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: u64,
    #[arg(long, default_value = "least-squares")]
    pub start: Start,
    /// Summary CSV; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] FormatError),
    #[error(transparent)]
    Numeric(#[from] bpdyn_core::Error),
    #[error("{0}")]
    Diagnostic(String),
    #[error(transparent)]
    Output(#[from] TraceIoError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Output(_) | CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Numeric(_) | CliError::Diagnostic(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `argv` (including the program name), runs, and returns the exit
/// code. Normal output goes to `out`, diagnostics to stderr.
pub fn main_with<I, T, W>(argv: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    main_with(argv, &mut lock)
}

fn dispatch<W: Write>(cmd: &Command, out: &mut W) -> CliResult<i32> {
    match cmd {
        Command::Solve(args) => solve(args, out),
        Command::Oracle(args) => {
            let (inst, _) = load_instance(args)?;
            let res = solve_l1_exact(&inst)?;
            writeln!(out, "{}", describe_oracle(&res))?;
            Ok(0)
        }
        Command::Alpha(args) => {
            let (inst, _) = load_instance(args)?;
            let alpha = compute_alpha(inst.a()).map_err(|e| match e {
                bpdyn_core::Error::TooLargeForExactAlpha { .. } => {
                    CliError::Diagnostic(format!("{e}; supply --alpha to solve instead"))
                }
                other => other.into(),
            })?;
            writeln!(out, "{}", format_number(alpha))?;
            Ok(0)
        }
        Command::AppendixA(args) => appendix_a(args, out),
        Command::Sweep(args) => sweep(args, out),
    }
}

/// Integers print without a fractional part; everything else round-trips.
pub fn format_number(v: f64) -> String {
    let r = v.round();
    if v.is_finite() && (v - r).abs() <= 1e-9 * (1.0 + r.abs()) && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{v}")
    }
}

pub fn describe_oracle(res: &OracleResult) -> String {
    let uniq = if res.unique { "unique" } else { "not unique" };
    format!("optimal {}, {uniq}", format_number(res.optimal_value))
}

/// Loads the selected instance and returns it with an identifier.
pub fn load_instance(args: &SourceArgs) -> CliResult<(Instance, String)> {
    let sel = &args.select;
    if let Some(p) = &sel.instance {
        return Ok((read_instance_file(p)?, file_id(p)));
    }
    if let Some(p) = &sel.graph {
        return Ok((read_graph_file(p)?, file_id(p)));
    }
    if let Some(RandomSpec { m, n, s }) = sel.random {
        let (inst, _) = match args.integer_bound {
            Some(bound) => random_integer_instance(m, n, s, bound, args.seed)
                .map_err(|e| CliError::Usage(e.to_string()))?,
            None => random_instance(m, n, s, args.seed).map_err(|e| CliError::Usage(e.to_string()))?,
        };
        let kind = if args.integer_bound.is_some() { "int" } else { "gauss" };
        return Ok((inst, format!("random-{kind}-{m}x{n}-s{s}-seed{}", args.seed)));
    }
    if sel.appendix_a {
        return Ok((appendix_a_state().0, "appendix-a".into()));
    }
    Err(CliError::Usage("no instance source given".into()))
}

fn file_id(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn is_appendix_a(inst: &Instance) -> bool {
    matches!(&inst.provenance, Provenance::Graph(g) if *g == appendix_a_graph())
}

fn start_vector(inst: &Instance, start: &Start) -> CliResult<Vec<f64>> {
    match start {
        Start::LeastSquares => Ok(least_squares_start(inst)?),
        Start::Figure2 => {
            if !is_appendix_a(inst) {
                return Err(CliError::Usage(
                    "--start figure2 is only defined on the appendix-a graph".into(),
                ));
            }
            Ok(appendix_a_state().1)
        }
        Start::File(p) => {
            let y = read_vector_file(p)?;
            if y.len() != inst.cols() {
                return Err(CliError::Usage(format!(
                    "start vector has {} entries, instance has {} columns",
                    y.len(),
                    inst.cols()
                )));
            }
            Ok(y)
        }
    }
}

fn step_config(args: &SolveArgs, inst: &Instance) -> CliResult<StepConfig> {
    if args.eta.is_some() && args.variant != VariantArg::RegIrls {
        return Err(CliError::Usage("--eta is only valid with --variant reg-irls".into()));
    }
    let explicit_h = || -> CliResult<f64> {
        if args.theorem_h {
            let eps = args.eps.expect("clap enforces --eps with --theorem-h");
            let alpha = match args.alpha {
                Some(a) => a,
                None => compute_alpha(inst.a()).map_err(|e| match e {
                    bpdyn_core::Error::TooLargeForExactAlpha { .. } => {
                        CliError::Diagnostic(format!("{e}; supply --alpha"))
                    }
                    other => other.into(),
                })?,
            };
            Ok(theorem_step_size(inst, eps, alpha)?)
        } else {
            args.h.ok_or_else(|| {
                CliError::Usage(format!(
                    "--variant {} needs --h or --theorem-h",
                    variant_flag(args.variant)
                ))
            })
        }
    };
    let cfg = match args.variant {
        VariantArg::Irls | VariantArg::RegIrls if args.h.is_some() || args.theorem_h => {
            return Err(CliError::Usage(format!(
                "--variant {} always uses h = 1",
                variant_flag(args.variant)
            )));
        }
        VariantArg::Irls => StepConfig::irls(),
        VariantArg::RegIrls => {
            let eta = args
                .eta
                .ok_or_else(|| CliError::Usage("--variant reg-irls needs --eta".into()))?;
            StepConfig::regularized_irls(eta)
        }
        VariantArg::Physarum => StepConfig::physarum(explicit_h()?),
        VariantArg::Unified => StepConfig::unified(explicit_h()?),
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn variant_flag(v: VariantArg) -> &'static str {
    match v {
        VariantArg::Irls => "irls",
        VariantArg::Physarum => "physarum",
        VariantArg::Unified => "unified",
        VariantArg::RegIrls => "reg-irls",
    }
}

fn irls_like(cfg: &StepConfig) -> bool {
    matches!(cfg.variant, Variant::Irls | Variant::RegularizedIrls { .. })
        || (cfg.variant == Variant::Unified && cfg.h == 1.0)
}

fn solve<W: Write>(args: &SolveArgs, out: &mut W) -> CliResult<i32> {
    let (inst, id) = load_instance(&args.source)?;
    let cfg = step_config(args, &inst)?;
    let y0 = start_vector(&inst, &args.start)?;
    let start = State::for_variant(y0, &cfg);

    let oracle = if args.oracle || args.eps.is_some() {
        Some(solve_l1_exact(&inst).map_err(|e| match e {
            bpdyn_core::Error::TooLargeForOracle { .. } => {
                CliError::Diagnostic(format!("{e}; drop --eps and --oracle"))
            }
            other => other.into(),
        })?)
    } else {
        None
    };

    let mut stop = match (&oracle, args.eps) {
        (Some(o), Some(eps)) => StoppingRule::gap(args.max_iter, eps, o.optimal_value),
        _ => StoppingRule::max_iter(args.max_iter),
    };
    match args.tol {
        Some(t) => stop = stop.with_stationary_tol(t),
        None if irls_like(&cfg) => stop = stop.with_stationary_tol(DEFAULT_IRLS_TOL),
        None => {}
    }

    let alpha = match (args.alpha, args.eps, &oracle) {
        (Some(a), _, _) => Some(a),
        (None, Some(_), Some(_)) => compute_alpha(inst.a()).ok(),
        _ => None,
    };
    let opts = RunOptions {
        instance_id: id,
        x_star: oracle.as_ref().map(|o| o.optimizer.clone()),
        eps: args.eps,
        alpha,
        record_iterates: args.output.out.is_some() || args.output.iterates.is_some(),
        every: args.every,
    };
    let mut trace = run_with(&inst, start, &cfg, &stop, &opts);
    trace.oracle = oracle;
    write_outputs(&trace, &args.output)?;
    report(&trace, out)?;
    Ok(status_code(&trace.terminal_status))
}

fn status_code(status: &TerminalStatus) -> i32 {
    match status {
        TerminalStatus::MaxIter | TerminalStatus::TargetReached | TerminalStatus::Stationary => 0,
        TerminalStatus::SupportCollapse | TerminalStatus::KernelError(_) => 3,
    }
}

pub fn status_name(status: &TerminalStatus) -> String {
    match status {
        TerminalStatus::MaxIter => "max_iter".into(),
        TerminalStatus::TargetReached => "target_reached".into(),
        TerminalStatus::Stationary => "stationary".into(),
        TerminalStatus::SupportCollapse => "support_collapse".into(),
        TerminalStatus::KernelError(m) => format!("kernel_error: {m}"),
    }
}

fn report<W: Write>(trace: &Trace, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "status {}", status_name(&trace.terminal_status))?;
    if let Some(last) = trace.last() {
        writeln!(out, "iterations {}", last.k)?;
        writeln!(out, "l1_y {}", last.l1_y)?;
        writeln!(out, "l1_w {}", last.l1_w)?;
    }
    if let Some(o) = &trace.oracle {
        writeln!(out, "{}", describe_oracle(o))?;
    }
    if !trace.checks.is_empty() {
        let failed = trace.checks.iter().filter(|c| !c.passed).count();
        writeln!(out, "checks {} failed of {}", failed, trace.checks.len())?;
    }
    for note in &trace.notes {
        writeln!(out, "note {note}")?;
    }
    Ok(())
}

fn write_outputs(trace: &Trace, out: &OutputArgs) -> CliResult<()> {
    if let Some(p) = &out.out {
        write_json(trace, p)?;
    }
    if let Some(p) = &out.csv {
        write_csv(trace, p)?;
    }
    if let Some(p) = &out.iterates {
        write_iterates_csv(trace, p)?;
    }
    Ok(())
}

fn appendix_a<W: Write>(args: &OutputArgs, out: &mut W) -> CliResult<i32> {
    let graph = appendix_a_graph();
    let inst = build_graph_instance(&graph)?;
    let (_, y0) = appendix_a_state();
    let cfg = StepConfig::irls();
    let stop = StoppingRule::max_iter(DEFAULT_MAX_ITER).with_stationary_tol(DEFAULT_IRLS_TOL);
    let opts = RunOptions {
        instance_id: "appendix-a".into(),
        record_iterates: true,
        ..RunOptions::default()
    };
    let mut trace = run_with(&inst, State::for_variant(y0, &cfg), &cfg, &stop, &opts);
    let oracle = solve_l1_exact(&inst)?;
    trace.oracle = Some(oracle);
    write_outputs(&trace, args)?;

    let bridge = inst.column_index("u3-u4").expect("appendix-a has edge u3-u4");
    if let Some(y1) = trace.iterates.as_ref().and_then(|it| it.get(1)) {
        writeln!(out, "after one step y[u3-u4] = {:e}", y1[bridge])?;
    }
    report(&trace, out)?;
    Ok(status_code(&trace.terminal_status))
}

fn sweep<W: Write>(args: &SweepArgs, out: &mut W) -> CliResult<i32> {
    let (inst, _) = load_instance(&args.source)?;
    let y0 = start_vector(&inst, &args.start)?;
    let oracle = solve_l1_exact(&inst)?;
    let cells: Vec<SweepCell> = run_sweep(
        &inst,
        &y0,
        oracle.optimal_value,
        &args.h_grid,
        &args.eps_grid,
        args.max_iter,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    match &args.csv {
        Some(p) => {
            let f = std::fs::File::create(p)?;
            write_summary(&cells, std::io::BufWriter::new(f)).map_err(TraceIoError::from)?;
        }
        None => write_summary(&cells, &mut *out).map_err(TraceIoError::from)?,
    }
    Ok(0)
}
