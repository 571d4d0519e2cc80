//! `itava` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{reach, reduce_additive, Answer, Mode, ReachOptions};
use crate::classgraph::{build_with, export_dot, BuildOptions, Layout};
use crate::exprsets::{check_bounds, saturate};
use crate::model::{Automaton, StateId};
use crate::regions::{enumerate_regions, Backend, EnumOptions, Formula};
use crate::semantics::{simulate_random, Trace};

use super::{parse_model, parse_scope, parse_valuation};

// Writes to stdout, ignoring a closed pipe.
/// Set when the JSON document goes to stdout; the text report is dropped.
static QUIET: AtomicBool = AtomicBool::new(false);

macro_rules! out {
    ($($t:tt)*) => {{
        if !QUIET.load(Ordering::Relaxed) {
            let _ = write!(std::io::stdout(), $($t)*);
        }
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        if !QUIET.load(Ordering::Relaxed) {
            let _ = writeln!(std::io::stdout(), $($t)*);
        }
    }};
}

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "itava",
    version,
    about = "Reachability analysis for (parametric) interrupt timed automata"
)]
struct Cli {
    /// External SMT solver (overrides ITAVA_SMT_SOLVER).
    #[arg(long, global = true, value_name = "PATH")]
    solver: Option<PathBuf>,
    /// Maximum number of classes per class automaton.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    cap: usize,
    /// Write a JSON result document to this file (`-` for stdout).
    #[arg(long, global = true, value_name = "OUT")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exist,
    Forall,
    Robust,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a model.
    Check { model: PathBuf },
    /// Decide reachability of the target states.
    Reach {
        #[arg(long, value_enum, default_value = "exist")]
        mode: ModeArg,
        /// Parameter constraint restricting the valuations considered.
        #[arg(long, value_name = "FILE")]
        scope: Option<PathBuf>,
        /// Comma-separated target states (default: the final states).
        #[arg(long, value_delimiter = ',')]
        target: Vec<String>,
        /// Decide an additively parametrised model through the ITA reduction.
        #[arg(long)]
        additive: bool,
        model: PathBuf,
    },
    /// Build the class automaton of one parameter region.
    Graph {
        /// Index of the region in enumeration order.
        #[arg(long, default_value_t = 0)]
        region: usize,
        #[arg(long, value_name = "OUT")]
        dot: Option<PathBuf>,
        /// Print every class and edge.
        #[arg(long)]
        dump_classes: bool,
        model: PathBuf,
    },
    /// Random run of the model instantiated at a parameter valuation.
    Simulate {
        #[arg(long, value_name = "FILE")]
        pi: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        model: PathBuf,
    },
    /// Print PolPar and the expression sets.
    Exprsets { model: PathBuf },
    /// List the non-empty parameter regions.
    Regions {
        /// Only regions defined by strict inequalities.
        #[arg(long)]
        open: bool,
        #[arg(long, value_name = "FILE")]
        scope: Option<PathBuf>,
        model: PathBuf,
    },
    /// Print a model in normal form.
    Print { model: PathBuf },
}

struct Fail(String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(e.to_string())
    }
}

type Out = Result<i32, Fail>;

struct Ctx {
    solver: Option<PathBuf>,
    cap: usize,
    json: Option<PathBuf>,
}

impl Ctx {
    fn backend(&self, a: &Automaton) -> Result<Backend, Fail> {
        Ok(Backend::select(&a.params, self.solver.as_deref())?)
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Result<(), Fail> {
        let Some(path) = &self.json else {
            return Ok(());
        };
        let text = serde_json::to_string_pretty(value)? + "\n";
        write_out(path, &text)
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Fail> {
    if path == Path::new("-") {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        fs::write(path, text).map_err(|e| Fail(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail(format!("{}: {e}", path.display())))
}

/// Parses and validates a model file, returning the analysable automaton.
fn load(path: &Path) -> Result<Automaton, Fail> {
    let src = read(path)?;
    let doc = parse_model(&src).map_err(|errs| Fail(located(path, &errs)))?;
    let diags = doc.diagnostics();
    if !diags.is_empty() {
        return Err(Fail(located(path, &diags)));
    }
    Ok(doc.core())
}

fn located(path: &Path, diags: &[super::Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}:{d}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn load_scope(path: Option<&Path>, a: &Automaton) -> Result<Option<Formula>, Fail> {
    match path {
        None => Ok(None),
        Some(p) => {
            let src = read(p)?;
            parse_scope(&src, &a.params)
                .map(Some)
                .map_err(|d| Fail(format!("{}:{d}", p.display())))
        }
    }
}

fn targets(a: &Automaton, names: &[String]) -> Result<Vec<StateId>, Fail> {
    if names.is_empty() {
        let acc = a.accepting_states();
        if acc.is_empty() {
            return Err(Fail(
                "no --target given and the model has no final state".into(),
            ));
        }
        return Ok(acc);
    }
    names
        .iter()
        .map(|n| {
            a.find_state(n)
                .ok_or_else(|| Fail(format!("unknown state `{n}`")))
        })
        .collect()
}

fn exit_of(answer: Answer) -> i32 {
    match answer {
        Answer::Yes => EXIT_YES,
        Answer::No => EXIT_NO,
        Answer::Unknown => EXIT_UNKNOWN,
    }
}

#[derive(Serialize)]
struct CheckDoc {
    valid: bool,
    plain_ita: bool,
    violations: Vec<String>,
}

fn cmd_check(ctx: &Ctx, path: &Path) -> Out {
    let src = read(path)?;
    let doc = match parse_model(&src) {
        Ok(d) => d,
        Err(errs) => {
            eprintln!("{}", located(path, &errs));
            return Ok(EXIT_ERROR);
        }
    };
    let diags = doc.diagnostics();
    let a = doc.core();
    ctx.write_json(&CheckDoc {
        valid: diags.is_empty(),
        plain_ita: a.is_ita(),
        violations: diags.iter().map(|d| d.to_string()).collect(),
    })?;
    if diags.is_empty() {
        outln!(
            "ok: {} levels, {} clocks, {} states, {} transitions, {}",
            a.levels,
            a.clocks.len(),
            a.states.len(),
            a.transitions.len(),
            if a.is_ita() {
                "no parameters".to_string()
            } else {
                format!("parameters {}", a.params.join(" "))
            }
        );
        Ok(0)
    } else {
        outln!("{}", located(path, &diags));
        Ok(1)
    }
}

fn cmd_reach(
    ctx: &Ctx,
    mode: ModeArg,
    scope: Option<&Path>,
    target: &[String],
    additive: bool,
    path: &Path,
) -> Out {
    let a = load(path)?;
    let targets = targets(&a, target)?;
    let scope = load_scope(scope, &a)?;
    let mode = match mode {
        ModeArg::Exist => Mode::Exist,
        ModeArg::Forall => Mode::Forall,
        ModeArg::Robust => Mode::Robust,
    };
    let (model, scope) = if additive {
        if mode != Mode::Exist {
            return Err(Fail(
                "--additive only decides existential reachability".into(),
            ));
        }
        (reduce_additive(&a, scope.as_ref())?.automaton, None)
    } else {
        (a, scope)
    };
    let mut backend = ctx.backend(&model)?;
    let opts = ReachOptions {
        mode,
        scope,
        cap: ctx.cap,
    };
    let v = reach(&model, &targets, &opts, &mut backend)?;
    for line in v.lines(&model) {
        outln!("{line}");
    }
    if let Some(p) = &ctx.json {
        write_out(p, &(v.to_json(&model) + "\n"))?;
    }
    Ok(exit_of(v.answer))
}

#[derive(Serialize)]
struct GraphDoc {
    region: Vec<String>,
    classes: Vec<String>,
    complete: bool,
}

fn cmd_graph(ctx: &Ctx, index: usize, dot: Option<&Path>, dump: bool, path: &Path) -> Out {
    let a = load(path)?;
    let e = saturate(&a)?;
    let mut backend = ctx.backend(&a)?;
    let region = enumerate_regions(&a, &e, &mut backend, EnumOptions::default())
        .nth(index)
        .transpose()?
        .ok_or_else(|| Fail(format!("there is no region {index}")))?;
    let layout = Layout::new(&a, &e, &region)?;
    let (ca, _) = build_with(
        &layout,
        BuildOptions {
            cap: ctx.cap,
            ..BuildOptions::default()
        },
        |_| false,
    )?;
    for line in region.lines(&a, &e) {
        outln!("region {line}");
    }
    outln!("{} classes, {} edges", ca.len(), ca.edges.len());
    let lines = ca.lines(&layout);
    if dump {
        for l in &lines {
            outln!("{l}");
        }
    }
    if let Some(p) = dot {
        write_out(p, &export_dot(&ca, &layout))?;
    }
    ctx.write_json(&GraphDoc {
        region: region.lines(&a, &e),
        classes: lines,
        complete: ca.complete,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct SimDoc {
    visited: Vec<String>,
    trace: Vec<String>,
}

fn cmd_simulate(ctx: &Ctx, pi: Option<&Path>, steps: usize, seed: u64, path: &Path) -> Out {
    let a = load(path)?;
    let point = match pi {
        Some(p) => parse_valuation(&read(p)?, &a.params)
            .map_err(|d| Fail(format!("{}:{d}", p.display())))?,
        None if a.is_ita() => Vec::new(),
        None => return Err(Fail("a parametric model needs --pi".into())),
    };
    let inst = crate::semantics::instantiate(&a, &point)?;
    let sim = simulate_random(&inst, steps, seed)?;
    let trace = Trace {
        automaton: &inst,
        steps: &sim.steps,
        last: &sim.last,
    }
    .to_string();
    out!("{trace}");
    ctx.write_json(&SimDoc {
        visited: sim
            .visited
            .iter()
            .map(|q| inst.state(*q).name.clone())
            .collect(),
        trace: trace.lines().map(str::to_string).collect(),
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct ExprDoc {
    polpar: Vec<String>,
    levels: Vec<Vec<String>>,
    bounds_ok: bool,
}

fn cmd_exprsets(ctx: &Ctx, path: &Path) -> Out {
    let a = load(path)?;
    let e = saturate(&a)?;
    out!("{}", e.dump(&a));
    let report = check_bounds(&e, &a);
    out!("{report}");
    let names = a.names(&e.registry);
    ctx.write_json(&ExprDoc {
        polpar: e
            .registry
            .members()
            .iter()
            .map(|p| p.display(&a.params).to_string())
            .collect(),
        levels: (1..=a.levels)
            .map(|k| {
                e.level(k)
                    .iter()
                    .map(|x| x.display(&names).to_string())
                    .collect()
            })
            .collect(),
        bounds_ok: report.ok(),
    })?;
    Ok(if report.ok() { 0 } else { 1 })
}

fn cmd_regions(ctx: &Ctx, open: bool, scope: Option<&Path>, path: &Path) -> Out {
    let a = load(path)?;
    let e = saturate(&a)?;
    let scope = load_scope(scope, &a)?;
    let mut backend = ctx.backend(&a)?;
    let mut all = Vec::new();
    let mut it = enumerate_regions(
        &a,
        &e,
        &mut backend,
        EnumOptions {
            open_only: open,
            scope,
        },
    );
    for (i, r) in it.by_ref().enumerate() {
        let r = r?;
        outln!("region {i}");
        let lines = r.lines(&a, &e);
        for l in &lines {
            outln!("  {l}");
        }
        all.push(lines);
    }
    let incomplete = it.stats.incomplete();
    if incomplete {
        outln!(
            "warning: {} branches could not be decided and were dropped",
            it.stats.pruned_unknown
        );
    }
    ctx.write_json(&all)?;
    Ok(if incomplete { EXIT_UNKNOWN } else { 0 })
}

fn dispatch(cli: Cli) -> Out {
    QUIET.store(
        cli.json.as_deref() == Some(Path::new("-")),
        Ordering::Relaxed,
    );
    let ctx = Ctx {
        solver: cli.solver,
        cap: cli.cap,
        json: cli.json,
    };
    match cli.command {
        Command::Check { model } => cmd_check(&ctx, &model),
        Command::Reach {
            mode,
            scope,
            target,
            additive,
            model,
        } => cmd_reach(&ctx, mode, scope.as_deref(), &target, additive, &model),
        Command::Graph {
            region,
            dot,
            dump_classes,
            model,
        } => cmd_graph(&ctx, region, dot.as_deref(), dump_classes, &model),
        Command::Simulate {
            pi,
            steps,
            seed,
            model,
        } => cmd_simulate(&ctx, pi.as_deref(), steps, seed, &model),
        Command::Exprsets { model } => cmd_exprsets(&ctx, &model),
        Command::Regions { open, scope, model } => {
            cmd_regions(&ctx, open, scope.as_deref(), &model)
        }
        Command::Print { model } => {
            let src = read(&model)?;
            let doc = parse_model(&src).map_err(|errs| Fail(located(&model, &errs)))?;
            out!("{}", super::print_model(&doc.automaton));
            Ok(0)
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(Fail(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}
