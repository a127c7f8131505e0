//! Command-line driver: parse an input file, configure the solver, run it,
//! and report the verdict, witnesses, and statistics.
//!
//! Exit codes: 10 = sat, 20 = unsat, 30 = unknown, 1 = usage or input
//! error, 130 = interrupted. Diagnostics go to stderr; results, the
//! human-readable table, and one structured JSON record per run go to
//! stdout.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sosat::cegis::{solve, SolveResult, SolveStats, SolverConfig, Verdict};
use sosat::encodings::corpus::{load_corpus, BenchmarkCase, CaseStatus, InputFormat};
use sosat::encodings::loops::{
    encode_nontermination, encode_safety, encode_termination, parse_loop_file,
};
use sosat::encodings::qbf::{encode_qbf, negate_qbf, parse_qdimacs};
use sosat::formula::{parse_formula, SOSFormula};
use sosat::lang::pretty_print;
use sosat::sat::SatBackend;
use sosat::synth::StrategyKind;

pub const EXIT_SAT: i32 = 10;
pub const EXIT_UNSAT: i32 = 20;
pub const EXIT_UNKNOWN: i32 = 30;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INTERRUPT: i32 = 130;

#[derive(Parser)]
#[command(
    name = "sosat",
    about = "Decide existential second-order formulas over bitvectors by synthesising \
             loop-free programs for the quantified functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one input file (.sos formula, .loop program, .qdimacs QBF).
    Solve(SolveArgs),
    /// Run the bundled benchmark corpus and summarise the results.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Input file; the extension selects the reader.
    file: PathBuf,
    /// Overall time budget, in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Question to ask of a .loop file.
    #[arg(long, value_enum, default_value_t = LoopQuestion::Safety)]
    encode: LoopQuestion,
    /// For QBF inputs: race the formula against its negation and report
    /// whichever side decides first (the negation deciding sat means unsat,
    /// and vice versa).
    #[arg(long)]
    dual: bool,
    /// Override the target word width of the input formula.
    #[arg(long)]
    width: Option<u32>,
    #[command(flatten)]
    solver: SolverOpts,
}

#[derive(Args)]
struct BenchArgs {
    /// Per-case time budget, in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    /// Only run cases whose id contains this substring.
    #[arg(long)]
    filter: Option<String>,
    /// Include the known-hard cases (off by default: each one runs to its
    /// timeout).
    #[arg(long)]
    all: bool,
    #[command(flatten)]
    solver: SolverOpts,
}

/// Solver knobs shared by both subcommands.
#[derive(Args)]
struct SolverOpts {
    /// Cap on the total instruction count searched. A cap below the
    /// exhaustion bound turns would-be unsat verdicts into unknown.
    #[arg(long)]
    max_length: Option<usize>,
    /// Working width the search starts at (default: min(4, target width)).
    #[arg(long)]
    initial_width: Option<u32>,
    /// Comma-separated synthesis strategies to race.
    #[arg(long, value_delimiter = ',', default_values_t = [
        StrategyArg::Explicit, StrategyArg::Symbolic, StrategyArg::Gp
    ])]
    strategies: Vec<StrategyArg>,
    /// Single-threaded, reproducible run: byte-identical logs and records
    /// (elapsed times print as "-").
    #[arg(long)]
    deterministic: bool,
    /// Seed for all randomised components.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SAT backend: "builtin" or the path of a DIMACS solver binary.
    #[arg(long, default_value = "builtin")]
    sat_backend: String,
    /// Admit the left-shift extension opcode into the search language.
    #[arg(long)]
    enable_shl: bool,
    /// Write the machine-readable run log (JSON lines) to this path
    /// (bench: a directory holding one log per case).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Explicit,
    Symbolic,
    Gp,
}

impl std::fmt::Display for StrategyArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyArg::Explicit => "explicit",
            StrategyArg::Symbolic => "symbolic",
            StrategyArg::Gp => "gp",
        })
    }
}

impl From<StrategyArg> for StrategyKind {
    fn from(a: StrategyArg) -> StrategyKind {
        match a {
            StrategyArg::Explicit => StrategyKind::Explicit,
            StrategyArg::Symbolic => StrategyKind::Symbolic,
            StrategyArg::Gp => StrategyKind::Gp,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LoopQuestion {
    /// Does an inductive invariant prove the assertion?
    Safety,
    /// Does a ranking function prove every run exits?
    Termination,
    /// Does a recurrence set prove some run never exits?
    Nontermination,
}

fn fail(message: impl std::fmt::Display) -> i32 {
    eprintln!("sosat: {message}");
    EXIT_USAGE
}

impl SolverOpts {
    fn to_config(&self) -> Result<SolverConfig, String> {
        if self.strategies.is_empty() {
            return Err("at least one strategy is required".into());
        }
        let mut config = SolverConfig {
            strategies: self.strategies.iter().map(|&s| s.into()).collect(),
            deterministic: self.deterministic,
            seed: self.seed,
            max_length: self.max_length,
            initial_width: self.initial_width,
            enable_shl: self.enable_shl,
            ..SolverConfig::default()
        };
        config.sat_backend = match self.sat_backend.as_str() {
            "builtin" => SatBackend::Builtin,
            path => SatBackend::External(PathBuf::from(path)),
        };
        Ok(config)
    }
}

fn duration_secs(secs: f64) -> Result<Duration, String> {
    if secs.is_finite() && secs > 0.0 {
        Ok(Duration::from_secs_f64(secs))
    } else {
        Err(format!("time budget must be positive, got {secs}"))
    }
}

pub fn main() -> i32 {
    match Cli::parse().command {
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
    }
}

/// Read and encode the input down to a formula, honouring the loop-file
/// question choice.
fn load_input(args: &SolveArgs) -> Result<SOSFormula, String> {
    let name = args.file.to_string_lossy();
    let format = InputFormat::from_name(&name)
        .ok_or_else(|| format!("cannot infer a format from `{name}` (.sos, .loop, .qdimacs)"))?;
    let text = std::fs::read_to_string(&args.file).map_err(|e| format!("{name}: {e}"))?;
    let formula = match format {
        InputFormat::Formula => parse_formula(&text).map_err(|e| e.to_string())?,
        InputFormat::Loop => {
            let file = parse_loop_file(&text).map_err(|e| e.to_string())?;
            let width = args.width.unwrap_or(file.width);
            match args.encode {
                LoopQuestion::Safety => {
                    let assertion = file
                        .assertion
                        .clone()
                        .ok_or("loop file has no (assert ...) to prove safe")?;
                    encode_safety(&file.system, &assertion, width).map_err(|e| e.to_string())?
                }
                LoopQuestion::Termination => {
                    encode_termination(&file.system, width).map_err(|e| e.to_string())?
                }
                LoopQuestion::Nontermination => {
                    encode_nontermination(&file.system, width).map_err(|e| e.to_string())?
                }
            }
        }
        InputFormat::Qdimacs => {
            let q = parse_qdimacs(&text).map_err(|e| e.to_string())?;
            encode_qbf(&q).map_err(|e| e.to_string())?
        }
    };
    Ok(formula)
}

fn run_solve(args: SolveArgs) -> i32 {
    let mut config = match args.solver.to_config() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    match args.timeout.map(duration_secs).transpose() {
        Ok(t) => config.timeout = t,
        Err(e) => return fail(e),
    }
    if args.dual {
        let name = args.file.to_string_lossy().into_owned();
        if InputFormat::from_name(&name) != Some(InputFormat::Qdimacs) {
            return fail("--dual only applies to QBF inputs");
        }
        return run_dual(&args, config);
    }
    let mut formula = match load_input(&args) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    // Loop inputs consume --width during encoding; formula inputs retarget
    // here.
    if let Some(w) = args.width {
        formula.default_width = w;
    }
    if let Err(e) = formula.validate() {
        return fail(e);
    }
    let result = match solve(&formula.skolemize(), &config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    report_run(&args.file.to_string_lossy(), &formula, &result, &args.solver)
}

/// Race the QBF against its negation; the first decisive side answers for
/// both. In deterministic mode the sides run in sequence instead, so the
/// output stays reproducible.
fn run_dual(args: &SolveArgs, config: SolverConfig) -> i32 {
    let name = args.file.to_string_lossy().into_owned();
    let text = match std::fs::read_to_string(&args.file) {
        Ok(t) => t,
        Err(e) => return fail(format!("{name}: {e}")),
    };
    let q = match parse_qdimacs(&text) {
        Ok(q) => q,
        Err(e) => return fail(e),
    };
    let sides = [("formula", q.clone()), ("negation", negate_qbf(&q))];
    let mut encoded = Vec::new();
    for (label, side) in &sides {
        match encode_qbf(side) {
            Ok(f) => encoded.push((*label, f.skolemize())),
            Err(e) => return fail(format!("{label}: {e}")),
        }
    }

    let decided: Option<(&'static str, SolveResult)> = if config.deterministic {
        let mut first = None;
        for (label, instance) in &encoded {
            match solve(instance, &config) {
                Ok(r) if !matches!(r.verdict, Verdict::Unknown { .. }) => {
                    first = Some((*label, r));
                    break;
                }
                Ok(r) => {
                    if first.is_none() {
                        first = Some((*label, r));
                    }
                }
                Err(e) => return fail(e),
            }
        }
        first
    } else {
        let (tx, rx) = mpsc::channel();
        for (label, instance) in encoded.clone() {
            let tx = tx.clone();
            let config = config.clone();
            std::thread::spawn(move || {
                let out = solve(&instance, &config);
                let _ = tx.send((label, out));
            });
        }
        drop(tx);
        let mut fallback = None;
        let mut winner = None;
        for (label, out) in rx {
            match out {
                Ok(r) if !matches!(r.verdict, Verdict::Unknown { .. }) => {
                    winner = Some((label, r));
                    break;
                }
                Ok(r) => fallback = Some((label, r)),
                Err(e) => return fail(e),
            }
        }
        winner.or(fallback)
    };

    let Some((side, mut result)) = decided else {
        return fail("both dual sides failed");
    };
    // A verdict for the negation answers the original with the opposite
    // sign; witnesses then belong to the negation and are reported as such.
    if side == "negation" {
        result.verdict = match result.verdict {
            Verdict::Sat { witnesses } => {
                println!("; decided by the negation: its witnesses refute the formula");
                for (sig, prog) in encoded[1].1.functions.iter().zip(&witnesses) {
                    println!("; refuting {}:\n{}", sig.name, pretty_print(prog));
                }
                Verdict::Unsat
            }
            Verdict::Unsat => Verdict::Sat { witnesses: Vec::new() },
            unknown => unknown,
        };
    }
    println!("; dual race decided by the {side}");
    let formula = encode_qbf(&q).expect("validated above");
    report_run(&name, &formula, &result, &args.solver)
}

/// Elapsed milliseconds, or "-" when reproducibility masks them.
fn ms(deterministic: bool, v: u128) -> String {
    if deterministic {
        "-".into()
    } else {
        format!("{v}")
    }
}

fn stats_json(stats: &SolveStats, deterministic: bool) -> serde_json::Value {
    let mut v = serde_json::to_value(stats).expect("stats serialize");
    if deterministic {
        for field in ["synth_ms", "verif_ms", "total_ms"] {
            v[field] = serde_json::Value::Null;
        }
    }
    v
}

/// Print the human table plus the structured record, then map the verdict
/// to the exit code.
fn report_run(name: &str, formula: &SOSFormula, result: &SolveResult, opts: &SolverOpts) -> i32 {
    let SolveResult { verdict, stats, log } = result;
    let det = opts.deterministic;

    let mut table = String::new();
    let _ = writeln!(table, "file       : {name}");
    let _ = writeln!(table, "verdict    : {}", verdict.name());
    if let Verdict::Sat { witnesses } = verdict {
        for (sig, prog) in formula.second_order.iter().zip(witnesses) {
            let _ = writeln!(table, "witness {} :\n{}", sig.name, indent(&pretty_print(prog)));
        }
        // Skolemized first-order existentials ride along after the declared
        // symbols.
        for (i, prog) in witnesses.iter().enumerate().skip(formula.second_order.len()) {
            let _ = writeln!(table, "witness #{i} :\n{}", indent(&pretty_print(prog)));
        }
    }
    if let Verdict::Unknown { reason } = verdict {
        let _ = writeln!(table, "reason     : {reason}");
    }
    let _ = writeln!(table, "iterations : {}", stats.iterations);
    let _ = writeln!(
        table,
        "synth wins : explicit={} symbolic={} gp={}",
        stats.synth_wins.explicit, stats.synth_wins.symbolic, stats.synth_wins.gp
    );
    let _ = writeln!(
        table,
        "verify     : sweep={} symbolic={} cex={} refuted-points={}",
        stats.verif_sweep_decisions,
        stats.verif_symbolic_decisions,
        stats.stored_counterexamples,
        stats.pointwise_refutations
    );
    let _ = writeln!(
        table,
        "generalize : attempts={} successes={}",
        stats.generalisation_attempts, stats.generalisation_successes
    );
    let other = stats.total_ms.saturating_sub(stats.synth_ms + stats.verif_ms);
    let _ = writeln!(
        table,
        "time ms    : synth={} verify={} generalize+other={} total={}",
        ms(det, stats.synth_ms),
        ms(det, stats.verif_ms),
        ms(det, other),
        ms(det, stats.total_ms)
    );
    let _ = writeln!(
        table,
        "final      : l={} c={} w={} (widths visited: {:?})",
        stats.final_length, stats.final_consts, stats.final_width, stats.widths
    );
    if let Some(m) = stats.minimal_solution_length {
        let _ = writeln!(table, "minimal    : {m} instructions");
    }
    print!("{table}");

    let log_path = match write_log(opts, log) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    if let Some(p) = &log_path {
        println!("log        : {}", p.display());
    }

    let witnesses: Vec<serde_json::Value> = match verdict {
        Verdict::Sat { witnesses } => witnesses
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let name = formula
                    .second_order
                    .get(i)
                    .map(|s| s.name.clone())
                    .unwrap_or_else(|| format!("#{i}"));
                json!({"name": name, "program": pretty_print(p)})
            })
            .collect(),
        _ => Vec::new(),
    };
    let record = json!({
        "record": "run",
        "file": name,
        "verdict": verdict.name(),
        "reason": match verdict {
            Verdict::Unknown { reason } => Some(reason.clone()),
            _ => None,
        },
        "witnesses": witnesses,
        "stats": stats_json(stats, det),
        "log_path": log_path.as_ref().map(|p| p.display().to_string()),
    });
    println!("{record}");

    match verdict {
        Verdict::Sat { .. } => EXIT_SAT,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

fn write_log(opts: &SolverOpts, log: &sosat::cegis::RunLog) -> Result<Option<PathBuf>, String> {
    let Some(path) = &opts.log else { return Ok(None) };
    std::fs::write(path, log.to_jsonl()).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Some(path.clone()))
}

struct BenchRow {
    id: String,
    status: CaseStatus,
    verdict: String,
    length: Option<usize>,
    iterations: u64,
    millis: u128,
}

fn run_bench(args: BenchArgs) -> i32 {
    let mut config = match args.solver.to_config() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let per_case = match duration_secs(args.timeout) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    config.timeout = Some(per_case);

    let cases = match load_corpus() {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let selected: Vec<BenchmarkCase> = cases
        .into_iter()
        .filter(|c| args.all || c.status == CaseStatus::Solvable)
        .filter(|c| args.filter.as_ref().is_none_or(|f| c.id.contains(f.as_str())))
        .collect();

    let rows: Arc<Mutex<Vec<BenchRow>>> = Arc::new(Mutex::new(Vec::new()));
    let det = args.solver.deterministic;
    let interrupted = Arc::new(AtomicBool::new(false));
    {
        let rows = Arc::clone(&rows);
        let interrupted = Arc::clone(&interrupted);
        let _ = ctrlc::set_handler(move || {
            if interrupted.swap(true, Ordering::SeqCst) {
                // Second interrupt: give up immediately.
                std::process::exit(EXIT_INTERRUPT);
            }
            let rows = rows.lock().unwrap();
            eprintln!("sosat: interrupted after {} case(s); partial results:", rows.len());
            print_bench_summary(&rows, det);
            std::process::exit(EXIT_INTERRUPT);
        });
    }

    println!(
        "{:<6} {:<10} {:<8} {:>6} {:>10} {:>10}",
        "case", "status", "verdict", "len", "iters", "ms"
    );
    for case in &selected {
        if interrupted.load(Ordering::SeqCst) {
            break;
        }
        let mut case_config = config.clone();
        case_config.enable_shl = config.enable_shl || case.enable_shl;
        let instance = case.formula.skolemize();
        let started = std::time::Instant::now();
        let result = match solve(&instance, &case_config) {
            Ok(r) => r,
            Err(e) => return fail(format!("case {}: {e}", case.id)),
        };
        let millis = started.elapsed().as_millis();
        let length = match &result.verdict {
            Verdict::Sat { witnesses } => {
                Some(witnesses.iter().map(|p| p.body.len()).sum::<usize>())
            }
            _ => None,
        };
        let row = BenchRow {
            id: case.id.to_string(),
            status: case.status,
            verdict: result.verdict.name().to_string(),
            length,
            iterations: result.stats.iterations,
            millis,
        };
        println!(
            "{:<6} {:<10} {:<8} {:>6} {:>10} {:>10}",
            row.id,
            match row.status {
                CaseStatus::Solvable => "solvable",
                CaseStatus::KnownHard => "known-hard",
            },
            row.verdict,
            row.length.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            row.iterations,
            ms(det, row.millis)
        );
        let mut log_path = None;
        if let Some(dir) = &args.solver.log {
            let path = dir.join(format!("{}.jsonl", case.id));
            let write = std::fs::create_dir_all(dir)
                .and_then(|()| std::fs::write(&path, result.log.to_jsonl()));
            if let Err(e) = write {
                return fail(format!("{}: {e}", path.display()));
            }
            log_path = Some(path.display().to_string());
        }
        let record = json!({
            "record": "bench-case",
            "case": row.id,
            "verdict": row.verdict,
            "solution_length": row.length,
            "expected_length": case.expected_length,
            "stats": stats_json(&result.stats, det),
            "log_path": log_path,
        });
        println!("{record}");
        rows.lock().unwrap().push(row);
    }

    let rows = rows.lock().unwrap();
    print_bench_summary(&rows, det);
    0
}

fn print_bench_summary(rows: &[BenchRow], det: bool) {
    let solved: Vec<&BenchRow> = rows.iter().filter(|r| r.verdict == "sat").collect();
    let avg = |num: u128, den: usize| -> String {
        if den == 0 {
            "-".into()
        } else {
            format!("{:.1}", num as f64 / den as f64)
        }
    };
    let total_ms: u128 = rows.iter().map(|r| r.millis).sum();
    let avg_len = avg(solved.iter().filter_map(|r| r.length).sum::<usize>() as u128, solved.len());
    let avg_iters = avg(solved.iter().map(|r| r.iterations as u128).sum(), solved.len());
    let (avg_ms, total) = if det {
        ("-".into(), "-".into())
    } else {
        (avg(total_ms, rows.len()), format!("{total_ms}"))
    };
    println!("solved {} of {} | avg size {avg_len} | avg iterations {avg_iters} | avg ms {avg_ms} | total ms {total}",
        solved.len(), rows.len());
    let record = json!({
        "record": "bench-summary",
        "cases": rows.len(),
        "solved": solved.len(),
        "avg_solution_size": if solved.is_empty() { None } else {
            Some(solved.iter().filter_map(|r| r.length).sum::<usize>() as f64 / solved.len() as f64)
        },
        "avg_iterations": if solved.is_empty() { None } else {
            Some(solved.iter().map(|r| r.iterations).sum::<u64>() as f64 / solved.len() as f64)
        },
        "avg_ms": if det { None } else { Some(total_ms as f64 / rows.len().max(1) as f64) },
        "total_ms": if det { None } else { Some(total_ms) },
    });
    println!("{record}");
}
