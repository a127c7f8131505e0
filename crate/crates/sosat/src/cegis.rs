//! The top-level decision procedure: counterexample-guided search over
//! program shapes and word widths.
//!
//! The search walks shapes (total instruction count `l`, total constant
//! count `c`) at a working width `w`, racing the synthesis strategies
//! against per-width counterexample pools. A candidate found at `w` is
//! lifted value-preservingly to the formula's full width `W` and verified
//! there; a full-width counterexample sends the search back with a grown
//! pool, a small-width recheck deciding whether to keep refining at `w`,
//! lift constants by generalisation rules, or widen. Counterexamples found
//! at width `v` constrain synthesis only at width `v`: mixing them across
//! widths could exclude genuine candidates and make failure verdicts
//! unsound.
//!
//! Fail verdicts are claimed only when the search provably covered every
//! shape up to the stopping bound at the full width; anything less —
//! strategy capacity limits, width walks that skipped short shapes at the
//! full width, user caps, timeouts — degrades the verdict to unknown
//! rather than an unsound fail.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::formula::{BodyEvaluator, BodyExpr, CompiledBody, SynthesisInstance};
use crate::lang::{width_mask, Opcode, Program, FLOAT_WIDTH};
use crate::sat::SatBackend;
use crate::synth::explicit::ExplicitStrategy;
use crate::synth::gp::{GpParams, GpStrategy};
use crate::synth::symbolic::SymbolicStrategy;
use crate::synth::{
    partition_symbols, search_opcodes, shape_splits, ShapeCtx, ShapeSplit, StepOutcome, Strategy,
    StrategyKind, SymbolShape,
};
use crate::verify::{generalize_constants, Verifier, VerifyConfig, VerifyMode, VerifyOutcome};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Strategies raced during synthesis, in turn order.
    pub strategies: Vec<StrategyKind>,
    /// Single-threaded round-robin with reproducible logs when true;
    /// a threaded race when false.
    pub deterministic: bool,
    pub seed: u64,
    pub timeout: Option<Duration>,
    /// User cap on the total instruction count. A cap below the theoretical
    /// stopping bound weakens exhaustion to an unknown verdict.
    pub max_length: Option<usize>,
    /// Working width to start at; defaults to min(4, full width), raised
    /// until the body's width pins are satisfied.
    pub initial_width: Option<u32>,
    pub sat_backend: SatBackend,
    /// Admit the left-shift extension opcode into the search language.
    pub enable_shl: bool,
    pub gp: GpParams,
    /// Candidate evaluations per explicit-enumeration turn.
    pub explicit_budget: u64,
    /// Shape splits decided per SAT-search turn.
    pub symbolic_budget: u64,
    /// Generations evolved per genetic-programming turn.
    pub gp_budget: u64,
    /// Clause ceiling for SAT-search encodings.
    pub clause_cap: usize,
    /// Constant-lifting combinations tried per generalisation.
    pub generalize_trials: u64,
    pub verify: VerifyConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            strategies: vec![StrategyKind::Explicit, StrategyKind::Symbolic, StrategyKind::Gp],
            deterministic: true,
            seed: 0,
            timeout: None,
            max_length: None,
            initial_width: None,
            sat_backend: SatBackend::Builtin,
            enable_shl: false,
            gp: GpParams::default(),
            explicit_budget: 20_000,
            symbolic_budget: 1,
            gp_budget: 25,
            clause_cap: crate::synth::symbolic::DEFAULT_CLAUSE_CAP,
            generalize_trials: 4096,
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Witness programs at the full width, aligned with the instance's
    /// function order, verified against the body.
    Sat { witnesses: Vec<Program> },
    Unsat,
    Unknown { reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Sat { .. } => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown { .. } => "unknown",
        }
    }
}

/// Per-strategy event counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StrategyCounter {
    pub explicit: u64,
    pub symbolic: u64,
    pub gp: u64,
}

impl StrategyCounter {
    fn bump(&mut self, kind: StrategyKind) {
        match kind {
            StrategyKind::Explicit => self.explicit += 1,
            StrategyKind::Symbolic => self.symbolic += 1,
            StrategyKind::Gp => self.gp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.explicit + self.symbolic + self.gp
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    /// Candidate tuples sent to full-width verification.
    pub iterations: u64,
    /// Which strategy produced each candidate; totals to `iterations`.
    pub synth_wins: StrategyCounter,
    /// Verification decisions made by the exhaustive/probing route.
    pub verif_sweep_decisions: u64,
    /// Verification decisions made by the SAT route.
    pub verif_symbolic_decisions: u64,
    /// Counterexamples stored across all width pools.
    pub stored_counterexamples: u64,
    /// Full-width counterexamples shown to defeat every possible choice of
    /// function outputs, each an immediate fail certificate.
    pub pointwise_refutations: u64,
    pub generalisation_attempts: u64,
    pub generalisation_successes: u64,
    /// Working widths in visit order.
    pub widths: Vec<u32>,
    pub final_length: usize,
    pub final_consts: usize,
    pub final_width: u32,
    /// Total instruction count of the first (and therefore shortest
    /// reachable) accepted witness tuple.
    pub minimal_solution_length: Option<usize>,
    pub synth_ms: u128,
    pub verif_ms: u128,
    pub total_ms: u128,
}

/// One line of the machine-readable run log. Events never carry wall-clock
/// data, so deterministic runs produce byte-identical logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum LogEvent {
    SynthStart { l: usize, c: usize, w: u32, pool: usize },
    Candidate { strategy: &'static str, length: usize, w: u32 },
    Cex { w: u32, values: Vec<u64> },
    ParamChange { field: &'static str, from: u64, to: u64, reason: &'static str },
    Verdict { verdict: String, iterations: u64 },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub events: Vec<LogEvent>,
}

impl RunLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("log events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("formula error: {0}")]
    Formula(#[from] crate::formula::EvalError),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Verify(#[from] crate::verify::VerifyError),
}

#[derive(Debug)]
pub struct SolveResult {
    pub verdict: Verdict,
    pub stats: SolveStats,
    pub log: RunLog,
}

pub fn solve(instance: &SynthesisInstance, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    Engine::new(instance, config)?.run()
}

/// Strategies held concretely so engine-level checks (decode mismatch
/// detection) stay available without downcasting.
enum AnyStrategy {
    Explicit(ExplicitStrategy),
    Symbolic(SymbolicStrategy),
    Gp(GpStrategy),
}

impl AnyStrategy {
    fn kind(&self) -> StrategyKind {
        match self {
            AnyStrategy::Explicit(s) => s.kind(),
            AnyStrategy::Symbolic(s) => s.kind(),
            AnyStrategy::Gp(s) => s.kind(),
        }
    }

    fn begin_shape(&mut self, ctx: &ShapeCtx<'_>) {
        match self {
            AnyStrategy::Explicit(s) => s.begin_shape(ctx),
            AnyStrategy::Symbolic(s) => s.begin_shape(ctx),
            AnyStrategy::Gp(s) => s.begin_shape(ctx),
        }
    }

    fn step(&mut self, ctx: &ShapeCtx<'_>, budget: u64) -> StepOutcome {
        match self {
            AnyStrategy::Explicit(s) => s.step(ctx, budget),
            AnyStrategy::Symbolic(s) => s.step(ctx, budget),
            AnyStrategy::Gp(s) => s.step(ctx, budget),
        }
    }

    /// A candidate the SAT route decoded but the interpreter rejected —
    /// evidence the two value semantics disagree somewhere.
    fn mismatch(&self) -> Option<String> {
        match self {
            AnyStrategy::Symbolic(s) => s.mismatch.as_ref().map(|m| m.detail.clone()),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Pool {
    rows: Vec<Vec<u64>>,
    seen: HashSet<Vec<u64>>,
}

impl Pool {
    /// Store a counterexample; false if it was already present.
    fn insert(&mut self, row: Vec<u64>) -> bool {
        if self.seen.insert(row.clone()) {
            self.rows.push(row);
            true
        } else {
            false
        }
    }
}

enum SynthStep {
    Found(StrategyKind, Vec<Program>),
    /// No strategy can produce more candidates for this shape. `proven` iff
    /// some strategy covered the whole canonical space.
    Closed { proven: bool },
    Timeout,
}

struct Engine<'a> {
    instance: &'a SynthesisInstance,
    config: &'a SolverConfig,
    body: CompiledBody,
    prog_syms: Vec<SymbolShape>,
    value_syms: Vec<usize>,
    opcodes: Vec<Opcode>,
    strategies: Vec<AnyStrategy>,
    verifier: Verifier,
    big_w: u32,
    w: u32,
    l: usize,
    c: usize,
    pools: BTreeMap<u32, Pool>,
    /// Shape the strategies are currently targeted at.
    current_shape: Option<(usize, usize, u32)>,
    splits: Vec<ShapeSplit>,
    strategy_done: Vec<bool>,
    /// Sticky: some part of the space was closed without an exhaustion
    /// proof, so a fail verdict would be unsound.
    incomplete: bool,
    /// No application's arguments contain another application; a prerequisite
    /// for the per-point refutation check.
    flat_apps: bool,
    stats: SolveStats,
    log: RunLog,
    deadline: Option<Instant>,
    started: Instant,
    salt: u64,
}

impl<'a> Engine<'a> {
    fn new(instance: &'a SynthesisInstance, config: &'a SolverConfig) -> Result<Self, SolveError> {
        let body = CompiledBody::compile(instance)?;
        let big_w = instance.default_width;
        body.check_widths(big_w)?;
        let (prog_syms, value_syms) = partition_symbols(instance);
        if let Some(s) = prog_syms.iter().find(|s| s.arity == 0) {
            return Err(SolveError::Unsupported(format!(
                "function {} takes no inputs but yields {} outputs; such symbols have no \
                 canonical program form",
                instance.functions[s.func].name, s.out_count
            )));
        }
        let uses_floats = body_uses_floats(&body);
        if uses_floats && big_w != FLOAT_WIDTH {
            return Err(SolveError::Unsupported(format!(
                "floating-point operations are defined at width {FLOAT_WIDTH} only, not {big_w}"
            )));
        }
        let mut w = config.initial_width.unwrap_or_else(|| big_w.min(4)).min(big_w).max(1);
        if uses_floats {
            // Reduced widths cannot evaluate float operations.
            w = big_w;
        }
        // Width pins force the working width up until evaluation is defined.
        while w < big_w && body.check_widths(w).is_err() {
            w += 1;
        }
        let strategies: Vec<AnyStrategy> = config
            .strategies
            .iter()
            .map(|k| match k {
                StrategyKind::Explicit => AnyStrategy::Explicit(ExplicitStrategy::new()),
                StrategyKind::Symbolic => AnyStrategy::Symbolic(
                    SymbolicStrategy::new(config.sat_backend.clone())
                        .with_clause_cap(config.clause_cap),
                ),
                StrategyKind::Gp => {
                    AnyStrategy::Gp(GpStrategy::new(config.seed, config.gp.clone()))
                }
            })
            .collect();
        if strategies.is_empty() {
            return Err(SolveError::Unsupported("no synthesis strategies configured".into()));
        }
        let mut verify_cfg = config.verify.clone();
        verify_cfg.seed = config.seed;
        let verifier = Verifier::new(config.sat_backend.clone(), verify_cfg);
        let started = Instant::now();
        let n = strategies.len();
        Ok(Engine {
            instance,
            config,
            body,
            prog_syms,
            value_syms,
            opcodes: search_opcodes(config.enable_shl),
            strategies,
            verifier,
            big_w,
            w,
            l: 1,
            c: 0,
            pools: BTreeMap::new(),
            current_shape: None,
            splits: Vec::new(),
            strategy_done: vec![false; n],
            incomplete: false,
            flat_apps: !body_has_nested_apps(&instance.body),
            stats: SolveStats::default(),
            log: RunLog::default(),
            deadline: config.timeout.map(|t| started + t),
            started,
            salt: 0,
        })
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Length bound past which shape exhaustion at the full width is a
    /// completeness certificate: one instruction per distinct input point.
    fn stopping_bound(&self, w: u32) -> usize {
        let n = self.instance.input_bit_count(w);
        if n >= usize::BITS as usize - 2 {
            usize::MAX
        } else {
            1usize << n
        }
    }

    fn next_salt(&mut self) -> u64 {
        self.salt += 1;
        self.salt
    }

    fn verify_at(
        &mut self,
        witnesses: &[Program],
        width: u32,
    ) -> Result<VerifyOutcome, SolveError> {
        let t = Instant::now();
        let salt = self.next_salt();
        let out = self.verifier.find_counterexample(self.instance, &self.body, witnesses, width, salt);
        self.stats.verif_ms += t.elapsed().as_millis();
        let out = out?;
        match &out {
            VerifyOutcome::Valid { mode, .. } | VerifyOutcome::Counterexample { mode, .. } => {
                match mode {
                    VerifyMode::ExplicitSweep => self.stats.verif_sweep_decisions += 1,
                    VerifyMode::Symbolic => self.stats.verif_symbolic_decisions += 1,
                }
            }
            VerifyOutcome::Unknown { .. } => {}
        }
        Ok(out)
    }

    /// Store a counterexample found at `width`. `must_be_new` encodes the
    /// soundness argument: when the candidate was synthesised against this
    /// very pool, every strategy already screened it on these rows, so a
    /// repeat means the screening semantics and the verifier disagree.
    fn store_cex(&mut self, width: u32, values: Vec<u64>, must_be_new: bool) -> Result<(), SolveError> {
        self.log.events.push(LogEvent::Cex { w: width, values: values.clone() });
        let fresh = self.pools.entry(width).or_default().insert(values.clone());
        if fresh {
            self.stats.stored_counterexamples += 1;
            return Ok(());
        }
        if must_be_new {
            return Err(SolveError::Internal(format!(
                "counterexample {values:?} at width {width} was already stored, yet synthesis \
                 re-proposed a candidate that fails on it"
            )));
        }
        Ok(())
    }

    fn param_change(&mut self, field: &'static str, from: u64, to: u64, reason: &'static str) {
        self.log.events.push(LogEvent::ParamChange { field, from, to, reason });
    }

    /// Upper bound on the enumerated output bits of [`Engine::row_refutes`].
    const REFUTE_BITS: u64 = 16;

    /// Decide whether a full-width counterexample row defeats *every*
    /// possible choice of function outputs, which certifies a fail verdict
    /// outright: no program of any shape can repair a point where the body
    /// is false under all output values.
    ///
    /// Functions enter the body only through applications, so at a fixed
    /// input point their influence reduces to finitely many output words —
    /// one table entry per distinct (function, argument-vector) site. The
    /// check enumerates all table assignments and reports `true` when none
    /// satisfies the body. Sites are only independent words when no
    /// application feeds another, hence the flat-application gate; the
    /// enumeration is gated to [`Engine::REFUTE_BITS`] total bits.
    fn row_refutes(&self, row: &[u64]) -> Result<bool, SolveError> {
        if !self.flat_apps {
            return Ok(false);
        }
        let out_counts: Vec<usize> =
            self.instance.functions.iter().map(|f| f.out_count).collect();
        let mut evaluator = BodyEvaluator::new();
        let mut sites: Vec<(usize, Vec<u64>)> = Vec::new();
        evaluator.evaluate_with_oracle(&self.body, row, self.big_w, &mut |func, args| {
            if !sites.iter().any(|(f, a)| *f == func && a == args) {
                sites.push((func, args.to_vec()));
            }
            vec![0; out_counts[func]]
        })?;
        let words: u64 = sites.iter().map(|(f, _)| out_counts[*f] as u64).sum();
        let bits = words * u64::from(self.big_w);
        if bits > Self::REFUTE_BITS {
            return Ok(false);
        }
        let mask = width_mask(self.big_w);
        let mut tables: Vec<Vec<u64>> =
            sites.iter().map(|(f, _)| vec![0; out_counts[*f]]).collect();
        for combo in 0..(1u64 << bits) {
            let mut rest = combo;
            for (site, (f, _)) in sites.iter().enumerate() {
                for out in &mut tables[site][..out_counts[*f]] {
                    *out = rest & mask;
                    rest >>= self.big_w;
                }
            }
            let satisfied =
                evaluator.evaluate_with_oracle(&self.body, row, self.big_w, &mut |func, args| {
                    let site = sites
                        .iter()
                        .position(|(f, a)| *f == func && a == args)
                        .expect("site sets at a fixed input point are assignment-independent");
                    tables[site].clone()
                })?;
            if satisfied {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Retarget strategies if the shape changed, then race them until a
    /// candidate, closure, or timeout.
    fn synth(&mut self) -> Result<SynthStep, SolveError> {
        let t = Instant::now();
        let step = self.synth_inner();
        self.stats.synth_ms += t.elapsed().as_millis();
        step
    }

    fn synth_inner(&mut self) -> Result<SynthStep, SolveError> {
        let shape = (self.l, self.c, self.w);
        if self.current_shape != Some(shape) {
            self.current_shape = Some(shape);
            self.splits = shape_splits(&self.prog_syms, self.l, self.c);
            self.log.events.push(LogEvent::SynthStart {
                l: self.l,
                c: self.c,
                w: self.w,
                pool: self.pools.get(&self.w).map_or(0, |p| p.rows.len()),
            });
            if self.splits.is_empty() {
                // No way to distribute the budget: the shape is vacuously
                // covered.
                return Ok(SynthStep::Closed { proven: true });
            }
            let inputs = self.pool_rows();
            let ctx = ShapeCtx {
                instance: self.instance,
                body: &self.body,
                prog_syms: &self.prog_syms,
                value_syms: &self.value_syms,
                l: self.l,
                c: self.c,
                w: self.w,
                splits: &self.splits,
                opcodes: &self.opcodes,
                inputs: &inputs,
            };
            for s in self.strategies.iter_mut() {
                s.begin_shape(&ctx);
            }
            self.strategy_done.iter_mut().for_each(|d| *d = false);
        } else if self.splits.is_empty() {
            return Ok(SynthStep::Closed { proven: true });
        }
        if self.config.deterministic {
            self.race_round_robin()
        } else {
            self.race_threads()
        }
    }

    fn pool_rows(&self) -> Vec<Vec<u64>> {
        self.pools.get(&self.w).map_or_else(Vec::new, |p| p.rows.clone())
    }

    fn race_round_robin(&mut self) -> Result<SynthStep, SolveError> {
        let inputs = self.pool_rows();
        let Engine { instance, body, prog_syms, value_syms, opcodes, splits, strategies, .. } =
            self;
        let ctx = ShapeCtx {
            instance,
            body,
            prog_syms,
            value_syms,
            l: self.l,
            c: self.c,
            w: self.w,
            splits,
            opcodes,
            inputs: &inputs,
        };
        loop {
            if self.deadline.is_some_and(|d| Instant::now() >= d) {
                return Ok(SynthStep::Timeout);
            }
            let mut all_done = true;
            for i in 0..strategies.len() {
                if self.strategy_done[i] {
                    continue;
                }
                let kind = strategies[i].kind();
                let budget = match kind {
                    StrategyKind::Explicit => self.config.explicit_budget,
                    StrategyKind::Symbolic => self.config.symbolic_budget,
                    StrategyKind::Gp => self.config.gp_budget,
                };
                let outcome = strategies[i].step(&ctx, budget);
                if let Some(detail) = strategies[i].mismatch() {
                    return Err(SolveError::Internal(format!(
                        "SAT search decoded a candidate the interpreter rejects: {detail}"
                    )));
                }
                match outcome {
                    StepOutcome::Candidate(tuple) => return Ok(SynthStep::Found(kind, tuple)),
                    StepOutcome::Working => all_done = false,
                    StepOutcome::Exhausted { proves_empty } => {
                        self.strategy_done[i] = true;
                        if proves_empty {
                            return Ok(SynthStep::Closed { proven: true });
                        }
                    }
                    StepOutcome::Unavailable => self.strategy_done[i] = true,
                }
                if self.deadline.is_some_and(|d| Instant::now() >= d) {
                    return Ok(SynthStep::Timeout);
                }
            }
            if all_done {
                return Ok(SynthStep::Closed { proven: false });
            }
        }
    }

    /// Threaded race: every strategy runs in its own scoped thread in small
    /// budget slices until one finds a candidate, proves the shape empty,
    /// or all give up. First answer wins; results are not reproducible.
    fn race_threads(&mut self) -> Result<SynthStep, SolveError> {
        enum Msg {
            Found(usize, Vec<Program>),
            Done(usize, bool),
            Gone(usize),
        }
        let inputs = self.pool_rows();
        let deadline = self.deadline;
        let config = self.config;
        let Engine { instance, body, prog_syms, value_syms, opcodes, splits, strategies, .. } =
            self;
        let ctx = ShapeCtx {
            instance,
            body,
            prog_syms,
            value_syms,
            l: self.l,
            c: self.c,
            w: self.w,
            splits,
            opcodes,
            inputs: &inputs,
        };
        let stop = AtomicBool::new(false);
        let (tx, rx) = mpsc::channel::<Msg>();
        let done_flags = &self.strategy_done;
        let kinds: Vec<StrategyKind> = strategies.iter().map(AnyStrategy::kind).collect();
        let result = std::thread::scope(|scope| {
            for (i, strat) in strategies.iter_mut().enumerate() {
                if done_flags[i] {
                    continue;
                }
                let tx = tx.clone();
                let stop = &stop;
                let ctx = &ctx;
                let budget = match strat.kind() {
                    StrategyKind::Explicit => (config.explicit_budget / 10).max(1),
                    StrategyKind::Symbolic => 1,
                    StrategyKind::Gp => (config.gp_budget / 5).max(1),
                };
                scope.spawn(move || loop {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    match strat.step(ctx, budget) {
                        StepOutcome::Candidate(t) => {
                            let _ = tx.send(Msg::Found(i, t));
                            return;
                        }
                        StepOutcome::Working => {}
                        StepOutcome::Exhausted { proves_empty } => {
                            let _ = tx.send(Msg::Done(i, proves_empty));
                            return;
                        }
                        StepOutcome::Unavailable => {
                            let _ = tx.send(Msg::Gone(i));
                            return;
                        }
                    }
                });
            }
            drop(tx);
            let mut verdict: Option<SynthStep> = None;
            let mut newly_done: Vec<usize> = Vec::new();
            loop {
                let msg = match deadline {
                    Some(d) => {
                        let left = d.saturating_duration_since(Instant::now());
                        match rx.recv_timeout(left) {
                            Ok(m) => Some(m),
                            Err(mpsc::RecvTimeoutError::Timeout) => {
                                stop.store(true, Ordering::Relaxed);
                                if verdict.is_none() {
                                    verdict = Some(SynthStep::Timeout);
                                }
                                // Drain until workers exit.
                                rx.recv().ok()
                            }
                            Err(mpsc::RecvTimeoutError::Disconnected) => None,
                        }
                    }
                    None => rx.recv().ok(),
                };
                let Some(msg) = msg else { break };
                match msg {
                    Msg::Found(i, t) => {
                        stop.store(true, Ordering::Relaxed);
                        if verdict.is_none() {
                            verdict = Some(SynthStep::Found(kinds[i], t));
                        }
                    }
                    Msg::Done(i, proves) => {
                        newly_done.push(i);
                        if proves {
                            stop.store(true, Ordering::Relaxed);
                            if verdict.is_none() {
                                verdict = Some(SynthStep::Closed { proven: true });
                            }
                        }
                    }
                    Msg::Gone(i) => newly_done.push(i),
                }
            }
            (verdict, newly_done)
        });
        let (verdict, newly_done) = result;
        for i in newly_done {
            self.strategy_done[i] = true;
        }
        for s in self.strategies.iter() {
            if let Some(detail) = s.mismatch() {
                return Err(SolveError::Internal(format!(
                    "SAT search decoded a candidate the interpreter rejects: {detail}"
                )));
            }
        }
        match verdict {
            Some(v) => Ok(v),
            None => {
                if self.strategy_done.iter().all(|&d| d) {
                    Ok(SynthStep::Closed { proven: false })
                } else {
                    // Workers exited without a verdict only when all were
                    // already done or stopped; treat as unproven closure.
                    Ok(SynthStep::Closed { proven: false })
                }
            }
        }
    }

    fn total_length(tuple: &[Program]) -> usize {
        tuple.iter().map(Program::len).sum()
    }

    fn lift_value_preserving(&self, tuple: &[Program]) -> Vec<Program> {
        tuple
            .iter()
            .map(|p| {
                let mut q = p.clone();
                q.width = self.big_w;
                q
            })
            .collect()
    }

    /// Exhaustively recheck an accepted witness when the input space is
    /// small enough; a failure here means the search accepted a wrong
    /// candidate and must not report success.
    fn defensive_check(&mut self, witnesses: &[Program]) -> Result<(), SolveError> {
        if self.instance.input_bit_count(self.big_w) > 16 {
            return Ok(());
        }
        let mut checker = Verifier::new(
            self.config.sat_backend.clone(),
            VerifyConfig { probe_quota: 0, exhaustive_bits: 16, capable_bits: 16, seed: 0 },
        );
        match checker.find_counterexample(self.instance, &self.body, witnesses, self.big_w, 0)? {
            VerifyOutcome::Valid { .. } => Ok(()),
            VerifyOutcome::Counterexample { values, .. } => Err(SolveError::Internal(format!(
                "accepted witness fails the exhaustive recheck on input {values:?}"
            ))),
            VerifyOutcome::Unknown { reason } => Err(SolveError::Internal(format!(
                "exhaustive recheck was inconclusive: {reason}"
            ))),
        }
    }

    fn finish(mut self, verdict: Verdict) -> Result<SolveResult, SolveError> {
        if let Verdict::Sat { witnesses } = &verdict {
            self.defensive_check(witnesses)?;
        }
        self.log.events.push(LogEvent::Verdict {
            verdict: verdict.name().to_string(),
            iterations: self.stats.iterations,
        });
        self.stats.final_length = self.l;
        self.stats.final_consts = self.c;
        self.stats.final_width = self.w;
        self.stats.total_ms = self.started.elapsed().as_millis();
        Ok(SolveResult { verdict, stats: self.stats, log: self.log })
    }

    fn run(mut self) -> Result<SolveResult, SolveError> {
        self.stats.widths.push(self.w);
        // Bodies without function symbols are a single universal check.
        if self.instance.functions.is_empty() {
            let verdict = match self.verify_at(&[], self.big_w)? {
                VerifyOutcome::Valid { .. } => Verdict::Sat { witnesses: vec![] },
                VerifyOutcome::Counterexample { .. } => Verdict::Unsat,
                VerifyOutcome::Unknown { reason } => Verdict::Unknown { reason },
            };
            if matches!(verdict, Verdict::Sat { .. }) {
                self.stats.minimal_solution_length = Some(0);
            }
            return self.finish(verdict);
        }
        loop {
            if self.out_of_time() {
                return self.finish(Verdict::Unknown { reason: "timeout".into() });
            }
            match self.synth()? {
                SynthStep::Timeout => {
                    return self.finish(Verdict::Unknown { reason: "timeout".into() });
                }
                SynthStep::Found(kind, tuple) => {
                    self.stats.iterations += 1;
                    self.stats.synth_wins.bump(kind);
                    self.log.events.push(LogEvent::Candidate {
                        strategy: kind.name(),
                        length: Self::total_length(&tuple),
                        w: self.w,
                    });
                    if let Some(v) = self.handle_candidate(tuple)? {
                        return self.finish(v);
                    }
                }
                SynthStep::Closed { proven } => {
                    if !proven {
                        self.incomplete = true;
                    }
                    if let Some(v) = self.advance_shape()? {
                        return self.finish(v);
                    }
                }
            }
        }
    }

    /// Full-width verification of a candidate and the follow-up moves.
    /// Returns a verdict when the walk ends here.
    fn handle_candidate(&mut self, tuple: Vec<Program>) -> Result<Option<Verdict>, SolveError> {
        let lifted = self.lift_value_preserving(&tuple);
        match self.verify_at(&lifted, self.big_w)? {
            VerifyOutcome::Valid { .. } => {
                self.stats.minimal_solution_length = Some(Self::total_length(&lifted));
                Ok(Some(Verdict::Sat { witnesses: lifted }))
            }
            VerifyOutcome::Unknown { reason } => Ok(Some(Verdict::Unknown {
                reason: format!("candidate cannot be verified at the full width: {reason}"),
            })),
            VerifyOutcome::Counterexample { values, .. } => {
                // A counterexample at the full width constrains synthesis at
                // the full width. When the candidate came from full-width
                // synthesis it was screened on this pool, so a repeat is an
                // internal inconsistency.
                self.store_cex(self.big_w, values.clone(), self.w == self.big_w)?;
                if self.row_refutes(&values)? {
                    self.stats.pointwise_refutations += 1;
                    return Ok(Some(Verdict::Unsat));
                }
                if self.w == self.big_w {
                    return Ok(None);
                }
                // The lift failed; test the candidate in its native width.
                match self.verify_at(&tuple, self.w)? {
                    VerifyOutcome::Counterexample { values, .. } => {
                        // Still refinable down here: grow this width's pool.
                        self.store_cex(self.w, values, true)?;
                        Ok(None)
                    }
                    VerifyOutcome::Unknown { reason } => Ok(Some(Verdict::Unknown {
                        reason: format!("candidate cannot be rechecked at width {}: {reason}", self.w),
                    })),
                    VerifyOutcome::Valid { .. } => {
                        // Correct at the working width but not at the full
                        // width: try lifting its constants.
                        self.stats.generalisation_attempts += 1;
                        let t = Instant::now();
                        let salt = self.next_salt();
                        let lifted = generalize_constants(
                            &mut self.verifier,
                            self.instance,
                            &self.body,
                            &tuple,
                            self.w,
                            self.big_w,
                            self.config.generalize_trials,
                            salt,
                        );
                        self.stats.verif_ms += t.elapsed().as_millis();
                        if let Some(witnesses) = lifted? {
                            self.stats.generalisation_successes += 1;
                            self.stats.minimal_solution_length =
                                Some(Self::total_length(&witnesses));
                            return Ok(Some(Verdict::Sat { witnesses }));
                        }
                        let from = self.w;
                        self.w += 1;
                        self.param_change("w", from.into(), self.w.into(), "constant generalisation failed");
                        // Short shapes were never searched at the widths
                        // above, so exhaustion up there is no longer a
                        // completeness proof.
                        self.incomplete = true;
                        self.stats.widths.push(self.w);
                        Ok(None)
                    }
                }
            }
        }
    }

    /// Move to the next (c, l) cell, escalating width or concluding at the
    /// stopping bound.
    fn advance_shape(&mut self) -> Result<Option<Verdict>, SolveError> {
        if self.c < self.l {
            let from = self.c;
            self.c += 1;
            self.param_change("c", from as u64, self.c as u64, "shape closed");
            return Ok(None);
        }
        let from = self.l;
        self.l += 1;
        self.c = 0;
        self.param_change("l", from as u64, self.l as u64, "constant budget closed");
        if let Some(cap) = self.config.max_length {
            if self.l > cap {
                return Ok(Some(Verdict::Unknown {
                    reason: format!("length cap {cap} reached before the stopping bound"),
                }));
            }
        }
        if self.l > self.stopping_bound(self.w) {
            if self.w < self.big_w {
                // The bound certifies exhaustion at this width only; jump to
                // the full width. Shapes shorter than the current length were
                // not searched up there, so fail verdicts are off the table.
                let from = self.w;
                self.w = self.big_w;
                self.param_change("w", from.into(), self.w.into(), "stopping bound reached below full width");
                self.incomplete = true;
                self.stats.widths.push(self.w);
                return Ok(None);
            }
            if self.incomplete {
                return Ok(Some(Verdict::Unknown {
                    reason: "search space closed without a full exhaustion proof".into(),
                }));
            }
            return Ok(Some(Verdict::Unsat));
        }
        Ok(None)
    }
}

fn body_uses_floats(body: &CompiledBody) -> bool {
    use crate::formula::Node;
    body.nodes()
        .iter()
        .any(|n| matches!(n, Node::Op { op, .. } if op.is_float()))
}

/// True when some function application takes another application among its
/// argument subtrees.
fn body_has_nested_apps(body: &BodyExpr) -> bool {
    let mut nested = false;
    body.visit(&mut |e| {
        if let BodyExpr::App { args, .. } = e {
            for arg in args {
                arg.visit(&mut |inner| {
                    nested |= matches!(inner, BodyExpr::App { .. });
                });
            }
        }
    });
    nested
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{
        BodyExpr, FirstOrderVar, FunctionSignature, Quantifier, Role, SOSFormula,
    };
    use crate::lang::Opcode;

    fn instance(
        funcs: Vec<(&str, usize)>,
        vars: usize,
        body: BodyExpr,
        w: u32,
    ) -> SynthesisInstance {
        SOSFormula {
            second_order: funcs
                .into_iter()
                .map(|(n, a)| FunctionSignature {
                    name: n.to_string(),
                    arity: a,
                    out_count: 1,
                    role: Role::Function,
                })
                .collect(),
            first_order: (0..vars)
                .map(|i| FirstOrderVar {
                    quantifier: Quantifier::Forall,
                    name: format!("x{i}"),
                    width: None,
                })
                .collect(),
            body,
            default_width: w,
        }
        .skolemize()
    }

    fn f_of_x_equals(expr: BodyExpr, w: u32) -> SynthesisInstance {
        instance(
            vec![("F", 1)],
            1,
            BodyExpr::op(
                Opcode::Eq,
                vec![BodyExpr::app("F", vec![BodyExpr::var("x0")]), expr],
            ),
            w,
        )
    }

    /// `F(x) = x` and `F(x) = x + 1` at once: every single input point
    /// already rules out all output values.
    fn contradiction(w: u32) -> SynthesisInstance {
        instance(
            vec![("F", 1)],
            1,
            BodyExpr::band(vec![
                BodyExpr::op(
                    Opcode::Eq,
                    vec![BodyExpr::app("F", vec![BodyExpr::var("x0")]), BodyExpr::var("x0")],
                ),
                BodyExpr::op(
                    Opcode::Eq,
                    vec![
                        BodyExpr::app("F", vec![BodyExpr::var("x0")]),
                        BodyExpr::op(Opcode::Add, vec![BodyExpr::var("x0"), BodyExpr::lit(1)]),
                    ],
                ),
            ]),
            w,
        )
    }

    /// `F(x) <u F(not x)`: each input point is satisfiable on its own, but
    /// the points x and `not x` demand opposite strict orderings, so no
    /// function exists. Unsatisfiability here is only reachable through
    /// exhaustion, never through a single-point refutation.
    fn cross_contradiction(w: u32) -> SynthesisInstance {
        instance(
            vec![("F", 1)],
            1,
            BodyExpr::op(
                Opcode::Lt,
                vec![
                    BodyExpr::app("F", vec![BodyExpr::var("x0")]),
                    BodyExpr::app(
                        "F",
                        vec![BodyExpr::op(Opcode::Not, vec![BodyExpr::var("x0")])],
                    ),
                ],
            ),
            w,
        )
    }

    #[test]
    fn finds_the_identity_function_at_length_one() {
        let inst = f_of_x_equals(BodyExpr::var("x0"), 8);
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict)
        };
        assert_eq!(witnesses.len(), 1);
        assert_eq!(witnesses[0].width, 8);
        assert_eq!(res.stats.minimal_solution_length, Some(1));
        for x in [0u64, 1, 77, 255] {
            assert_eq!(witnesses[0].exec(&[x]).unwrap(), vec![x]);
        }
        assert_eq!(res.stats.synth_wins.total(), res.stats.iterations);
    }

    #[test]
    fn sat_verdicts_survive_independent_exhaustive_rechecks() {
        let cases: Vec<SynthesisInstance> = vec![
            f_of_x_equals(BodyExpr::var("x0"), 6),
            f_of_x_equals(
                BodyExpr::op(Opcode::Add, vec![BodyExpr::var("x0"), BodyExpr::lit(1)]),
                6,
            ),
            f_of_x_equals(BodyExpr::lit(3), 6),
            instance(
                vec![("G", 2)],
                2,
                BodyExpr::op(
                    Opcode::Eq,
                    vec![
                        BodyExpr::app("G", vec![BodyExpr::var("x0"), BodyExpr::var("x1")]),
                        BodyExpr::op(Opcode::Max, vec![BodyExpr::var("x0"), BodyExpr::var("x1")]),
                    ],
                ),
                6,
            ),
        ];
        for inst in cases {
            let res = solve(&inst, &SolverConfig::default()).unwrap();
            let Verdict::Sat { witnesses } = &res.verdict else {
                panic!("expected sat, got {:?}", res.verdict)
            };
            // Independent recheck, bypassing the engine entirely.
            let body = CompiledBody::compile(&inst).unwrap();
            let mut ev = crate::formula::BodyEvaluator::new();
            let n = inst.input_bit_count(inst.default_width);
            for idx in 0..(1u64 << n) {
                let mut rest = idx;
                let values: Vec<u64> = inst
                    .universals
                    .iter()
                    .map(|u| {
                        let bits = u.width_at(inst.default_width);
                        let v = rest & crate::lang::width_mask(bits);
                        rest >>= bits;
                        v
                    })
                    .collect();
                assert!(
                    ev.evaluate(&body, witnesses, &values, inst.default_width).unwrap(),
                    "witness fails at {values:?}"
                );
            }
        }
    }

    #[test]
    fn minimality_matches_a_brute_force_reference() {
        // Clearing the lowest set bit takes two instructions; prove by
        // enumerating every canonical one-instruction program.
        let target = |x: u64| x & x.wrapping_sub(1);
        let w = 4u32;
        let inst = f_of_x_equals(
            BodyExpr::op(
                Opcode::And,
                vec![
                    BodyExpr::var("x0"),
                    BodyExpr::op(Opcode::Sub, vec![BodyExpr::var("x0"), BodyExpr::lit(1)]),
                ],
            ),
            w,
        );
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict)
        };
        assert_eq!(res.stats.minimal_solution_length, Some(2));
        for x in 0..16u64 {
            assert_eq!(witnesses[0].exec(&[x]).unwrap(), vec![target(x)]);
        }
        // Reference: no single-instruction canonical program matches.
        use crate::synth::explicit::EnumCursor;
        let body = CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        for c in 0..=1usize {
            let splits = shape_splits(&prog_syms, 1, c);
            let ctx = ShapeCtx {
                instance: &inst,
                body: &body,
                prog_syms: &prog_syms,
                value_syms: &value_syms,
                l: 1,
                c,
                w,
                splits: &splits,
                opcodes: &search_opcodes(false),
                inputs: &[],
            };
            let mut cursor = EnumCursor::new(&ctx);
            let mut fuel = u64::MAX;
            while let Ok(Some(tuple)) = cursor.next_tuple(&mut fuel) {
                let all = (0..16u64).all(|x| tuple[0].exec(&[x]).unwrap() == vec![target(x)]);
                assert!(!all, "found a length-1 program for a length-2 target: {tuple:?}");
            }
        }
    }

    #[test]
    fn pointwise_contradictions_are_unsat_immediately() {
        let inst = contradiction(8);
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Unsat);
        // The very first full-width counterexample proves that no output
        // value works at that point, so one candidate suffices.
        assert_eq!(res.stats.pointwise_refutations, 1);
        assert_eq!(res.stats.iterations, 1);
    }

    #[test]
    fn cross_point_contradictions_are_unsat_via_exhaustion() {
        let inst = cross_contradiction(1);
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Unsat);
        assert_eq!(res.stats.pointwise_refutations, 0);
        // Stopping bound at one input bit is 2: lengths 1 and 2 close, then
        // the walk concludes.
        assert_eq!(res.stats.final_length, 3);
        assert!(res.stats.iterations <= 16, "iterations: {}", res.stats.iterations);
    }

    #[test]
    fn a_length_cap_below_the_bound_degrades_to_unknown() {
        let inst = cross_contradiction(2);
        let cfg = SolverConfig { max_length: Some(2), ..SolverConfig::default() };
        let res = solve(&inst, &cfg).unwrap();
        match &res.verdict {
            Verdict::Unknown { reason } => assert!(reason.contains("length cap")),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn constant_generalisation_lifts_the_sign_bit() {
        // F(x) + F(x) == 0 with F(x) != 0 forces F to yield the sign bit at
        // every width: 8 at width 4, 128 at width 8. Value preservation
        // fails the full-width check, the sign-bit rule rescues it.
        let fx = BodyExpr::app("F", vec![BodyExpr::var("x0")]);
        let inst = instance(
            vec![("F", 1)],
            1,
            BodyExpr::band(vec![
                BodyExpr::op(
                    Opcode::Eq,
                    vec![
                        BodyExpr::op(Opcode::Add, vec![fx.clone(), fx.clone()]),
                        BodyExpr::lit(0),
                    ],
                ),
                BodyExpr::op(Opcode::Neq, vec![fx, BodyExpr::lit(0)]),
            ]),
            8,
        );
        let cfg = SolverConfig { initial_width: Some(4), ..SolverConfig::default() };
        let res = solve(&inst, &cfg).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict)
        };
        assert_eq!(res.stats.generalisation_successes, 1);
        for x in 0..=255u64 {
            let v = witnesses[0].exec(&[x]).unwrap()[0];
            assert_eq!((v + v) & 0xFF, 0, "input {x} gives {v}");
            assert_ne!(v, 0);
        }
    }

    #[test]
    fn timeouts_yield_unknown() {
        let inst = cross_contradiction(16);
        let cfg = SolverConfig {
            timeout: Some(Duration::from_millis(80)),
            ..SolverConfig::default()
        };
        let res = solve(&inst, &cfg).unwrap();
        match &res.verdict {
            Verdict::Unknown { reason } => assert_eq!(reason, "timeout"),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_runs_produce_identical_logs() {
        let inst = f_of_x_equals(
            BodyExpr::op(Opcode::Add, vec![BodyExpr::var("x0"), BodyExpr::var("x0")]),
            8,
        );
        let cfg = SolverConfig::default();
        let a = solve(&inst, &cfg).unwrap();
        let b = solve(&inst, &cfg).unwrap();
        assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
        assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn logged_lengths_never_decrease() {
        let inst = cross_contradiction(1);
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        let mut last = 0usize;
        let mut seen = 0;
        for e in &res.log.events {
            if let LogEvent::SynthStart { l, .. } = e {
                assert!(*l >= last, "length decreased from {last} to {l}");
                last = *l;
                seen += 1;
            }
        }
        assert!(seen >= 2);
    }

    #[test]
    fn gp_only_search_cannot_claim_unsat() {
        let inst = cross_contradiction(1);
        let cfg = SolverConfig {
            strategies: vec![StrategyKind::Gp],
            gp: GpParams { max_shape_generations: 60, ..GpParams::default() },
            ..SolverConfig::default()
        };
        let res = solve(&inst, &cfg).unwrap();
        match &res.verdict {
            Verdict::Unknown { reason } => assert!(reason.contains("exhaustion")),
            other => panic!("expected unknown, got {other:?}"),
        }
    }

    #[test]
    fn the_threaded_race_agrees_on_satisfiable_cases() {
        let inst = f_of_x_equals(BodyExpr::var("x0"), 8);
        let cfg = SolverConfig { deterministic: false, ..SolverConfig::default() };
        let res = solve(&inst, &cfg).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict)
        };
        assert_eq!(res.stats.minimal_solution_length, Some(1));
        for x in 0..=255u64 {
            assert_eq!(witnesses[0].exec(&[x]).unwrap(), vec![x]);
        }
    }

    #[test]
    fn value_symbols_solve_without_any_instructions() {
        // x & v == x for all 4-bit x forces v = 15.
        let inst = instance(
            vec![("v", 0)],
            1,
            BodyExpr::op(
                Opcode::Eq,
                vec![
                    BodyExpr::op(
                        Opcode::And,
                        vec![BodyExpr::var("x0"), BodyExpr::app("v", vec![])],
                    ),
                    BodyExpr::var("x0"),
                ],
            ),
            4,
        );
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict)
        };
        assert_eq!(witnesses[0].constants, vec![15]);
        assert_eq!(res.stats.minimal_solution_length, Some(0));
    }

    #[test]
    fn instances_without_functions_reduce_to_one_check() {
        let taut = instance(
            vec![],
            1,
            BodyExpr::op(Opcode::Eq, vec![BodyExpr::var("x0"), BodyExpr::var("x0")]),
            8,
        );
        let res = solve(&taut, &SolverConfig::default()).unwrap();
        assert!(matches!(res.verdict, Verdict::Sat { .. }));
        let falsum = instance(
            vec![],
            1,
            BodyExpr::op(Opcode::Neq, vec![BodyExpr::var("x0"), BodyExpr::var("x0")]),
            8,
        );
        let res = solve(&falsum, &SolverConfig::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Unsat);
    }

    #[test]
    fn strategy_win_counters_sum_to_decided_candidates() {
        let inst = f_of_x_equals(
            BodyExpr::op(Opcode::Mul, vec![BodyExpr::var("x0"), BodyExpr::lit(3)]),
            6,
        );
        let res = solve(&inst, &SolverConfig::default()).unwrap();
        assert!(matches!(res.verdict, Verdict::Sat { .. }));
        assert_eq!(res.stats.synth_wins.total(), res.stats.iterations);
        assert_eq!(
            res.stats.verif_sweep_decisions + res.stats.verif_symbolic_decisions
                >= res.stats.iterations,
            true
        );
    }
}
