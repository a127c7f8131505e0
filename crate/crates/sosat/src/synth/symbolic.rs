//! SAT-based candidate search: encode "some canonical candidate tuple of
//! this shape satisfies the body on every stored input" as CNF and hand it
//! to a SAT backend.
//!
//! Each program symbol gets a *skeleton*: one-hot opcode selectors per
//! instruction, binary operand selectors over the position's operand domain
//! (constants, then inputs, then earlier temps — index order equals the
//! canonical operand rank order), and free constant-table words. Clauses
//! mirror the canonical-form rules exactly: no all-constant operand tuples,
//! non-decreasing operands for commutative opcodes, the nop list, a strictly
//! ascending constant table, and every table entry referenced. Value symbols
//! are free words. The body is asserted once per stored input by
//! instantiating every skeleton at its application sites.
//!
//! A satisfying model is decoded back into programs and re-executed with the
//! interpreter on every stored input; any disagreement is reported as a
//! decode mismatch rather than silently accepted — the SAT route and the
//! interpreter route must agree or the run aborts.

use super::{
    encode_body, EncodeError, ShapeCtx, ShapeSplit, StepOutcome, Strategy, StrategyKind,
};
use crate::formula::BodyEvaluator;
use crate::lang::{width_mask, Instruction, Opcode, Operand, Program};
use crate::sat::circuit::{not, Bit, Circuit, WordBits};
use crate::sat::{Model, SatBackend, SatError, SatOutcome};

/// Default ceiling on encoded clauses; larger encodings are declined.
pub const DEFAULT_CLAUSE_CAP: usize = 4_000_000;

/// Binary selector width for a domain of `n` choices.
fn sel_bits(n: usize) -> usize {
    let mut bits = 0;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

/// Mux tree: pick `words[value(sel)]`. Callers constrain `sel` to the domain.
fn select_word(circuit: &mut Circuit, sel: &[Bit], words: &[WordBits]) -> WordBits {
    debug_assert!(!words.is_empty());
    let mut layer: Vec<WordBits> = words.to_vec();
    for &bit in sel {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        let mut i = 0;
        while i < layer.len() {
            if i + 1 < layer.len() {
                next.push(circuit.mux_word(bit, &layer[i + 1], &layer[i]));
            } else {
                next.push(layer[i].clone());
            }
            i += 2;
        }
        layer = next;
    }
    layer.into_iter().next().unwrap()
}

/// One program symbol's searched structure.
struct Skeleton {
    func: usize,
    arity: usize,
    out_count: usize,
    lambda: usize,
    gamma: usize,
    consts: Vec<WordBits>,
    /// `opcode[t][o]`: instruction t uses `opcodes[o]`.
    opcode: Vec<Vec<Bit>>,
    /// `sel[t][p]`: binary selector for operand position p of instruction t.
    sel: Vec<Vec<WordBits>>,
}

impl Skeleton {
    fn domain_size(&self, t: usize) -> usize {
        self.gamma + self.arity + t
    }

    /// Instantiate the skeleton's semantics on argument words, returning the
    /// output words (the last `out_count` temps).
    fn instantiate(
        &self,
        circuit: &mut Circuit,
        opcodes: &[Opcode],
        args: &[WordBits],
        w: u32,
    ) -> Result<Vec<WordBits>, EncodeError> {
        debug_assert_eq!(args.len(), self.arity);
        let mut temps: Vec<WordBits> = Vec::with_capacity(self.lambda);
        for t in 0..self.lambda {
            let mut domain: Vec<WordBits> = Vec::with_capacity(self.domain_size(t));
            domain.extend(self.consts.iter().cloned());
            domain.extend(args.iter().cloned());
            domain.extend(temps.iter().cloned());
            let operand_words: Vec<WordBits> = (0..3)
                .map(|p| select_word(circuit, &self.sel[t][p], &domain))
                .collect();
            // Result = one-hot combination of every opcode's result.
            let mut per_bit: Vec<Vec<Bit>> = vec![Vec::with_capacity(opcodes.len()); w as usize];
            for (o, &op) in opcodes.iter().enumerate() {
                let r = circuit
                    .apply_op(op, &operand_words[..op.arity()])
                    .map_err(crate::sat::circuit::CircuitError::from)?;
                for (j, &bit) in r.iter().enumerate() {
                    let gated = circuit.and(self.opcode[t][o], bit);
                    per_bit[j].push(gated);
                }
            }
            let out: WordBits = per_bit.iter().map(|bits| circuit.or_many(bits)).collect();
            temps.push(out);
        }
        Ok(temps[self.lambda - self.out_count..].to_vec())
    }
}

/// Build the skeletons and all structural/canonical-form clauses for one
/// split. Returns the skeletons and the value-symbol words.
fn build_skeletons(
    circuit: &mut Circuit,
    ctx: &ShapeCtx<'_>,
    split: &ShapeSplit,
) -> (Vec<Skeleton>, Vec<(usize, WordBits)>) {
    let w = ctx.w;
    let ops = ctx.opcodes;
    let mut skeletons = Vec::with_capacity(ctx.prog_syms.len());
    for (i, sym) in ctx.prog_syms.iter().enumerate() {
        let lambda = split.lengths[i];
        let gamma = split.consts[i];
        let consts: Vec<WordBits> = (0..gamma).map(|_| circuit.fresh_word(w)).collect();
        // Strictly ascending table: sorted and distinct in one constraint.
        for k in 1..gamma {
            let lt = circuit.ult(&consts[k - 1], &consts[k]);
            circuit.assert_bit(lt);
        }
        let mut opcode = Vec::with_capacity(lambda);
        let mut sel = Vec::with_capacity(lambda);
        for t in 0..lambda {
            let onehot: Vec<Bit> = (0..ops.len()).map(|_| Bit::Lit(circuit.cnf.fresh_var())).collect();
            // Exactly one opcode.
            let lits: Vec<i32> = onehot
                .iter()
                .map(|b| match b {
                    Bit::Lit(l) => *l,
                    _ => unreachable!(),
                })
                .collect();
            circuit.cnf.add_clause(&lits);
            for a in 0..lits.len() {
                for b in a + 1..lits.len() {
                    circuit.cnf.add_clause(&[-lits[a], -lits[b]]);
                }
            }
            let d = gamma + sym.arity + t;
            let bits = sel_bits(d);
            let mut position_sels = Vec::with_capacity(3);
            for p in 0..3 {
                let s = circuit.fresh_word(bits as u32);
                // Domain range: sel < d (skip when d fills the bit range).
                if d < (1usize << bits) {
                    let bound = circuit.word_const(d as u64, bits as u32);
                    let ok = circuit.ult(&s, &bound);
                    circuit.assert_bit(ok);
                }
                // Positions beyond an opcode's arity are pinned to zero.
                for (o, &op) in ops.iter().enumerate() {
                    if op.arity() <= p {
                        for &bbit in &s {
                            let Bit::Lit(bl) = bbit else { continue };
                            circuit.cnf.add_clause(&[-lits[o], -bl]);
                        }
                    }
                }
                position_sels.push(s);
            }
            sel.push(position_sels);
            opcode.push(onehot);
        }
        let skeleton = Skeleton {
            func: sym.func,
            arity: sym.arity,
            out_count: sym.out_count,
            lambda,
            gamma,
            consts,
            opcode,
            sel,
        };
        add_canonicality_clauses(circuit, &skeleton, ops, w);
        skeletons.push(skeleton);
    }
    let value_words: Vec<(usize, WordBits)> = ctx
        .value_syms
        .iter()
        .map(|&func| (func, circuit.fresh_word(w)))
        .collect();
    (skeletons, value_words)
}

/// The canonical-form rules as clauses, mirroring the interpreter-side
/// instruction predicate rule for rule.
fn add_canonicality_clauses(circuit: &mut Circuit, sk: &Skeleton, ops: &[Opcode], w: u32) {
    // Per-constant value predicates.
    let zero = circuit.word_const(0, w);
    let one = circuit.word_const(1, w);
    let all_ones = circuit.word_const(width_mask(w), w);
    let is0: Vec<Bit> = sk.consts.iter().map(|c| circuit.word_eq(c, &zero)).collect();
    let is1: Vec<Bit> = sk.consts.iter().map(|c| circuit.word_eq(c, &one)).collect();
    let isall: Vec<Bit> = sk.consts.iter().map(|c| circuit.word_eq(c, &all_ones)).collect();

    // Reference indicators, filled instruction by instruction.
    let mut referenced: Vec<Vec<Bit>> = vec![Vec::new(); sk.gamma];

    for t in 0..sk.lambda {
        let bits = sk.sel[t][0].len();
        // With constants present the domain has >= 2 entries, so bits >= 1.
        let gamma_bound = (sk.gamma > 0)
            .then(|| circuit.word_const(sk.gamma as u64, bits as u32));
        // is_const[p]: position p selects a constant-table entry.
        let is_const: Vec<Bit> = (0..3)
            .map(|p| match &gamma_bound {
                None => Bit::False,
                Some(gb) => circuit.ult(&sk.sel[t][p], gb),
            })
            .collect();
        // sel_eq_const[p][k]: position p selects table entry k.
        let sel_eq_const: Vec<Vec<Bit>> = (0..3)
            .map(|p| {
                (0..sk.gamma)
                    .map(|k| {
                        let kw = circuit.word_const(k as u64, bits as u32);
                        circuit.word_eq(&sk.sel[t][p], &kw)
                    })
                    .collect()
            })
            .collect();
        let sel01_eq = circuit.word_eq(&sk.sel[t][0], &sk.sel[t][1]);
        let sel01_ordered = {
            let gt = circuit.ult(&sk.sel[t][1], &sk.sel[t][0]);
            not(gt)
        };

        for (o, &op) in ops.iter().enumerate() {
            let sel_op = sk.opcode[t][o];
            let ar = op.arity();
            // No all-constant operand tuple.
            let all_const = circuit.and_many(&is_const[..ar]);
            let bad = circuit.and(sel_op, all_const);
            circuit.assert_bit(not(bad));
            // Commutative operand ordering (domain index = rank order).
            if op.is_commutative() {
                let na = not(sel01_ordered);
                let bad = circuit.and(sel_op, na);
                circuit.assert_bit(not(bad));
            }
            // Nop list.
            let forbid = |circuit: &mut Circuit, p: usize, value_pred: &[Bit]| {
                for k in 0..sk.gamma {
                    let hit = circuit.and(sel_eq_const[p][k], value_pred[k]);
                    let bad = circuit.and(sel_op, hit);
                    circuit.assert_bit(not(bad));
                }
            };
            match op {
                Opcode::Add | Opcode::Or | Opcode::Xor => {
                    forbid(circuit, 0, &is0);
                    forbid(circuit, 1, &is0);
                }
                Opcode::Sub => forbid(circuit, 1, &is0),
                Opcode::Mul => {
                    forbid(circuit, 0, &is1);
                    forbid(circuit, 1, &is1);
                }
                Opcode::Div => forbid(circuit, 1, &is1),
                Opcode::And => {
                    forbid(circuit, 0, &isall);
                    forbid(circuit, 1, &isall);
                }
                Opcode::Ite => {
                    let bad = circuit.and(sel_op, is_const[0]);
                    circuit.assert_bit(not(bad));
                }
                _ => {}
            }
            if matches!(op, Opcode::And | Opcode::Or) {
                let bad = circuit.and(sel_op, sel01_eq);
                circuit.assert_bit(not(bad));
            }
            // Accumulate table references from used positions.
            for p in 0..ar {
                for (k, refs) in referenced.iter_mut().enumerate() {
                    let hit = circuit.and(sel_op, sel_eq_const[p][k]);
                    refs.push(hit);
                }
            }
        }
    }
    // Every table entry referenced somewhere.
    for refs in &referenced {
        let any = circuit.or_many(refs);
        circuit.assert_bit(any);
    }
}

/// Decode one skeleton from a model.
fn decode_skeleton(model: &Model, sk: &Skeleton, ops: &[Opcode], w: u32) -> Program {
    let constants: Vec<u64> = sk.consts.iter().map(|c| Circuit::word_value(model, c)).collect();
    let mut body = Vec::with_capacity(sk.lambda);
    for t in 0..sk.lambda {
        let o = sk.opcode[t]
            .iter()
            .position(|b| match b {
                Bit::Lit(l) => model.value(*l),
                Bit::True => true,
                Bit::False => false,
            })
            .expect("exactly-one opcode clause");
        let op = ops[o];
        let operands: Vec<Operand> = (0..op.arity())
            .map(|p| {
                let idx = Circuit::word_value(model, &sk.sel[t][p]) as usize;
                if idx < sk.gamma {
                    Operand::Const(idx)
                } else if idx < sk.gamma + sk.arity {
                    Operand::Input(idx - sk.gamma)
                } else {
                    Operand::Temp(idx - sk.gamma - sk.arity)
                }
            })
            .collect();
        body.push(Instruction::new(op, operands));
    }
    Program::new(sk.arity, sk.out_count, w, constants, body)
}

/// Why a decoded model was rejected. Any occurrence is an internal
/// encoder/interpreter disagreement and must abort the run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeMismatch {
    pub detail: String,
}

pub struct SymbolicStrategy {
    backend: SatBackend,
    clause_cap: usize,
    split_idx: usize,
    /// Pool size the current scan position is valid for. Encodings bake the
    /// stored inputs in as constants, so a split whose model was later
    /// refuted (growing the pool) may hold further models and must be
    /// re-solved; splits proven unsatisfiable stay closed, since added rows
    /// only constrain them further.
    seen_rows: usize,
    /// Splits settled for good within this shape: proven empty, or failed
    /// on capacity (a grown pool only enlarges the encoding).
    closed_splits: Vec<bool>,
    /// Some split could not be decided (capacity, encoding limits).
    restricted: bool,
    done: bool,
    evaluator: BodyEvaluator,
    /// Set when decode disagrees with the interpreter: a hard internal error
    /// that the driver must surface.
    pub mismatch: Option<DecodeMismatch>,
}

impl SymbolicStrategy {
    pub fn new(backend: SatBackend) -> Self {
        SymbolicStrategy {
            backend,
            clause_cap: DEFAULT_CLAUSE_CAP,
            split_idx: 0,
            seen_rows: 0,
            closed_splits: Vec::new(),
            restricted: false,
            done: false,
            evaluator: BodyEvaluator::new(),
            mismatch: None,
        }
    }

    pub fn with_clause_cap(mut self, cap: usize) -> Self {
        self.clause_cap = cap;
        self
    }

    /// Encode one split and solve it. Ok(None) = unsatisfiable.
    fn solve_split(
        &mut self,
        ctx: &ShapeCtx<'_>,
        split: &ShapeSplit,
    ) -> Result<Option<Vec<Program>>, SplitFailure> {
        let mut circuit = Circuit::new();
        let (skeletons, value_words) = build_skeletons(&mut circuit, ctx, split);
        for input in ctx.inputs {
            let var_words: Vec<WordBits> = ctx
                .instance
                .universals
                .iter()
                .zip(input)
                .map(|(u, &v)| circuit.word_const(v, u.width_at(ctx.w)))
                .collect();
            let mut app = |c: &mut Circuit,
                           func: usize,
                           args: &[WordBits]|
             -> Result<Vec<WordBits>, EncodeError> {
                if let Some((_, word)) = value_words.iter().find(|(f, _)| *f == func) {
                    return Ok(vec![word.clone()]);
                }
                let sk = skeletons
                    .iter()
                    .find(|s| s.func == func)
                    .expect("every function is a skeleton or a value word");
                sk.instantiate(c, ctx.opcodes, args, ctx.w)
            };
            let truth = encode_body(&mut circuit, ctx.body, &var_words, ctx.w, &mut app)
                .map_err(SplitFailure::Encode)?;
            circuit.assert_bit(truth);
            if circuit.cnf.clause_count() > self.clause_cap {
                return Err(SplitFailure::Capacity(circuit.cnf.clause_count()));
            }
        }
        if circuit.cnf.clause_count() > self.clause_cap {
            return Err(SplitFailure::Capacity(circuit.cnf.clause_count()));
        }
        match self.backend.solve(&circuit.cnf).map_err(SplitFailure::Sat)? {
            SatOutcome::Unsat => Ok(None),
            SatOutcome::Sat(model) => {
                let mut tuple: Vec<Option<Program>> = vec![None; ctx.instance.functions.len()];
                for sk in &skeletons {
                    let p = decode_skeleton(&model, sk, ctx.opcodes, ctx.w);
                    tuple[sk.func] = Some(p);
                }
                for (func, word) in &value_words {
                    let v = Circuit::word_value(&model, word);
                    tuple[*func] = Some(Program::degenerate(0, ctx.w, vec![v]));
                }
                let tuple: Vec<Program> =
                    tuple.into_iter().map(|p| p.expect("every function decoded")).collect();
                // Decoded programs must be canonical, valid, and actually
                // satisfy the body on every stored input per the interpreter.
                for p in &tuple {
                    if let Err(e) = p.validate() {
                        return Err(SplitFailure::Mismatch(DecodeMismatch {
                            detail: format!("decoded program fails validation: {e}"),
                        }));
                    }
                    if !crate::lang::is_canonical(p) {
                        return Err(SplitFailure::Mismatch(DecodeMismatch {
                            detail: "decoded program is not canonical".to_string(),
                        }));
                    }
                }
                for input in ctx.inputs {
                    match self.evaluator.evaluate(ctx.body, &tuple, input, ctx.w) {
                        Ok(true) => {}
                        Ok(false) => {
                            return Err(SplitFailure::Mismatch(DecodeMismatch {
                                detail: format!(
                                    "decoded candidate fails stored input {input:?} under the interpreter"
                                ),
                            }));
                        }
                        Err(e) => {
                            return Err(SplitFailure::Mismatch(DecodeMismatch {
                                detail: format!("decoded candidate cannot be evaluated: {e}"),
                            }));
                        }
                    }
                }
                Ok(Some(tuple))
            }
        }
    }
}

/// Why a split could not be decided. The payloads exist for diagnostics via
/// `Debug`; only `Mismatch` changes control flow beyond "mark restricted".
#[derive(Debug)]
#[allow(dead_code)]
enum SplitFailure {
    Encode(EncodeError),
    Capacity(usize),
    Sat(SatError),
    Mismatch(DecodeMismatch),
}

impl Strategy for SymbolicStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Symbolic
    }

    fn begin_shape(&mut self, ctx: &ShapeCtx<'_>) {
        self.split_idx = 0;
        self.seen_rows = ctx.inputs.len();
        self.closed_splits = vec![false; ctx.splits.len()];
        self.restricted = false;
        self.done = false;
    }

    fn step(&mut self, ctx: &ShapeCtx<'_>, budget: u64) -> StepOutcome {
        if self.mismatch.is_some() {
            return StepOutcome::Unavailable;
        }
        if ctx.inputs.len() != self.seen_rows {
            // The pool grew since the last scan: any split that produced a
            // now-refuted model may hold other models, so rescan everything
            // not settled for good.
            self.seen_rows = ctx.inputs.len();
            self.split_idx = 0;
            self.done = false;
        }
        if self.done {
            return StepOutcome::Exhausted { proves_empty: !self.restricted };
        }
        let mut solved = 0;
        while self.split_idx < ctx.splits.len() {
            if self.closed_splits[self.split_idx] {
                self.split_idx += 1;
                continue;
            }
            if solved >= budget {
                return StepOutcome::Working;
            }
            let split = ctx.splits[self.split_idx].clone();
            let idx = self.split_idx;
            self.split_idx += 1;
            solved += 1;
            match self.solve_split(ctx, &split) {
                Ok(Some(tuple)) => return StepOutcome::Candidate(tuple),
                Ok(None) => self.closed_splits[idx] = true,
                Err(SplitFailure::Mismatch(m)) => {
                    self.mismatch = Some(m);
                    return StepOutcome::Unavailable;
                }
                Err(SplitFailure::Encode(_)) => {
                    // Body not encodable (e.g. float operations): this
                    // strategy cannot work on the instance at all.
                    self.done = true;
                    return StepOutcome::Unavailable;
                }
                Err(SplitFailure::Capacity(_)) | Err(SplitFailure::Sat(_)) => {
                    self.restricted = true;
                    self.closed_splits[idx] = true;
                }
            }
        }
        self.done = true;
        StepOutcome::Exhausted { proves_empty: !self.restricted }
    }
}
