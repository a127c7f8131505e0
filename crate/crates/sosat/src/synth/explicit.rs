//! Exhaustive enumeration of canonical candidates for one shape.
//!
//! The cursor walks, in a fixed deterministic order: budget splits, then
//! value-symbol tuples, then per-symbol canonical programs as a mixed-radix
//! odometer (rightmost symbol fastest). Constant tables are `γ`-element
//! subsets of a priority-ordered value pool, stored sorted ascending so every
//! program function has exactly one enumerated representative; instruction
//! positions yield only instructions that pass the canonical-form rules, and
//! assembled programs must reference every constant-table entry (a program
//! with an unused entry already appeared at a smaller constant count).
//!
//! When `2^w` exceeds the pool cap the pool degrades to a heuristic
//! shortlist: enumeration still runs but exhaustion no longer proves the
//! shape empty.

use super::{ShapeCtx, ShapeSplit, StepOutcome, Strategy, StrategyKind};
use crate::formula::BodyEvaluator;
use crate::lang::{
    instruction_is_canonical, width_mask, Instruction, Opcode, Operand, Program,
};

/// Largest `2^w` for which the constant/value pool covers the full range.
pub const FULL_POOL_CAP: u64 = 1 << 12;

/// The value pool at width `w`, in search-priority order, and whether it is
/// the full range. Priority: 0, 1, all-ones, the sign bit, then the remaining
/// values ascending. Above the cap: a fixed shortlist of structurally likely
/// values (small numbers, width-related values, alternating bit masks).
pub fn value_pool(w: u32) -> (Vec<u64>, bool) {
    let mask = width_mask(w);
    let mut pool = Vec::new();
    let push = |v: u64, pool: &mut Vec<u64>| {
        let v = v & mask;
        if !pool.contains(&v) {
            pool.push(v);
        }
    };
    push(0, &mut pool);
    push(1, &mut pool);
    push(mask, &mut pool);
    push(1 << (w - 1), &mut pool);
    if w as u64 <= FULL_POOL_CAP.trailing_zeros() as u64 {
        for v in 2..=mask {
            push(v, &mut pool);
        }
        (pool, true)
    } else {
        for v in 2..=16 {
            push(v, &mut pool);
        }
        for v in [
            u64::from(w) - 1,
            u64::from(w),
            255,
            256,
            0x5555_5555_5555_5555,
            0xAAAA_AAAA_AAAA_AAAA,
            0x3333_3333_3333_3333,
            0x0F0F_0F0F_0F0F_0F0F,
            0x00FF_00FF_00FF_00FF,
        ] {
            push(v, &mut pool);
        }
        (pool, false)
    }
}

/// Lexicographic k-combinations of indices into a pool of size n.
#[derive(Debug, Clone)]
struct ComboCursor {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    started: bool,
}

impl ComboCursor {
    fn new(n: usize, k: usize) -> Self {
        ComboCursor { n, k, indices: (0..k).collect(), started: false }
    }

    fn next(&mut self) -> Option<&[usize]> {
        if !self.started {
            self.started = true;
            if self.k > self.n {
                return None;
            }
            return Some(&self.indices);
        }
        if self.k == 0 {
            return None;
        }
        // Find the rightmost index that can still move up.
        let mut i = self.k;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if self.indices[i] < self.n - (self.k - i) {
                break;
            }
        }
        self.indices[i] += 1;
        for j in i + 1..self.k {
            self.indices[j] = self.indices[j - 1] + 1;
        }
        Some(&self.indices)
    }
}

/// Canonical instructions for one program position: all (opcode, operand
/// tuple) pairs over the position's operand domain that pass the
/// canonical-form rules for the current constant table.
#[derive(Debug, Clone)]
struct InstrCursor {
    op_idx: usize,
    digits: Vec<usize>,
    started: bool,
}

#[derive(Debug, Clone, Copy)]
struct PositionDomain {
    consts: usize,
    arity: usize,
    temps: usize,
}

impl PositionDomain {
    fn size(self) -> usize {
        self.consts + self.arity + self.temps
    }

    fn operand(self, idx: usize) -> Operand {
        if idx < self.consts {
            Operand::Const(idx)
        } else if idx < self.consts + self.arity {
            Operand::Input(idx - self.consts)
        } else {
            Operand::Temp(idx - self.consts - self.arity)
        }
    }
}

impl InstrCursor {
    fn new() -> Self {
        InstrCursor { op_idx: 0, digits: Vec::new(), started: false }
    }

    /// Advance to the next raw (opcode, operands) point; None when done.
    fn advance_raw(&mut self, opcodes: &[Opcode], domain: PositionDomain) -> Option<Instruction> {
        loop {
            if !self.started {
                self.started = true;
                self.op_idx = 0;
                if opcodes.is_empty() || domain.size() == 0 {
                    return None;
                }
                self.digits = vec![0; opcodes[0].arity()];
            } else {
                // Bump the operand odometer for the current opcode.
                let mut pos = self.digits.len();
                loop {
                    if pos == 0 {
                        self.op_idx += 1;
                        if self.op_idx >= opcodes.len() {
                            return None;
                        }
                        self.digits = vec![0; opcodes[self.op_idx].arity()];
                        break;
                    }
                    pos -= 1;
                    self.digits[pos] += 1;
                    if self.digits[pos] < domain.size() {
                        break;
                    }
                    self.digits[pos] = 0;
                }
            }
            let op = opcodes[self.op_idx];
            let operands: Vec<Operand> =
                self.digits.iter().map(|&d| domain.operand(d)).collect();
            return Some(Instruction::new(op, operands));
        }
    }

    /// Next instruction passing the canonical-form filter. Charges one fuel
    /// unit per raw point scanned; returns Err(()) when fuel runs out
    /// mid-scan (cursor stays resumable).
    fn next_canonical(
        &mut self,
        opcodes: &[Opcode],
        domain: PositionDomain,
        table: &[u64],
        w: u32,
        fuel: &mut u64,
    ) -> Result<Option<Instruction>, ()> {
        loop {
            if *fuel == 0 {
                return Err(());
            }
            *fuel -= 1;
            match self.advance_raw(opcodes, domain) {
                None => return Ok(None),
                Some(instr) => {
                    if instruction_is_canonical(&instr, table, w) {
                        return Ok(Some(instr));
                    }
                }
            }
        }
    }
}

/// Enumerates the canonical programs of one symbol at a fixed
/// (length, constant-count) budget.
#[derive(Debug, Clone)]
struct ProgEnum {
    arity: usize,
    out_count: usize,
    lambda: usize,
    gamma: usize,
    w: u32,
    combos: ComboCursor,
    table: Vec<u64>,
    positions: Vec<InstrCursor>,
    body: Vec<Instruction>,
    state: ProgEnumState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProgEnumState {
    /// Next call must load the first/next constant table.
    NeedTable,
    /// `body` holds a full candidate; next call advances the odometer.
    Loaded,
    /// Mid-initialisation: positions up to `usize` are loaded.
    Filling(usize),
    Done,
}

impl ProgEnum {
    fn new(arity: usize, out_count: usize, lambda: usize, gamma: usize, w: u32) -> Self {
        ProgEnum {
            arity,
            out_count,
            lambda,
            gamma,
            w,
            combos: ComboCursor::new(0, 0),
            table: Vec::new(),
            positions: Vec::new(),
            body: Vec::new(),
            state: ProgEnumState::NeedTable,
        }
    }

    fn reset(&mut self, pool_len: usize) {
        self.combos = ComboCursor::new(pool_len, self.gamma);
        self.state = ProgEnumState::NeedTable;
    }

    fn domain_at(&self, t: usize) -> PositionDomain {
        PositionDomain { consts: self.gamma, arity: self.arity, temps: t }
    }

    fn current_program(&self) -> Program {
        Program::new(self.arity, self.out_count, self.w, self.table.clone(), self.body.clone())
    }

    /// Every constant-table slot must be referenced by some operand;
    /// otherwise the same function already appeared at a smaller constant
    /// count and this point is a duplicate.
    fn all_consts_referenced(&self) -> bool {
        (0..self.gamma).all(|k| {
            self.body
                .iter()
                .any(|instr| instr.operands.contains(&Operand::Const(k)))
        })
    }

    /// Advance to the next canonical program. `Err(())` = out of fuel.
    fn next(&mut self, pool: &[u64], opcodes: &[Opcode], fuel: &mut u64) -> Result<Option<Program>, ()> {
        loop {
            match self.state {
                ProgEnumState::Done => return Ok(None),
                ProgEnumState::NeedTable => {
                    match self.combos.next() {
                        None => {
                            self.state = ProgEnumState::Done;
                            return Ok(None);
                        }
                        Some(indices) => {
                            let mut table: Vec<u64> =
                                indices.iter().map(|&i| pool[i]).collect();
                            table.sort_unstable();
                            self.table = table;
                            self.positions = (0..self.lambda).map(|_| InstrCursor::new()).collect();
                            self.body.clear();
                            self.state = ProgEnumState::Filling(0);
                        }
                    }
                }
                ProgEnumState::Filling(t) => {
                    let domain = self.domain_at(t);
                    let cursor = &mut self.positions[t];
                    match cursor.next_canonical(opcodes, domain, &self.table, self.w, fuel)? {
                        None => {
                            // This position has no canonical instruction at
                            // all: the whole table yields nothing.
                            if t == 0 {
                                self.state = ProgEnumState::NeedTable;
                            } else {
                                // Backtrack: advance the previous position.
                                self.body.truncate(t - 1);
                                self.positions[t] = InstrCursor::new();
                                self.state = ProgEnumState::Filling(t - 1);
                            }
                        }
                        Some(instr) => {
                            self.body.truncate(t);
                            self.body.push(instr);
                            if t + 1 == self.lambda {
                                self.state = ProgEnumState::Loaded;
                                if self.all_consts_referenced() {
                                    return Ok(Some(self.current_program()));
                                }
                            } else {
                                self.state = ProgEnumState::Filling(t + 1);
                            }
                        }
                    }
                }
                ProgEnumState::Loaded => {
                    // Advance the rightmost position; cascade on exhaustion.
                    self.state = ProgEnumState::Filling(self.lambda - 1);
                }
            }
        }
    }
}

/// Odometer over value-symbol assignments (each digit ranges over the pool).
#[derive(Debug, Clone)]
struct ValueOdometer {
    digits: Vec<usize>,
    started: bool,
}

impl ValueOdometer {
    fn new(count: usize) -> Self {
        ValueOdometer { digits: vec![0; count], started: false }
    }

    fn next(&mut self, pool_len: usize) -> Option<Vec<usize>> {
        if pool_len == 0 {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.digits.clone());
        }
        let mut i = self.digits.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            self.digits[i] += 1;
            if self.digits[i] < pool_len {
                break;
            }
            self.digits[i] = 0;
        }
        Some(self.digits.clone())
    }
}

/// Resumable cursor over every canonical candidate tuple of one shape.
pub struct EnumCursor {
    splits: Vec<ShapeSplit>,
    split_idx: usize,
    pool: Vec<u64>,
    pool_complete: bool,
    opcodes: Vec<Opcode>,
    w: u32,
    /// Function index and shape data, copied from the context.
    prog_syms: Vec<(usize, usize, usize)>, // (func, arity, out_count)
    value_syms: Vec<usize>,
    value_odo: ValueOdometer,
    values: Vec<u64>,
    progs: Vec<ProgEnum>,
    current: Vec<Option<Program>>,
    state: CursorState,
    function_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CursorState {
    NeedSplit,
    NeedValues,
    /// Programs 0..k are loaded; filling program k.
    FillProg(usize),
    Loaded,
    Done,
}

impl EnumCursor {
    pub fn new(ctx: &ShapeCtx<'_>) -> Self {
        let (pool, pool_complete) = value_pool(ctx.w);
        EnumCursor {
            splits: ctx.splits.to_vec(),
            split_idx: 0,
            pool,
            pool_complete,
            opcodes: ctx.opcodes.to_vec(),
            w: ctx.w,
            prog_syms: ctx
                .prog_syms
                .iter()
                .map(|s| (s.func, s.arity, s.out_count))
                .collect(),
            value_syms: ctx.value_syms.to_vec(),
            value_odo: ValueOdometer::new(ctx.value_syms.len()),
            values: Vec::new(),
            progs: Vec::new(),
            current: vec![None; ctx.instance.functions.len()],
            state: CursorState::NeedSplit,
            function_count: ctx.instance.functions.len(),
        }
    }

    /// Whether exhausting this cursor proves no canonical candidate of the
    /// shape exists.
    pub fn space_is_complete(&self) -> bool {
        self.pool_complete
    }

    /// Assemble the current candidate tuple, aligned to the instance's
    /// function order.
    fn assemble(&self) -> Vec<Program> {
        let mut out: Vec<Program> = Vec::with_capacity(self.function_count);
        for i in 0..self.function_count {
            out.push(self.current[i].clone().expect("tuple slot loaded"));
        }
        out
    }

    /// Advance to the next candidate tuple. `Err(())` = fuel exhausted.
    pub fn next_tuple(&mut self, fuel: &mut u64) -> Result<Option<Vec<Program>>, ()> {
        loop {
            if *fuel == 0 {
                return Err(());
            }
            match self.state {
                CursorState::Done => return Ok(None),
                CursorState::NeedSplit => {
                    *fuel -= 1;
                    if self.split_idx >= self.splits.len() {
                        self.state = CursorState::Done;
                        return Ok(None);
                    }
                    self.value_odo = ValueOdometer::new(self.value_syms.len());
                    self.state = CursorState::NeedValues;
                }
                CursorState::NeedValues => {
                    *fuel -= 1;
                    match self.value_odo.next(self.pool.len()) {
                        None => {
                            self.split_idx += 1;
                            self.state = CursorState::NeedSplit;
                        }
                        Some(digits) => {
                            self.values = digits.iter().map(|&d| self.pool[d]).collect();
                            for (slot, &func) in self.value_syms.iter().enumerate() {
                                self.current[func] =
                                    Some(Program::degenerate(0, self.w, vec![self.values[slot]]));
                            }
                            let split = &self.splits[self.split_idx];
                            self.progs = self
                                .prog_syms
                                .iter()
                                .enumerate()
                                .map(|(i, &(_, arity, out))| {
                                    let mut e = ProgEnum::new(
                                        arity,
                                        out,
                                        split.lengths[i],
                                        split.consts[i],
                                        self.w,
                                    );
                                    e.reset(self.pool.len());
                                    e
                                })
                                .collect();
                            if self.prog_syms.is_empty() {
                                self.state = CursorState::Loaded;
                                return Ok(Some(self.assemble()));
                            }
                            self.state = CursorState::FillProg(0);
                        }
                    }
                }
                CursorState::FillProg(k) => {
                    let func = self.prog_syms[k].0;
                    match self.progs[k].next(&self.pool, &self.opcodes, fuel)? {
                        None => {
                            if k == 0 {
                                self.state = CursorState::NeedValues;
                            } else {
                                self.progs[k].reset(self.pool.len());
                                self.state = CursorState::FillProg(k - 1);
                            }
                        }
                        Some(p) => {
                            self.current[func] = Some(p);
                            if k + 1 == self.prog_syms.len() {
                                self.state = CursorState::Loaded;
                                return Ok(Some(self.assemble()));
                            }
                            self.state = CursorState::FillProg(k + 1);
                        }
                    }
                }
                CursorState::Loaded => {
                    if self.prog_syms.is_empty() {
                        self.state = CursorState::NeedValues;
                    } else {
                        self.state = CursorState::FillProg(self.prog_syms.len() - 1);
                    }
                }
            }
        }
    }
}

/// The enumeration strategy: drives an [`EnumCursor`] and filters candidates
/// against the stored inputs with the interpreter.
pub struct ExplicitStrategy {
    cursor: Option<EnumCursor>,
    evaluator: BodyEvaluator,
    done: bool,
}

impl ExplicitStrategy {
    pub fn new() -> Self {
        ExplicitStrategy { cursor: None, evaluator: BodyEvaluator::new(), done: false }
    }
}

impl Default for ExplicitStrategy {
    fn default() -> Self {
        Self::new()
    }
}

impl Strategy for ExplicitStrategy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Explicit
    }

    fn begin_shape(&mut self, ctx: &ShapeCtx<'_>) {
        self.cursor = Some(EnumCursor::new(ctx));
        self.done = false;
    }

    fn step(&mut self, ctx: &ShapeCtx<'_>, budget: u64) -> StepOutcome {
        if self.done {
            let complete = self.cursor.as_ref().is_some_and(EnumCursor::space_is_complete);
            return StepOutcome::Exhausted { proves_empty: complete };
        }
        let cursor = self.cursor.as_mut().expect("begin_shape before step");
        let mut fuel = budget;
        loop {
            match cursor.next_tuple(&mut fuel) {
                Err(()) => return StepOutcome::Working,
                Ok(None) => {
                    self.done = true;
                    return StepOutcome::Exhausted { proves_empty: cursor.space_is_complete() };
                }
                Ok(Some(tuple)) => {
                    let mut all = true;
                    for input in ctx.inputs {
                        match self.evaluator.evaluate(ctx.body, &tuple, input, ctx.w) {
                            Ok(true) => {}
                            Ok(false) | Err(_) => {
                                all = false;
                                break;
                            }
                        }
                    }
                    if all {
                        return StepOutcome::Candidate(tuple);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{
        BodyExpr, FirstOrderVar, FunctionSignature, Quantifier, Role, SOSFormula,
    };
    use crate::lang::is_canonical;
    use crate::synth::{partition_symbols, shape_splits, search_opcodes};
    use std::collections::HashSet;

    fn simple_ctx_parts(w: u32, arity: usize) -> SOSFormula {
        SOSFormula {
            second_order: vec![FunctionSignature {
                name: "F".into(),
                arity,
                out_count: 1,
                role: Role::Function,
            }],
            first_order: (0..arity)
                .map(|i| FirstOrderVar {
                    quantifier: Quantifier::Forall,
                    name: format!("x{i}"),
                    width: None,
                })
                .collect(),
            body: BodyExpr::lit(1),
            default_width: w,
        }
    }

    /// Reference generator: every raw program point, filtered by validity,
    /// the canonical-form predicate, sorted distinct tables, and full table
    /// reference. This is the definition the cursor must reproduce.
    fn naive_programs(arity: usize, out: usize, lambda: usize, gamma: usize, w: u32) -> HashSet<Program> {
        let (pool, complete) = value_pool(w);
        assert!(complete);
        let opcodes = search_opcodes(false);
        let mut tables: Vec<Vec<u64>> = Vec::new();
        fn combos(pool: &[u64], k: usize, start: usize, acc: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if acc.len() == k {
                let mut t = acc.clone();
                t.sort_unstable();
                out.push(t);
                return;
            }
            for i in start..pool.len() {
                acc.push(pool[i]);
                combos(pool, k, i + 1, acc, out);
                acc.pop();
            }
        }
        combos(&pool, gamma, 0, &mut Vec::new(), &mut tables);
        let mut set = HashSet::new();
        for table in tables {
            // All instruction sequences of length lambda.
            let mut seqs: Vec<Vec<Instruction>> = vec![Vec::new()];
            for t in 0..lambda {
                let domain_size = gamma + arity + t;
                let mut next_seqs = Vec::new();
                for seq in &seqs {
                    for &op in &opcodes {
                        let ar = op.arity();
                        let mut digits = vec![0usize; ar];
                        loop {
                            let operands: Vec<Operand> = digits
                                .iter()
                                .map(|&d| {
                                    if d < gamma {
                                        Operand::Const(d)
                                    } else if d < gamma + arity {
                                        Operand::Input(d - gamma)
                                    } else {
                                        Operand::Temp(d - gamma - arity)
                                    }
                                })
                                .collect();
                            let mut s = seq.clone();
                            s.push(Instruction::new(op, operands));
                            next_seqs.push(s);
                            // Mixed-radix bump.
                            let mut i = digits.len();
                            loop {
                                if i == 0 {
                                    digits.clear();
                                    break;
                                }
                                i -= 1;
                                digits[i] += 1;
                                if digits[i] < domain_size {
                                    break;
                                }
                                digits[i] = 0;
                            }
                            if digits.is_empty() {
                                break;
                            }
                        }
                    }
                }
                seqs = next_seqs;
            }
            for body in seqs {
                let p = Program::new(arity, out, w, table.clone(), body);
                if p.validate().is_err() || !is_canonical(&p) {
                    continue;
                }
                let referenced = (0..gamma).all(|k| {
                    p.body.iter().any(|i| i.operands.contains(&Operand::Const(k)))
                });
                if referenced {
                    set.insert(p);
                }
            }
        }
        set
    }

    fn cursor_programs(arity: usize, out: usize, lambda: usize, gamma: usize, w: u32) -> Vec<Program> {
        let formula = simple_ctx_parts(w, arity);
        let inst = formula.skolemize();
        let body = crate::formula::CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        let splits = vec![ShapeSplit { lengths: vec![lambda], consts: vec![gamma] }];
        let opcodes = search_opcodes(false);
        let ctx = ShapeCtx {
            instance: &inst,
            body: &body,
            prog_syms: &prog_syms,
            value_syms: &value_syms,
            l: lambda,
            c: gamma,
            w,
            splits: &splits,
            opcodes: &opcodes,
            inputs: &[],
        };
        let _ = out;
        let mut cursor = EnumCursor::new(&ctx);
        let mut out_programs = Vec::new();
        loop {
            let mut fuel = u64::MAX;
            match cursor.next_tuple(&mut fuel).unwrap() {
                None => break,
                Some(tuple) => out_programs.push(tuple[0].clone()),
            }
        }
        out_programs
    }

    #[test]
    fn enumeration_matches_naive_generator_and_has_no_duplicates() {
        for (arity, lambda, gamma, w) in
            [(1, 1, 0, 2), (1, 1, 1, 2), (1, 2, 0, 2), (1, 2, 1, 1), (2, 1, 1, 2), (1, 1, 2, 2)]
        {
            let listed = cursor_programs(arity, 1, lambda, gamma, w);
            let as_set: HashSet<Program> = listed.iter().cloned().collect();
            assert_eq!(
                as_set.len(),
                listed.len(),
                "duplicates at arity={arity} l={lambda} c={gamma} w={w}"
            );
            let naive = naive_programs(arity, 1, lambda, gamma, w);
            assert_eq!(
                as_set, naive,
                "set mismatch at arity={arity} l={lambda} c={gamma} w={w}: cursor {} vs naive {}",
                as_set.len(),
                naive.len()
            );
        }
    }

    #[test]
    fn enumerated_programs_are_canonical_and_valid() {
        for p in cursor_programs(2, 1, 2, 1, 2) {
            assert!(p.validate().is_ok());
            assert!(is_canonical(&p));
        }
    }

    #[test]
    fn fuel_slicing_reproduces_the_unsliced_listing() {
        let full = cursor_programs(1, 1, 1, 1, 2);
        let formula = simple_ctx_parts(2, 1);
        let inst = formula.skolemize();
        let body = crate::formula::CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        let splits = vec![ShapeSplit { lengths: vec![1], consts: vec![1] }];
        let opcodes = search_opcodes(false);
        let ctx = ShapeCtx {
            instance: &inst,
            body: &body,
            prog_syms: &prog_syms,
            value_syms: &value_syms,
            l: 1,
            c: 1,
            w: 2,
            splits: &splits,
            opcodes: &opcodes,
            inputs: &[],
        };
        let mut cursor = EnumCursor::new(&ctx);
        let mut sliced = Vec::new();
        loop {
            let mut fuel = 3;
            match cursor.next_tuple(&mut fuel) {
                Err(()) => continue,
                Ok(None) => break,
                Ok(Some(tuple)) => sliced.push(tuple[0].clone()),
            }
        }
        assert_eq!(sliced, full);
    }

    #[test]
    fn value_pool_orders_priority_values_first() {
        let (pool, complete) = value_pool(4);
        assert!(complete);
        assert_eq!(&pool[..4], &[0, 1, 15, 8]);
        assert_eq!(pool.len(), 16);
        let mut sorted = pool.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 16);

        let (pool1, complete1) = value_pool(1);
        assert!(complete1);
        assert_eq!(pool1, vec![0, 1]);

        let (pool32, complete32) = value_pool(32);
        assert!(!complete32);
        assert!(pool32.contains(&0x5555_5555));
        assert!(pool32.contains(&31));
        assert!(pool32.contains(&0x8000_0000));
    }

    #[test]
    fn multi_symbol_tuples_cover_the_product_space() {
        // Two symbols, one split (1,1)/(0,0): tuple count = |P1| * |P2|.
        let formula = SOSFormula {
            second_order: vec![
                FunctionSignature { name: "F".into(), arity: 1, out_count: 1, role: Role::Function },
                FunctionSignature { name: "G".into(), arity: 1, out_count: 1, role: Role::Function },
            ],
            first_order: vec![FirstOrderVar {
                quantifier: Quantifier::Forall,
                name: "x".into(),
                width: None,
            }],
            body: BodyExpr::lit(1),
            default_width: 1,
        };
        let inst = formula.skolemize();
        let body = crate::formula::CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        let splits = shape_splits(&prog_syms, 2, 0);
        assert_eq!(splits.len(), 1); // lengths (1,1), consts (0,0)
        let opcodes = search_opcodes(false);
        let ctx = ShapeCtx {
            instance: &inst,
            body: &body,
            prog_syms: &prog_syms,
            value_syms: &value_syms,
            l: 2,
            c: 0,
            w: 1,
            splits: &splits,
            opcodes: &opcodes,
            inputs: &[],
        };
        let mut cursor = EnumCursor::new(&ctx);
        let mut n = 0usize;
        let mut firsts = HashSet::new();
        let mut seconds = HashSet::new();
        loop {
            let mut fuel = u64::MAX;
            match cursor.next_tuple(&mut fuel).unwrap() {
                None => break,
                Some(t) => {
                    n += 1;
                    firsts.insert(t[0].clone());
                    seconds.insert(t[1].clone());
                }
            }
        }
        assert_eq!(n, firsts.len() * seconds.len());
        let singles = cursor_programs(1, 1, 1, 0, 1);
        assert_eq!(firsts.len(), singles.len());
    }

    #[test]
    fn value_symbols_walk_the_pool_in_priority_order() {
        let formula = SOSFormula {
            second_order: vec![FunctionSignature {
                name: "v".into(),
                arity: 0,
                out_count: 1,
                role: Role::Function,
            }],
            first_order: vec![],
            body: BodyExpr::op(Opcode::Eq, vec![BodyExpr::app("v", vec![]), BodyExpr::lit(2)]),
            default_width: 2,
        };
        let inst = formula.skolemize();
        let body = crate::formula::CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        assert!(prog_syms.is_empty());
        let splits = shape_splits(&prog_syms, 1, 0);
        let opcodes = search_opcodes(false);
        let ctx = ShapeCtx {
            instance: &inst,
            body: &body,
            prog_syms: &prog_syms,
            value_syms: &value_syms,
            l: 1,
            c: 0,
            w: 2,
            splits: &splits,
            opcodes: &opcodes,
            inputs: &[],
        };
        let mut cursor = EnumCursor::new(&ctx);
        let mut seen = Vec::new();
        loop {
            let mut fuel = u64::MAX;
            match cursor.next_tuple(&mut fuel).unwrap() {
                None => break,
                Some(t) => seen.push(t[0].constants[0]),
            }
        }
        // Pool order at w=2: 0, 1, all-ones (3), sign bit (2).
        assert_eq!(seen, vec![0, 1, 3, 2]);
    }

    #[test]
    fn strategy_finds_the_constant_function_through_the_trait() {
        // F(x) = 2 at w=4 with one stored input; minimal form is
        // ite(x0, c0, c0) at l=1, c=1.
        let formula = SOSFormula {
            second_order: vec![FunctionSignature {
                name: "F".into(),
                arity: 1,
                out_count: 1,
                role: Role::Function,
            }],
            first_order: vec![FirstOrderVar {
                quantifier: Quantifier::Forall,
                name: "x".into(),
                width: None,
            }],
            body: BodyExpr::op(
                Opcode::Eq,
                vec![BodyExpr::app("F", vec![BodyExpr::var("x")]), BodyExpr::lit(2)],
            ),
            default_width: 4,
        };
        let inst = formula.skolemize();
        let body = crate::formula::CompiledBody::compile(&inst).unwrap();
        let (prog_syms, value_syms) = partition_symbols(&inst);
        let opcodes = search_opcodes(false);
        let inputs = vec![vec![5u64], vec![0u64]];
        let mut strat = ExplicitStrategy::new();
        // l=1, c=0: no candidate (cannot hit the constant 2 without a table).
        let splits0 = shape_splits(&prog_syms, 1, 0);
        let ctx0 = ShapeCtx {
            instance: &inst,
            body: &body,
            prog_syms: &prog_syms,
            value_syms: &value_syms,
            l: 1,
            c: 0,
            w: 4,
            splits: &splits0,
            opcodes: &opcodes,
            inputs: &inputs,
        };
        strat.begin_shape(&ctx0);
        let mut out = strat.step(&ctx0, u64::MAX);
        assert_eq!(out, StepOutcome::Exhausted { proves_empty: true });
        // l=1, c=1: ite(x0, 2, 2) works.
        let splits1 = shape_splits(&prog_syms, 1, 1);
        let ctx1 = ShapeCtx { splits: &splits1, c: 1, ..ctx0 };
        strat.begin_shape(&ctx1);
        out = strat.step(&ctx1, u64::MAX);
        match out {
            StepOutcome::Candidate(tuple) => {
                let p = &tuple[0];
                assert_eq!(p.len(), 1);
                assert_eq!(p.constants, vec![2]);
                let r = p.exec(&[9]).unwrap();
                assert_eq!(r, vec![2]);
            }
            other => panic!("expected candidate, got {other:?}"),
        }
    }
}
