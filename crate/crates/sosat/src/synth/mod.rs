//! Candidate synthesis: find programs for every function symbol that satisfy
//! the body on every stored input, at a fixed shape (total length `l`, total
//! constant count `c`, width `w`).
//!
//! Three strategies race: exhaustive enumeration, SAT-based search, and
//! genetic programming. Enumeration and SAT search are *complete* deciders
//! for a shape — when they report exhaustion, no canonical candidate of that
//! shape exists — while genetic programming only ever finds candidates.
//!
//! Symbols with arity 0 and one output are searched as plain word values
//! (their programs are the degenerate constant form, contributing no
//! instructions), outside the `l`/`c` budget. The budget is distributed over
//! the remaining symbols in every way that gives each symbol at least
//! `max(1, out_count)` instructions and at most one constant per instruction.

pub mod explicit;
pub mod gp;
pub mod symbolic;

use crate::formula::{CompiledBody, SynthesisInstance};
use crate::lang::{Opcode, Program};
use crate::sat::circuit::{Bit, Circuit, CircuitError, WordBits};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Explicit,
    Symbolic,
    Gp,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Explicit => "explicit",
            StrategyKind::Symbolic => "symbolic",
            StrategyKind::Gp => "gp",
        }
    }
}

/// Per-symbol synthesis target: which instance function, and its shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolShape {
    /// Index into the instance's function list.
    pub func: usize,
    pub arity: usize,
    pub out_count: usize,
}

/// One way of splitting the total (l, c) budget over the program symbols:
/// `lengths[i]` instructions and `consts[i]` table entries for symbol i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeSplit {
    pub lengths: Vec<usize>,
    pub consts: Vec<usize>,
}

/// Everything a strategy needs to search one shape: the instance, its
/// compiled body, the symbol partition, the budget, and the stored inputs
/// (each a full assignment of the universals, at width `w`).
#[derive(Debug)]
pub struct ShapeCtx<'a> {
    pub instance: &'a SynthesisInstance,
    pub body: &'a CompiledBody,
    /// Symbols searched as programs, with instruction budgets.
    pub prog_syms: &'a [SymbolShape],
    /// Symbols searched as single word values (arity 0, one output), by
    /// function index.
    pub value_syms: &'a [usize],
    pub l: usize,
    pub c: usize,
    pub w: u32,
    pub splits: &'a [ShapeSplit],
    pub opcodes: &'a [Opcode],
    pub inputs: &'a [Vec<u64>],
}

/// Outcome of one bounded strategy slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    /// A candidate satisfying the body on every stored input. Programs align
    /// with the instance's function order.
    Candidate(Vec<Program>),
    /// This strategy is done with the shape. `proves_empty` is true only when
    /// the strategy covered the entire canonical space of the shape, so that
    /// finishing without a candidate certifies none exists.
    Exhausted { proves_empty: bool },
    /// Budget spent, more work remains.
    Working,
    /// This strategy cannot work on this shape at all (encoding limits,
    /// capacity ceilings).
    Unavailable,
}

/// A resumable synthesis strategy. `begin_shape` retargets it; `step` runs a
/// bounded slice. Strategies own persistent state (cursors, populations)
/// across shapes.
pub trait Strategy: Send {
    fn kind(&self) -> StrategyKind;
    fn begin_shape(&mut self, ctx: &ShapeCtx<'_>);
    fn step(&mut self, ctx: &ShapeCtx<'_>, budget: u64) -> StepOutcome;
}

/// The opcode set searched at a given width: floats are never searched (they
/// exist for body semantics only), and the left-shift extension is gated.
pub fn search_opcodes(enable_shl: bool) -> Vec<Opcode> {
    Opcode::ALL
        .into_iter()
        .filter(|op| !op.is_float() && (enable_shl || !op.is_extension()))
        .collect()
}

/// Ordered compositions of `total` into `mins.len()` parts with
/// `part[i] >= mins[i]`.
pub fn compositions_with_min(total: usize, mins: &[usize]) -> Vec<Vec<usize>> {
    fn rec(total: usize, mins: &[usize], acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match mins.split_first() {
            None => {
                if total == 0 {
                    out.push(acc.clone());
                }
            }
            Some((&m, rest)) => {
                let rest_min: usize = rest.iter().sum();
                if total < m + rest_min {
                    return;
                }
                for part in m..=total - rest_min {
                    acc.push(part);
                    rec(total - part, rest, acc, out);
                    acc.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(total, mins, &mut Vec::new(), &mut out);
    out
}

/// Ordered compositions of `total` into parts with `part[i] <= maxs[i]`.
pub fn compositions_with_max(total: usize, maxs: &[usize]) -> Vec<Vec<usize>> {
    fn rec(total: usize, maxs: &[usize], acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match maxs.split_first() {
            None => {
                if total == 0 {
                    out.push(acc.clone());
                }
            }
            Some((&m, rest)) => {
                for part in 0..=m.min(total) {
                    acc.push(part);
                    rec(total - part, rest, acc, out);
                    acc.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    rec(total, maxs, &mut Vec::new(), &mut out);
    out
}

/// All budget splits for the given symbols at total (l, c).
pub fn shape_splits(prog_syms: &[SymbolShape], l: usize, c: usize) -> Vec<ShapeSplit> {
    if prog_syms.is_empty() {
        // Value-only instances ignore the instruction budget.
        return vec![ShapeSplit { lengths: vec![], consts: vec![] }];
    }
    let mins: Vec<usize> = prog_syms.iter().map(|s| s.out_count.max(1)).collect();
    let mut out = Vec::new();
    for lengths in compositions_with_min(l, &mins) {
        for consts in compositions_with_max(c, &lengths) {
            out.push(ShapeSplit { lengths: lengths.clone(), consts });
        }
    }
    out
}

/// Partition the instance's functions into value-searched and
/// program-searched symbols.
pub fn partition_symbols(instance: &SynthesisInstance) -> (Vec<SymbolShape>, Vec<usize>) {
    let mut progs = Vec::new();
    let mut values = Vec::new();
    for (i, f) in instance.functions.iter().enumerate() {
        if f.arity == 0 && f.out_count == 1 {
            values.push(i);
        } else {
            progs.push(SymbolShape { func: i, arity: f.arity, out_count: f.out_count });
        }
    }
    (progs, values)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("encoding exceeds the clause capacity ({clauses} > {cap})")]
    Capacity { clauses: usize, cap: usize },
    #[error("body width {required} does not match encoding width {active}")]
    Width { required: u32, active: u32 },
}

/// A node's circuit-level value: a full word, a truth bit, or a raw literal
/// that adapts to the width where it is used.
enum NodeVal {
    Word(WordBits),
    Truth(Bit),
    Raw(u64),
}

fn to_word(circuit: &mut Circuit, v: &NodeVal, width: u32) -> Result<WordBits, EncodeError> {
    Ok(match v {
        NodeVal::Word(wb) => {
            if wb.len() != width as usize {
                return Err(EncodeError::Width { required: wb.len() as u32, active: width });
            }
            wb.clone()
        }
        NodeVal::Truth(b) => circuit.bool_word(*b, width),
        NodeVal::Raw(raw) => circuit.word_const(raw & crate::lang::width_mask(width), width),
    })
}

fn truth_of(circuit: &mut Circuit, v: &NodeVal) -> Bit {
    match v {
        NodeVal::Word(wb) => circuit.or_reduce(wb),
        NodeVal::Truth(b) => *b,
        NodeVal::Raw(raw) => Bit::constant(*raw != 0),
    }
}

/// Encode the truth of a compiled body over circuit words. `var_words[i]`
/// supplies the word for universal i; `app` maps a function application
/// (function index, argument words at the active width) to its output words.
///
/// This is the circuit twin of `BodyEvaluator::evaluate`; the two are held
/// together by exhaustive agreement tests.
pub fn encode_body(
    circuit: &mut Circuit,
    body: &CompiledBody,
    var_words: &[WordBits],
    active_width: u32,
    app: &mut dyn FnMut(
        &mut Circuit,
        usize,
        &[WordBits],
    ) -> Result<Vec<WordBits>, EncodeError>,
) -> Result<Bit, EncodeError> {
    use crate::formula::{Node, NodeWidth};
    let nodes = body.nodes();
    let widths = body.node_widths();
    let mut vals: Vec<NodeVal> = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        let v = match node {
            Node::Lit(v) => NodeVal::Raw(*v),
            Node::Var(ix) => NodeVal::Word(var_words[*ix].clone()),
            Node::Op { op, args } => {
                let w = match widths[i] {
                    NodeWidth::Poly | NodeWidth::Active => active_width,
                    NodeWidth::Fixed(d) | NodeWidth::Pinned(d) => d,
                };
                let mut arg_words = Vec::with_capacity(args.len());
                for &a in args {
                    let word = to_word(circuit, &vals[a as usize], w)?;
                    arg_words.push(word);
                }
                NodeVal::Word(circuit.apply_op(*op, &arg_words).map_err(CircuitError::from)?)
            }
            Node::Bool { conn, args } => {
                use crate::formula::Connective;
                let bits: Vec<Bit> =
                    args.iter().map(|&a| truth_of(circuit, &vals[a as usize])).collect();
                let b = match conn {
                    Connective::And => circuit.and_many(&bits),
                    Connective::Or => circuit.or_many(&bits),
                    Connective::Not => crate::sat::circuit::not(bits[0]),
                    Connective::Implies => {
                        let na = crate::sat::circuit::not(bits[0]);
                        circuit.or(na, bits[1])
                    }
                    Connective::Iff => circuit.iff(bits[0], bits[1]),
                };
                NodeVal::Truth(b)
            }
            Node::App { func, proj, args, .. } => {
                let mut arg_words = Vec::with_capacity(args.len());
                for &a in args {
                    let word = to_word(circuit, &vals[a as usize], active_width)?;
                    arg_words.push(word);
                }
                let outs = app(circuit, *func, &arg_words)?;
                NodeVal::Word(outs[*proj].clone())
            }
        };
        vals.push(v);
    }
    Ok(truth_of(circuit, &vals[body.root_index()]))
}

/// Encode a fixed program applied to symbolic argument words: the circuit
/// image of the interpreter on that program.
pub fn encode_program(
    circuit: &mut Circuit,
    program: &Program,
    args: &[WordBits],
) -> Result<Vec<WordBits>, EncodeError> {
    use crate::lang::Operand;
    let w = program.width;
    debug_assert_eq!(args.len(), program.arity);
    let consts: Vec<WordBits> =
        program.constants.iter().map(|&v| circuit.word_const(v, w)).collect();
    if program.body.is_empty() {
        return Ok(consts[..program.out_count].to_vec());
    }
    let mut temps: Vec<WordBits> = Vec::with_capacity(program.body.len());
    for instr in &program.body {
        let operand_words: Vec<WordBits> = instr
            .operands
            .iter()
            .map(|o| match o {
                Operand::Input(i) => args[*i].clone(),
                Operand::Temp(t) => temps[*t].clone(),
                Operand::Const(k) => consts[*k].clone(),
            })
            .collect();
        let out = circuit.apply_op(instr.opcode, &operand_words).map_err(CircuitError::from)?;
        temps.push(out);
    }
    Ok(temps[temps.len() - program.out_count..].to_vec())
}
