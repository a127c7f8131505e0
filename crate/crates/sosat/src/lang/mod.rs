//! The loop-free program language used for synthesised witnesses.
//!
//! A program is a straight-line SSA sequence over fixed-width words: each
//! instruction applies one opcode to operands drawn from the program inputs,
//! earlier instruction results, and a table of literal constants. The last
//! `out_count` instruction results are the program outputs. A program with an
//! empty body is the degenerate constant form: its outputs are read directly
//! from the constant table.

mod canon;
mod exec;
mod text;

pub use canon::{canonicalize, instruction_is_canonical, is_canonical};
pub use exec::{eval_instruction, eval_op, instr};
pub use text::{parse_program, pretty_print};

use thiserror::Error;

pub const MIN_WIDTH: u32 = 1;
pub const MAX_WIDTH: u32 = 64;
/// Floating-point opcodes are defined only at this width (IEEE-754 binary32).
pub const FLOAT_WIDTH: u32 = 32;

/// All-ones bitmask for a word width.
#[inline]
pub fn width_mask(width: u32) -> u64 {
    debug_assert!((MIN_WIDTH..=MAX_WIDTH).contains(&width));
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Sign-extend the low `width` bits of `value` to a full i64.
#[inline]
pub fn sign_extend(value: u64, width: u32) -> i64 {
    let shift = 64 - width;
    ((value << shift) as i64) >> shift
}

/// A fixed-width machine word. `value` always fits in `width` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word {
    pub value: u64,
    pub width: u32,
}

impl Word {
    pub fn new(value: u64, width: u32) -> Self {
        Word { value: value & width_mask(width), width }
    }

    /// Word truth: nonzero is true.
    pub fn is_true(self) -> bool {
        self.value != 0
    }

    pub fn to_signed(self) -> i64 {
        sign_extend(self.value, self.width)
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}w{}", self.value, self.width)
    }
}

/// Instruction opcodes. `Shl` is an extension outside the core set and is
/// offered to the search only when explicitly enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Mod,
    Min,
    Max,
    And,
    Or,
    Xor,
    Lshr,
    Ashr,
    Not,
    Le,
    Lt,
    Sle,
    Slt,
    Eq,
    Neq,
    Implies,
    Ite,
    Fadd,
    Fsub,
    Fmul,
    Fdiv,
    Shl,
}

impl Opcode {
    /// Every opcode, extension included, in a fixed enumeration order.
    pub const ALL: [Opcode; 27] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::Div,
        Opcode::Neg,
        Opcode::Mod,
        Opcode::Min,
        Opcode::Max,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Lshr,
        Opcode::Ashr,
        Opcode::Not,
        Opcode::Le,
        Opcode::Lt,
        Opcode::Sle,
        Opcode::Slt,
        Opcode::Eq,
        Opcode::Neq,
        Opcode::Implies,
        Opcode::Ite,
        Opcode::Fadd,
        Opcode::Fsub,
        Opcode::Fmul,
        Opcode::Fdiv,
        Opcode::Shl,
    ];

    pub fn arity(self) -> usize {
        match self {
            Opcode::Neg | Opcode::Not => 1,
            Opcode::Ite => 3,
            _ => 2,
        }
    }

    /// Commutative opcodes have their operands stored in non-decreasing
    /// operand order in canonical programs.
    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Opcode::Add
                | Opcode::Mul
                | Opcode::Min
                | Opcode::Max
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
                | Opcode::Eq
                | Opcode::Neq
                | Opcode::Fadd
                | Opcode::Fmul
        )
    }

    pub fn is_float(self) -> bool {
        matches!(self, Opcode::Fadd | Opcode::Fsub | Opcode::Fmul | Opcode::Fdiv)
    }

    /// True for opcodes outside the core set (currently only `Shl`).
    pub fn is_extension(self) -> bool {
        matches!(self, Opcode::Shl)
    }

    /// Comparison-like opcodes whose result is always 0 or 1.
    pub fn is_boolean_valued(self) -> bool {
        matches!(
            self,
            Opcode::Le
                | Opcode::Lt
                | Opcode::Sle
                | Opcode::Slt
                | Opcode::Eq
                | Opcode::Neq
                | Opcode::Implies
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::Div => "div",
            Opcode::Neg => "neg",
            Opcode::Mod => "mod",
            Opcode::Min => "min",
            Opcode::Max => "max",
            Opcode::And => "and",
            Opcode::Or => "or",
            Opcode::Xor => "xor",
            Opcode::Lshr => "lshr",
            Opcode::Ashr => "ashr",
            Opcode::Not => "not",
            Opcode::Le => "le",
            Opcode::Lt => "lt",
            Opcode::Sle => "sle",
            Opcode::Slt => "slt",
            Opcode::Eq => "eq",
            Opcode::Neq => "neq",
            Opcode::Implies => "implies",
            Opcode::Ite => "ite",
            Opcode::Fadd => "fadd",
            Opcode::Fsub => "fsub",
            Opcode::Fmul => "fmul",
            Opcode::Fdiv => "fdiv",
            Opcode::Shl => "shl",
        }
    }

    pub fn from_name(name: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|op| op.name() == name)
    }
}

impl std::fmt::Display for Opcode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An instruction operand: a program input, the result of an earlier
/// instruction, or an entry of the constant table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Input(usize),
    Temp(usize),
    Const(usize),
}

impl Operand {
    /// Total order used for commutative-operand normalisation:
    /// Const < Input < Temp, then by index.
    pub fn rank(self) -> (u8, usize) {
        match self {
            Operand::Const(k) => (0, k),
            Operand::Input(i) => (1, i),
            Operand::Temp(t) => (2, t),
        }
    }

    pub fn is_const(self) -> bool {
        matches!(self, Operand::Const(_))
    }
}

impl std::fmt::Display for Operand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operand::Input(i) => write!(f, "x{i}"),
            Operand::Temp(t) => write!(f, "t{t}"),
            Operand::Const(k) => write!(f, "c{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
}

impl Instruction {
    pub fn new(opcode: Opcode, operands: Vec<Operand>) -> Self {
        Instruction { opcode, operands }
    }
}

/// A straight-line SSA program over `width`-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    pub arity: usize,
    pub out_count: usize,
    pub width: u32,
    pub constants: Vec<u64>,
    pub body: Vec<Instruction>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LangError {
    #[error("width {0} outside supported range {MIN_WIDTH}..={MAX_WIDTH}")]
    WidthOutOfRange(u32),
    #[error("opcode {opcode} is undefined at width {width}")]
    UnsupportedWidth { opcode: Opcode, width: u32 },
    #[error("expected {expected} inputs, got {got}")]
    InputCountMismatch { expected: usize, got: usize },
    #[error("malformed program: {}", .0.join("; "))]
    Malformed(Vec<String>),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Program {
    pub fn new(
        arity: usize,
        out_count: usize,
        width: u32,
        constants: Vec<u64>,
        body: Vec<Instruction>,
    ) -> Self {
        Program { arity, out_count, width, constants, body }
    }

    /// The degenerate constant form: an empty body whose outputs are the
    /// leading constant-table entries.
    pub fn degenerate(arity: usize, width: u32, values: Vec<u64>) -> Self {
        let out_count = values.len();
        Program { arity, out_count, width, constants: values, body: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Structural well-formedness: SSA operand references in range, operand
    /// counts matching opcode arity, constants fitting the width, and outputs
    /// actually available. Returns every violation found, not just the first.
    pub fn validate(&self) -> Result<(), LangError> {
        let mut violations = Vec::new();
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&self.width) {
            violations.push(format!("width {} outside 1..=64", self.width));
            return Err(LangError::Malformed(violations));
        }
        if self.out_count == 0 {
            violations.push("out_count must be at least 1".to_string());
        }
        if self.body.is_empty() {
            if self.constants.len() < self.out_count {
                violations.push(format!(
                    "degenerate program needs {} constants, has {}",
                    self.out_count,
                    self.constants.len()
                ));
            }
        } else if self.body.len() < self.out_count {
            violations.push(format!(
                "body length {} shorter than out_count {}",
                self.body.len(),
                self.out_count
            ));
        }
        for (k, &c) in self.constants.iter().enumerate() {
            if c & !width_mask(self.width) != 0 {
                violations.push(format!("constant c{k}={c} does not fit in {} bits", self.width));
            }
        }
        for (i, instr) in self.body.iter().enumerate() {
            if instr.operands.len() != instr.opcode.arity() {
                violations.push(format!(
                    "t{i}: {} takes {} operands, got {}",
                    instr.opcode,
                    instr.opcode.arity(),
                    instr.operands.len()
                ));
            }
            if instr.opcode.is_float() && self.width != FLOAT_WIDTH {
                violations.push(format!(
                    "t{i}: {} requires width {FLOAT_WIDTH}, program width is {}",
                    instr.opcode, self.width
                ));
            }
            for &operand in &instr.operands {
                match operand {
                    Operand::Input(x) if x >= self.arity => {
                        violations.push(format!("t{i}: input x{x} out of range (arity {})", self.arity));
                    }
                    Operand::Temp(t) if t >= i => {
                        violations.push(format!("t{i}: temp t{t} does not precede its use"));
                    }
                    Operand::Const(k) if k >= self.constants.len() => {
                        violations.push(format!(
                            "t{i}: constant c{k} out of range (table size {})",
                            self.constants.len()
                        ));
                    }
                    _ => {}
                }
            }
        }
        if violations.is_empty() { Ok(()) } else { Err(LangError::Malformed(violations)) }
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&pretty_print(self))
    }
}
