//! Interpreter for the program language.
//!
//! Every opcode is total over words of its width (the only failure mode is a
//! float opcode at a width other than 32). The conventions are fixed once and
//! shared with the symbolic encoder:
//! - add/sub/mul/neg wrap modulo 2^w
//! - div/mod are signed and truncate toward zero; x div 0 = all-ones,
//!   x mod 0 = x
//! - min/max compare signed
//! - lshr/ashr/shl take the shift amount modulo w
//! - comparisons and implies produce 0 or 1; ite tests its condition ≠ 0

use super::{
    sign_extend, width_mask, Instruction, LangError, Opcode, Operand, Program, Word, FLOAT_WIDTH,
};

/// Apply one opcode to operand values. `args` must contain exactly
/// `op.arity()` words, already reduced to `width` bits.
#[inline]
pub fn eval_op(op: Opcode, args: &[u64], width: u32) -> Result<u64, LangError> {
    debug_assert_eq!(args.len(), op.arity());
    let m = width_mask(width);
    let a = args[0];
    let b = if args.len() > 1 { args[1] } else { 0 };
    let out = match op {
        Opcode::Add => a.wrapping_add(b) & m,
        Opcode::Sub => a.wrapping_sub(b) & m,
        Opcode::Mul => a.wrapping_mul(b) & m,
        Opcode::Neg => a.wrapping_neg() & m,
        Opcode::Div => {
            if b == 0 {
                m
            } else {
                let q = sign_extend(a, width) as i128 / sign_extend(b, width) as i128;
                q as u64 & m
            }
        }
        Opcode::Mod => {
            if b == 0 {
                a
            } else {
                let r = sign_extend(a, width) as i128 % sign_extend(b, width) as i128;
                r as u64 & m
            }
        }
        Opcode::Min => {
            if sign_extend(a, width) <= sign_extend(b, width) { a } else { b }
        }
        Opcode::Max => {
            if sign_extend(a, width) >= sign_extend(b, width) { a } else { b }
        }
        Opcode::And => a & b,
        Opcode::Or => a | b,
        Opcode::Xor => a ^ b,
        Opcode::Lshr => a >> (b % u64::from(width)),
        Opcode::Ashr => {
            let sh = (b % u64::from(width)) as u32;
            ((sign_extend(a, width) >> sh) as u64) & m
        }
        Opcode::Shl => (a << (b % u64::from(width))) & m,
        Opcode::Not => !a & m,
        Opcode::Le => u64::from(a <= b),
        Opcode::Lt => u64::from(a < b),
        Opcode::Sle => u64::from(sign_extend(a, width) <= sign_extend(b, width)),
        Opcode::Slt => u64::from(sign_extend(a, width) < sign_extend(b, width)),
        Opcode::Eq => u64::from(a == b),
        Opcode::Neq => u64::from(a != b),
        Opcode::Implies => u64::from(a == 0 || b != 0),
        Opcode::Ite => {
            if a != 0 { b } else { args[2] }
        }
        Opcode::Fadd | Opcode::Fsub | Opcode::Fmul | Opcode::Fdiv => {
            if width != FLOAT_WIDTH {
                return Err(LangError::UnsupportedWidth { opcode: op, width });
            }
            let x = f32::from_bits(a as u32);
            let y = f32::from_bits(b as u32);
            let r = match op {
                Opcode::Fadd => x + y,
                Opcode::Fsub => x - y,
                Opcode::Fmul => x * y,
                _ => x / y,
            };
            u64::from(r.to_bits())
        }
    };
    Ok(out)
}

/// Typed wrapper over [`eval_op`] for word values of a common width.
pub fn eval_instruction(op: Opcode, args: &[Word]) -> Result<Word, LangError> {
    let width = args.first().map_or(FLOAT_WIDTH, |w| w.width);
    debug_assert!(args.iter().all(|w| w.width == width));
    let raw: Vec<u64> = args.iter().map(|w| w.value).collect();
    eval_op(op, &raw, width).map(|v| Word::new(v, width))
}

impl Program {
    /// Run the program, returning its `out_count` outputs.
    pub fn exec(&self, inputs: &[u64]) -> Result<Vec<u64>, LangError> {
        let mut temps = Vec::with_capacity(self.body.len().max(self.out_count));
        self.exec_into(inputs, &mut temps).map(<[u64]>::to_vec)
    }

    /// Allocation-free variant of [`Program::exec`]: `temps` is cleared and
    /// reused as the evaluation buffer, and the returned slice points at the
    /// output tail inside it.
    pub fn exec_into<'t>(
        &self,
        inputs: &[u64],
        temps: &'t mut Vec<u64>,
    ) -> Result<&'t [u64], LangError> {
        if inputs.len() != self.arity {
            return Err(LangError::InputCountMismatch { expected: self.arity, got: inputs.len() });
        }
        let m = width_mask(self.width);
        temps.clear();
        if self.body.is_empty() {
            temps.extend_from_slice(&self.constants[..self.out_count]);
            return Ok(&temps[..]);
        }
        for instr in &self.body {
            let v = {
                let resolve = |o: Operand| match o {
                    Operand::Input(i) => inputs[i] & m,
                    Operand::Temp(t) => temps[t],
                    Operand::Const(k) => self.constants[k],
                };
                let mut args = [0u64; 3];
                for (slot, &operand) in args.iter_mut().zip(&instr.operands) {
                    *slot = resolve(operand);
                }
                eval_op(instr.opcode, &args[..instr.operands.len()], self.width)?
            };
            temps.push(v);
        }
        Ok(&temps[temps.len() - self.out_count..])
    }
}

/// Convenience constructor used throughout tests and the front ends.
pub fn instr(opcode: Opcode, operands: &[Operand]) -> Instruction {
    Instruction::new(opcode, operands.to_vec())
}
