//! Tseitin-style circuit construction over CNF.
//!
//! [`Bit`]s are constants or literals; gate constructors fold constants, so
//! feeding concrete words through the same code path used for symbolic words
//! costs no clauses. Words are little-endian `Vec<Bit>` of the target width.
//! [`Circuit::apply_op`] mirrors the interpreter's opcode semantics bit for
//! bit; the pair is kept honest by an exhaustive cross-check in the test
//! suite. Floating-point opcodes are not encodable and are reported as such,
//! leaving float-bearing queries to the enumerative and evolutionary
//! strategies.

use super::{CnfFormula, Lit, Model};
use crate::lang::{Opcode, width_mask};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bit {
    False,
    True,
    Lit(Lit),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("opcode {0} has no propositional encoding")]
    FloatOpcode(Opcode),
}

impl Bit {
    pub fn constant(b: bool) -> Bit {
        if b { Bit::True } else { Bit::False }
    }

    pub fn as_const(self) -> Option<bool> {
        match self {
            Bit::False => Some(false),
            Bit::True => Some(true),
            Bit::Lit(_) => None,
        }
    }
}

/// Negation is representational, costing nothing.
pub fn not(b: Bit) -> Bit {
    match b {
        Bit::False => Bit::True,
        Bit::True => Bit::False,
        Bit::Lit(l) => Bit::Lit(-l),
    }
}

#[derive(Debug, Default)]
pub struct Circuit {
    pub cnf: CnfFormula,
}

pub type WordBits = Vec<Bit>;

impl Circuit {
    pub fn new() -> Self {
        Circuit { cnf: CnfFormula::new() }
    }

    pub fn fresh(&mut self) -> Bit {
        Bit::Lit(self.cnf.fresh_var())
    }

    pub fn fresh_word(&mut self, width: u32) -> WordBits {
        (0..width).map(|_| self.fresh()).collect()
    }

    pub fn word_const(&self, value: u64, width: u32) -> WordBits {
        debug_assert_eq!(value & !width_mask(width), 0);
        (0..width).map(|i| Bit::constant(value >> i & 1 == 1)).collect()
    }

    /// Read a word back out of a model; all bits must be decided.
    pub fn word_value(model: &Model, bits: &[Bit]) -> u64 {
        bits.iter()
            .enumerate()
            .map(|(i, &b)| {
                let v = match b {
                    Bit::False => false,
                    Bit::True => true,
                    Bit::Lit(l) => model.value(l),
                };
                u64::from(v) << i
            })
            .fold(0, u64::wrapping_add)
    }

    /// Add a clause over bits: true bits satisfy it outright, false bits drop
    /// out. An all-false clause becomes the empty (contradictory) clause.
    pub fn assert_clause(&mut self, bits: &[Bit]) {
        let mut lits = Vec::with_capacity(bits.len());
        for &b in bits {
            match b {
                Bit::True => return,
                Bit::False => {}
                Bit::Lit(l) => lits.push(l),
            }
        }
        self.cnf.add_clause(&lits);
    }

    pub fn assert_bit(&mut self, b: Bit) {
        self.assert_clause(&[b]);
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::False, _) | (_, Bit::False) => Bit::False,
            (Bit::True, x) | (x, Bit::True) => x,
            (Bit::Lit(la), Bit::Lit(lb)) if la == lb => a,
            (Bit::Lit(la), Bit::Lit(lb)) if la == -lb => Bit::False,
            (Bit::Lit(la), Bit::Lit(lb)) => {
                let v = self.cnf.fresh_var();
                self.cnf.add_clause(&[-v, la]);
                self.cnf.add_clause(&[-v, lb]);
                self.cnf.add_clause(&[v, -la, -lb]);
                Bit::Lit(v)
            }
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        not(self.and(not(a), not(b)))
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::False, x) | (x, Bit::False) => x,
            (Bit::True, x) | (x, Bit::True) => not(x),
            (Bit::Lit(la), Bit::Lit(lb)) if la == lb => Bit::False,
            (Bit::Lit(la), Bit::Lit(lb)) if la == -lb => Bit::True,
            (Bit::Lit(la), Bit::Lit(lb)) => {
                let v = self.cnf.fresh_var();
                self.cnf.add_clause(&[-v, la, lb]);
                self.cnf.add_clause(&[-v, -la, -lb]);
                self.cnf.add_clause(&[v, -la, lb]);
                self.cnf.add_clause(&[v, la, -lb]);
                Bit::Lit(v)
            }
        }
    }

    pub fn iff(&mut self, a: Bit, b: Bit) -> Bit {
        not(self.xor(a, b))
    }

    /// `s ? a : b`.
    pub fn mux(&mut self, s: Bit, a: Bit, b: Bit) -> Bit {
        match s {
            Bit::True => return a,
            Bit::False => return b,
            Bit::Lit(_) => {}
        }
        if a == b {
            return a;
        }
        let t = self.and(s, a);
        let e = self.and(not(s), b);
        self.or(t, e)
    }

    pub fn and_many(&mut self, bits: &[Bit]) -> Bit {
        let mut acc = Bit::True;
        for &b in bits {
            acc = self.and(acc, b);
        }
        acc
    }

    pub fn or_many(&mut self, bits: &[Bit]) -> Bit {
        let mut acc = Bit::False;
        for &b in bits {
            acc = self.or(acc, b);
        }
        acc
    }

    /// Word truth: any bit set.
    pub fn or_reduce(&mut self, a: &[Bit]) -> Bit {
        self.or_many(a)
    }

    pub fn word_eq(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = Bit::True;
        for (&x, &y) in a.iter().zip(b) {
            let e = self.iff(x, y);
            acc = self.and(acc, e);
        }
        acc
    }

    pub fn mux_word(&mut self, s: Bit, a: &[Bit], b: &[Bit]) -> WordBits {
        a.iter().zip(b).map(|(&x, &y)| self.mux(s, x, y)).collect()
    }

    fn full_add(&mut self, a: Bit, b: Bit, cin: Bit) -> (Bit, Bit) {
        let axb = self.xor(a, b);
        let sum = self.xor(axb, cin);
        let ab = self.and(a, b);
        let cx = self.and(cin, axb);
        let cout = self.or(ab, cx);
        (sum, cout)
    }

    fn add_with_carry(&mut self, a: &[Bit], b: &[Bit], mut carry: Bit) -> WordBits {
        debug_assert_eq!(a.len(), b.len());
        let mut out = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let (s, c) = self.full_add(x, y, carry);
            out.push(s);
            carry = c;
        }
        out
    }

    pub fn add_words(&mut self, a: &[Bit], b: &[Bit]) -> WordBits {
        self.add_with_carry(a, b, Bit::False)
    }

    pub fn sub_words(&mut self, a: &[Bit], b: &[Bit]) -> WordBits {
        let nb: WordBits = b.iter().map(|&x| not(x)).collect();
        self.add_with_carry(a, &nb, Bit::True)
    }

    pub fn neg_word(&mut self, a: &[Bit]) -> WordBits {
        let zero = self.word_const(0, a.len() as u32);
        self.sub_words(&zero, a)
    }

    pub fn not_word(&self, a: &[Bit]) -> WordBits {
        a.iter().map(|&x| not(x)).collect()
    }

    pub fn mul_words(&mut self, a: &[Bit], b: &[Bit]) -> WordBits {
        let w = a.len();
        let mut acc = self.word_const(0, w as u32);
        for i in 0..w {
            if b[i] == Bit::False {
                continue;
            }
            let mut row = vec![Bit::False; w];
            for j in 0..w - i {
                row[i + j] = self.and(a[j], b[i]);
            }
            acc = self.add_words(&acc, &row);
        }
        acc
    }

    /// Unsigned `a < b`.
    pub fn ult(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        debug_assert_eq!(a.len(), b.len());
        let mut borrow = Bit::False;
        for (&x, &y) in a.iter().zip(b) {
            let na_and_b = {
                let nx = not(x);
                self.and(nx, y)
            };
            let eq = self.iff(x, y);
            let keep = self.and(eq, borrow);
            borrow = self.or(na_and_b, keep);
        }
        borrow
    }

    /// Signed `a < b`: signs differ → a is the negative one; else unsigned.
    pub fn slt(&mut self, a: &[Bit], b: &[Bit]) -> Bit {
        let sa = *a.last().expect("zero-width word");
        let sb = *b.last().expect("zero-width word");
        let differ = self.xor(sa, sb);
        let u = self.ult(a, b);
        self.mux(differ, sa, u)
    }

    /// Unsigned division and remainder by restoring long division.
    /// By construction `x / 0 = all-ones` and `x mod 0 = x`.
    pub fn udiv_urem(&mut self, a: &[Bit], b: &[Bit]) -> (WordBits, WordBits) {
        let w = a.len();
        let mut rem = vec![Bit::False; w];
        let mut quo = vec![Bit::False; w];
        // One extra position so the shifted remainder cannot overflow.
        let b_ext: WordBits = b.iter().copied().chain([Bit::False]).collect();
        for i in (0..w).rev() {
            let mut ext = Vec::with_capacity(w + 1);
            ext.push(a[i]);
            ext.extend_from_slice(&rem);
            let lt = self.ult(&ext, &b_ext);
            let ge = not(lt);
            let diff = self.sub_words(&ext, &b_ext);
            let next = self.mux_word(ge, &diff, &ext);
            rem.copy_from_slice(&next[..w]);
            quo[i] = ge;
        }
        (quo, rem)
    }

    /// Signed division/remainder, truncating toward zero, with the fixed
    /// division-by-zero results (div → all-ones, mod → dividend).
    pub fn sdiv_srem(&mut self, a: &[Bit], b: &[Bit]) -> (WordBits, WordBits) {
        let w = a.len() as u32;
        let sa = *a.last().unwrap();
        let sb = *b.last().unwrap();
        let neg_a = self.neg_word(a);
        let abs_a = self.mux_word(sa, &neg_a, a);
        let neg_b = self.neg_word(b);
        let abs_b = self.mux_word(sb, &neg_b, b);
        let (uq, ur) = self.udiv_urem(&abs_a, &abs_b);
        let qsign = self.xor(sa, sb);
        let neg_uq = self.neg_word(&uq);
        let q = self.mux_word(qsign, &neg_uq, &uq);
        let neg_ur = self.neg_word(&ur);
        let r = self.mux_word(sa, &neg_ur, &ur);
        let some_b = self.or_reduce(b);
        let bz = not(some_b);
        let all_ones = self.word_const(width_mask(w), w);
        let q = self.mux_word(bz, &all_ones, &q);
        let r = self.mux_word(bz, a, &r);
        (q, r)
    }

    /// Shift-amount normalisation: the amount operand modulo the width.
    fn shift_amount(&mut self, b: &[Bit]) -> WordBits {
        let w = b.len() as u32;
        if w.is_power_of_two() {
            b[..w.trailing_zeros() as usize].to_vec()
        } else {
            let divisor = self.word_const(u64::from(w), w);
            let (_, r) = self.udiv_urem(b, &divisor);
            r
        }
    }

    fn barrel_shift(&mut self, a: &[Bit], b: &[Bit], fill: Bit, left: bool) -> WordBits {
        let w = a.len();
        let amt = self.shift_amount(b);
        let mut cur: WordBits = a.to_vec();
        for (stage, &sel) in amt.iter().enumerate() {
            let dist = 1usize << stage;
            if dist >= w {
                // Amounts are already < w, so this stage bit is only set for
                // non-power-of-two widths where the remainder keeps full
                // width; shifting by >= w would zero everything.
                continue;
            }
            let shifted: WordBits = (0..w)
                .map(|i| {
                    if left {
                        if i >= dist { cur[i - dist] } else { fill }
                    } else if i + dist < w {
                        cur[i + dist]
                    } else {
                        fill
                    }
                })
                .collect();
            cur = self.mux_word(sel, &shifted, &cur);
        }
        cur
    }

    pub fn bool_word(&self, b: Bit, width: u32) -> WordBits {
        let mut out = vec![Bit::False; width as usize];
        out[0] = b;
        out
    }

    /// Bit-blast one opcode application. `args` must hold `op.arity()` words
    /// of equal width.
    pub fn apply_op(&mut self, op: Opcode, args: &[WordBits]) -> Result<WordBits, CircuitError> {
        debug_assert_eq!(args.len(), op.arity());
        let w = args[0].len() as u32;
        let a = &args[0];
        let out = match op {
            Opcode::Add => self.add_words(a, &args[1]),
            Opcode::Sub => self.sub_words(a, &args[1]),
            Opcode::Mul => self.mul_words(a, &args[1]),
            Opcode::Neg => self.neg_word(a),
            Opcode::Div => self.sdiv_srem(a, &args[1]).0,
            Opcode::Mod => self.sdiv_srem(a, &args[1]).1,
            Opcode::Min => {
                let c = self.slt(a, &args[1]);
                self.mux_word(c, a, &args[1])
            }
            Opcode::Max => {
                let c = self.slt(a, &args[1]);
                self.mux_word(c, &args[1], a)
            }
            Opcode::And => {
                let b = &args[1];
                a.iter().zip(b).map(|(&x, &y)| self.and(x, y)).collect()
            }
            Opcode::Or => {
                let b = &args[1];
                a.iter().zip(b).map(|(&x, &y)| self.or(x, y)).collect()
            }
            Opcode::Xor => {
                let b = &args[1];
                a.iter().zip(b).map(|(&x, &y)| self.xor(x, y)).collect()
            }
            Opcode::Not => self.not_word(a),
            Opcode::Lshr => self.barrel_shift(a, &args[1], Bit::False, false),
            Opcode::Ashr => {
                let sign = *a.last().unwrap();
                self.barrel_shift(a, &args[1], sign, false)
            }
            Opcode::Shl => self.barrel_shift(a, &args[1], Bit::False, true),
            Opcode::Le => {
                let b = self.ult(&args[1], a);
                self.bool_word(not(b), w)
            }
            Opcode::Lt => {
                let b = self.ult(a, &args[1]);
                self.bool_word(b, w)
            }
            Opcode::Sle => {
                let b = self.slt(&args[1], a);
                self.bool_word(not(b), w)
            }
            Opcode::Slt => {
                let b = self.slt(a, &args[1]);
                self.bool_word(b, w)
            }
            Opcode::Eq => {
                let b = self.word_eq(a, &args[1]);
                self.bool_word(b, w)
            }
            Opcode::Neq => {
                let b = self.word_eq(a, &args[1]);
                self.bool_word(not(b), w)
            }
            Opcode::Implies => {
                let ta = self.or_reduce(a);
                let tb = self.or_reduce(&args[1]);
                let b = self.or(not(ta), tb);
                self.bool_word(b, w)
            }
            Opcode::Ite => {
                let c = self.or_reduce(a);
                self.mux_word(c, &args[1], &args[2])
            }
            Opcode::Fadd | Opcode::Fsub | Opcode::Fmul | Opcode::Fdiv => {
                return Err(CircuitError::FloatOpcode(op));
            }
        };
        debug_assert_eq!(out.len(), w as usize);
        Ok(out)
    }
}
