//! Canonical form for programs.
//!
//! The search spaces enumerate only canonical programs; everything else is a
//! syntactic duplicate of a canonical program of the same or shorter length.
//! A program is canonical when:
//! - no instruction has all of its operands drawn from the constant table
//! - commutative opcodes list their operands in non-decreasing operand order
//!   (Const < Input < Temp, then by index)
//! - constant-table entries are pairwise distinct
//! - no instruction matches the fixed nop list: add/sub/or/xor with constant
//!   0, mul/div with constant 1, and/or of an operand with itself, and with
//!   constant all-ones, ite with a constant condition (sub/div only exempt
//!   their left operand: `0 - x` and `1 / x` are not identities)

use super::{eval_op, width_mask, Instruction, Opcode, Operand, Program};

/// Check one instruction against the canonical-form rules, given the
/// program's constant table. Table distinctness is a whole-program rule and
/// is not checked here.
pub fn instruction_is_canonical(instr: &Instruction, constants: &[u64], width: u32) -> bool {
    let ops = &instr.operands;
    if ops.iter().all(|o| o.is_const()) {
        return false;
    }
    if instr.opcode.is_commutative() && ops[0].rank() > ops[1].rank() {
        return false;
    }
    let const_val = |o: Operand| match o {
        Operand::Const(k) => Some(constants[k]),
        _ => None,
    };
    let all_ones = width_mask(width);
    match instr.opcode {
        Opcode::Add | Opcode::Or | Opcode::Xor => {
            if ops.iter().any(|&o| const_val(o) == Some(0)) {
                return false;
            }
        }
        Opcode::Sub => {
            if const_val(ops[1]) == Some(0) {
                return false;
            }
        }
        Opcode::Mul => {
            if ops.iter().any(|&o| const_val(o) == Some(1)) {
                return false;
            }
        }
        Opcode::Div => {
            if const_val(ops[1]) == Some(1) {
                return false;
            }
        }
        Opcode::And => {
            if ops.iter().any(|&o| const_val(o) == Some(all_ones)) {
                return false;
            }
        }
        Opcode::Ite => {
            if ops[0].is_const() {
                return false;
            }
        }
        _ => {}
    }
    if matches!(instr.opcode, Opcode::And | Opcode::Or) && ops[0] == ops[1] {
        return false;
    }
    true
}

/// Whole-program canonical-form check. Assumes the program validates.
pub fn is_canonical(p: &Program) -> bool {
    for (i, &c) in p.constants.iter().enumerate() {
        if p.constants[..i].contains(&c) {
            return false;
        }
    }
    p.body.iter().all(|instr| instruction_is_canonical(instr, &p.constants, p.width))
}

/// Resolution result for an original instruction during canonicalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Res {
    Input(usize),
    Temp(usize),
    Value(u64),
}

impl Res {
    fn as_operand(self, consts: &mut Vec<u64>) -> Operand {
        match self {
            Res::Input(i) => Operand::Input(i),
            Res::Temp(t) => Operand::Temp(t),
            Res::Value(v) => Operand::Const(intern(consts, v)),
        }
    }
}

fn intern(consts: &mut Vec<u64>, v: u64) -> usize {
    if let Some(k) = consts.iter().position(|&c| c == v) {
        k
    } else {
        consts.push(v);
        consts.len() - 1
    }
}

/// Rewrite a valid program into an equivalent canonical one: fold
/// all-constant instructions into table entries, elide nop-listed
/// instructions by rewiring their uses, order commutative operands, and
/// deduplicate the constant table. Output positions are preserved, appending
/// materialising instructions when an output instruction was elided.
///
/// Returns `None` only when no canonical equivalent exists, which happens
/// solely for arity-0 programs whose outputs repeat a constant value (the
/// degenerate form would need a duplicate table entry).
pub fn canonicalize(p: &Program) -> Option<Program> {
    debug_assert!(p.validate().is_ok());
    if p.body.is_empty() {
        return canonical_tail(p, &(0..p.out_count).map(|k| Res::Value(p.constants[k])).collect::<Vec<_>>(), Vec::new(), Vec::new());
    }

    let mut consts: Vec<u64> = Vec::new();
    let mut body: Vec<Instruction> = Vec::new();
    let mut map: Vec<Res> = Vec::with_capacity(p.body.len());

    for instr in &p.body {
        let resolved: Vec<Res> = instr
            .operands
            .iter()
            .map(|&o| match o {
                Operand::Input(i) => Res::Input(i),
                Operand::Const(k) => Res::Value(p.constants[k]),
                Operand::Temp(t) => map[t],
            })
            .collect();

        if resolved.iter().all(|r| matches!(r, Res::Value(_))) {
            let args: Vec<u64> = resolved
                .iter()
                .map(|r| match r {
                    Res::Value(v) => *v,
                    _ => unreachable!(),
                })
                .collect();
            // Valid programs only fail eval on float widths, which validate
            // already rejects.
            let v = eval_op(instr.opcode, &args, p.width).ok()?;
            map.push(Res::Value(v));
            continue;
        }

        if let Some(replacement) = nop_replacement(instr.opcode, &resolved, p.width) {
            map.push(replacement);
            continue;
        }

        let mut operands: Vec<Operand> =
            resolved.iter().map(|&r| r.as_operand(&mut consts)).collect();
        if instr.opcode.is_commutative() && operands[0].rank() > operands[1].rank() {
            operands.swap(0, 1);
        }
        body.push(Instruction::new(instr.opcode, operands));
        map.push(Res::Temp(body.len() - 1));
    }

    let outputs: Vec<Res> =
        (p.body.len() - p.out_count..p.body.len()).map(|t| map[t]).collect();
    canonical_tail(p, &outputs, consts, body)
}

/// The identity-instruction patterns, evaluated over resolved operands.
/// Returns what uses of the instruction should be rewired to.
fn nop_replacement(op: Opcode, resolved: &[Res], width: u32) -> Option<Res> {
    let val = |r: Res| match r {
        Res::Value(v) => Some(v),
        _ => None,
    };
    let all_ones = width_mask(width);
    match op {
        Opcode::Add | Opcode::Or | Opcode::Xor => {
            if val(resolved[0]) == Some(0) {
                return Some(resolved[1]);
            }
            if val(resolved[1]) == Some(0) {
                return Some(resolved[0]);
            }
        }
        Opcode::Sub => {
            if val(resolved[1]) == Some(0) {
                return Some(resolved[0]);
            }
        }
        Opcode::Mul => {
            if val(resolved[0]) == Some(1) {
                return Some(resolved[1]);
            }
            if val(resolved[1]) == Some(1) {
                return Some(resolved[0]);
            }
        }
        Opcode::Div => {
            if val(resolved[1]) == Some(1) {
                return Some(resolved[0]);
            }
        }
        Opcode::And => {
            if val(resolved[0]) == Some(all_ones) {
                return Some(resolved[1]);
            }
            if val(resolved[1]) == Some(all_ones) {
                return Some(resolved[0]);
            }
        }
        Opcode::Ite => {
            if let Some(c) = val(resolved[0]) {
                return Some(if c != 0 { resolved[1] } else { resolved[2] });
            }
        }
        _ => {}
    }
    if matches!(op, Opcode::And | Opcode::Or) && resolved[0] == resolved[1] {
        return Some(resolved[0]);
    }
    None
}

/// Arrange for the canonical body to end with instructions producing the
/// resolved outputs in order. If the surviving tail already lines up, the
/// body is used as-is; otherwise each output is materialised: temps and
/// inputs through a self-`max` copy, constant values through an `ite` whose
/// branches share one table entry (requiring some non-constant operand).
fn canonical_tail(
    p: &Program,
    outputs: &[Res],
    mut consts: Vec<u64>,
    mut body: Vec<Instruction>,
) -> Option<Program> {
    let m = p.out_count;
    let tail_matches = body.len() >= m
        && outputs
            .iter()
            .enumerate()
            .all(|(j, &r)| r == Res::Temp(body.len() - m + j));
    if !tail_matches {
        if body.is_empty() && outputs.iter().all(|r| matches!(r, Res::Value(_))) {
            let values: Vec<u64> = outputs
                .iter()
                .map(|r| match r {
                    Res::Value(v) => *v,
                    _ => unreachable!(),
                })
                .collect();
            let distinct = values.iter().enumerate().all(|(i, v)| !values[..i].contains(v));
            if distinct {
                return Some(Program::degenerate(p.arity, p.width, values));
            }
            if p.arity == 0 {
                return None;
            }
            // Fall through: materialise via ite over an input.
        }
        for &r in outputs {
            let instr = match r {
                Res::Value(v) => {
                    let cond = if let Some(t) = body.len().checked_sub(1) {
                        Operand::Temp(t)
                    } else {
                        debug_assert!(p.arity > 0);
                        Operand::Input(0)
                    };
                    let k = intern(&mut consts, v);
                    Instruction::new(Opcode::Ite, vec![cond, Operand::Const(k), Operand::Const(k)])
                }
                Res::Temp(t) => {
                    Instruction::new(Opcode::Max, vec![Operand::Temp(t), Operand::Temp(t)])
                }
                Res::Input(i) => {
                    Instruction::new(Opcode::Max, vec![Operand::Input(i), Operand::Input(i)])
                }
            };
            body.push(instr);
        }
    }
    let out = Program::new(p.arity, p.out_count, p.width, consts, body);
    debug_assert!(out.validate().is_ok(), "canonicalize produced invalid program: {out}");
    debug_assert!(is_canonical(&out), "canonicalize produced non-canonical program: {out}");
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::super::exec::instr;
    use super::super::*;

    fn exhaustive_same_function(a: &Program, b: &Program) {
        assert_eq!(a.arity, b.arity);
        assert_eq!(a.width, b.width);
        let m = width_mask(a.width);
        let mut inputs = vec![0u64; a.arity];
        loop {
            assert_eq!(
                a.exec(&inputs).unwrap(),
                b.exec(&inputs).unwrap(),
                "programs differ on {inputs:?}\nleft:\n{a}\nright:\n{b}"
            );
            // Odometer over all input tuples.
            let mut pos = 0;
            loop {
                if pos == inputs.len() {
                    return;
                }
                inputs[pos] += 1;
                if inputs[pos] <= m {
                    break;
                }
                inputs[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn detects_commutative_operand_order() {
        let good = Program::new(
            2,
            1,
            8,
            vec![],
            vec![instr(Opcode::Add, &[Operand::Input(0), Operand::Input(1)])],
        );
        let bad = Program::new(
            2,
            1,
            8,
            vec![],
            vec![instr(Opcode::Add, &[Operand::Input(1), Operand::Input(0)])],
        );
        assert!(is_canonical(&good));
        assert!(!is_canonical(&bad));
    }

    #[test]
    fn detects_all_constant_instruction() {
        let p = Program::new(
            1,
            1,
            8,
            vec![1, 2],
            vec![instr(Opcode::Add, &[Operand::Const(0), Operand::Const(1)])],
        );
        assert!(!is_canonical(&p));
    }

    #[test]
    fn detects_duplicate_constants() {
        let p = Program::new(
            1,
            1,
            8,
            vec![3, 3],
            vec![instr(Opcode::Add, &[Operand::Const(0), Operand::Input(0)])],
        );
        assert!(!is_canonical(&p));
    }

    #[test]
    fn nop_list_membership() {
        let w = 8;
        let cases: Vec<(Opcode, Vec<Operand>, Vec<u64>, bool)> = vec![
            // (opcode, operands, constants, expected canonical?)
            (Opcode::Add, vec![Operand::Const(0), Operand::Input(0)], vec![0], false),
            (Opcode::Sub, vec![Operand::Input(0), Operand::Const(0)], vec![0], false),
            // 0 - x is not an identity and stays legal.
            (Opcode::Sub, vec![Operand::Const(0), Operand::Input(0)], vec![0], true),
            (Opcode::Xor, vec![Operand::Const(0), Operand::Input(0)], vec![0], false),
            (Opcode::Or, vec![Operand::Const(0), Operand::Input(0)], vec![0], false),
            (Opcode::Mul, vec![Operand::Const(0), Operand::Input(0)], vec![1], false),
            (Opcode::Div, vec![Operand::Input(0), Operand::Const(0)], vec![1], false),
            // 1 / x is not an identity.
            (Opcode::Div, vec![Operand::Const(0), Operand::Input(0)], vec![1], true),
            (Opcode::And, vec![Operand::Const(0), Operand::Input(0)], vec![0xff], false),
            (Opcode::And, vec![Operand::Input(0), Operand::Input(0)], vec![], false),
            (Opcode::Or, vec![Operand::Input(0), Operand::Input(0)], vec![], false),
            // xor with self is not on the nop list (it computes zero).
            (Opcode::Xor, vec![Operand::Input(0), Operand::Input(0)], vec![], true),
            (Opcode::Ite, vec![Operand::Const(0), Operand::Input(0), Operand::Input(0)], vec![5], false),
            // and with 0 is not on the nop list (it computes zero, not identity).
            (Opcode::And, vec![Operand::Const(0), Operand::Input(0)], vec![0], true),
        ];
        for (op, operands, constants, expect) in cases {
            let i = Instruction::new(op, operands);
            assert_eq!(
                instruction_is_canonical(&i, &constants, w),
                expect,
                "{op} with constants {constants:?}"
            );
        }
    }

    #[test]
    fn ite_with_two_shared_constant_branches_is_canonical() {
        let p = Program::new(
            1,
            1,
            4,
            vec![3, 5],
            vec![instr(Opcode::Ite, &[Operand::Input(0), Operand::Const(0), Operand::Const(1)])],
        );
        assert!(p.validate().is_ok());
        assert!(is_canonical(&p));
    }

    #[test]
    fn canonicalize_elides_nops_and_rewires() {
        // t0 = add x0 c0(=0) ; t1 = and x0 t0  ==>  single self-and is also a
        // nop, so the whole body collapses to the identity on x0.
        let p = Program::new(
            1,
            1,
            8,
            vec![0],
            vec![
                instr(Opcode::Add, &[Operand::Input(0), Operand::Const(0)]),
                instr(Opcode::And, &[Operand::Input(0), Operand::Temp(0)]),
            ],
        );
        let c = canonicalize(&p).unwrap();
        assert!(is_canonical(&c));
        assert!(c.len() <= p.len());
        exhaustive_same_function(&p, &c);
    }

    #[test]
    fn canonicalize_folds_constant_subexpressions() {
        // t0 = add c0 c1 (= 5) ; t1 = mul x0 t0  ==>  mul with interned 5.
        let p = Program::new(
            1,
            1,
            8,
            vec![2, 3],
            vec![
                instr(Opcode::Add, &[Operand::Const(0), Operand::Const(1)]),
                instr(Opcode::Mul, &[Operand::Input(0), Operand::Temp(0)]),
            ],
        );
        let c = canonicalize(&p).unwrap();
        assert!(is_canonical(&c));
        assert_eq!(c.len(), 1);
        assert_eq!(c.constants, vec![5]);
        exhaustive_same_function(&p, &c);
    }

    #[test]
    fn canonicalize_collapses_all_constant_program_to_degenerate() {
        let p = Program::new(
            1,
            1,
            4,
            vec![2, 3],
            vec![instr(Opcode::Add, &[Operand::Const(0), Operand::Const(1)])],
        );
        let c = canonicalize(&p).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.constants, vec![5]);
        exhaustive_same_function(&p, &c);
    }

    #[test]
    fn canonicalize_preserves_output_positions() {
        // Second output is a nop of the first; it must be rematerialised so
        // both output slots still exist.
        let p = Program::new(
            2,
            2,
            8,
            vec![0],
            vec![
                instr(Opcode::Mul, &[Operand::Input(0), Operand::Input(1)]),
                instr(Opcode::Add, &[Operand::Temp(0), Operand::Const(0)]),
            ],
        );
        let c = canonicalize(&p).unwrap();
        assert!(is_canonical(&c));
        assert_eq!(c.out_count, 2);
        exhaustive_same_function(&p, &c);
    }

    #[test]
    fn canonicalize_orders_commutative_operands() {
        let p = Program::new(
            2,
            1,
            8,
            vec![],
            vec![instr(Opcode::Mul, &[Operand::Input(1), Operand::Input(0)])],
        );
        let c = canonicalize(&p).unwrap();
        assert_eq!(
            c.body[0].operands,
            vec![Operand::Input(0), Operand::Input(1)]
        );
        exhaustive_same_function(&p, &c);
    }

    #[test]
    fn canonicalize_fails_only_on_duplicate_arity0_outputs() {
        let p = Program::degenerate(0, 8, vec![3, 3]);
        assert!(p.validate().is_ok());
        assert!(canonicalize(&p).is_none());
        // With an input available the duplicate outputs are materialisable.
        let p2 = Program::degenerate(1, 8, vec![3, 3]);
        let c = canonicalize(&p2).unwrap();
        assert!(is_canonical(&c));
        exhaustive_same_function(&p2, &c);
    }

    #[test]
    fn nop_soundness_exhaustive_small_widths() {
        // For every nop pattern: a program with the nop inserted between a
        // producer and a consumer computes the same function as the program
        // with the nop removed, over all inputs at w <= 6.
        for w in [2u32, 4, 6] {
            let all_ones = width_mask(w);
            let patterns: Vec<(Opcode, Vec<Operand>, Vec<u64>)> = vec![
                (Opcode::Add, vec![Operand::Temp(0), Operand::Const(0)], vec![0, 1]),
                (Opcode::Add, vec![Operand::Const(0), Operand::Temp(0)], vec![0, 1]),
                (Opcode::Sub, vec![Operand::Temp(0), Operand::Const(0)], vec![0, 1]),
                (Opcode::Or, vec![Operand::Temp(0), Operand::Const(0)], vec![0, 1]),
                (Opcode::Xor, vec![Operand::Temp(0), Operand::Const(0)], vec![0, 1]),
                (Opcode::Mul, vec![Operand::Temp(0), Operand::Const(1)], vec![0, 1]),
                (Opcode::Div, vec![Operand::Temp(0), Operand::Const(1)], vec![0, 1]),
                (Opcode::And, vec![Operand::Temp(0), Operand::Temp(0)], vec![0, 1]),
                (Opcode::Or, vec![Operand::Temp(0), Operand::Temp(0)], vec![0, 1]),
                (Opcode::And, vec![Operand::Temp(0), Operand::Const(0)], vec![all_ones, 1]),
                (Opcode::Ite, vec![Operand::Const(1), Operand::Temp(0), Operand::Input(0)], vec![0, 1]),
            ];
            for (op, operands, constants) in patterns {
                // t0 = sub x0 x1 ; t1 = <nop of t0> ; t2 = add t1 x1
                let with_nop = Program::new(
                    2,
                    1,
                    w,
                    constants.clone(),
                    vec![
                        instr(Opcode::Sub, &[Operand::Input(0), Operand::Input(1)]),
                        Instruction::new(op, operands),
                        instr(Opcode::Add, &[Operand::Temp(1), Operand::Input(1)]),
                    ],
                );
                assert!(with_nop.validate().is_ok());
                let without = Program::new(
                    2,
                    1,
                    w,
                    constants,
                    vec![
                        instr(Opcode::Sub, &[Operand::Input(0), Operand::Input(1)]),
                        instr(Opcode::Add, &[Operand::Temp(0), Operand::Input(1)]),
                    ],
                );
                exhaustive_same_function(&with_nop, &without);
            }
        }
    }
}
