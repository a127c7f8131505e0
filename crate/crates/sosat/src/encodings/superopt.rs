//! Superoptimisation: find the shortest program extensionally equal to a
//! reference.
//!
//! The reduction asks for a function symbol `P` agreeing with the reference
//! on every input vector; the solver's length-ordered search then makes the
//! first witness a shortest one. References are straight-line programs,
//! converted to expression form by symbolic execution.

use crate::formula::{
    BodyExpr, FirstOrderVar, FormulaError, FunctionSignature, Quantifier, Role, SOSFormula,
};
use crate::lang::{Opcode, Operand, Program};

/// The input variable names used by the generated formula: `x0`, `x1`, ...
fn input_name(i: usize) -> String {
    format!("x{i}")
}

/// Symbolically execute a straight-line program into one expression per
/// output, over the variables `x0..x{arity-1}`. Temporaries inline, so
/// shared subcomputations duplicate — acceptable for specification bodies.
pub fn program_to_exprs(p: &Program) -> Vec<BodyExpr> {
    let mut temps: Vec<BodyExpr> = Vec::with_capacity(p.body.len());
    for instr in &p.body {
        let args: Vec<BodyExpr> = instr
            .operands
            .iter()
            .map(|o| match o {
                Operand::Input(i) => BodyExpr::var(&input_name(*i)),
                Operand::Temp(t) => temps[*t].clone(),
                Operand::Const(k) => BodyExpr::lit(p.constants[*k]),
            })
            .collect();
        temps.push(BodyExpr::Op(instr.opcode, args));
    }
    temps[temps.len() - p.out_count..].to_vec()
}

/// Reduce "find a shortest program equal to `reference`" to satisfiability:
///
/// ```text
/// forall x0..xk.  ⋀_j  P_j(x) = reference_j(x)
/// ```
///
/// at the reference's width, where `P` has the reference's arity and output
/// count and `P_j` is its j-th output.
pub fn encode_superopt(reference: &Program, name: &str) -> Result<SOSFormula, FormulaError> {
    let outs = program_to_exprs(reference);
    let inputs: Vec<BodyExpr> =
        (0..reference.arity).map(|i| BodyExpr::var(&input_name(i))).collect();
    let conjuncts: Vec<BodyExpr> = outs
        .into_iter()
        .enumerate()
        .map(|(j, out)| {
            BodyExpr::op(
                Opcode::Eq,
                vec![BodyExpr::app_proj(name, j, inputs.clone()), out],
            )
        })
        .collect();
    let formula = SOSFormula {
        second_order: vec![FunctionSignature {
            name: name.to_string(),
            arity: reference.arity,
            out_count: reference.out_count,
            role: Role::Function,
        }],
        first_order: (0..reference.arity)
            .map(|i| FirstOrderVar {
                quantifier: Quantifier::Forall,
                name: input_name(i),
                width: None,
            })
            .collect(),
        body: BodyExpr::band(conjuncts),
        default_width: reference.width,
    };
    formula.validate()?;
    Ok(formula)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cegis::{solve, SolverConfig, Verdict};
    use crate::lang::instr;

    /// Three instructions computing x & (x - 1) the long way:
    /// t0 = x - 1; t1 = x & t0.
    fn clear_lowest_bit() -> Program {
        Program {
            arity: 1,
            out_count: 1,
            width: 8,
            constants: vec![1],
            body: vec![
                instr(Opcode::Sub, &[Operand::Input(0), Operand::Const(0)]),
                instr(Opcode::And, &[Operand::Input(0), Operand::Temp(0)]),
            ],
        }
    }

    #[test]
    fn symbolic_execution_matches_concrete_execution() {
        let p = clear_lowest_bit();
        let exprs = program_to_exprs(&p);
        assert_eq!(exprs.len(), 1);
        // Spot-check the expression's shape: and(x0, sub(x0, 1)).
        assert_eq!(format!("{}", exprs[0]), "(and x0 (sub x0 1))");
    }

    #[test]
    fn multi_output_references_expose_their_last_instructions() {
        // t0 = x+y; t1 = x-y; outputs (t0, t1).
        let p = Program {
            arity: 2,
            out_count: 2,
            width: 8,
            constants: vec![],
            body: vec![
                instr(Opcode::Add, &[Operand::Input(0), Operand::Input(1)]),
                instr(Opcode::Sub, &[Operand::Input(0), Operand::Input(1)]),
            ],
        };
        let exprs = program_to_exprs(&p);
        assert_eq!(exprs.len(), 2);
        assert_eq!(format!("{}", exprs[0]), "(add x0 x1)");
        assert_eq!(format!("{}", exprs[1]), "(sub x0 x1)");
    }

    #[test]
    fn finds_an_equivalent_program_of_reference_length() {
        let f = encode_superopt(&clear_lowest_bit(), "P").unwrap();
        let res = solve(&f.skolemize(), &SolverConfig::default()).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict);
        };
        assert_eq!(res.stats.minimal_solution_length, Some(2));
        // Extensional agreement with the reference on the whole domain.
        let reference = clear_lowest_bit();
        for x in 0..=255u64 {
            assert_eq!(
                witnesses[0].exec(&[x]).unwrap(),
                reference.exec(&[x]).unwrap(),
                "diverges at {x}"
            );
        }
    }

    #[test]
    fn redundant_references_shrink() {
        // xor(xor(x, y), y) is just x: the shortest witness has one
        // instruction, beating the three-instruction reference.
        let p = Program {
            arity: 2,
            out_count: 1,
            width: 8,
            constants: vec![],
            body: vec![
                instr(Opcode::Xor, &[Operand::Input(0), Operand::Input(1)]),
                instr(Opcode::Xor, &[Operand::Input(1), Operand::Temp(0)]),
            ],
        };
        let f = encode_superopt(&p, "P").unwrap();
        let res = solve(&f.skolemize(), &SolverConfig::default()).unwrap();
        let Verdict::Sat { witnesses } = &res.verdict else {
            panic!("expected sat, got {:?}", res.verdict);
        };
        assert_eq!(res.stats.minimal_solution_length, Some(1));
        for x in 0..=255u64 {
            for y in [0u64, 1, 17, 128, 255] {
                assert_eq!(witnesses[0].exec(&[x, y]).unwrap()[0], x);
            }
        }
    }
}
