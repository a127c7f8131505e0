//! Candidate verification and constant generalisation.
//!
//! Verification decides whether a candidate tuple satisfies the body for
//! *every* assignment of the universals at a given width. Small input spaces
//! get seeded random probes followed by a complete exhaustive sweep; larger
//! spaces are decided by encoding the negated body over fresh input words
//! and asking a SAT backend for a counterexample — a model is a
//! counterexample, unsatisfiability is a proof of validity. Both routes are
//! held to agree by tests.
//!
//! Constant generalisation lifts a candidate that is correct at a small
//! width to the full width by rewriting its constants under a fixed rule
//! list (value preservation, zero/sign extension, all-ones, the sign bit,
//! width-derived values, bit-pattern tiling), trying rule combinations
//! slot-by-slot under a trial cap, and fully re-verifying every attempt at
//! the full width.

use crate::formula::{CompiledBody, SynthesisInstance};
use crate::lang::{canonicalize, sign_extend, width_mask, Program};
use crate::sat::circuit::{not, Circuit, WordBits};
use crate::sat::{SatBackend, SatOutcome};
use crate::synth::{encode_body, encode_program, EncodeError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyConfig {
    /// Random probes tried before the exhaustive sweep.
    pub probe_quota: u64,
    /// Input spaces up to 2^this are swept exhaustively.
    pub exhaustive_bits: u32,
    /// Hard ceiling for the sweep when the symbolic route is unavailable.
    pub capable_bits: u32,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { probe_quota: 512, exhaustive_bits: 20, capable_bits: 24, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    ExplicitSweep,
    Symbolic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    /// The candidate satisfies the body on every assignment. For the sweep
    /// route, `visited` is the exact number of assignments checked.
    Valid { mode: VerifyMode, visited: u64 },
    /// `values` assigns each universal (in declaration order) a value that
    /// falsifies the body.
    Counterexample { mode: VerifyMode, values: Vec<u64> },
    /// Verification is out of reach (e.g. unencodable body over a large
    /// input space).
    Unknown { reason: String },
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("evaluation failed during verification: {0}")]
    Eval(#[from] crate::formula::EvalError),
    #[error("SAT backend failed during verification: {0}")]
    Sat(#[from] crate::sat::SatError),
}

pub struct Verifier {
    pub config: VerifyConfig,
    backend: SatBackend,
    evaluator: crate::formula::BodyEvaluator,
}

/// Split a linear index into per-universal values (mixed radix over each
/// universal's width at the active width).
fn index_to_values(instance: &SynthesisInstance, width: u32, mut idx: u64) -> Vec<u64> {
    instance
        .universals
        .iter()
        .map(|u| {
            let bits = u.width_at(width);
            let v = idx & width_mask(bits);
            idx >>= bits;
            v
        })
        .collect()
}

impl Verifier {
    pub fn new(backend: SatBackend, config: VerifyConfig) -> Self {
        Verifier { config, backend, evaluator: crate::formula::BodyEvaluator::new() }
    }

    /// Decide whether `witnesses` satisfy the body for all inputs at `width`.
    /// `salt` decorrelates the random-probe stream across calls.
    pub fn find_counterexample(
        &mut self,
        instance: &SynthesisInstance,
        body: &CompiledBody,
        witnesses: &[Program],
        width: u32,
        salt: u64,
    ) -> Result<VerifyOutcome, VerifyError> {
        // Cheap seeded probes run first on every route: most wrong
        // candidates die here without touching the solver.
        if let Some(cex) = self.probe(instance, body, witnesses, width, salt)? {
            return Ok(VerifyOutcome::Counterexample {
                mode: VerifyMode::ExplicitSweep,
                values: cex,
            });
        }
        let n = instance.input_bit_count(width) as u32;
        if n <= self.config.exhaustive_bits {
            return self.sweep(instance, body, witnesses, width);
        }
        match self.symbolic(instance, body, witnesses, width) {
            Ok(outcome) => Ok(outcome),
            Err(EncodeFailure::Encode(_)) if n <= self.config.capable_bits => {
                self.sweep(instance, body, witnesses, width)
            }
            Err(EncodeFailure::Encode(e)) => Ok(VerifyOutcome::Unknown {
                reason: format!("input space 2^{n} with unencodable body: {e}"),
            }),
            Err(EncodeFailure::Sat(e)) => Err(VerifyError::Sat(e)),
        }
    }

    fn probe(
        &mut self,
        instance: &SynthesisInstance,
        body: &CompiledBody,
        witnesses: &[Program],
        width: u32,
        salt: u64,
    ) -> Result<Option<Vec<u64>>, VerifyError> {
        let n = instance.input_bit_count(width) as u32;
        let total = 1u64.checked_shl(n).unwrap_or(u64::MAX);
        let mut rng = ChaCha12Rng::seed_from_u64(self.config.seed ^ salt.rotate_left(17));
        let masks: Vec<u64> =
            instance.universals.iter().map(|u| width_mask(u.width_at(width))).collect();
        for _ in 0..self.config.probe_quota.min(total) {
            let values: Vec<u64> = masks.iter().map(|&m| rng.random::<u64>() & m).collect();
            if !self.evaluator.evaluate(body, witnesses, &values, width)? {
                return Ok(Some(values));
            }
        }
        Ok(None)
    }

    /// A complete sweep in counting order.
    fn sweep(
        &mut self,
        instance: &SynthesisInstance,
        body: &CompiledBody,
        witnesses: &[Program],
        width: u32,
    ) -> Result<VerifyOutcome, VerifyError> {
        let n = instance.input_bit_count(width) as u32;
        let total: u64 = 1u64.checked_shl(n).expect("sweep bound fits u64");
        let mut visited = 0u64;
        for idx in 0..total {
            let values = index_to_values(instance, width, idx);
            visited += 1;
            if !self.evaluator.evaluate(body, witnesses, &values, width)? {
                return Ok(VerifyOutcome::Counterexample {
                    mode: VerifyMode::ExplicitSweep,
                    values,
                });
            }
        }
        debug_assert_eq!(visited, total);
        Ok(VerifyOutcome::Valid { mode: VerifyMode::ExplicitSweep, visited })
    }

    /// Encode ¬body over fresh input words; a model is a counterexample.
    fn symbolic(
        &mut self,
        instance: &SynthesisInstance,
        body: &CompiledBody,
        witnesses: &[Program],
        width: u32,
    ) -> Result<VerifyOutcome, EncodeFailure> {
        let mut circuit = Circuit::new();
        let var_words: Vec<WordBits> = instance
            .universals
            .iter()
            .map(|u| circuit.fresh_word(u.width_at(width)))
            .collect();
        let mut app = |c: &mut Circuit,
                       func: usize,
                       args: &[WordBits]|
         -> Result<Vec<WordBits>, EncodeError> { encode_program(c, &witnesses[func], args) };
        let truth = encode_body(&mut circuit, body, &var_words, width, &mut app)
            .map_err(EncodeFailure::Encode)?;
        circuit.assert_bit(not(truth));
        match self.backend.solve(&circuit.cnf).map_err(EncodeFailure::Sat)? {
            SatOutcome::Unsat => Ok(VerifyOutcome::Valid { mode: VerifyMode::Symbolic, visited: 0 }),
            SatOutcome::Sat(model) => {
                let values: Vec<u64> =
                    var_words.iter().map(|wb| Circuit::word_value(&model, wb)).collect();
                Ok(VerifyOutcome::Counterexample { mode: VerifyMode::Symbolic, values })
            }
        }
    }
}

enum EncodeFailure {
    Encode(EncodeError),
    Sat(crate::sat::SatError),
}

/// The fixed constant-lifting rules, applied in this order. Each maps a
/// constant value at width `w` to a candidate value at width `big_w`;
/// inapplicable rules yield nothing.
fn lift_options(v: u64, w: u32, big_w: u32) -> Vec<u64> {
    let small_mask = width_mask(w);
    let big_mask = width_mask(big_w);
    let mut out: Vec<u64> = Vec::new();
    let push = |x: u64, out: &mut Vec<u64>| {
        let x = x & big_mask;
        if !out.contains(&x) {
            out.push(x);
        }
    };
    // Value preservation and zero extension coincide in this representation.
    push(v, &mut out);
    push(v, &mut out);
    push(sign_extend(v, w) as u64, &mut out);
    if v == small_mask {
        push(big_mask, &mut out);
    }
    if v == 1 << (w - 1) {
        push(1 << (big_w - 1), &mut out);
    }
    if v == u64::from(w) - 1 {
        push(u64::from(big_w) - 1, &mut out);
    }
    if v == u64::from(w) {
        push(u64::from(big_w), &mut out);
    }
    // Bit-pattern tiling: repeat the w-bit pattern to fill big_w.
    let mut tiled = 0u64;
    let mut shift = 0u32;
    while shift < big_w {
        tiled |= v << shift;
        shift += w;
    }
    push(tiled, &mut out);
    out
}

/// Lift a candidate verified at width `w` to width `big_w` by rewriting its
/// constants under the rule list, trying combinations (last slot fastest)
/// under `trial_cap`, and fully re-verifying each attempt. The all-preserve
/// combination is skipped: the caller has already verified it failed.
#[allow(clippy::too_many_arguments)]
pub fn generalize_constants(
    verifier: &mut Verifier,
    instance: &SynthesisInstance,
    body: &CompiledBody,
    witnesses: &[Program],
    w: u32,
    big_w: u32,
    trial_cap: u64,
    salt: u64,
) -> Result<Option<Vec<Program>>, VerifyError> {
    debug_assert!(w < big_w);
    // Collect every constant slot across the tuple.
    let slots: Vec<(usize, usize)> = witnesses
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (0..p.constants.len()).map(move |ci| (pi, ci)))
        .collect();
    let options: Vec<Vec<u64>> = slots
        .iter()
        .map(|&(pi, ci)| lift_options(witnesses[pi].constants[ci], w, big_w))
        .collect();
    if slots.is_empty() {
        // No constants to rewrite: the only lift is value preservation,
        // which the caller already saw fail.
        return Ok(None);
    }
    let mut digits = vec![0usize; slots.len()];
    let mut trials = 0u64;
    'combos: loop {
        // Advance first: combination 0 (all value-preserving) is skipped.
        let mut i = digits.len();
        loop {
            if i == 0 {
                break 'combos;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < options[i].len() {
                break;
            }
            digits[i] = 0;
        }
        if trials >= trial_cap {
            break;
        }
        trials += 1;
        // Build the lifted tuple.
        let mut lifted: Vec<Program> = witnesses.to_vec();
        for p in lifted.iter_mut() {
            p.width = big_w;
        }
        for (si, &(pi, ci)) in slots.iter().enumerate() {
            lifted[pi].constants[ci] = options[si][digits[si]];
        }
        // Rewrites can collide constants; restore canonical form.
        let mut repaired = Vec::with_capacity(lifted.len());
        let mut ok = true;
        for p in &lifted {
            if p.body.is_empty() {
                repaired.push(p.clone());
                continue;
            }
            match canonicalize(p) {
                Some(cp) => repaired.push(cp),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        match verifier.find_counterexample(instance, body, &repaired, big_w, salt ^ trials)? {
            VerifyOutcome::Valid { .. } => return Ok(Some(repaired)),
            VerifyOutcome::Counterexample { .. } | VerifyOutcome::Unknown { .. } => {}
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{
        BodyExpr, CompiledBody, FirstOrderVar, FunctionSignature, Quantifier, Role, SOSFormula,
        SynthesisInstance,
    };
    use crate::lang::{parse_program, Opcode};

    fn instance(funcs: Vec<(&str, usize)>, vars: usize, body: BodyExpr, w: u32) -> SynthesisInstance {
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

    fn eq_fx_x(w: u32) -> SynthesisInstance {
        instance(
            vec![("F", 1)],
            1,
            BodyExpr::op(
                Opcode::Eq,
                vec![BodyExpr::app("F", vec![BodyExpr::var("x0")]), BodyExpr::var("x0")],
            ),
            w,
        )
    }

    #[test]
    fn sweep_validates_a_correct_witness_and_counts_every_assignment() {
        let w = 6u32;
        let inst = eq_fx_x(w);
        let body = CompiledBody::compile(&inst).unwrap();
        let identity = parse_program("prog 1 1 6 consts\nt0 = max x0 x0\n").unwrap();
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        match v.find_counterexample(&inst, &body, &[identity], w, 1).unwrap() {
            VerifyOutcome::Valid { mode: VerifyMode::ExplicitSweep, visited } => {
                assert_eq!(visited, 64);
            }
            other => panic!("expected valid sweep, got {other:?}"),
        }
    }

    #[test]
    fn sweep_finds_a_counterexample_for_a_wrong_witness() {
        let w = 4u32;
        let inst = eq_fx_x(w);
        let body = CompiledBody::compile(&inst).unwrap();
        // F(x) = x & 7: wrong exactly on inputs with the top bit set.
        let masked = parse_program("prog 1 1 4 consts 7\nt0 = and x0 c0\n").unwrap();
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        match v.find_counterexample(&inst, &body, &[masked], w, 2).unwrap() {
            VerifyOutcome::Counterexample { values, .. } => {
                assert_eq!(values.len(), 1);
                assert!(values[0] & 8 != 0, "cex must have the top bit set: {values:?}");
            }
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_gives_identical_counterexamples() {
        let w = 8u32;
        let inst = eq_fx_x(w);
        let body = CompiledBody::compile(&inst).unwrap();
        let wrong = parse_program("prog 1 1 8 consts 1\nt0 = add x0 c0\n").unwrap();
        let mut a = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let mut b = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let ra = a.find_counterexample(&inst, &body, &[wrong.clone()], w, 7).unwrap();
        let rb = b.find_counterexample(&inst, &body, &[wrong], w, 7).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn symbolic_route_agrees_with_the_sweep() {
        let w = 5u32;
        let inst = eq_fx_x(w);
        let body = CompiledBody::compile(&inst).unwrap();
        let identity = parse_program("prog 1 1 5 consts\nt0 = max x0 x0\n").unwrap();
        let wrong = parse_program("prog 1 1 5 consts 1\nt0 = add x0 c0\n").unwrap();
        let mut sweep = Verifier::new(
            SatBackend::Builtin,
            VerifyConfig { exhaustive_bits: 20, ..VerifyConfig::default() },
        );
        let mut symb = Verifier::new(
            SatBackend::Builtin,
            VerifyConfig { exhaustive_bits: 0, ..VerifyConfig::default() },
        );
        for witness in [identity, wrong] {
            let rs = sweep.find_counterexample(&inst, &body, &[witness.clone()], w, 3).unwrap();
            let ry = symb.find_counterexample(&inst, &body, &[witness], w, 3).unwrap();
            let valid_s = matches!(rs, VerifyOutcome::Valid { .. });
            let valid_y = matches!(ry, VerifyOutcome::Valid { .. });
            assert_eq!(valid_s, valid_y, "sweep {rs:?} vs symbolic {ry:?}");
            if let VerifyOutcome::Counterexample { values, .. } = ry {
                // The symbolic counterexample must falsify the body.
                let mut ev = crate::formula::BodyEvaluator::new();
                let wrong = parse_program("prog 1 1 5 consts 1\nt0 = add x0 c0\n").unwrap();
                assert!(!ev.evaluate(&body, &[wrong], &values, w).unwrap());
            }
        }
    }

    #[test]
    fn symbolic_race_matches_sweep_on_two_variable_bodies() {
        let w = 6u32; // 12 input bits across two variables
        let inst = instance(
            vec![("F", 2)],
            2,
            BodyExpr::op(
                Opcode::Eq,
                vec![
                    BodyExpr::app("F", vec![BodyExpr::var("x0"), BodyExpr::var("x1")]),
                    BodyExpr::op(Opcode::Max, vec![BodyExpr::var("x0"), BodyExpr::var("x1")]),
                ],
            ),
            w,
        );
        let body = CompiledBody::compile(&inst).unwrap();
        let candidates = [
            parse_program("prog 2 1 6 consts\nt0 = max x0 x1\n").unwrap(),
            parse_program("prog 2 1 6 consts\nt0 = min x0 x1\n").unwrap(),
            parse_program("prog 2 1 6 consts\nt0 = or x0 x1\n").unwrap(),
        ];
        let mut sweep = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let mut symb = Verifier::new(
            SatBackend::Builtin,
            VerifyConfig { exhaustive_bits: 0, ..VerifyConfig::default() },
        );
        for cand in candidates {
            let rs = sweep.find_counterexample(&inst, &body, &[cand.clone()], w, 5).unwrap();
            let ry = symb.find_counterexample(&inst, &body, &[cand], w, 5).unwrap();
            assert_eq!(
                matches!(rs, VerifyOutcome::Valid { .. }),
                matches!(ry, VerifyOutcome::Valid { .. }),
                "sweep {rs:?} vs symbolic {ry:?}"
            );
        }
    }

    #[test]
    fn ground_instances_sweep_exactly_one_assignment() {
        let inst = instance(
            vec![("v", 0)],
            0,
            BodyExpr::op(Opcode::Eq, vec![BodyExpr::app("v", vec![]), BodyExpr::lit(3)]),
            4,
        );
        let body = CompiledBody::compile(&inst).unwrap();
        let right = Program::degenerate(0, 4, vec![3]);
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        match v.find_counterexample(&inst, &body, &[right], 4, 0).unwrap() {
            VerifyOutcome::Valid { visited, .. } => assert_eq!(visited, 1),
            other => panic!("expected valid, got {other:?}"),
        }
    }

    #[test]
    fn all_ones_rule_lifts_where_value_preservation_fails() {
        // not(F()) == 0 forces F() = all-ones at every width.
        let inst8 = instance(
            vec![("v", 0)],
            0,
            BodyExpr::op(
                Opcode::Eq,
                vec![
                    BodyExpr::op(Opcode::Not, vec![BodyExpr::app("v", vec![])]),
                    BodyExpr::lit(0),
                ],
            ),
            8,
        );
        let body = CompiledBody::compile(&inst8).unwrap();
        let small = Program::degenerate(0, 4, vec![15]); // correct at w = 4
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        // Value preservation fails at 8 bits (not(15) = 240 != 0)…
        let preserved = Program::degenerate(0, 8, vec![15]);
        assert!(matches!(
            v.find_counterexample(&inst8, &body, &[preserved], 8, 0).unwrap(),
            VerifyOutcome::Counterexample { .. }
        ));
        // …but generalisation finds the all-ones lift.
        let lifted = generalize_constants(&mut v, &inst8, &body, &[small], 4, 8, 4096, 0)
            .unwrap()
            .expect("all-ones rule applies");
        assert_eq!(lifted[0].constants, vec![255]);
    }

    #[test]
    fn sign_bit_rule_lifts_the_half_range_constant() {
        // F() + F() == 0 and F() != 0 forces the sign bit at every width.
        let inst8 = instance(
            vec![("v", 0)],
            0,
            BodyExpr::band(vec![
                BodyExpr::op(
                    Opcode::Eq,
                    vec![
                        BodyExpr::op(
                            Opcode::Add,
                            vec![BodyExpr::app("v", vec![]), BodyExpr::app("v", vec![])],
                        ),
                        BodyExpr::lit(0),
                    ],
                ),
                BodyExpr::op(
                    Opcode::Neq,
                    vec![BodyExpr::app("v", vec![]), BodyExpr::lit(0)],
                ),
            ]),
            8,
        );
        let body = CompiledBody::compile(&inst8).unwrap();
        let small = Program::degenerate(0, 4, vec![8]); // 2^3 at w = 4
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let lifted = generalize_constants(&mut v, &inst8, &body, &[small], 4, 8, 4096, 1)
            .unwrap()
            .expect("sign-bit rule applies");
        assert_eq!(lifted[0].constants, vec![128]);
    }

    #[test]
    fn tiling_rule_lifts_alternating_masks() {
        // and(x, F()) == and(x, 0b0101…) at the big width: only the tiled
        // mask works.
        let big = 8u32;
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
                    BodyExpr::op(
                        Opcode::And,
                        vec![BodyExpr::var("x0"), BodyExpr::lit(0x55)],
                    ),
                ],
            ),
            big,
        );
        let body = CompiledBody::compile(&inst).unwrap();
        let small = Program::degenerate(0, 4, vec![0x5]);
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let lifted = generalize_constants(&mut v, &inst, &body, &[small], 4, big, 4096, 2)
            .unwrap()
            .expect("tiling rule applies");
        assert_eq!(lifted[0].constants, vec![0x55]);
    }

    #[test]
    fn generalisation_without_constants_returns_none() {
        let inst = eq_fx_x(8);
        let body = CompiledBody::compile(&inst).unwrap();
        let identity = parse_program("prog 1 1 4 consts\nt0 = max x0 x0\n").unwrap();
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        let out = generalize_constants(&mut v, &inst, &body, &[identity], 4, 8, 4096, 3).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn trial_cap_limits_the_search() {
        let inst8 = instance(
            vec![("v", 0)],
            0,
            BodyExpr::op(
                Opcode::Eq,
                vec![
                    BodyExpr::op(Opcode::Not, vec![BodyExpr::app("v", vec![])]),
                    BodyExpr::lit(0),
                ],
            ),
            8,
        );
        let body = CompiledBody::compile(&inst8).unwrap();
        let small = Program::degenerate(0, 4, vec![15]);
        let mut v = Verifier::new(SatBackend::Builtin, VerifyConfig::default());
        // The all-ones option is not first in the slot's list; cap 1 tries
        // only the sign-extension combination (which happens to also give
        // 255 here), so pick a value where sign-extension differs: 15 at
        // w=4 sign-extends to 255 — use a cap of 0 to forbid any trial.
        let none = generalize_constants(&mut v, &inst8, &body, &[small], 4, 8, 0, 4).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn lift_options_follow_the_rule_order() {
        // v=15 at w=4 → big_w=8: preserve 15, sign-extend 255, all-ones 255
        // (dedup), tiling 0xFF (dedup).
        assert_eq!(lift_options(15, 4, 8), vec![15, 255]);
        // v=8 at w=4: preserve 8, sign-extend 0xF8, sign bit 0x80, tiling 0x88.
        assert_eq!(lift_options(8, 4, 8), vec![8, 0xF8, 0x80, 0x88]);
        // v=3 = w-1 at w=4: preserve 3, width-1 rule gives 7, tiling 0x33.
        assert_eq!(lift_options(3, 4, 8), vec![3, 7, 0x33]);
        // v=4 = w at w=4: preserve 4, width rule gives 8, tiling 0x44.
        assert_eq!(lift_options(4, 4, 8), vec![4, 8, 0x44]);
        // v=5 alternating: preserve 5, tiling 0x55.
        assert_eq!(lift_options(5, 4, 8), vec![5, 0x55]);
    }
}
