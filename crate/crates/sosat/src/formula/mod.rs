//! Second-order formulas over bitvector words.
//!
//! A formula `∃S1..Sm . Q1 x1 .. Qn xn . body` existentially quantifies
//! word-function symbols `Si`, then quantifies first-order word variables
//! with an arbitrary ∀/∃ prefix, over a quantifier-free body mixing the
//! program language's operators, boolean connectives, and applications of
//! the function symbols. [`skolemize`](SOSFormula::skolemize) eliminates the
//! first-order existentials, producing a [`SynthesisInstance`] whose only
//! first-order quantifiers are universal — the form the synthesis loop
//! consumes.
//!
//! Widths: a formula fixes one default width `W`. Variables may pin an
//! explicit width, but function inputs and outputs always track the *active*
//! width, which the solver walks from small values up to `W`; mixing pinned
//! variables into function applications away from their pinned width is an
//! evaluation-time error.

mod eval;
pub(crate) mod parse;

pub use eval::{BodyEvaluator, CompiledBody, EvalError, evaluate_body};
pub(crate) use eval::{Node, NodeWidth};
pub use parse::parse_formula;

use crate::lang::{MAX_WIDTH, MIN_WIDTH, Opcode, Word};
use std::collections::BTreeMap;
use std::collections::btree_map::Entry;
use thiserror::Error;

/// Most function applications any instance may use; keeps evaluation buffers
/// stack-allocated.
pub const MAX_FUNCTION_ARITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Output read as a truth value (nonzero = true); exactly one output.
    Predicate,
    /// Output read as words.
    Function,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionSignature {
    pub name: String,
    pub arity: usize,
    pub out_count: usize,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// One first-order variable in the quantifier prefix. `width` of `None`
/// tracks the formula's width (and the solver's active width during search).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FirstOrderVar {
    pub quantifier: Quantifier,
    pub name: String,
    pub width: Option<u32>,
}

/// Boolean connectives over truth values. Distinct from the bitwise opcodes:
/// these read operands as truths and yield 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connective {
    And,
    Or,
    Not,
    Implies,
    Iff,
}

impl Connective {
    pub fn name(self) -> &'static str {
        match self {
            Connective::And => "band",
            Connective::Or => "bor",
            Connective::Not => "bnot",
            Connective::Implies => "bimplies",
            Connective::Iff => "biff",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyExpr {
    /// Word literal; adapts its width to context and is masked there.
    Lit(u64),
    /// First-order variable reference.
    Var(String),
    /// Program-language operator applied to same-width operands.
    Op(Opcode, Vec<BodyExpr>),
    /// Boolean connective over truths. `And`/`Or` are variadic (≥ 1).
    Bool(Connective, Vec<BodyExpr>),
    /// Application of a function symbol, selecting one output word.
    App { name: String, proj: usize, args: Vec<BodyExpr> },
}

impl BodyExpr {
    pub fn lit(v: u64) -> BodyExpr {
        BodyExpr::Lit(v)
    }

    pub fn var(name: &str) -> BodyExpr {
        BodyExpr::Var(name.to_string())
    }

    pub fn op(op: Opcode, args: Vec<BodyExpr>) -> BodyExpr {
        BodyExpr::Op(op, args)
    }

    pub fn band(args: Vec<BodyExpr>) -> BodyExpr {
        BodyExpr::Bool(Connective::And, args)
    }

    pub fn bor(args: Vec<BodyExpr>) -> BodyExpr {
        BodyExpr::Bool(Connective::Or, args)
    }

    pub fn bnot(a: BodyExpr) -> BodyExpr {
        BodyExpr::Bool(Connective::Not, vec![a])
    }

    pub fn bimplies(a: BodyExpr, b: BodyExpr) -> BodyExpr {
        BodyExpr::Bool(Connective::Implies, vec![a, b])
    }

    pub fn biff(a: BodyExpr, b: BodyExpr) -> BodyExpr {
        BodyExpr::Bool(Connective::Iff, vec![a, b])
    }

    pub fn app(name: &str, args: Vec<BodyExpr>) -> BodyExpr {
        BodyExpr::App { name: name.to_string(), proj: 0, args }
    }

    pub fn app_proj(name: &str, proj: usize, args: Vec<BodyExpr>) -> BodyExpr {
        BodyExpr::App { name: name.to_string(), proj, args }
    }

    /// Replace every reference to variable `from` with `to`.
    pub(crate) fn substitute_var(&self, from: &str, to: &BodyExpr) -> BodyExpr {
        match self {
            BodyExpr::Lit(_) => self.clone(),
            BodyExpr::Var(n) => {
                if n == from {
                    to.clone()
                } else {
                    self.clone()
                }
            }
            BodyExpr::Op(op, args) => BodyExpr::Op(
                *op,
                args.iter().map(|a| a.substitute_var(from, to)).collect(),
            ),
            BodyExpr::Bool(c, args) => BodyExpr::Bool(
                *c,
                args.iter().map(|a| a.substitute_var(from, to)).collect(),
            ),
            BodyExpr::App { name, proj, args } => BodyExpr::App {
                name: name.clone(),
                proj: *proj,
                args: args.iter().map(|a| a.substitute_var(from, to)).collect(),
            },
        }
    }

    pub(crate) fn visit<'a>(&'a self, f: &mut impl FnMut(&'a BodyExpr)) {
        f(self);
        match self {
            BodyExpr::Lit(_) | BodyExpr::Var(_) => {}
            BodyExpr::Op(_, args) | BodyExpr::Bool(_, args) => {
                for a in args {
                    a.visit(f);
                }
            }
            BodyExpr::App { args, .. } => {
                for a in args {
                    a.visit(f);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SOSFormula {
    pub second_order: Vec<FunctionSignature>,
    pub first_order: Vec<FirstOrderVar>,
    pub body: BodyExpr,
    pub default_width: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("projection {proj} out of range for `{name}` with {out_count} outputs")]
    ProjectionOutOfRange { name: String, proj: usize, out_count: usize },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("width {0} outside supported range")]
    WidthOutOfRange(u32),
    #[error("function `{name}`: {message}")]
    BadSignature { name: String, message: String },
}

impl SOSFormula {
    /// Structural well-formedness: widths in range, declarations unique,
    /// every body reference resolves with matching arity/projection.
    pub fn validate(&self) -> Result<(), FormulaError> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&self.default_width) {
            return Err(FormulaError::WidthOutOfRange(self.default_width));
        }
        let mut names = BTreeMap::new();
        for sig in &self.second_order {
            if sig.out_count == 0 {
                return Err(FormulaError::BadSignature {
                    name: sig.name.clone(),
                    message: "needs at least one output".into(),
                });
            }
            if sig.role == Role::Predicate && sig.out_count != 1 {
                return Err(FormulaError::BadSignature {
                    name: sig.name.clone(),
                    message: "a predicate has exactly one output".into(),
                });
            }
            if sig.arity > MAX_FUNCTION_ARITY {
                return Err(FormulaError::BadSignature {
                    name: sig.name.clone(),
                    message: format!("arity exceeds the supported maximum {MAX_FUNCTION_ARITY}"),
                });
            }
            if names.insert(sig.name.clone(), sig.arity).is_some() {
                return Err(FormulaError::Duplicate(sig.name.clone()));
            }
        }
        let mut vars = BTreeMap::new();
        for v in &self.first_order {
            if let Some(w) = v.width {
                if !(MIN_WIDTH..=MAX_WIDTH).contains(&w) {
                    return Err(FormulaError::WidthOutOfRange(w));
                }
            }
            if names.contains_key(&v.name) {
                return Err(FormulaError::Duplicate(v.name.clone()));
            }
            if vars.insert(v.name.clone(), ()).is_some() {
                return Err(FormulaError::Duplicate(v.name.clone()));
            }
        }
        let sigs: BTreeMap<&str, &FunctionSignature> =
            self.second_order.iter().map(|s| (s.name.as_str(), s)).collect();
        let mut err = None;
        self.body.visit(&mut |e| {
            if err.is_some() {
                return;
            }
            match e {
                BodyExpr::Var(n) => {
                    if !vars.contains_key(n) {
                        err = Some(FormulaError::UnknownSymbol(n.clone()));
                    }
                }
                BodyExpr::Op(op, args) => {
                    if args.len() != op.arity() {
                        err = Some(FormulaError::ArityMismatch {
                            name: op.name().into(),
                            expected: op.arity(),
                            got: args.len(),
                        });
                    }
                }
                BodyExpr::Bool(c, args) => {
                    let expected = match c {
                        Connective::And | Connective::Or => args.len().max(1),
                        Connective::Not => 1,
                        Connective::Implies | Connective::Iff => 2,
                    };
                    if args.len() != expected || args.is_empty() {
                        err = Some(FormulaError::ArityMismatch {
                            name: c.name().into(),
                            expected,
                            got: args.len(),
                        });
                    }
                }
                BodyExpr::App { name, proj, args } => match sigs.get(name.as_str()) {
                    None => err = Some(FormulaError::UnknownSymbol(name.clone())),
                    Some(sig) => {
                        if args.len() != sig.arity {
                            err = Some(FormulaError::ArityMismatch {
                                name: name.clone(),
                                expected: sig.arity,
                                got: args.len(),
                            });
                        } else if *proj >= sig.out_count {
                            err = Some(FormulaError::ProjectionOutOfRange {
                                name: name.clone(),
                                proj: *proj,
                                out_count: sig.out_count,
                            });
                        }
                    }
                },
                BodyExpr::Lit(_) => {}
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Same formula solved at a different target width.
    pub fn with_width(&self, width: u32) -> SOSFormula {
        SOSFormula { default_width: width, ..self.clone() }
    }

    /// Eliminate first-order existentials: each ∃y after universals
    /// u1..uk becomes a fresh function symbol applied to (u1..uk); an ∃
    /// before any universal becomes an arity-0 symbol. The result quantifies
    /// only universally over first-order variables.
    pub fn skolemize(&self) -> SynthesisInstance {
        let mut functions = self.second_order.clone();
        let mut taken: Vec<String> = functions.iter().map(|s| s.name.clone()).collect();
        taken.extend(self.first_order.iter().map(|v| v.name.clone()));
        let mut universals: Vec<UniversalVar> = Vec::new();
        let mut body = self.body.clone();
        for v in &self.first_order {
            match v.quantifier {
                Quantifier::Forall => {
                    universals.push(UniversalVar { name: v.name.clone(), width: v.width });
                }
                Quantifier::Exists => {
                    let mut name = format!("sk_{}", v.name);
                    while taken.contains(&name) {
                        name.push('_');
                    }
                    taken.push(name.clone());
                    let args: Vec<BodyExpr> =
                        universals.iter().map(|u| BodyExpr::Var(u.name.clone())).collect();
                    let replacement =
                        BodyExpr::App { name: name.clone(), proj: 0, args };
                    body = body.substitute_var(&v.name, &replacement);
                    functions.push(FunctionSignature {
                        name,
                        arity: universals.len(),
                        out_count: 1,
                        role: Role::Function,
                    });
                }
            }
        }
        let default_width = self.default_width;
        let input_bits = universals
            .iter()
            .map(|u| u.width.unwrap_or(default_width) as usize)
            .sum();
        SynthesisInstance { functions, universals, body, default_width, input_bits }
    }
}

/// One universally quantified input variable of a synthesis instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalVar {
    pub name: String,
    pub width: Option<u32>,
}

impl UniversalVar {
    pub fn width_at(&self, active_width: u32) -> u32 {
        self.width.unwrap_or(active_width)
    }
}

/// The Skolemized form: find programs for every function symbol such that
/// the body holds for all values of the universals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisInstance {
    pub functions: Vec<FunctionSignature>,
    pub universals: Vec<UniversalVar>,
    pub body: BodyExpr,
    pub default_width: u32,
    /// Total input bits at the default width.
    pub input_bits: usize,
}

impl SynthesisInstance {
    /// Total bits of all universals with the given active width substituted
    /// for unpinned variables.
    pub fn input_bit_count(&self, active_width: u32) -> usize {
        self.universals.iter().map(|u| u.width_at(active_width) as usize).sum()
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }
}

/// A point of the universal domain: one word per universal variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<String, Word>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment { values: BTreeMap::new() }
    }

    pub fn set(&mut self, name: &str, word: Word) {
        self.values.insert(name.to_string(), word);
    }

    pub fn get(&self, name: &str) -> Option<Word> {
        self.values.get(name).copied()
    }

    /// Build from raw values listed in the instance's universal order.
    pub fn from_values(
        instance: &SynthesisInstance,
        active_width: u32,
        values: &[u64],
    ) -> Assignment {
        debug_assert_eq!(values.len(), instance.universals.len());
        let mut a = Assignment::new();
        for (u, &v) in instance.universals.iter().zip(values) {
            a.set(&u.name, Word::new(v, u.width_at(active_width)));
        }
        a
    }

    /// Raw values in the instance's universal order; `None` if a variable is
    /// missing.
    pub fn to_values(&self, instance: &SynthesisInstance) -> Option<Vec<u64>> {
        instance
            .universals
            .iter()
            .map(|u| self.values.get(&u.name).map(|w| w.value))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Word)> {
        self.values.iter().map(|(n, w)| (n.as_str(), *w))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for Assignment {
    fn default() -> Self {
        Assignment::new()
    }
}

impl std::fmt::Display for Assignment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (n, w) in &self.values {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{n}={w}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromIterator<(String, Word)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, Word)>>(iter: T) -> Self {
        let mut a = Assignment::new();
        for (n, w) in iter {
            match a.values.entry(n) {
                Entry::Vacant(e) => {
                    e.insert(w);
                }
                Entry::Occupied(mut e) => {
                    e.insert(w);
                }
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_relation() -> SOSFormula {
        SOSFormula {
            second_order: vec![FunctionSignature {
                name: "S".into(),
                arity: 2,
                out_count: 1,
                role: Role::Predicate,
            }],
            first_order: vec![
                FirstOrderVar { quantifier: Quantifier::Forall, name: "x1".into(), width: None },
                FirstOrderVar { quantifier: Quantifier::Forall, name: "x2".into(), width: None },
            ],
            body: BodyExpr::bimplies(
                BodyExpr::app("S", vec![BodyExpr::var("x1"), BodyExpr::var("x2")]),
                BodyExpr::app("S", vec![BodyExpr::var("x2"), BodyExpr::var("x1")]),
            ),
            default_width: 8,
        }
    }

    #[test]
    fn validate_accepts_the_symmetric_relation() {
        assert!(symmetric_relation().validate().is_ok());
    }

    #[test]
    fn validate_rejects_unknown_symbols_and_bad_arity() {
        let mut f = symmetric_relation();
        f.body = BodyExpr::app("T", vec![BodyExpr::var("x1")]);
        assert_eq!(f.validate(), Err(FormulaError::UnknownSymbol("T".into())));

        let mut f = symmetric_relation();
        f.body = BodyExpr::app("S", vec![BodyExpr::var("x1")]);
        assert_eq!(
            f.validate(),
            Err(FormulaError::ArityMismatch { name: "S".into(), expected: 2, got: 1 })
        );

        let mut f = symmetric_relation();
        f.body = BodyExpr::app_proj("S", 1, vec![BodyExpr::var("x1"), BodyExpr::var("x2")]);
        assert!(matches!(f.validate(), Err(FormulaError::ProjectionOutOfRange { .. })));

        let mut f = symmetric_relation();
        f.body = BodyExpr::var("zz");
        assert_eq!(f.validate(), Err(FormulaError::UnknownSymbol("zz".into())));
    }

    #[test]
    fn validate_rejects_duplicates_and_bad_widths() {
        let mut f = symmetric_relation();
        f.first_order.push(FirstOrderVar {
            quantifier: Quantifier::Forall,
            name: "x1".into(),
            width: None,
        });
        assert_eq!(f.validate(), Err(FormulaError::Duplicate("x1".into())));

        let mut f = symmetric_relation();
        f.default_width = 65;
        assert_eq!(f.validate(), Err(FormulaError::WidthOutOfRange(65)));

        let mut f = symmetric_relation();
        f.second_order[0].role = Role::Predicate;
        f.second_order[0].out_count = 2;
        assert!(matches!(f.validate(), Err(FormulaError::BadSignature { .. })));
    }

    #[test]
    fn skolemize_is_identity_on_purely_universal_prefixes() {
        let f = symmetric_relation();
        let inst = f.skolemize();
        assert_eq!(inst.functions, f.second_order);
        assert_eq!(inst.body, f.body);
        assert_eq!(inst.universals.len(), 2);
        assert_eq!(inst.input_bits, 16);
        assert_eq!(inst.input_bit_count(1), 2);
    }

    #[test]
    fn skolemize_turns_trailing_exists_into_a_function_of_preceding_universals() {
        // ∃S.∀x.∃y. S(x, y)  →  ∃S, sk_y.∀x. S(x, sk_y(x))
        let f = SOSFormula {
            second_order: vec![FunctionSignature {
                name: "S".into(),
                arity: 2,
                out_count: 1,
                role: Role::Predicate,
            }],
            first_order: vec![
                FirstOrderVar { quantifier: Quantifier::Forall, name: "x".into(), width: None },
                FirstOrderVar { quantifier: Quantifier::Exists, name: "y".into(), width: None },
            ],
            body: BodyExpr::app("S", vec![BodyExpr::var("x"), BodyExpr::var("y")]),
            default_width: 8,
        };
        let inst = f.skolemize();
        assert_eq!(inst.functions.len(), 2);
        assert_eq!(inst.functions[1].name, "sk_y");
        assert_eq!(inst.functions[1].arity, 1);
        assert_eq!(inst.functions[1].out_count, 1);
        assert_eq!(inst.universals.len(), 1);
        assert_eq!(
            inst.body,
            BodyExpr::app(
                "S",
                vec![BodyExpr::var("x"), BodyExpr::app("sk_y", vec![BodyExpr::var("x")])]
            )
        );
    }

    #[test]
    fn skolemize_makes_leading_exists_an_arity_zero_symbol() {
        // ∃y.∀x. le(y, x)  →  ∃sk_y.∀x. le(sk_y(), x)
        let f = SOSFormula {
            second_order: vec![],
            first_order: vec![
                FirstOrderVar { quantifier: Quantifier::Exists, name: "y".into(), width: None },
                FirstOrderVar { quantifier: Quantifier::Forall, name: "x".into(), width: None },
            ],
            body: BodyExpr::op(Opcode::Le, vec![BodyExpr::var("y"), BodyExpr::var("x")]),
            default_width: 4,
        };
        let inst = f.skolemize();
        assert_eq!(inst.functions.len(), 1);
        assert_eq!(inst.functions[0].arity, 0);
        assert_eq!(
            inst.body,
            BodyExpr::op(
                Opcode::Le,
                vec![BodyExpr::app("sk_y", vec![]), BodyExpr::var("x")]
            )
        );
        assert_eq!(inst.input_bits, 4);
    }

    #[test]
    fn skolem_names_avoid_collisions() {
        let f = SOSFormula {
            second_order: vec![FunctionSignature {
                name: "sk_y".into(),
                arity: 0,
                out_count: 1,
                role: Role::Function,
            }],
            first_order: vec![
                FirstOrderVar { quantifier: Quantifier::Exists, name: "y".into(), width: None },
                FirstOrderVar { quantifier: Quantifier::Forall, name: "x".into(), width: None },
            ],
            body: BodyExpr::op(
                Opcode::Eq,
                vec![BodyExpr::var("y"), BodyExpr::app("sk_y", vec![])],
            ),
            default_width: 2,
        };
        let inst = f.skolemize();
        assert_eq!(inst.functions.len(), 2);
        assert_eq!(inst.functions[1].name, "sk_y_");
    }

    #[test]
    fn assignments_round_trip_values() {
        let inst = symmetric_relation().skolemize();
        let a = Assignment::from_values(&inst, 8, &[3, 250]);
        assert_eq!(a.get("x1"), Some(Word::new(3, 8)));
        assert_eq!(a.get("x2"), Some(Word::new(250, 8)));
        assert_eq!(a.to_values(&inst), Some(vec![3, 250]));
        assert_eq!(format!("{a}"), "x1=3w8 x2=250w8");
    }
}
