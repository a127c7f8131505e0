//! Text format for formulas: s-expression forms, one per top-level construct.
//!
//! ```text
//! (width 8)
//! (exists-fun S (arity 2) (out 1) (predicate))
//! (forall x1 x2)
//! (assert (implies (app S x1 x2) (app S x2 x1)))
//! ```
//!
//! Quantifier forms may repeat and interleave; their order fixes the prefix.
//! A variable is an atom, or `(name width)` to pin its width. Multiple
//! asserts conjoin. Operators are the opcode names plus the boolean
//! connectives `band bor bnot bimplies biff`; applications are
//! `(app S e..)` or, selecting output k, `(app-proj k S e..)`. Literals are
//! decimal (optionally negative, wrapping at the use width), `0x` hex, or
//! `true`/`false`. `;` starts a line comment.

use super::{
    BodyExpr, Connective, FirstOrderVar, FormulaError, FunctionSignature, Quantifier, Role,
    SOSFormula,
};
use crate::lang::Opcode;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SExpr {
    Atom(String, usize),
    List(Vec<SExpr>, usize),
}

impl SExpr {
    pub(crate) fn line(&self) -> usize {
        match self {
            SExpr::Atom(_, l) | SExpr::List(_, l) => *l,
        }
    }
}

pub(crate) fn syntax(line: usize, message: impl Into<String>) -> FormulaError {
    FormulaError::Syntax { line, message: message.into() }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<SExpr>, FormulaError> {
    let mut stack: Vec<(Vec<SExpr>, usize)> = vec![(Vec::new(), 0)];
    let mut line = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {}
            '(' => stack.push((Vec::new(), line)),
            ')' => {
                let (items, open_line) = stack.pop().unwrap();
                if stack.is_empty() {
                    return Err(syntax(line, "unbalanced `)`"));
                }
                stack.last_mut().unwrap().0.push(SExpr::List(items, open_line));
            }
            c => {
                let mut atom = String::new();
                atom.push(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    atom.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().0.push(SExpr::Atom(atom, line));
            }
        }
    }
    if stack.len() != 1 {
        return Err(syntax(line, "unbalanced `(`"));
    }
    Ok(stack.pop().unwrap().0)
}

fn parse_number(atom: &str, line: usize) -> Result<u64, FormulaError> {
    let (neg, body) = match atom.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, atom),
    };
    let value = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        body.parse::<u64>()
    }
    .map_err(|_| syntax(line, format!("not a number: `{atom}`")))?;
    Ok(if neg { value.wrapping_neg() } else { value })
}

fn is_number_like(atom: &str) -> bool {
    let body = atom.strip_prefix('-').unwrap_or(atom);
    body.chars().next().is_some_and(|c| c.is_ascii_digit())
}

fn connective_from_name(name: &str) -> Option<Connective> {
    Some(match name {
        "band" => Connective::And,
        "bor" => Connective::Or,
        "bnot" => Connective::Not,
        "bimplies" => Connective::Implies,
        "biff" => Connective::Iff,
        _ => return None,
    })
}

pub(crate) fn parse_expr(sexpr: &SExpr) -> Result<BodyExpr, FormulaError> {
    match sexpr {
        SExpr::Atom(a, line) => {
            if a == "true" {
                Ok(BodyExpr::Lit(1))
            } else if a == "false" {
                Ok(BodyExpr::Lit(0))
            } else if is_number_like(a) {
                Ok(BodyExpr::Lit(parse_number(a, *line)?))
            } else {
                Ok(BodyExpr::Var(a.clone()))
            }
        }
        SExpr::List(items, line) => {
            let Some(SExpr::Atom(head, _)) = items.first() else {
                return Err(syntax(*line, "expected an operator"));
            };
            let rest = &items[1..];
            if head == "app" || head == "app-proj" {
                let (proj, rest) = if head == "app-proj" {
                    let Some(SExpr::Atom(k, kl)) = rest.first() else {
                        return Err(syntax(*line, "app-proj needs an output index"));
                    };
                    (parse_number(k, *kl)? as usize, &rest[1..])
                } else {
                    (0, rest)
                };
                let Some(SExpr::Atom(name, _)) = rest.first() else {
                    return Err(syntax(*line, "application needs a symbol name"));
                };
                let args = rest[1..].iter().map(parse_expr).collect::<Result<_, _>>()?;
                return Ok(BodyExpr::App { name: name.clone(), proj, args });
            }
            let args: Vec<BodyExpr> = rest.iter().map(parse_expr).collect::<Result<_, _>>()?;
            if let Some(c) = connective_from_name(head) {
                let ok = match c {
                    Connective::And | Connective::Or => !args.is_empty(),
                    Connective::Not => args.len() == 1,
                    Connective::Implies | Connective::Iff => args.len() == 2,
                };
                if !ok {
                    return Err(syntax(*line, format!("wrong argument count for `{head}`")));
                }
                return Ok(BodyExpr::Bool(c, args));
            }
            if let Some(op) = Opcode::from_name(head) {
                if args.len() != op.arity() {
                    return Err(syntax(
                        *line,
                        format!("`{head}` expects {} arguments, got {}", op.arity(), args.len()),
                    ));
                }
                return Ok(BodyExpr::Op(op, args));
            }
            Err(syntax(*line, format!("unknown operator `{head}`")))
        }
    }
}

pub(crate) fn expect_atom<'a>(sexpr: &'a SExpr, what: &str) -> Result<&'a str, FormulaError> {
    match sexpr {
        SExpr::Atom(a, _) => Ok(a),
        SExpr::List(_, line) => Err(syntax(*line, format!("expected {what}"))),
    }
}

fn parse_signature(items: &[SExpr], line: usize) -> Result<FunctionSignature, FormulaError> {
    let Some(name_expr) = items.first() else {
        return Err(syntax(line, "exists-fun needs a name"));
    };
    let name = expect_atom(name_expr, "a function name")?.to_string();
    let mut arity = None;
    let mut out_count = 1usize;
    let mut role = Role::Function;
    for item in &items[1..] {
        let SExpr::List(parts, l) = item else {
            return Err(syntax(item.line(), "expected a (keyword ...) clause"));
        };
        let Some(SExpr::Atom(key, _)) = parts.first() else {
            return Err(syntax(*l, "expected a clause keyword"));
        };
        match key.as_str() {
            "arity" => {
                let v = expect_atom(
                    parts.get(1).ok_or_else(|| syntax(*l, "arity needs a number"))?,
                    "a number",
                )?;
                arity = Some(parse_number(v, *l)? as usize);
            }
            "out" => {
                let v = expect_atom(
                    parts.get(1).ok_or_else(|| syntax(*l, "out needs a number"))?,
                    "a number",
                )?;
                out_count = parse_number(v, *l)? as usize;
            }
            "predicate" => role = Role::Predicate,
            "function" => role = Role::Function,
            other => return Err(syntax(*l, format!("unknown clause `{other}`"))),
        }
    }
    let arity = arity.ok_or_else(|| syntax(line, "exists-fun needs an (arity n) clause"))?;
    Ok(FunctionSignature { name, arity, out_count, role })
}

fn parse_quantified_vars(
    items: &[SExpr],
    quantifier: Quantifier,
    out: &mut Vec<FirstOrderVar>,
) -> Result<(), FormulaError> {
    for item in items {
        match item {
            SExpr::Atom(name, _) => out.push(FirstOrderVar {
                quantifier,
                name: name.clone(),
                width: None,
            }),
            SExpr::List(parts, l) => {
                if parts.len() != 2 {
                    return Err(syntax(*l, "expected (name width)"));
                }
                let name = expect_atom(&parts[0], "a variable name")?.to_string();
                let width = parse_number(expect_atom(&parts[1], "a width")?, *l)? as u32;
                out.push(FirstOrderVar { quantifier, name, width: Some(width) });
            }
        }
    }
    Ok(())
}

/// Parse a complete formula file. The result is validated.
pub fn parse_formula(text: &str) -> Result<SOSFormula, FormulaError> {
    let forms = tokenize(text)?;
    let mut width: Option<u32> = None;
    let mut second_order = Vec::new();
    let mut first_order = Vec::new();
    let mut asserts: Vec<BodyExpr> = Vec::new();
    for form in &forms {
        let SExpr::List(items, line) = form else {
            return Err(syntax(form.line(), "expected a (...) form"));
        };
        let Some(SExpr::Atom(head, _)) = items.first() else {
            return Err(syntax(*line, "expected a form keyword"));
        };
        match head.as_str() {
            "width" => {
                if width.is_some() {
                    return Err(syntax(*line, "duplicate (width ...) form"));
                }
                let v = expect_atom(
                    items.get(1).ok_or_else(|| syntax(*line, "width needs a number"))?,
                    "a number",
                )?;
                width = Some(parse_number(v, *line)? as u32);
            }
            "exists-fun" => second_order.push(parse_signature(&items[1..], *line)?),
            "forall" => parse_quantified_vars(&items[1..], Quantifier::Forall, &mut first_order)?,
            "exists" => parse_quantified_vars(&items[1..], Quantifier::Exists, &mut first_order)?,
            "assert" => {
                if items.len() != 2 {
                    return Err(syntax(*line, "assert takes exactly one expression"));
                }
                asserts.push(parse_expr(&items[1])?);
            }
            other => return Err(syntax(*line, format!("unknown form `{other}`"))),
        }
    }
    let default_width =
        width.ok_or_else(|| syntax(0, "missing (width ...) form"))?;
    let body = match asserts.len() {
        0 => return Err(syntax(0, "missing (assert ...) form")),
        1 => asserts.pop().unwrap(),
        _ => BodyExpr::Bool(Connective::And, asserts),
    };
    let formula = SOSFormula { second_order, first_order, body, default_width };
    formula.validate()?;
    Ok(formula)
}

impl std::fmt::Display for BodyExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BodyExpr::Lit(v) => write!(f, "{v}"),
            BodyExpr::Var(n) => f.write_str(n),
            BodyExpr::Op(op, args) => {
                write!(f, "({}", op.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_char(')')
            }
            BodyExpr::Bool(c, args) => {
                write!(f, "({}", c.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_char(')')
            }
            BodyExpr::App { name, proj, args } => {
                if *proj == 0 {
                    write!(f, "(app {name}")?;
                } else {
                    write!(f, "(app-proj {proj} {name}")?;
                }
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_char(')')
            }
        }
    }
}

impl std::fmt::Display for SOSFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "(width {})", self.default_width)?;
        for sig in &self.second_order {
            writeln!(
                f,
                "(exists-fun {} (arity {}) (out {}) ({}))",
                sig.name,
                sig.arity,
                sig.out_count,
                match sig.role {
                    Role::Predicate => "predicate",
                    Role::Function => "function",
                }
            )?;
        }
        let mut i = 0;
        while i < self.first_order.len() {
            let q = self.first_order[i].quantifier;
            let mut j = i;
            while j < self.first_order.len() && self.first_order[j].quantifier == q {
                j += 1;
            }
            write!(f, "({}", if q == Quantifier::Forall { "forall" } else { "exists" })?;
            for v in &self.first_order[i..j] {
                match v.width {
                    None => write!(f, " {}", v.name)?,
                    Some(w) => write!(f, " ({} {w})", v.name)?,
                }
            }
            writeln!(f, ")")?;
            i = j;
        }
        writeln!(f, "(assert {})", self.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SYMMETRIC: &str = "\
(width 8)
(exists-fun S (arity 2) (out 1) (predicate))
(forall x1 x2)
(assert (implies (app S x1 x2) (app S x2 x1)))
";

    #[test]
    fn parses_the_documented_example() {
        let f = parse_formula(SYMMETRIC).unwrap();
        assert_eq!(f.default_width, 8);
        assert_eq!(f.second_order.len(), 1);
        assert_eq!(f.second_order[0].name, "S");
        assert_eq!(f.second_order[0].role, Role::Predicate);
        assert_eq!(f.first_order.len(), 2);
        assert!(f.first_order.iter().all(|v| v.quantifier == Quantifier::Forall));
        assert_eq!(
            f.body,
            BodyExpr::Op(
                Opcode::Implies,
                vec![
                    BodyExpr::app("S", vec![BodyExpr::var("x1"), BodyExpr::var("x2")]),
                    BodyExpr::app("S", vec![BodyExpr::var("x2"), BodyExpr::var("x1")]),
                ]
            )
        );
    }

    #[test]
    fn parses_literals_widths_comments_and_projections() {
        let text = "\
; a comment
(width 4)
(exists-fun F (arity 1) (out 2) (function))
(forall (x 4))
(exists y)
(assert (band (eq (app-proj 1 F x) 0x3) ; trailing comment
              (bnot (eq y -1))
              true))
";
        let f = parse_formula(text).unwrap();
        assert_eq!(f.first_order[0].width, Some(4));
        assert_eq!(f.first_order[1].quantifier, Quantifier::Exists);
        match &f.body {
            BodyExpr::Bool(Connective::And, args) => {
                assert_eq!(args.len(), 3);
                assert!(matches!(
                    &args[0],
                    BodyExpr::Op(Opcode::Eq, eq_args)
                        if matches!(&eq_args[0], BodyExpr::App { proj: 1, .. })
                            && eq_args[1] == BodyExpr::Lit(3)
                ));
                assert!(
                    matches!(&args[1], BodyExpr::Bool(Connective::Not, n)
                        if matches!(&n[0], BodyExpr::Op(Opcode::Eq, e) if e[1] == BodyExpr::Lit(u64::MAX)))
                );
                assert_eq!(args[2], BodyExpr::Lit(1));
            }
            other => panic!("unexpected body {other:?}"),
        }
    }

    #[test]
    fn multiple_asserts_conjoin() {
        let text = "\
(width 2)
(forall x)
(assert (le x 3))
(assert (le 0 x))
";
        let f = parse_formula(text).unwrap();
        assert!(matches!(&f.body, BodyExpr::Bool(Connective::And, args) if args.len() == 2));
    }

    #[test]
    fn rejects_malformed_inputs() {
        let cases: &[(&str, &str)] = &[
            ("(width 8)\n(forall x)", "missing (assert"),
            ("(forall x)\n(assert (eq x x))", "missing (width"),
            ("(width 8)\n(assert (eq y y))", "unknown symbol"),
            ("(width 8)\n(forall x)\n(assert (frob x))", "unknown operator"),
            ("(width 8)\n(forall x)\n(assert (add x))", "expects 2"),
            ("(width 8)\n(forall x)\n(assert (app S x))", "unknown symbol"),
            ("(width 8)\n(forall x)\n(assert (eq x x)", "unbalanced"),
            ("(width 8)\n(width 4)\n(forall x)\n(assert (eq x x))", "duplicate (width"),
            (
                "(width 8)\n(exists-fun S (out 1))\n(forall x)\n(assert (eq x x))",
                "needs an (arity",
            ),
        ];
        for (text, needle) in cases {
            let err = parse_formula(text).unwrap_err();
            let msg = err.to_string();
            assert!(
                msg.contains(needle),
                "input {text:?}: expected error containing {needle:?}, got {msg:?}"
            );
        }
    }

    #[test]
    fn reports_line_numbers() {
        let text = "(width 8)\n(forall x)\n(assert (frob x))\n";
        match parse_formula(text) {
            Err(FormulaError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_formula() -> impl Strategy<Value = SOSFormula> {
        let sig = (0usize..=2, 1usize..=2).prop_map(|(arity, out_count)| FunctionSignature {
            name: String::new(),
            arity,
            out_count,
            role: if out_count == 1 { Role::Predicate } else { Role::Function },
        });
        let sigs = prop::collection::vec(sig, 0..=2).prop_map(|mut sigs| {
            for (i, s) in sigs.iter_mut().enumerate() {
                s.name = format!("f{i}");
            }
            sigs
        });
        let vars = prop::collection::vec(
            (prop::bool::ANY, prop::option::of(1u32..=8)),
            1..=3,
        )
        .prop_map(|specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (uni, width))| FirstOrderVar {
                    quantifier: if uni { Quantifier::Forall } else { Quantifier::Exists },
                    name: format!("v{i}"),
                    width,
                })
                .collect::<Vec<_>>()
        });
        (sigs, vars).prop_flat_map(|(sigs, vars)| {
            let leaf_names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
            let leaf = prop_oneof![
                (0u64..16).prop_map(BodyExpr::Lit),
                prop::sample::select(leaf_names).prop_map(BodyExpr::Var),
            ];
            let sigs_for_tree = sigs.clone();
            let tree = leaf.prop_recursive(3, 24, 3, move |inner| {
                let ops = prop::sample::select(vec![
                    Opcode::Add,
                    Opcode::Eq,
                    Opcode::Le,
                    Opcode::Xor,
                    Opcode::Ite,
                ]);
                let mut choices = vec![
                    (ops, prop::collection::vec(inner.clone(), 1..=3))
                        .prop_map(|(op, mut args)| {
                            args.truncate(op.arity());
                            while args.len() < op.arity() {
                                args.push(BodyExpr::Lit(0));
                            }
                            BodyExpr::Op(op, args)
                        })
                        .boxed(),
                    (
                        prop::sample::select(vec![
                            Connective::And,
                            Connective::Or,
                            Connective::Not,
                            Connective::Implies,
                            Connective::Iff,
                        ]),
                        prop::collection::vec(inner.clone(), 1..=2),
                    )
                        .prop_map(|(c, mut args)| {
                            match c {
                                Connective::Not => args.truncate(1),
                                Connective::Implies | Connective::Iff => {
                                    while args.len() < 2 {
                                        args.push(BodyExpr::Lit(1));
                                    }
                                    args.truncate(2);
                                }
                                _ => {}
                            }
                            BodyExpr::Bool(c, args)
                        })
                        .boxed(),
                ];
                if !sigs_for_tree.is_empty() {
                    let sigs2 = sigs_for_tree.clone();
                    choices.push(
                        (prop::sample::select(sigs2), prop::collection::vec(inner, 0..=2))
                            .prop_map(|(sig, mut args)| {
                                args.resize(sig.arity, BodyExpr::Lit(1));
                                BodyExpr::App {
                                    name: sig.name.clone(),
                                    proj: sig.out_count - 1,
                                    args,
                                }
                            })
                            .boxed(),
                    );
                }
                prop::strategy::Union::new(choices)
            });
            (Just(sigs), Just(vars), tree, 1u32..=16).prop_map(
                |(second_order, first_order, body, default_width)| SOSFormula {
                    second_order,
                    first_order,
                    body,
                    default_width,
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn print_parse_round_trip(f in arb_formula()) {
            prop_assume!(f.validate().is_ok());
            let text = f.to_string();
            let parsed = parse_formula(&text).unwrap_or_else(|e| panic!("reparse failed: {e}\n{text}"));
            prop_assert_eq!(parsed, f);
        }
    }
}
