//! Quantified Boolean formulas as width-1 synthesis problems.
//!
//! A QBF prefix maps directly onto the formula quantifier prefix at width 1;
//! instance construction then turns each existential into a Boolean Skolem
//! function of the universals before it. Dual solving rests on
//! [`negate_qbf`]: a QBF is false exactly when its negation — the dual
//! prefix over the negated matrix — is true, so racing both sides always
//! yields a definite answer from whichever finishes.
//!
//! The text format is QDIMACS: a `p cnf <vars> <clauses>` header, optional
//! `a`/`e` quantifier lines (zero-terminated, innermost last), then clause
//! lines of zero-terminated literals. Unquantified variables are read as
//! outermost existentials.

use crate::formula::parse::syntax;
use crate::formula::{BodyExpr, FirstOrderVar, FormulaError, Quantifier, SOSFormula};

/// A prenex QBF: quantified Boolean variables over a propositional matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QbfFormula {
    /// Outermost first. Block structure carries no meaning beyond order.
    pub prefix: Vec<(Quantifier, String)>,
    /// Truth-valued; variables take the values 0 and 1.
    pub matrix: BodyExpr,
}

/// The name given to QDIMACS variable `i`.
fn var_name(i: u64) -> String {
    format!("v{i}")
}

/// Parse QDIMACS text.
pub fn parse_qdimacs(text: &str) -> Result<QbfFormula, FormulaError> {
    let mut var_count: Option<u64> = None;
    let mut clause_count = 0usize;
    let mut prefix: Vec<(Quantifier, String)> = Vec::new();
    let mut quantified: Vec<bool> = Vec::new();
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let mut clause: Vec<i64> = Vec::new();
    let mut prefix_done = false;
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            if var_count.is_some() {
                return Err(syntax(ln, "duplicate problem line"));
            }
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let [kind, vars, cls] = fields.as_slice() else {
                return Err(syntax(ln, "problem line is `p cnf <vars> <clauses>`"));
            };
            if *kind != "cnf" {
                return Err(syntax(ln, format!("unsupported problem kind `{kind}`")));
            }
            let vars =
                vars.parse::<u64>().map_err(|_| syntax(ln, "bad variable count"))?;
            clause_count =
                cls.parse::<usize>().map_err(|_| syntax(ln, "bad clause count"))?;
            quantified = vec![false; vars as usize + 1];
            var_count = Some(vars);
            continue;
        }
        let Some(n) = var_count else {
            return Err(syntax(ln, "expected the `p cnf` line first"));
        };
        let quant = match line.chars().next() {
            Some('a') => Some(Quantifier::Forall),
            Some('e') => Some(Quantifier::Exists),
            _ => None,
        };
        if let Some(q) = quant {
            if prefix_done {
                return Err(syntax(ln, "quantifier line after the first clause"));
            }
            let mut saw_zero = false;
            for tok in line[1..].split_whitespace() {
                let v = tok.parse::<u64>().map_err(|_| syntax(ln, "bad variable"))?;
                if v == 0 {
                    saw_zero = true;
                    break;
                }
                if v > n {
                    return Err(syntax(ln, format!("variable {v} above the declared count")));
                }
                if quantified[v as usize] {
                    return Err(syntax(ln, format!("variable {v} quantified twice")));
                }
                quantified[v as usize] = true;
                prefix.push((q, var_name(v)));
            }
            if !saw_zero {
                return Err(syntax(ln, "quantifier line must end with 0"));
            }
            continue;
        }
        prefix_done = true;
        for tok in line.split_whitespace() {
            let lit = tok.parse::<i64>().map_err(|_| syntax(ln, format!("bad literal `{tok}`")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut clause));
            } else {
                if lit.unsigned_abs() > n {
                    return Err(syntax(ln, format!("literal {lit} above the declared count")));
                }
                clause.push(lit);
            }
        }
    }
    let Some(n) = var_count else {
        return Err(syntax(0, "missing `p cnf` line"));
    };
    if !clause.is_empty() {
        return Err(syntax(0, "last clause is not zero-terminated"));
    }
    if clauses.len() != clause_count {
        return Err(syntax(
            0,
            format!("declared {clause_count} clauses, found {}", clauses.len()),
        ));
    }
    // Unquantified variables that occur are outermost existentials.
    let mut free: Vec<u64> = (1..=n)
        .filter(|&v| {
            !quantified[v as usize]
                && clauses.iter().flatten().any(|l| l.unsigned_abs() == v)
        })
        .collect();
    free.sort_unstable();
    let mut full_prefix: Vec<(Quantifier, String)> =
        free.into_iter().map(|v| (Quantifier::Exists, var_name(v))).collect();
    full_prefix.append(&mut prefix);
    let matrix = if clauses.is_empty() {
        BodyExpr::lit(1)
    } else {
        BodyExpr::band(
            clauses
                .into_iter()
                .map(|c| {
                    if c.is_empty() {
                        return BodyExpr::lit(0);
                    }
                    BodyExpr::bor(
                        c.into_iter()
                            .map(|l| {
                                let v = BodyExpr::var(&var_name(l.unsigned_abs()));
                                if l < 0 {
                                    BodyExpr::bnot(v)
                                } else {
                                    v
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    Ok(QbfFormula { prefix: full_prefix, matrix })
}

/// Wrap a QBF as a width-1 formula; instance construction later replaces
/// each existential with a Skolem function of the preceding universals.
pub fn encode_qbf(qbf: &QbfFormula) -> Result<SOSFormula, FormulaError> {
    let formula = SOSFormula {
        second_order: Vec::new(),
        first_order: qbf
            .prefix
            .iter()
            .map(|(q, name)| FirstOrderVar { quantifier: *q, name: name.clone(), width: None })
            .collect(),
        body: qbf.matrix.clone(),
        default_width: 1,
    };
    formula.validate()?;
    Ok(formula)
}

/// The dual QBF: every quantifier flipped over the negated matrix. False
/// formulas have true negations and vice versa, and negating twice gives
/// back the original formula structurally (a top-level double negation is
/// stripped rather than stacked).
pub fn negate_qbf(qbf: &QbfFormula) -> QbfFormula {
    let prefix = qbf
        .prefix
        .iter()
        .map(|(q, name)| {
            let flipped = match q {
                Quantifier::Forall => Quantifier::Exists,
                Quantifier::Exists => Quantifier::Forall,
            };
            (flipped, name.clone())
        })
        .collect();
    let matrix = match &qbf.matrix {
        BodyExpr::Bool(crate::formula::Connective::Not, args) if args.len() == 1 => {
            args[0].clone()
        }
        other => BodyExpr::bnot(other.clone()),
    };
    QbfFormula { prefix, matrix }
}

/// Reference truth value by game-tree expansion: exponential in the prefix
/// length, for cross-checking the solver on small formulas.
pub fn qbf_truth(qbf: &QbfFormula) -> bool {
    fn matrix_truth(e: &BodyExpr, env: &[(String, bool)]) -> bool {
        match e {
            BodyExpr::Lit(v) => *v != 0,
            BodyExpr::Var(n) => {
                env.iter().rev().find(|(name, _)| name == n).map(|(_, v)| *v).unwrap_or(false)
            }
            BodyExpr::Bool(conn, args) => {
                use crate::formula::Connective::*;
                match conn {
                    And => args.iter().all(|a| matrix_truth(a, env)),
                    Or => args.iter().any(|a| matrix_truth(a, env)),
                    Not => !matrix_truth(&args[0], env),
                    Implies => !matrix_truth(&args[0], env) || matrix_truth(&args[1], env),
                    Iff => matrix_truth(&args[0], env) == matrix_truth(&args[1], env),
                }
            }
            // QBF matrices are propositional: no applications, and word
            // operators only appear through width-1 literals 0/1.
            BodyExpr::Op(..) | BodyExpr::App { .. } => {
                unreachable!("QBF matrices are propositional")
            }
        }
    }
    fn go(prefix: &[(Quantifier, String)], env: &mut Vec<(String, bool)>, m: &BodyExpr) -> bool {
        let Some((q, name)) = prefix.first() else {
            return matrix_truth(m, env);
        };
        let rest = &prefix[1..];
        let mut results = [false, true].into_iter().map(|b| {
            env.push((name.clone(), b));
            let r = go(rest, env, m);
            env.pop();
            r
        });
        match q {
            Quantifier::Forall => results.all(|r| r),
            Quantifier::Exists => results.any(|r| r),
        }
    }
    go(&qbf.prefix, &mut Vec::new(), &qbf.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cegis::{solve, SolverConfig, Verdict};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// forall v1 exists v2. (v1 | v2) & (~v1 | ~v2) — i.e. v2 = ~v1: true.
    const XOR_LIKE: &str = "c exclusive choice\np cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n";

    /// exists v1 forall v2. v1 & v2: false.
    const AND_FORALL: &str = "p cnf 2 2\ne 1 0\na 2 0\n1 0\n2 0\n";

    #[test]
    fn parses_qdimacs_prefix_and_clauses() {
        let q = parse_qdimacs(XOR_LIKE).unwrap();
        assert_eq!(
            q.prefix,
            vec![(Quantifier::Forall, "v1".into()), (Quantifier::Exists, "v2".into())]
        );
        assert!(qbf_truth(&q));
        let q = parse_qdimacs(AND_FORALL).unwrap();
        assert!(!qbf_truth(&q));
    }

    #[test]
    fn free_variables_read_as_outer_existentials() {
        // v1 free, v2 universal: exists v1 forall v2. v1 | v2 — false... no:
        // v1 = 1 satisfies every clause, so true.
        let q = parse_qdimacs("p cnf 2 1\na 2 0\n1 2 0\n").unwrap();
        assert_eq!(q.prefix[0], (Quantifier::Exists, "v1".into()));
        assert_eq!(q.prefix[1], (Quantifier::Forall, "v2".into()));
        assert!(qbf_truth(&q));
    }

    #[test]
    fn rejects_malformed_qdimacs() {
        assert!(parse_qdimacs("p cnf 1\n1 0\n").is_err());
        assert!(parse_qdimacs("1 0\n").is_err());
        assert!(parse_qdimacs("p cnf 1 1\n1\n").is_err());
        assert!(parse_qdimacs("p cnf 1 2\n1 0\n").is_err());
        assert!(parse_qdimacs("p cnf 1 1\ne 1 0\ne 1 0\n1 0\n").is_err());
        assert!(parse_qdimacs("p cnf 1 1\n2 0\n").is_err());
    }

    #[test]
    fn negation_is_an_involution_and_flips_truth() {
        for text in [XOR_LIKE, AND_FORALL] {
            let q = parse_qdimacs(text).unwrap();
            let n = negate_qbf(&q);
            assert_eq!(qbf_truth(&q), !qbf_truth(&n));
            assert_eq!(negate_qbf(&n), q);
        }
    }

    #[test]
    fn solver_decides_the_two_documented_formulas() {
        let q = parse_qdimacs(XOR_LIKE).unwrap();
        let f = encode_qbf(&q).unwrap();
        let res = solve(&f.skolemize(), &SolverConfig::default()).unwrap();
        assert!(matches!(res.verdict, Verdict::Sat { .. }), "got {:?}", res.verdict);

        let q = parse_qdimacs(AND_FORALL).unwrap();
        let f = encode_qbf(&q).unwrap();
        let res = solve(&f.skolemize(), &SolverConfig::default()).unwrap();
        assert_eq!(res.verdict, Verdict::Unsat);
    }

    /// A random prefix over `vars` variables and a random CNF matrix.
    pub(crate) fn random_qbf(rng: &mut ChaCha12Rng, vars: u64) -> QbfFormula {
        let prefix = (1..=vars)
            .map(|v| {
                let q = if rng.random_bool(0.5) { Quantifier::Forall } else { Quantifier::Exists };
                (q, var_name(v))
            })
            .collect();
        let clauses: Vec<BodyExpr> = (0..rng.random_range(1..=4))
            .map(|_| {
                let mut lits: Vec<BodyExpr> = Vec::new();
                for v in 1..=vars {
                    if !rng.random_bool(0.7) {
                        continue;
                    }
                    let var = BodyExpr::var(&var_name(v));
                    lits.push(if rng.random_bool(0.5) { BodyExpr::bnot(var) } else { var });
                }
                if lits.is_empty() {
                    BodyExpr::lit(0)
                } else {
                    BodyExpr::bor(lits)
                }
            })
            .collect();
        QbfFormula { prefix, matrix: BodyExpr::band(clauses) }
    }

    #[test]
    fn solver_matches_the_game_tree_oracle_on_random_formulas() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for round in 0..20 {
            let q = random_qbf(&mut rng, 3);
            let want = qbf_truth(&q);
            let f = encode_qbf(&q).unwrap();
            let res = solve(&f.skolemize(), &SolverConfig::default()).unwrap();
            match (&res.verdict, want) {
                (Verdict::Sat { .. }, true) | (Verdict::Unsat, false) => {}
                other => panic!("round {round}: oracle says {want}, solver says {:?}", other.0),
            }
        }
    }
}
