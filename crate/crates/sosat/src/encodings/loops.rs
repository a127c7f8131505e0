//! Loop programs and their reductions to synthesis formulas.
//!
//! A loop program is `init; while guard { body }` over a fixed vector of
//! word-valued state variables. `init` and `guard` are truth-valued
//! expressions over the current state; `body` is a transition *relation*
//! connecting the current state to the next one, written with primed names
//! (`x'` is the value of `x` after one iteration).
//!
//! Three questions about such a loop reduce to second-order satisfiability:
//!
//! - **safety** — does an assertion hold whenever the loop exits? Witnessed
//!   by an inductive invariant: a predicate that covers the initial states,
//!   is closed under the transition while the guard holds, and implies the
//!   assertion once the guard fails.
//! - **termination** — do all runs from the initial states leave the loop?
//!   Witnessed by a ranking function strictly decreasing and bounded below
//!   (in the unsigned order) on each step, plus a supporting invariant
//!   restricting where the decrease must hold.
//! - **non-termination** — is there a run that never leaves the loop?
//!   Witnessed by a recurrence set, a choice function selecting a successor
//!   inside the set for each of its states, and a seed state in the set.
//!
//! Text format (`.loop` files), extending the formula grammar:
//!
//! ```text
//! (width 8)
//! (loop
//!   (vars x)
//!   (init (eq x 0))
//!   (guard (lt x 10))
//!   (body (eq x' (add x 1))))
//! (assert (eq x 10))   ; optional: the safety property
//! ```

use crate::formula::parse::{expect_atom, parse_expr, syntax, SExpr};
use crate::formula::{
    BodyExpr, FirstOrderVar, FormulaError, FunctionSignature, Quantifier, Role, SOSFormula,
};
use crate::lang::Opcode;
use std::collections::BTreeSet;

/// One loop state variable. A pinned width must match the formula width at
/// solve time; leave it `None` so the encoded formula can be evaluated at
/// reduced widths too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub width: Option<u32>,
}

/// `init; while guard { body }` over a vector of state variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSystem {
    pub state_vars: Vec<StateVar>,
    /// Truth-valued over the unprimed state.
    pub init: BodyExpr,
    /// Truth-valued over the unprimed state.
    pub guard: BodyExpr,
    /// Transition relation over the unprimed and primed state.
    pub body: BodyExpr,
}

/// A parsed `.loop` file: the system plus the file-level width and the
/// optional safety assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopFile {
    pub width: u32,
    pub system: LoopSystem,
    /// Conjunction of the file's `assert` forms, if any.
    pub assertion: Option<BodyExpr>,
}

/// The primed spelling of a state variable name.
pub fn primed(name: &str) -> String {
    format!("{name}'")
}

impl LoopSystem {
    /// Structural checks: at least one variable, unique unreserved names,
    /// and every expression in scope. `init` and `guard` range over the
    /// unprimed state only; `body` may also use primed names. Function
    /// applications never belong in a loop program.
    pub fn validate(&self) -> Result<(), FormulaError> {
        if self.state_vars.is_empty() {
            return Err(syntax(0, "a loop needs at least one state variable"));
        }
        let mut seen = BTreeSet::new();
        for v in &self.state_vars {
            if v.name.ends_with('\'') {
                return Err(syntax(0, format!("state variable `{}`: primed names are reserved", v.name)));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(FormulaError::Duplicate(v.name.clone()));
            }
        }
        self.check_scope(&self.init, false)?;
        self.check_scope(&self.guard, false)?;
        self.check_scope(&self.body, true)
    }

    /// Scope check for one expression; primed names are admitted only when
    /// `primed_ok`.
    fn check_scope(&self, expr: &BodyExpr, primed_ok: bool) -> Result<(), FormulaError> {
        let names: BTreeSet<&str> = self.state_vars.iter().map(|v| v.name.as_str()).collect();
        let mut bad: Option<String> = None;
        expr.visit(&mut |e| {
            if bad.is_some() {
                return;
            }
            match e {
                BodyExpr::Var(n) => {
                    let (base, is_primed) = match n.strip_suffix('\'') {
                        Some(b) => (b, true),
                        None => (n.as_str(), false),
                    };
                    if !names.contains(base) || (is_primed && !primed_ok) {
                        bad = Some(n.clone());
                    }
                }
                BodyExpr::App { name, .. } => bad = Some(name.clone()),
                _ => {}
            }
        });
        match bad {
            Some(name) => Err(FormulaError::UnknownSymbol(name)),
            None => Ok(()),
        }
    }

    fn arity(&self) -> usize {
        self.state_vars.len()
    }

    /// The unprimed state as application arguments.
    fn cur(&self) -> Vec<BodyExpr> {
        self.state_vars.iter().map(|v| BodyExpr::var(&v.name)).collect()
    }

    /// The primed state as application arguments.
    fn nxt(&self) -> Vec<BodyExpr> {
        self.state_vars.iter().map(|v| BodyExpr::var(&primed(&v.name))).collect()
    }

    /// Universal variables for the unprimed state, then optionally the
    /// primed state.
    fn universals(&self, with_primed: bool) -> Vec<FirstOrderVar> {
        let mut out: Vec<FirstOrderVar> = self
            .state_vars
            .iter()
            .map(|v| FirstOrderVar { quantifier: Quantifier::Forall, name: v.name.clone(), width: v.width })
            .collect();
        if with_primed {
            out.extend(self.state_vars.iter().map(|v| FirstOrderVar {
                quantifier: Quantifier::Forall,
                name: primed(&v.name),
                width: v.width,
            }));
        }
        out
    }

    /// A symbol name not colliding with any state variable.
    fn fresh(&self, base: &str, also_taken: &[String]) -> String {
        let mut name = base.to_string();
        while self.state_vars.iter().any(|v| v.name == name) || also_taken.contains(&name) {
            name.push('_');
        }
        name
    }
}

/// Reduce a safety question to synthesis of one inductive invariant `inv`:
///
/// ```text
/// forall x x'.   init(x)                        -> inv(x)
///              ∧ inv(x) ∧ guard(x) ∧ body(x,x') -> inv(x')
///              ∧ inv(x) ∧ ¬guard(x)             -> assertion(x)
/// ```
///
/// Satisfiable exactly when the assertion holds on every loop exit.
pub fn encode_safety(
    system: &LoopSystem,
    assertion: &BodyExpr,
    width: u32,
) -> Result<SOSFormula, FormulaError> {
    system.validate()?;
    system.check_scope(assertion, false)?;
    let inv = system.fresh("inv", &[]);
    let inv_cur = BodyExpr::app(&inv, system.cur());
    let inv_nxt = BodyExpr::app(&inv, system.nxt());
    let body = BodyExpr::band(vec![
        BodyExpr::bimplies(system.init.clone(), inv_cur.clone()),
        BodyExpr::bimplies(
            BodyExpr::band(vec![inv_cur.clone(), system.guard.clone(), system.body.clone()]),
            inv_nxt,
        ),
        BodyExpr::bimplies(
            BodyExpr::band(vec![inv_cur, BodyExpr::bnot(system.guard.clone())]),
            assertion.clone(),
        ),
    ]);
    let formula = SOSFormula {
        second_order: vec![FunctionSignature {
            name: inv,
            arity: system.arity(),
            out_count: 1,
            role: Role::Predicate,
        }],
        first_order: system.universals(true),
        body,
        default_width: width,
    };
    formula.validate()?;
    Ok(formula)
}

/// Reduce a termination question to synthesis of a ranking function `rank`
/// and a supporting invariant `wf`:
///
/// ```text
/// forall x x'.   init(x) ∧ guard(x)             -> wf(x)
///              ∧ guard(x) ∧ wf(x) ∧ body(x,x')  ->
///                    wf(x') ∧ 0 <u rank(x) ∧ rank(x') <u rank(x)
/// ```
///
/// The comparisons are unsigned, so `rank` is bounded below by zero and
/// strictly decreases while the guard holds: no infinite run exists.
pub fn encode_termination(system: &LoopSystem, width: u32) -> Result<SOSFormula, FormulaError> {
    system.validate()?;
    let rank = system.fresh("rank", &[]);
    let wf = system.fresh("wf", &[rank.clone()]);
    let rank_cur = BodyExpr::app(&rank, system.cur());
    let rank_nxt = BodyExpr::app(&rank, system.nxt());
    let wf_cur = BodyExpr::app(&wf, system.cur());
    let wf_nxt = BodyExpr::app(&wf, system.nxt());
    let body = BodyExpr::band(vec![
        BodyExpr::bimplies(
            BodyExpr::band(vec![system.init.clone(), system.guard.clone()]),
            wf_cur.clone(),
        ),
        BodyExpr::bimplies(
            BodyExpr::band(vec![system.guard.clone(), wf_cur, system.body.clone()]),
            BodyExpr::band(vec![
                wf_nxt,
                BodyExpr::op(Opcode::Lt, vec![BodyExpr::lit(0), rank_cur.clone()]),
                BodyExpr::op(Opcode::Lt, vec![rank_nxt, rank_cur]),
            ]),
        ),
    ]);
    let formula = SOSFormula {
        second_order: vec![
            FunctionSignature { name: rank, arity: system.arity(), out_count: 1, role: Role::Function },
            FunctionSignature { name: wf, arity: system.arity(), out_count: 1, role: Role::Predicate },
        ],
        first_order: system.universals(true),
        body,
        default_width: width,
    };
    formula.validate()?;
    Ok(formula)
}

/// Reduce a non-termination question to synthesis of a recurrence set
/// `recur`, a successor choice function `step` (one output per state
/// variable), and a seed state given by one fresh constant symbol per
/// variable:
///
/// ```text
/// forall x.   recur(seed)
///           ∧ recur(x) -> guard(x)
///           ∧ recur(x) -> body(x, step(x)) ∧ recur(step(x))
/// ```
///
/// Satisfiable exactly when some run stays in the loop forever: from the
/// seed, `step` keeps choosing guard-satisfying successors inside the set.
pub fn encode_nontermination(system: &LoopSystem, width: u32) -> Result<SOSFormula, FormulaError> {
    system.validate()?;
    let recur = system.fresh("recur", &[]);
    let step = system.fresh("step", &[recur.clone()]);
    let mut taken = vec![recur.clone(), step.clone()];
    let seeds: Vec<String> = system
        .state_vars
        .iter()
        .map(|v| {
            let name = system.fresh(&format!("seed_{}", v.name), &taken);
            taken.push(name.clone());
            name
        })
        .collect();
    let k = system.arity();
    let step_out =
        |i: usize| BodyExpr::app_proj(&step, i, system.cur());
    let recur_cur = BodyExpr::app(&recur, system.cur());
    let recur_seed =
        BodyExpr::app(&recur, seeds.iter().map(|s| BodyExpr::app(s, vec![])).collect());
    let recur_step = BodyExpr::app(&recur, (0..k).map(step_out).collect());
    let mut body_step = system.body.clone();
    for (i, v) in system.state_vars.iter().enumerate() {
        body_step = body_step.substitute_var(&primed(&v.name), &step_out(i));
    }
    let body = BodyExpr::band(vec![
        recur_seed,
        BodyExpr::bimplies(recur_cur.clone(), system.guard.clone()),
        BodyExpr::bimplies(recur_cur, BodyExpr::band(vec![body_step, recur_step])),
    ]);
    let mut second_order = vec![
        FunctionSignature { name: recur, arity: k, out_count: 1, role: Role::Predicate },
        FunctionSignature { name: step, arity: k, out_count: k, role: Role::Function },
    ];
    second_order.extend(seeds.into_iter().map(|name| FunctionSignature {
        name,
        arity: 0,
        out_count: 1,
        role: Role::Function,
    }));
    let formula = SOSFormula {
        second_order,
        first_order: system.universals(false),
        body,
        default_width: width,
    };
    formula.validate()?;
    Ok(formula)
}

/// Parse a `.loop` file: a `(width n)` form, one `(loop ...)` form with
/// `vars`/`init`/`guard`/`body` clauses, and optional `(assert e)` forms
/// that conjoin into the safety assertion.
pub fn parse_loop_file(text: &str) -> Result<LoopFile, FormulaError> {
    let forms = crate::formula::parse::tokenize(text)?;
    let mut width: Option<u32> = None;
    let mut system: Option<LoopSystem> = None;
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
                width = Some(
                    v.parse::<u32>().map_err(|_| syntax(*line, format!("not a width: `{v}`")))?,
                );
            }
            "loop" => {
                if system.is_some() {
                    return Err(syntax(*line, "duplicate (loop ...) form"));
                }
                system = Some(parse_loop_form(&items[1..], *line)?);
            }
            "assert" => {
                if items.len() != 2 {
                    return Err(syntax(*line, "assert takes exactly one expression"));
                }
                asserts.push(parse_expr(&items[1])?);
            }
            other => return Err(syntax(*line, format!("unknown form `{other}`"))),
        }
    }
    let width = width.ok_or_else(|| syntax(0, "missing (width ...) form"))?;
    let system = system.ok_or_else(|| syntax(0, "missing (loop ...) form"))?;
    system.validate()?;
    let assertion = match asserts.len() {
        0 => None,
        1 => Some(asserts.pop().unwrap()),
        _ => Some(BodyExpr::band(asserts)),
    };
    if let Some(a) = &assertion {
        system.check_scope(a, false)?;
    }
    Ok(LoopFile { width, system, assertion })
}

fn parse_loop_form(items: &[SExpr], line: usize) -> Result<LoopSystem, FormulaError> {
    let mut vars: Option<Vec<StateVar>> = None;
    let mut init: Option<BodyExpr> = None;
    let mut guard: Option<BodyExpr> = None;
    let mut body: Option<BodyExpr> = None;
    for item in items {
        let SExpr::List(parts, l) = item else {
            return Err(syntax(item.line(), "expected a (keyword ...) clause"));
        };
        let Some(SExpr::Atom(key, _)) = parts.first() else {
            return Err(syntax(*l, "expected a clause keyword"));
        };
        let dup = |have: bool| {
            if have {
                Err(syntax(*l, format!("duplicate ({key} ...) clause")))
            } else {
                Ok(())
            }
        };
        match key.as_str() {
            "vars" => {
                dup(vars.is_some())?;
                let mut out = Vec::new();
                for v in &parts[1..] {
                    match v {
                        SExpr::Atom(name, _) => {
                            out.push(StateVar { name: name.clone(), width: None })
                        }
                        SExpr::List(pair, pl) => {
                            if pair.len() != 2 {
                                return Err(syntax(*pl, "expected (name width)"));
                            }
                            let name = expect_atom(&pair[0], "a variable name")?.to_string();
                            let w = expect_atom(&pair[1], "a width")?;
                            let w = w
                                .parse::<u32>()
                                .map_err(|_| syntax(*pl, format!("not a width: `{w}`")))?;
                            out.push(StateVar { name, width: Some(w) });
                        }
                    }
                }
                vars = Some(out);
            }
            "init" | "guard" | "body" => {
                let slot = match key.as_str() {
                    "init" => &mut init,
                    "guard" => &mut guard,
                    _ => &mut body,
                };
                dup(slot.is_some())?;
                if parts.len() != 2 {
                    return Err(syntax(*l, format!("({key} ...) takes exactly one expression")));
                }
                *slot = Some(parse_expr(&parts[1])?);
            }
            other => return Err(syntax(*l, format!("unknown clause `{other}`"))),
        }
    }
    Ok(LoopSystem {
        state_vars: vars.ok_or_else(|| syntax(line, "loop needs a (vars ...) clause"))?,
        init: init.ok_or_else(|| syntax(line, "loop needs an (init ...) clause"))?,
        guard: guard.ok_or_else(|| syntax(line, "loop needs a (guard ...) clause"))?,
        body: body.ok_or_else(|| syntax(line, "loop needs a (body ...) clause"))?,
    })
}
