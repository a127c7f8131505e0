//! Body evaluation under concrete witnesses.
//!
//! A [`CompiledBody`] resolves names to indices once; a [`BodyEvaluator`]
//! then evaluates the body over raw input values with reusable buffers —
//! the hot path for candidate filtering and fitness scoring.
//!
//! Width discipline: operator nodes take the common width of their rigid
//! operands (variables, applications); literals and connective results adapt
//! to that width. Widths pinned by variable declarations that must coincide
//! with the active width are checked by [`CompiledBody::check_widths`].

use super::{Assignment, BodyExpr, Connective, SynthesisInstance, MAX_FUNCTION_ARITY};
use crate::lang::{eval_op, width_mask, LangError, Opcode, Program};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no witness supplied for `{0}`")]
    WitnessMissing(String),
    #[error("witness for function {index}: {message}")]
    WitnessShape { index: usize, message: String },
    #[error("width mismatch: body requires {required} where {found} is active")]
    WidthMismatch { required: u32, found: u32 },
    #[error("body mixes incompatible widths {0} and {1}")]
    IncompatibleWidths(u32, u32),
    #[error("unknown symbol `{0}` in body")]
    UnknownSymbol(String),
    #[error(transparent)]
    Exec(#[from] LangError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeWidth {
    /// Width-free (literals, truth values).
    Poly,
    /// Tracks the active width.
    Active,
    /// Pinned by a variable declaration.
    Fixed(u32),
    /// Pinned and also mixed with active-width operands: valid only when the
    /// active width equals the pin.
    Pinned(u32),
}

impl NodeWidth {
    fn resolve(self, active: u32) -> u32 {
        match self {
            NodeWidth::Poly | NodeWidth::Active => active,
            NodeWidth::Fixed(w) | NodeWidth::Pinned(w) => w,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Lit(u64),
    Var(usize),
    Op { op: Opcode, args: Vec<u32> },
    Bool { conn: Connective, args: Vec<u32> },
    App { func: usize, proj: usize, out_count: usize, args: Vec<u32> },
}

/// A body lowered to a flat post-order node list with names resolved.
#[derive(Debug, Clone)]
pub struct CompiledBody {
    pub(crate) nodes: Vec<Node>,
    pub(crate) widths: Vec<NodeWidth>,
    /// Widths that must equal the active width for evaluation to be defined.
    pins: Vec<u32>,
    pub(crate) root: usize,
}

fn unify(parts: impl Iterator<Item = NodeWidth>) -> Result<NodeWidth, EvalError> {
    let mut fixed: Option<u32> = None;
    let mut active = false;
    for p in parts {
        match p {
            NodeWidth::Poly => {}
            NodeWidth::Active => active = true,
            NodeWidth::Fixed(d) | NodeWidth::Pinned(d) => {
                if let NodeWidth::Pinned(_) = p {
                    active = true;
                }
                match fixed {
                    None => fixed = Some(d),
                    Some(e) if e == d => {}
                    Some(e) => return Err(EvalError::IncompatibleWidths(e, d)),
                }
            }
        }
    }
    Ok(match (fixed, active) {
        (None, false) => NodeWidth::Poly,
        (None, true) => NodeWidth::Active,
        (Some(d), false) => NodeWidth::Fixed(d),
        (Some(d), true) => NodeWidth::Pinned(d),
    })
}

impl CompiledBody {
    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn node_widths(&self) -> &[NodeWidth] {
        &self.widths
    }

    pub(crate) fn root_index(&self) -> usize {
        self.root
    }

    pub fn compile(instance: &SynthesisInstance) -> Result<CompiledBody, EvalError> {
        let var_index: BTreeMap<&str, usize> = instance
            .universals
            .iter()
            .enumerate()
            .map(|(i, u)| (u.name.as_str(), i))
            .collect();
        let func_index: BTreeMap<&str, usize> = instance
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.as_str(), i))
            .collect();
        let mut cb = CompiledBody { nodes: Vec::new(), widths: Vec::new(), pins: Vec::new(), root: 0 };
        let root = cb.lower(&instance.body, instance, &var_index, &func_index)?;
        cb.root = root;
        Ok(cb)
    }

    fn push(&mut self, node: Node, width: NodeWidth) -> usize {
        self.nodes.push(node);
        self.widths.push(width);
        if let NodeWidth::Pinned(d) = width {
            self.pins.push(d);
        }
        self.nodes.len() - 1
    }

    fn lower(
        &mut self,
        expr: &BodyExpr,
        instance: &SynthesisInstance,
        var_index: &BTreeMap<&str, usize>,
        func_index: &BTreeMap<&str, usize>,
    ) -> Result<usize, EvalError> {
        Ok(match expr {
            BodyExpr::Lit(v) => self.push(Node::Lit(*v), NodeWidth::Poly),
            BodyExpr::Var(name) => {
                let &ix = var_index
                    .get(name.as_str())
                    .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))?;
                let width = match instance.universals[ix].width {
                    Some(d) => NodeWidth::Fixed(d),
                    None => NodeWidth::Active,
                };
                self.push(Node::Var(ix), width)
            }
            BodyExpr::Op(op, args) => {
                let mut ids = Vec::with_capacity(args.len());
                for a in args {
                    ids.push(self.lower(a, instance, var_index, func_index)? as u32);
                }
                let width = unify(ids.iter().map(|&i| self.widths[i as usize]))?;
                self.push(Node::Op { op: *op, args: ids }, width)
            }
            BodyExpr::Bool(conn, args) => {
                let mut ids = Vec::with_capacity(args.len());
                for a in args {
                    ids.push(self.lower(a, instance, var_index, func_index)? as u32);
                }
                self.push(Node::Bool { conn: *conn, args: ids }, NodeWidth::Poly)
            }
            BodyExpr::App { name, proj, args } => {
                let &func = func_index
                    .get(name.as_str())
                    .ok_or_else(|| EvalError::UnknownSymbol(name.clone()))?;
                let mut ids = Vec::with_capacity(args.len());
                for a in args {
                    ids.push(self.lower(a, instance, var_index, func_index)? as u32);
                }
                // Function inputs track the active width; a fixed-width
                // argument forces the pin.
                let arg_width = unify(
                    ids.iter()
                        .map(|&i| self.widths[i as usize])
                        .chain([NodeWidth::Active]),
                )?;
                if let NodeWidth::Pinned(d) = arg_width {
                    self.pins.push(d);
                }
                self.push(
                    Node::App {
                        func,
                        proj: *proj,
                        out_count: instance.functions[func].out_count,
                        args: ids,
                    },
                    NodeWidth::Active,
                )
            }
        })
    }

    /// All pinned widths must equal the active width.
    pub fn check_widths(&self, active_width: u32) -> Result<(), EvalError> {
        for &d in &self.pins {
            if d != active_width {
                return Err(EvalError::WidthMismatch { required: d, found: active_width });
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Reusable evaluation buffers.
#[derive(Debug, Default)]
pub struct BodyEvaluator {
    values: Vec<u64>,
    temps: Vec<u64>,
}

impl BodyEvaluator {
    pub fn new() -> BodyEvaluator {
        BodyEvaluator::default()
    }

    /// Truth of the body at one input point. `witnesses` align with the
    /// instance's function order; `inputs` align with its universal order
    /// and must already be masked to their widths.
    pub fn evaluate(
        &mut self,
        body: &CompiledBody,
        witnesses: &[Program],
        inputs: &[u64],
        active_width: u32,
    ) -> Result<bool, EvalError> {
        self.values.clear();
        self.values.resize(body.nodes.len(), 0);
        for i in 0..body.nodes.len() {
            let v = match &body.nodes[i] {
                Node::Lit(v) => *v,
                Node::Var(ix) => inputs[*ix],
                Node::Op { op, args } => {
                    let w = body.widths[i].resolve(active_width);
                    let m = width_mask(w);
                    let mut buf = [0u64; 3];
                    for (k, &c) in args.iter().enumerate() {
                        buf[k] = self.values[c as usize] & m;
                    }
                    eval_op(*op, &buf[..args.len()], w)?
                }
                Node::Bool { conn, args } => {
                    let truth = |s: &Self, k: usize| s.values[args[k] as usize] != 0;
                    let b = match conn {
                        Connective::And => args.iter().all(|&c| self.values[c as usize] != 0),
                        Connective::Or => args.iter().any(|&c| self.values[c as usize] != 0),
                        Connective::Not => !truth(self, 0),
                        Connective::Implies => !truth(self, 0) || truth(self, 1),
                        Connective::Iff => truth(self, 0) == truth(self, 1),
                    };
                    u64::from(b)
                }
                Node::App { func, proj, out_count, args } => {
                    let program = witnesses.get(*func).ok_or(EvalError::WitnessShape {
                        index: *func,
                        message: "missing".into(),
                    })?;
                    if program.width != active_width {
                        return Err(EvalError::WidthMismatch {
                            required: active_width,
                            found: program.width,
                        });
                    }
                    if program.arity != args.len() || program.out_count != *out_count {
                        return Err(EvalError::WitnessShape {
                            index: *func,
                            message: format!(
                                "expected arity {} with {} outputs, got arity {} with {}",
                                args.len(),
                                out_count,
                                program.arity,
                                program.out_count
                            ),
                        });
                    }
                    let m = width_mask(active_width);
                    let mut buf = [0u64; MAX_FUNCTION_ARITY];
                    for (k, &c) in args.iter().enumerate() {
                        buf[k] = self.values[c as usize] & m;
                    }
                    let out = program.exec_into(&buf[..args.len()], &mut self.temps)?;
                    out[*proj]
                }
            };
            self.values[i] = v;
        }
        Ok(self.values[body.root] != 0)
    }
}

impl BodyEvaluator {
    /// Like [`BodyEvaluator::evaluate`], but function applications are served
    /// by `app` — called with the function index and its argument words
    /// (masked to the active width) and returning one word per output —
    /// instead of by concrete programs. Used to decide whether *any* choice
    /// of function outputs can satisfy the body at a fixed input point.
    pub(crate) fn evaluate_with_oracle(
        &mut self,
        body: &CompiledBody,
        inputs: &[u64],
        active_width: u32,
        app: &mut impl FnMut(usize, &[u64]) -> Vec<u64>,
    ) -> Result<bool, EvalError> {
        self.values.clear();
        self.values.resize(body.nodes.len(), 0);
        for i in 0..body.nodes.len() {
            let v = match &body.nodes[i] {
                Node::Lit(v) => *v,
                Node::Var(ix) => inputs[*ix],
                Node::Op { op, args } => {
                    let w = body.widths[i].resolve(active_width);
                    let m = width_mask(w);
                    let mut buf = [0u64; 3];
                    for (k, &c) in args.iter().enumerate() {
                        buf[k] = self.values[c as usize] & m;
                    }
                    eval_op(*op, &buf[..args.len()], w)?
                }
                Node::Bool { conn, args } => {
                    let truth = |s: &Self, k: usize| s.values[args[k] as usize] != 0;
                    let b = match conn {
                        Connective::And => args.iter().all(|&c| self.values[c as usize] != 0),
                        Connective::Or => args.iter().any(|&c| self.values[c as usize] != 0),
                        Connective::Not => !truth(self, 0),
                        Connective::Implies => !truth(self, 0) || truth(self, 1),
                        Connective::Iff => truth(self, 0) == truth(self, 1),
                    };
                    u64::from(b)
                }
                Node::App { func, proj, out_count, args } => {
                    let m = width_mask(active_width);
                    let mut buf = [0u64; MAX_FUNCTION_ARITY];
                    for (k, &c) in args.iter().enumerate() {
                        buf[k] = self.values[c as usize] & m;
                    }
                    let out = app(*func, &buf[..args.len()]);
                    debug_assert_eq!(out.len(), *out_count);
                    out[*proj]
                }
            };
            self.values[i] = v;
        }
        Ok(self.values[body.root] != 0)
    }
}

/// One-shot convenience evaluation with witnesses supplied by name.
pub fn evaluate_body(
    instance: &SynthesisInstance,
    assignment: &Assignment,
    witnesses: &BTreeMap<String, Program>,
    active_width: u32,
) -> Result<bool, EvalError> {
    let body = CompiledBody::compile(instance)?;
    body.check_widths(active_width)?;
    let mut aligned = Vec::with_capacity(instance.functions.len());
    for f in &instance.functions {
        let p = witnesses
            .get(&f.name)
            .ok_or_else(|| EvalError::WitnessMissing(f.name.clone()))?;
        aligned.push(p.clone());
    }
    let inputs: Vec<u64> = instance
        .universals
        .iter()
        .map(|u| {
            assignment
                .get(&u.name)
                .map(|w| w.value)
                .ok_or_else(|| EvalError::UnknownSymbol(u.name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut evaluator = BodyEvaluator::new();
    evaluator.evaluate(&body, &aligned, &inputs, active_width)
}
