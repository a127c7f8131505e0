//! CNF construction and SAT solving.
//!
//! The synthesiser and verifier build propositional formulas through
//! [`circuit::Circuit`] and hand them to a [`SatBackend`]: either the
//! in-process solver or any external binary speaking DIMACS on a file
//! argument and printing an `s`/`v` result to stdout.

pub mod circuit;

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use thiserror::Error;

/// A DIMACS-convention literal: nonzero, sign = polarity, |lit| = variable.
pub type Lit = i32;

#[derive(Debug, Default, Clone)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
}

#[derive(Debug, Error)]
pub enum SatError {
    #[error("clause capacity exceeded: {clauses} clauses (limit {limit})")]
    Capacity { clauses: usize, limit: usize },
    #[error("external solver failed: {0}")]
    External(String),
    #[error("solver error: {0}")]
    Backend(String),
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh_var(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        debug_assert!(lits.iter().all(|&l| l != 0 && l.unsigned_abs() <= self.num_vars));
        self.clauses.push(lits.to_vec());
    }

    pub fn var_count(&self) -> u32 {
        self.num_vars
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

/// A satisfying assignment. Variables the backend never mentioned default to
/// false.
#[derive(Debug, Clone)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn from_true_literals(lits: &[Lit], num_vars: u32) -> Self {
        let mut values = vec![false; num_vars as usize + 1];
        for &l in lits {
            let v = l.unsigned_abs() as usize;
            if v < values.len() {
                values[v] = l > 0;
            }
        }
        Model { values }
    }

    pub fn value(&self, lit: Lit) -> bool {
        let v = lit.unsigned_abs() as usize;
        let assigned = self.values.get(v).copied().unwrap_or(false);
        if lit > 0 { assigned } else { !assigned }
    }
}

#[derive(Debug)]
pub enum SatOutcome {
    Sat(Model),
    Unsat,
}

/// Which SAT solver answers queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatBackend {
    /// The linked in-process solver.
    Builtin,
    /// An external binary: invoked as `<path> <dimacs-file>`, expected to
    /// print `s SATISFIABLE`/`s UNSATISFIABLE` and `v` model lines.
    External(PathBuf),
}

impl Default for SatBackend {
    fn default() -> Self {
        SatBackend::Builtin
    }
}

impl SatBackend {
    pub fn solve(&self, cnf: &CnfFormula) -> Result<SatOutcome, SatError> {
        // Empty clauses are contradictions; the in-process solver reports
        // them as a construction error rather than an UNSAT certificate, so
        // short-circuit uniformly here.
        if cnf.clauses.iter().any(Vec::is_empty) {
            return Ok(SatOutcome::Unsat);
        }
        if cnf.clauses.is_empty() {
            return Ok(SatOutcome::Sat(Model::from_true_literals(&[], cnf.num_vars)));
        }
        match self {
            SatBackend::Builtin => solve_builtin(cnf),
            SatBackend::External(path) => solve_external(path, cnf),
        }
    }
}

fn solve_builtin(cnf: &CnfFormula) -> Result<SatOutcome, SatError> {
    use splr::Certificate;
    match Certificate::try_from(cnf.clauses.clone()) {
        Ok(Certificate::SAT(lits)) => {
            let lits: Vec<Lit> = lits.into_iter().collect();
            Ok(SatOutcome::Sat(Model::from_true_literals(&lits, cnf.num_vars)))
        }
        Ok(Certificate::UNSAT) => Ok(SatOutcome::Unsat),
        Err(e) => Err(SatError::Backend(e.to_string())),
    }
}

fn solve_external(path: &PathBuf, cnf: &CnfFormula) -> Result<SatOutcome, SatError> {
    let mut file = tempfile::Builder::new()
        .prefix("sosat-query-")
        .suffix(".cnf")
        .tempfile()
        .map_err(|e| SatError::External(format!("temp file: {e}")))?;
    file.write_all(cnf.to_dimacs().as_bytes())
        .map_err(|e| SatError::External(format!("write: {e}")))?;
    let output = Command::new(path)
        .arg(file.path())
        .output()
        .map_err(|e| SatError::External(format!("spawn {}: {e}", path.display())))?;
    let stdout = String::from_utf8_lossy(&output.stdout);

    let mut verdict: Option<bool> = None;
    let mut lits: Vec<Lit> = Vec::new();
    for line in stdout.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            match rest.trim() {
                "SATISFIABLE" => verdict = Some(true),
                "UNSATISFIABLE" => verdict = Some(false),
                other => return Err(SatError::External(format!("unknown status `{other}`"))),
            }
        } else if let Some(rest) = line.strip_prefix("v ") {
            for tok in rest.split_whitespace() {
                let lit: Lit = tok
                    .parse()
                    .map_err(|_| SatError::External(format!("bad model literal `{tok}`")))?;
                if lit != 0 {
                    lits.push(lit);
                }
            }
        }
    }
    match verdict {
        Some(true) => Ok(SatOutcome::Sat(Model::from_true_literals(&lits, cnf.num_vars))),
        Some(false) => Ok(SatOutcome::Unsat),
        None => Err(SatError::External(format!(
            "no `s` status line in solver output (exit {:?})",
            output.status.code()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_sat() -> CnfFormula {
        // (a ∨ b) ∧ (¬a) — satisfiable with b = true.
        let mut cnf = CnfFormula::new();
        let a = cnf.fresh_var();
        let b = cnf.fresh_var();
        cnf.add_clause(&[a, b]);
        cnf.add_clause(&[-a]);
        cnf
    }

    fn tiny_unsat() -> CnfFormula {
        let mut cnf = CnfFormula::new();
        let a = cnf.fresh_var();
        cnf.add_clause(&[a]);
        cnf.add_clause(&[-a]);
        cnf
    }

    #[test]
    fn builtin_solves_and_models() {
        match SatBackend::Builtin.solve(&tiny_sat()).unwrap() {
            SatOutcome::Sat(m) => {
                assert!(!m.value(1));
                assert!(m.value(2));
                assert!(m.value(-1));
            }
            SatOutcome::Unsat => panic!("expected SAT"),
        }
        assert!(matches!(SatBackend::Builtin.solve(&tiny_unsat()).unwrap(), SatOutcome::Unsat));
    }

    #[test]
    fn empty_clause_is_unsat_and_empty_formula_is_sat() {
        let mut cnf = CnfFormula::new();
        cnf.fresh_var();
        cnf.clauses.push(Vec::new());
        assert!(matches!(SatBackend::Builtin.solve(&cnf).unwrap(), SatOutcome::Unsat));

        let empty = CnfFormula::new();
        assert!(matches!(SatBackend::Builtin.solve(&empty).unwrap(), SatOutcome::Sat(_)));
    }

    #[test]
    fn dimacs_serialisation() {
        let cnf = tiny_sat();
        assert_eq!(cnf.to_dimacs(), "p cnf 2 2\n1 2 0\n-1 0\n");
    }

    #[cfg(unix)]
    #[test]
    fn external_backend_runs_a_script() {
        use std::os::unix::fs::PermissionsExt;
        // A stand-in solver: answers SAT with a fixed model for any input.
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fakesat.sh");
        std::fs::write(&script, "#!/bin/sh\necho 's SATISFIABLE'\necho 'v -1 2 0'\n").unwrap();
        let mut perms = std::fs::metadata(&script).unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&script, perms).unwrap();

        let backend = SatBackend::External(script);
        match backend.solve(&tiny_sat()).unwrap() {
            SatOutcome::Sat(m) => {
                assert!(!m.value(1));
                assert!(m.value(2));
            }
            SatOutcome::Unsat => panic!("expected SAT"),
        }
    }
}
