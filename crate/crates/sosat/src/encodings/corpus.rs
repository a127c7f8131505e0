//! The bundled benchmark corpus: bit-manipulation synthesis cases with
//! reference solution lengths, plus two reverse-engineered obfuscated
//! routines.
//!
//! Each case is a formula file; the manifest carries its difficulty status
//! and, where a straight-line reference exists, that reference's
//! instruction count. Cases whose specification uses the left-shift
//! extension opcode get it enabled in the search language, since a solver
//! restricted to the core set could not even restate such a body.

use super::qbf::parse_qdimacs;
use crate::formula::{parse_formula, BodyExpr, FormulaError, SOSFormula};
use crate::lang::Opcode;

/// Whether a case is expected to be solved within routine budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseStatus {
    /// Solvable quickly; regressions here are failures.
    Solvable,
    /// Out of practical reach; kept for honesty about the frontier.
    KnownHard,
}

/// One corpus entry.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub id: &'static str,
    pub formula: SOSFormula,
    /// Instruction count of the straight-line reference, when one exists.
    /// An upper bound for a correct solver, not a target: the search may
    /// find shorter programs than the reference.
    pub expected_length: Option<usize>,
    pub status: CaseStatus,
    /// The specification needs the left-shift extension opcode, so the
    /// search language should include it for this case.
    pub enable_shl: bool,
}

macro_rules! corpus_files {
    ($($id:literal),* $(,)?) => {
        &[ $( ($id, include_str!(concat!("../../corpus/", $id, ".sos"))) ),* ]
    };
}

/// Case sources in manifest order.
const FILES: &[(&str, &str)] = corpus_files![
    "P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10", "P11", "P12", "P13", "P14",
    "P15", "P16", "P17", "P18", "P19", "P20", "P21", "P22", "P23", "P24", "P25", "P26", "P27",
    "B28", "B29",
];

const MANIFEST: &str = include_str!("../../corpus/manifest.tsv");

fn body_uses_shl(body: &BodyExpr) -> bool {
    let mut found = false;
    body.visit(&mut |e| {
        if let BodyExpr::Op(Opcode::Shl, _) = e {
            found = true;
        }
    });
    found
}

/// Load every corpus case. The bundled sources are compiled in, so this
/// only fails if they were corrupted at build time.
pub fn load_corpus() -> Result<Vec<BenchmarkCase>, FormulaError> {
    let mut cases = Vec::with_capacity(FILES.len());
    for line in MANIFEST.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(status), Some(expected)) =
            (fields.next(), fields.next(), fields.next())
        else {
            return Err(FormulaError::Syntax {
                line: 0,
                message: format!("manifest line `{line}` needs id, status, expected length"),
            });
        };
        let (id, source) = *FILES
            .iter()
            .find(|(f, _)| *f == id)
            .ok_or_else(|| FormulaError::UnknownSymbol(id.to_string()))?;
        let formula = parse_formula(source)?;
        let status = match status {
            "solvable" => CaseStatus::Solvable,
            "known-hard" => CaseStatus::KnownHard,
            other => {
                return Err(FormulaError::Syntax {
                    line: 0,
                    message: format!("unknown status `{other}` for case {id}"),
                })
            }
        };
        let expected_length = match expected {
            "-" => None,
            n => Some(n.parse::<usize>().map_err(|_| FormulaError::Syntax {
                line: 0,
                message: format!("bad expected length `{n}` for case {id}"),
            })?),
        };
        let enable_shl = body_uses_shl(&formula.body);
        cases.push(BenchmarkCase { id, formula, expected_length, status, enable_shl });
    }
    Ok(cases)
}

/// Recognized benchmark input formats, by file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// A formula file.
    Formula,
    /// A loop program file.
    Loop,
    /// A QDIMACS file.
    Qdimacs,
}

impl InputFormat {
    /// Infer the format from a file name. `.sos` is a formula, `.loop` a
    /// loop program, `.qdimacs`/`.qcnf`/`.cnf` QDIMACS.
    pub fn from_name(name: &str) -> Option<InputFormat> {
        let ext = name.rsplit('.').next()?;
        match ext.to_ascii_lowercase().as_str() {
            "sos" => Some(InputFormat::Formula),
            "loop" => Some(InputFormat::Loop),
            "qdimacs" | "qcnf" | "cnf" => Some(InputFormat::Qdimacs),
            _ => None,
        }
    }
}

/// Parse benchmark text in the given format down to a formula. Loop files
/// must carry an assertion and are read as safety questions; use the loop
/// encoders directly for termination questions.
pub fn parse_input(format: InputFormat, text: &str) -> Result<SOSFormula, FormulaError> {
    match format {
        InputFormat::Formula => parse_formula(text),
        InputFormat::Loop => {
            let file = super::loops::parse_loop_file(text)?;
            let assertion = file.assertion.clone().ok_or_else(|| FormulaError::Syntax {
                line: 0,
                message: "loop file has no (assert ...) to check".into(),
            })?;
            super::loops::encode_safety(&file.system, &assertion, file.width)
        }
        InputFormat::Qdimacs => super::qbf::encode_qbf(&parse_qdimacs(text)?),
    }
}
