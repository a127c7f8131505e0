//! Front-end reductions: turning verification and decision questions into
//! the solver's input formulas.
//!
//! Four producers feed the same back end:
//!
//! * [`loops`] — safety (inductive invariants), termination (ranking
//!   functions), and non-termination (recurrence sets) of simple guarded
//!   loops over bitvector state;
//! * [`qbf`] — quantified boolean formulas from QDIMACS files, decided at
//!   width one, with a negation transform for dual-rail solving;
//! * [`superopt`] — shortest-program search against a reference program's
//!   own semantics;
//! * [`corpus`] — the bundled benchmark suite and input-format dispatch.

pub mod corpus;
pub mod loops;
pub mod qbf;
pub mod superopt;

pub use corpus::{load_corpus, BenchmarkCase, CaseStatus, InputFormat};
pub use loops::{
    encode_nontermination, encode_safety, encode_termination, parse_loop_file, LoopFile,
    LoopSystem, StateVar,
};
pub use qbf::{encode_qbf, negate_qbf, parse_qdimacs, qbf_truth, QbfFormula};
pub use superopt::{encode_superopt, program_to_exprs};
