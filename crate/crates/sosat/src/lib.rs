//! Decision procedure for existentially quantified second-order formulas over
//! finite bitvector universes.
//!
//! A query `∃S1..Sm . Q1 x1 .. Qn xn . body` asks whether word-valued functions
//! `S1..Sm` exist making the quantified body true over all (or some) values of
//! the first-order variables. The engine answers by synthesising the `Si` as
//! loop-free bitvector programs inside a counterexample-guided refinement loop:
//! candidates are proposed from a growing set of concrete inputs, refuted by a
//! verifier that searches for counterexamples, and accepted once no refutation
//! exists. Unsatisfiability is concluded when the candidate length exceeds the
//! exhaustion bound for the input space.
//!
//! Module map:
//! - [`lang`]: the loop-free program language, its interpreter, canonical form,
//!   and text format
//! - [`formula`]: second-order formulas, parsing, Skolemization, body evaluation
//! - [`sat`]: CNF construction, bit-level circuits, and SAT solver backends
//! - [`synth`]: the three candidate-synthesis strategies (explicit enumeration,
//!   SAT-based symbolic search, genetic programming)
//! - [`verify`]: counterexample search and constant generalization across widths
//! - [`cegis`]: the refinement loop, parameter walk, and run reporting
//! - [`encodings`]: front ends turning safety/termination/non-termination/QBF/
//!   superoptimisation queries into formulas, plus the bundled benchmark corpus

pub mod cegis;
pub mod encodings;
pub mod formula;
pub mod lang;
pub mod sat;
pub mod synth;
pub mod verify;
