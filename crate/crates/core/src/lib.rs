//! Workbench for type-2 feasible computation.
//!
//! * [`terms`]: basic feasible functional terms, table oracles and a
//!   cost-instrumented evaluator.
//! * [`sop`]: second-order polynomials, the norm functional, regularization
//!   and witness terms.
//! * [`schemes`]: sequence coding, multiple limited recursion on notation,
//!   polynomially bounded recursion on notation, and clocked recursion of
//!   polynomial length.
//! * [`bounds`]: majorizing second-order polynomials for terms.
//! * [`otm`]: oracle Turing machines under unit and length oracle cost.
//! * [`selftest`]: the property suites behind `bfflab selftest`.

pub mod bounds;
pub mod nat;
pub mod otm;
pub mod schemes;
pub mod selftest;
pub mod sexpr;
pub mod sop;
pub mod terms;

pub use nat::Nat;
