//! Arithmetic of generalized polygonal-number forms.
//!
//! The crate is organized around five layers:
//!
//! * [`polyform`] — evaluation and exhaustive representation search for
//!   weighted sums of generalized m-gonal numbers.
//! * [`escalate`] — escalation trees over coefficient prefixes, truant
//!   bookkeeping and the classification of prefixes by their obstruction
//!   primes and dropout patterns.
//! * [`padic`] — square classes, Hilbert symbols and certified local
//!   representation tests for integral quadratic forms over the p-adic
//!   integers.
//! * [`lattice`] — integer kernel lattices, orthogonal complements of
//!   hyperplane pairs, and the explicit sublattice constructions used to
//!   decide local even universality.
//! * [`coverage`] — residue coverage of `t(m-2)+r` classes by complement
//!   lattices, multi-vector unions, and the dropout obstruction checks.
//!
//! [`verify`] exposes every check as a named strategy behind a common
//! trait so that the CLI (and tests) can run them by name.

pub mod arith;
pub mod coverage;
pub mod escalate;
pub mod lattice;
pub mod padic;
pub mod polyform;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("p-adic working precision exhausted (needed {needed} digits at p={p}, max {max})")]
    Precision { p: i64, needed: u32, max: u32 },
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
