//! Simulation toolkit for non-Hermitian quantum circuits.
//!
//! The circuit model extends the usual `{H, T, CNOT}` gate set with the
//! non-unitary diagonal gate `G(g) = diag(g, 1/g)`. States are kept
//! unnormalized with a logarithmic scale ledger so that long runs of `G`
//! never overflow a double.
//!
//! Layout:
//!
//! - [`state`]: [`ScaledState`], norms, marginals, collapse.
//! - [`gates`]: [`GateOp`], gate matrices and the amplitude kernels.
//! - [`circuit`]: text format, exact runs and shot sampling.
//! - [`cnf`] / [`sat`]: DIMACS input, the flip-on-non-solution oracle, and
//!   the amplified decision / counting procedure.
//! - [`synthesis`]: single-qubit norm-changing plans, the controlled-G
//!   construction and a small `{H, T}` word search.
//! - [`dilation`]: rewriting `G` into a unitary on target+ancilla followed by
//!   postselection, with success-probability bookkeeping.
//! - [`boson`]: the two-mode many-boson qubit and its particle budget.
//! - [`cli`]: the `nqc` command line front end.
//!
//! Qubit `k` is bit `k` of the basis index everywhere (little-endian).

pub mod boson;
pub mod circuit;
pub mod cli;
pub mod cnf;
pub mod dilation;
pub mod error;
pub mod gates;
pub mod matrix;
pub mod par;
pub mod rng;
pub mod sat;
pub mod state;
pub mod synthesis;

pub use circuit::{Circuit, Instruction, RunReport};
pub use cnf::CnfFormula;
pub use error::{Error, Result};
pub use gates::GateOp;
pub use matrix::{Mat2, Mat4};
pub use state::ScaledState;

pub use num_complex::Complex64;

/// Tolerance used for every probability normalization check.
pub const PROB_TOL: f64 = 1e-12;
