//! Refutation tooling for 3CNF formulas built around the clause-cloud reduction to
//! independent set: formula generation and DIMACS I/O, the cloud graphs, narrow
//! mod-2 elimination (GE3), an exact vector witness showing the theta relaxation
//! reaches `m` whenever GE3 fails, a small dense theta solver, and finite-scale
//! structural checkers.
//!
//! Numeric code is generic over [`Real`] (`f32`/`f64`); the witness is exact and
//! reports its objective as an [`Exact`] rational.

pub mod error;
pub mod formula;
pub mod ge3;
pub mod graph;
pub mod linalg;
pub mod reduction;
mod scalar;
pub mod structure;
pub mod theta;
pub mod witness;

pub use error::{Error, Result};
pub use formula::{Assignment, Clause3, Formula, Literal, XorEquation};
pub use ge3::{saturate, Ge3Closure};
pub use graph::Graph;
pub use reduction::{build_graph, CloudGraph, CloudVertex, Variant};
pub use scalar::Real;

/// Exact rational used for witness objectives.
pub type Exact = num_rational::Ratio<i64>;

pub type SymMatrixF64 = linalg::SymMatrix<f64>;
pub type SymMatrixF32 = linalg::SymMatrix<f32>;
pub type ThetaOptionsF64 = theta::ThetaOptions<f64>;
pub type ThetaSolutionF64 = theta::ThetaSolution<f64>;
pub type ThetaSolutionF32 = theta::ThetaSolution<f32>;
