//! Set-valued tensor complementarity problems.
//!
//! Given a tensor family `B(w)`, a vector family `p(w)` and a finite-set
//! valued map `Omega(v)`, the problem asks for `v >= 0` and some
//! `w` in `Omega(v)` with
//!
//! ```text
//! B(w) v^{m-1} + p(w) >= 0,    v^T (B(w) v^{m-1} + p(w)) = 0.
//! ```
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: dense tensors, contractions, row subtensors, the general
//!   tensor product.
//! - [`tcp`]: the single-tensor problem, residuals and solvers.
//! - [`classes`]: certificate-producing checkers for structured tensor
//!   classes (S, semipositive, R0, P).
//! - [`svtcp`]: the set-valued problem, its merit function, and the
//!   set-level checks and probes.
//! - [`io`]: the JSON instance format and machine-readable reports.

pub mod classes;
pub mod error;
pub mod io;
mod search;
pub mod svtcp;
pub mod tcp;
pub mod tensor;

pub use classes::{ClassVerdict, SearchBudget, VerdictStatus};
pub use error::{Error, Result};
pub use svtcp::{OmegaMap, Piece, Predicate, SvtcpInstance, TensorFamily, VectorFamily};
pub use tcp::{SolveReport, SolveStatus, SolverConfig, SolverKind, TcpInstance};
pub use tensor::DenseTensor;
