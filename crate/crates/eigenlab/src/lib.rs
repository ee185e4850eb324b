//! Numerical laboratory for generalized principal eigenvalues of linear
//! second-order elliptic operators Lu = tr(a D²u) + b·∇u + cu on bounded and
//! unbounded domains, together with the maximum-principle verdicts those
//! eigenvalues encode.
//!
//! Three related quantities are computed and cross-validated:
//!
//! * `lambda1` — the supremum of λ admitting a positive supersolution of
//!   (L + λ)φ ≤ 0; on bounded smooth domains this is the classical Dirichlet
//!   principal eigenvalue, approached here by exhausting the domain with
//!   bounded truncations.
//! * `lambda1_prime` — the infimum over λ admitting a bounded positive
//!   subsolution vanishing at the boundary (relevant to uniqueness).
//! * `lambda1_doubleprime` — the supremum over λ admitting a bounded-below
//!   supersolution; bracketed between tail quantities.
//!
//! The crate's primary interface is the library plus the runnable programs
//! under `examples/`; a thin `eigenlab` binary exposes the same capabilities
//! as subcommands for scripting.

pub mod asymptotics;
pub mod config;
pub mod discrete;
pub mod domain;
pub mod eig;
pub mod error;
pub mod expr;
pub mod grid;
pub mod operator;
pub mod principles;
pub mod scenarios;
pub mod shooting;
pub mod sparse;
pub mod unbounded;

pub use error::{Error, Result};
