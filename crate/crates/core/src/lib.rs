//! Monotone iteration for nonlinear four-point boundary value problems
//!
//! ```text
//! -u'' = ψ(x, u, u'),   u'(0) = λ₁ u(ξ),   u'(1) = λ₂ u(η)
//! ```
//!
//! built on the closed-form Green's kernels of the shifted operator
//! `-u'' - k u`, together with checks of the sign and Lipschitz conditions
//! on `k`, a Nagumo derivative bound and an independent finite-difference
//! reference solver.

// `!(a < b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod grid;
pub mod kernel;
pub mod linear_bvp;
pub mod monotone;
pub mod oracle;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use grid::GridFunction;
pub use kernel::{green_dx_sign_check, green_eval, normalization, BoundaryConfig, Regime, ShiftedOperator};
pub use linear_bvp::{boundary_residuals, solve_linear, LinearRhs, LinearSolver};
