//! Solver library for semilinear systems of fractional differential equations
//! with distinct Caputo orders.
//!
//! Each component `φⱼ` obeys `ᶜDᵗ^{αⱼ} φⱼ = fⱼ(φ, t)`, `φⱼ(0) = ξⱼ` with
//! `αⱼ ∈ (0, 1]`. The system is solved in its integral form
//! `φⱼ = ξⱼ + J^{αⱼ} fⱼ(φ, ·)` by global-in-time Picard iteration, with
//! product-integration weights that integrate the singular kernel exactly.
//!
//! Modules:
//!
//! | module | contents |
//! |--------|----------|
//! | [`specfun`] | log-gamma, Mittag-Leffler series, Wendel bounds |
//! | [`fracgrid`] | uniform/graded grids, sampled paths, discrete norms |
//! | [`fracint`] | Riemann-Liouville integral weights, L1 Caputo derivative |
//! | [`rhs`] | L^p-Carathéodory right-hand sides and witness checks |
//! | [`contraction`] | a-priori contraction constants and the hypothesis gate |
//! | [`picard`] | the fixed-point solver and a predictor-corrector cross-check |
//! | [`boundary`] | nonexistence and nonuniqueness demonstrators |
//! | [`cli`] | config format and command implementations |
//! | [`acceptance`] | the end-to-end acceptance criteria |

// `!(x > 0.0)` is how NaN gets rejected; Lanczos coefficients are kept as published.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod acceptance;
pub mod boundary;
pub mod cli;
pub mod contraction;
pub mod exec;
pub mod fracgrid;
pub mod fracint;
pub mod picard;
pub mod rhs;
pub mod specfun;
pub mod summation;

pub use contraction::{validity_gate, GateVerdict, OrderVector};
pub use fracgrid::{Grid, GridFunction};
pub use fracint::{QuadratureRule, WeightTable};
pub use picard::{picard_solve, ProblemSpec, SolveReport};
pub use rhs::CaratheodoryRhs;
