//! Numerics for the simplex log-linear integral
//!
//! The central object is the function
//!
//! ```text
//! J(y_0, ..., y_d) = ∫_{T_d}  exp( (1 - u_+) y_0 + Σ_i u_i y_i )  du,
//! ```
//!
//! the integral over the unit simplex `T_d = {u ∈ [0,∞)^d : Σ u_i ≤ 1}` of the
//! exponential of the linear interpolant taking value `y_i` at vertex `i`.
//! `J` equals the d-th divided difference of `exp` at the nodes `y_0..y_d`,
//! which makes the naive difference-quotient evaluation catastrophically
//! cancellative when arguments cluster. [`jfun`] evaluates `J` to full double
//! precision across that regime; [`jderiv`] produces exact first and second
//! partial derivatives via argument duplication and closed forms;
//! [`dirichlet`] provides the Gamma/Dirichlet machinery behind `J`'s
//! probabilistic representation together with a Monte-Carlo estimator;
//! [`oracle`] holds brute-force quadrature and finite-difference references
//! used by the test suites; [`mle`] fits maximum-likelihood log-linear
//! densities on simplicial partitions using the exact gradients.
//!
//! All functions are pure; everything is safe for concurrent use. With the
//! default `parallel` feature, Monte-Carlo sampling and per-simplex work run
//! on rayon with a fixed reduction order, so results are bitwise identical to
//! the sequential fallback (`--no-default-features`) and independent of the
//! thread count.

pub mod dirichlet;
pub mod jderiv;
pub mod jfun;
pub mod mle;
pub mod oracle;

pub(crate) mod util;
