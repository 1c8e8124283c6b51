//! Ground states of the pseudo-relativistic nonlinear Schrödinger equation
//!
//! ```text
//! √(−c²Δ + m²c⁴) u − mc² u + μ u = |u|^{p−2} u    in ℝⁿ
//! ```
//!
//! on a periodic box, their nonrelativistic limit `−Δu/(2m) + μu = |u|^{p−2}u`,
//! and the diagnostics that certify the limit `u_c → u_∞` in H¹.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod extension;
pub mod model;
pub mod radial_oracle;
pub mod solver;
pub mod sweep;
pub mod symbol;
pub mod variational;
