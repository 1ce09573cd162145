//! Minimal solution branches, extremal parameters, stability certificates
//! and regularity diagnostics for
//!
//! ```text
//! -Δu - b(x)|∇u|² = λ g(u)  in B_R,    u = 0 on ∂B_R
//! ```
//!
//! on radial domains, with the dimension `n` entering only as the
//! coefficient of the radial Laplacian.

// Guards such as `!(x > 0.0)` are written so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branch;
pub mod diagnostics;
pub mod discretize;
pub mod error;
pub mod problem;
pub mod solve;
pub mod stability;

pub use error::{Error, Result};
