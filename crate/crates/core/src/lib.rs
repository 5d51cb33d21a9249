//! Rothe time stepping, P1 finite elements and verification diagnostics for rate-independent
//! evolutions `dR1(du/dt) - L_t u + DW0(u) ∋ f` with homogeneous Dirichlet data.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimates;
pub mod fem;
pub mod harness;
pub mod increment;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod rothe;
pub mod zero_dim;

pub use error::{Error, Result};
