//! Numerical verification of Leibniz-type operator identities.
//!
//! Operators act on functions through truncated Taylor jets. The crate
//! provides the operator families that solve the three-function identity
//! `D(fgh) - fD(gh) - gD(fh) - hD(fg) + fgD(h) + fhD(g) + ghD(f) = 0`,
//! residual checks for it and for the first- and second-order Leibniz rules,
//! a Faà di Bruno expansion of logarithmic derivatives, recovery of
//! coefficients from black-box operators via exponential conjugation, and a
//! nonlinear operator that satisfies only the diagonal form of the identity.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aichinger;
pub mod corpus;
pub mod counterexample;
pub mod error;
pub mod faa;
pub mod jet;
pub mod operators;

pub use error::{Error, Result};
pub use jet::{Jet, K_MAX};
