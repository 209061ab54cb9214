//! Central limit theorems for functionals of empirical measures.
//!
//! The crate evaluates `√N (U(μ_N) − U(μ))` for empirical measures of
//! independent non-identically distributed samples and of finite-state
//! Markov chains, predicts its Gaussian limit from the linear functional
//! derivative of `U`, and checks both by Monte Carlo.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod markov;
pub mod measures;
pub mod rng;
pub mod sequences;
pub mod transport;

pub use error::{Error, Result};
