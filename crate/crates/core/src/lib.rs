//! Jacobi Hamiltonian Integrators.

pub mod birealization;
pub mod diagnostics;
pub mod error;
pub mod generating;
pub mod integrator;
pub mod jacobi;
pub mod jets;
pub mod models;
pub mod reproduce;

pub use error::{JhiError, Result};
