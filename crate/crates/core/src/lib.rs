//! Spectral-volume solver with a jump-enriched, sign-constrained recovery for
//! the one-dimensional Euler equations.

pub mod cases;
pub mod cli;
pub mod discretization;
pub mod error;
pub mod euler;
pub mod linalg;
pub mod profile;
pub mod qp;
pub mod recovery;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};
