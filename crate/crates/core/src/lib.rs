//! Randomized Kaczmarz on doubly-noisy linear systems: problem generators,
//! the RK solver, convergence-horizon bounds and reproducible experiments.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod problems;
pub mod rk;
pub mod rng;

pub use error::{Error, Result};
