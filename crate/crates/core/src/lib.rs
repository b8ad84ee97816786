//! Explicit performance benchmarks for line spectral estimation.
//!
//! The crate covers the deterministic K-tone model `Y = A(ω)X + N`, its
//! local Fisher references, a GLRT-based pairwise kernel, the
//! ordered-prior-corrected frequency benchmark, the plug-in amplitude
//! benchmark, MUSIC/least-squares reference estimators and a seeded Monte
//! Carlo harness that compares them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ampbench;
pub mod error;
pub mod estimators;
pub mod fisher;
pub mod freqbench;
pub mod glrtkernel;
pub mod harness;
pub mod linalg;
pub mod linmodel;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use linmodel::{ModelConfig, Snapshot};

pub use nalgebra;
pub use num_complex::Complex64;
