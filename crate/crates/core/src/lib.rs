//! Regularized traces of classical pseudodifferential operators on the circle
//! and the flat torus, with finite-difference checks of conformal anomalies.
//!
//! The crate is organised bottom-up:
//!
//! * [`symbol_core`]: homogeneous symbol calculus, cut-off integrals, residues.
//! * [`complex_powers`]: resolvent parametrices, `Q^{-z}` and `log Q` symbols.
//! * [`spectral_models`]: model operators, heat traces, heat fits, Mellin zeta.
//! * [`laurent_engine`]: Laurent data of `TR(A Q^{-z})` and weighted traces.
//! * [`conformal_harness`]: conformal families, covariance and anomaly checks.
//! * [`cli`]: job configs, reports and the eigendecomposition cache.

pub mod cli;
pub mod complex_powers;
pub mod conformal_harness;
pub mod error;
pub mod field;
pub mod laurent_engine;
pub mod linalg;
pub mod par;
pub mod quad;
pub mod special;
pub mod spectral_models;
pub mod symbol_core;

pub use error::{Error, Result};
pub use num_complex::Complex64;
