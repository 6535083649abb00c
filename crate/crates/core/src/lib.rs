//! Fourier summation pairs built from Hermite-Biehler exponential sums and
//! from eta-product q-series, with exact and numerical cross-checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dbspace;
pub mod error;
pub mod freqalg;
pub mod hermite;
pub mod measures;
pub mod qmodular;
pub mod quadrature;
pub mod selfdual;
pub mod spectra;
pub mod verifier;

pub use error::{Error, Result};
