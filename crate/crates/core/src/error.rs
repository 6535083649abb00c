//! Error type shared by every module.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frequency basis: {0}")]
    InvalidBasis(String),
    #[error("frequency bases differ")]
    BasisMismatch,
    #[error("frequency vector has length {got}, basis has rank {expected}")]
    RankMismatch { expected: usize, got: usize },
    #[error("exponential overflows at z = {0}")]
    Range(Complex64),
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("not Hermite-Biehler: {reason} at z = {witness}")]
    NotHermiteBiehler { witness: Complex64, reason: String },
    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("scan step underflows at x = {0}")]
    StepUnderflow(f64),
    #[error("function vanishes on the real axis at x = {0}")]
    RealZero(f64),
    #[error("lowest frequencies of the two components differ")]
    FrequencyMismatch,
    #[error("zero spectral gap")]
    ZeroGap,
    #[error("non-finite sample at x = {0}")]
    NonFiniteSample(f64),
    #[error("point {z} lies within {dist:e} of an atom")]
    PoleProximity { z: Complex64, dist: f64 },
    #[error("measure has complex weights")]
    ComplexWeights,
    #[error("point must lie in the open upper half plane, got {0}")]
    NotUpperHalfPlane(Complex64),
    #[error("leading coefficient {0} has no rational power")]
    IrrationalPower(String),
    #[error("exponent lattice violation: {0}")]
    ExponentLattice(String),
    #[error("eta-product exponents invalid: {0}")]
    EtaConditions(String),
    #[error("level {0} is not a perfect square")]
    NotSquare(u64),
    #[error("truncation tail {tail:e} exceeds target {target:e}")]
    TailTooLarge { tail: f64, target: f64 },
    #[error("quadrature did not reach tolerance {0:e}")]
    Quadrature(f64),
    #[error("no sample supplied at node {0}")]
    MissingSample(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
