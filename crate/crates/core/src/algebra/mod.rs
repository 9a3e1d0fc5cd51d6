//! Exact symbolic arithmetic in the Cuntz algebra `O_N`.
//!
//! Elements are finite sums of words `S_J S_K*` over the alphabet
//! `{0, …, N-1}` with complex coefficients, held in a canonical form keyed by
//! gauge degree. The module also provides the gauge expectation, the state
//! `φ = τ∘E`, and the matrix picture `F_N^ℓ ≅ M_{N^ℓ}`.

mod element;
mod json;
mod matrix;
mod word;

pub use element::{CuntzElement, CuntzTerm, MAX_ALPHABET};
pub use json::{ElementJson, MatrixJson, TermJson};
pub use matrix::{flip_matrix, flip_unitary, from_matrix, from_matrix_with, identity_matrix, to_matrix, CMatrix};
pub use word::MultiIndex;

use thiserror::Error;

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
pub const DEFAULT_EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("alphabet mismatch: N={left} vs N={right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("letter {letter} out of range for N={n}")]
    LetterOutOfRange { letter: u8, n: usize },
    #[error("invalid alphabet size N={0}")]
    InvalidAlphabet(usize),
    #[error("flip unitary needs N >= 2, got N={0}")]
    FlipNeedsTwoLetters(usize),
    #[error("{coeffs} coefficients for {elems} elements")]
    LengthMismatch { coeffs: usize, elems: usize },
    #[error("empty linear combination")]
    EmptyCombination,
    #[error("element is not gauge invariant")]
    NotGaugeInvariant,
    #[error("element needs level {required}, requested level {level}")]
    LevelTooSmall { required: usize, level: usize },
    #[error("matrix of size {rows}x{cols} is not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix size {size} is not a power of N={n}")]
    NotPowerOfN { size: usize, n: usize },
    #[error("tolerance {0} outside (0, 1e-3)")]
    InvalidTolerance(f64),
    #[error("malformed input: {0}")]
    Format(String),
}

/// Tolerances for dropping coefficients and deciding equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarConfig {
    pub zero_tol: f64,
    pub equality_tol: f64,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        ScalarConfig {
            zero_tol: DEFAULT_ZERO_TOL,
            equality_tol: DEFAULT_EQUALITY_TOL,
        }
    }
}

impl ScalarConfig {
    pub fn new(zero_tol: f64, equality_tol: f64) -> Result<Self, AlgebraError> {
        for t in [zero_tol, equality_tol] {
            if !(t > 0.0 && t < 1e-3) {
                return Err(AlgebraError::InvalidTolerance(t));
            }
        }
        Ok(ScalarConfig {
            zero_tol,
            equality_tol,
        })
    }
}
