//! Symbolic computation in Cuntz algebras `O_N`.

pub mod algebra;
pub mod endo;
pub mod entropy;
pub mod group;
pub mod masa;
pub mod munit;
pub mod pipeline;

pub use algebra::{AlgebraError, CMatrix, CuntzElement, CuntzTerm, MultiIndex, ScalarConfig};
pub use endo::{Endomorphism, EndoError, PermutationSpec};
pub use group::{DualGroup, GroupError};
pub use num_complex::Complex64;
