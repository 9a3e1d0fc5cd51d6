use nalgebra::DMatrix;
use num_complex::Complex64;

use super::element::check_alphabet;
use super::{AlgebraError, CuntzElement, CuntzTerm, MultiIndex, ScalarConfig, DEFAULT_EQUALITY_TOL};

pub type CMatrix = DMatrix<Complex64>;

pub fn identity_matrix(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Matrix of `a ∈ F_N^level` in `M_{N^level}`: `S_J S_K*` becomes the matrix
/// unit `e_{J,K}`, words enumerated lexicographically with the leftmost
/// letter most significant.
pub fn to_matrix(a: &CuntzElement, level: usize) -> Result<CMatrix, AlgebraError> {
    if !a.is_gauge_invariant() {
        return Err(AlgebraError::NotGaugeInvariant);
    }
    let lowered;
    let a = if a.max_k_len() > level {
        lowered = a.contracted(DEFAULT_EQUALITY_TOL);
        &lowered
    } else {
        a
    };
    let required = a.max_k_len();
    if required > level {
        return Err(AlgebraError::LevelTooSmall { required, level });
    }
    let n = a.n();
    let dim = n.pow(level as u32);
    let mut m = CMatrix::zeros(dim, dim);
    for t in a.terms() {
        let pad = level - t.k.len();
        for suffix in MultiIndex::all(n, pad) {
            let r = t.j.concat(&suffix).index(n);
            let c = t.k.concat(&suffix).index(n);
            m[(r, c)] += t.coeff;
        }
    }
    Ok(m)
}

pub fn from_matrix(m: &CMatrix, n: usize) -> Result<CuntzElement, AlgebraError> {
    from_matrix_with(m, n, &ScalarConfig::default())
}

/// Inverse of [`to_matrix`]; the level is read off the size `N^ℓ`.
pub fn from_matrix_with(m: &CMatrix, n: usize, cfg: &ScalarConfig) -> Result<CuntzElement, AlgebraError> {
    check_alphabet(n)?;
    if m.nrows() != m.ncols() {
        return Err(AlgebraError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let level = power_level(m.nrows(), n).ok_or(AlgebraError::NotPowerOfN { size: m.nrows(), n })?;
    let mut terms = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v.norm() >= cfg.zero_tol {
                terms.push(CuntzTerm::new(
                    v,
                    MultiIndex::from_index(n, level, r),
                    MultiIndex::from_index(n, level, c),
                ));
            }
        }
    }
    CuntzElement::from_terms_with(n, terms, cfg)
}

/// `ℓ` with `n^ℓ = size`, if any.
pub(crate) fn power_level(size: usize, n: usize) -> Option<usize> {
    if size == 0 {
        return None;
    }
    if n == 1 {
        return (size == 1).then_some(0);
    }
    let mut level = 0;
    let mut p = 1usize;
    while p < size {
        p = p.checked_mul(n)?;
        level += 1;
    }
    (p == size).then_some(level)
}

/// The flip unitary `F = Σ_{i,j} S_i S_j S_i* S_j*`.
pub fn flip_unitary(n: usize) -> Result<CuntzElement, AlgebraError> {
    check_alphabet(n)?;
    if n < 2 {
        return Err(AlgebraError::FlipNeedsTwoLetters(n));
    }
    let one = Complex64::new(1.0, 0.0);
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n as u8 {
        for j in 0..n as u8 {
            // S_i S_j S_i* S_j* = S_{ij} (S_j S_i)*
            terms.push(CuntzTerm::new(one, vec![i, j], vec![j, i]));
        }
    }
    CuntzElement::from_terms(n, terms)
}

/// The tensor flip on `C^n ⊗ C^n` as an `n² × n²` permutation matrix.
pub fn flip_matrix(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            m[(i * n + j, j * n + i)] = Complex64::new(1.0, 0.0);
        }
    }
    m
}
