//! Multiplicative unitaries on `C^N ⊗ C^N`: the pentagon equation, the
//! factorization `U_γ = W·F` for endomorphisms with `γ² = Φ∘γ`, the
//! endomorphism `ρ_{VF}` of a given `V`, and finite-level commutant
//! dimensions.
//!
//! Commutant dimensions are finite-level proxies only. They are not a
//! certificate of irreducibility.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    flip_matrix, from_matrix_with, to_matrix, AlgebraError, CMatrix, CuntzElement, MultiIndex, ScalarConfig,
};
use crate::endo::{check_square_root_relation_with, EndoError, Endomorphism};

/// Pivot threshold for rank decisions in commutant computations.
pub const RANK_THRESHOLD: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MunitError {
    #[error("matrix is {rows}x{cols}, expected a square matrix of size N² for some N >= 1")]
    Shape { rows: usize, cols: usize },
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("associated unitary is not in F_N^2")]
    NotInLevelTwo,
    #[error("γ² = Φ∘γ fails; no multiplicative unitary to extract")]
    SquareRootRelationFails,
    #[error("generator {index} is {rows}x{cols}, expected {dim}x{dim}")]
    InconsistentSize { index: usize, rows: usize, cols: usize, dim: usize },
    #[error("no generators supplied")]
    NoGenerators,
    #[error("target level m={m} must be at least k+1={}", k + 1)]
    LevelTooSmall { k: usize, m: usize },
    #[error(transparent)]
    Endo(#[from] EndoError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A unitary `V` on `H ⊗ H` with `dim H = N`, as an `N² × N²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LegMatrix {
    n: usize,
    v: CMatrix,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn unitary_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(d, d)))
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

impl LegMatrix {
    pub fn new(v: CMatrix) -> Result<Self, MunitError> {
        Self::new_with(v, &ScalarConfig::default())
    }

    pub fn new_with(v: CMatrix, cfg: &ScalarConfig) -> Result<Self, MunitError> {
        let (rows, cols) = v.shape();
        let n = (rows as f64).sqrt().round() as usize;
        if rows != cols || n * n != rows || n == 0 {
            return Err(MunitError::Shape { rows, cols });
        }
        let defect = unitary_defect(&v);
        if defect > cfg.equality_tol {
            return Err(MunitError::NotUnitary(defect));
        }
        Ok(LegMatrix { n, v })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.v
    }

    pub fn into_matrix(self) -> CMatrix {
        self.v
    }

    /// `(V₁₂, V₁₃, V₂₃)` on `H ⊗ H ⊗ H`.
    pub fn legs(&self) -> (CMatrix, CMatrix, CMatrix) {
        let id = CMatrix::identity(self.n, self.n);
        let v12 = kron(&self.v, &id);
        let v23 = kron(&id, &self.v);
        let swap23 = kron(&id, &flip_matrix(self.n));
        let v13 = &swap23 * &v12 * &swap23;
        (v12, v13, v23)
    }

    /// Max-entry norm of `V₁₂V₁₃V₂₃ − V₂₃V₁₂`.
    pub fn pentagon_defect(&self) -> f64 {
        let (v12, v13, v23) = self.legs();
        max_abs(&(&v12 * &v13 * &v23 - &v23 * &v12))
    }

    pub fn pentagon_check(&self, cfg: &ScalarConfig) -> bool {
        self.pentagon_defect() <= cfg.equality_tol
    }
}

/// Which side of `U_γ` the flip is multiplied on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorOrder {
    /// `W = U_γ · F`
    UnitaryThenFlip,
    /// `W = F · U_γ`
    FlipThenUnitary,
}

#[derive(Debug, Clone)]
pub struct WExtraction {
    pub w: LegMatrix,
    pub order: FactorOrder,
    /// Pentagon verdict for `U_γ · F`.
    pub default_passes: bool,
    /// Pentagon verdict for `F · U_γ`.
    pub alternative_passes: bool,
}

/// Extracts the multiplicative unitary from `γ`. Both factor orders are
/// tested; `U_γ·F` is returned unless only `F·U_γ` satisfies the pentagon
/// equation.
pub fn extract_w_from(gamma: &Endomorphism) -> Result<WExtraction, MunitError> {
    extract_w_from_with(gamma, &ScalarConfig::default())
}

pub fn extract_w_from_with(gamma: &Endomorphism, cfg: &ScalarConfig) -> Result<WExtraction, MunitError> {
    let u = gamma.unitary();
    if !u.in_fixed_point_level(2) {
        return Err(MunitError::NotInLevelTwo);
    }
    if !check_square_root_relation_with(gamma, cfg)? {
        return Err(MunitError::SquareRootRelationFails);
    }
    let um = to_matrix(u, 2)?;
    let f = flip_matrix(gamma.n());
    let default = LegMatrix::new_with(&um * &f, cfg)?;
    let alternative = LegMatrix::new_with(&f * &um, cfg)?;
    let default_passes = default.pentagon_check(cfg);
    let alternative_passes = alternative.pentagon_check(cfg);
    let (w, order) = if !default_passes && alternative_passes {
        (alternative, FactorOrder::FlipThenUnitary)
    } else {
        (default, FactorOrder::UnitaryThenFlip)
    };
    Ok(WExtraction {
        w,
        order,
        default_passes,
        alternative_passes,
    })
}

#[derive(Debug, Clone)]
pub struct VfEndomorphism {
    pub endomorphism: Endomorphism,
    /// Pentagon verdict for the input `V`; a false value is a warning.
    pub pentagon: bool,
    pub square_root_relation: bool,
}

/// `ρ_{VF}`: the endomorphism whose associated unitary is `V·F` read in
/// `F_N^2`. Non-pentagon inputs are accepted and flagged.
pub fn endomorphism_from_vf(v: &LegMatrix) -> Result<VfEndomorphism, MunitError> {
    endomorphism_from_vf_with(v, &ScalarConfig::default())
}

pub fn endomorphism_from_vf_with(v: &LegMatrix, cfg: &ScalarConfig) -> Result<VfEndomorphism, MunitError> {
    let r = v.matrix() * flip_matrix(v.n());
    let u = from_matrix_with(&r, v.n(), cfg)?;
    let endomorphism = Endomorphism::from_unitary_with(u, cfg)?;
    let square_root_relation = check_square_root_relation_with(&endomorphism, cfg)?;
    Ok(VfEndomorphism {
        endomorphism,
        pentagon: v.pentagon_check(cfg),
        square_root_relation,
    })
}

/// Dimension of `{X : X A_i = A_i X for all i}` inside `M_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutantReport {
    pub generator_count: usize,
    /// `d²`
    pub ambient_dimension: usize,
    pub commutant_dimension: usize,
    /// Largest entry left below the pivot threshold when elimination stopped.
    pub residual: f64,
}

/// Rank by Gaussian elimination with complete pivoting; returns the rank
/// and the largest remaining entry once no pivot clears `threshold`.
pub(crate) fn pivoted_rank(mut a: DMatrix<Complex64>, threshold: f64) -> (usize, f64) {
    let (rows, cols) = a.shape();
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (0.0, rank, rank);
        for c in rank..cols {
            for r in rank..rows {
                let v = a[(r, c)].norm();
                if v > best.0 {
                    best = (v, r, c);
                }
            }
        }
        let (pivot, pr, pc) = best;
        if pivot <= threshold {
            return (rank, pivot);
        }
        a.swap_rows(rank, pr);
        a.swap_columns(rank, pc);
        let p = a[(rank, rank)];
        for r in rank + 1..rows {
            let f = a[(r, rank)] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for c in rank..cols {
                let sub = f * a[(rank, c)];
                a[(r, c)] -= sub;
            }
        }
        rank += 1;
    }
    (rank, 0.0)
}

/// Matrix of `X ↦ (X A_i − A_i X)_i` acting on row-major `vec(X)`.
pub(crate) fn commutator_map(generators: &[CMatrix]) -> CMatrix {
    let d = generators[0].nrows();
    let mut m = CMatrix::zeros(generators.len() * d * d, d * d);
    for (g, a) in generators.iter().enumerate() {
        let base = g * d * d;
        // (XA − AX)_{ij} = Σ_k X_{ik} A_{kj} − A_{ik} X_{kj}
        for i in 0..d {
            for j in 0..d {
                let row = base + i * d + j;
                for k in 0..d {
                    m[(row, i * d + k)] += a[(k, j)];
                    m[(row, k * d + j)] -= a[(i, k)];
                }
            }
        }
    }
    m
}

pub fn commutant_dimension(generators: &[CMatrix]) -> Result<CommutantReport, MunitError> {
    commutant_dimension_with(generators, RANK_THRESHOLD)
}

pub fn commutant_dimension_with(generators: &[CMatrix], threshold: f64) -> Result<CommutantReport, MunitError> {
    let Some(first) = generators.first() else {
        return Err(MunitError::NoGenerators);
    };
    let dim = first.nrows();
    for (index, a) in generators.iter().enumerate() {
        if a.nrows() != dim || a.ncols() != dim {
            return Err(MunitError::InconsistentSize {
                index,
                rows: a.nrows(),
                cols: a.ncols(),
                dim,
            });
        }
    }
    let (rank, residual) = pivoted_rank(commutator_map(generators), threshold);
    Ok(CommutantReport {
        generator_count: generators.len(),
        ambient_dimension: dim * dim,
        commutant_dimension: dim * dim - rank,
        residual,
    })
}

/// Matrix units `S_J S_K*` of `F_N^k`.
pub fn matrix_units(n: usize, k: usize) -> Vec<CuntzElement> {
    let words: Vec<_> = MultiIndex::all(n, k).collect();
    let mut out = Vec::with_capacity(words.len() * words.len());
    for j in &words {
        for l in &words {
            out.push(CuntzElement::word(n, j.clone(), l.clone()).expect("letters below N"));
        }
    }
    out
}

/// Commutant of `ρ(F_N^k)` inside `F_N^m ≅ M_{N^m}`. With `U_ρ ∈ F_N^2`,
/// `m = k + 1` always suffices; smaller `m` works only when the images fit.
pub fn relative_commutant(rho: &Endomorphism, k: usize, m: usize) -> Result<CommutantReport, MunitError> {
    if !rho.unitary().in_fixed_point_level(2) {
        return Err(MunitError::NotInLevelTwo);
    }
    let gens = matrix_units(rho.n(), k)
        .iter()
        .map(|x| {
            let y = rho.apply(x)?;
            to_matrix(&y, m).map_err(|e| match e {
                AlgebraError::LevelTooSmall { .. } => MunitError::LevelTooSmall { k, m },
                other => other.into(),
            })
        })
        .collect::<Result<Vec<_>, MunitError>>()?;
    commutant_dimension(&gens)
}

/// `relative_commutant` at `m` and `m+1`, for a stability readout.
pub fn relative_commutant_stability(
    rho: &Endomorphism,
    k: usize,
    m: usize,
) -> Result<(CommutantReport, CommutantReport), MunitError> {
    Ok((relative_commutant(rho, k, m)?, relative_commutant(rho, k, m + 1)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DualGroup;

    fn cfg() -> ScalarConfig {
        ScalarConfig::default()
    }

    fn unit(d: usize, r: usize, c: usize) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        m[(r, c)] = Complex64::new(1.0, 0.0);
        m
    }

    #[test]
    fn identity_satisfies_pentagon() {
        for n in 1..=4 {
            let v = LegMatrix::new(CMatrix::identity(n * n, n * n)).unwrap();
            assert!(v.pentagon_check(&cfg()));
        }
    }

    #[test]
    fn flip_fails_pentagon() {
        for n in 2..=3 {
            let v = LegMatrix::new(flip_matrix(n)).unwrap();
            assert!(!v.pentagon_check(&cfg()));
        }
    }

    #[test]
    fn leg_maps_are_homomorphisms() {
        let n = 2;
        let d = n * n;
        for (r1, c1, r2, c2) in [(0, 1, 1, 3), (2, 2, 2, 0), (3, 1, 1, 1)] {
            let a = unit(d, r1, c1);
            let b = unit(d, r2, c2);
            let ab = &a * &b;
            // embed without the unitarity gate
            let emb = |m: &CMatrix| {
                let l = LegMatrix { n, v: m.clone() };
                l.legs()
            };
            let (a12, a13, a23) = emb(&a);
            let (b12, b13, b23) = emb(&b);
            let (p12, p13, p23) = emb(&ab);
            assert_eq!(&a12 * &b12, p12);
            assert_eq!(&a13 * &b13, p13);
            assert_eq!(&a23 * &b23, p23);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(LegMatrix::new(CMatrix::identity(3, 3)), Err(MunitError::Shape { .. })));
        let mut m = CMatrix::identity(4, 4);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(LegMatrix::new(m), Err(MunitError::NotUnitary(_))));
    }

    #[test]
    fn shift_gives_identity_w() {
        let shift = Endomorphism::canonical_shift(2).unwrap();
        let ex = extract_w_from(&shift).unwrap();
        assert_eq!(ex.order, FactorOrder::UnitaryThenFlip);
        assert!(max_abs(&(ex.w.matrix() - CMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn izumi_gamma_w_is_multiplicative() {
        let g = DualGroup::cyclic(&[2]).unwrap();
        let gamma = g.gamma().unwrap();
        let ex = extract_w_from(&gamma).unwrap();
        assert!(ex.w.pentagon_check(&cfg()));
        let back = endomorphism_from_vf(&ex.w).unwrap();
        assert!(back.pentagon && back.square_root_relation);
        if ex.order == FactorOrder::UnitaryThenFlip {
            assert!(back.endomorphism.unitary().equals(gamma.unitary(), &cfg()).unwrap());
        }
    }

    #[test]
    fn izumi_rho_is_rejected() {
        let g = DualGroup::cyclic(&[2]).unwrap();
        let rho = g.izumi_endomorphism().unwrap();
        assert_eq!(extract_w_from(&rho).unwrap_err(), MunitError::SquareRootRelationFails);
    }

    #[test]
    fn identity_v_gives_shift() {
        let v = LegMatrix::new(CMatrix::identity(4, 4)).unwrap();
        let r = endomorphism_from_vf(&v).unwrap();
        assert!(r.pentagon && r.square_root_relation);
        assert!(r
            .endomorphism
            .equals(&Endomorphism::canonical_shift(2).unwrap(), &cfg())
            .unwrap());
    }

    #[test]
    fn commutant_sanity() {
        for d in 1..=4 {
            let gens: Vec<_> = (0..d).flat_map(|r| (0..d).map(move |c| unit(d, r, c))).collect();
            assert_eq!(commutant_dimension(&gens).unwrap().commutant_dimension, 1);
        }
        for n in 2..=3 {
            let id = CMatrix::identity(n, n);
            let gens: Vec<_> = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| kron(&id, &unit(n, r, c)))
                .collect();
            assert_eq!(commutant_dimension(&gens).unwrap().commutant_dimension, n * n);
        }
        assert_eq!(commutant_dimension(&[]).unwrap_err(), MunitError::NoGenerators);
        assert!(matches!(
            commutant_dimension(&[CMatrix::identity(2, 2), CMatrix::identity(3, 3)]),
            Err(MunitError::InconsistentSize { index: 1, .. })
        ));
    }

    #[test]
    fn relative_commutant_examples() {
        let shift = Endomorphism::canonical_shift(2).unwrap();
        assert_eq!(relative_commutant(&shift, 1, 2).unwrap().commutant_dimension, 4);
        let id = Endomorphism::identity(2).unwrap();
        assert_eq!(relative_commutant(&id, 1, 1).unwrap().commutant_dimension, 1);
        assert!(matches!(relative_commutant(&shift, 1, 1), Err(MunitError::LevelTooSmall { .. })));
    }
}
