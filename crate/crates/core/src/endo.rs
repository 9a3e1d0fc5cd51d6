//! Unital endomorphisms of `O_N` through their associated unitaries.
//!
//! A unitary `U` determines `ρ_U(S_i) = U S_i`, and conversely
//! `U_ρ = Σ_i ρ(S_i) S_i*`. Everything here is built on that
//! correspondence: application to arbitrary elements, composition,
//! Bogolyubov and permutation endomorphisms, the canonical shift, the
//! expectation `E_ρ(x) = ρ(S_e* ρ(x) S_e)` and the relation `γ² = Φ∘γ`.

use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{flip_unitary, AlgebraError, CMatrix, CuntzElement, CuntzTerm, MultiIndex, ScalarConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndoError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("associated element is not unitary")]
    NotUnitary,
    #[error("expected {expected} generator images, got {got}")]
    WrongImageCount { expected: usize, got: usize },
    #[error("generator images violate the Cuntz relations: {0}")]
    CuntzRelations(String),
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    MatrixShape { rows: usize, cols: usize, n: usize },
    #[error("matrix is not unitary")]
    MatrixNotUnitary,
    #[error("permutation table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("permutation table is not a bijection (value {0} repeated or out of range)")]
    NotBijective(usize),
    #[error("letter {letter} out of range for N={n}")]
    LetterOutOfRange { letter: usize, n: usize },
}

/// A unital endomorphism of `O_N`, stored as its associated unitary together
/// with the generator images `ρ(S_i) = U S_i`.
#[derive(Clone, Debug)]
pub struct Endomorphism {
    n: usize,
    unitary: CuntzElement,
    images: Vec<CuntzElement>,
}

/// A bijection `σ` of the words of length `k`, given as a table on word
/// indices (lexicographic order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationSpec {
    pub k: usize,
    pub sigma: Vec<usize>,
}

impl PermutationSpec {
    pub fn new(k: usize, sigma: Vec<usize>) -> Self {
        PermutationSpec { k, sigma }
    }

    /// Builds the table from a function on words.
    pub fn from_fn(n: usize, k: usize, f: impl Fn(&MultiIndex) -> MultiIndex) -> Self {
        let sigma = MultiIndex::all(n, k).map(|w| f(&w).index(n)).collect();
        PermutationSpec { k, sigma }
    }

    pub fn validate(&self, n: usize) -> Result<(), EndoError> {
        let size = n.pow(self.k as u32);
        if self.sigma.len() != size {
            return Err(EndoError::TableSize {
                expected: size,
                got: self.sigma.len(),
            });
        }
        let mut seen = vec![false; size];
        for &v in &self.sigma {
            if v >= size || seen[v] {
                return Err(EndoError::NotBijective(v));
            }
            seen[v] = true;
        }
        Ok(())
    }
}

fn generators(n: usize) -> Vec<CuntzElement> {
    (0..n as u8)
        .map(|i| CuntzElement::generator(n, i).expect("letter below N"))
        .collect()
}

/// Checks `x_i* x_j = δ_ij` and `Σ x_i x_i* = 1`.
fn check_cuntz_family(images: &[CuntzElement], cfg: &ScalarConfig) -> Result<(), EndoError> {
    let n = images[0].n();
    let one = CuntzElement::one(n);
    let mut range_sum = CuntzElement::zero(n);
    for (i, a) in images.iter().enumerate() {
        let a_star = a.adjoint();
        for (j, b) in images.iter().enumerate() {
            let p = a_star.multiply_with(b, cfg)?;
            let expected = if i == j { &one } else { &CuntzElement::zero(n) };
            if !p.equals(expected, cfg)? {
                return Err(EndoError::CuntzRelations(format!("image {i}* · image {j} ≠ δ")));
            }
        }
        range_sum = range_sum.add(&a.multiply_with(&a_star, cfg)?)?;
    }
    if !range_sum.equals(&one, cfg)? {
        return Err(EndoError::CuntzRelations("ranges do not sum to 1".into()));
    }
    Ok(())
}

/// `U_ρ = Σ_i images_i S_i*` after checking the images satisfy the Cuntz
/// relations.
pub fn associated_unitary(images: &[CuntzElement]) -> Result<CuntzElement, EndoError> {
    associated_unitary_with(images, &ScalarConfig::default())
}

pub fn associated_unitary_with(images: &[CuntzElement], cfg: &ScalarConfig) -> Result<CuntzElement, EndoError> {
    let Some(first) = images.first() else {
        return Err(EndoError::WrongImageCount { expected: 1, got: 0 });
    };
    let n = first.n();
    if images.len() != n {
        return Err(EndoError::WrongImageCount {
            expected: n,
            got: images.len(),
        });
    }
    for x in images {
        if x.n() != n {
            return Err(AlgebraError::AlphabetMismatch { left: n, right: x.n() }.into());
        }
    }
    check_cuntz_family(images, cfg)?;
    Ok(unchecked_unitary(images))
}

fn unchecked_unitary(images: &[CuntzElement]) -> CuntzElement {
    let n = images[0].n();
    let mut u = CuntzElement::zero(n);
    for (i, x) in images.iter().enumerate() {
        let s_star = CuntzElement::generator_adjoint(n, i as u8).expect("letter below N");
        u = &u + &(x * &s_star);
    }
    u
}

impl Endomorphism {
    /// `ρ_U` for a unitary `U`.
    pub fn from_unitary(u: CuntzElement) -> Result<Self, EndoError> {
        Self::from_unitary_with(u, &ScalarConfig::default())
    }

    pub fn from_unitary_with(u: CuntzElement, cfg: &ScalarConfig) -> Result<Self, EndoError> {
        if !u.is_unitary(cfg) {
            return Err(EndoError::NotUnitary);
        }
        let n = u.n();
        let images: Vec<_> = generators(n)
            .iter()
            .map(|s| u.multiply_with(s, cfg))
            .collect::<Result<_, _>>()?;
        check_cuntz_family(&images, cfg)?;
        Ok(Endomorphism { n, unitary: u, images })
    }

    /// The endomorphism with the given generator images.
    pub fn from_images(images: Vec<CuntzElement>) -> Result<Self, EndoError> {
        let unitary = associated_unitary(&images)?;
        Ok(Endomorphism {
            n: unitary.n(),
            unitary,
            images,
        })
    }

    pub fn identity(n: usize) -> Result<Self, EndoError> {
        Self::from_unitary(CuntzElement::one(n))
    }

    /// The canonical shift `Φ(x) = Σ S_i x S_i*`, associated with the flip.
    pub fn canonical_shift(n: usize) -> Result<Self, EndoError> {
        Self::from_unitary(flip_unitary(n)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unitary(&self) -> &CuntzElement {
        &self.unitary
    }

    pub fn images(&self) -> &[CuntzElement] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &CuntzElement {
        &self.images[i]
    }

    fn word_image(&self, w: &MultiIndex, cache: &mut HashMap<MultiIndex, CuntzElement>) -> CuntzElement {
        if let Some(x) = cache.get(w) {
            return x.clone();
        }
        let x = if w.is_empty() {
            CuntzElement::one(self.n)
        } else {
            let head = self.word_image(&w.prefix(w.len() - 1), cache);
            &head * &self.images[w[w.len() - 1] as usize]
        };
        cache.insert(w.clone(), x.clone());
        x
    }

    /// `ρ(x)`, extended from the generators multiplicatively:
    /// `ρ(S_J S_K*) = ρ(S_J) ρ(S_K)*`.
    pub fn apply(&self, x: &CuntzElement) -> Result<CuntzElement, EndoError> {
        if x.n() != self.n {
            return Err(AlgebraError::AlphabetMismatch {
                left: self.n,
                right: x.n(),
            }
            .into());
        }
        let mut cache = HashMap::new();
        let mut acc = Vec::new();
        for t in x.terms() {
            let left = self.word_image(&t.j, &mut cache);
            let right = self.word_image(&t.k, &mut cache).adjoint();
            acc.push((t.coeff, &left * &right));
        }
        let (coeffs, elems): (Vec<Complex64>, Vec<CuntzElement>) = acc.into_iter().unzip();
        if elems.is_empty() {
            return Ok(CuntzElement::zero(self.n));
        }
        Ok(CuntzElement::linear_combine(&coeffs, &elems)?)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Endomorphism) -> Result<Endomorphism, EndoError> {
        if other.n != self.n {
            return Err(AlgebraError::AlphabetMismatch {
                left: self.n,
                right: other.n,
            }
            .into());
        }
        let images: Vec<_> = other
            .images
            .iter()
            .map(|x| self.apply(x))
            .collect::<Result<_, _>>()?;
        // Composites of unital endomorphisms stay unital; skip re-verification.
        let unitary = unchecked_unitary(&images);
        Ok(Endomorphism {
            n: self.n,
            unitary,
            images,
        })
    }

    /// `k`-fold composite; `power(0)` is the identity.
    pub fn power(&self, k: usize) -> Result<Endomorphism, EndoError> {
        let mut acc = Endomorphism::identity(self.n)?;
        for _ in 0..k {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Compares generator images within `cfg.equality_tol`.
    pub fn equals(&self, other: &Endomorphism, cfg: &ScalarConfig) -> Result<bool, EndoError> {
        if self.n != other.n {
            return Err(AlgebraError::AlphabetMismatch {
                left: self.n,
                right: other.n,
            }
            .into());
        }
        for (a, b) in self.images.iter().zip(&other.images) {
            if !a.equals(b, cfg)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `E_ρ(x) = ρ(S_e* ρ(x) S_e)`.
    pub fn conditional_expectation(&self, e: usize, x: &CuntzElement) -> Result<CuntzElement, EndoError> {
        if e >= self.n {
            return Err(EndoError::LetterOutOfRange { letter: e, n: self.n });
        }
        let s = CuntzElement::generator(self.n, e as u8)?;
        let inner = &(&s.adjoint() * &self.apply(x)?) * &s;
        self.apply(&inner)
    }

    /// True iff `|φ(ρ(x)) − φ(x)| ≤ equality_tol` on every sample.
    pub fn check_phi_invariance(&self, samples: &[CuntzElement], cfg: &ScalarConfig) -> Result<bool, EndoError> {
        for x in samples {
            let d = self.apply(x)?.phi() - x.phi();
            if d.norm() > cfg.equality_tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether `γ² = Φ∘γ` holds on all generators.
pub fn check_square_root_relation(gamma: &Endomorphism) -> Result<bool, EndoError> {
    check_square_root_relation_with(gamma, &ScalarConfig::default())
}

pub fn check_square_root_relation_with(gamma: &Endomorphism, cfg: &ScalarConfig) -> Result<bool, EndoError> {
    let shift = Endomorphism::canonical_shift(gamma.n())?;
    let lhs = gamma.compose(gamma)?;
    let rhs = shift.compose(gamma)?;
    lhs.equals(&rhs, cfg)
}

/// The Bogolyubov automorphism `S_j ↦ Σ_i m_ij S_i`.
pub fn bogolyubov(m: &CMatrix) -> Result<Endomorphism, EndoError> {
    bogolyubov_with(m, &ScalarConfig::default())
}

pub fn bogolyubov_with(m: &CMatrix, cfg: &ScalarConfig) -> Result<Endomorphism, EndoError> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return Err(EndoError::MatrixShape {
            rows: m.nrows(),
            cols: m.ncols(),
            n,
        });
    }
    let defect = (m.adjoint() * m - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if defect > cfg.equality_tol {
        return Err(EndoError::MatrixNotUnitary);
    }
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // U = Σ_j β(S_j) S_j* = Σ_{ij} m_ij S_i S_j*
            terms.push(CuntzTerm::new(m[(i, j)], vec![i as u8], vec![j as u8]));
        }
    }
    let u = CuntzElement::from_terms_with(n, terms, cfg)?;
    Endomorphism::from_unitary_with(u, cfg)
}

/// The permutation endomorphism with `U_σ = Σ_{|J|=k} S_{σ(J)} S_J*`.
pub fn permutation_endomorphism(spec: &PermutationSpec, n: usize) -> Result<Endomorphism, EndoError> {
    spec.validate(n)?;
    let one = Complex64::new(1.0, 0.0);
    let terms = spec.sigma.iter().enumerate().map(|(src, &dst)| {
        CuntzTerm::new(
            one,
            MultiIndex::from_index(n, spec.k, dst),
            MultiIndex::from_index(n, spec.k, src),
        )
    });
    let u = CuntzElement::from_terms(n, terms)?;
    Endomorphism::from_unitary(u)
}

/// All words `S_J S_K*` with `|J|, |K| ≤ max_len`.
pub fn word_samples(n: usize, max_len: usize) -> Vec<CuntzElement> {
    let words: Vec<MultiIndex> = (0..=max_len).flat_map(|l| MultiIndex::all(n, l)).collect();
    let mut out = Vec::with_capacity(words.len() * words.len());
    for j in &words {
        for k in &words {
            out.push(CuntzElement::word(n, j.clone(), k.clone()).expect("letters below N"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{flip_matrix, from_matrix};

    fn cfg() -> ScalarConfig {
        ScalarConfig::default()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn s(n: usize, i: u8) -> CuntzElement {
        CuntzElement::generator(n, i).unwrap()
    }

    fn fourier2() -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)])
    }

    #[test]
    fn identity_acts_trivially() {
        let id = Endomorphism::identity(2).unwrap();
        for x in word_samples(2, 2) {
            assert!(id.apply(&x).unwrap().equals(&x, &cfg()).unwrap());
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let p = CuntzElement::projection(2, vec![0]).unwrap();
        assert_eq!(Endomorphism::from_unitary(p).unwrap_err(), EndoError::NotUnitary);
        let bad = vec![s(2, 0), s(2, 0)];
        assert!(matches!(associated_unitary(&bad), Err(EndoError::CuntzRelations(_))));
        assert!(matches!(associated_unitary(&[s(2, 0)]), Err(EndoError::WrongImageCount { .. })));
    }

    #[test]
    fn associated_unitary_of_generators_is_one() {
        let u = associated_unitary(&[s(2, 0), s(2, 1)]).unwrap();
        assert!(u.equals(&CuntzElement::one(2), &cfg()).unwrap());
    }

    #[test]
    fn canonical_shift_is_conjugation_sum() {
        let shift = Endomorphism::canonical_shift(2).unwrap();
        for x in word_samples(2, 2).into_iter().filter(|x| x.is_gauge_invariant()) {
            let mut expected = CuntzElement::zero(2);
            for i in 0..2 {
                expected = &expected + &(&(&s(2, i) * &x) * &s(2, i).adjoint());
            }
            assert!(shift.apply(&x).unwrap().equals(&expected, &cfg()).unwrap());
        }
    }

    #[test]
    fn bogolyubov_examples() {
        let id = bogolyubov(&CMatrix::identity(2, 2)).unwrap();
        assert!(id.equals(&Endomorphism::identity(2).unwrap(), &cfg()).unwrap());

        let swap = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let b = bogolyubov(&swap).unwrap();
        assert_eq!(b.image(0), &s(2, 1));
        assert_eq!(b.image(1), &s(2, 0));

        let f = bogolyubov(&fourier2()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = CuntzElement::linear_combine(&[c(h), c(-h)], &[s(2, 0), s(2, 1)]).unwrap();
        assert!(f.image(1).equals(&expected, &cfg()).unwrap());
        for img in f.images() {
            assert!(img.terms().all(|t| t.j.len() == 1 && t.k.is_empty()));
        }
        // β² = id for the real 2x2 Fourier matrix
        assert!(f.power(2).unwrap().equals(&id, &cfg()).unwrap());

        let not_unitary = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert_eq!(bogolyubov(&not_unitary).unwrap_err(), EndoError::MatrixNotUnitary);
    }

    #[test]
    fn permutation_examples() {
        let id = permutation_endomorphism(&PermutationSpec::new(1, vec![0, 1]), 2).unwrap();
        assert!(id.equals(&Endomorphism::identity(2).unwrap(), &cfg()).unwrap());

        let flip = PermutationSpec::from_fn(2, 2, |w| MultiIndex::new(vec![w[1], w[0]]));
        let phi = permutation_endomorphism(&flip, 2).unwrap();
        assert!(phi.equals(&Endomorphism::canonical_shift(2).unwrap(), &cfg()).unwrap());

        for img in phi.images() {
            for t in img.terms() {
                assert_eq!(t.coeff, c(1.0));
                assert_eq!((t.j.len(), t.k.len()), (2, 1));
            }
        }

        assert!(matches!(
            permutation_endomorphism(&PermutationSpec::new(1, vec![0, 0]), 2),
            Err(EndoError::NotBijective(0))
        ));
        assert!(matches!(
            permutation_endomorphism(&PermutationSpec::new(2, vec![0, 1]), 2),
            Err(EndoError::TableSize { .. })
        ));
    }

    #[test]
    fn compose_with_identity_and_power() {
        let f = bogolyubov(&fourier2()).unwrap();
        let id = Endomorphism::identity(2).unwrap();
        assert!(id.compose(&f).unwrap().equals(&f, &cfg()).unwrap());
        assert!(f.compose(&id).unwrap().equals(&f, &cfg()).unwrap());
        let a = f.power(2).unwrap();
        let b = f.compose(&f).unwrap();
        assert_eq!(a.images(), b.images());
    }

    #[test]
    fn shift_satisfies_square_root_relation() {
        let shift = Endomorphism::canonical_shift(2).unwrap();
        assert!(check_square_root_relation(&shift).unwrap());
        // from the flip matrix, identically
        let u = from_matrix(&flip_matrix(3), 3).unwrap();
        let shift3 = Endomorphism::from_unitary(u).unwrap();
        assert!(check_square_root_relation(&shift3).unwrap());
    }

    #[test]
    fn shift_preserves_phi() {
        let shift = Endomorphism::canonical_shift(2).unwrap();
        assert!(shift.check_phi_invariance(&word_samples(2, 2), &cfg()).unwrap());
        let id = Endomorphism::identity(3).unwrap();
        assert!(id.check_phi_invariance(&word_samples(3, 1), &cfg()).unwrap());
    }

    #[test]
    fn expectation_rejects_bad_letter() {
        let id = Endomorphism::identity(2).unwrap();
        assert!(matches!(
            id.conditional_expectation(2, &CuntzElement::one(2)),
            Err(EndoError::LetterOutOfRange { .. })
        ));
    }
}
