use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{AlgebraError, MultiIndex, ScalarConfig, DEFAULT_EQUALITY_TOL, DEFAULT_ZERO_TOL};

/// Largest alphabet representable with one byte per letter.
/// Terms keyed by their prefix pair, with the final letters and coefficient.
type FanGroups = BTreeMap<(MultiIndex, MultiIndex), Vec<(u8, u8, Complex64)>>;

pub const MAX_ALPHABET: usize = 255;

/// One word `coeff · S_J S_K*`.
#[derive(Clone, Debug, PartialEq)]
pub struct CuntzTerm {
    pub coeff: Complex64,
    pub j: MultiIndex,
    pub k: MultiIndex,
}

impl CuntzTerm {
    pub fn new(coeff: Complex64, j: impl Into<MultiIndex>, k: impl Into<MultiIndex>) -> Self {
        CuntzTerm {
            coeff,
            j: j.into(),
            k: k.into(),
        }
    }

    /// Gauge degree `|J| - |K|`.
    pub fn degree(&self) -> i64 {
        self.j.len() as i64 - self.k.len() as i64
    }
}

/// A finite linear combination of words `S_J S_K*` in the Cuntz algebra `O_N`.
///
/// Values are always kept in canonical form: within each gauge degree every
/// stored term has the same `|K|` (the largest one present, reached by fan
/// expansion `S_J S_K* = Σ_M S_{JM} S_{KM}*`), keys are unique, and
/// coefficients below the zero tolerance are dropped. Two canonical values
/// can still sit at different levels for the same degree, which is why
/// [`CuntzElement::equals`] pads before comparing; `PartialEq` is structural.
#[derive(Clone, PartialEq)]
pub struct CuntzElement {
    n: usize,
    terms: BTreeMap<(MultiIndex, MultiIndex), Complex64>,
}

pub(crate) fn check_alphabet(n: usize) -> Result<(), AlgebraError> {
    if n == 0 || n > MAX_ALPHABET {
        Err(AlgebraError::InvalidAlphabet(n))
    } else {
        Ok(())
    }
}

fn check_same(a: usize, b: usize) -> Result<(), AlgebraError> {
    if a != b {
        Err(AlgebraError::AlphabetMismatch { left: a, right: b })
    } else {
        Ok(())
    }
}

fn check_word(w: &MultiIndex, n: usize) -> Result<(), AlgebraError> {
    match w.iter().find(|&&a| a as usize >= n) {
        Some(&a) => Err(AlgebraError::LetterOutOfRange { letter: a, n }),
        None => Ok(()),
    }
}

/// Fan-expands raw terms to a common `|K|` per degree, merges duplicates and
/// drops small coefficients.
fn canonicalize<I>(n: usize, raw: I, zero_tol: f64) -> BTreeMap<(MultiIndex, MultiIndex), Complex64>
where
    I: IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
{
    let raw: Vec<_> = raw.into_iter().collect();
    let mut level: BTreeMap<i64, usize> = BTreeMap::new();
    for (j, k, _) in &raw {
        let d = j.len() as i64 - k.len() as i64;
        let e = level.entry(d).or_insert(0);
        *e = (*e).max(k.len());
    }

    let mut out: BTreeMap<(MultiIndex, MultiIndex), Complex64> = BTreeMap::new();
    for (j, k, c) in raw {
        let d = j.len() as i64 - k.len() as i64;
        let pad = level[&d] - k.len();
        if pad == 0 {
            *out.entry((j, k)).or_default() += c;
        } else {
            for m in MultiIndex::all(n, pad) {
                *out.entry((j.concat(&m), k.concat(&m))).or_default() += c;
            }
        }
    }
    out.retain(|_, c| c.norm() >= zero_tol);
    out
}

impl CuntzElement {
    pub fn zero(n: usize) -> Self {
        CuntzElement {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(n: usize, c: Complex64) -> Self {
        Self::from_raw(n, [(MultiIndex::empty(), MultiIndex::empty(), c)], DEFAULT_ZERO_TOL)
    }

    /// The generating isometry `S_i`.
    pub fn generator(n: usize, i: u8) -> Result<Self, AlgebraError> {
        Self::word(n, vec![i], vec![])
    }

    /// The co-isometry `S_i*`.
    pub fn generator_adjoint(n: usize, i: u8) -> Result<Self, AlgebraError> {
        Self::word(n, vec![], vec![i])
    }

    /// `S_J S_K*` with coefficient one.
    pub fn word(n: usize, j: impl Into<MultiIndex>, k: impl Into<MultiIndex>) -> Result<Self, AlgebraError> {
        Self::from_terms(n, [CuntzTerm::new(Complex64::new(1.0, 0.0), j, k)])
    }

    /// The cylinder projection `S_J S_J*`.
    pub fn projection(n: usize, j: impl Into<MultiIndex>) -> Result<Self, AlgebraError> {
        let j = j.into();
        Self::word(n, j.clone(), j)
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = CuntzTerm>,
    {
        Self::from_terms_with(n, terms, &ScalarConfig::default())
    }

    pub fn from_terms_with<I>(n: usize, terms: I, cfg: &ScalarConfig) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = CuntzTerm>,
    {
        check_alphabet(n)?;
        let mut raw = Vec::new();
        for t in terms {
            check_word(&t.j, n)?;
            check_word(&t.k, n)?;
            raw.push((t.j, t.k, t.coeff));
        }
        Ok(Self::from_raw(n, raw, cfg.zero_tol))
    }

    pub(crate) fn from_raw<I>(n: usize, raw: I, zero_tol: f64) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, MultiIndex, Complex64)>,
    {
        CuntzElement {
            n,
            terms: canonicalize(n, raw, zero_tol),
        }
    }

    /// Alphabet size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical terms in key order.
    pub fn terms(&self) -> impl Iterator<Item = CuntzTerm> + '_ {
        self.terms
            .iter()
            .map(|((j, k), c)| CuntzTerm::new(*c, j.clone(), k.clone()))
    }

    pub fn coefficient(&self, j: &MultiIndex, k: &MultiIndex) -> Complex64 {
        self.terms
            .get(&(j.clone(), k.clone()))
            .copied()
            .unwrap_or_default()
    }

    /// Gauge degrees present, ascending.
    pub fn degrees(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self
            .terms
            .keys()
            .map(|(j, k)| j.len() as i64 - k.len() as i64)
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Largest `|K|` over all terms (0 for scalars and zero).
    pub fn max_k_len(&self) -> usize {
        self.terms.keys().map(|(_, k)| k.len()).max().unwrap_or(0)
    }

    /// Largest `|J|` or `|K|` over all terms.
    pub fn max_word_len(&self) -> usize {
        self.terms
            .keys()
            .map(|(j, k)| j.len().max(k.len()))
            .max()
            .unwrap_or(0)
    }

    pub fn is_gauge_invariant(&self) -> bool {
        self.terms.keys().all(|(j, k)| j.len() == k.len())
    }

    /// True if the element lies in `F_N^level`, i.e. it is gauge invariant
    /// and expressible with words of length `level`.
    pub fn in_fixed_point_level(&self, level: usize) -> bool {
        self.is_gauge_invariant() && self.contracted(DEFAULT_EQUALITY_TOL).max_k_len() <= level
    }

    pub fn scale(&self, c: Complex64) -> Self {
        CuntzElement::from_raw(
            self.n,
            self.terms.iter().map(|((j, k), v)| (j.clone(), k.clone(), v * c)),
            DEFAULT_ZERO_TOL,
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        check_same(self.n, other.n)?;
        Ok(self.add_scaled(other, Complex64::new(1.0, 0.0), DEFAULT_ZERO_TOL))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        check_same(self.n, other.n)?;
        Ok(self.add_scaled(other, Complex64::new(-1.0, 0.0), DEFAULT_ZERO_TOL))
    }

    fn add_scaled(&self, other: &Self, c: Complex64, zero_tol: f64) -> Self {
        let raw = self
            .terms
            .iter()
            .map(|((j, k), v)| (j.clone(), k.clone(), *v))
            .chain(
                other
                    .terms
                    .iter()
                    .map(|((j, k), v)| (j.clone(), k.clone(), v * c)),
            );
        CuntzElement::from_raw(self.n, raw, zero_tol)
    }

    /// Product under the Cuntz relations `S_i* S_j = δ_ij`.
    pub fn multiply(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.multiply_with(other, &ScalarConfig::default())
    }

    pub fn multiply_with(&self, other: &Self, cfg: &ScalarConfig) -> Result<Self, AlgebraError> {
        check_same(self.n, other.n)?;
        let mut raw = Vec::with_capacity(self.terms.len() * other.terms.len());
        for ((j, k), c1) in &self.terms {
            for ((a, b), c2) in &other.terms {
                // (S_J S_K*)(S_A S_B*)
                if let Some(t) = a.strip_prefix(k) {
                    raw.push((j.concat(t), b.clone(), c1 * c2));
                } else if let Some(t) = k.strip_prefix(a) {
                    raw.push((j.clone(), b.concat(t), c1 * c2));
                }
            }
        }
        Ok(CuntzElement::from_raw(self.n, raw, cfg.zero_tol))
    }

    pub fn adjoint(&self) -> Self {
        CuntzElement::from_raw(
            self.n,
            self.terms
                .iter()
                .map(|((j, k), c)| (k.clone(), j.clone(), c.conj())),
            0.0,
        )
    }

    /// `Σ c_i · x_i`.
    pub fn linear_combine(coeffs: &[Complex64], elems: &[CuntzElement]) -> Result<Self, AlgebraError> {
        if coeffs.len() != elems.len() {
            return Err(AlgebraError::LengthMismatch {
                coeffs: coeffs.len(),
                elems: elems.len(),
            });
        }
        let Some(first) = elems.first() else {
            return Err(AlgebraError::EmptyCombination);
        };
        let n = first.n;
        let mut raw = Vec::new();
        for (c, e) in coeffs.iter().zip(elems) {
            check_same(n, e.n)?;
            raw.extend(e.terms.iter().map(|((j, k), v)| (j.clone(), k.clone(), v * c)));
        }
        Ok(CuntzElement::from_raw(n, raw, DEFAULT_ZERO_TOL))
    }

    /// Re-runs canonicalization; the identity on canonical values.
    pub fn canonical(&self) -> Self {
        CuntzElement::from_raw(
            self.n,
            self.terms.iter().map(|((j, k), c)| (j.clone(), k.clone(), *c)),
            DEFAULT_ZERO_TOL,
        )
    }

    /// Decides equality in `O_N`: the difference, padded to one level per
    /// degree, has all coefficients within `equality_tol`. Words of a fixed
    /// degree and fixed `|K|` are linearly independent, so this is exact up
    /// to the tolerance.
    pub fn equals(&self, other: &Self, cfg: &ScalarConfig) -> Result<bool, AlgebraError> {
        check_same(self.n, other.n)?;
        let diff = self.add_scaled(other, Complex64::new(-1.0, 0.0), 0.0);
        Ok(diff.max_coefficient() <= cfg.equality_tol)
    }

    /// Largest coefficient modulus in canonical form.
    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, cfg: &ScalarConfig) -> bool {
        let one = CuntzElement::one(self.n);
        let star = self.adjoint();
        let (Ok(a), Ok(b)) = (star.multiply_with(self, cfg), self.multiply_with(&star, cfg)) else {
            return false;
        };
        a.equals(&one, cfg).unwrap_or(false) && b.equals(&one, cfg).unwrap_or(false)
    }

    /// The gauge expectation `E`: keeps exactly the degree-zero terms.
    pub fn gauge_average(&self) -> Self {
        CuntzElement {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|((j, k), _)| j.len() == k.len())
                .map(|(key, c)| (key.clone(), *c))
                .collect(),
        }
    }

    /// The state `φ = τ∘E` with `φ(S_J S_K*) = δ_{J,K} N^{-|J|}`.
    pub fn phi(&self) -> Complex64 {
        let n = self.n as f64;
        self.terms
            .iter()
            .filter(|((j, k), _)| j == k)
            .map(|((j, _), c)| c * n.powi(-(j.len() as i32)))
            .sum()
    }

    /// The same element at the lowest level per degree that represents it
    /// exactly (up to `tol`): a degree is lowered by one whenever every term
    /// of that degree belongs to a full diagonal fan `Σ_a c S_{Ja} S_{Ka}*`.
    pub fn contracted(&self, tol: f64) -> Self {
        let mut by_degree: BTreeMap<i64, BTreeMap<(MultiIndex, MultiIndex), Complex64>> = BTreeMap::new();
        for ((j, k), c) in &self.terms {
            by_degree
                .entry(j.len() as i64 - k.len() as i64)
                .or_default()
                .insert((j.clone(), k.clone()), *c);
        }
        let mut terms = BTreeMap::new();
        for (_, mut block) in by_degree {
            while let Some(lower) = self.contract_once(&block, tol) {
                block = lower;
            }
            terms.extend(block);
        }
        CuntzElement { n: self.n, terms }
    }

    fn contract_once(
        &self,
        block: &BTreeMap<(MultiIndex, MultiIndex), Complex64>,
        tol: f64,
    ) -> Option<BTreeMap<(MultiIndex, MultiIndex), Complex64>> {
        let mut groups: FanGroups = BTreeMap::new();
        for ((j, k), c) in block {
            if j.is_empty() || k.is_empty() {
                return None;
            }
            groups
                .entry((j.prefix(j.len() - 1), k.prefix(k.len() - 1)))
                .or_default()
                .push((j[j.len() - 1], k[k.len() - 1], *c));
        }
        let mut out = BTreeMap::new();
        for (key, members) in groups {
            let c0 = members[0].2;
            let full_fan = members.len() == self.n
                && members.iter().all(|&(a, b, c)| a == b && (c - c0).norm() <= tol);
            if !full_fan {
                return None;
            }
            let mean = members.iter().map(|m| m.2).sum::<Complex64>() / self.n as f64;
            out.insert(key, mean);
        }
        Some(out)
    }

    /// A contracted representation for display: fans `Σ_a c S_{Ja} S_{Ka}*`
    /// with equal coefficients are folded back into `c S_J S_K*`.
    pub fn reduced(&self, tol: f64) -> Vec<CuntzTerm> {
        let mut current: BTreeMap<(MultiIndex, MultiIndex), Complex64> = self.terms.clone();
        loop {
            let mut groups: FanGroups = BTreeMap::new();
            let mut fixed = BTreeMap::new();
            for ((j, k), c) in &current {
                if j.is_empty() || k.is_empty() {
                    fixed.insert((j.clone(), k.clone()), *c);
                    continue;
                }
                groups
                    .entry((j.prefix(j.len() - 1), k.prefix(k.len() - 1)))
                    .or_default()
                    .push((j[j.len() - 1], k[k.len() - 1], *c));
            }
            let mut changed = false;
            let mut next = fixed;
            for ((jp, kp), members) in groups {
                let c0 = members[0].2;
                let full_fan = members.len() == self.n
                    && members.iter().all(|&(a, b, c)| a == b && (c - c0).norm() <= tol);
                if full_fan {
                    next.insert((jp, kp), c0);
                    changed = true;
                } else {
                    for (a, b, c) in members {
                        next.insert((jp.concat(&[a]), kp.concat(&[b])), c);
                    }
                }
            }
            current = next;
            if !changed {
                break;
            }
        }
        current
            .into_iter()
            .map(|((j, k), c)| CuntzTerm::new(c, j, k))
            .collect()
    }
}

fn fmt_coeff(c: Complex64) -> String {
    if c.im.abs() < 1e-12 {
        format!("{:.6}", c.re)
    } else if c.re.abs() < 1e-12 {
        format!("{:.6}i", c.im)
    } else {
        format!("({:.6}{:+.6}i)", c.re, c.im)
    }
}

fn fmt_word(f: &mut fmt::Formatter<'_>, w: &MultiIndex, star: bool) -> fmt::Result {
    if w.is_empty() {
        return Ok(());
    }
    let letters: String = w.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",");
    write!(f, "S_{{{letters}}}{}", if star { "*" } else { "" })
}

impl fmt::Display for CuntzElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.reduced(1e-9);
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_coeff(t.coeff))?;
            if !t.j.is_empty() || !t.k.is_empty() {
                write!(f, "·")?;
            }
            fmt_word(f, &t.j, false)?;
            if !t.j.is_empty() && !t.k.is_empty() {
                write!(f, " ")?;
            }
            fmt_word(f, &t.k, true)?;
        }
        Ok(())
    }
}

impl fmt::Debug for CuntzElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CuntzElement[N={}] {}", self.n, self)
    }
}

// Operator sugar. These panic on alphabet mismatch; use the named methods
// when inputs are untrusted.

impl Add for &CuntzElement {
    type Output = CuntzElement;

    fn add(self, rhs: &CuntzElement) -> CuntzElement {
        CuntzElement::add(self, rhs).expect("alphabet mismatch in +")
    }
}

impl Sub for &CuntzElement {
    type Output = CuntzElement;

    fn sub(self, rhs: &CuntzElement) -> CuntzElement {
        CuntzElement::sub(self, rhs).expect("alphabet mismatch in -")
    }
}

impl Mul for &CuntzElement {
    type Output = CuntzElement;

    fn mul(self, rhs: &CuntzElement) -> CuntzElement {
        self.multiply(rhs).expect("alphabet mismatch in *")
    }
}

impl Mul<&CuntzElement> for Complex64 {
    type Output = CuntzElement;

    fn mul(self, rhs: &CuntzElement) -> CuntzElement {
        rhs.scale(self)
    }
}

impl Neg for &CuntzElement {
    type Output = CuntzElement;

    fn neg(self) -> CuntzElement {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}
