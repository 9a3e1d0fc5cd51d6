//! Finite abelian groups with a symmetric duality bracket, and the
//! endomorphisms built from them: `U(g)`, Izumi's `ρ`, the Fourier
//! automorphism `β`, `ρ' = ρ∘β` and `γ = ρ²`.
//!
//! Elements of `G = Z/n₁ × … × Z/n_r` are residue tuples, encoded as the
//! letters `0..N` in lexicographic order (first factor most significant).
//! The neutral element is letter 0.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, CMatrix, CuntzElement, CuntzTerm, ScalarConfig, MAX_ALPHABET};
use crate::endo::{
    bogolyubov_with, check_square_root_relation_with, EndoError, Endomorphism, PermutationSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("group order {0} must be at least 2")]
    TooSmall(usize),
    #[error("group order {0} exceeds the alphabet limit")]
    TooLarge(usize),
    #[error("cyclic factor orders must be >= 1")]
    ZeroFactor,
    #[error("bracket table has {got} entries, expected {expected}")]
    TableSize { expected: usize, got: usize },
    #[error("bracket fails validation: {0}")]
    InvalidBracket(BracketViolation),
    #[error("element {g} out of range for a group of order {n}")]
    OutOfRange { g: usize, n: usize },
    #[error("cannot parse group spec {0:?}")]
    Parse(String),
    #[error(transparent)]
    Endo(#[from] EndoError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// The first bracket axiom that failed, with the offending elements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BracketViolation {
    /// `conj⟨g,h⟩ ≠ ⟨−g,h⟩`
    Conjugation { g: usize, h: usize },
    /// `Σ_h ⟨h,g⟩ ≠ N δ_{g,e}`
    Orthogonality { g: usize, sum: [f64; 2] },
    /// `⟨g,h⟩⟨g',h⟩ ≠ ⟨g+g',h⟩`
    Multiplicativity { g: usize, g2: usize, h: usize },
    /// `⟨g,h⟩ ≠ ⟨h,g⟩`
    Symmetry { g: usize, h: usize },
}

impl std::fmt::Display for BracketViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BracketViolation::Conjugation { g, h } => write!(f, "conj<{g},{h}> != <-{g},{h}>"),
            BracketViolation::Orthogonality { g, sum } => {
                write!(f, "sum_h <h,{g}> = {}{:+}i", sum[0], sum[1])
            }
            BracketViolation::Multiplicativity { g, g2, h } => {
                write!(f, "<{g},{h}><{g2},{h}> != <{g}+{g2},{h}>")
            }
            BracketViolation::Symmetry { g, h } => write!(f, "<{g},{h}> != <{h},{g}>"),
        }
    }
}

/// Result of checking the four bracket axioms over all of `G × G`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub conjugation: bool,
    pub orthogonality: bool,
    pub multiplicativity: bool,
    pub symmetry: bool,
    pub first_violation: Option<BracketViolation>,
}

impl BracketReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Group spec wire format: `{"orders": [..], "bracket": [[re, im], …]}`
/// with an optional row-major bracket table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub orders: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<BracketTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BracketTable {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl BracketTable {
    fn into_flat(self) -> Vec<Complex64> {
        let pairs: Vec<[f64; 2]> = match self {
            BracketTable::Flat(v) => v,
            BracketTable::Rows(rows) => rows.into_iter().flatten().collect(),
        };
        pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()
    }
}

impl GroupSpec {
    /// Parses `"2"`, `"2x2"`, `"3x4"` into cyclic orders.
    pub fn parse_orders(s: &str) -> Result<GroupSpec, GroupError> {
        let orders = s
            .split(['x', 'X', '*'])
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| GroupError::Parse(s.to_string()))?;
        if orders.is_empty() {
            return Err(GroupError::Parse(s.to_string()));
        }
        Ok(GroupSpec { orders, bracket: None })
    }

    pub fn build(self) -> Result<DualGroup, GroupError> {
        self.build_with(&ScalarConfig::default())
    }

    pub fn build_with(self, cfg: &ScalarConfig) -> Result<DualGroup, GroupError> {
        match self.bracket {
            None => DualGroup::cyclic_with(&self.orders, cfg),
            Some(table) => DualGroup::with_bracket(&self.orders, table.into_flat(), cfg),
        }
    }

    /// Like [`GroupSpec::build`] but leaves a supplied bracket unchecked, so
    /// a caller can report the violation itself.
    pub fn build_unvalidated(self) -> Result<DualGroup, GroupError> {
        match self.bracket {
            None => DualGroup::cyclic(&self.orders),
            Some(table) => DualGroup::unvalidated(&self.orders, table.into_flat()),
        }
    }
}

/// A finite abelian group `Z/n₁ × … × Z/n_r` with a validated symmetric
/// duality bracket.
#[derive(Debug, Clone)]
pub struct DualGroup {
    orders: Vec<usize>,
    n: usize,
    bracket: Vec<Complex64>,
    cfg: ScalarConfig,
}

fn order_of(orders: &[usize]) -> Result<usize, GroupError> {
    if orders.contains(&0) {
        return Err(GroupError::ZeroFactor);
    }
    let n = orders.iter().try_fold(1usize, |acc, &o| acc.checked_mul(o));
    match n {
        Some(n) if n > MAX_ALPHABET => Err(GroupError::TooLarge(n)),
        Some(n) if n < 2 => Err(GroupError::TooSmall(n)),
        Some(n) => Ok(n),
        None => Err(GroupError::TooLarge(usize::MAX)),
    }
}

fn decode(orders: &[usize], mut g: usize) -> Vec<usize> {
    let mut digits = vec![0; orders.len()];
    for (slot, &o) in digits.iter_mut().zip(orders).rev() {
        *slot = g % o;
        g /= o;
    }
    digits
}

fn encode(orders: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(orders).fold(0, |acc, (&d, &o)| acc * o + d)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

impl DualGroup {
    /// `Z/n₁ × … × Z/n_r` with `⟨a,b⟩ = Π_j exp(2πi a_j b_j / n_j)`.
    pub fn cyclic(orders: &[usize]) -> Result<Self, GroupError> {
        Self::cyclic_with(orders, &ScalarConfig::default())
    }

    pub fn cyclic_with(orders: &[usize], cfg: &ScalarConfig) -> Result<Self, GroupError> {
        let n = order_of(orders)?;
        let mut bracket = Vec::with_capacity(n * n);
        for a in 0..n {
            let da = decode(orders, a);
            for b in 0..n {
                let db = decode(orders, b);
                // accumulate the phase as an exact fraction of a turn per factor
                let phase: f64 = da
                    .iter()
                    .zip(&db)
                    .zip(orders)
                    .map(|((&x, &y), &o)| ((x * y) % o) as f64 / o as f64)
                    .sum();
                bracket.push(Complex64::from_polar(1.0, 2.0 * PI * phase));
            }
        }
        Self::with_bracket(orders, bracket, cfg)
    }

    /// A custom bracket table (row-major, `⟨g,h⟩` at `g*N + h`), validated.
    pub fn with_bracket(orders: &[usize], bracket: Vec<Complex64>, cfg: &ScalarConfig) -> Result<Self, GroupError> {
        let n = order_of(orders)?;
        if bracket.len() != n * n {
            return Err(GroupError::TableSize {
                expected: n * n,
                got: bracket.len(),
            });
        }
        let g = DualGroup {
            orders: orders.to_vec(),
            n,
            bracket,
            cfg: *cfg,
        };
        let report = g.validate_bracket();
        match report.first_violation {
            Some(v) => Err(GroupError::InvalidBracket(v)),
            None => Ok(g),
        }
    }

    /// Builds without validating; only for inspecting bad tables.
    pub fn unvalidated(orders: &[usize], bracket: Vec<Complex64>) -> Result<Self, GroupError> {
        let n = order_of(orders)?;
        if bracket.len() != n * n {
            return Err(GroupError::TableSize {
                expected: n * n,
                got: bracket.len(),
            });
        }
        Ok(DualGroup {
            orders: orders.to_vec(),
            n,
            bracket,
            cfg: ScalarConfig::default(),
        })
    }

    pub fn config(&self) -> &ScalarConfig {
        &self.cfg
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn label(&self) -> String {
        self.orders
            .iter()
            .map(|o| format!("Z/{o}"))
            .collect::<Vec<_>>()
            .join("×")
    }

    pub fn neutral(&self) -> usize {
        0
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let (da, db) = (decode(&self.orders, a), decode(&self.orders, b));
        let sum: Vec<usize> = da
            .iter()
            .zip(&db)
            .zip(&self.orders)
            .map(|((&x, &y), &o)| (x + y) % o)
            .collect();
        encode(&self.orders, &sum)
    }

    pub fn neg(&self, a: usize) -> usize {
        let d: Vec<usize> = decode(&self.orders, a)
            .iter()
            .zip(&self.orders)
            .map(|(&x, &o)| (o - x) % o)
            .collect();
        encode(&self.orders, &d)
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn bracket(&self, g: usize, h: usize) -> Complex64 {
        self.bracket[g * self.n + h]
    }

    pub fn bracket_table(&self) -> &[Complex64] {
        &self.bracket
    }

    /// Checks every axiom over all pairs and records the first failure.
    pub fn validate_bracket(&self) -> BracketReport {
        let n = self.n;
        let tol = self.cfg.equality_tol;
        let mut first = None;
        let note = |v: BracketViolation, first: &mut Option<BracketViolation>| {
            if first.is_none() {
                *first = Some(v);
            }
        };

        let mut conjugation = true;
        for g in 0..n {
            for h in 0..n {
                if !close(self.bracket(g, h).conj(), self.bracket(self.neg(g), h), tol) {
                    conjugation = false;
                    note(BracketViolation::Conjugation { g, h }, &mut first);
                }
            }
        }

        let mut orthogonality = true;
        for g in 0..n {
            let sum: Complex64 = (0..n).map(|h| self.bracket(h, g)).sum();
            let expected = if g == self.neutral() { n as f64 } else { 0.0 };
            if !close(sum, Complex64::new(expected, 0.0), tol * n as f64) {
                orthogonality = false;
                note(
                    BracketViolation::Orthogonality {
                        g,
                        sum: [sum.re, sum.im],
                    },
                    &mut first,
                );
            }
        }

        let mut multiplicativity = true;
        for g in 0..n {
            for g2 in 0..n {
                for h in 0..n {
                    let lhs = self.bracket(g, h) * self.bracket(g2, h);
                    if !close(lhs, self.bracket(self.add(g, g2), h), tol) {
                        multiplicativity = false;
                        note(BracketViolation::Multiplicativity { g, g2, h }, &mut first);
                    }
                }
            }
        }

        let mut symmetry = true;
        for g in 0..n {
            for h in 0..n {
                if !close(self.bracket(g, h), self.bracket(h, g), tol) {
                    symmetry = false;
                    note(BracketViolation::Symmetry { g, h }, &mut first);
                }
            }
        }

        BracketReport {
            conjugation,
            orthogonality,
            multiplicativity,
            symmetry,
            first_violation: first,
        }
    }

    fn check_element(&self, g: usize) -> Result<(), GroupError> {
        if g >= self.n {
            Err(GroupError::OutOfRange { g, n: self.n })
        } else {
            Ok(())
        }
    }

    fn inv_sqrt_n(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// `U(g) = Σ_h ⟨g,h⟩ S_h S_h*`.
    pub fn u_of_g(&self, g: usize) -> Result<CuntzElement, GroupError> {
        self.check_element(g)?;
        let terms = (0..self.n).map(|h| CuntzTerm::new(self.bracket(g, h), vec![h as u8], vec![h as u8]));
        Ok(CuntzElement::from_terms_with(self.n, terms, &self.cfg)?)
    }

    /// Izumi's generator images `ρ(S_g) = N^{-1/2} Σ_h ⟨g,h⟩ S_h U(g)*`.
    pub fn izumi_images(&self) -> Result<Vec<CuntzElement>, GroupError> {
        let n = self.n;
        let mut images = Vec::with_capacity(n);
        for g in 0..n {
            let sum = CuntzElement::from_terms_with(
                n,
                (0..n).map(|h| CuntzTerm::new(self.bracket(g, h) * self.inv_sqrt_n(), vec![h as u8], vec![])),
                &self.cfg,
            )?;
            images.push(sum.multiply_with(&self.u_of_g(g)?.adjoint(), &self.cfg)?);
        }
        Ok(images)
    }

    /// Izumi's endomorphism `ρ`, built from its generator images.
    pub fn izumi_endomorphism(&self) -> Result<Endomorphism, GroupError> {
        Ok(Endomorphism::from_images(self.izumi_images()?)?)
    }

    /// The displayed closed form of `U_ρ`:
    /// `N^{-1/2} Σ_{g,h,l} ⟨g, h−l⟩ S_h S_l S_l* S_g*`.
    pub fn izumi_unitary_closed_form(&self) -> Result<CuntzElement, GroupError> {
        let n = self.n;
        let mut terms = Vec::with_capacity(n * n * n);
        for g in 0..n {
            for h in 0..n {
                for l in 0..n {
                    let c = self.bracket(g, self.sub(h, l)) * self.inv_sqrt_n();
                    // S_h S_l S_l* S_g* = S_{hl} (S_g S_l)*
                    terms.push(CuntzTerm::new(c, vec![h as u8, l as u8], vec![g as u8, l as u8]));
                }
            }
        }
        Ok(CuntzElement::from_terms_with(n, terms, &self.cfg)?)
    }

    /// The Fourier matrix `m_{ah} = ⟨h,a⟩ / √N`.
    pub fn fourier_matrix(&self) -> CMatrix {
        let s = self.inv_sqrt_n();
        CMatrix::from_fn(self.n, self.n, |a, h| self.bracket(h, a) * s)
    }

    /// `β(S_h) = N^{-1/2} Σ_a ⟨h,a⟩ S_a`, a Bogolyubov automorphism.
    pub fn fourier_automorphism(&self) -> Result<Endomorphism, GroupError> {
        Ok(bogolyubov_with(&self.fourier_matrix(), &self.cfg)?)
    }

    /// `ρ' = ρ∘β`.
    pub fn rho_prime(&self) -> Result<Endomorphism, GroupError> {
        Ok(self.izumi_endomorphism()?.compose(&self.fourier_automorphism()?)?)
    }

    /// `γ = ρ²`.
    pub fn gamma(&self) -> Result<Endomorphism, GroupError> {
        Ok(self.izumi_endomorphism()?.power(2)?)
    }

    /// Closed form `ρ'(S_h) = Σ_g S_g S_{h+g} S_{h+g}*`.
    pub fn rho_prime_closed_images(&self) -> Vec<CuntzElement> {
        let n = self.n;
        (0..n)
            .map(|h| {
                let terms = (0..n).map(|g| {
                    let hg = self.add(h, g) as u8;
                    CuntzTerm::new(Complex64::new(1.0, 0.0), vec![g as u8, hg], vec![hg])
                });
                CuntzElement::from_terms(n, terms).expect("letters below N")
            })
            .collect()
    }

    /// Closed form `γ(S_g) = Σ_k S_k S_{g+k} S_k*`.
    pub fn gamma_closed_images(&self) -> Vec<CuntzElement> {
        let n = self.n;
        (0..n)
            .map(|g| {
                let terms = (0..n).map(|k| {
                    CuntzTerm::new(Complex64::new(1.0, 0.0), vec![k as u8, self.add(g, k) as u8], vec![k as u8])
                });
                CuntzElement::from_terms(n, terms).expect("letters below N")
            })
            .collect()
    }

    /// `ρ'` as a permutation endomorphism: expanding
    /// `U = Σ_h ρ'(S_h) S_h* = Σ_{g,h} S_{(g, h+g)} S_{(h, h+g)}*` gives
    /// `σ(a, b) = (b − a, b)` on words of length two.
    pub fn rho_prime_permutation(&self) -> PermutationSpec {
        PermutationSpec::from_fn(self.n, 2, |w| {
            let (a, b) = (w[0] as usize, w[1] as usize);
            vec![self.sub(b, a) as u8, b as u8].into()
        })
    }

    /// Checks the closed forms for `U_ρ`, `ρ∘β`, `ρ²` and `γ² = Φ∘γ`.
    pub fn verify_closed_forms(&self) -> Result<ClosedFormReport, GroupError> {
        let cfg = &self.cfg;
        let rho = self.izumi_endomorphism()?;
        let unitary_matches = rho.unitary().equals(&self.izumi_unitary_closed_form()?, cfg)?;

        let rho_prime = rho.compose(&self.fourier_automorphism()?)?;
        let rho_beta_matches = images_match(rho_prime.images(), &self.rho_prime_closed_images(), cfg)?;

        let gamma = rho.power(2)?;
        let rho_squared_matches = images_match(gamma.images(), &self.gamma_closed_images(), cfg)?;

        let square_root_relation = check_square_root_relation_with(&gamma, cfg)?;

        Ok(ClosedFormReport {
            group: self.label(),
            bracket_valid: self.validate_bracket().passed(),
            unitary_matches,
            rho_beta_matches,
            rho_squared_matches,
            square_root_relation,
        })
    }
}

fn images_match(a: &[CuntzElement], b: &[CuntzElement], cfg: &ScalarConfig) -> Result<bool, GroupError> {
    for (x, y) in a.iter().zip(b) {
        if !x.equals(y, cfg)? {
            return Ok(false);
        }
    }
    Ok(a.len() == b.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormReport {
    pub group: String,
    pub bracket_valid: bool,
    pub unitary_matches: bool,
    pub rho_beta_matches: bool,
    pub rho_squared_matches: bool,
    pub square_root_relation: bool,
}

impl ClosedFormReport {
    pub fn all_pass(&self) -> bool {
        self.bracket_valid
            && self.unitary_matches
            && self.rho_beta_matches
            && self.rho_squared_matches
            && self.square_root_relation
    }
}
