//! Shared generators and an independent reference implementation of the
//! word product, used as an oracle by the property and acceptance suites.
#![allow(dead_code)]

use cuntz_core::{CMatrix, Complex64, CuntzElement, CuntzTerm};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Letter {
    S(u8),
    Adj(u8),
}

/// Reduces a monomial in `S_i`, `S_i*` with `S_i* S_j = δ_ij` alone.
fn reduce(mut letters: Vec<Letter>) -> Option<(Vec<u8>, Vec<u8>)> {
    let mut i = 0;
    while i + 1 < letters.len() {
        match (letters[i], letters[i + 1]) {
            (Letter::Adj(a), Letter::S(b)) => {
                if a != b {
                    return None;
                }
                letters.drain(i..i + 2);
                i = i.saturating_sub(1);
            }
            _ => i += 1,
        }
    }
    let split = letters.iter().position(|l| matches!(l, Letter::Adj(_))).unwrap_or(letters.len());
    let j = letters[..split]
        .iter()
        .map(|l| match l {
            Letter::S(a) => *a,
            Letter::Adj(_) => unreachable!("reduced form"),
        })
        .collect();
    let k = letters[split..]
        .iter()
        .rev()
        .map(|l| match l {
            Letter::Adj(a) => *a,
            Letter::S(_) => panic!("S after S* in reduced monomial"),
        })
        .collect();
    Some((j, k))
}

fn monomial(j: &[u8], k: &[u8]) -> Vec<Letter> {
    j.iter()
        .map(|&a| Letter::S(a))
        .chain(k.iter().rev().map(|&a| Letter::Adj(a)))
        .collect()
}

/// Product computed by letter-by-letter cancellation, without padding.
pub fn oracle_product(x: &CuntzElement, y: &CuntzElement) -> CuntzElement {
    let mut terms = Vec::new();
    for a in x.terms() {
        for b in y.terms() {
            let mut letters = monomial(&a.j, &a.k);
            letters.extend(monomial(&b.j, &b.k));
            if let Some((j, k)) = reduce(letters) {
                terms.push(CuntzTerm::new(a.coeff * b.coeff, j, k));
            }
        }
    }
    CuntzElement::from_terms(x.n(), terms).expect("letters below N")
}

fn coeff(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn word(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.gen_range(0..n) as u8).collect()
}

/// A sum of up to `max_terms` words with `|J|, |K| ≤ max_len`.
pub fn random_element(rng: &mut ChaCha8Rng, n: usize, max_len: usize, max_terms: usize) -> CuntzElement {
    let count = rng.gen_range(1..=max_terms);
    let terms: Vec<_> = (0..count)
        .map(|_| {
            let lj = rng.gen_range(0..=max_len);
            let lk = rng.gen_range(0..=max_len);
            CuntzTerm::new(coeff(rng), word(rng, n, lj), word(rng, n, lk))
        })
        .collect();
    CuntzElement::from_terms(n, terms).expect("letters below N")
}

/// A random element of `F_N^level`.
pub fn random_gauge_invariant(rng: &mut ChaCha8Rng, n: usize, level: usize, max_terms: usize) -> CuntzElement {
    let count = rng.gen_range(1..=max_terms);
    let terms: Vec<_> = (0..count)
        .map(|_| {
            let l = rng.gen_range(0..=level);
            CuntzTerm::new(coeff(rng), word(rng, n, l), word(rng, n, l))
        })
        .collect();
    CuntzElement::from_terms(n, terms).expect("letters below N")
}

/// Haar-ish random unitary from the QR factor of a random complex matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| coeff(rng));
    a.qr().q()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
