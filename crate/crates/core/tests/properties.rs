mod common;

use common::{max_abs, oracle_product, random_element, random_gauge_invariant, random_unitary};
use cuntz_core::algebra::{from_matrix, identity_matrix, to_matrix};
use cuntz_core::endo::{associated_unitary, permutation_endomorphism};
use cuntz_core::entropy::{count_itineraries, DEFAULT_BUDGET};
use cuntz_core::masa::{extract_local_rule, rules_equal, LocalRule, MasaError, RuleProvenance};
use cuntz_core::munit::commutant_dimension;
use cuntz_core::{CMatrix, Complex64, CuntzElement, Endomorphism, MultiIndex, PermutationSpec, ScalarConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg() -> ScalarConfig {
    ScalarConfig::default()
}

fn eq(a: &CuntzElement, b: &CuntzElement) -> bool {
    a.equals(b, &cfg()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_matches_reference_reduction(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element(&mut rng, n, 3, 4);
        let y = random_element(&mut rng, n, 3, 4);
        prop_assert!(eq(&(&x * &y), &oracle_product(&x, &y)));
    }

    #[test]
    fn ring_axioms(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element(&mut rng, n, 2, 3);
        let y = random_element(&mut rng, n, 2, 3);
        let z = random_element(&mut rng, n, 2, 3);
        let one = CuntzElement::one(n);
        prop_assert!(eq(&(&(&x * &y) * &z), &(&x * &(&y * &z))));
        prop_assert!(eq(&(&x * &(&y + &z)), &(&(&x * &y) + &(&x * &z))));
        prop_assert!(eq(&(&(&x + &y) * &z), &(&(&x * &z) + &(&y * &z))));
        prop_assert!(eq(&(&x * &one), &x));
        prop_assert!(eq(&(&one * &x), &x));
        prop_assert!((&x - &x).is_zero());
        prop_assert!(eq(&(&x + &y), &(&y + &x)));
    }

    #[test]
    fn star_axioms(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element(&mut rng, n, 2, 3);
        let y = random_element(&mut rng, n, 2, 3);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        prop_assert!(eq(&(&x * &y).adjoint(), &(&y.adjoint() * &x.adjoint())));
        prop_assert!(eq(&x.adjoint().adjoint(), &x));
        prop_assert!(eq(&(&x + &y).adjoint(), &(&x.adjoint() + &y.adjoint())));
        prop_assert!(eq(&x.scale(c).adjoint(), &x.adjoint().scale(c.conj())));
    }

    #[test]
    fn canonical_form_is_idempotent(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = &random_element(&mut rng, n, 3, 5) * &random_element(&mut rng, n, 2, 3);
        let c = x.canonical();
        prop_assert_eq!(c.canonical(), c.clone());
        prop_assert!(eq(&c, &x));
        prop_assert_eq!(CuntzElement::from_terms(n, x.terms()).unwrap().canonical(), c);
    }

    #[test]
    fn matrix_view_is_a_star_homomorphism(seed in any::<u64>(), n in 2usize..=3, level in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_gauge_invariant(&mut rng, n, level, 4);
        let y = random_gauge_invariant(&mut rng, n, level, 4);
        let m = |e: &CuntzElement| to_matrix(e, level).unwrap();
        prop_assert!(max_abs(&(m(&(&x * &y)) - m(&x) * m(&y))) < 1e-9);
        prop_assert!(max_abs(&(m(&(&x + &y)) - (m(&x) + m(&y)))) < 1e-9);
        prop_assert!(max_abs(&(m(&x.adjoint()) - m(&x).adjoint())) < 1e-9);
        prop_assert_eq!(m(&CuntzElement::one(n)), identity_matrix(n.pow(level as u32)));
        prop_assert!(eq(&from_matrix(&m(&x), n).unwrap(), &x));
    }

    #[test]
    fn phi_is_a_tracial_state_on_the_core(seed in any::<u64>(), n in 2usize..=3, level in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_gauge_invariant(&mut rng, n, level, 4);
        let b = random_gauge_invariant(&mut rng, n, level, 4);
        prop_assert!((CuntzElement::one(n).phi() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(((&a * &b).phi() - (&b * &a).phi()).norm() < 1e-9);
        let tr = to_matrix(&a, level).unwrap().trace() / n.pow(level as u32) as f64;
        prop_assert!((a.phi() - tr).norm() < 1e-9);

        let x = random_element(&mut rng, n, 2, 4);
        let p = (&x.adjoint() * &x).phi();
        prop_assert!(p.re >= -1e-12 && p.im.abs() < 1e-9);
    }

    #[test]
    fn json_roundtrip(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element(&mut rng, n, 3, 6);
        let back = CuntzElement::from_json(&x.to_json()).unwrap();
        prop_assert!(eq(&back, &x));
        prop_assert_eq!(back.len(), x.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitary_endomorphism_roundtrip(seed in any::<u64>(), n in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = from_matrix(&random_unitary(&mut rng, n * n), n).unwrap();
        let rho = Endomorphism::from_unitary(u.clone()).unwrap();
        prop_assert!(eq(&associated_unitary(rho.images()).unwrap(), &u));

        let x = random_element(&mut rng, n, 2, 3);
        let y = random_element(&mut rng, n, 2, 3);
        let rx = rho.apply(&x).unwrap();
        prop_assert!(eq(&rho.apply(&(&x * &y)).unwrap(), &(&rx * &rho.apply(&y).unwrap())));
        prop_assert!(eq(&rho.apply(&x.adjoint()).unwrap(), &rx.adjoint()));
        prop_assert!(eq(&rho.apply(&CuntzElement::one(n)).unwrap(), &CuntzElement::one(n)));
    }

    #[test]
    fn commutant_matches_svd_oracle(seed in any::<u64>(), dim in 2usize..=4, count in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gens: Vec<CMatrix> = (0..count)
            .map(|_| {
                // sparse integer matrices give nontrivial commutants
                CMatrix::from_fn(dim, dim, |_, _| {
                    if rng.gen_bool(0.3) { Complex64::new(rng.gen_range(-2..=2) as f64, 0.0) } else { Complex64::new(0.0, 0.0) }
                })
            })
            .collect();
        let report = commutant_dimension(&gens).unwrap();
        prop_assert_eq!(report.commutant_dimension, svd_commutant_dimension(&gens));

        // adding a generator can only shrink the commutant
        let mut more = gens.clone();
        more.push(CMatrix::from_fn(dim, dim, |r, c| Complex64::new((r * dim + c) as f64 % 3.0, 0.0)));
        prop_assert!(commutant_dimension(&more).unwrap().commutant_dimension <= report.commutant_dimension);
    }

    #[test]
    fn itinerary_counts_match_serial_enumeration(seed in any::<u64>(), n_letters in 2usize..=3, r in 0usize..=2, window in 1usize..=2, m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block: Vec<u8> = (0..n_letters.pow(r as u32 + 1)).map(|_| rng.gen_range(0..n_letters) as u8).collect();
        let depth = window + m.saturating_sub(2) * r;
        let rule = sliding_block_rule(n_letters, r, depth.max(1), &block);
        let fast = count_itineraries(&rule, window, m, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(fast, serial_count(&rule, window, m));
        if m > 1 {
            prop_assert!(fast >= count_itineraries(&rule, window, m - 1, DEFAULT_BUDGET).unwrap());
        }
        prop_assert_eq!(fast, count_itineraries(&rule, window, m, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn extracted_rules_compose_like_endomorphisms(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sigma: Vec<usize> = (0..4).collect();
        for i in (1..4).rev() {
            sigma.swap(i, rng.gen_range(0..=i));
        }
        let rho = permutation_endomorphism(&PermutationSpec::new(2, sigma), 2).unwrap();
        match extract_local_rule(&rho, 4) {
            Ok(t) => {
                t.check_truncation_consistency().unwrap();
                let sq = extract_local_rule(&rho.power(2).unwrap(), 2).unwrap();
                let composed = t.then(&t).unwrap();
                prop_assert!(rules_equal(&sq, &composed, 2).unwrap());
            }
            Err(MasaError::LookaheadTooLarge { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

/// `d² − rank` of `X ↦ (XA − AX)`, the rank read off singular values.
fn svd_commutant_dimension(gens: &[CMatrix]) -> usize {
    let d = gens[0].nrows();
    let id = identity_matrix(d);
    let blocks: Vec<CMatrix> = gens
        .iter()
        .map(|a| id.kronecker(&a.transpose()) - a.kronecker(&id))
        .collect();
    let mut stacked = CMatrix::zeros(d * d * gens.len(), d * d);
    for (i, b) in blocks.iter().enumerate() {
        stacked.view_mut((i * d * d, 0), (d * d, d * d)).copy_from(b);
    }
    let sv = stacked.svd(false, false).singular_values;
    let rank = sv.iter().filter(|&&s| s > 1e-7).count();
    d * d - rank
}

fn sliding_block_rule(n: usize, r: usize, depth: usize, block: &[u8]) -> LocalRule {
    LocalRule::from_fn(n, r, depth, RuleProvenance::Custom, |w| {
        (0..w.len() - r)
            .map(|k| block[MultiIndex::from(&w[k..=k + r]).index(n)])
            .collect()
    })
    .unwrap()
}

fn serial_count(rule: &LocalRule, window: usize, m: usize) -> u64 {
    let len = window + (m - 1) * rule.lookahead();
    let mut seen = std::collections::BTreeSet::new();
    for w in MultiIndex::all(rule.n(), len) {
        let mut it = Vec::new();
        let mut x: Vec<u8> = w.letters().to_vec();
        it.extend_from_slice(&x[..window]);
        for _ in 1..m {
            x = rule.apply(&x).unwrap().to_vec();
            it.extend_from_slice(&x[..window]);
        }
        seen.insert(it);
    }
    seen.len() as u64
}

#[test]
fn commutant_sanity_cases() {
    for n in 2..=3 {
        let full: Vec<CMatrix> = cuntz_core::munit::matrix_units(n, 1)
            .iter()
            .map(|e| to_matrix(e, 1).unwrap())
            .collect();
        assert_eq!(commutant_dimension(&full).unwrap().commutant_dimension, 1);
        let id = identity_matrix(n);
        let left: Vec<CMatrix> = full.iter().map(|e| id.kronecker(e)).collect();
        assert_eq!(commutant_dimension(&left).unwrap().commutant_dimension, n * n);
        assert_eq!(svd_commutant_dimension(&left), n * n);
    }
}
