//! Dynamics on the canonical masa `C_N ≅ C(full shift)`.
//!
//! An endomorphism that leaves `C_N` invariant acts on it as `f ↦ f∘T` for a
//! continuous map `T` of the one-sided full shift. Applying `ρ` to a
//! cylinder projection `S_J S_J*` therefore produces the indicator of
//! `T⁻¹[J]`, and reading those preimages off for all `|J| = n` recovers the
//! first `n` output letters of `T` as a function of the first `n + r` input
//! letters. [`extract_local_rule`] performs that inversion and verifies the
//! partition and prefix-coherence properties along the way.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{CuntzElement, CuntzTerm, MultiIndex, ScalarConfig};
use crate::endo::{EndoError, Endomorphism};
use crate::group::DualGroup;

/// Largest lookahead searched during extraction.
pub const MAX_LOOKAHEAD: usize = 3;

/// Default extraction depth.
pub const DEFAULT_DEPTH: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasaError {
    #[error("C_N is not invariant: {0}")]
    NotInvariant(CylinderFailure),
    #[error("cylinder preimages at level {level} {kind} at word {word:?}")]
    Partition {
        level: usize,
        kind: PartitionDefect,
        word: MultiIndex,
    },
    #[error("level {level} needs lookahead {needed}, above the limit {MAX_LOOKAHEAD}")]
    LookaheadTooLarge { level: usize, needed: usize },
    #[error("rule is not prefix coherent between levels {level} and {}: input {input:?}", level + 1)]
    Truncation { level: usize, input: MultiIndex },
    #[error("rule has depth {depth}, level {level} requested")]
    DepthExceeded { depth: usize, level: usize },
    #[error("input word of length {len} is too short for lookahead {r}")]
    WordTooShort { len: usize, r: usize },
    #[error("rules over different alphabets (N={left} vs N={right})")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("malformed rule: {0}")]
    Format(String),
    #[error(transparent)]
    Endo(#[from] EndoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PartitionDefect {
    Overlap,
    Gap,
}

impl std::fmt::Display for PartitionDefect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartitionDefect::Overlap => write!(f, "overlap"),
            PartitionDefect::Gap => write!(f, "leave a gap"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FailureReason {
    /// A term `S_A S_B*` with `A ≠ B`.
    NonDiagonal,
    /// A diagonal term whose coefficient is not 1.
    NonUnitCoefficient,
}

/// Why `ρ(S_J S_J*)` is not a sum of cylinder projections.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFailure {
    pub cylinder: MultiIndex,
    pub reason: FailureReason,
    pub witness: CuntzTerm,
}

impl std::fmt::Display for CylinderFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let c = self.witness.coeff;
        write!(
            f,
            "image of cylinder {:?} has {:?} term ({:+.6}{:+.6}i)·S_{:?} S_{:?}*",
            self.cylinder, self.reason, c.re, c.im, self.witness.j, self.witness.k
        )
    }
}

/// The words `A` with `ρ(S_J S_J*) = Σ_A S_A S_A*`, all of one length.
pub fn image_of_cylinder(rho: &Endomorphism, j: &MultiIndex) -> Result<Result<Vec<MultiIndex>, CylinderFailure>, MasaError> {
    image_of_cylinder_with(rho, j, &ScalarConfig::default())
}

pub fn image_of_cylinder_with(
    rho: &Endomorphism,
    j: &MultiIndex,
    cfg: &ScalarConfig,
) -> Result<Result<Vec<MultiIndex>, CylinderFailure>, MasaError> {
    let p = CuntzElement::projection(rho.n(), j.clone()).map_err(EndoError::from)?;
    let image = rho.apply(&p)?.contracted(cfg.equality_tol);
    Ok(diagonal_words(&image, j, cfg))
}

fn diagonal_words(image: &CuntzElement, j: &MultiIndex, cfg: &ScalarConfig) -> Result<Vec<MultiIndex>, CylinderFailure> {
    let one = Complex64::new(1.0, 0.0);
    let mut words = Vec::with_capacity(image.len());
    let mut bad_coeff = None;
    for t in image.terms() {
        if t.j != t.k {
            return Err(CylinderFailure {
                cylinder: j.clone(),
                reason: FailureReason::NonDiagonal,
                witness: t,
            });
        }
        if (t.coeff - one).norm() > cfg.equality_tol {
            bad_coeff.get_or_insert(t);
            continue;
        }
        words.push(t.j);
    }
    if let Some(t) = bad_coeff {
        return Err(CylinderFailure {
            cylinder: j.clone(),
            reason: FailureReason::NonUnitCoefficient,
            witness: t,
        });
    }
    Ok(words)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasaCheck {
    pub depth: usize,
    pub cylinders_checked: usize,
    pub violation: Option<CylinderFailure>,
}

impl MasaCheck {
    pub fn is_invariant(&self) -> bool {
        self.violation.is_none()
    }
}

/// Runs [`image_of_cylinder`] for every `1 ≤ |J| ≤ depth` and stops at the
/// first failure (in length-then-lexicographic order).
pub fn check_masa_invariant(rho: &Endomorphism, depth: usize) -> Result<MasaCheck, MasaError> {
    if depth == 0 {
        return Err(MasaError::ZeroDepth);
    }
    let cfg = ScalarConfig::default();
    let mut checked = 0;
    for len in 1..=depth {
        let words: Vec<_> = MultiIndex::all(rho.n(), len).collect();
        let results: Vec<_> = words
            .par_iter()
            .map(|j| image_of_cylinder_with(rho, j, &cfg))
            .collect::<Result<_, _>>()?;
        for r in results {
            checked += 1;
            if let Err(failure) = r {
                return Ok(MasaCheck {
                    depth,
                    cylinders_checked: checked,
                    violation: Some(failure),
                });
            }
        }
    }
    Ok(MasaCheck {
        depth,
        cylinders_checked: checked,
        violation: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedFormKind {
    /// `(Tw)_k = w_{k+1}`
    Shift,
    /// `(Tw)_k = w_{k+1} − w_k`
    Difference,
    /// `(Tw)_k = w_{k+1} − w_1`, read off the cylinder formula for `γ`.
    AnchoredDifference,
    /// `(Tw)_k = w_1 + w_{k+1}`; equals the anchored difference in exponent 2.
    AnchoredSum,
}

impl ClosedFormKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "shift" => Some(ClosedFormKind::Shift),
            "difference" => Some(ClosedFormKind::Difference),
            "anchored-difference" | "anchored" => Some(ClosedFormKind::AnchoredDifference),
            "anchored-sum" => Some(ClosedFormKind::AnchoredSum),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClosedFormKind::Shift => "shift",
            ClosedFormKind::Difference => "difference",
            ClosedFormKind::AnchoredDifference => "anchored-difference",
            ClosedFormKind::AnchoredSum => "anchored-sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleProvenance {
    Extracted,
    ClosedForm(ClosedFormKind),
    Custom,
}

/// A prefix-determined map of the full shift: for each `n ≤ depth`, the
/// first `n` output letters as a function of the first `n + r` input
/// letters.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRule {
    n: usize,
    r: usize,
    depth: usize,
    /// `tables[n-1]` holds the outputs of length `n` for every input of
    /// length `n + r`, concatenated in lexicographic input order.
    tables: Vec<Vec<u8>>,
    provenance: RuleProvenance,
}

impl LocalRule {
    /// Tabulates `f` on all inputs of length `n + r`, `1 ≤ n ≤ depth`.
    /// `f` must return exactly `input.len() - r` letters below `n`.
    pub fn from_fn(
        n: usize,
        r: usize,
        depth: usize,
        provenance: RuleProvenance,
        f: impl Fn(&[u8]) -> Vec<u8>,
    ) -> Result<Self, MasaError> {
        if depth == 0 {
            return Err(MasaError::ZeroDepth);
        }
        let mut tables = Vec::with_capacity(depth);
        for len in 1..=depth {
            let mut table = Vec::with_capacity(n.pow((len + r) as u32) * len);
            for w in MultiIndex::all(n, len + r) {
                let out = f(&w);
                if out.len() != len || out.iter().any(|&a| a as usize >= n) {
                    return Err(MasaError::Format(format!("rule output {out:?} invalid for input {w:?}")));
                }
                table.extend_from_slice(&out);
            }
            tables.push(table);
        }
        Ok(LocalRule {
            n,
            r,
            depth,
            tables,
            provenance,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lookahead(&self) -> usize {
        self.r
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn provenance(&self) -> RuleProvenance {
        self.provenance
    }

    /// First `w.len() - r` letters of `T(w)`.
    pub fn apply(&self, w: &[u8]) -> Result<&[u8], MasaError> {
        if w.len() <= self.r {
            return Err(MasaError::WordTooShort { len: w.len(), r: self.r });
        }
        let out_len = w.len() - self.r;
        if out_len > self.depth {
            return Err(MasaError::DepthExceeded {
                depth: self.depth,
                level: out_len,
            });
        }
        let idx = MultiIndex::from(w).index(self.n);
        Ok(&self.tables[out_len - 1][idx * out_len..(idx + 1) * out_len])
    }

    /// Unchecked lookup used by the counting loop; `w` must have length
    /// `n + r` with `1 ≤ n ≤ depth` and letters below `N`.
    pub(crate) fn apply_fast(&self, w: &[u8]) -> &[u8] {
        let out_len = w.len() - self.r;
        let idx = w.iter().fold(0usize, |acc, &a| acc * self.n + a as usize);
        &self.tables[out_len - 1][idx * out_len..(idx + 1) * out_len]
    }

    /// Prefix coherence: the length-`n` image of `w` is a prefix of the
    /// length-`n+1` image of every one-letter extension of `w`.
    pub fn check_truncation_consistency(&self) -> Result<(), MasaError> {
        for len in 1..self.depth {
            for w in MultiIndex::all(self.n, len + 1 + self.r) {
                let long = self.apply(&w)?;
                let short = self.apply(&w[..len + self.r])?;
                if &long[..len] != short {
                    return Err(MasaError::Truncation { level: len, input: w });
                }
            }
        }
        Ok(())
    }

    /// `other ∘ self`: apply `self` first. Lookaheads add, and the depth is
    /// limited by what both tables cover.
    pub fn then(&self, other: &LocalRule) -> Result<LocalRule, MasaError> {
        if self.n != other.n {
            return Err(MasaError::AlphabetMismatch {
                left: self.n,
                right: other.n,
            });
        }
        // output length n needs other at level n and self at level n + other.r
        let depth = other.depth.min(self.depth.saturating_sub(other.r));
        if depth == 0 {
            return Err(MasaError::ZeroDepth);
        }
        LocalRule::from_fn(self.n, self.r + other.r, depth, RuleProvenance::Custom, |w| {
            let mid = self.apply_fast(w);
            other.apply_fast(mid).to_vec()
        })
    }
}

/// Exhaustive comparison over all inputs with output length up to `depth`.
pub fn rules_equal(a: &LocalRule, b: &LocalRule, depth: usize) -> Result<bool, MasaError> {
    if a.n != b.n {
        return Err(MasaError::AlphabetMismatch { left: a.n, right: b.n });
    }
    for (rule, _) in [(a, 0), (b, 1)] {
        if depth > rule.depth {
            return Err(MasaError::DepthExceeded {
                depth: rule.depth,
                level: depth,
            });
        }
    }
    let r = a.r.max(b.r);
    for len in 1..=depth {
        for w in MultiIndex::all(a.n, len + r) {
            if a.apply(&w[..len + a.r])? != b.apply(&w[..len + b.r])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The closed-form rules over `G`, all with lookahead 1.
pub fn closed_form_rule(kind: ClosedFormKind, group: &DualGroup, depth: usize) -> Result<LocalRule, MasaError> {
    let n = group.order();
    LocalRule::from_fn(n, 1, depth, RuleProvenance::ClosedForm(kind), |w| {
        let first = w[0] as usize;
        (0..w.len() - 1)
            .map(|k| {
                let next = w[k + 1] as usize;
                let out = match kind {
                    ClosedFormKind::Shift => next,
                    ClosedFormKind::Difference => group.sub(next, w[k] as usize),
                    ClosedFormKind::AnchoredDifference => group.sub(next, first),
                    ClosedFormKind::AnchoredSum => group.add(first, next),
                };
                out as u8
            })
            .collect()
    })
}

/// Shortest length at which the word set is a union of cylinders.
fn minimal_cylinder_length(words: &[MultiIndex], n: usize) -> (usize, Vec<MultiIndex>) {
    let mut current: Vec<MultiIndex> = words.to_vec();
    loop {
        let Some(len) = current.first().map(|w| w.len()) else {
            return (0, current);
        };
        if len == 0 {
            return (0, current);
        }
        let mut groups: BTreeMap<MultiIndex, usize> = BTreeMap::new();
        for w in &current {
            *groups.entry(w.prefix(len - 1)).or_default() += 1;
        }
        if groups.values().all(|&c| c == n) {
            current = groups.into_keys().collect();
        } else {
            return (len, current);
        }
    }
}

fn extend_to(words: &[MultiIndex], n: usize, len: usize) -> impl Iterator<Item = MultiIndex> + '_ {
    words.iter().flat_map(move |w| {
        let pad = len - w.len();
        MultiIndex::all(n, pad).map(move |s| w.concat(&s))
    })
}

fn level_preimages(rho: &Endomorphism, len: usize, cfg: &ScalarConfig) -> Result<Vec<Vec<MultiIndex>>, MasaError> {
    let words: Vec<_> = MultiIndex::all(rho.n(), len).collect();
    let images: Vec<_> = words
        .par_iter()
        .map(|j| image_of_cylinder_with(rho, j, cfg))
        .collect::<Result<_, _>>()?;
    images
        .into_iter()
        .map(|r| r.map_err(MasaError::NotInvariant))
        .collect()
}

/// Reads off `T` from `ρ` on cylinders of length `1..=depth`. The lookahead
/// is the smallest `r ≤ 3` for which every level's preimages are unions of
/// cylinders of length `n + r`.
pub fn extract_local_rule(rho: &Endomorphism, depth: usize) -> Result<LocalRule, MasaError> {
    if depth == 0 {
        return Err(MasaError::ZeroDepth);
    }
    let n = rho.n();
    let cfg = ScalarConfig::default();
    let mut levels = Vec::with_capacity(depth);
    let mut r = 0;
    for len in 1..=depth {
        let pre = level_preimages(rho, len, &cfg)?;
        let reduced: Vec<(usize, Vec<MultiIndex>)> =
            pre.iter().map(|words| minimal_cylinder_length(words, n)).collect();
        let needed = reduced
            .iter()
            .map(|(l, _)| l.saturating_sub(len))
            .max()
            .unwrap_or(0);
        if needed > MAX_LOOKAHEAD {
            return Err(MasaError::LookaheadTooLarge { level: len, needed });
        }
        r = r.max(needed);
        levels.push(reduced.into_iter().map(|(_, w)| w).collect::<Vec<_>>());
    }

    let mut tables = Vec::with_capacity(depth);
    for (i, sets) in levels.iter().enumerate() {
        let len = i + 1;
        let in_len = len + r;
        let size = n.pow(in_len as u32);
        let mut owner: Vec<Option<usize>> = vec![None; size];
        for (j, words) in sets.iter().enumerate() {
            for w in extend_to(words, n, in_len) {
                let idx = w.index(n);
                if owner[idx].is_some() {
                    return Err(MasaError::Partition {
                        level: len,
                        kind: PartitionDefect::Overlap,
                        word: w,
                    });
                }
                owner[idx] = Some(j);
            }
        }
        let mut table = Vec::with_capacity(size * len);
        for (idx, o) in owner.iter().enumerate() {
            match o {
                Some(j) => table.extend_from_slice(&MultiIndex::from_index(n, len, *j)),
                None => {
                    return Err(MasaError::Partition {
                        level: len,
                        kind: PartitionDefect::Gap,
                        word: MultiIndex::from_index(n, in_len, idx),
                    })
                }
            }
        }
        tables.push(table);
    }

    let rule = LocalRule {
        n,
        r,
        depth,
        tables,
        provenance: RuleProvenance::Extracted,
    };
    rule.check_truncation_consistency()?;
    Ok(rule)
}

/// One `[input, output]` table entry.
pub type RulePair = (Vec<u8>, Vec<u8>);

/// Wire format for [`LocalRule`]: `tables` maps each output length `n` (as
/// a string key) to `[input, output]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub depth: usize,
    pub tables: BTreeMap<String, Vec<RulePair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormKind>,
}

impl From<&LocalRule> for RuleJson {
    fn from(rule: &LocalRule) -> Self {
        let mut tables = BTreeMap::new();
        for len in 1..=rule.depth {
            let pairs = MultiIndex::all(rule.n, len + rule.r)
                .map(|w| {
                    let out = rule.apply(&w).expect("within depth").to_vec();
                    (w.into_letters(), out)
                })
                .collect();
            tables.insert(len.to_string(), pairs);
        }
        let closed_form = match rule.provenance {
            RuleProvenance::ClosedForm(k) => Some(k),
            _ => None,
        };
        RuleJson {
            n: rule.n,
            r: rule.r,
            depth: rule.depth,
            tables,
            closed_form,
        }
    }
}

impl TryFrom<RuleJson> for LocalRule {
    type Error = MasaError;

    fn try_from(j: RuleJson) -> Result<Self, MasaError> {
        if j.n < 1 || j.n > crate::algebra::MAX_ALPHABET {
            return Err(MasaError::Format(format!("invalid alphabet size {}", j.n)));
        }
        if j.depth == 0 {
            return Err(MasaError::ZeroDepth);
        }
        let mut tables = Vec::with_capacity(j.depth);
        for len in 1..=j.depth {
            let pairs = j
                .tables
                .get(&len.to_string())
                .ok_or_else(|| MasaError::Format(format!("missing table for n={len}")))?;
            let in_len = len + j.r;
            let size = j.n.pow(in_len as u32);
            let mut table = vec![0u8; size * len];
            let mut seen = HashSet::with_capacity(size);
            for (input, output) in pairs {
                let valid = input.len() == in_len
                    && output.len() == len
                    && input.iter().chain(output).all(|&a| (a as usize) < j.n);
                if !valid {
                    return Err(MasaError::Format(format!("bad entry {input:?} -> {output:?} at n={len}")));
                }
                let idx = MultiIndex::from(input.as_slice()).index(j.n);
                if !seen.insert(idx) {
                    return Err(MasaError::Format(format!("duplicate input {input:?} at n={len}")));
                }
                table[idx * len..(idx + 1) * len].copy_from_slice(output);
            }
            if seen.len() != size {
                return Err(MasaError::Format(format!("table for n={len} is incomplete")));
            }
            tables.push(table);
        }
        let provenance = match j.closed_form {
            Some(k) => RuleProvenance::ClosedForm(k),
            None => RuleProvenance::Extracted,
        };
        Ok(LocalRule {
            n: j.n,
            r: j.r,
            depth: j.depth,
            tables,
            provenance,
        })
    }
}

impl LocalRule {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&RuleJson::from(self)).expect("rule JSON is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, MasaError> {
        let raw: RuleJson = serde_json::from_str(s).map_err(|e| MasaError::Format(e.to_string()))?;
        raw.try_into()
    }
}
