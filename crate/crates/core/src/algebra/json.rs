use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AlgebraError, CMatrix, CuntzElement, CuntzTerm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub re: f64,
    pub im: f64,
    #[serde(rename = "J")]
    pub j: Vec<u8>,
    #[serde(rename = "K")]
    pub k: Vec<u8>,
}

/// Wire format `{"N": int, "terms": [{"re", "im", "J", "K"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub terms: Vec<TermJson>,
}

impl From<&CuntzElement> for ElementJson {
    fn from(e: &CuntzElement) -> Self {
        ElementJson {
            n: e.n(),
            terms: e
                .terms()
                .map(|t| TermJson {
                    re: t.coeff.re,
                    im: t.coeff.im,
                    j: t.j.into_letters(),
                    k: t.k.into_letters(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ElementJson> for CuntzElement {
    type Error = AlgebraError;

    fn try_from(e: ElementJson) -> Result<Self, AlgebraError> {
        CuntzElement::from_terms(
            e.n,
            e.terms
                .into_iter()
                .map(|t| CuntzTerm::new(Complex64::new(t.re, t.im), t.j, t.k)),
        )
    }
}

impl CuntzElement {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ElementJson::from(self)).expect("element JSON is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, AlgebraError> {
        let raw: ElementJson = serde_json::from_str(s).map_err(|e| AlgebraError::Format(e.to_string()))?;
        raw.try_into()
    }
}

/// Wire format `{"dim": int, "entries": [[re, im], …]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                entries.push([v.re, v.im]);
            }
        }
        MatrixJson { dim, entries }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = AlgebraError;

    fn try_from(m: MatrixJson) -> Result<Self, AlgebraError> {
        if m.entries.len() != m.dim * m.dim {
            return Err(AlgebraError::Format(format!(
                "matrix of dim {} needs {} entries, got {}",
                m.dim,
                m.dim * m.dim,
                m.entries.len()
            )));
        }
        Ok(DMatrix::from_row_iterator(
            m.dim,
            m.dim,
            m.entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
        ))
    }
}

impl MatrixJson {
    pub fn parse(s: &str) -> Result<CMatrix, AlgebraError> {
        let raw: MatrixJson = serde_json::from_str(s).map_err(|e| AlgebraError::Format(e.to_string()))?;
        raw.try_into()
    }

    pub fn render(m: &CMatrix) -> String {
        serde_json::to_string(&MatrixJson::from(m)).expect("matrix JSON is always serializable")
    }
}
