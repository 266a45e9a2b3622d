//! JSON formats for matrices and generator sets.
//!
//! A matrix is `{"n": 1, "entries": [[[re, im], ...], ...]}`. Entries may also
//! be plain reals, and `entries` may be a flat row-major list of length
//! `(n+1)^2`. A generator file is `{"n": 1, "generators": [entries, ...]}`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, GroupElement};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(r) => Complex64::new(r, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entries {
    Rows(Vec<Vec<Entry>>),
    Flat(Vec<Entry>),
}

impl Entries {
    pub fn to_matrix(&self, n: Option<usize>) -> Result<CMatrix> {
        let m = match self {
            Entries::Rows(rows) => {
                let rows: Vec<Vec<Complex64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|&e| e.into()).collect())
                    .collect();
                CMatrix::from_rows(&rows)?
            }
            Entries::Flat(flat) => {
                let dim = (flat.len() as f64).sqrt().round() as usize;
                if dim * dim != flat.len() {
                    return Err(Error::NotSquare { rows: flat.len(), cols: 1 });
                }
                CMatrix::from_fn(dim, |i, j| flat[i * dim + j].into())
            }
        };
        if let Some(n) = n {
            if m.dim() != n + 1 {
                return Err(Error::DimensionMismatch { expected: n + 1, got: m.dim() });
            }
        }
        if m.dim() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: m.dim() });
        }
        Ok(m)
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        Entries::Rows(
            m.rows()
                .into_iter()
                .map(|r| r.into_iter().map(|z| Entry::Complex([z.re, z.im])).collect())
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(default)]
    pub n: Option<usize>,
    pub entries: Entries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorsFile {
    #[serde(default)]
    pub n: Option<usize>,
    pub generators: Vec<Entries>,
}

/// Parses a matrix document and validates it against SU(n,1) at `tol`.
pub fn parse_element(json: &str, tol: f64) -> Result<GroupElement> {
    let file: MatrixFile = serde_json::from_str(json)?;
    GroupElement::new(file.entries.to_matrix(file.n)?, tol)
}

pub fn read_element(path: &Path, tol: f64) -> Result<GroupElement> {
    parse_element(&std::fs::read_to_string(path)?, tol)
}

pub fn parse_generators(json: &str, tol: f64) -> Result<Vec<GroupElement>> {
    let file: GeneratorsFile = serde_json::from_str(json)?;
    if file.generators.is_empty() {
        return Err(Error::EmptyElementSet);
    }
    let mut out = Vec::with_capacity(file.generators.len());
    for e in &file.generators {
        let m = e.to_matrix(file.n)?;
        if let Some(first) = out.first() {
            let first: &GroupElement = first;
            if first.matrix().dim() != m.dim() {
                return Err(Error::DimensionMismatch { expected: first.matrix().dim(), got: m.dim() });
            }
        }
        out.push(GroupElement::new(m, tol)?);
    }
    Ok(out)
}

pub fn read_generators(path: &Path, tol: f64) -> Result<Vec<GroupElement>> {
    parse_generators(&std::fs::read_to_string(path)?, tol)
}

pub fn element_document(g: &GroupElement) -> MatrixFile {
    MatrixFile {
        n: Some(g.n()),
        entries: Entries::from_matrix(g.matrix()),
    }
}

pub fn generators_document(gens: &[GroupElement]) -> GeneratorsFile {
    GeneratorsFile {
        n: gens.first().map(GroupElement::n),
        generators: gens.iter().map(|g| Entries::from_matrix(g.matrix())).collect(),
    }
}
