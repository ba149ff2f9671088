//! The polynomial file format:
//!
//! ```json
//! {"n": 3, "terms": [{"vars": [], "coeff": 0.5}, {"vars": [0, 2], "coeff": -1.0}]}
//! ```
//!
//! The loader is strict: duplicate subsets, unsorted or repeated indices,
//! indices `>= n` and non-finite coefficients are all rejected.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::MultilinearPolynomial;
use crate::error::{PtfError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub vars: Vec<u64>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialFile {
    pub n: u64,
    pub terms: Vec<TermRecord>,
}

impl TryFrom<PolynomialFile> for MultilinearPolynomial {
    type Error = PtfError;

    fn try_from(file: PolynomialFile) -> Result<Self> {
        let n = usize::try_from(file.n).map_err(|_| PtfError::Format(format!("n = {} is too large", file.n)))?;
        let mut seen = HashSet::with_capacity(file.terms.len());
        let mut terms = Vec::with_capacity(file.terms.len());
        for (k, term) in file.terms.into_iter().enumerate() {
            if !term.coeff.is_finite() {
                return Err(PtfError::Format(format!("term {k}: non-finite coefficient")));
            }
            if term.vars.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PtfError::Format(format!(
                    "term {k}: variable indices must be strictly increasing, got {:?}",
                    term.vars
                )));
            }
            if let Some(&bad) = term.vars.iter().find(|&&v| v >= file.n) {
                return Err(PtfError::Format(format!(
                    "term {k}: variable index {bad} out of range for n = {n}"
                )));
            }
            let key: Vec<u32> = term.vars.iter().map(|&v| v as u32).collect();
            if !seen.insert(key.clone()) {
                return Err(PtfError::Format(format!(
                    "term {k}: duplicate monomial {:?}",
                    term.vars
                )));
            }
            terms.push((key, term.coeff));
        }
        Ok(MultilinearPolynomial::from_accumulator(n, terms))
    }
}

impl From<MultilinearPolynomial> for PolynomialFile {
    fn from(p: MultilinearPolynomial) -> Self {
        PolynomialFile::from(&p)
    }
}

impl From<&MultilinearPolynomial> for PolynomialFile {
    fn from(p: &MultilinearPolynomial) -> Self {
        PolynomialFile {
            n: p.n() as u64,
            terms: p
                .terms()
                .iter()
                .map(|t| TermRecord {
                    vars: t.vars().iter().map(|&v| u64::from(v)).collect(),
                    coeff: t.coeff(),
                })
                .collect(),
        }
    }
}

impl MultilinearPolynomial {
    /// Strict loader for the file format.
    pub fn from_file(file: PolynomialFile) -> Result<Self> {
        Self::try_from(file)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PolynomialFile =
            serde_json::from_str(s).map_err(|e| PtfError::Format(e.to_string()))?;
        Self::try_from(file)
    }

    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let file: PolynomialFile =
            serde_json::from_reader(reader).map_err(|e| PtfError::Format(e.to_string()))?;
        Self::try_from(file)
    }

    /// Canonical serialization: terms in graded lexicographic order.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&PolynomialFile::from(self)).expect("polynomial serializes")
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, &PolynomialFile::from(self))?;
        writeln!(writer)?;
        Ok(())
    }
}
