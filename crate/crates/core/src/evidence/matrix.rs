use std::fmt;

use crate::error::{Error, Result};
use crate::spectral::{self, DenseMatrix, INJECTIVITY_TOL};

/// The 0/1 evidence matrix: entry `(i, j)` is set iff expert `i` observes signal `j`.
///
/// Spectral data is computed once at construction.
#[derive(Clone, PartialEq)]
pub struct EvidenceMatrix {
    dense: DenseMatrix,
    observed: Vec<Vec<usize>>,
    sigma_min: f64,
    left_inverse: Option<DenseMatrix>,
    h_star: Option<Vec<f64>>,
}

impl EvidenceMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidMatrix("need at least one row and one column".into()));
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        if rows.iter().flatten().any(|&v| v > 1) {
            return Err(Error::InvalidMatrix("entries must be 0 or 1".into()));
        }
        let as_f64: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let dense = DenseMatrix::from_rows(&as_f64)?;
        let observed = rows
            .iter()
            .map(|r| (0..m).filter(|&j| r[j] == 1).collect())
            .collect();
        let sigma_min = spectral::min_singular_value(&dense);
        let (left_inverse, h_star) = if sigma_min > INJECTIVITY_TOL {
            let li = spectral::left_inverse(&dense)?;
            let h = li.column_sums();
            (Some(li), Some(h))
        } else {
            (None, None)
        };
        Ok(Self {
            dense,
            observed,
            sigma_min,
            left_inverse,
            h_star,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Number of experts.
    pub fn n(&self) -> usize {
        self.dense.rows()
    }

    /// Number of signals.
    pub fn m(&self) -> usize {
        self.dense.cols()
    }

    pub fn dense(&self) -> &DenseMatrix {
        &self.dense
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.dense[(i, j)] != 0.0
    }

    /// Indices of the signals expert `i` observes (`A_i`).
    pub fn observed(&self, expert: usize) -> &[usize] {
        &self.observed[expert]
    }

    pub fn rows_u8(&self) -> Vec<Vec<u8>> {
        (0..self.n())
            .map(|i| (0..self.m()).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn is_injective(&self) -> bool {
        self.left_inverse.is_some()
    }

    pub fn left_inverse(&self) -> Result<&DenseMatrix> {
        self.left_inverse.as_ref().ok_or(Error::NotInjective {
            sigma_min: self.sigma_min,
        })
    }

    /// `h* = 1_m^T A_l^{-1}`.
    pub fn h_star(&self) -> Result<&[f64]> {
        self.h_star.as_deref().ok_or(Error::NotInjective {
            sigma_min: self.sigma_min,
        })
    }

    pub fn report(&self) -> spectral::SpectralReport {
        spectral::SpectralReport::of(&self.dense)
    }

    /// Parses whitespace- or comma-separated 0/1 rows, one per line.
    /// Blank lines and `#` comments are skipped; a leading `row =` is allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line = match line.split_once('=') {
                Some((key, rest)) if key.trim() == "row" => rest,
                Some((key, _)) => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("unexpected key `{}` in matrix file", key.trim()),
                    })
                }
                None => line,
            };
            rows.push(parse_row(line, idx + 1)?);
        }
        Self::from_rows(&rows)
    }
}

pub(crate) fn parse_row(text: &str, line: usize) -> Result<Vec<u8>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Error::Parse {
                line,
                msg: format!("matrix entry `{other}` is not 0 or 1"),
            }),
        })
        .collect()
}

impl fmt::Debug for EvidenceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvidenceMatrix")
            .field("rows", &self.rows_u8())
            .field("sigma_min", &self.sigma_min)
            .finish()
    }
}

impl fmt::Display for EvidenceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows_u8() {
            let cells: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}
