use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CscMatrix;

/// Sparse `m × n` matrix of function values `F[i][j] = Fᵢ(xⱼ)` in coordinate form.
///
/// Entries not listed are zero unless they appear in `missing`. Entries are kept in
/// column-major order so equal matrices compare equal regardless of construction order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSampleMatrix", into = "RawSampleMatrix")]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    missing: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawSampleMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    #[serde(default)]
    missing: Vec<(usize, usize)>,
}

impl TryFrom<RawSampleMatrix> for SampleMatrix {
    type Error = Error;

    fn try_from(raw: RawSampleMatrix) -> Result<Self> {
        SampleMatrix::new(raw.rows, raw.cols, raw.entries, raw.missing)
    }
}

impl From<SampleMatrix> for RawSampleMatrix {
    fn from(m: SampleMatrix) -> Self {
        RawSampleMatrix {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
            missing: m.missing,
        }
    }
}

impl SampleMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        mut entries: Vec<(usize, usize, f64)>,
        mut missing: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len() + missing.len());
        let coords = entries
            .iter()
            .map(|&(i, j, _)| (i, j))
            .chain(missing.iter().copied());
        for (i, j) in coords {
            if i >= rows || j >= cols {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside {rows}x{cols} matrix"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidInput(format!("entry ({i}, {j}) listed twice")));
            }
        }
        entries.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        missing.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        Ok(SampleMatrix {
            rows,
            cols,
            entries,
            missing,
        })
    }

    /// From dense rows; zeros are dropped and `NaN` marks a missing entry.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::new();
        let mut missing = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() {
                    missing.push((i, j));
                } else if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        SampleMatrix::new(m, n, entries, missing)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn missing(&self) -> &[(usize, usize)] {
        &self.missing
    }

    pub fn has_missing(&self) -> bool {
        !self.missing.is_empty()
    }

    /// Dense copy with `NaN` at missing positions.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, v) in &self.entries {
            dense[i][j] = v;
        }
        for &(i, j) in &self.missing {
            dense[i][j] = f64::NAN;
        }
        dense
    }

    /// Column-compressed copy of the known entries. Fails if any entry is missing.
    pub fn to_csc(&self) -> Result<CscMatrix> {
        if self.has_missing() {
            return Err(Error::InvalidInput(format!(
                "matrix has {} missing entries; fill them first",
                self.missing.len()
            )));
        }
        Ok(CscMatrix::from_triplets(self.rows, self.cols, &self.entries))
    }

    /// `F w` over the known entries (missing entries contribute nothing).
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &(i, j, v) in &self.entries {
            out[i] += v * w[j];
        }
        out
    }

    /// Restriction to the rows `start..start + len`, re-indexed from zero.
    pub fn row_block(&self, start: usize, len: usize) -> SampleMatrix {
        let end = start + len;
        let entries = self
            .entries
            .iter()
            .filter(|e| e.0 >= start && e.0 < end)
            .map(|&(i, j, v)| (i - start, j, v))
            .collect();
        let missing = self
            .missing
            .iter()
            .filter(|e| e.0 >= start && e.0 < end)
            .map(|&(i, j)| (i - start, j))
            .collect();
        SampleMatrix {
            rows: len,
            cols: self.cols,
            entries,
            missing,
        }
    }

    /// Restriction to the given columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<SampleMatrix> {
        let mut position = vec![Vec::new(); self.cols];
        for (new, &old) in columns.iter().enumerate() {
            if old >= self.cols {
                return Err(Error::InvalidInput(format!("column {old} out of range")));
            }
            position[old].push(new);
        }
        let mut entries = Vec::new();
        for &(i, j, v) in &self.entries {
            entries.extend(position[j].iter().map(|&new| (i, new, v)));
        }
        let mut missing = Vec::new();
        for &(i, j) in &self.missing {
            missing.extend(position[j].iter().map(|&new| (i, new)));
        }
        SampleMatrix::new(self.rows, columns.len(), entries, missing)
    }
}
