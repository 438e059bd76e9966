use super::{BitMatrix, BitVec};
use crate::error::{Error, Result};

/// GF(2) matrix stored as sorted column-index lists per row.
///
/// Entries are bits: an index listed twice cancels on construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparseMatrix {
    cols: usize,
    rows: Vec<Vec<u32>>,
}

impl SparseMatrix {
    /// Reduces each row's multiset of indices mod 2.
    pub fn from_rows(cols: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for mut row in rows {
            if let Some(&bad) = row.iter().find(|&&c| c as usize >= cols) {
                return Err(Error::IndexOutOfRange {
                    index: bad as usize,
                    size: cols,
                });
            }
            row.sort_unstable();
            let mut reduced: Vec<u32> = Vec::with_capacity(row.len());
            for c in row {
                if reduced.last() == Some(&c) {
                    reduced.pop();
                } else {
                    reduced.push(c);
                }
            }
            out.push(reduced);
        }
        Ok(Self { cols, rows: out })
    }

    pub(crate) fn from_sorted_rows(cols: usize, rows: Vec<Vec<u32>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.windows(2).all(|w| w[0] < w[1])));
        Self { cols, rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn max_row_weight(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn col_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.cols];
        for row in &self.rows {
            for &c in row {
                w[c as usize] += 1;
            }
        }
        w
    }

    pub fn max_col_weight(&self) -> usize {
        self.col_weights().into_iter().max().unwrap_or(0)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols = vec![Vec::new(); self.cols];
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                cols[c as usize].push(r as u32);
            }
        }
        SparseMatrix {
            cols: self.rows.len(),
            rows: cols,
        }
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows.len(), self.cols);
        for (r, row) in self.rows.iter().enumerate() {
            for &c in row {
                m.set(r, c as usize, true);
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut s = BitVec::zeros(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            if row.iter().filter(|&&c| x.get(c as usize)).count() % 2 == 1 {
                s.set(r, true);
            }
        }
        Ok(s)
    }

    /// Sparse GF(2) product `self · otherᵀ`.
    pub fn mul_transpose(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "inner dimensions differ: {} vs {}",
                self.cols, other.cols
            )));
        }
        let other_by_col = other.transpose();
        let mut parity = vec![false; other.n_rows()];
        let mut seen = vec![false; other.n_rows()];
        let mut touched: Vec<u32> = Vec::new();
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            for &c in row {
                for &j in other_by_col.row(c as usize) {
                    let j = j as usize;
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j as u32);
                    }
                    parity[j] = !parity[j];
                }
            }
            let mut out: Vec<u32> = touched.iter().copied().filter(|&j| parity[j as usize]).collect();
            out.sort_unstable();
            for &j in &touched {
                parity[j as usize] = false;
                seen[j as usize] = false;
            }
            touched.clear();
            rows.push(out);
        }
        Ok(SparseMatrix {
            cols: other.n_rows(),
            rows,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }
}
