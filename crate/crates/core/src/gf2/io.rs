//! MacKay alist text format and a raw packed binary format.
//!
//! alist layout, all indices 1-based:
//!
//! ```text
//! <cols> <rows>
//! <max column weight> <max row weight>
//! <weight of each column>
//! <weight of each row>
//! <row indices of column 1, zero padded to the max column weight>
//! ...
//! <column indices of row 1, zero padded to the max row weight>
//! ...
//! ```
//!
//! The binary format is two little-endian `u64` counts (rows, cols) followed
//! by every row as `ceil(cols / 64)` little-endian `u64` words, bit `j` of a
//! row at word `j / 64`, position `j % 64`.

use super::{BitMatrix, SparseMatrix};
use crate::error::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};

pub fn write_alist<W: Write>(m: &SparseMatrix, mut w: W) -> Result<()> {
    let cols = m.transpose();
    let max_col = cols.max_row_weight();
    let max_row = m.max_row_weight();
    writeln!(w, "{} {}", m.n_cols(), m.n_rows())?;
    writeln!(w, "{max_col} {max_row}")?;
    let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(" ");
    writeln!(w, "{}", join(&mut cols.rows().iter().map(|c| c.len().to_string())))?;
    writeln!(w, "{}", join(&mut m.rows().iter().map(|r| r.len().to_string())))?;
    for list in cols.rows() {
        let mut entries: Vec<String> = list.iter().map(|&i| (i + 1).to_string()).collect();
        entries.resize(max_col, "0".to_string());
        writeln!(w, "{}", entries.join(" "))?;
    }
    for list in m.rows() {
        let mut entries: Vec<String> = list.iter().map(|&i| (i + 1).to_string()).collect();
        entries.resize(max_row, "0".to_string());
        writeln!(w, "{}", entries.join(" "))?;
    }
    Ok(())
}

/// Reads an alist file. Every list spans the declared maximum weight with
/// zeros past its own weight; the column lists must agree with the rows.
pub fn read_alist<R: Read>(r: R) -> Result<SparseMatrix> {
    let mut tokens = Vec::new();
    for line in BufReader::new(r).lines() {
        for tok in line?.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::Parse(format!("alist: bad integer `{tok}`")))?;
            tokens.push(v);
        }
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| {
        it.next()
            .ok_or_else(|| Error::Parse(format!("alist: unexpected end of input reading {what}")))
    };
    let n_cols = next("column count")?;
    let n_rows = next("row count")?;
    let max_col = next("max column weight")?;
    let max_row = next("max row weight")?;
    let col_w: Vec<usize> = (0..n_cols).map(|_| next("column weights")).collect::<Result<_>>()?;
    let row_w: Vec<usize> = (0..n_rows).map(|_| next("row weights")).collect::<Result<_>>()?;

    let mut read_lists = |weights: &[usize], max: usize, bound: usize, what: &str| -> Result<Vec<Vec<u32>>> {
        let mut lists = Vec::with_capacity(weights.len());
        for &wt in weights {
            if wt > max {
                return Err(Error::Parse(format!("alist: {what} weight {wt} exceeds max {max}")));
            }
            let mut list = Vec::with_capacity(wt);
            for slot in 0..max {
                let v = next(what)?;
                if slot < wt {
                    if v == 0 || v > bound {
                        return Err(Error::Parse(format!("alist: {what} index {v} out of 1..={bound}")));
                    }
                    list.push((v - 1) as u32);
                } else if v != 0 {
                    return Err(Error::Parse(format!("alist: nonzero padding in {what} list")));
                }
            }
            lists.push(list);
        }
        Ok(lists)
    };
    let col_lists = read_lists(&col_w, max_col, n_rows, "column")?;
    let row_lists = read_lists(&row_w, max_row, n_cols, "row")?;

    let m = SparseMatrix::from_rows(n_cols, row_lists)?;
    let mut from_cols = SparseMatrix::from_rows(n_rows, col_lists)?;
    from_cols = from_cols.transpose();
    if from_cols.rows() != m.rows() {
        return Err(Error::Parse("alist: column and row lists disagree".into()));
    }
    Ok(m)
}

pub fn write_dense_binary<W: Write>(m: &BitMatrix, mut w: W) -> Result<()> {
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for r in 0..m.rows() {
        for word in m.row(r) {
            w.write_all(&word.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dense_binary<R: Read>(mut r: R) -> Result<BitMatrix> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let rows = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let cols = u64::from_le_bytes(buf) as usize;
    let mut m = BitMatrix::zeros(rows, cols);
    let stride = cols.div_ceil(64);
    let rem = cols % 64;
    for row in 0..rows {
        for wi in 0..stride {
            r.read_exact(&mut buf)?;
            let word = u64::from_le_bytes(buf);
            if wi + 1 == stride && rem != 0 && word >> rem != 0 {
                return Err(Error::Parse(format!("dense binary: nonzero padding in row {row}")));
            }
            let mut bits = word;
            while bits != 0 {
                let c = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                m.set(row, c, true);
            }
        }
    }
    Ok(m)
}
