//! Bit-packed linear algebra over GF(2).
//!
//! [`BitMatrix`] stores rows as little-endian 64-bit words; bit `j` of a row
//! lives in word `j / 64` at position `j % 64`. Padding bits past `cols` are
//! always zero. [`SparseMatrix`] keeps the same matrices as sorted index
//! lists, which is what the large product codes need.

mod io;
mod search;
mod sparse;

pub use io::{read_alist, read_dense_binary, write_alist, write_dense_binary};
pub use search::{
    min_distance_bruteforce, reduced_weight_bruteforce, reduced_weight_by_enumeration,
    reduced_weight_by_syndrome_search, CosetWeigher, ENUMERATION_RANK_LIMIT,
};
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};
use std::fmt;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[inline]
fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// A packed vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &i in ones {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, size: len });
            }
            v.toggle(i);
        }
        Ok(v)
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { len, words };
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch");
        xor_words(&mut self.words, &other.words);
    }

    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + t)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitVec({s})")
    }
}

/// Dense bit-packed matrix over GF(2), row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from per-row column index lists. Repeated indices
    /// cancel in pairs.
    pub fn from_row_indices(cols: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, idx) in rows.iter().enumerate() {
            for &c in idx {
                if c >= cols {
                    return Err(Error::IndexOutOfRange { index: c, size: cols });
                }
                m.toggle(r, c);
            }
        }
        Ok(m)
    }

    /// Builds a matrix from rows of 0/1 bytes.
    pub fn from_dense<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (c, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(Error::Parse(format!("entry ({r},{c}) is {b}, not a bit")));
                }
                m.set(r, c, b == 1);
            }
        }
        Ok(m)
    }

    pub fn from_row_vecs(cols: usize, rows: &[BitVec]) -> Result<Self> {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            if v.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {r} has length {}, expected {cols}",
                    v.len()
                )));
            }
            m.row_mut(r).copy_from_slice(v.words());
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let mask = 1u64 << (c % WORD_BITS);
        let w = &mut self.data[r * self.stride + c / WORD_BITS];
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.stride + c / WORD_BITS] ^= 1u64 << (c % WORD_BITS);
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row(r).to_vec())
    }

    pub fn column(&self, c: usize) -> BitVec {
        let mut v = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if self.get(r, c) {
                v.set(r, true);
            }
        }
        v
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    fn xor_row_into(&mut self, src: usize, dst: usize, from_word: usize) {
        debug_assert_ne!(src, dst);
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..src * s + s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..dst * s + s])
        };
        xor_words(&mut b[from_word..], &a[from_word..]);
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for w in 0..s {
            self.data.swap(a * s + w, b * s + w);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for (wi, &w) in self.row(r).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let c = wi * WORD_BITS + w.trailing_zeros() as usize;
                    w &= w - 1;
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Reduces `self` in place to reduced row echelon form and returns the
    /// pivot column of each nonzero row.
    fn reduce(&mut self, jordan: bool) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let word = c / WORD_BITS;
            let mask = 1u64 << (c % WORD_BITS);
            let Some(p) = (r..self.rows).find(|&i| self.data[i * self.stride + word] & mask != 0)
            else {
                continue;
            };
            self.swap_rows(r, p);
            let start = if jordan { 0 } else { r + 1 };
            for i in start..self.rows {
                if i != r && self.data[i * self.stride + word] & mask != 0 {
                    self.xor_row_into(r, i, word);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        self.clone().reduce(false).len()
    }

    /// `cols - rank`, the dimension of the code this matrix checks.
    pub fn nullspace_dim(&self) -> usize {
        self.cols - self.rank()
    }

    /// Reduced row echelon form with its pivot columns.
    pub fn rref(&self) -> (BitMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.reduce(true);
        (m, pivots)
    }

    /// A basis of the row space (nonzero rows of the echelon form).
    pub fn row_basis(&self) -> Vec<BitVec> {
        let (m, pivots) = self.rref();
        (0..pivots.len()).map(|r| m.row_vec(r)).collect()
    }

    /// A basis of `{x : M x = 0}`.
    pub fn kernel_basis(&self) -> Vec<BitVec> {
        let (m, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = BitVec::zeros(self.cols);
                v.set(free, true);
                for (r, &p) in pivots.iter().enumerate() {
                    if m.get(r, free) {
                        v.set(p, true);
                    }
                }
                v
            })
            .collect()
    }

    /// GF(2) product `A · B` where `b_transposed` holds `Bᵀ`; each output entry
    /// is the parity of a row-by-row AND.
    pub fn matmul(&self, b_transposed: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != b_transposed.cols {
            return Err(Error::Dimension(format!(
                "inner dimensions differ: {}x{} times ({}x{})ᵀ",
                self.rows, self.cols, b_transposed.rows, b_transposed.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, b_transposed.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..b_transposed.rows {
                let parity = a
                    .iter()
                    .zip(b_transposed.row(j))
                    .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones());
                if parity & 1 == 1 {
                    out.set(i, j, true);
                }
            }
        }
        Ok(out)
    }

    /// Syndrome `M x`.
    pub fn mul_vec(&self, x: &BitVec) -> Result<BitVec> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let mut s = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let parity = self
                .row(r)
                .iter()
                .zip(x.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones());
            if parity & 1 == 1 {
                s.set(r, true);
            }
        }
        Ok(s)
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let rows = (0..self.rows)
            .map(|r| self.row_vec(r).iter_ones().map(|c| c as u32).collect())
            .collect();
        SparseMatrix::from_sorted_rows(self.cols, rows)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let s: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Check matrix of the length-`n` cyclic repetition code: check `i` couples
/// bits `i` and `i + 1 mod n`.
pub fn cycle_repetition(n: usize) -> BitMatrix {
    let rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    BitMatrix::from_row_indices(n, &rows).expect("indices in range")
}

/// Parity-check matrix of the [7,4] Hamming code (column `j` is `j + 1` in binary).
pub fn hamming_7_4() -> BitMatrix {
    let mut m = BitMatrix::zeros(3, 7);
    for c in 0..7 {
        for r in 0..3 {
            if ((c + 1) >> r) & 1 == 1 {
                m.set(r, c, true);
            }
        }
    }
    m
}
