//! Packed bit vectors and matrices over F2.
//!
//! Everything in the code, circuit and decoder layers bottoms out here. Rows are
//! packed little-endian into `u64` words; column `c` of a row lives in bit
//! `c % 64` of word `c / 64`. Elimination always scans candidate pivots in row
//! order, so every routine is deterministic.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// Fixed-length vector over F2.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BitVector(")?;
        for i in 0..self.len {
            f.write_char(if self.get(i) { '1' } else { '0' })?;
        }
        f.write_char(')')
    }
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
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

    /// Vector with ones at `indices`. Repeated indices cancel.
    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.flip(i);
        }
        v
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { len, words };
        v.clear_tail();
        v
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
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
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "bit-vector length mismatch");
        xor_words(&mut self.words, &other.words);
    }

    /// Inner product over F2.
    pub fn dot(&self, other: &BitVector) -> bool {
        assert_eq!(self.len, other.len, "bit-vector length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(wi, &w)| wi * WORD + w.trailing_zeros() as usize)
    }
}

impl Serialize for BitVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // Stored as its support; lengths travel with the enclosing record.
        let ones: Vec<usize> = self.iter_ones().collect();
        (self.len, ones).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (len, ones): (usize, Vec<usize>) = Deserialize::deserialize(d)?;
        if let Some(&bad) = ones.iter().find(|&&i| i >= len) {
            return Err(serde::de::Error::custom(format!("bit index {bad} out of range {len}")));
        }
        Ok(BitVector::from_indices(len, ones))
    }
}

#[inline]
pub(crate) fn xor_words(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= *s;
    }
}

/// Dense row-major matrix over F2.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows.min(32) {
            for c in 0..self.cols.min(96) {
                f.write_char(if self.get(r, c) { '1' } else { '.' })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from equal-length row vectors. `cols` is needed for the
    /// zero-row case.
    pub fn from_rows(cols: usize, rows: &[BitVector]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, v) in rows.iter().enumerate() {
            assert_eq!(v.len(), cols, "row {r} has wrong length");
            m.row_words_mut(r).copy_from_slice(v.words());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged dense matrix");
            for (c, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(r, c, true);
                }
            }
        }
        m
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
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + c / WORD] ^= 1u64 << (c % WORD);
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVector {
        BitVector::from_words(self.cols, self.row_words(r).to_vec())
    }

    pub fn column(&self, c: usize) -> BitVector {
        BitVector::from_bools(&(0..self.rows).map(|r| self.get(r, c)).collect::<Vec<_>>())
    }

    pub fn row_support(&self, r: usize) -> Vec<usize> {
        self.row(r).iter_ones().collect()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, c: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, c)).count()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in BitVector::from_words(self.cols, self.row_words(r).to_vec()).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = BitMatrix::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    m.set(r, c, true);
                }
            }
            for c in 0..other.cols {
                if other.get(r, c) {
                    m.set(r, self.cols + c, true);
                }
            }
        }
        Ok(m)
    }

    /// Matrix product over F2.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let support: Vec<usize> =
                BitVector::from_words(self.cols, self.row_words(r).to_vec()).iter_ones().collect();
            let dst_start = r * out.stride;
            for k in support {
                let src = other.row_words(k);
                xor_words(&mut out.data[dst_start..dst_start + out.stride], src);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let parity = self
                .row_words(r)
                .iter()
                .zip(v.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>();
            if parity % 2 == 1 {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// F2 row rank.
    pub fn rank(&self) -> usize {
        let order: Vec<usize> = (0..self.cols).collect();
        Echelon::reduce(self, &order, None).pivots.len()
    }

    /// Basis of `{x : self * x = 0}`, one vector per free column of the reduced
    /// row echelon form.
    pub fn kernel_basis(&self) -> Vec<BitVector> {
        let order: Vec<usize> = (0..self.cols).collect();
        let ech = Echelon::reduce(self, &order, None);
        let mut is_pivot = vec![false; self.cols];
        for &(_, c) in &ech.pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - ech.pivots.len());
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitVector::zeros(self.cols);
            v.set(free, true);
            for (row, &(_, pc)) in ech.pivots.iter().enumerate() {
                if ech.get(row, free) {
                    v.set(pc, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    pub fn to_sparse(&self) -> SparseIndexMatrix {
        let mut entries = Vec::with_capacity(self.count_ones());
        for r in 0..self.rows {
            for c in BitVector::from_words(self.cols, self.row_words(r).to_vec()).iter_ones() {
                entries.push((r, c));
            }
        }
        SparseIndexMatrix { rows: self.rows, cols: self.cols, entries }
    }

    /// Coordinate text dump in the MatrixMarket "pattern" layout (1-based).
    pub fn to_mtx(&self) -> String {
        self.to_sparse().to_mtx()
    }
}

/// Coordinate-list matrix. Entries are kept sorted by (row, col) and unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseIndexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
}

impl SparseIndexMatrix {
    /// Builds from coordinates; duplicates and out-of-range entries are errors.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self> {
        entries.sort_unstable();
        for w in entries.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("duplicate coordinate {:?}", w[0])));
            }
        }
        if let Some(&(r, c)) = entries.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(Error::InvalidInput(format!(
                "coordinate ({r}, {c}) outside {rows}x{cols}"
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds from per-column supports (each sorted or not; duplicates cancel).
    pub fn from_columns(rows: usize, columns: &[Vec<usize>]) -> Self {
        let mut entries = Vec::new();
        for (c, support) in columns.iter().enumerate() {
            let v = BitVector::from_indices(rows, support.iter().copied());
            entries.extend(v.iter_ones().map(|r| (r, c)));
        }
        entries.sort_unstable();
        Self { rows, cols: columns.len(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.rows, self.cols);
        for &(r, c) in &self.entries {
            m.set(r, c, true);
        }
        m
    }

    /// Row index lists per column.
    pub fn column_supports(&self) -> Vec<Vec<usize>> {
        let mut cols = vec![Vec::new(); self.cols];
        for &(r, c) in &self.entries {
            cols[c].push(r);
        }
        cols
    }

    /// Column index lists per row.
    pub fn row_supports(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.rows];
        for &(r, c) in &self.entries {
            rows[r].push(c);
        }
        rows
    }

    pub fn mul_vec(&self, v: &BitVector) -> Result<BitVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "sparse {}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        for &(r, c) in &self.entries {
            if v.get(c) {
                out.flip(r);
            }
        }
        Ok(out)
    }

    pub fn to_mtx(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate pattern general\n");
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.entries.len());
        for &(r, c) in &self.entries {
            let _ = writeln!(s, "{} {}", r + 1, c + 1);
        }
        s
    }

    pub fn from_mtx(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('%'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty mtx".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad mtx header {header:?}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Parse(format!("bad mtx header {header:?}")));
        }
        let mut entries = Vec::with_capacity(dims[2]);
        for line in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next()) {
                (Some(Ok(r)), Some(Ok(c))) if r >= 1 && c >= 1 => entries.push((r - 1, c - 1)),
                _ => return Err(Error::Parse(format!("bad mtx entry {line:?}"))),
            }
        }
        if entries.len() != dims[2] {
            return Err(Error::Parse(format!(
                "mtx declares {} entries, found {}",
                dims[2],
                entries.len()
            )));
        }
        Self::new(dims[0], dims[1], entries)
    }
}

/// Reduced row echelon form of a matrix with its columns visited in a given
/// order, optionally carrying one right-hand-side column.
///
/// Rows are stored with columns permuted into visiting order, so that column
/// `order[k]` of the input is bit `k` of a stored row.
pub(crate) struct Echelon {
    stride: usize,
    data: Vec<u64>,
    rhs: Vec<bool>,
    /// `(position in visiting order, original column)` for each pivot row, in
    /// the order the pivots were found.
    pub pivots: Vec<(usize, usize)>,
    /// Position in visiting order of every input column.
    pub position: Vec<usize>,
}

impl Echelon {
    pub fn reduce(m: &BitMatrix, order: &[usize], rhs: Option<&BitVector>) -> Self {
        Self::reduce_limited(m, order, rhs, usize::MAX)
    }

    /// Stops once `max_pivots` pivots are found.
    pub fn reduce_limited(
        m: &BitMatrix,
        order: &[usize],
        rhs: Option<&BitVector>,
        max_pivots: usize,
    ) -> Self {
        let n = order.len();
        let stride = words_for(n);
        let mut data = vec![0u64; m.rows * stride];
        let mut position = vec![usize::MAX; m.cols];
        for (k, &c) in order.iter().enumerate() {
            position[c] = k;
        }
        for r in 0..m.rows {
            let dst = &mut data[r * stride..(r + 1) * stride];
            for c in BitVector::from_words(m.cols, m.row_words(r).to_vec()).iter_ones() {
                let k = position[c];
                if k != usize::MAX {
                    dst[k / WORD] |= 1u64 << (k % WORD);
                }
            }
        }
        let mut rhs: Vec<bool> = match rhs {
            Some(v) => v.to_bools(),
            None => vec![false; m.rows],
        };
        let mut pivots = Vec::new();
        let mut next_row = 0;
        let rows = m.rows;
        for (k, &orig) in order.iter().enumerate() {
            if next_row == rows || pivots.len() >= max_pivots {
                break;
            }
            let (w, mask) = (k / WORD, 1u64 << (k % WORD));
            let Some(p) = (next_row..rows).find(|&r| data[r * stride + w] & mask != 0) else {
                continue;
            };
            if p != next_row {
                for i in 0..stride {
                    data.swap(p * stride + i, next_row * stride + i);
                }
                rhs.swap(p, next_row);
            }
            let (pivot_row, pivot_rhs) = (next_row, rhs[next_row]);
            let pivot_copy: Vec<u64> = data[pivot_row * stride..(pivot_row + 1) * stride].to_vec();
            for r in 0..rows {
                if r != pivot_row && data[r * stride + w] & mask != 0 {
                    xor_words(&mut data[r * stride..(r + 1) * stride], &pivot_copy);
                    rhs[r] ^= pivot_rhs;
                }
            }
            pivots.push((k, orig));
            next_row += 1;
        }
        Self { stride, data, rhs, pivots, position }
    }

    /// Entry of reduced row `row` at original column `col`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        let k = self.position[col];
        k != usize::MAX && (self.data[row * self.stride + k / WORD] >> (k % WORD)) & 1 == 1
    }



    pub fn rhs(&self, row: usize) -> bool {
        self.rhs[row]
    }

    /// True when every row without a pivot has a zero right-hand side.
    pub fn is_consistent(&self) -> bool {
        self.rhs[self.pivots.len()..].iter().all(|&b| !b)
    }
}

/// Matrix of the bivariate polynomial `sum x^a y^b` acting on the monomial basis
/// of `F2[x, y] / (x^l - 1, y^m - 1)`, with site `i` read as `x^(i / m) y^(i % m)`.
///
/// Row `i` carries ones at the sites of `x^(i/m) y^(i%m) * term` for every term.
/// Exponents may be negative and are reduced modulo `(l, m)`; a repeated term
/// cancels, as it does in the polynomial ring.
pub fn circulant_from_terms(l: usize, m: usize, terms: &[(i64, i64)]) -> Result<BitMatrix> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidInput(format!("lattice dimensions must be positive, got {l}x{m}")));
    }
    let reduced = reduce_terms(l, m, terms);
    if reduced.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    let n = l * m;
    let mut mat = BitMatrix::zeros(n, n);
    for i in 0..n {
        let (x, y) = (i / m, i % m);
        for &(a, b) in &reduced {
            let j = ((x + a) % l) * m + (y + b) % m;
            mat.flip(i, j);
        }
    }
    Ok(mat)
}

/// Exponent pairs reduced into `[0, l) x [0, m)` with F2 cancellation, sorted.
pub fn reduce_terms(l: usize, m: usize, terms: &[(i64, i64)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in terms {
        let t = (a.rem_euclid(l as i64) as usize, b.rem_euclid(m as i64) as usize);
        if let Some(pos) = out.iter().position(|&u| u == t) {
            out.remove(pos);
        } else {
            out.push(t);
        }
    }
    out.sort_unstable();
    out
}

/// Solves `m * x = target`, choosing pivot columns greedily along
/// `column_order`. The returned solution is supported on those pivots.
pub fn solve_consistent(m: &BitMatrix, target: &BitVector, column_order: &[usize]) -> Result<BitVector> {
    if target.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "target length {} for a matrix with {} rows",
            target.len(),
            m.rows()
        )));
    }
    check_permutation(column_order, m.cols())?;
    let ech = Echelon::reduce(m, column_order, Some(target));
    if !ech.is_consistent() {
        return Err(Error::Inconsistent);
    }
    let mut x = BitVector::zeros(m.cols());
    for (row, &(_, col)) in ech.pivots.iter().enumerate() {
        if ech.rhs(row) {
            x.set(col, true);
        }
    }
    debug_assert_eq!(m.mul_vec(&x).ok().as_ref(), Some(target));
    Ok(x)
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidInput(format!(
            "column order has {} entries for {n} columns",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidInput(format!("column order is not a permutation (at {c})")));
        }
    }
    Ok(())
}

/// Incrementally built basis of a subspace of F2^n, kept fully reduced so that
/// membership tests cost one pass over the basis.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    len: usize,
    vectors: Vec<BitVector>,
    pivots: Vec<usize>,
}

impl SpanBasis {
    pub fn new(len: usize) -> Self {
        Self { len, vectors: Vec::new(), pivots: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    fn reduce(&self, v: &BitVector) -> BitVector {
        let mut v = v.clone();
        for (b, &p) in self.vectors.iter().zip(&self.pivots) {
            if v.get(p) {
                v.xor_assign(b);
            }
        }
        v
    }

    pub fn contains(&self, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.len);
        self.reduce(v).is_zero()
    }

    /// Adds `v`; returns false when it was already in the span.
    pub fn insert(&mut self, v: &BitVector) -> bool {
        assert_eq!(v.len(), self.len);
        let r = self.reduce(v);
        let Some(p) = r.first_one() else {
            return false;
        };
        for b in &mut self.vectors {
            if b.get(p) {
                b.xor_assign(&r);
            }
        }
        self.vectors.push(r);
        self.pivots.push(p);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_rank(m: &BitMatrix) -> usize {
        let mut span = SpanBasis::new(m.cols());
        (0..m.rows()).filter(|&r| span.insert(&m.row(r))).count()
    }

    fn arb_matrix(max_r: usize, max_c: usize) -> impl Strategy<Value = BitMatrix> {
        (1..=max_r, 1..=max_c).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
                .prop_map(|rows| BitMatrix::from_dense(&rows))
        })
    }

    #[test]
    fn circulant_identity_case() {
        let m = circulant_from_terms(1, 1, &[(0, 0)]).unwrap();
        assert_eq!(m, BitMatrix::identity(1));
    }

    #[test]
    fn cyclic_shift_cubed_is_identity() {
        let s = circulant_from_terms(3, 1, &[(1, 0)]).unwrap();
        let expected = BitMatrix::from_dense(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]);
        assert_eq!(s, expected);
        let cube = s.mul(&s).unwrap().mul(&s).unwrap();
        assert_eq!(cube, BitMatrix::identity(3));
    }

    #[test]
    fn bb144_a_polynomial_has_weight_three() {
        let a = circulant_from_terms(12, 6, &[(3, 0), (0, 1), (0, 2)]).unwrap();
        assert_eq!((a.rows(), a.cols()), (72, 72));
        for i in 0..72 {
            assert_eq!(a.row_weight(i), 3);
            assert_eq!(a.col_weight(i), 3);
        }
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(matches!(circulant_from_terms(4, 4, &[]), Err(Error::ZeroPolynomial)));
        assert!(matches!(
            circulant_from_terms(4, 4, &[(1, 1), (5, 1)]),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn mul_dimension_mismatch() {
        let a = BitMatrix::zeros(2, 3);
        assert!(matches!(a.mul(&a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bb144_a_and_b_commute() {
        let a = circulant_from_terms(12, 6, &[(3, 0), (0, 1), (0, 2)]).unwrap();
        let b = circulant_from_terms(12, 6, &[(0, 3), (1, 0), (2, 0)]).unwrap();
        assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
    }

    #[test]
    fn rank_edge_cases() {
        assert_eq!(BitMatrix::zeros(4, 7).rank(), 0);
        assert_eq!(BitMatrix::identity(9).rank(), 9);
        assert_eq!(BitMatrix::identity(130).rank(), 130);
    }

    #[test]
    fn kernel_edge_cases() {
        let k = BitMatrix::from_dense(&[vec![1, 1]]).kernel_basis();
        assert_eq!(k, vec![BitVector::from_bools(&[true, true])]);
        assert!(BitMatrix::identity(5).kernel_basis().is_empty());
    }

    #[test]
    fn solve_identity_and_zero_target() {
        let id = BitMatrix::identity(6);
        let t = BitVector::from_indices(6, [1, 4]);
        let order: Vec<usize> = (0..6).collect();
        assert_eq!(solve_consistent(&id, &t, &order).unwrap(), t);
        let h = BitMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let x = solve_consistent(&h, &BitVector::zeros(2), &[0, 1, 2]).unwrap();
        assert!(x.is_zero());
    }

    #[test]
    fn solve_repetition_code_matches_brute_force() {
        let h = BitMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let target = BitVector::from_bools(&[true, false]);
        // brute force: all solutions supported on the greedy pivots {0, 1}
        let solutions: Vec<BitVector> = (0u32..8)
            .map(|bits| BitVector::from_bools(&[bits & 1 == 1, bits & 2 == 2, bits & 4 == 4]))
            .filter(|x| !x.get(2) && h.mul_vec(x).unwrap() == target)
            .collect();
        assert_eq!(solutions, vec![BitVector::from_bools(&[true, false, false])]);
        let x = solve_consistent(&h, &target, &[0, 1, 2]).unwrap();
        assert_eq!(x, solutions[0]);
    }

    #[test]
    fn solve_reports_inconsistency() {
        let h = BitMatrix::from_dense(&[vec![1, 1], vec![1, 1]]);
        let t = BitVector::from_bools(&[true, false]);
        assert!(matches!(solve_consistent(&h, &t, &[0, 1]), Err(Error::Inconsistent)));
    }

    #[test]
    fn solve_rejects_bad_order() {
        let h = BitMatrix::identity(3);
        let t = BitVector::zeros(3);
        assert!(solve_consistent(&h, &t, &[0, 0, 1]).is_err());
        assert!(solve_consistent(&h, &t, &[0, 1]).is_err());
    }

    #[test]
    fn mtx_round_trip() {
        let a = circulant_from_terms(3, 2, &[(1, 0), (0, 1)]).unwrap();
        let text = a.to_mtx();
        assert!(text.starts_with("%%MatrixMarket"));
        assert_eq!(SparseIndexMatrix::from_mtx(&text).unwrap().to_dense(), a);
    }

    #[test]
    fn sparse_rejects_duplicates() {
        assert!(SparseIndexMatrix::new(2, 2, vec![(0, 1), (0, 1)]).is_err());
        assert!(SparseIndexMatrix::new(2, 2, vec![(2, 1)]).is_err());
    }

    proptest! {
        #[test]
        fn circulants_commute(l in 1usize..6, m in 1usize..6,
                              ta in proptest::collection::vec((0i64..6, 0i64..6), 1..4),
                              tb in proptest::collection::vec((0i64..6, 0i64..6), 1..4)) {
            let (Ok(a), Ok(b)) = (circulant_from_terms(l, m, &ta), circulant_from_terms(l, m, &tb)) else {
                return Ok(());
            };
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        }

        #[test]
        fn rank_is_transpose_invariant(m in arb_matrix(12, 80)) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
            prop_assert_eq!(m.rank(), brute_rank(&m));
        }

        #[test]
        fn kernel_vectors_are_annihilated(m in arb_matrix(10, 70)) {
            let basis = m.kernel_basis();
            prop_assert_eq!(basis.len(), m.cols() - m.rank());
            let mut span = SpanBasis::new(m.cols());
            for k in &basis {
                prop_assert!(m.mul_vec(k).unwrap().is_zero());
                prop_assert!(span.insert(k));
            }
        }

        #[test]
        fn solve_output_satisfies_system(m in arb_matrix(8, 20), seed in any::<u64>()) {
            // build a consistent target from a random x
            let mut x = BitVector::zeros(m.cols());
            for c in 0..m.cols() {
                if (seed >> (c % 64)) & 1 == 1 { x.set(c, true); }
            }
            let target = m.mul_vec(&x).unwrap();
            let mut order: Vec<usize> = (0..m.cols()).collect();
            order.reverse();
            let sol = solve_consistent(&m, &target, &order).unwrap();
            prop_assert_eq!(m.mul_vec(&sol).unwrap(), target);
        }

        #[test]
        fn sparse_dense_round_trip(m in arb_matrix(9, 40)) {
            prop_assert_eq!(m.to_sparse().to_dense(), m);
        }

        #[test]
        fn bitvector_serde_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..200)) {
            let v = BitVector::from_bools(&bits);
            let json = serde_json::to_string(&v).unwrap();
            prop_assert_eq!(serde_json::from_str::<BitVector>(&json).unwrap(), v);
        }
    }
}
