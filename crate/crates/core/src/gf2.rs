//! Dense bit-packed matrices over GF(2).
//!
//! Rows are stored as runs of `u64` words, row-major, bit `j % 64` of word
//! `j / 64` holding column `j`. A vector is a `1 x n` matrix.
//!
//! The text format is one row per line, each row a string of `0`/`1`
//! characters without separators. Blank lines are ignored on input.

use std::fmt;
use std::str::FromStr;

use crate::error::Gf2Error;

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Which side the unknown multiplies from in [`solve_linear`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Solve `X * a = b`.
    Left,
    /// Solve `a * X = b`.
    Right,
}

/// Result of Gaussian elimination: the reduced matrix, its pivot columns,
/// and the row operations applied (`transform * original = reduced`).
#[derive(Clone, Debug)]
pub struct Echelon {
    pub reduced: BinaryMatrix,
    pub pivots: Vec<usize>,
    pub transform: BinaryMatrix,
}

fn stride_for(cols: usize) -> usize {
    cols.div_ceil(WORD).max(1)
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = stride_for(cols);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from 0/1 entries given row by row.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    context: "from_rows",
                    expected: (rows.len(), cols),
                    found: (rows.len(), r.len()),
                });
            }
            for (j, &v) in r.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(i, j, true),
                    _ => return Err(Gf2Error::Parse(format!("entry {v} at ({i},{j}) is not 0 or 1"))),
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix whose row `i` has ones exactly at `supports[i]`.
    pub fn from_supports(cols: usize, supports: &[Vec<usize>]) -> Self {
        let mut m = Self::zeros(supports.len(), cols);
        for (i, s) in supports.iter().enumerate() {
            for &j in s {
                assert!(j < cols, "support index {j} out of range for {cols} columns");
                m.set(i, j, true);
            }
        }
        m
    }

    /// A single-row matrix whose low `cols` bits come from `bits`.
    pub fn row_from_u64(bits: u64, cols: usize) -> Self {
        assert!(cols <= WORD);
        let mut m = Self::zeros(1, cols);
        let mask = if cols == WORD { u64::MAX } else { (1u64 << cols) - 1 };
        m.data[0] = bits & mask;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let bit = 1u64 << (c % WORD);
        if v {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// Row `r` as a `u64`; panics if the matrix is wider than 64 columns.
    pub fn row_u64(&self, r: usize) -> u64 {
        assert!(self.cols <= WORD, "row_u64 needs at most 64 columns");
        self.data[r * self.stride]
    }

    pub fn row(&self, r: usize) -> BinaryMatrix {
        let mut m = Self::zeros(1, self.cols);
        m.data.copy_from_slice(self.row_words(r));
        m
    }

    pub fn row_support(&self, r: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(r, c)).collect()
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

    pub fn row_is_zero(&self, r: usize) -> bool {
        self.row_words(r).iter().all(|&w| w == 0)
    }

    /// XORs row `src` into row `dst`.
    pub fn add_row(&mut self, dst: usize, src: usize) {
        if dst == src {
            self.row_words_mut(dst).fill(0);
            return;
        }
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= *y;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// Parity of the inner product of row `r` with row `s` of `other`.
    pub fn row_dot(&self, r: usize, other: &BinaryMatrix, s: usize) -> bool {
        assert_eq!(self.cols, other.cols);
        let par: u32 = self
            .row_words(r)
            .iter()
            .zip(other.row_words(s))
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        par & 1 == 1
    }

    pub fn transpose(&self) -> BinaryMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    pub fn mul(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "mul",
                expected: (self.rows, other.rows),
                found: (self.rows, self.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let src = other.row_words(k);
                    let dst = &mut out.data[r * out.stride..(r + 1) * out.stride];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= *s;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.shape() != other.shape() {
            return Err(Gf2Error::DimensionMismatch {
                context: "add",
                expected: self.shape(),
                found: other.shape(),
            });
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= *b;
        }
        Ok(out)
    }

    pub fn vstack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.cols != other.cols {
            return Err(Gf2Error::DimensionMismatch {
                context: "vstack",
                expected: (other.rows, self.cols),
                found: other.shape(),
            });
        }
        let mut out = self.clone();
        out.rows += other.rows;
        out.data.extend_from_slice(&other.data);
        Ok(out)
    }

    pub fn hstack(&self, other: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
        if self.rows != other.rows {
            return Err(Gf2Error::DimensionMismatch {
                context: "hstack",
                expected: (self.rows, other.cols),
                found: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, idx: &[usize]) -> BinaryMatrix {
        let mut out = Self::zeros(idx.len(), self.cols);
        for (i, &r) in idx.iter().enumerate() {
            out.data[i * out.stride..(i + 1) * out.stride].copy_from_slice(self.row_words(r));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> BinaryMatrix {
        let mut out = Self::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (i, &c) in idx.iter().enumerate() {
                out.set(r, i, self.get(r, c));
            }
        }
        out
    }

    /// Reduced row echelon form with the accumulated row transform.
    pub fn echelon(&self) -> Echelon {
        let mut reduced = self.clone();
        let mut transform = Self::identity(self.rows);
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| reduced.get(r, col)) else {
                continue;
            };
            reduced.swap_rows(row, p);
            transform.swap_rows(row, p);
            for r in 0..self.rows {
                if r != row && reduced.get(r, col) {
                    reduced.add_row(r, row);
                    transform.add_row(r, row);
                }
            }
            pivots.push(col);
            row += 1;
        }
        Echelon { reduced, pivots, transform }
    }

    pub fn rank(&self) -> usize {
        self.echelon().pivots.len()
    }

    /// Rows of the returned matrix form a basis of `{x : self * x^T = 0}`.
    pub fn nullspace(&self) -> BinaryMatrix {
        let ech = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !ech.pivots.contains(c)).collect();
        let mut basis = Self::zeros(free.len(), self.cols);
        for (i, &f) in free.iter().enumerate() {
            basis.set(i, f, true);
            for (r, &p) in ech.pivots.iter().enumerate() {
                if ech.reduced.get(r, f) {
                    basis.set(i, p, true);
                }
            }
        }
        basis
    }

    /// Basis of the row space, in reduced echelon form.
    pub fn row_basis(&self) -> BinaryMatrix {
        let ech = self.echelon();
        let idx: Vec<usize> = (0..ech.pivots.len()).collect();
        ech.reduced.select_rows(&idx)
    }

    /// True if every row of `v` lies in the row span of `self`.
    pub fn span_contains(&self, v: &BinaryMatrix) -> bool {
        match (self.rows, v.rows) {
            (_, 0) => true,
            (0, _) => v.is_zero(),
            _ => self.vstack(v).map(|s| s.rank() == self.rank()).unwrap_or(false),
        }
    }

    pub fn same_row_span(&self, other: &BinaryMatrix) -> bool {
        self.cols == other.cols && self.span_contains(other) && other.span_contains(self)
    }

    /// Matrix whose rows are all `2^rows` combinations of the rows of `self`,
    /// indexed by the coefficient mask (bit `i` selects row `i`).
    pub fn span_elements(&self) -> Vec<BinaryMatrix> {
        assert!(self.rows < 30, "span enumeration limited to fewer than 30 generators");
        let mut out = Vec::with_capacity(1 << self.rows);
        out.push(Self::zeros(1, self.cols));
        for r in 0..self.rows {
            let g = self.row(r);
            let len = out.len();
            for i in 0..len {
                let v = out[i].add(&g).expect("same width");
                out.push(v);
            }
        }
        out
    }
}

/// Solves `X * a = b` ([`Side::Left`]) or `a * X = b` ([`Side::Right`]).
///
/// Returns one particular solution; free directions are set to zero.
pub fn solve_linear(a: &BinaryMatrix, b: &BinaryMatrix, side: Side) -> Result<BinaryMatrix, Gf2Error> {
    match side {
        Side::Left => solve_left(a, b),
        Side::Right => {
            let xt = solve_left(&a.transpose(), &b.transpose())?;
            Ok(xt.transpose())
        }
    }
}

fn solve_left(a: &BinaryMatrix, b: &BinaryMatrix) -> Result<BinaryMatrix, Gf2Error> {
    if a.cols != b.cols {
        return Err(Gf2Error::DimensionMismatch {
            context: "solve_linear",
            expected: (b.rows, a.cols),
            found: b.shape(),
        });
    }
    let ech = a.echelon();
    let mut x = BinaryMatrix::zeros(b.rows, a.rows);
    for i in 0..b.rows {
        let mut rem = b.row(i);
        let mut coeff = BinaryMatrix::zeros(1, a.rows);
        for (r, &p) in ech.pivots.iter().enumerate() {
            if rem.get(0, p) {
                rem.add_row_from(&ech.reduced, r);
                coeff.add_row_from(&ech.transform, r);
            }
        }
        if !rem.is_zero() {
            return Err(Gf2Error::NoSolution);
        }
        x.data[i * x.stride..(i + 1) * x.stride].copy_from_slice(coeff.row_words(0));
    }
    Ok(x)
}

impl BinaryMatrix {
    /// XORs row `r` of `other` into the single row of `self`.
    fn add_row_from(&mut self, other: &BinaryMatrix, r: usize) {
        for (d, s) in self.data.iter_mut().zip(other.row_words(r)) {
            *d ^= *s;
        }
    }
}

impl fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let line: String = (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for BinaryMatrix {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rows: Vec<Vec<u8>> = Vec::new();
        for (ln, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(Gf2Error::Parse(format!("line {}: unexpected character {other:?}", ln + 1))),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(Gf2Error::Parse(format!(
                        "line {}: row has {} entries, expected {}",
                        ln + 1,
                        row.len(),
                        first.len()
                    )));
                }
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> BinaryMatrix {
        s.parse().unwrap()
    }

    /// Brute-force nullspace: every vector `x` with `a x^T = 0`.
    fn brute_null(a: &BinaryMatrix) -> Vec<u64> {
        let n = a.cols();
        (0..1u64 << n)
            .filter(|&x| (0..a.rows()).all(|r| (a.row_u64(r) & x).count_ones() % 2 == 0))
            .collect()
    }

    fn brute_rank(a: &BinaryMatrix) -> usize {
        let span: std::collections::HashSet<u64> = (0..1u64 << a.rows())
            .map(|mask| (0..a.rows()).filter(|r| mask >> r & 1 == 1).fold(0, |acc, r| acc ^ a.row_u64(r)))
            .collect();
        span.len().trailing_zeros() as usize
    }

    fn arb_matrix(max_r: usize, max_c: usize) -> impl Strategy<Value = BinaryMatrix> {
        (1..=max_r, 1..=max_c).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
                .prop_map(|rows| BinaryMatrix::from_rows(&rows).unwrap())
        })
    }

    #[test]
    fn text_round_trip() {
        let a = m("101\n011\n");
        assert_eq!(a.to_string(), "101\n011\n");
        assert_eq!(a.to_string().parse::<BinaryMatrix>().unwrap(), a);
    }

    #[test]
    fn parse_rejects_ragged_and_bad_chars() {
        assert!("10\n1".parse::<BinaryMatrix>().is_err());
        assert!("1x".parse::<BinaryMatrix>().is_err());
    }

    #[test]
    fn rank_of_small_matrix() {
        assert_eq!(m("110\n011\n101").rank(), 2);
    }

    #[test]
    fn solve_left_with_and_without_solution() {
        let a = m("110\n011");
        let b = m("101");
        let x = solve_linear(&a, &b, Side::Left).unwrap();
        assert_eq!(x.mul(&a).unwrap(), b);
        assert_eq!(solve_linear(&a, &m("100"), Side::Left), Err(Gf2Error::NoSolution));
    }

    #[test]
    fn solve_right_inverse() {
        let a = m("110\n011");
        let x = solve_linear(&a, &BinaryMatrix::identity(2), Side::Right).unwrap();
        assert_eq!(a.mul(&x).unwrap(), BinaryMatrix::identity(2));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = m("110\n011");
        assert!(matches!(a.mul(&a), Err(Gf2Error::DimensionMismatch { .. })));
    }

    #[test]
    fn wide_rows_span_word_boundary() {
        let mut a = BinaryMatrix::zeros(2, 130);
        a.set(0, 0, true);
        a.set(0, 129, true);
        a.set(1, 64, true);
        assert_eq!(a.rank(), 2);
        assert_eq!(a.nullspace().rows(), 128);
        assert!(a.mul(&a.nullspace().transpose()).unwrap().is_zero());
    }

    proptest! {
        #[test]
        fn rank_nullity(a in arb_matrix(8, 12)) {
            prop_assert_eq!(a.rank() + a.nullspace().rows(), a.cols());
        }

        #[test]
        fn nullspace_matches_brute_force(a in arb_matrix(6, 12)) {
            let basis = a.nullspace();
            prop_assert!(a.mul(&basis.transpose()).unwrap().is_zero());
            prop_assert_eq!(1usize << basis.rows(), brute_null(&a).len());
        }

        #[test]
        fn rank_matches_span_size(a in arb_matrix(8, 12)) {
            prop_assert_eq!(a.rank(), brute_rank(&a));
        }

        #[test]
        fn transpose_preserves_rank(a in arb_matrix(9, 9)) {
            prop_assert_eq!(a.rank(), a.transpose().rank());
        }

        #[test]
        fn solutions_satisfy_system(a in arb_matrix(6, 10), seed in 0u64..1024) {
            // b built inside the row span so a solution must exist
            let mask: Vec<u8> = (0..a.rows()).map(|i| ((seed >> (i % 10)) & 1) as u8).collect();
            let coeff = BinaryMatrix::from_rows(&[mask]).unwrap();
            let b = coeff.mul(&a).unwrap();
            let x = solve_linear(&a, &b, Side::Left).unwrap();
            prop_assert_eq!(x.mul(&a).unwrap(), b);
        }
    }
}
