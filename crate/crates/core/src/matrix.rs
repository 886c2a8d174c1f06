//! Compressed sparse row matrices.
//!
//! Parallel compositions produce block-structured weight matrices that are
//! mostly zero, so layers store their weights in CSR form. Explicit zeros are
//! never stored.

use alloc::vec;
use alloc::vec::Vec;

/// A real matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl Matrix {
    /// The all-zero `rows x cols` matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// The `n x n` identity.
    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]))
    }

    /// Builds a matrix from a row-major dense slice.
    ///
    /// # Panics
    /// If `data.len() != rows * cols`.
    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "dense data has wrong length");
        Self::from_rows(
            cols,
            (0..rows).map(|r| {
                data[r * cols..(r + 1) * cols]
                    .iter()
                    .copied()
                    .enumerate()
                    .collect::<Vec<_>>()
            }),
        )
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    ///
    /// Entries in a row may come in any order; duplicates are summed and
    /// zeros dropped.
    ///
    /// # Panics
    /// If a column index is out of range.
    pub fn from_rows<I, R>(cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = (usize, f64)>,
    {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            scratch.clear();
            scratch.extend(row);
            scratch.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                assert!(c < cols, "column {c} out of range {cols}");
                let mut v = 0.0;
                while i < scratch.len() && scratch[i].0 == c {
                    v += scratch[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            rows: row_ptr.len() - 1,
            cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entry at `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|e| e.0 == c).map_or(0.0, |e| e.1)
    }

    /// Nonzero entries of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// Largest absolute entry (0 for the zero matrix).
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Whether every stored entry is finite.
    pub fn is_finite(&self) -> bool {
        self.vals.iter().all(|v| v.is_finite())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out[r * self.cols + c] = v;
            }
        }
        out
    }

    /// Writes `self * x` into `out`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Matrix product `self * other`.
    ///
    /// # Panics
    /// If the inner dimensions differ.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut acc = vec![0.0; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.cols];
        let rows = (0..self.rows).map(|r| {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            let row: Vec<(usize, f64)> = touched.iter().map(|&c| (c, acc[c])).collect();
            for &c in &touched {
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
            row
        });
        Matrix::from_rows(other.cols, rows.collect::<Vec<_>>())
    }

    /// Multiplies every entry by `s`.
    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix::from_rows(
            self.cols,
            (0..self.rows).map(|r| self.row(r).map(|(c, v)| (c, s * v)).collect::<Vec<_>>()),
        )
    }

    /// Stacks matrices with equal column counts on top of each other.
    ///
    /// # Panics
    /// If column counts differ.
    pub fn vstack(parts: &[&Matrix]) -> Matrix {
        let cols = parts.first().map_or(0, |m| m.cols);
        assert!(parts.iter().all(|m| m.cols == cols), "column counts differ");
        Matrix::from_rows(
            cols,
            parts
                .iter()
                .flat_map(|m| (0..m.rows).map(move |r| m.row(r).collect::<Vec<_>>())),
        )
    }

    /// Places matrices side by side (equal row counts).
    ///
    /// # Panics
    /// If row counts differ.
    pub fn hstack(parts: &[&Matrix]) -> Matrix {
        let rows = parts.first().map_or(0, |m| m.rows);
        assert!(parts.iter().all(|m| m.rows == rows), "row counts differ");
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        Matrix::from_rows(
            cols,
            (0..rows).map(|r| {
                let mut off = 0;
                let mut row = Vec::new();
                for m in parts {
                    row.extend(m.row(r).map(|(c, v)| (c + off, v)));
                    off += m.cols;
                }
                row
            }),
        )
    }

    /// Block-diagonal matrix with the given blocks.
    pub fn block_diag(parts: &[&Matrix]) -> Matrix {
        let cols: usize = parts.iter().map(|m| m.cols).sum();
        let mut rows = Vec::new();
        let mut off = 0;
        for m in parts {
            for r in 0..m.rows {
                rows.push(m.row(r).map(|(c, v)| (c + off, v)).collect::<Vec<_>>());
            }
            off += m.cols;
        }
        Matrix::from_rows(cols, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_round_trip_drops_zeros() {
        let m = Matrix::from_dense(2, 3, &[1.0, 0.0, -2.0, 0.0, 0.0, 3.5]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.to_dense(), vec![1.0, 0.0, -2.0, 0.0, 0.0, 3.5]);
        assert_eq!(m.get(1, 2), 3.5);
        assert_eq!(m.max_abs(), 3.5);
    }

    #[test]
    fn product_matches_dense_oracle() {
        let a = Matrix::from_dense(2, 3, &[1.0, 2.0, 0.0, 0.0, -1.0, 4.0]);
        let b = Matrix::from_dense(3, 2, &[1.0, 1.0, 0.0, 2.0, 3.0, 0.0]);
        let p = a.mul(&b);
        // [1 2 0; 0 -1 4] * [1 1; 0 2; 3 0]
        assert_eq!(p.to_dense(), vec![1.0, 5.0, 12.0, -2.0]);
    }

    #[test]
    fn cancellation_is_not_stored() {
        let a = Matrix::from_dense(1, 2, &[1.0, -1.0]);
        let b = Matrix::from_dense(2, 1, &[1.0, 1.0]);
        assert_eq!(a.mul(&b).nnz(), 0);
    }

    #[test]
    fn stacking() {
        let a = Matrix::identity(2);
        let b = Matrix::from_dense(1, 2, &[5.0, 6.0]);
        assert_eq!(Matrix::vstack(&[&a, &b]).to_dense(), vec![1.0, 0.0, 0.0, 1.0, 5.0, 6.0]);
        assert_eq!(
            Matrix::hstack(&[&a, &a]).to_dense(),
            vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]
        );
        let d = Matrix::block_diag(&[&b, &b]);
        assert_eq!((d.rows(), d.cols()), (2, 4));
        assert_eq!(d.to_dense(), vec![5.0, 6.0, 0.0, 0.0, 0.0, 0.0, 5.0, 6.0]);
    }
}
