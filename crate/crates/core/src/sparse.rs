//! Compressed sparse row matrices.
//!
//! Projection matrices, gradient operators and LP constraint blocks all live
//! in this one type. Entries within a row are kept sorted by column and
//! explicit zeros are never stored.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite entry at ({i}, {j})")));
            }
            rows[i].push((j, v));
        }
        Self::from_rows(ncols, rows)
    }

    /// Builds a matrix from per-row `(col, value)` lists in any order.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let (j, mut v) = row[k];
                if j >= ncols {
                    return Err(Error::DimensionMismatch(format!(
                        "column {j} outside a matrix with {ncols} columns"
                    )));
                }
                k += 1;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    /// Wraps CSR arrays the caller has built with sorted, in-range,
    /// nonzero entries.
    pub(crate) fn from_csr_parts(nrows: usize, ncols: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        debug_assert_eq!(indices.len(), *indptr.last().unwrap());
        debug_assert!(indices.iter().all(|&j| j < ncols));
        SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(dense: &DMatrix<f64>) -> Self {
        let rows = (0..dense.nrows())
            .map(|i| {
                (0..dense.ncols())
                    .filter(|&j| dense[(i, j)] != 0.0)
                    .map(|j| (j, dense[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(dense.ncols(), rows).expect("dense input is well formed")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(i);
        idx.iter().copied().zip(val.iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row_iter(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        match idx.binary_search(&j) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec: length mismatch");
        (0..self.nrows)
            .map(|i| self.row_iter(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Computes `selfᵀ · y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows, "tr_mul_vec: length mismatch");
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for (j, v) in self.row_iter(i) {
                out[j] += v * yi;
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Submatrix formed by the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &i in rows {
            let (idx, val) = self.row(i);
            indices.extend_from_slice(idx);
            values.extend_from_slice(val);
            indptr.push(indices.len());
        }
        SparseMatrix {
            nrows: rows.len(),
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.ncols {
            return Err(Error::DimensionMismatch(format!(
                "vstack of {} and {} columns",
                self.ncols, other.ncols
            )));
        }
        let mut out = self.clone();
        let base = out.indices.len();
        out.indices.extend_from_slice(&other.indices);
        out.values.extend_from_slice(&other.values);
        out.indptr
            .extend(other.indptr[1..].iter().map(|&p| p + base));
        out.nrows += other.nrows;
        Ok(out)
    }

    /// Applies `f(row, col, value)` to every stored entry. Results equal to
    /// zero are dropped so the no-explicit-zeros invariant holds.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> SparseMatrix {
        let rows = (0..self.nrows)
            .map(|i| {
                self.row_iter(i)
                    .map(|(j, v)| (j, f(i, j, v)))
                    .collect::<Vec<_>>()
            })
            .collect();
        SparseMatrix::from_rows(self.ncols, rows).expect("same pattern")
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            out[j] += v;
        }
        out
    }

    pub fn col_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            out[j] += v * v;
        }
        out.iter_mut().for_each(|x| *x = x.sqrt());
        out
    }

    /// Number of stored entries in each column.
    pub fn col_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.ncols];
        for &j in &self.indices {
            out[j] += 1;
        }
        out
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            out[(i, j)] = v;
        }
        out
    }

    /// Dense copy of the given columns (in the given order).
    pub fn dense_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.ncols];
        for (k, &j) in cols.iter().enumerate() {
            pos[j] = k;
        }
        let mut out = DMatrix::zeros(self.nrows, cols.len());
        for (i, j, v) in self.triplets() {
            if pos[j] != usize::MAX {
                out[(i, pos[j])] = v;
            }
        }
        out
    }

    /// Checks the structural invariants: sorted, in-range, no stored zeros.
    pub fn validate(&self) -> Result<()> {
        if self.indptr.len() != self.nrows + 1 || *self.indptr.last().unwrap() != self.nnz() {
            return Err(Error::invalid("malformed row pointer"));
        }
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("row {i} not strictly increasing")));
            }
            if idx.iter().any(|&j| j >= self.ncols) {
                return Err(Error::invalid(format!("row {i} has out-of-range column")));
            }
            if val.iter().any(|&v| v == 0.0 || !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} stores a zero or non-finite value")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, 1.0), (1, 1, -1.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.get(1, 1), 0.0);
        a.validate().unwrap();
    }

    #[test]
    fn transpose_and_products_agree() {
        let a = SparseMatrix::from_triplets(
            3,
            4,
            &[(0, 0, 1.0), (0, 3, 2.0), (1, 1, -1.0), (2, 2, 5.0), (2, 0, 1.5)],
        )
        .unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, -1.0, 2.0];
        let at = a.transpose();
        assert_eq!(at.mul_vec(&y), a.tr_mul_vec(&y));
        assert_eq!(at.transpose(), a);
        assert_eq!(a.mul_vec(&x), vec![9.0, -2.0, 16.5]);
    }

    #[test]
    fn out_of_range_entry_is_rejected() {
        assert!(SparseMatrix::from_triplets(1, 1, &[(0, 1, 1.0)]).is_err());
    }

    #[test]
    fn vstack_and_select_rows() {
        let a = SparseMatrix::identity(3);
        let b = a.select_rows(&[2, 0]);
        let c = a.vstack(&b).unwrap();
        assert_eq!(c.shape(), (5, 3));
        assert_eq!(c.get(3, 2), 1.0);
        assert_eq!(c.get(4, 0), 1.0);
        c.validate().unwrap();
    }
}
