//! Augmented (quasi-definite) Newton systems for the interior-point method.
//!
//! Solves
//!
//! ```text
//! [ -H   Mᵀ ] [dx]   [f]
//! [  M   0  ] [dy] = [g]
//! ```
//!
//! with `H` a positive diagonal. A small shift is subtracted from the
//! top-left block and added to the bottom-right one so the matrix is
//! quasi-definite (factorable under any symmetric ordering), and iterative
//! refinement against the unshifted system removes the shift from the
//! answer. Working on the augmented system
//! rather than on `M H⁻¹ Mᵀ` avoids forming products of wildly scaled
//! weights late in the solve, where the normal equations lose most of their
//! digits.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

// static shift on both blocks; pivots smaller than this in magnitude, or of
// the wrong sign, are replaced by a pivot of this size and the right sign
const SHIFT: f64 = 1e-6;
const REFINE_STEPS: usize = 8;

pub(crate) struct KktSystem {
    m: SparseMatrix,
    n: usize,
    r: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    // value slot of each entry of M (row-major order) inside `values`
    m_slot: Vec<usize>,
    values: Vec<f64>,
    symbolic: SymbolicCholesky<usize>,
    factor: Vec<f64>,
    signs: Vec<i8>,
    mem: MemBuffer,
    h: Vec<f64>,
}

impl KktSystem {
    pub(crate) fn new(m: &SparseMatrix) -> Result<Self> {
        let (r, n) = m.shape();
        let dim = n + r;
        // upper triangle in CSC: columns 0..n hold only their diagonal,
        // column n+i holds row i of M above its own diagonal
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::with_capacity(n + m.nnz() + r);
        let mut m_slot = Vec::with_capacity(m.nnz());
        col_ptr.push(0);
        for j in 0..n {
            row_idx.push(j);
            col_ptr.push(row_idx.len());
        }
        for i in 0..r {
            for (j, _) in m.row_iter(i) {
                m_slot.push(row_idx.len());
                row_idx.push(j);
            }
            row_idx.push(n + i);
            col_ptr.push(row_idx.len());
        }
        let sym = SymbolicSparseColMatRef::new_checked(dim, dim, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(
            sym,
            Side::Upper,
            SymmetricOrdering::Amd,
            Default::default(),
        )
        .map_err(|e| Error::Solver(format!("symbolic factorization failed: {e:?}")))?;
        let scratch = symbolic
            .factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default())
            .or(symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let mut signs = vec![-1i8; n];
        signs.extend(std::iter::repeat_n(1i8, r));
        Ok(KktSystem {
            m: m.clone(),
            n,
            r,
            values: vec![0.0; row_idx.len()],
            factor: vec![0.0; symbolic.len_val()],
            col_ptr,
            row_idx,
            m_slot,
            symbolic,
            signs,
            mem: MemBuffer::new(scratch),
            h: vec![1.0; n],
        })
    }

    /// Factors the system for the diagonal `h > 0`. If the factorization
    /// breaks down the shifts are enlarged and it is retried; refinement
    /// absorbs the larger shift at the cost of a few more steps.
    pub(crate) fn factor(&mut self, h: &[f64]) -> Result<()> {
        debug_assert_eq!(h.len(), self.n);
        let mut shift = SHIFT;
        let mut last = None;
        for _ in 0..4 {
            match self.try_factor(h, shift) {
                Ok(()) => {
                    self.h = h.to_vec();
                    return Ok(());
                }
                Err(e) => {
                    log::debug!("augmented factorization failed with shift {shift:e}: {e}");
                    last = Some(e);
                    shift *= 100.0;
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn try_factor(&mut self, h: &[f64], shift: f64) -> Result<()> {
        for (j, &hj) in h.iter().enumerate() {
            self.values[self.col_ptr[j]] = -hj - shift;
        }
        let mut k = 0;
        for i in 0..self.r {
            for (_, v) in self.m.row_iter(i) {
                self.values[self.m_slot[k]] = v;
                k += 1;
            }
            self.values[self.col_ptr[self.n + i + 1] - 1] = shift;
        }
        let dim = self.n + self.r;
        let mat = SparseColMatRef::new(
            SymbolicSparseColMatRef::new_checked(dim, dim, &self.col_ptr, None, &self.row_idx),
            &self.values,
        );
        let regularization = LdltRegularization {
            dynamic_regularization_signs: Some(&self.signs),
            dynamic_regularization_delta: shift,
            dynamic_regularization_epsilon: shift,
        };
        self.symbolic
            .factorize_numeric_ldlt(
                &mut self.factor,
                mat,
                Side::Upper,
                regularization,
                Par::Seq,
                MemStack::new(&mut self.mem),
                Default::default(),
            )
            .map_err(|e| Error::Solver(format!("numeric factorization failed: {e:?}")))?;
        Ok(())
    }

    // solve with the shifted factorization
    fn raw_solve(&mut self, rhs: &mut [f64]) {
        let ldlt = LdltRef::new(&self.symbolic, &self.factor);
        let len = rhs.len();
        let col = MatMut::from_column_major_slice_mut(rhs, len, 1);
        ldlt.solve_in_place_with_conj(Conj::No, col, Par::Seq, MemStack::new(&mut self.mem));
    }
    /// The unshifted operator applied to `(dx, dy)`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let (dx, dy) = v.split_at(self.n);
        let mut out = self.m.tr_mul_vec(dy);
        for ((o, h), x) in out.iter_mut().zip(&self.h).zip(dx) {
            *o -= h * x;
        }
        out.extend(self.m.mul_vec(dx));
        out
    }

    fn residual(&self, v: &[f64], rhs: &[f64]) -> (Vec<f64>, f64) {
        let res: Vec<f64> = self.apply(v).iter().zip(rhs).map(|(a, b)| b - a).collect();
        let norm = res.iter().fold(0.0, |m: f64, a| m.max(a.abs()));
        (res, norm)
    }

    /// Solves for `(dx, dy)` given `f` (length n) and `g` (length r).
    pub(crate) fn solve(&mut self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut rhs = f.to_vec();
        rhs.extend_from_slice(g);
        let mut v = rhs.clone();
        self.raw_solve(&mut v);
        let (mut res, mut res_norm) = self.residual(&v, &rhs);
        for _ in 0..REFINE_STEPS {
            if res_norm == 0.0 {
                break;
            }
            let mut corr = res.clone();
            self.raw_solve(&mut corr);
            let trial: Vec<f64> = v.iter().zip(&corr).map(|(a, b)| a + b).collect();
            let (trial_res, trial_norm) = self.residual(&trial, &rhs);
            if trial_norm >= 0.5 * res_norm {
                if trial_norm < res_norm {
                    v = trial;
                }
                break;
            }
            v = trial;
            res = trial_res;
            res_norm = trial_norm;
        }
        let dy = v.split_off(self.n);
        (v, dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &SparseMatrix, h: &[f64], dx_true: &[f64], dy_true: &[f64]) {
        let mut kkt = KktSystem::new(m).unwrap();
        kkt.factor(h).unwrap();
        let mut v = dx_true.to_vec();
        v.extend_from_slice(dy_true);
        let rhs = kkt.apply(&v);
        let (dx, dy) = kkt.solve(&rhs[..m.ncols()], &rhs[m.ncols()..]);
        let mut back = dx.clone();
        back.extend(dy);
        let again = kkt.apply(&back);
        for (a, b) in again.iter().zip(&rhs) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{again:?} vs {rhs:?}");
        }
    }

    #[test]
    fn solves_full_rank_system() {
        let m = SparseMatrix::from_triplets(
            3,
            5,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, -1.0), (1, 2, 1.0), (2, 3, 1.0), (2, 4, 3.0), (0, 4, 1.0)],
        )
        .unwrap();
        check(&m, &[1.0, 2.0, 0.5, 1e3, 0.25], &[1.0, -2.0, 0.5, 0.0, 3.0], &[1.0, 0.0, -1.0]);
        check(&m, &[1e-8, 1e8, 1.0, 1e-6, 1e6], &[1.0, -2.0, 0.5, 0.0, 3.0], &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn tolerates_dependent_rows() {
        // row 2 = row 0 + row 1, so only consistent right-hand sides make sense
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 1, 1.0), (0, 2, 1.0)],
        )
        .unwrap();
        check(&m, &[1.0, 1.0, 1.0], &[1.0, 2.0, 0.0], &[0.5, -1.0, 0.0]);
    }
}
