use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Singular values of `a` in decreasing order.
pub fn singular_values(a: &SparseMatrix) -> Vec<f64> {
    let dense: DMatrix<f64> = if a.nrows() <= a.ncols() {
        a.to_dense()
    } else {
        a.transpose().to_dense()
    };
    // σ(A) from the eigenvalues of the smaller Gram matrix would lose half the
    // digits, so go through a proper SVD
    let mut s: Vec<f64> = dense.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub rank: usize,
    /// Smallest singular value counted towards the rank, relative to the largest.
    pub smallest_kept: f64,
    /// Largest singular value dropped, relative to the largest (0 if none).
    pub largest_dropped: f64,
}

impl RankReport {
    /// Ratio between the kept and dropped singular values at the cut.
    pub fn gap(&self) -> f64 {
        if self.largest_dropped == 0.0 {
            f64::INFINITY
        } else {
            self.smallest_kept / self.largest_dropped
        }
    }
}

/// Counts singular values above `tol · σ_max`.
pub fn numerical_rank(a: &SparseMatrix, tol: f64) -> Result<RankReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("rank tolerance must be positive, got {tol}")));
    }
    let s = singular_values(a);
    let Some(&smax) = s.first() else {
        return Ok(RankReport { rank: 0, smallest_kept: 0.0, largest_dropped: 0.0 });
    };
    if smax == 0.0 {
        return Ok(RankReport { rank: 0, smallest_kept: 0.0, largest_dropped: 0.0 });
    }
    let rank = s.iter().take_while(|&&x| x > tol * smax).count();
    Ok(RankReport {
        rank,
        smallest_kept: if rank > 0 { s[rank - 1] / smax } else { 0.0 },
        largest_dropped: s.get(rank).map_or(0.0, |x| x / smax),
    })
}
