use nalgebra::DMatrix;

use crate::sparse::SparseMatrix;

/// Orthonormal basis of `N(A)` as the columns of an `n × (n − rank A)`
/// matrix. Singular values at or below `tol · σ_max` count as zero.
pub fn nullspace_basis(a: &SparseMatrix, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    // pad to at least n rows so the SVD returns a full right basis
    let mut dense = DMatrix::zeros(a.nrows().max(n), n);
    for (i, j, v) in a.triplets() {
        dense[(i, j)] = v;
    }
    let svd = dense.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= tol * smax || smax == 0.0)
        .collect();
    let mut z = DMatrix::zeros(n, null.len());
    for (c, &k) in null.iter().enumerate() {
        for j in 0..n {
            z[(j, c)] = vt[(k, j)];
        }
    }
    z
}

/// A maximal set of linearly independent rows of `m`, in increasing order.
///
/// Runs a diagonally pivoted Cholesky factorization of the Gram matrix
/// `M Mᵀ`; a row is dropped once its remaining Schur complement falls to
/// `tol` times the largest squared row norm.
pub fn independent_rows(m: &SparseMatrix, tol: f64) -> Vec<usize> {
    let r = m.nrows();
    let mt = m.transpose();
    let mut g = DMatrix::zeros(r, r);
    for j in 0..mt.nrows() {
        let (rows, vals) = mt.row(j);
        for (ka, (&a, &va)) in rows.iter().zip(vals).enumerate() {
            for (&b, &vb) in rows[ka..].iter().zip(&vals[ka..]) {
                g[(a, b)] += va * vb;
                if a != b {
                    g[(b, a)] += va * vb;
                }
            }
        }
    }
    let scale = (0..r).map(|i| g[(i, i)]).fold(0.0, f64::max);
    let mut active: Vec<usize> = (0..r).collect();
    let mut chosen = Vec::new();
    // columns of the partial factor, stored per chosen pivot
    let mut l: Vec<Vec<f64>> = Vec::new();
    let mut diag: Vec<f64> = (0..r).map(|i| g[(i, i)]).collect();
    while !active.is_empty() {
        let (pos, &piv) = active
            .iter()
            .enumerate()
            .max_by(|a, b| diag[*a.1].total_cmp(&diag[*b.1]))
            .unwrap();
        if diag[piv] <= tol * scale || scale == 0.0 {
            break;
        }
        active.swap_remove(pos);
        let pivot = diag[piv].sqrt();
        let mut col = vec![0.0; r];
        for &i in &active {
            let mut v = g[(i, piv)];
            for lk in &l {
                v -= lk[i] * lk[piv];
            }
            col[i] = v / pivot;
            diag[i] -= col[i] * col[i];
        }
        col[piv] = pivot;
        l.push(col);
        chosen.push(piv);
    }
    chosen.sort_unstable();
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_matrices() {
        assert_eq!(nullspace_basis(&SparseMatrix::zeros(3, 0), 1e-10).shape(), (0, 0));
        assert_eq!(nullspace_basis(&SparseMatrix::zeros(0, 2), 1e-10).shape(), (2, 2));
    }

    #[test]
    fn identity_has_empty_nullspace() {
        let z = nullspace_basis(&SparseMatrix::identity(4), 1e-10);
        assert_eq!(z.ncols(), 0);
    }

    #[test]
    fn one_by_two() {
        let a = SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let z = nullspace_basis(&a, 1e-10);
        assert_eq!(z.ncols(), 1);
        assert!((z[(0, 0)] + z[(1, 0)]).abs() < 1e-12);
        assert!((z[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn independent_rows_of_dependent_system() {
        let m = SparseMatrix::from_triplets(
            4,
            3,
            &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0), (2, 1, 1.0), (3, 2, 2.0)],
        )
        .unwrap();
        let rows = independent_rows(&m, 1e-10);
        assert_eq!(rows.len(), 3);
        assert!(rows.contains(&3));
    }
}
