use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lpsolve::{self, nullspace_basis, LpOptions, StandardLP};
use crate::sparse::SparseMatrix;

/// Relative residual `‖Av‖₂ / ‖v‖₂` below which a vector counts as a
/// nullspace vector.
pub const NULL_TOL: f64 = 1e-8;
// entries below this fraction of the largest are treated as zero
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct NullVector {
    pub vector: Vec<f64>,
    /// Number of nonzero entries, an upper bound on the spark.
    pub support: usize,
    /// `‖Av‖₂ / ‖v‖₂`.
    pub residual: f64,
    pub trials: usize,
}

pub(super) fn relative_residual(a: &SparseMatrix, v: &[f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let av = a.mul_vec(v);
    av.iter().map(|x| x * x).sum::<f64>().sqrt() / norm.max(f64::MIN_POSITIVE)
}

fn support_of(v: &[f64]) -> Vec<usize> {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..v.len()).filter(|&i| v[i].abs() > SUPPORT_TOL * vmax).collect()
}

/// Replaces `v` by the nullvector supported on `support`, if that support
/// carries exactly one nullspace direction; `None` otherwise.
pub(super) fn polish(a: &SparseMatrix, support: &[usize]) -> Option<Vec<f64>> {
    let sub = SparseMatrix::from_dense(&a.dense_columns(support));
    let z = nullspace_basis(&sub, 1e-10);
    if z.ncols() != 1 {
        return None;
    }
    let mut v = vec![0.0; a.ncols()];
    for (k, &j) in support.iter().enumerate() {
        v[j] = z[(k, 0)];
    }
    // rescale so the smallest entry has unit size and snap near-integers
    let small = support.iter().map(|&j| v[j].abs()).fold(f64::INFINITY, f64::min);
    for x in v.iter_mut() {
        *x /= small;
        if (*x - x.round()).abs() < 1e-9 {
            *x = x.round();
        }
    }
    Some(v)
}

/// Searches for a sparse nonzero vector in `N(A)`.
///
/// Each trial solves `min ‖v‖₁ s.t. Av = 0, gᵀv = 1`; vertices of that
/// program are sparse, and interior optima are crossed over to one. Even trials use
/// `g = e_j` for a column `j` taken from a seeded permutation, which asks
/// for the sparsest vector through `j`; odd trials use a Gaussian `g`.
/// Supports are thresholded, the vector is recomputed on its support and
/// re-verified against `A`. The best support found is an upper bound on
/// `spark(A)`.
pub fn sparsest_nullvector_search(a: &SparseMatrix, trials: usize, seed: u64) -> Result<NullVector> {
    let n = a.ncols();
    if nullspace_basis(a, 1e-10).ncols() == 0 {
        return Err(Error::NoNullspace);
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let opts = LpOptions::default();
    // w = (v⁺, v⁻) ≥ 0; the last row is replaced per trial
    let mut rows: Vec<Vec<(usize, f64)>> = (0..a.nrows())
        .map(|i| a.row_iter(i).flat_map(|(j, v)| [(j, v), (n + j, -v)]).collect())
        .collect();
    rows.push(Vec::new());
    let mut q = vec![0.0; a.nrows()];
    q.push(1.0);
    let mut best: Option<NullVector> = None;
    for t in 0..trials {
        let g: Vec<f64> = if t % 2 == 0 {
            let mut g = vec![0.0; n];
            g[order[(t / 2) % n]] = 1.0;
            g
        } else {
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        *rows.last_mut().expect("normalization row") = g
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .flat_map(|(j, &x)| [(j, x), (n + j, -x)])
            .collect();
        let m = SparseMatrix::from_rows(2 * n, rows.clone())?;
        let lp = StandardLP::new(m, q.clone(), vec![1.0; 2 * n])?;
        let sol = lpsolve::solve(&lp, &opts)?;
        if !sol.is_optimal() {
            log::debug!("nullvector trial {t} ended with {:?}", sol.status);
            continue;
        }
        let split = |w: &[f64]| -> Vec<f64> { (0..n).map(|j| w[j] - w[n + j]).collect() };
        let raw = split(&sol.w);
        let v = match polish(a, &support_of(&raw)) {
            Some(v) => v,
            // an interior optimum on a degenerate face: move to a vertex
            None => match lpsolve::crossover(&lp, &sol) {
                Ok(vertex) => {
                    let raw = split(&vertex.w);
                    polish(a, &support_of(&raw)).unwrap_or(raw)
                }
                Err(e) => {
                    log::debug!("nullvector trial {t}: {e}");
                    raw
                }
            },
        };
        let residual = relative_residual(a, &v);
        if residual > NULL_TOL {
            continue;
        }
        let support = support_of(&v).len();
        if best.as_ref().is_none_or(|b| support < b.support) {
            best = Some(NullVector {
                vector: v,
                support,
                residual,
                trials: t + 1,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::Solver("no trial produced a verified nullvector".into()))?;
    best.trials = trials;
    Ok(best)
}

/// Sparsest nullvector search restricted to boxes of the image lattice.
///
/// Tomographic nullvectors are local patterns, while a global `ℓ₁` search
/// tends to return long vectors spread over the whole image. This scans
/// every axis-aligned box of side `2, 3, …, max_side` (columns are the
/// lattice vertices), searches the column submatrix of each box that has a
/// nullspace, and stops after the first side that yields one. Returned
/// vectors live on the full column set.
pub fn local_nullvector_search(
    a: &SparseMatrix,
    lattice: &Lattice,
    max_side: usize,
    trials: usize,
    seed: u64,
) -> Result<NullVector> {
    local_nullvectors(a, lattice, max_side, trials, seed)?
        .into_iter()
        .next()
        .ok_or(Error::NoNullspace)
}

/// Like [`local_nullvector_search`] but returns every distinct vector of
/// the smallest support found, one per box position, normalized so the
/// first nonzero entry is positive.
pub fn local_nullvectors(
    a: &SparseMatrix,
    lattice: &Lattice,
    max_side: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<NullVector>> {
    if a.ncols() != lattice.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} columns for a lattice of {} vertices",
            a.ncols(),
            lattice.n()
        )));
    }
    let dims = lattice.dims();
    let mut found: Vec<NullVector> = Vec::new();
    for side in 2..=max_side.min(dims.iter().copied().max().unwrap_or(0)) {
        let extent: Vec<usize> = dims.iter().map(|&q| side.min(q)).collect();
        let mut corner = vec![0usize; dims.len()];
        loop {
            let cols = box_columns(lattice, &corner, &extent);
            let sub = SparseMatrix::from_dense(&a.dense_columns(&cols));
            if nullspace_basis(&sub, 1e-10).ncols() > 0 {
                let local = sparsest_nullvector_search(&sub, trials, seed)?;
                let mut vector = vec![0.0; a.ncols()];
                for (k, &j) in cols.iter().enumerate() {
                    vector[j] = local.vector[k];
                }
                if vector.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0) {
                    vector.iter_mut().for_each(|x| *x = -*x);
                }
                let best = found.first().map_or(usize::MAX, |b| b.support);
                if local.support < best {
                    found.clear();
                }
                if local.support <= best && !found.iter().any(|f| f.vector == vector) {
                    found.push(NullVector {
                        residual: relative_residual(a, &vector),
                        vector,
                        ..local
                    });
                }
            }
            // next corner, odometer style
            let mut axis = 0;
            while axis < dims.len() {
                corner[axis] += 1;
                if corner[axis] + extent[axis] <= dims[axis] {
                    break;
                }
                corner[axis] = 0;
                axis += 1;
            }
            if axis == dims.len() {
                break;
            }
        }
        if !found.is_empty() {
            break;
        }
    }
    Ok(found)
}

fn box_columns(lattice: &Lattice, corner: &[usize], extent: &[usize]) -> Vec<usize> {
    let total: usize = extent.iter().product();
    let mut cols = Vec::with_capacity(total);
    let mut coord = vec![0usize; extent.len()];
    for k in 0..total {
        let mut rem = k;
        for (ax, c) in coord.iter_mut().enumerate() {
            *c = corner[ax] + rem % extent[ax];
            rem /= extent[ax];
        }
        cols.push(lattice.vertex_index(&coord));
    }
    cols.sort_unstable();
    cols
}

/// Upper bound on the order of the nonnegative nullspace property, read
/// off one nullspace vector: `min(#negative, #positive) − 1` (0 if either
/// sign is missing).
pub fn nsp_order_upper(a: &SparseMatrix, v: &[f64]) -> Result<usize> {
    if v.len() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for {} columns",
            v.len(),
            a.ncols()
        )));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::invalid("zero vector"));
    }
    let residual = relative_residual(a, v);
    if residual > NULL_TOL {
        return Err(Error::NotInNullspace { residual });
    }
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let neg = v.iter().filter(|&&x| x < -SUPPORT_TOL * vmax).count();
    let pos = v.iter().filter(|&&x| x > SUPPORT_TOL * vmax).count();
    Ok(neg.min(pos).saturating_sub(1))
}
