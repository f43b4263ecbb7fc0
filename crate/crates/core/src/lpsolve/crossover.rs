use nalgebra::DVector;

use super::{nullspace_basis, LPSolution, Method, StandardLP, Status};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

// entries below this fraction of ‖w‖∞ start out as zero
const ZERO_TOL: f64 = 1e-9;

/// Moves an optimal solution to a vertex of the optimal face.
///
/// Purification: while the columns of `M` on the support of `w` are
/// dependent, step along a null direction of those columns that does not
/// increase the cost until a component reaches zero, and drop it. The
/// result is a basic feasible solution whose objective is no larger than
/// the input's. Duals are carried over unchanged.
pub fn crossover(lp: &StandardLP, sol: &LPSolution) -> Result<LPSolution> {
    if sol.status != Status::Optimal {
        return Err(Error::invalid(format!("crossover needs an optimal solution, got {:?}", sol.status)));
    }
    let scale = sol.w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut support: Vec<usize> = (0..lp.num_vars()).filter(|&j| sol.w[j] > ZERO_TOL * scale).collect();
    let mut w: Vec<f64> = support.iter().map(|&j| sol.w[j]).collect();
    let mut cs: Vec<f64> = support.iter().map(|&j| lp.c[j]).collect();
    let cmax = lp.c.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let sub = SparseMatrix::from_dense(&lp.m.dense_columns(&support));
    let mut z = nullspace_basis(&sub, 1e-10);
    while z.ncols() > 0 {
        let mut delta: Vec<f64> = z.column(0).iter().copied().collect();
        let slope: f64 = delta.iter().zip(&cs).map(|(d, c)| d * c).sum();
        let dmax = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let slope_tol = 1e-10 * dmax * cmax;
        let decreasing = |d: &[f64]| d.iter().any(|&x| x < -1e-12 * dmax);
        // a flat direction may go either way; pick one that reaches a bound
        let flip = if slope.abs() <= slope_tol { !decreasing(&delta) } else { slope > 0.0 };
        if flip {
            delta.iter_mut().for_each(|d| *d = -*d);
        }
        let hit = (0..w.len())
            .filter(|&k| delta[k] < -1e-12 * dmax)
            .min_by(|&a, &b| (w[a] / -delta[a]).total_cmp(&(w[b] / -delta[b])));
        let Some(hit) = hit else {
            // a cost-decreasing ray inside the support: not optimal after all
            return Err(Error::Solver("crossover found an improving ray".into()));
        };
        let t = w[hit] / -delta[hit];
        for (wk, dk) in w.iter_mut().zip(&delta) {
            *wk += t * dk;
        }
        // eliminate coordinate `hit` from the nullspace basis
        let piv = (0..z.ncols())
            .max_by(|&a, &b| z[(hit, a)].abs().total_cmp(&z[(hit, b)].abs()))
            .expect("nonempty basis");
        let pcol = z.column(piv).clone_owned();
        for c in 0..z.ncols() {
            if c != piv {
                let f = z[(hit, c)] / pcol[hit];
                let mut col = z.column_mut(c);
                col.axpy(-f, &pcol, 1.0);
            }
        }
        z = z.remove_column(piv).remove_row(hit);
        support.remove(hit);
        w.remove(hit);
        cs.remove(hit);
    }

    // exact basic solution on the final support
    let b = lp.m.dense_columns(&support);
    let q = DVector::from_column_slice(&lp.q);
    let ws = if support.is_empty() {
        DVector::zeros(0)
    } else {
        b.clone()
            .svd(true, true)
            .solve(&q, 1e-12)
            .map_err(|e| Error::Solver(format!("basic solve failed: {e}")))?
    };
    if ws.iter().any(|&v| v < -1e-7 * scale) {
        return Err(Error::Solver("crossover ended at an infeasible basis".into()));
    }
    let mut full = vec![0.0; lp.num_vars()];
    for (k, &j) in support.iter().enumerate() {
        full[j] = ws[k].max(0.0);
    }
    Ok(LPSolution::from_parts(
        lp,
        Status::Optimal,
        full,
        sol.y.clone(),
        sol.z.clone(),
        sol.iterations,
        Method::InteriorPoint,
    ))
}
