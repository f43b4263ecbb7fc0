//! Standard-form linear programming: `min cᵀw  s.t.  Mw = q, w ≥ 0`.
//!
//! Two solvers live here. The primary one is a Mehrotra predictor-corrector
//! interior-point method whose Newton systems are solved in augmented form
//! with a sparse LDLᵀ. The second is a dense revised simplex, used
//! for small problems when an exact vertex is wanted and as a fallback when
//! the interior-point iteration cannot classify a problem. [`crossover`]
//! turns an interior optimum into a vertex.

mod crossover;
mod ipm;
mod kkt;
mod nullspace;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub use crossover::crossover;
pub use nullspace::{independent_rows, nullspace_basis};

/// A linear program in standard form.
#[derive(Clone, Debug)]
pub struct StandardLP {
    pub m: SparseMatrix,
    pub q: Vec<f64>,
    pub c: Vec<f64>,
}

impl StandardLP {
    pub fn new(m: SparseMatrix, q: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if q.len() != m.nrows() || c.len() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "M is {}x{}, q has {} entries, c has {}",
                m.nrows(),
                m.ncols(),
                q.len(),
                c.len()
            )));
        }
        if q.iter().chain(c.iter()).chain(m.values()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("LP data contains NaN or infinity"));
        }
        Ok(StandardLP { m, q, c })
    }

    pub fn num_vars(&self) -> usize {
        self.m.ncols()
    }

    pub fn num_rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        dot(&self.c, w)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Interior point, with the simplex as fallback on small problems.
    #[default]
    Auto,
    InteriorPoint,
    /// Dense revised simplex; the answer is a basic (vertex) solution.
    Simplex,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iters: usize,
    pub method: Method,
    /// Largest problem (in variables) handed to the simplex fallback.
    pub simplex_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-9,
            gap_tol: 1e-9,
            max_iters: 200,
            method: Method::Auto,
            simplex_limit: 5000,
        }
    }
}

/// Result of a solve. Residuals are recomputed from `w`, `y`, `z` after the
/// solver returns and are relative:
/// `primal_residual = ‖Mw − q‖∞ / (1 + ‖q‖∞)`,
/// `dual_residual = ‖Mᵀy + z − c‖∞ / (1 + ‖c‖∞)` and
/// `duality_gap = |cᵀw − qᵀy| / (1 + |cᵀw|)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LPSolution {
    pub status: Status,
    pub w: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub method: Method,
}

impl LPSolution {
    pub(crate) fn from_parts(
        lp: &StandardLP,
        status: Status,
        w: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        iterations: usize,
        method: Method,
    ) -> Self {
        let (primal_residual, dual_residual, duality_gap) = residuals(lp, &w, &y, &z);
        LPSolution {
            status,
            objective: lp.objective(&w),
            w,
            y,
            z,
            primal_residual,
            dual_residual,
            duality_gap,
            iterations,
            method,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

/// Relative primal residual, dual residual and duality gap.
pub fn residuals(lp: &StandardLP, w: &[f64], y: &[f64], z: &[f64]) -> (f64, f64, f64) {
    let mw = lp.m.mul_vec(w);
    let rp = norm_inf_diff(&mw, &lp.q) / (1.0 + norm_inf(&lp.q));
    let mty = lp.m.tr_mul_vec(y);
    let rd = mty
        .iter()
        .zip(z)
        .zip(&lp.c)
        .map(|((a, b), c)| (a + b - c).abs())
        .fold(0.0, f64::max)
        / (1.0 + norm_inf(&lp.c));
    let pobj = dot(&lp.c, w);
    let gap = (pobj - dot(&lp.q, y)).abs() / (1.0 + pobj.abs());
    (rp, rd, gap)
}

/// Solves `lp` with the method selected in `opts`.
///
/// A presolve pass first removes forcing rows: a row with zero right-hand
/// side whose coefficients all share one sign pins every variable in it to
/// zero. Such rows are common here (rays that miss the object entirely) and
/// would otherwise leave the feasible set without an interior, which makes
/// interior-point duals diverge.
pub fn solve(lp: &StandardLP, opts: &LpOptions) -> Result<LPSolution> {
    if !(opts.feas_tol > 0.0 && opts.gap_tol > 0.0) || opts.max_iters == 0 {
        return Err(Error::invalid("tolerances and iteration limit must be positive"));
    }
    let pre = Presolve::new(lp, opts.feas_tol);
    if pre.infeasible {
        let y = vec![0.0; lp.num_rows()];
        let w = vec![0.0; lp.num_vars()];
        let z = lp.c.clone();
        return Ok(LPSolution::from_parts(lp, Status::Infeasible, w, y, z, 0, opts.method));
    }
    let reduced = &pre.reduced;
    let sol = if reduced.num_vars() == 0 {
        let status = if norm_inf(&reduced.q) <= opts.feas_tol {
            Status::Optimal
        } else {
            Status::Infeasible
        };
        let y = vec![0.0; reduced.num_rows()];
        LPSolution::from_parts(reduced, status, vec![], y, vec![], 0, opts.method)
    } else {
        match opts.method {
            Method::Simplex => {
                let sol = simplex::solve(reduced, opts);
                if sol.status == Status::Optimal && sol.primal_residual <= opts.feas_tol {
                    sol
                } else {
                    // the dense simplex can lose accuracy on large degenerate
                    // problems; confirm with the interior point and cross over
                    log::debug!("simplex ended with {:?}, confirming by interior point", sol.status);
                    let ipm_sol = ipm::solve(reduced, opts)?;
                    if ipm_sol.status == Status::Optimal {
                        crossover::crossover(reduced, &ipm_sol)?
                    } else {
                        sol
                    }
                }
            }
            Method::InteriorPoint => ipm::solve(reduced, opts)?,
            Method::Auto => {
                let sol = ipm::solve(reduced, opts)?;
                if sol.status == Status::Optimal || reduced.num_vars() > opts.simplex_limit {
                    sol
                } else {
                    log::debug!(
                        "interior point ended with {:?} after {} iterations, running simplex",
                        sol.status,
                        sol.iterations
                    );
                    simplex::solve(reduced, opts)
                }
            }
        }
    };
    Ok(pre.restore(lp, sol))
}

struct Presolve {
    reduced: StandardLP,
    keep_cols: Vec<usize>,
    keep_rows: Vec<usize>,
    forcing: Vec<usize>,
    infeasible: bool,
}

impl Presolve {
    fn new(lp: &StandardLP, tol: f64) -> Self {
        let (r, n) = (lp.num_rows(), lp.num_vars());
        let mut fixed = vec![false; n];
        let mut forcing = Vec::new();
        let mut is_forcing = vec![false; r];
        for i in 0..r {
            if lp.q[i] != 0.0 {
                continue;
            }
            let (_, vals) = lp.m.row(i);
            if !vals.is_empty() && (vals.iter().all(|&v| v > 0.0) || vals.iter().all(|&v| v < 0.0)) {
                is_forcing[i] = true;
                forcing.push(i);
                for (j, _) in lp.m.row_iter(i) {
                    fixed[j] = true;
                }
            }
        }
        let keep_cols: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
        let mut new_index = vec![usize::MAX; n];
        for (k, &j) in keep_cols.iter().enumerate() {
            new_index[j] = k;
        }
        let qscale = 1.0 + norm_inf(&lp.q);
        let mut infeasible = false;
        let mut keep_rows = Vec::new();
        let mut rows = Vec::new();
        for i in 0..r {
            if is_forcing[i] {
                continue;
            }
            let row: Vec<(usize, f64)> = lp
                .m
                .row_iter(i)
                .filter(|&(j, _)| !fixed[j])
                .map(|(j, v)| (new_index[j], v))
                .collect();
            if row.is_empty() {
                if lp.q[i].abs() > tol * qscale {
                    infeasible = true;
                }
                continue;
            }
            keep_rows.push(i);
            rows.push(row);
        }
        let m = SparseMatrix::from_rows(keep_cols.len(), rows).expect("indices remapped in range");
        let q = keep_rows.iter().map(|&i| lp.q[i]).collect();
        let c = keep_cols.iter().map(|&j| lp.c[j]).collect();
        Presolve {
            reduced: StandardLP { m, q, c },
            keep_cols,
            keep_rows,
            forcing,
            infeasible,
        }
    }

    fn restore(&self, lp: &StandardLP, sol: LPSolution) -> LPSolution {
        if self.keep_cols.len() == lp.num_vars() && self.keep_rows.len() == lp.num_rows() {
            return sol;
        }
        let mut w = vec![0.0; lp.num_vars()];
        for (k, &j) in self.keep_cols.iter().enumerate() {
            w[j] = sol.w[k];
        }
        let mut y = vec![0.0; lp.num_rows()];
        for (k, &i) in self.keep_rows.iter().enumerate() {
            y[i] = sol.y[k];
        }
        // pick duals for forcing rows that make every pinned column's
        // reduced cost nonnegative; later rows only raise earlier slacks
        let mut z: Vec<f64> = {
            let mty = lp.m.tr_mul_vec(&y);
            lp.c.iter().zip(&mty).map(|(c, a)| c - a).collect()
        };
        for &i in &self.forcing {
            // z_j - a_ij·y_i >= 0 for every j in the row
            let ratios = lp.m.row_iter(i).map(|(j, a)| z[j] / a);
            let yi = if lp.m.row(i).1[0] > 0.0 {
                ratios.fold(0.0, f64::min)
            } else {
                ratios.fold(0.0, f64::max)
            };
            y[i] = yi;
            for (j, a) in lp.m.row_iter(i) {
                z[j] -= a * yi;
            }
        }
        for (k, &j) in self.keep_cols.iter().enumerate() {
            z[j] = sol.z[k];
        }
        LPSolution::from_parts(lp, sol.status, w, y, z, sol.iterations, sol.method)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm_inf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[&[f64]], q: &[f64], c: &[f64]) -> StandardLP {
        let mut trips = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    trips.push((i, j, v));
                }
            }
        }
        let m = SparseMatrix::from_triplets(rows.len(), c.len(), &trips).unwrap();
        StandardLP::new(m, q.to_vec(), c.to_vec()).unwrap()
    }

    fn all_methods() -> [LpOptions; 3] {
        let base = LpOptions::default();
        [
            LpOptions { method: Method::Auto, ..base },
            LpOptions { method: Method::InteriorPoint, ..base },
            LpOptions { method: Method::Simplex, ..base },
        ]
    }

    #[test]
    fn single_variable() {
        let p = lp(&[&[1.0]], &[1.0], &[1.0]);
        for opts in all_methods() {
            let s = solve(&p, &opts).unwrap();
            assert_eq!(s.status, Status::Optimal, "{:?}", opts.method);
            assert!((s.w[0] - 1.0).abs() < 1e-9);
            assert!((s.objective - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_ray() {
        let p = lp(&[&[1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        for opts in [all_methods()[0], all_methods()[2]] {
            assert_eq!(solve(&p, &opts).unwrap().status, Status::Unbounded);
        }
    }

    #[test]
    fn infeasible_system() {
        let p = lp(&[&[1.0, 1.0]], &[-1.0], &[1.0, 1.0]);
        for opts in [all_methods()[0], all_methods()[2]] {
            assert_eq!(solve(&p, &opts).unwrap().status, Status::Infeasible);
        }
    }

    #[test]
    fn redundant_rows() {
        // second row duplicates the first
        let p = lp(
            &[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, -1.0, 0.0]],
            &[3.0, 6.0, 0.0],
            &[1.0, 1.0, 3.0],
        );
        for opts in all_methods() {
            let s = solve(&p, &opts).unwrap();
            assert_eq!(s.status, Status::Optimal, "{:?}", opts.method);
            assert!((s.objective - 3.0).abs() < 1e-8, "{:?}: {}", opts.method, s.objective);
            assert!(s.duality_gap <= 1e-9);
            assert!(s.primal_residual <= 1e-9);
        }
    }

    #[test]
    fn rejects_bad_data() {
        let m = SparseMatrix::identity(2);
        assert!(StandardLP::new(m.clone(), vec![1.0], vec![1.0, 1.0]).is_err());
        assert!(StandardLP::new(m, vec![1.0, f64::NAN], vec![1.0, 1.0]).is_err());
    }
}
