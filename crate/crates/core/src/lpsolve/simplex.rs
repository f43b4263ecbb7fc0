//! Dense revised simplex with an explicit basis inverse.
//!
//! Phase 1 starts from an all-artificial basis (rows flipped so `q ≥ 0`).
//! Artificials left in the basis at level zero after phase 1 mark redundant
//! rows; they are never allowed back in and simply stay basic at zero.
//! Pricing is Dantzig's rule, switching to Bland's rule while the method
//! stalls on degenerate pivots.

use nalgebra::DMatrix;

use super::{norm_inf, LPSolution, LpOptions, Method, StandardLP, Status};
use crate::sparse::SparseMatrix;

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 50;

struct Tableau<'a> {
    cols: &'a SparseMatrix, // transpose of M with row flips applied: row j = column j
    sign: Vec<f64>,
    r: usize,
    n: usize, // structural variables; artificials are n..n+r
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: DMatrix<f64>,
    xb: Vec<f64>,
    rhs: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterLimit,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j >= self.n {
            vec![(j - self.n, 1.0)]
        } else {
            self.cols
                .row_iter(j)
                .map(|(i, v)| (i, v * self.sign[i]))
                .collect()
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.r];
        for (i, v) in self.column(j) {
            for (k, o) in out.iter_mut().enumerate() {
                *o += self.binv[(k, i)] * v;
            }
        }
        out
    }

    fn refactor(&mut self) -> bool {
        let mut b = DMatrix::zeros(self.r, self.r);
        for (k, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column(j) {
                b[(i, k)] = v;
            }
        }
        match b.try_inverse() {
            Some(inv) => {
                self.binv = inv;
                self.xb = (&self.binv * nalgebra::DVector::from_column_slice(&self.rhs))
                    .iter()
                    .map(|&v| if v.abs() < 1e-13 { 0.0 } else { v })
                    .collect();
                self.since_refactor = 0;
                true
            }
            None => false,
        }
    }

    fn pivot(&mut self, leave: usize, enter: usize, alpha: &[f64]) {
        let ap = alpha[leave];
        let theta = self.xb[leave] / ap;
        for k in 0..self.r {
            if k != leave {
                self.xb[k] -= theta * alpha[k];
            }
        }
        self.xb[leave] = theta;
        let prow: Vec<f64> = (0..self.r).map(|c| self.binv[(leave, c)] / ap).collect();
        for k in 0..self.r {
            let f = alpha[k];
            if k == leave || f == 0.0 {
                continue;
            }
            for c in 0..self.r {
                self.binv[(k, c)] -= f * prow[c];
            }
        }
        for c in 0..self.r {
            self.binv[(leave, c)] = prow[c];
        }
        self.in_basis[self.basis[leave]] = false;
        self.in_basis[enter] = true;
        self.basis[leave] = enter;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    /// Simplex duals `y = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.r];
        for (k, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                for (c, yc) in y.iter_mut().enumerate() {
                    *yc += cb * self.binv[(k, c)];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        cost[j] - self.column(j).iter().map(|&(i, v)| y[i] * v).sum::<f64>()
    }

    fn run(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool, limit: usize) -> Outcome {
        let cscale = 1.0 + norm_inf(cost);
        let dtol = 1e-10 * cscale;
        let mut stall = 0;
        let mut fresh = false;
        loop {
            if self.iterations >= limit {
                return Outcome::IterLimit;
            }
            let y = self.duals(cost);
            let bland = stall > STALL_LIMIT;
            let mut enter = None;
            let mut best = -dtol;
            for j in 0..self.n + self.r {
                if self.in_basis[j] || !allowed(j) {
                    continue;
                }
                let dj = self.reduced_cost(j, cost, &y);
                if dj < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = dj;
                }
            }
            let Some(enter) = enter else {
                if !fresh && self.since_refactor > 0 && self.refactor() {
                    fresh = true;
                    continue;
                }
                return Outcome::Optimal;
            };
            let alpha = self.ftran(enter);
            let amax = norm_inf(&alpha).max(1.0);
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for k in 0..self.r {
                if alpha[k] > PIVOT_TOL * amax {
                    let t = self.xb[k].max(0.0) / alpha[k];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if t < ratio - 1e-12 {
                                true
                            } else if t <= ratio + 1e-12 {
                                if bland {
                                    self.basis[k] < self.basis[l]
                                } else {
                                    alpha[k] > alpha[l]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(k);
                        ratio = ratio.min(t);
                    }
                }
            }
            let Some(leave) = leave else {
                if !fresh && self.since_refactor > 0 && self.refactor() {
                    fresh = true;
                    continue;
                }
                return Outcome::Unbounded;
            };
            fresh = false;
            if ratio <= 1e-12 {
                stall += 1;
            } else {
                stall = 0;
            }
            self.xb[leave] = self.xb[leave].max(0.0);
            self.pivot(leave, enter, &alpha);
            self.iterations += 1;
        }
    }
}

pub(crate) fn solve(lp: &StandardLP, opts: &LpOptions) -> LPSolution {
    let (r, n) = (lp.num_rows(), lp.num_vars());
    let cols = lp.m.transpose();
    let sign: Vec<f64> = lp.q.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let rhs: Vec<f64> = lp.q.iter().map(|v| v.abs()).collect();
    let mut t = Tableau {
        cols: &cols,
        sign: sign.clone(),
        r,
        n,
        basis: (n..n + r).collect(),
        in_basis: (0..n + r).map(|j| j >= n).collect(),
        binv: DMatrix::identity(r, r),
        xb: rhs.clone(),
        rhs,
        since_refactor: 0,
        iterations: 0,
    };
    let limit = opts.max_iters.max(50 * (r + n));
    let finish = |t: &Tableau, status: Status, cost: &[f64]| -> LPSolution {
        let mut w = vec![0.0; n];
        for (k, &j) in t.basis.iter().enumerate() {
            if j < n {
                w[j] = t.xb[k].max(0.0);
            }
        }
        let yf = t.duals(cost);
        let y: Vec<f64> = yf.iter().zip(&t.sign).map(|(a, s)| a * s).collect();
        let mty = lp.m.tr_mul_vec(&y);
        let z: Vec<f64> = lp.c.iter().zip(&mty).map(|(c, a)| c - a).collect();
        LPSolution::from_parts(lp, status, w, y, z, t.iterations, Method::Simplex)
    };

    // phase 1
    let mut cost1 = vec![0.0; n + r];
    cost1[n..].iter_mut().for_each(|c| *c = 1.0);
    let outcome = t.run(&cost1, &|_| true, limit);
    t.refactor();
    let infeas: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(&j, _)| j >= n)
        .map(|(_, &v)| v.max(0.0))
        .sum();
    let qscale = 1.0 + norm_inf(&lp.q);
    if matches!(outcome, Outcome::IterLimit) {
        return finish(&t, Status::IterLimit, &cost1);
    }
    if infeas > opts.feas_tol * qscale {
        return finish(&t, Status::Infeasible, &cost1);
    }

    // drive zero-level artificials out where a structural column can replace them
    for k in 0..r {
        if t.basis[k] < n {
            continue;
        }
        let row: Vec<f64> = (0..r).map(|c| t.binv[(k, c)]).collect();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if t.in_basis[j] {
                continue;
            }
            let a: f64 = t.column(j).iter().map(|&(i, v)| row[i] * v).sum();
            if a.abs() > 1e-7 && best.is_none_or(|(_, b)| a.abs() > b.abs()) {
                best = Some((j, a));
            }
        }
        if let Some((j, _)) = best {
            let alpha = t.ftran(j);
            t.xb[k] = 0.0;
            t.pivot(k, j, &alpha);
        }
    }
    t.refactor();

    // phase 2
    let mut cost2 = vec![0.0; n + r];
    cost2[..n].copy_from_slice(&lp.c);
    let outcome = t.run(&cost2, &|j| j < n, limit);
    t.refactor();
    let status = match outcome {
        Outcome::Optimal => Status::Optimal,
        Outcome::Unbounded => Status::Unbounded,
        Outcome::IterLimit => Status::IterLimit,
    };
    finish(&t, status, &cost2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_a_vertex() {
        // min -x1 - x2 s.t. x1 + x2 + s = 1: both x1=1 and x2=1 are optimal
        // vertices; anything in between is not basic
        let m = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)])
            .unwrap();
        let lp = StandardLP::new(m, vec![1.0], vec![-1.0, -1.0, 0.0]).unwrap();
        let s = solve(&lp, &LpOptions::default());
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.w.iter().filter(|&&v| v > 1e-12).count(), 1);
        assert!((s.objective + 1.0).abs() < 1e-12);
    }
}
