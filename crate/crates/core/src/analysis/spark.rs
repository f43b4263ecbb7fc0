use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Default cap on the number of candidate column sets examined.
pub const DEFAULT_SPARK_BUDGET: u128 = 1_000_000_000;

const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spark {
    /// The spark, with one minimal dependent column set.
    Exact { spark: usize, columns: Vec<usize> },
    /// Every set of at most `max_k` columns is independent.
    LowerBoundOnly { exceeds: usize },
}

impl Spark {
    pub fn exact(&self) -> Option<usize> {
        match self {
            Spark::Exact { spark, .. } => Some(*spark),
            Spark::LowerBoundOnly { .. } => None,
        }
    }
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Exact spark by exhaustive search over column sets of size `≤ max_k`.
///
/// A minimal dependent set (a circuit) touches every one of its rows at
/// least twice, since a row met by a single column forces that column's
/// coefficient to zero, and its columns are connected through shared rows.
/// The search therefore grows sets from their smallest column, always
/// branching on a row that is so far covered only once, which visits every
/// circuit while skipping the bulk of the `C(n, k)` subsets. Independence is
/// tracked by incremental elimination along the search path.
///
/// The worst case is still `C(n, max_k)`; if that exceeds `budget` the call
/// is refused rather than answered partially. The leading column is
/// distributed over threads.
pub fn spark_bruteforce(a: &SparseMatrix, max_k: usize, budget: u128) -> Result<Spark> {
    let n = a.ncols();
    let required = binomial(n, max_k.min(n));
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if max_k == 0 || n == 0 {
        return Ok(Spark::LowerBoundOnly { exceeds: max_k });
    }
    let cols = a.transpose();
    let best = AtomicUsize::new(max_k + 1);
    let visited = AtomicU64::new(0);
    let found: Vec<Option<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|c0| {
            let mut search = Search {
                a,
                cols: &cols,
                first: c0,
                best: &best,
                visited: &visited,
                budget,
                chosen: Vec::new(),
                cover: vec![0u32; a.nrows()],
                basis: Vec::new(),
                witness: None,
            };
            search.push_and_recurse(c0);
            search.witness
        })
        .collect();
    let examined = visited.load(Ordering::Relaxed) as u128;
    if examined > budget {
        return Err(Error::BudgetExceeded { required: examined, budget });
    }
    let spark = best.load(Ordering::Relaxed);
    if spark > max_k {
        return Ok(Spark::LowerBoundOnly { exceeds: max_k });
    }
    // the lowest leading column among the minimal witnesses, for determinism
    let columns = found
        .into_iter()
        .flatten()
        .find(|w| w.len() == spark)
        .expect("a witness of the best size was recorded");
    Ok(Spark::Exact { spark, columns })
}

struct Search<'a> {
    a: &'a SparseMatrix,
    cols: &'a SparseMatrix,
    first: usize,
    best: &'a AtomicUsize,
    visited: &'a AtomicU64,
    budget: u128,
    chosen: Vec<usize>,
    cover: Vec<u32>,
    // eliminated columns: (pivot row, dense reduced column)
    basis: Vec<(usize, Vec<f64>)>,
    witness: Option<Vec<usize>>,
}

impl Search<'_> {
    /// Reduces column `c` against the basis; `None` if it is dependent.
    fn reduce(&self, c: usize) -> Option<(usize, Vec<f64>)> {
        let mut v = vec![0.0; self.a.nrows()];
        for (i, x) in self.cols.row_iter(c) {
            v[i] = x;
        }
        for (piv, b) in &self.basis {
            let f = v[*piv] / b[*piv];
            if f != 0.0 {
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= f * bi;
                }
            }
        }
        let (piv, &mag) = v
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))?;
        (mag.abs() > PIVOT_TOL).then_some((piv, v))
    }

    fn push_and_recurse(&mut self, c: usize) {
        let count = self.visited.fetch_add(1, Ordering::Relaxed) as u128;
        if count > self.budget {
            return;
        }
        let size = self.chosen.len() + 1;
        if size >= self.best.load(Ordering::Relaxed) {
            return;
        }
        match self.reduce(c) {
            None => {
                // dependent: the chosen set plus c contains a circuit of at
                // most this size, and every smaller set was ruled out above
                let mut w = self.chosen.clone();
                w.push(c);
                self.best.fetch_min(size, Ordering::Relaxed);
                if self.best.load(Ordering::Relaxed) == size {
                    w.sort_unstable();
                    self.witness = Some(w);
                }
            }
            Some(entry) => {
                self.basis.push(entry);
                self.chosen.push(c);
                for (i, _) in self.cols.row_iter(c) {
                    self.cover[i] += 1;
                }
                self.extend();
                for (i, _) in self.cols.row_iter(c) {
                    self.cover[i] -= 1;
                }
                self.chosen.pop();
                self.basis.pop();
            }
        }
    }

    fn extend(&mut self) {
        if self.chosen.len() + 1 >= self.best.load(Ordering::Relaxed) {
            return;
        }
        let single = self
            .chosen
            .iter()
            .flat_map(|&c| self.cols.row_iter(c).map(|(i, _)| i))
            .find(|&i| self.cover[i] == 1);
        let candidates: Vec<usize> = match single {
            Some(row) => self.a.row_iter(row).map(|(j, _)| j).collect(),
            None => {
                // every row is covered twice yet the set is independent:
                // grow through any column sharing a row with it
                let mut c: Vec<usize> = self
                    .chosen
                    .iter()
                    .flat_map(|&c| self.cols.row_iter(c).map(|(i, _)| i))
                    .flat_map(|i| self.a.row_iter(i).map(|(j, _)| j))
                    .collect();
                c.sort_unstable();
                c.dedup();
                c
            }
        };
        for j in candidates {
            if j > self.first && !self.chosen.contains(&j) {
                self.push_and_recurse(j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn identity_has_no_small_dependency() {
        let r = spark_bruteforce(&SparseMatrix::identity(3), 3, DEFAULT_SPARK_BUDGET).unwrap();
        assert_eq!(r, Spark::LowerBoundOnly { exceeds: 3 });
    }

    #[test]
    fn zero_and_repeated_columns() {
        let a = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]));
        assert_eq!(spark_bruteforce(&a, 3, 100).unwrap().exact(), Some(1));
        let a = SparseMatrix::from_dense(&DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 1.0]));
        let r = spark_bruteforce(&a, 3, 100).unwrap();
        assert_eq!(r, Spark::Exact { spark: 2, columns: vec![1, 2] });
    }

    #[test]
    fn budget_is_enforced() {
        let a = SparseMatrix::identity(40);
        assert!(matches!(
            spark_bruteforce(&a, 10, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(64, 6), 74_974_368);
        assert_eq!(binomial(3, 5), 0);
    }
}
