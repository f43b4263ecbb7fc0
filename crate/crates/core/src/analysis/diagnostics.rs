use serde::Serialize;

use super::nullvec::{polish, relative_residual};
use super::{
    local_nullvector_search, nsp_order_upper, numerical_rank, sparsest_nullvector_search, spark_bruteforce,
    NullVector, RankReport, Spark, DEFAULT_SPARK_BUDGET,
};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug)]
pub struct DiagnoseOptions {
    pub rank_tol: f64,
    /// Budget for the exact spark search; `0` skips it.
    pub spark_budget: u128,
    pub trials: usize,
    pub seed: u64,
    /// When the columns are the vertices of a lattice, also search boxes of
    /// side up to `local_max_side` for local nullvectors.
    pub lattice: Option<Lattice>,
    pub local_max_side: usize,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            rank_tol: 1e-10,
            spark_budget: DEFAULT_SPARK_BUDGET,
            trials: 40,
            seed: 0,
            lattice: None,
            local_max_side: 8,
        }
    }
}

/// Everything [`diagnose`] could establish about a matrix. Spark and NSP
/// order are upper bounds read off an exhibited nullvector unless the exact
/// search finished.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixDiagnostics {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub rank_report: RankReport,
    pub spark_upper: Option<usize>,
    pub spark_exact: Option<usize>,
    /// Set when the exact search ruled out every dependent set of at most
    /// this many columns without finding one.
    pub spark_exceeds: Option<usize>,
    pub nsp_order_upper: Option<usize>,
    pub sparsest_nullvec: Option<NullVector>,
    pub notes: Vec<String>,
}

/// Runs the rank, nullvector and (budget permitting) exact spark analyses.
pub fn diagnose(a: &SparseMatrix, opts: &DiagnoseOptions) -> Result<MatrixDiagnostics> {
    let rank_report = numerical_rank(a, opts.rank_tol)?;
    let rank = rank_report.rank;
    let n = a.ncols();
    let mut notes = Vec::new();
    if rank_report.gap() < 1e4 {
        notes.push(format!(
            "rank cut is not sharp: kept/dropped singular value ratio {:.3e}",
            rank_report.gap()
        ));
    }
    let mut best: Option<NullVector> = None;
    if rank < n {
        if let Some(lattice) = &opts.lattice {
            match local_nullvector_search(a, lattice, opts.local_max_side, opts.trials.min(8), opts.seed) {
                Ok(v) => best = Some(v),
                Err(Error::NoNullspace) => {}
                Err(e) => return Err(e),
            }
        }
        let global = sparsest_nullvector_search(a, opts.trials, opts.seed)?;
        if best.as_ref().is_none_or(|b| global.support < b.support) {
            best = Some(global);
        }
    }

    let mut spark_exact = None;
    let mut spark_exceeds = None;
    if opts.spark_budget > 0 {
        // any dependent set has at most rank + 1 columns
        let max_k = best.as_ref().map_or(rank + 1, |b| b.support).min(n);
        match spark_bruteforce(a, max_k, opts.spark_budget) {
            Ok(Spark::Exact { spark, columns }) => {
                spark_exact = Some(spark);
                if best.as_ref().is_none_or(|b| spark < b.support) {
                    if let Some(v) = polish(a, &columns) {
                        best = Some(NullVector {
                            residual: relative_residual(a, &v),
                            support: spark,
                            vector: v,
                            trials: 0,
                        });
                    }
                }
            }
            Ok(Spark::LowerBoundOnly { exceeds }) => spark_exceeds = Some(exceeds),
            Err(Error::BudgetExceeded { required, budget }) => notes.push(format!(
                "exact spark search skipped: {required} subsets up to size {max_k} exceed the budget of {budget}"
            )),
            Err(e) => return Err(e),
        }
    }
    let nsp_order_upper = match &best {
        Some(v) => Some(nsp_order_upper(a, &v.vector)?),
        None => None,
    };
    if nsp_order_upper.is_some() {
        notes.push("NSP order is an upper bound from the exhibited nullvector".into());
    }
    Ok(MatrixDiagnostics {
        rows: a.nrows(),
        cols: n,
        rank,
        rank_report,
        spark_upper: spark_exact.or(best.as_ref().map(|b| b.support)),
        spark_exact,
        spark_exceeds,
        nsp_order_upper,
        sparsest_nullvec: best,
        notes,
    })
}
