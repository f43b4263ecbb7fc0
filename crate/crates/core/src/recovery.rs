//! Total-variation recovery as a linear program, the ℓ₁ baselines, and the
//! nullspace uniqueness certificate.
//!
//! The TV program `min ‖∇u‖₁ s.t. Au = b, u ≥ 0` becomes a standard-form LP
//! in `w = (u, v¹, v²)` with `∇u = v¹ − v²`:
//!
//! ```text
//! M = [ ∇  −I  I ]    q = [ 0 ]    c = [ 0 ]
//!     [ A   0  0 ]        [ b ]        [ 1 ]
//!                                      [ 1 ]
//! ```
//!
//! When the cosupport `Λ` is known, only the rows in `Λᶜ` get auxiliary
//! variables and `∇_Λ u = 0` is added as a hard constraint.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::numerical_rank;
use crate::error::{Error, Result};
use crate::lattice::{Cosupport, Lattice};
use crate::lpsolve::{self, nullspace_basis, LPSolution, LpOptions, Method, StandardLP, Status};
use crate::sparse::SparseMatrix;

/// Threshold below which a certificate minimum counts as a violation.
pub const CERT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum Mode {
    TvUnknown,
    TvKnown(Cosupport),
    /// `min ‖u‖₁ s.t. Au = b` with `u` free.
    L1,
    /// `min 𝟙ᵀu s.t. Au = b, u ≥ 0`.
    L1Nonneg,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::TvUnknown => "tv",
            Mode::TvKnown(_) => "tv-known",
            Mode::L1 => "l1",
            Mode::L1Nonneg => "l1-nonneg",
        }
    }
}

/// Builds the TV program for unknown cosupport.
pub fn assemble_tv_lp(a: &SparseMatrix, grad: &SparseMatrix, b: &[f64]) -> Result<StandardLP> {
    check_shapes(a, grad, b)?;
    let (n, p, m) = (grad.ncols(), grad.nrows(), a.nrows());
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(p + m);
    for r in 0..p {
        let mut row: Vec<(usize, f64)> = grad.row_iter(r).collect();
        row.push((n + r, -1.0));
        row.push((n + p + r, 1.0));
        rows.push(row);
    }
    for i in 0..m {
        rows.push(a.row_iter(i).collect());
    }
    let mm = SparseMatrix::from_rows(n + 2 * p, rows)?;
    let mut q = vec![0.0; p];
    q.extend_from_slice(b);
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, 2 * p));
    StandardLP::new(mm, q, c)
}

/// Builds the TV program for a known cosupport `Λ`: rows `Λᶜ` carry
/// auxiliary variables, rows `Λ` are the hard constraints `∇_Λ u = 0`.
pub fn assemble_tv_lp_known(
    a: &SparseMatrix,
    grad: &SparseMatrix,
    b: &[f64],
    lambda: &Cosupport,
) -> Result<StandardLP> {
    check_shapes(a, grad, b)?;
    let (n, p, m) = (grad.ncols(), grad.nrows(), a.nrows());
    if lambda.lattice().p() != p || lambda.lattice().n() != n {
        return Err(Error::DimensionMismatch("cosupport lattice does not match the gradient".into()));
    }
    let comp = lambda.complement();
    let k = comp.len();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(p + m);
    for (t, &r) in comp.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = grad.row_iter(r).collect();
        row.push((n + t, -1.0));
        row.push((n + k + t, 1.0));
        rows.push(row);
    }
    for &r in lambda.edges() {
        rows.push(grad.row_iter(r).collect());
    }
    for i in 0..m {
        rows.push(a.row_iter(i).collect());
    }
    let mm = SparseMatrix::from_rows(n + 2 * k, rows)?;
    let mut q = vec![0.0; p];
    q.extend_from_slice(b);
    let mut c = vec![0.0; n];
    c.extend(std::iter::repeat_n(1.0, 2 * k));
    StandardLP::new(mm, q, c)
}

fn check_shapes(a: &SparseMatrix, grad: &SparseMatrix, b: &[f64]) -> Result<()> {
    if a.ncols() != grad.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, gradient has {} columns, b has {} entries",
            a.nrows(),
            a.ncols(),
            grad.ncols(),
            b.len()
        )));
    }
    Ok(())
}

fn assemble_l1(a: &SparseMatrix, b: &[f64], nonneg: bool) -> Result<StandardLP> {
    let n = a.ncols();
    if nonneg {
        return StandardLP::new(a.clone(), b.to_vec(), vec![1.0; n]);
    }
    let rows = (0..a.nrows())
        .map(|i| a.row_iter(i).flat_map(|(j, v)| [(j, v), (n + j, -v)]).collect())
        .collect();
    StandardLP::new(SparseMatrix::from_rows(2 * n, rows)?, b.to_vec(), vec![1.0; 2 * n])
}

/// Success threshold `ε` in `‖u − ū‖₂ ≤ ε·n`.
pub fn default_epsilon(dim: usize) -> f64 {
    if dim >= 3 {
        1e-8
    } else {
        1e-6
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryProblem {
    pub lattice: Lattice,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub grad: SparseMatrix,
    pub mode: Mode,
    pub ground_truth: Option<Vec<f64>>,
}

impl RecoveryProblem {
    /// Problem with noiseless data `b = A·ū`.
    pub fn from_truth(lattice: Lattice, a: SparseMatrix, truth: &[f64], mode: Mode) -> Result<Self> {
        if truth.len() != lattice.n() || a.ncols() != lattice.n() {
            return Err(Error::DimensionMismatch(format!(
                "lattice has {} vertices, image {} values, A {} columns",
                lattice.n(),
                truth.len(),
                a.ncols()
            )));
        }
        let b = a.mul_vec(truth);
        Ok(RecoveryProblem {
            lattice,
            grad: lattice.gradient(),
            a,
            b,
            mode,
            ground_truth: Some(truth.to_vec()),
        })
    }

    pub fn from_measurements(lattice: Lattice, a: SparseMatrix, b: Vec<f64>, mode: Mode) -> Result<Self> {
        if a.ncols() != lattice.n() || a.nrows() != b.len() {
            return Err(Error::DimensionMismatch("A, b and lattice disagree".into()));
        }
        Ok(RecoveryProblem {
            lattice,
            grad: lattice.gradient(),
            a,
            b,
            mode,
            ground_truth: None,
        })
    }

    pub fn assemble(&self) -> Result<StandardLP> {
        match &self.mode {
            Mode::TvUnknown => assemble_tv_lp(&self.a, &self.grad, &self.b),
            Mode::TvKnown(lambda) => assemble_tv_lp_known(&self.a, &self.grad, &self.b, lambda),
            Mode::L1 => assemble_l1(&self.a, &self.b, false),
            Mode::L1Nonneg => assemble_l1(&self.a, &self.b, true),
        }
    }

    /// Extracts `u` from a solution vector of the assembled program.
    pub fn image_from(&self, w: &[f64]) -> Vec<f64> {
        let n = self.lattice.n();
        match self.mode {
            Mode::L1 => (0..n).map(|j| w[j] - w[n + j]).collect(),
            _ => w[..n].to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: Status,
    pub method: Method,
    pub iterations: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub u: Vec<f64>,
    /// `‖u − ū‖₂ ≤ ε·n`; `None` without ground truth.
    pub success: Option<bool>,
    pub l2_error: Option<f64>,
    pub tv: f64,
    pub tv_truth: Option<f64>,
    pub epsilon: f64,
    pub solver: SolverSummary,
}

/// Solves the problem and grades the result against the ground truth.
pub fn recover(problem: &RecoveryProblem, eps_override: Option<f64>, opts: &LpOptions) -> Result<RecoveryResult> {
    let (result, _) = recover_with_solution(problem, eps_override, opts)?;
    Ok(result)
}

/// Like [`recover`], also returning the raw LP solution.
pub fn recover_with_solution(
    problem: &RecoveryProblem,
    eps_override: Option<f64>,
    opts: &LpOptions,
) -> Result<(RecoveryResult, LPSolution)> {
    let lp = problem.assemble()?;
    let start = Instant::now();
    let sol = lpsolve::solve(&lp, opts)?;
    let seconds = start.elapsed().as_secs_f64();
    let u = problem.image_from(&sol.w);
    let epsilon = eps_override.unwrap_or_else(|| default_epsilon(problem.lattice.dim()));
    let n = problem.lattice.n() as f64;
    let l2_error = problem.ground_truth.as_ref().map(|t| {
        u.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    });
    let success = l2_error.map(|e| sol.status == Status::Optimal && e <= epsilon * n);
    let result = RecoveryResult {
        tv: problem.lattice.tv(&u),
        tv_truth: problem.ground_truth.as_ref().map(|t| problem.lattice.tv(t)),
        u,
        success,
        l2_error,
        epsilon,
        solver: SolverSummary {
            status: sol.status,
            method: sol.method,
            iterations: sol.iterations,
            objective: sol.objective,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            duality_gap: sol.duality_gap,
            seconds,
        },
    };
    Ok((result, sol))
}

/// Number of auxiliary variables `v¹, v²` at zero, i.e. `|J̄|`, for a
/// solution of the unknown-cosupport TV program on a lattice with `n`
/// vertices and `p` edges.
pub fn zero_aux_count(w: &[f64], n: usize, p: usize, tol: f64) -> usize {
    w[n..n + 2 * p].iter().filter(|v| v.abs() <= tol).count()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Certificate {
    /// Some nullspace direction `u` has `‖(∇u)_Λ‖₁ ≤ ⟨(∇u)_Λᶜ, s⟩`, so `−u`
    /// does not increase the TV at `ū`.
    Violated {
        witness: Vec<f64>,
        minimum: f64,
        margin: f64,
    },
    NotViolated {
        minimum: f64,
        /// `τ − 1` with `τ = min ‖(∇u)_Λ‖₁` over nullspace vectors with
        /// `⟨(∇u)_Λᶜ, s⟩ = 1`. Positive means the strict inequality holds
        /// with room; infinite if no such vector exists.
        margin: f64,
        degenerate: bool,
        note: Option<String>,
    },
}

impl Certificate {
    pub fn is_violated(&self) -> bool {
        matches!(self, Certificate::Violated { .. })
    }

    pub fn margin(&self) -> f64 {
        match self {
            Certificate::Violated { margin, .. } | Certificate::NotViolated { margin, .. } => *margin,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Certificate::NotViolated { degenerate: true, .. })
    }
}

/// Checks `‖(∇u)_Λ‖₁ > ⟨(∇u)_Λᶜ, s⟩` for every nonzero `u ∈ N(A)`.
///
/// The left minus the right side is minimized over `u = Zy`, `‖y‖∞ ≤ 1`,
/// where `Z` is an orthonormal nullspace basis. A minimum below
/// `-CERT_TOL` is a violation.
pub fn uniqueness_certificate(
    a: &SparseMatrix,
    grad: &SparseMatrix,
    lambda: &Cosupport,
    signs: &[f64],
) -> Result<Certificate> {
    let comp = lambda.complement();
    if signs.len() != comp.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} signs for {} cosupport-complement rows",
            signs.len(),
            comp.len()
        )));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(Error::invalid("signs must be +1 or -1"));
    }
    let z = nullspace_basis(a, 1e-10);
    let k = z.ncols();
    if k == 0 {
        return Ok(Certificate::NotViolated {
            minimum: 0.0,
            margin: f64::INFINITY,
            degenerate: false,
            note: Some("A has a trivial nullspace; the condition holds vacuously".into()),
        });
    }
    // G = ∇Z, split into the Λ rows and the signed sum over Λᶜ
    let g_lambda = grad.select_rows(lambda.edges()).to_dense() * &z;
    let g_comp = grad.select_rows(&comp).to_dense() * &z;
    let g: Vec<f64> = (0..k)
        .map(|c| (0..comp.len()).map(|r| signs[r] * g_comp[(r, c)]).sum())
        .collect();
    let ell = lambda.ell();

    let opts = LpOptions {
        method: Method::Simplex,
        ..LpOptions::default()
    };

    // box program: variables y⁺, y⁻, box slacks s⁺, s⁻, t⁺, t⁻
    let mut trips = Vec::new();
    for r in 0..ell {
        for c in 0..k {
            let v = g_lambda[(r, c)];
            if v != 0.0 {
                trips.push((r, c, -v));
                trips.push((r, k + c, v));
            }
        }
        trips.push((r, 4 * k + r, 1.0));
        trips.push((r, 4 * k + ell + r, -1.0));
    }
    for c in 0..k {
        trips.push((ell + c, c, 1.0));
        trips.push((ell + c, 2 * k + c, 1.0));
        trips.push((ell + k + c, k + c, 1.0));
        trips.push((ell + k + c, 3 * k + c, 1.0));
    }
    let nvars = 4 * k + 2 * ell;
    let mm = SparseMatrix::from_triplets(ell + 2 * k, nvars, &trips)?;
    let mut q = vec![0.0; ell];
    q.extend(std::iter::repeat_n(1.0, 2 * k));
    let mut cost = vec![0.0; nvars];
    for c in 0..k {
        cost[c] = -g[c];
        cost[k + c] = g[c];
    }
    cost[4 * k..].iter_mut().for_each(|v| *v = 1.0);
    let sol = lpsolve::solve(&StandardLP::new(mm, q, cost)?, &opts)?;
    if sol.status != Status::Optimal {
        return Err(Error::Solver(format!("certificate program ended with {:?}", sol.status)));
    }
    let minimum = sol.objective;
    let y: Vec<f64> = (0..k).map(|c| sol.w[c] - sol.w[k + c]).collect();

    let margin = normalized_margin(&g_lambda, &g, &opts)?;
    if minimum < -CERT_TOL {
        let witness = (&z * nalgebra::DVector::from_column_slice(&y)).iter().copied().collect();
        return Ok(Certificate::Violated {
            witness,
            minimum,
            margin,
        });
    }
    // directions with (∇u)_Λ = 0 and ⟨(∇u)_Λᶜ, s⟩ = 0 make the minimum zero
    // at y ≠ 0, so the strict inequality fails there
    let mut stacked = DMatrix::zeros(ell + 1, k);
    stacked.rows_mut(0, ell).copy_from(&g_lambda);
    for c in 0..k {
        stacked[(ell, c)] = g[c];
    }
    let kernel = k - numerical_rank(&SparseMatrix::from_dense(&stacked), 1e-10)?.rank;
    let degenerate = kernel > 0 || margin.abs() <= CERT_TOL;
    let note = (kernel > 0).then(|| {
        format!("{kernel} nullspace direction(s) leave both sides at zero; strictness fails")
    });
    Ok(Certificate::NotViolated {
        minimum,
        margin,
        degenerate,
        note,
    })
}

/// `τ − 1` with `τ = min ‖G_Λ y‖₁ s.t. gᵀy = 1`.
fn normalized_margin(g_lambda: &DMatrix<f64>, g: &[f64], opts: &LpOptions) -> Result<f64> {
    let (ell, k) = (g_lambda.nrows(), g_lambda.ncols());
    if g.iter().all(|v| v.abs() < 1e-14) {
        return Ok(f64::INFINITY);
    }
    let mut trips = Vec::new();
    for r in 0..ell {
        for c in 0..k {
            let v = g_lambda[(r, c)];
            if v != 0.0 {
                trips.push((r, c, -v));
                trips.push((r, k + c, v));
            }
        }
        trips.push((r, 2 * k + r, 1.0));
        trips.push((r, 2 * k + ell + r, -1.0));
    }
    for c in 0..k {
        trips.push((ell, c, g[c]));
        trips.push((ell, k + c, -g[c]));
    }
    let nvars = 2 * k + 2 * ell;
    let mm = SparseMatrix::from_triplets(ell + 1, nvars, &trips)?;
    let mut q = vec![0.0; ell];
    q.push(1.0);
    let mut cost = vec![0.0; nvars];
    cost[2 * k..].iter_mut().for_each(|v| *v = 1.0);
    let sol = lpsolve::solve(&StandardLP::new(mm, q, cost)?, opts)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective - 1.0),
        Status::Infeasible => Ok(f64::INFINITY),
        other => Err(Error::Solver(format!("margin program ended with {other:?}"))),
    }
}

/// Signs of `∇ū` on the complement of its cosupport.
pub fn sign_pattern(lattice: &Lattice, truth: &[f64], lambda: &Cosupport) -> Vec<f64> {
    let g = lattice.apply_gradient(truth);
    lambda
        .complement()
        .iter()
        .map(|&r| if g[r] > 0.0 { 1.0 } else { -1.0 })
        .collect()
}
