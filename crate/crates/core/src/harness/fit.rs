use crate::bounds::critical_rho;
use crate::error::{Error, Result};
use crate::geometry::ProjectionGeometry;
use crate::lattice::Lattice;

use super::PhaseGrid;

// keeps the slope finite when the data are perfectly separated
const SLOPE_PENALTY: f64 = 1e-4;

/// The `ρ` at which a logistic fit of success against `ρ` crosses one half.
///
/// `points` are `(ρ, successes, trials)`. The fit is a maximum-likelihood
/// logistic regression on standardized `ρ` with a tiny ridge on the slope.
/// `None` when there is no decreasing transition inside the sampled range
/// (all successes, all failures, or an increasing fit).
pub fn logistic_crossing(points: &[(f64, usize, usize)]) -> Option<f64> {
    let pts: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.2 > 0)
        .map(|&(r, s, t)| (r, s as f64, t as f64))
        .collect();
    let total: f64 = pts.iter().map(|p| p.2).sum();
    let succ: f64 = pts.iter().map(|p| p.1).sum();
    if pts.len() < 2 || succ == 0.0 || succ == total {
        return None;
    }
    let mean = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / total;
    let var = pts.iter().map(|p| (p.0 - mean).powi(2) * p.2).sum::<f64>() / total;
    let scale = var.sqrt();
    if !(scale > 0.0) {
        return None;
    }
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        // gradient and negative Hessian of the penalized log-likelihood
        let (mut ga, mut gb) = (0.0, -SLOPE_PENALTY * b);
        let (mut haa, mut hab, mut hbb) = (0.0, 0.0, SLOPE_PENALTY);
        for &(r, s, t) in &pts {
            let x = (r - mean) / scale;
            let p = 1.0 / (1.0 + (-(a + b * x)).exp());
            let w = t * p * (1.0 - p);
            ga += s - t * p;
            gb += (s - t * p) * x;
            haa += w;
            hab += w * x;
            hbb += w * x * x;
        }
        let det = haa * hbb - hab * hab;
        if !(det > 0.0) {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        a += da;
        b += db;
        if da.abs() + db.abs() < 1e-12 {
            break;
        }
    }
    if !(b < 0.0) {
        return None;
    }
    let crossing = mean + scale * (-a / b);
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    (crossing.is_finite() && crossing >= lo && crossing <= hi).then_some(crossing)
}

/// Theoretical critical `ρ` for a `d`-sided setup: the gradient sparsity at
/// which the uniqueness bound needs exactly as many measurements as the
/// projection matrix has rows.
pub fn theory_rho(dim: usize, d: usize, num_dirs: usize, cosupport_known: bool) -> Result<Option<f64>> {
    let lattice = Lattice::cube(dim, d)?;
    let m = ProjectionGeometry::new(dim, d, num_dirs)?.num_rays() as f64;
    critical_rho(&lattice, m, cosupport_known)
}

/// Least-squares `α` in `ρ_emp(d) ≈ α · ρ_theory(d)` over the values of `d`
/// with a detected transition.
pub fn fit_alpha(grid: &PhaseGrid, cosupport_known: bool) -> Result<f64> {
    let plan = &grid.plan;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut used = 0;
    for (i, &d) in plan.d_values.iter().enumerate() {
        let Some(Some(emp)) = grid.transition_rho_per_d.get(i) else {
            continue;
        };
        let Some(th) = theory_rho(plan.dim, d, plan.num_dirs, cosupport_known)? else {
            continue;
        };
        num += emp * th;
        den += th * th;
        used += 1;
    }
    if used < 2 || den == 0.0 {
        return Err(Error::NoTransition(format!(
            "{used} value(s) of d with a detected transition, need 2"
        )));
    }
    Ok(num / den)
}
