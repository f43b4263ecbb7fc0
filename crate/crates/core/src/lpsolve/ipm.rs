//! Mehrotra predictor-corrector interior-point method.

use super::kkt::KktSystem;
use super::{dot, norm_inf, LPSolution, LpOptions, Method, StandardLP, Status};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.9995;
// iterates beyond this size mean the primal or dual problem is infeasible
const BLOWUP: f64 = 1e12;
const H_MIN: f64 = 1e-30;
const H_MAX: f64 = 1e30;

pub(crate) fn solve(lp: &StandardLP, opts: &LpOptions) -> Result<LPSolution> {
    let m = &lp.m;
    let (r, n) = (lp.num_rows(), lp.num_vars());
    let q_scale = 1.0 + norm_inf(&lp.q);
    let c_scale = 1.0 + norm_inf(&lp.c);
    let mut kkt = KktSystem::new(m)?;

    // starting point from the least-squares solutions, shifted inside
    kkt.factor(&vec![1.0; n])?;
    let (mut x, _) = kkt.solve(&vec![0.0; n], &lp.q);
    let (_, mut y) = kkt.solve(&lp.c, &vec![0.0; r]);
    let mty = m.tr_mul_vec(&y);
    let mut z: Vec<f64> = lp.c.iter().zip(&mty).map(|(c, a)| c - a).collect();
    let shift_x = (-1.5 * x.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    let shift_z = (-1.5 * z.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    x.iter_mut().for_each(|v| *v += shift_x);
    z.iter_mut().for_each(|v| *v += shift_z);
    let xz = dot(&x, &z);
    let (sx, sz): (f64, f64) = (x.iter().sum(), z.iter().sum());
    let bump_x = if sz > 0.0 { 0.5 * xz / sz } else { 0.0 };
    let bump_z = if sx > 0.0 { 0.5 * xz / sx } else { 0.0 };
    x.iter_mut().for_each(|v| *v = (*v + bump_x).max(1e-4));
    z.iter_mut().for_each(|v| *v = (*v + bump_z).max(1e-4));

    let mut status = Status::IterLimit;
    let mut iterations = 0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    for iter in 0..opts.max_iters {
        iterations = iter;
        let mx = m.mul_vec(&x);
        let rp: Vec<f64> = lp.q.iter().zip(&mx).map(|(a, b)| a - b).collect();
        let mty = m.tr_mul_vec(&y);
        let rd: Vec<f64> = (0..n).map(|j| lp.c[j] - mty[j] - z[j]).collect();
        let pobj = dot(&lp.c, &x);
        let dobj = dot(&lp.q, &y);
        let rp_rel = norm_inf(&rp) / q_scale;
        let rd_rel = norm_inf(&rd) / c_scale;
        let gap_rel = (pobj - dobj).abs() / (1.0 + pobj.abs());
        let merit = rp_rel.max(rd_rel).max(gap_rel);
        log::trace!("ipm {iter:3} rp={rp_rel:.2e} rd={rd_rel:.2e} gap={gap_rel:.2e}");
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone(), z.clone()));
        }
        if rp_rel <= opts.feas_tol && rd_rel <= opts.feas_tol && gap_rel <= opts.gap_tol {
            status = Status::Optimal;
            break;
        }
        if norm_inf(&x) > BLOWUP * q_scale.max(c_scale) {
            status = Status::Unbounded;
            break;
        }
        if norm_inf(&y) > BLOWUP * q_scale.max(c_scale) {
            status = Status::Infeasible;
            break;
        }
        let mu = dot(&x, &z) / n as f64;

        // clamped so a diverging iterate cannot put 0 or ∞ on the diagonal
        let h: Vec<f64> = x
            .iter()
            .zip(&z)
            .map(|(a, b)| (b / a).clamp(H_MIN, H_MAX))
            .collect();
        if let Err(e) = kkt.factor(&h) {
            log::debug!("interior point gave up at iteration {iter}: {e}");
            break;
        }

        // predictor
        let rc: Vec<f64> = x.iter().zip(&z).map(|(a, b)| -a * b).collect();
        let (dx_a, _, dz_a) = newton(&mut kkt, lp, &x, &rp, &rd, &rc);
        let ap = max_step(&x, &dx_a).min(1.0);
        let ad = max_step(&z, &dz_a).min(1.0);
        let mu_aff = (0..n)
            .map(|j| (x[j] + ap * dx_a[j]) * (z[j] + ad * dz_a[j]))
            .sum::<f64>()
            / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<f64> = (0..n)
            .map(|j| sigma * mu - x[j] * z[j] - dx_a[j] * dz_a[j])
            .collect();
        let (dx, dy, dz) = newton(&mut kkt, lp, &x, &rp, &rd, &rc);
        let ap = (STEP_FRACTION * max_step(&x, &dx)).min(1.0);
        let ad = (STEP_FRACTION * max_step(&z, &dz)).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            log::debug!("interior point stalled at iteration {iter}");
            break;
        }
        for j in 0..n {
            x[j] += ap * dx[j];
            z[j] += ad * dz[j];
        }
        for i in 0..r {
            y[i] += ad * dy[i];
        }
        iterations = iter + 1;
    }

    if status == Status::IterLimit {
        if let Some((_, bx, by, bz)) = best {
            x = bx;
            y = by;
            z = bz;
        }
    }
    // clip the tiny negative noise the step rule cannot produce but
    // refinement can
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(LPSolution::from_parts(lp, status, x, y, z, iterations, Method::InteriorPoint))
}

fn newton(
    kkt: &mut KktSystem,
    lp: &StandardLP,
    x: &[f64],
    rp: &[f64],
    rd: &[f64],
    rc: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    // eliminating Δz = X⁻¹(rc − ZΔx) leaves −HΔx + MᵀΔy = rd − X⁻¹rc,
    // MΔx = rp; Δz is then taken from the dual equation so that any solve
    // error lands in complementarity rather than in feasibility
    let f: Vec<f64> = (0..x.len()).map(|j| rd[j] - rc[j] / x[j]).collect();
    let (dx, dy) = kkt.solve(&f, rp);
    let mtdy = lp.m.tr_mul_vec(&dy);
    let dz: Vec<f64> = rd.iter().zip(&mtdy).map(|(a, b)| a - b).collect();
    (dx, dy, dz)
}

/// Largest `α` with `v + α·dv ≥ 0` (infinite if `dv ≥ 0`).
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &b)| b < 0.0)
        .map(|(&a, &b)| -a / b)
        .fold(f64::INFINITY, f64::min)
}
