//! Cosparsity calculus for the gradient on regular grids.
//!
//! Upper bounds on the largest cosparse subspace dimension `κ(ℓ)`, the
//! edge-isoperimetric inequality they come from, and the measurement counts
//! that guarantee uniqueness for known and unknown cosupports. The closed
//! forms are only stated for `ℓ > 4` (2D) and `ℓ > 54` (3D); outside that
//! range the functions return [`Error::Domain`] instead of clamping.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Cosupport, Lattice};

/// Smallest cosparsity for which the closed forms hold, exclusive.
pub fn validity_threshold(dim: usize) -> Result<f64> {
    match dim {
        2 => Ok(4.0),
        3 => Ok(54.0),
        _ => Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

fn check_domain(dim: usize, ell: f64) -> Result<()> {
    let lo = validity_threshold(dim)?;
    if !(ell > lo) || !ell.is_finite() {
        return Err(Error::Domain(format!(
            "cosparsity {ell} must exceed {lo} in {dim}D"
        )));
    }
    Ok(())
}

// the cube-root expression shared by the 3D bounds
fn bracket_3d(ell: f64) -> f64 {
    ell + (3.0 * ell * ell).cbrt() + 2.0 * (ell / 3.0).cbrt()
}

/// Upper bound on `κ(ℓ)`, the largest dimension of `N(∇_Λ)` over `|Λ| ≥ ℓ`.
pub fn kappa_upper(dim: usize, n: usize, ell: f64) -> Result<f64> {
    check_domain(dim, ell)?;
    let n = n as f64;
    Ok(match dim {
        2 => n - 0.5 * (ell + (1.0 + 2.0 * ell).sqrt()) + 0.5,
        _ => n - bracket_3d(ell) / 3.0 + 2.0 / 3.0,
    })
}

/// Number of vertices `s` whose cube-order prefix has exactly `ℓ` interior
/// edges according to the continuous isoperimetric profile, i.e. the root
/// of `D·s·(1 − s^{−1/D}) = ℓ`.
pub fn s_of_ell(dim: usize, ell: f64) -> Result<f64> {
    validity_threshold(dim)?;
    if !(ell >= 0.0) || !ell.is_finite() {
        return Err(Error::Domain(format!("cosparsity {ell} must be non-negative")));
    }
    Ok(match dim {
        2 => 0.5 * (1.0 + ell + (1.0 + 2.0 * ell).sqrt()),
        _ => {
            let c = 2f64.cbrt();
            let t = s_t(ell);
            ((1.0 + 2.0 * ell) * c / t + 1.0 + ell + t / c) / 3.0
        }
    })
}

/// The auxiliary `t(ℓ)` of the 3D inversion.
pub fn s_t(ell: f64) -> f64 {
    (2.0 + 6.0 * ell + 3.0 * ell * ell + ((4.0 + 9.0 * ell) * ell.powi(3)).sqrt()).cbrt()
}

/// Simplified lower estimate of the 3D `s(ℓ)`, exact up to `O(ℓ^{−1/3})`.
pub fn s_asymptotic_3d(ell: f64) -> f64 {
    (1.0 + bracket_3d(ell)) / 3.0
}

/// `D·s·(1 − s^{−1/D})`, the first branch of the isoperimetric bound.
pub fn interior_profile(dim: usize, s: f64) -> f64 {
    let d = dim as f64;
    d * s * (1.0 - s.powf(-1.0 / d))
}

/// Right-hand side of the uniqueness condition on the number of
/// measurements, before rounding.
pub fn measurement_bound(dim: usize, n: usize, ell: f64, cosupport_known: bool) -> Result<f64> {
    check_domain(dim, ell)?;
    let n = n as f64;
    let deficit = match dim {
        2 => ell + (2.0 * ell + 1.0).sqrt() - 1.0,
        _ => 2.0 * (bracket_3d(ell) - 2.0) / 3.0,
    };
    Ok(if cosupport_known {
        n - 0.5 * deficit
    } else {
        2.0 * n - deficit
    })
}

/// Smallest integer number of measurements satisfying the uniqueness
/// condition (the ceiling of [`measurement_bound`]).
pub fn measurement_threshold(dim: usize, n: usize, ell: f64, cosupport_known: bool) -> Result<i64> {
    Ok(measurement_bound(dim, n, ell, cosupport_known)?.ceil() as i64)
}

/// Cosparsity at which [`measurement_bound`] equals `m`, found by bisection
/// on `(threshold, p]`. `None` if even `ℓ = p` needs more than `m`
/// measurements; `Some(threshold)` if every valid `ℓ` needs fewer.
pub fn critical_cosparsity(lattice: &Lattice, m: f64, cosupport_known: bool) -> Result<Option<f64>> {
    let (dim, n, p) = (lattice.dim(), lattice.n(), lattice.p() as f64);
    let lo0 = validity_threshold(dim)?;
    let f = |ell: f64| measurement_bound(dim, n, ell, cosupport_known).map(|b| b - m);
    if f(p)? > 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo0 + 1e-12, p);
    if f(lo)? <= 0.0 {
        return Ok(Some(lo0));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Relative gradient sparsity `ρ = (p − ℓ)/n` at which `m` measurements sit
/// exactly on the uniqueness threshold.
pub fn critical_rho(lattice: &Lattice, m: f64, cosupport_known: bool) -> Result<Option<f64>> {
    let (n, p) = (lattice.n() as f64, lattice.p() as f64);
    Ok(critical_cosparsity(lattice, m, cosupport_known)?.map(|ell| (p - ell) / n))
}

/// Bollobás–Leader bound on the edge interior of an `s`-vertex subset of
/// the grid `[q]^d`.
pub fn bollobas_bound(q: usize, d: usize, s: usize) -> Result<f64> {
    if q < 3 || d < 2 {
        return Err(Error::Domain(format!("need q ≥ 3 and d ≥ 2, got q={q}, d={d}")));
    }
    let total = (q as f64).powi(d as i32);
    if s < 1 || s as f64 > total {
        return Err(Error::Domain(format!("subset size {s} outside [1, {total}]")));
    }
    let (s, df, qf) = (s as f64, d as f64, q as f64);
    let first = interior_profile(d, s);
    let second = df * total * (1.0 - 1.0 / qf) * (1.0 - (1.0 - s / total).powf(1.0 - 1.0 / df));
    Ok(first.max(second))
}

/// Mean of `dim N(∇_Λ)` over `trials` uniformly random cosupports of size
/// `ell`. Trials run in parallel, each on its own ChaCha stream, so the
/// result does not depend on the thread count.
pub fn kappa_empirical(lattice: &Lattice, ell: usize, trials: usize, seed: u64) -> Result<f64> {
    let p = lattice.p();
    if ell > p {
        return Err(Error::invalid(format!("cosparsity {ell} exceeds p = {p}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let total: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let edges = index::sample(&mut rng, p, ell).into_vec();
            Cosupport::new(*lattice, edges)
                .expect("sampled edges are in range")
                .subspace_dim()
        })
        .sum();
    Ok(total as f64 / trials as f64)
}

/// The headline numbers for one `(lattice, ℓ)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub dim: usize,
    pub n: usize,
    pub p: usize,
    pub ell: usize,
    pub k: usize,
    pub kappa_upper: f64,
    pub s: f64,
    pub m_known: i64,
    pub m_unknown: i64,
}

impl BoundReport {
    pub fn new(lattice: &Lattice, ell: usize) -> Result<Self> {
        let (dim, n, p) = (lattice.dim(), lattice.n(), lattice.p());
        if ell > p {
            return Err(Error::invalid(format!("cosparsity {ell} exceeds p = {p}")));
        }
        let l = ell as f64;
        Ok(BoundReport {
            dim,
            n,
            p,
            ell,
            k: p - ell,
            kappa_upper: kappa_upper(dim, n, l)?,
            s: s_of_ell(dim, l)?,
            m_known: measurement_threshold(dim, n, l, true)?,
            m_unknown: measurement_threshold(dim, n, l, false)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        let v = kappa_upper(2, 100, 41.0).unwrap();
        assert!((v - (100.0 - (41.0 + 83f64.sqrt()) / 2.0 + 0.5)).abs() < 1e-12);
        assert!((v - 75.445).abs() < 1e-3);
        let v = kappa_upper(3, 1000, 100.0).unwrap();
        assert!((v - 954.83).abs() < 5e-3, "{v}");
        assert!(matches!(kappa_upper(2, 100, 4.0), Err(Error::Domain(_))));
        assert!(matches!(kappa_upper(3, 1000, 54.0), Err(Error::Domain(_))));
    }

    #[test]
    fn s_examples() {
        assert_eq!(s_of_ell(2, 4.0).unwrap(), 4.0);
        assert_eq!(s_of_ell(2, 0.0).unwrap(), 1.0);
        assert!((s_of_ell(3, 54.0).unwrap() - 27.0).abs() < 1e-9);
        assert!((s_of_ell(3, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bollobas_examples() {
        assert!((bollobas_bound(3, 2, 9).unwrap() - 12.0).abs() < 1e-12);
        assert!((interior_profile(2, 4.0) - 4.0).abs() < 1e-12);
        assert!((interior_profile(3, 27.0) - 54.0).abs() < 1e-12);
        assert!(bollobas_bound(2, 2, 1).is_err());
        assert!(bollobas_bound(3, 2, 10).is_err());
    }

    #[test]
    fn known_needs_fewer_than_unknown() {
        for ell in [10.0, 100.0, 1000.0] {
            let k = measurement_bound(2, 1600, ell, true).unwrap();
            let u = measurement_bound(2, 1600, ell, false).unwrap();
            assert!(k < u);
        }
    }

    #[test]
    fn critical_cosparsity_inverts_the_bound() {
        let l = Lattice::cube(2, 40).unwrap();
        let ell = critical_cosparsity(&l, 159.0, false).unwrap().unwrap();
        let back = measurement_bound(2, 1600, ell, false).unwrap();
        assert!((back - 159.0).abs() < 1e-8);
        // more measurements than unknowns: every valid cosparsity works
        assert_eq!(critical_cosparsity(&l, 1e6, false).unwrap(), Some(4.0));
    }

    #[test]
    fn empirical_extremes() {
        let l = Lattice::cube(2, 6).unwrap();
        assert_eq!(kappa_empirical(&l, 0, 5, 1).unwrap(), 36.0);
        assert_eq!(kappa_empirical(&l, l.p(), 5, 1).unwrap(), 1.0);
    }
}
