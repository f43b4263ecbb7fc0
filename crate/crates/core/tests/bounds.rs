use proptest::prelude::*;

use tvtomo::bounds::{
    critical_cosparsity, interior_profile, kappa_empirical, kappa_upper, measurement_bound, s_asymptotic_3d, s_of_ell,
    BoundReport,
};
use tvtomo::Lattice;

proptest! {
    #[test]
    fn inversion_identity(dim in 2usize..=3, log_ell in 2.0f64..14.0) {
        let ell = log_ell.exp();
        prop_assume!(ell > if dim == 2 { 4.0 } else { 54.0 });
        let s = s_of_ell(dim, ell).unwrap();
        prop_assert!(((interior_profile(dim, s) - ell) / ell).abs() < 1e-9);
        if dim == 3 {
            // the simplified estimate is close and not above the root
            let approx = s_asymptotic_3d(ell);
            prop_assert!(approx <= s * (1.0 + 1e-12));
            prop_assert!((s - approx) / s < 0.05);
        }
    }

    #[test]
    fn bounds_shrink_with_cosparsity(dim in 2usize..=3, d in 6usize..40, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let l = Lattice::cube(dim, d).unwrap();
        let lo = if dim == 2 { 4.0 } else { 54.0 };
        let span = l.p() as f64 - lo;
        let (x, y) = (lo + 1.0 + a * (span - 1.0), lo + 1.0 + b * (span - 1.0));
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(kappa_upper(dim, l.n(), y).unwrap() <= kappa_upper(dim, l.n(), x).unwrap() + 1e-9);
        for known in [false, true] {
            prop_assert!(
                measurement_bound(dim, l.n(), y, known).unwrap() <= measurement_bound(dim, l.n(), x, known).unwrap() + 1e-9
            );
        }
        prop_assert!(measurement_bound(dim, l.n(), x, true).unwrap() < measurement_bound(dim, l.n(), x, false).unwrap());
    }

    #[test]
    fn critical_cosparsity_meets_the_bound(d in 10usize..60, frac in 0.05f64..0.95, known in any::<bool>()) {
        let l = Lattice::cube(2, d).unwrap();
        let lo = measurement_bound(2, l.n(), l.p() as f64, known).unwrap();
        let hi = measurement_bound(2, l.n(), 5.0, known).unwrap();
        let m = lo + frac * (hi - lo);
        let ell = critical_cosparsity(&l, m, known).unwrap().unwrap();
        prop_assert!((measurement_bound(2, l.n(), ell, known).unwrap() - m).abs() < 1e-6 * m);
    }
}

#[test]
fn empirical_kappa_respects_the_bound() {
    for (dim, d) in [(2, 6), (3, 4)] {
        let l = Lattice::cube(dim, d).unwrap();
        let lo = if dim == 2 { 5 } else { 55 };
        for ell in (lo..=l.p()).step_by(7) {
            let emp = kappa_empirical(&l, ell, 20, 3).unwrap();
            assert!(emp <= kappa_upper(dim, l.n(), ell as f64).unwrap() + 1e-9, "{dim}D ℓ={ell}");
        }
    }
}

#[test]
fn report_is_consistent() {
    let l = Lattice::cube(2, 32).unwrap();
    let r = BoundReport::new(&l, 1500).unwrap();
    assert!(r.m_known < r.m_unknown);
    assert!(BoundReport::new(&l, 3).is_err());
}

#[test]
fn domain_errors() {
    assert!(kappa_upper(2, 100, 4.0).is_err());
    assert!(kappa_upper(3, 100, 54.0).is_err());
    assert!(kappa_upper(4, 100, 100.0).is_err());
    assert!(measurement_bound(2, 100, f64::NAN, false).is_err());
}
