use proptest::prelude::*;

use tvtomo::lpsolve::{LpOptions, Status};
use tvtomo::phantom::{generate, shepp_logan_like, PhantomSpec};
use tvtomo::recovery::{
    recover, recover_with_solution, sign_pattern, uniqueness_certificate, zero_aux_count, Mode, RecoveryProblem,
};
use tvtomo::{Image, Lattice, ProjectionGeometry};

fn recover_tv(lattice: Lattice, dirs: usize, truth: &[f64], mode: Mode) -> tvtomo::recovery::RecoveryResult {
    let a = ProjectionGeometry::new(lattice.dim(), lattice.dims()[0], dirs).unwrap().build();
    let problem = RecoveryProblem::from_truth(lattice, a, truth, mode).unwrap();
    recover(&problem, None, &LpOptions::default()).unwrap()
}

#[test]
fn sparse_phantom_is_recovered_exactly() {
    let lattice = Lattice::cube(2, 32).unwrap();
    let mut spec = PhantomSpec::new(lattice, 0.03, 4);
    spec.contained = true;
    let ph = generate(&spec).unwrap();
    let r = recover_tv(lattice, 4, ph.image.values(), Mode::TvUnknown);
    assert_eq!(r.solver.status, Status::Optimal);
    assert_eq!(r.success, Some(true), "error {:?}", r.l2_error);
    assert!((r.tv - r.tv_truth.unwrap()).abs() < 1e-6);
}

#[test]
fn known_cosupport_needs_fewer_measurements() {
    // a dense phantom fails with unknown cosupport but is pinned down when
    // the cosupport is given
    let lattice = Lattice::cube(2, 24).unwrap();
    let mut spec = PhantomSpec::new(lattice, 0.25, 1);
    spec.contained = true;
    let ph = generate(&spec).unwrap();
    let unknown = recover_tv(lattice, 3, ph.image.values(), Mode::TvUnknown);
    let known = recover_tv(lattice, 3, ph.image.values(), Mode::TvKnown(ph.image.cosupport()));
    assert_eq!(unknown.success, Some(false));
    assert_eq!(known.success, Some(true));
}

#[test]
fn head_phantom_in_3d() {
    let lattice = Lattice::cube(3, 10).unwrap();
    let head = shepp_logan_like(&lattice, tvtomo::phantom::HEAD_LAYER_COUNT).unwrap();
    let r = recover_tv(lattice, 4, head.values(), Mode::TvUnknown);
    assert_eq!(r.solver.status, Status::Optimal);
    assert!(r.tv <= r.tv_truth.unwrap() + 1e-6);
}

#[test]
fn auxiliary_variables_at_zero_match_the_cosupport() {
    let lattice = Lattice::cube(2, 16).unwrap();
    let ph = (0..)
        .find_map(|seed| {
            let mut spec = PhantomSpec::new(lattice, 0.06, seed);
            spec.contained = true;
            generate(&spec).ok()
        })
        .unwrap();
    let a = ProjectionGeometry::new(2, 16, 5).unwrap().build();
    let problem = RecoveryProblem::from_truth(lattice, a, ph.image.values(), Mode::TvUnknown).unwrap();
    let (r, sol) = recover_with_solution(&problem, None, &LpOptions::default()).unwrap();
    assert_eq!(r.success, Some(true));
    // on an edge of the cosupport both split variables vanish, elsewhere one does
    let zeros = zero_aux_count(&sol.w, lattice.n(), lattice.p(), 1e-7);
    assert_eq!(zeros, 2 * ph.ell + ph.k);
}

#[test]
fn certificate_agrees_with_recovery_on_easy_cases() {
    let lattice = Lattice::cube(2, 8).unwrap();
    let a = ProjectionGeometry::new(2, 8, 4).unwrap().build();
    let grad = lattice.gradient();
    // a single interior block is recovered; the certificate must not be violated
    let mut u = vec![0.0; 64];
    for i in 3..5 {
        for j in 3..5 {
            u[i * 8 + j] = 1.0;
        }
    }
    let img = Image::new(lattice, u.clone()).unwrap();
    let lambda = img.cosupport();
    let cert = uniqueness_certificate(&a, &grad, &lambda, &sign_pattern(&lattice, &u, &lambda)).unwrap();
    let r = recover_tv(lattice, 4, &u, Mode::TvUnknown);
    assert_eq!(r.success, Some(true));
    assert!(!cert.is_violated(), "{cert:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn recovered_image_is_consistent_with_the_data(seed in 0u64..1000, rho in 0.05f64..0.4, dirs in 3usize..=6) {
        let lattice = Lattice::cube(2, 12).unwrap();
        let Ok(ph) = generate(&PhantomSpec::new(lattice, rho, seed)) else { return Ok(()) };
        let a = ProjectionGeometry::new(2, 12, dirs).unwrap().build();
        let problem = RecoveryProblem::from_truth(lattice, a.clone(), ph.image.values(), Mode::TvUnknown).unwrap();
        let r = recover(&problem, None, &LpOptions::default()).unwrap();
        prop_assert_eq!(r.solver.status, Status::Optimal);
        // the minimizer fits the projections and never has more TV than the truth
        let au = a.mul_vec(&r.u);
        let scale = 1.0 + problem.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(au.iter().zip(&problem.b).all(|(x, y)| (x - y).abs() <= 1e-7 * scale));
        prop_assert!(r.tv <= r.tv_truth.unwrap() + 1e-6 * (1.0 + r.tv));
        prop_assert!(r.u.iter().all(|&v| v >= -1e-9));
    }
}
