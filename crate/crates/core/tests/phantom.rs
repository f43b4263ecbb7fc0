use proptest::prelude::*;

use tvtomo::phantom::{generate, paint, read_image, shepp_logan_like, write_image, PhantomSpec, HEAD_LAYER_COUNT};
use tvtomo::{Error, Lattice};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hits_the_target_density(dim in 2usize..=3, seed in any::<u64>(), rho in 0.02f64..0.3, contained in any::<bool>()) {
        let d = if dim == 2 { 32 } else { 12 };
        let lattice = Lattice::cube(dim, d).unwrap();
        let mut spec = PhantomSpec::new(lattice, rho, seed);
        spec.contained = contained;
        match generate(&spec) {
            Ok(ph) => {
                let target = rho * lattice.n() as f64;
                prop_assert!((ph.k as f64 - target).abs() <= (0.05 * target).max(0.5));
                prop_assert_eq!(ph.k, ph.image.k());
                prop_assert_eq!(ph.k + ph.ell, lattice.p());
                prop_assert!((ph.rho - ph.k as f64 / lattice.n() as f64).abs() < 1e-12);
                // painting the recorded shapes reproduces the image
                prop_assert_eq!(paint(&lattice, spec.background, &ph.shapes), ph.image.values().to_vec());
                prop_assert!(ph.image.values().iter().all(|v| *v == 0.0 || spec.intensity_levels.contains(v)));
                if contained {
                    for v in 0..lattice.n() {
                        let c = lattice.coords(v);
                        let border = (0..dim).any(|a| c[a] == 0 || c[a] == d - 1);
                        prop_assert!(!border || ph.image.values()[v] == spec.background);
                    }
                }
            }
            Err(Error::PhantomUnreachable { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn same_seed_same_phantom(seed in any::<u64>()) {
        let spec = PhantomSpec::new(Lattice::cube(2, 20).unwrap(), 0.1, seed);
        let (a, b) = (generate(&spec), generate(&spec));
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.image.values(), b.image.values()),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "nondeterministic outcome"),
        }
    }
}

#[test]
fn head_phantom_is_three_dimensional() {
    assert!(shepp_logan_like(&Lattice::cube(2, 16).unwrap(), HEAD_LAYER_COUNT).is_err());
    assert!(shepp_logan_like(&Lattice::cube(3, 16).unwrap(), HEAD_LAYER_COUNT + 1).is_err());
    let head = shepp_logan_like(&Lattice::cube(3, 16).unwrap(), HEAD_LAYER_COUNT).unwrap();
    assert!(head.k() > 0 && head.values().iter().any(|&v| v > 0.0));
}

#[test]
fn rejects_bad_specs() {
    let l = Lattice::cube(2, 10).unwrap();
    assert!(generate(&PhantomSpec::new(l, -0.1, 0)).is_err());
    assert!(generate(&PhantomSpec::new(l, 5.0, 0)).is_err());
    assert!(generate(&PhantomSpec::new(l, 0.1, 0).with_levels(vec![])).is_err());
    assert!(generate(&PhantomSpec::new(l, 0.1, 0).with_background(-1.0)).is_err());
}

#[test]
fn image_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let l = Lattice::cube(3, 16).unwrap();
    let head = shepp_logan_like(&l, HEAD_LAYER_COUNT).unwrap();
    let prefix = dir.path().join("head");
    write_image(&prefix, &head, None).unwrap();
    let written: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    let image_file = written.iter().find(|p| p.extension().is_some_and(|e| e == "json")).unwrap();
    let back = read_image(image_file).unwrap();
    assert_eq!(back.values(), head.values());
    assert_eq!(back.lattice(), head.lattice());
}
