use proptest::prelude::*;

use tvtomo::geometry::perturb;
use tvtomo::{mtx, Perturbation, ProjectionGeometry};

fn setup() -> impl Strategy<Value = (usize, usize, usize)> {
    prop_oneof![
        (4usize..40, 3usize..=8).prop_map(|(d, k)| (2, d, k)),
        (2usize..9, 3usize..=4).prop_map(|(d, k)| (3, d, k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_pixel_on_one_ray_per_direction((dim, d, k) in setup()) {
        let g = ProjectionGeometry::new(dim, d, k).unwrap();
        let a = g.build();
        prop_assert_eq!(a.nrows(), g.num_rays());
        prop_assert!(a.is_binary());
        prop_assert!(a.col_counts().iter().all(|&c| c == k));
        // each direction's rays partition the image
        let sums = a.row_sums();
        let mut offset = 0;
        for count in g.ray_counts() {
            let total: f64 = sums[offset..offset + count].iter().sum();
            prop_assert_eq!(total as usize, g.n());
            prop_assert!(sums[offset..offset + count].iter().all(|&s| s >= 1.0));
            offset += count;
        }
    }

    #[test]
    fn rays_are_translation_consistent(d in 4usize..30, k in 3usize..=8) {
        // shifting a pixel along a direction keeps it on the same ray
        let dirs = tvtomo::geometry::DIRECTIONS_2D;
        let a = ProjectionGeometry::new(2, d, k).unwrap().build().transpose();
        let ray_of = |i: usize, j: usize, r: usize| -> usize {
            let (cols, _) = a.row(i * d + j);
            cols[r]
        };
        for (r, dir) in dirs[..k].iter().enumerate() {
            let (di, dj) = (dir[0], dir[1]);
            for i in 0..d as i64 {
                for j in 0..d as i64 {
                    let (i2, j2) = (i + di, j + dj);
                    if (0..d as i64).contains(&i2) && (0..d as i64).contains(&j2) {
                        prop_assert_eq!(
                            ray_of(i as usize, j as usize, r),
                            ray_of(i2 as usize, j2 as usize, r)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn perturbation_keeps_the_pattern(d in 4usize..20, k in 3usize..=6, seed in any::<u64>()) {
        let a = ProjectionGeometry::new(2, d, k).unwrap().build();
        let p = perturb(&a, seed, Perturbation::default()).unwrap();
        let pattern = |m: &tvtomo::SparseMatrix| m.triplets().map(|(i, j, _)| (i, j)).collect::<Vec<_>>();
        prop_assert_eq!(pattern(&a), pattern(&p));
        prop_assert!(p.values().iter().all(|&v| v > 0.9 && v < 1.1));
        let e = perturb(&a, seed, Perturbation::Epsilon { eps: 0.05 }).unwrap();
        prop_assert!(e.col_norms().iter().all(|&n| (n - 1.0).abs() < 1e-12));
        // same seed, same matrix
        prop_assert_eq!(p, perturb(&a, seed, Perturbation::default()).unwrap());
    }

    #[test]
    fn matrix_market_round_trip(d in 4usize..12, k in 3usize..=8, seed in any::<u64>()) {
        let a = perturb(&ProjectionGeometry::new(2, d, k).unwrap().build(), seed, Perturbation::default()).unwrap();
        let mut buf = Vec::new();
        mtx::write(&mut buf, &a).unwrap();
        let back = mtx::read(&buf[..]).unwrap();
        prop_assert_eq!(a, back);
    }
}

#[test]
fn perturbation_strings() {
    let p: Perturbation = "interval:0.8,1.2".parse().unwrap();
    assert_eq!(p, Perturbation::Interval { lo: 0.8, hi: 1.2 });
    assert_eq!(p.to_string().parse::<Perturbation>().unwrap(), p);
    assert_eq!("epsilon:0.1".parse::<Perturbation>().unwrap(), Perturbation::Epsilon { eps: 0.1 });
    assert!("interval:1".parse::<Perturbation>().is_err());
    assert!("gauss:1".parse::<Perturbation>().is_err());
}

#[test]
fn rejects_unsupported_setups() {
    assert!(ProjectionGeometry::new(2, 3, 3).is_err());
    assert!(ProjectionGeometry::new(2, 10, 9).is_err());
    assert!(ProjectionGeometry::new(3, 5, 5).is_err());
    assert!(ProjectionGeometry::new(4, 5, 3).is_err());
}
