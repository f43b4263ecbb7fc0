use proptest::prelude::*;

use tvtomo::analysis::numerical_rank;
use tvtomo::{Cosupport, Lattice};

fn lattice() -> impl Strategy<Value = Lattice> {
    prop_oneof![
        (2usize..9, 2usize..9).prop_map(|(a, b)| Lattice::new(&[a, b]).unwrap()),
        (2usize..5, 2usize..5, 2usize..5).prop_map(|(a, b, c)| Lattice::new(&[a, b, c]).unwrap()),
    ]
}

fn lattice_and_edges() -> impl Strategy<Value = (Lattice, Vec<usize>)> {
    lattice().prop_flat_map(|l| (Just(l), proptest::collection::vec(0..l.p(), 0..=l.p())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subspace_dim_is_nullity((l, edges) in lattice_and_edges()) {
        let lambda = Cosupport::new(l, edges).unwrap();
        let rank = if lambda.ell() == 0 {
            0
        } else {
            numerical_rank(&l.gradient().select_rows(lambda.edges()), 1e-10).unwrap().rank
        };
        prop_assert_eq!(lambda.subspace_dim(), l.n() - rank);
    }

    #[test]
    fn cosupport_of_a_piecewise_constant_image((l, labels) in lattice().prop_flat_map(|l| (Just(l), proptest::collection::vec(0u8..3, l.n())))) {
        let u: Vec<f64> = labels.iter().map(|&x| x as f64).collect();
        let lambda = l.cosupport_of(&u, 0.0);
        let g = l.apply_gradient(&u);
        prop_assert_eq!(lambda.ell() + l.gradient_sparsity(&u, 0.0), l.p());
        prop_assert!(lambda.edges().iter().all(|&e| g[e] == 0.0));
        prop_assert!(lambda.complement().iter().all(|&e| g[e] != 0.0));
        // u lies in the cosparse subspace of its own cosupport
        prop_assert!(lambda.subspace_dim() >= 1);
        let tv: f64 = g.iter().map(|x| x.abs()).sum();
        prop_assert!((l.tv(&u) - tv).abs() < 1e-12);
    }

    #[test]
    fn cube_order_prefixes_are_nested(q in 2usize..6, dim in 2usize..=3) {
        let l = Lattice::cube(dim, q).unwrap();
        let order = l.cube_order();
        prop_assert_eq!(order.len(), l.n());
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..l.n()).collect::<Vec<_>>());
        for s in 1..=l.n() {
            let mut prefix = l.cube_order_prefix(s).unwrap();
            prefix.sort_unstable();
            let mut head = order[..s].to_vec();
            head.sort_unstable();
            prop_assert_eq!(prefix, head);
        }
        for w in order.windows(2) {
            prop_assert_eq!(l.cube_cmp(w[0], w[1]), std::cmp::Ordering::Less);
        }
    }

    #[test]
    fn tv_is_a_seminorm(l in lattice(), seed in any::<u64>(), c in -3.0f64..3.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..l.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..l.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        prop_assert!(l.tv(&sum) <= l.tv(&u) + l.tv(&v) + 1e-12);
        let scaled: Vec<f64> = u.iter().map(|a| c * a).collect();
        prop_assert!((l.tv(&scaled) - c.abs() * l.tv(&u)).abs() < 1e-9);
        let shifted: Vec<f64> = u.iter().map(|a| a + c).collect();
        prop_assert!((l.tv(&shifted) - l.tv(&u)).abs() < 1e-9);
    }
}

#[test]
fn edge_interior_of_the_full_grid_is_everything() {
    let l = Lattice::cube(3, 4).unwrap();
    let all: Vec<usize> = (0..l.n()).collect();
    assert_eq!(l.edge_interior(&all).unwrap().ell(), l.p());
    assert_eq!(l.edge_interior(&[0]).unwrap().ell(), 0);
}
