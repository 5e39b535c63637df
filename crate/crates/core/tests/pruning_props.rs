mod common;

use common::*;
use invset::mpc::SampleSet;
use invset::pruning::{in_convex_hull, prune, prune_exact};
use proptest::prelude::*;

fn cloud(seed: u64, n: usize, dim: usize) -> SampleSet {
    let mut r = rng(seed);
    let mut pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| uniform(&mut r, -1.0, 1.0)).collect()).collect();
    pts.push(vec![0.0; dim]);
    SampleSet::new(dim, pts).unwrap().symmetrize()
}

fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn planar_prune_is_hull(seed in 0u64..10_000, n in 3usize..100) {
        let s = cloud(seed, n, 2);
        let (out, _) = prune(&s, 1e-12).unwrap();
        let pts: Vec<[f64; 2]> = s.points().iter().map(|p| [p[0], p[1]]).collect();
        let want: Vec<Vec<f64>> = brute_hull(&pts).into_iter().map(|p| p.to_vec()).collect();
        prop_assert_eq!(sorted(out.points().to_vec()), want);
    }

    #[test]
    fn prune_keeps_symmetry_and_is_idempotent(seed in 0u64..10_000, n in 5usize..60, dim in 2usize..4) {
        let s = cloud(seed, n, dim);
        let (out, _) = prune(&s, 1e-12).unwrap();
        prop_assert!(out.is_symmetric());
        for p in out.points() {
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            prop_assert!(out.points().contains(&neg));
        }
        let again = prune_exact(&out, 1e-9).unwrap();
        prop_assert_eq!(sorted(again.points().to_vec()), sorted(out.points().to_vec()));
    }

    #[test]
    fn removed_points_lie_in_survivor_hull(seed in 0u64..10_000, n in 5usize..40) {
        let s = cloud(seed, n, 3);
        let (out, _) = prune(&s, 1e-12).unwrap();
        for p in s.points() {
            prop_assert!(in_convex_hull(out.points(), p, 1e-9).unwrap());
        }
    }
}
