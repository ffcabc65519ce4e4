mod common;

use common::*;
use kmsgraph::graph::count_paths;
use kmsgraph::spectral::{avt_extreme_points, spectral_radius};
use num_bigint::{BigInt, BigUint};
use proptest::prelude::*;

#[test]
fn char_poly_of_known_matrices() {
    let big = |v: &[i64]| v.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    // constant term first
    assert_eq!(char_poly(&[vec![1, 1], vec![1, 0]]), big(&[-1, -1, 1]));
    assert_eq!(char_poly(&[vec![2, 1], vec![0, 3]]), big(&[6, -5, 1]));
    assert_eq!(char_poly(&[vec![0, 0], vec![0, 0]]), big(&[0, 0, 1]));
}

#[test]
fn root_oracle_handles_repeated_roots() {
    assert!((radius_oracle(&[vec![1, 1], vec![1, 0]]) - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    assert!((radius_oracle(&[vec![2, 1], vec![0, 2]]) - 2.0).abs() < 1e-14);
    assert_eq!(radius_oracle(&[vec![0, 1], vec![0, 0]]), 0.0);
    let g = [vec![2, 2, 0], vec![2, 0, 1], vec![0, 0, 2]];
    assert!((radius_oracle(&g) - (1.0 + 5f64.sqrt())).abs() < 1e-13);
}

#[test]
fn dfs_counts_small_graph() {
    let g = graph(vec![vec![2, 1], vec![0, 0]]);
    let c = dfs_path_counts(&g, 2);
    assert_eq!(c[0][0], BigUint::from(4u32));
    assert_eq!(c[0][1], BigUint::from(2u32));
    assert_eq!(c[1][1], BigUint::from(0u32));
}

#[test]
fn avt_oracle_two_vertex() {
    let g = graph(vec![vec![2, 1], vec![0, 0]]);
    let pts = avt_oracle(&g, 2f64.ln());
    assert_eq!(pts.len(), 1);
    assert!(dist(&pts[0], &[2.0 / 3.0, 1.0 / 3.0]) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_paths_matches_dfs(g in arb_graph(6, 3), k in 0usize..=5) {
        let dfs = dfs_path_counts(&g, k);
        let n = g.vertex_count();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(&count_paths(&g, k, Some(i), Some(j)), &dfs[i][j]);
            }
        }
        let total: BigUint = dfs.iter().flatten().sum();
        prop_assert_eq!(count_paths(&g, k, None, None), total);
    }

    #[test]
    fn spectral_radius_matches_char_poly(g in arb_graph(5, 4)) {
        let r = spectral_radius(&g.to_dmatrix()).unwrap().radius;
        let o = radius_oracle(g.adjacency());
        prop_assert!((r - o).abs() <= 1e-8 * o.max(1.0), "{} vs {}", r, o);
    }

    #[test]
    fn avt_matches_support_enumeration(g in arb_graph(6, 3)) {
        let a = analysis(&g);
        let mut radii: Vec<f64> = a.component_radii().iter().copied().filter(|&r| r >= 1.0).collect();
        radii.push(1.5);
        for r in radii {
            let beta = r.ln();
            let got: Vec<Vec<f64>> = avt_extreme_points(&g, beta)
                .unwrap()
                .extreme_points
                .iter()
                .map(|t| t.weights().to_vec())
                .collect();
            let want = avt_oracle(&g, beta);
            prop_assert!(same_point_sets(&got, &want, 1e-8), "beta {}: {:?} vs {:?}", beta, got, want);
        }
    }
}
