use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::MultiGraph;

/// Number of paths of length `k`, optionally pinned at the source and/or range.
///
/// Exact: accumulates `e_from · G^k · e_to` in arbitrary precision.
pub fn count_paths(graph: &MultiGraph, k: usize, from: Option<usize>, to: Option<usize>) -> BigUint {
    let n = graph.vertex_count();
    let mut row: Vec<BigUint> = match from {
        Some(v) => (0..n)
            .map(|i| if i == v { BigUint::one() } else { BigUint::zero() })
            .collect(),
        None => vec![BigUint::one(); n],
    };
    for _ in 0..k {
        let mut next = vec![BigUint::zero(); n];
        for (i, x) in row.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, &c) in graph.adjacency()[i].iter().enumerate() {
                if c > 0 {
                    next[j] += x * c;
                }
            }
        }
        row = next;
    }
    match to {
        Some(v) => row.swap_remove(v),
        None => row.into_iter().sum(),
    }
}

/// `G^k` with exact entries.
pub fn count_paths_matrix(graph: &MultiGraph, k: usize) -> Vec<Vec<BigUint>> {
    (0..graph.vertex_count())
        .map(|i| {
            let n = graph.vertex_count();
            let mut row: Vec<BigUint> = (0..n)
                .map(|j| if i == j { BigUint::one() } else { BigUint::zero() })
                .collect();
            for _ in 0..k {
                let mut next = vec![BigUint::zero(); n];
                for (a, x) in row.iter().enumerate() {
                    for (b, &c) in graph.adjacency()[a].iter().enumerate() {
                        if c > 0 && !x.is_zero() {
                            next[b] += x * c;
                        }
                    }
                }
                row = next;
            }
            row
        })
        .collect()
}

/// Natural log of a positive big integer, without overflowing `f64`.
pub(crate) fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_counts() {
        let g = MultiGraph::from_matrix(&["v", "w"], &[&[2, 1], &[0, 0]]).unwrap();
        // loops^3 + loops^2 · exit = 8 + 4
        assert_eq!(count_paths(&g, 3, Some(0), None), BigUint::from(12u32));
        assert_eq!(count_paths(&g, 3, Some(0), Some(1)), BigUint::from(4u32));
        assert_eq!(count_paths(&g, 3, Some(1), None), BigUint::zero());
    }

    #[test]
    fn length_zero_is_identity() {
        let g = MultiGraph::from_matrix(&["a", "b"], &[&[1, 3], &[2, 0]]).unwrap();
        let m = count_paths_matrix(&g, 0);
        assert_eq!(m[0][0], BigUint::one());
        assert_eq!(m[1][1], BigUint::one());
        assert!(m[0][1].is_zero() && m[1][0].is_zero());
    }

    #[test]
    fn collection_closed_form() {
        // a_1 paths, single tail to v_0 with its loop: (a^k - 1)/(a - 1) paths v_1 -> v_0.
        let g = MultiGraph::from_matrix(&["v1", "v0"], &[&[2, 1], &[0, 1]]).unwrap();
        for k in 1..20usize {
            let to_v0 = count_paths(&g, k, Some(0), Some(1));
            assert_eq!(to_v0, BigUint::from((1u64 << k) - 1));
            assert_eq!(count_paths(&g, k, Some(0), Some(0)), BigUint::from(1u64 << k));
        }
    }

    #[test]
    fn big_log() {
        let x = BigUint::from(3u32).pow(2000);
        assert!((ln_big(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        assert!((ln_big(&BigUint::from(10u32)) - 10f64.ln()).abs() < 1e-15);
    }
}
