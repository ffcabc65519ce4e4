mod common;

use common::*;
use kmsgraph::fixtures::FIXTURES;
use kmsgraph::fock::{kms_residual, kms_residual_for, relation_depth, StateKind, TruncatedFiniteState, TruncatedFock};
use kmsgraph::graph::count_paths;
use kmsgraph::spectral::{avt_extreme_points, pf_eigenvector, spectral_radius};
use kmsgraph::states::{c_partial_sum, kms_simplex, FiniteState, InfiniteState, KmsState, SERIES_TOLERANCE};
use kmsgraph::{Algebra, GraphAnalysis, Monomial, MultiGraph, Path, Trace};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

fn fixture_analyses() -> Vec<(&'static str, GraphAnalysis)> {
    FIXTURES.iter().map(|f| (f.name, GraphAnalysis::new(f.graph()).unwrap())).collect()
}

/// A β strictly inside each interval of the phase diagram, plus the interval bounds.
fn sample_betas(a: &GraphAnalysis) -> Vec<f64> {
    let mut out = Vec::new();
    for i in &a.phase_diagram().intervals {
        match i.hi {
            Some(hi) => {
                out.push(0.5 * (i.lo + hi));
                out.push(hi);
            }
            None => out.push(i.lo + 1.0),
        }
    }
    out.retain(|&b| b > 0.0);
    out
}

fn random_trace(g: &MultiGraph, seed: u64) -> Trace {
    use rand::Rng;
    let mut r = rng(seed);
    let w: Vec<f64> = (0..g.vertex_count())
        .map(|_| if r.random_bool(0.5) { r.random_range(0.0..1.0) } else { 0.0 })
        .collect();
    if w.iter().sum::<f64>() == 0.0 {
        return Trace::dirac(g.vertex_count(), 0);
    }
    Trace::normalized(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn block_upper_triangular(g in arb_graph(8, 4)) {
        let a = analysis(&g);
        let dec = a.decomposition();
        let order = dec.order();
        let pos = |v: usize| order.iter().position(|&x| x == v).unwrap();
        for i in 0..g.vertex_count() {
            for j in 0..g.vertex_count() {
                let (ci, cj) = (dec.component_of(i), dec.component_of(j));
                let block_i = pos(dec.component(ci).vertices[0]);
                let block_j = pos(dec.component(cj).vertices[0]);
                if ci != cj && block_i > block_j {
                    prop_assert_eq!(g.count(i, j), 0);
                }
            }
        }
        let p = dec.permuted_adjacency(&g);
        for r in 0..p.len() {
            for c in 0..r {
                if dec.component_of(order[r]) != dec.component_of(order[c]) {
                    prop_assert_eq!(p[r][c], 0);
                }
            }
        }
    }

    #[test]
    fn sources_and_regular_vertices_partition(g in arb_graph(8, 4)) {
        let s = g.sources();
        let r = g.regular_vertices();
        prop_assert!(s.iter().all(|v| !r.contains(v)));
        let mut all: Vec<usize> = s.iter().chain(&r).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..g.vertex_count()).collect::<Vec<_>>());
    }

    #[test]
    fn ideal_vertices_have_no_long_incoming_paths(g in arb_graph(8, 3)) {
        let a = analysis(&g);
        let n = g.vertex_count();
        for v in a.decomposition().ideal_vertices() {
            prop_assert_eq!(count_paths(&g, n, None, Some(v)), BigUint::zero());
        }
    }

    #[test]
    fn radius_is_transpose_invariant(g in arb_graph(7, 4)) {
        let m = g.to_dmatrix();
        let a = spectral_radius(&m).unwrap().radius;
        let b = spectral_radius(&m.transpose()).unwrap().radius;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn averaging_extremes_are_eigenvectors_vanishing_on_ideal(g in arb_graph(7, 3)) {
        let a = analysis(&g);
        let ideal = a.decomposition().ideal_vertices();
        for &r in a.component_radii() {
            if r < 1.0 {
                continue;
            }
            let beta = r.ln();
            let gt = g.to_dmatrix().transpose();
            for t in avt_extreme_points(&g, beta).unwrap().extreme_points {
                let x = nalgebra::DVector::from_column_slice(t.weights());
                let defect = (&gt * &x - &x * beta.exp()).amax();
                prop_assert!(defect <= 1e-9 * r.max(1.0), "defect {}", defect);
                for &v in &ideal {
                    prop_assert!(t.weight(v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn irreducible_averaging_is_perron_vector(g in arb_irreducible(6, 3)) {
        let r = spectral_radius(&g.to_dmatrix()).unwrap().radius;
        let pts = avt_extreme_points(&g, r.ln()).unwrap().extreme_points;
        prop_assert_eq!(pts.len(), 1);
        let pf = pf_eigenvector(&g.to_dmatrix(), true).unwrap().eigvec.unwrap();
        let s: f64 = pf.iter().sum();
        let pf: Vec<f64> = pf.iter().map(|x| x / s).collect();
        prop_assert!(trace_dist(&pts[0], &pf) < 1e-8);
    }

    #[test]
    fn entropy_sink_formula_matches_dirac_minimum(g in arb_graph(8, 3)) {
        let a = analysis(&g);
        let n = g.vertex_count();
        let min = (0..n)
            .map(|v| a.trace_entropy(&Trace::dirac(n, v)).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((a.entropy_hx() - min.max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn mixture_entropy_is_max_of_diracs(g in arb_graph(7, 3), seed in any::<u64>()) {
        let a = analysis(&g);
        let tau = random_trace(&g, seed);
        let n = g.vertex_count();
        let max = tau
            .support()
            .into_iter()
            .map(|v| a.trace_entropy(&Trace::dirac(n, v)).unwrap())
            .fold(0.0, f64::max);
        prop_assert!((a.trace_entropy(&tau).unwrap() - max).abs() < 1e-12);
    }

    #[test]
    fn entropy_chain(g in arb_graph(7, 4), seed in any::<u64>()) {
        let a = analysis(&g);
        let tau = random_trace(&g, seed);
        let h = a.trace_entropy(&tau).unwrap();
        let hs = a.strong_entropy();
        prop_assert!(h <= hs + 1e-12);
        if g.edge_count() > 0 {
            prop_assert!(hs <= (g.edge_count() as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn allowed_sets_constant_inside_intervals(g in arb_graph(7, 3)) {
        let a = analysis(&g);
        for i in &a.phase_diagram().intervals {
            let hi = i.hi.unwrap_or(i.lo + 5.0);
            for t in 1..=5 {
                let beta = i.lo + (hi - i.lo) * t as f64 / 6.0;
                prop_assert_eq!(&a.allowed_vertices(beta), &i.allowed);
            }
        }
    }

    #[test]
    fn no_averaging_traces_above_strong_entropy(g in arb_graph(7, 3), dx in 1e-6f64..3.0) {
        let a = analysis(&g);
        let beta = a.strong_entropy() + dx;
        prop_assert!(avt_extreme_points(&g, beta).unwrap().is_empty());
    }

    #[test]
    fn finite_mass_partial_sums(g in arb_graph(6, 3), seed in any::<u64>(), extra in 0.05f64..2.0) {
        let a = analysis(&g);
        let tau = random_trace(&g, seed);
        let beta = a.trace_entropy(&tau).unwrap().max(0.0) + extra;
        let s = FiniteState::new(&a, &tau, beta, SERIES_TOLERANCE).unwrap();
        let tail = s.tail();
        let mut last = 0.0;
        for k in [0usize, 1, 2, 5, 10, 20, 40] {
            let partial = c_partial_sum(&g, &tau, beta, k).unwrap();
            prop_assert!(partial >= last);
            prop_assert!(s.c() - partial <= tail.bound(k) + 1e-9 * s.c());
            last = partial;
        }
        let n = tail.terms_for(1e-12);
        prop_assert!((c_partial_sum(&g, &tau, beta, n).unwrap() / s.c() - 1.0).abs() < 1e-9);
        let trunc = TruncatedFiniteState::new(&g, &tau, beta, n).unwrap();
        prop_assert!((s.c() - trunc.normalizer()).abs() <= tail.bound(n) + 1e-9 * s.c());
    }

    #[test]
    fn infinite_state_annihilates_vacuum(g in arb_graph(6, 3)) {
        let a = analysis(&g);
        let ideal = a.decomposition().ideal_vertices();
        for &r in a.component_radii() {
            if r <= 1.0 {
                continue;
            }
            for t in avt_extreme_points(&g, r.ln()).unwrap().extreme_points {
                if ideal.iter().any(|&v| t.weight(v) != 0.0) {
                    continue;
                }
                let s = InfiniteState::new(&a, &t, r.ln()).unwrap();
                let vertices: f64 = (0..g.vertex_count()).map(|v| s.eval(&Monomial::vertex(v))).sum();
                let edges: f64 = (0..g.edge_count())
                    .map(|e| s.eval(&Monomial::diagonal(Path::from_edges(&g, vec![e]).unwrap())))
                    .sum();
                prop_assert!((vertices - edges).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn toeplitz_relations_hold_exactly(g in arb_graph(5, 2)) {
        let depth = relation_depth(&g, 5, 4000);
        let f = TruncatedFock::build(&g, depth).unwrap();
        prop_assert!(f.relations_exact(&g));
    }

    #[test]
    fn kms_identity_on_random_states(g in arb_graph(5, 3), seed in any::<u64>(), extra in 0.1f64..2.0) {
        let a = analysis(&g);
        let tau = random_trace(&g, seed);
        let beta = a.trace_entropy(&tau).unwrap().max(0.0) + extra;
        let s = FiniteState::new(&a, &tau, beta, SERIES_TOLERANCE).unwrap();
        let depth = s.tail().terms_for(1e-11) + 14;
        let r = kms_residual(&a, depth, &tau, beta, StateKind::Finite, 100, seed).unwrap();
        prop_assert!(r.max_residual < 1e-9, "{}", r.max_residual);
    }

    #[test]
    fn residual_decreases_with_depth(g in arb_graph(5, 3), seed in any::<u64>(), extra in 0.1f64..1.0) {
        let a = analysis(&g);
        let tau = random_trace(&g, seed);
        let beta = a.trace_entropy(&tau).unwrap().max(0.0) + extra;
        for n in [6usize, 10, 16] {
            let favoured: Vec<usize> = (0..g.vertex_count()).collect();
            let lo = TruncatedFiniteState::new(&g, &tau, beta, n).unwrap();
            let hi = TruncatedFiniteState::new(&g, &tau, beta, n + 2).unwrap();
            let r_lo = kms_residual_for(&lo, &g, favoured.clone(), n, 50, seed).max_residual;
            let r_hi = kms_residual_for(&hi, &g, favoured, n, 50, seed).max_residual;
            prop_assert!(r_hi <= r_lo + 1e-15, "N={}: {} then {}", n, r_lo, r_hi);
        }
    }
}

#[test]
fn simplex_empty_exactly_below_entropy() {
    for (name, a) in fixture_analyses() {
        let h = a.entropy_hx();
        let mut betas: Vec<f64> = (1..=60).map(|i| i as f64 * 0.05).collect();
        if h > 0.0 {
            betas.push(h);
        }
        for beta in betas {
            for alg in [Algebra::Toeplitz] {
                let s = kms_simplex(&a, beta, alg).unwrap();
                assert_eq!(s.empty, beta < h - 1e-12, "{name} at {beta}");
            }
        }
    }
}

#[test]
fn extreme_finite_states_are_distinguished_by_vertex_values() {
    for (name, a) in fixture_analyses() {
        for beta in sample_betas(&a) {
            let s = kms_simplex(&a, beta, Algebra::Toeplitz).unwrap();
            let vals: Vec<Vec<f64>> = s
                .finite_extremes
                .iter()
                .map(|(t, _)| FiniteState::new(&a, t, beta, SERIES_TOLERANCE).unwrap().vertex_values())
                .collect();
            for i in 0..vals.len() {
                for j in 0..i {
                    assert!(dist(&vals[i], &vals[j]) > 1e-8, "{name} at {beta}");
                }
            }
        }
    }
}

/// `(1/k) log Σ_ij (G^k)_ij`, or `None` once the sum vanishes.
fn growth(g: &MultiGraph, k: usize) -> Option<f64> {
    let total = count_paths(g, k, None, None);
    (!total.is_zero()).then(|| ln_big(&total) / k as f64)
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 60;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

#[test]
fn growth_rate_is_non_increasing_on_fixtures() {
    for (name, a) in fixture_analyses() {
        let g = a.graph();
        let seq: Vec<f64> = (1..=60).filter_map(|k| growth(g, k)).collect();
        for w in seq.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{name}: {} then {}", w[0], w[1]);
        }
    }
}

#[test]
fn growth_rate_converges_on_fixtures() {
    for (name, a) in fixture_analyses() {
        let g = a.graph();
        let want = a.strong_entropy();
        let got = growth(g, 60).unwrap_or(0.0);
        assert!((got - want).abs() < 0.05, "{name}: {got} vs {want}");
    }
}

/// `(1/k) log Σ_{|μ|=k} τ(p_{s(μ)})`.
fn weighted_growth(g: &MultiGraph, tau: &Trace, k: usize) -> f64 {
    let m = kmsgraph::graph::count_paths_matrix(g, k);
    let total: f64 = tau
        .support()
        .into_iter()
        .map(|v| tau.weight(v) * m[v].iter().map(|c| c.to_f64().unwrap()).sum::<f64>())
        .sum();
    if total == 0.0 {
        0.0
    } else {
        total.ln() / k as f64
    }
}

#[test]
fn weighted_counts_bracket_trace_entropy() {
    for (name, a) in fixture_analyses() {
        let g = a.graph();
        let n = g.vertex_count();
        for v in 0..n {
            let tau = Trace::dirac(n, v);
            let h = a.trace_entropy(&tau).unwrap();
            for k in [40, 60] {
                let est = weighted_growth(g, &tau, k);
                assert!((est - h).abs() < 0.05, "{name} δ_{}: k={k} {est} vs {h}", g.label(v));
            }
        }
    }
}
