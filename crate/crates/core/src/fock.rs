//! Truncated Fock representation and numerical checks of the KMS condition.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::entropy::GraphAnalysis;
use crate::error::{Error, Result};
use crate::graph::{count_paths, MultiGraph, Path, Trace};
use crate::states::{FiniteState, InfiniteState, KmsState, Monomial, SERIES_TOLERANCE};

pub const DIMENSION_CAP: usize = 200_000;
pub const DEFAULT_TRIALS: usize = 200;
/// Longest total length `|μ| + |ν|` of a sampled monomial.
pub const MAX_SAMPLED_LENGTH: usize = 6;
/// Longest path occurring in a product of four sampled monomials.
pub const MAX_PRODUCT_LENGTH: usize = 2 * MAX_SAMPLED_LENGTH;
/// Largest depth accepted by [`TruncatedFiniteState`].
pub const MAX_DEPTH: usize = 2_000_000;

/// A partial map on basis indices: `Some(j)` sends `ξ_i` to `ξ_j`.
pub type PartialMap = Vec<Option<usize>>;

/// Paths of length `≤ N` with the creation operators as partial maps.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    depth: usize,
    basis: Vec<Path>,
    index: HashMap<Path, usize>,
    ranges: Vec<usize>,
    levels: Vec<usize>,
    generators: Vec<PartialMap>,
}

impl TruncatedFock {
    pub fn build(graph: &MultiGraph, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("Fock depth must be at least 1".into()));
        }
        let dimension: BigUint = (0..=depth).map(|k| count_paths(graph, k, None, None)).sum();
        if dimension > BigUint::from(DIMENSION_CAP) {
            return Err(Error::DimensionCap {
                dimension: dimension.to_u128().unwrap_or(u128::MAX),
                cap: DIMENSION_CAP,
            });
        }

        let mut basis: Vec<Path> = (0..graph.vertex_count()).map(Path::empty).collect();
        let mut ranges: Vec<usize> = (0..graph.vertex_count()).collect();
        let mut levels = vec![0; basis.len()];
        let mut level_start = 0;
        for k in 1..=depth {
            let level_end = basis.len();
            for i in level_start..level_end {
                for &e in graph.out_edges(ranges[i]) {
                    let mut edges = basis[i].edges().to_vec();
                    edges.push(e);
                    basis.push(Path::from_parts_unchecked(basis[i].source(), edges));
                    ranges.push(graph.edge(e).range);
                    levels.push(k);
                }
            }
            level_start = level_end;
        }
        let index: HashMap<Path, usize> = basis.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();

        let mut generators = vec![vec![None; basis.len()]; graph.edge_count()];
        for (i, mu) in basis.iter().enumerate() {
            if levels[i] == depth {
                continue;
            }
            for &e in graph.out_edges(ranges[i]) {
                let mut edges = mu.edges().to_vec();
                edges.push(e);
                let target = Path::from_parts_unchecked(mu.source(), edges);
                generators[e][i] = Some(index[&target]);
            }
        }
        Ok(Self {
            depth,
            basis,
            index,
            ranges,
            levels,
            generators,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Path] {
        &self.basis
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    /// `T_e` as a partial map.
    pub fn generator(&self, e: usize) -> &PartialMap {
        &self.generators[e]
    }

    /// Adjoint of a partial isometry given as an injective partial map.
    pub fn adjoint(&self, map: &PartialMap) -> PartialMap {
        let mut out = vec![None; map.len()];
        for (i, j) in map.iter().enumerate() {
            if let Some(j) = *j {
                out[j] = Some(i);
            }
        }
        out
    }

    /// `Q_v`: the basis vectors whose path ends at `v`.
    pub fn vertex_projection(&self, v: usize) -> PartialMap {
        (0..self.dimension())
            .map(|i| (self.ranges[i] == v).then_some(i))
            .collect()
    }

    /// `first ∘ second` acting as `second` then `first`.
    pub fn compose(first: &PartialMap, second: &PartialMap) -> PartialMap {
        second.iter().map(|j| j.and_then(|j| first[j])).collect()
    }

    /// The operator `L_μ L_ν*` on the truncated space.
    pub fn operator(&self, m: &Monomial) -> PartialMap {
        let mut op: PartialMap = (0..self.dimension()).map(Some).collect();
        for &e in m.nu.edges().iter().rev() {
            op = Self::compose(&self.adjoint(&self.generators[e]), &op);
        }
        op = Self::compose(&self.vertex_projection(m.nu.source()), &op);
        for &e in m.mu.edges() {
            op = Self::compose(&self.generators[e], &op);
        }
        op
    }

    /// `T_e*T_f = δ_{ef} Q_{s(e)}` on levels below `N`, and
    /// `Σ_e T_eT_e* + p_0 = 1`, both as exact equalities of partial maps.
    pub fn relations_exact(&self, graph: &MultiGraph) -> bool {
        let below = |i: usize| self.levels[i] < self.depth;
        let expected_q: Vec<PartialMap> = (0..graph.vertex_count()).map(|v| self.vertex_projection(v)).collect();
        let adjoints: Vec<PartialMap> = self.generators.iter().map(|t| self.adjoint(t)).collect();
        for e in 0..graph.edge_count() {
            for f in 0..graph.edge_count() {
                let prod = Self::compose(&adjoints[e], &self.generators[f]);
                let want: &PartialMap = &expected_q[graph.edge(e).source];
                for i in (0..self.dimension()).filter(|&i| below(i)) {
                    let w = if e == f { want[i] } else { None };
                    if prod[i] != w {
                        return false;
                    }
                }
            }
        }
        let mut hits = vec![0usize; self.dimension()];
        for i in 0..self.dimension() {
            if self.levels[i] == 0 {
                hits[i] += 1;
            }
        }
        for (e, t) in self.generators.iter().enumerate() {
            let range_proj = Self::compose(t, &adjoints[e]);
            for (i, j) in range_proj.iter().enumerate() {
                match j {
                    Some(j) if *j == i => hits[i] += 1,
                    Some(_) => return false,
                    None => {}
                }
            }
        }
        hits.iter().all(|&h| h == 1)
    }

    /// Checks the symbolic product of two monomials against composing their
    /// operators, on basis vectors deep enough below the truncation.
    pub fn product_matches(&self, graph: &MultiGraph, a: &Monomial, b: &Monomial) -> bool {
        let lhs = Self::compose(&self.operator(a), &self.operator(b));
        let rhs = match a.product(b, graph) {
            Some(m) => self.operator(&m),
            None => vec![None; self.dimension()],
        };
        let grow = a.mu.len() + b.mu.len();
        (0..self.dimension())
            .filter(|&i| self.levels[i] + grow <= self.depth)
            .all(|i| lhs[i] == rhs[i])
    }

    /// `φ(T) = c_N^{−1} Σ_{|η|≤N} τ(s(η)) e^{−|η|β} ⟨Tξ_η, ξ_η⟩` for a monomial `T`.
    pub fn vector_functional(&self, tau: &Trace, beta: f64, m: &Monomial) -> f64 {
        let op = self.operator(m);
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, path) in self.basis.iter().enumerate() {
            let w = tau.weight(path.source()) * (-(self.levels[i] as f64) * beta).exp();
            den += w;
            if op[i] == Some(i) {
                num += w;
            }
        }
        num / den
    }
}

/// The finite state `Φ(τ)` cut off at Fock depth `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedFiniteState {
    beta: f64,
    depth: usize,
    /// Row `k` is `e^{−kβ} pᵀG^k`.
    rows: Vec<Vec<f64>>,
    normalizer: f64,
}

impl TruncatedFiniteState {
    pub fn new(graph: &MultiGraph, tau: &Trace, beta: f64, depth: usize) -> Result<Self> {
        tau.check_len(graph)?;
        if depth > MAX_DEPTH {
            return Err(Error::InvalidArgument(format!("Fock depth {depth} exceeds {MAX_DEPTH}")));
        }
        let n = graph.vertex_count();
        let w = (-beta).exp();
        let mut rows = vec![tau.weights().to_vec()];
        for _ in 0..depth {
            let last = rows.last().expect("nonempty");
            let mut next = vec![0.0; n];
            for (i, x) in last.iter().enumerate() {
                if *x == 0.0 {
                    continue;
                }
                for (j, &c) in graph.adjacency()[i].iter().enumerate() {
                    next[j] += w * x * c as f64;
                }
            }
            rows.push(next);
        }
        let normalizer = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
        Ok(Self {
            beta,
            depth,
            rows,
            normalizer,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `c_N`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `φ_N(p_k)`.
    pub fn level_mass(&self, k: usize) -> f64 {
        self.rows.get(k).map_or(0.0, |r| r.iter().sum::<f64>()) / self.normalizer
    }
}

impl KmsState for TruncatedFiniteState {
    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, m: &Monomial) -> f64 {
        if m.mu != m.nu || m.mu.len() > self.depth {
            return 0.0;
        }
        let len = m.mu.len();
        let s = m.mu.source();
        let shift = (-(len as f64) * self.beta).exp();
        let sum: f64 = self.rows[..=self.depth - len].iter().map(|r| r[s]).sum();
        shift * sum / self.normalizer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmsResidual {
    pub max_residual: f64,
    pub depth: usize,
    pub seed: u64,
    pub trials: usize,
    /// Trials in which at least one side was nonzero.
    pub nontrivial: usize,
}

fn forward_walk(graph: &MultiGraph, rng: &mut ChaCha8Rng, start: usize, len: usize) -> Path {
    let mut at = start;
    let mut edges = Vec::with_capacity(len);
    for _ in 0..len {
        let out = graph.out_edges(at);
        if out.is_empty() {
            break;
        }
        let e = out[rng.random_range(0..out.len())];
        edges.push(e);
        at = graph.edge(e).range;
    }
    Path::from_parts_unchecked(start, edges)
}

fn backward_walk(graph: &MultiGraph, rng: &mut ChaCha8Rng, end: usize, len: usize) -> Path {
    let mut at = end;
    let mut edges = Vec::with_capacity(len);
    for _ in 0..len {
        let inc = graph.in_edges(at);
        if inc.is_empty() {
            break;
        }
        let e = inc[rng.random_range(0..inc.len())];
        edges.push(e);
        at = graph.edge(e).source;
    }
    edges.reverse();
    Path::from_parts_unchecked(at, edges)
}

/// Samples pairs `(f, g)` of monomials biased toward nonvanishing products.
pub struct MonomialSampler<'a> {
    graph: &'a MultiGraph,
    favoured: Vec<usize>,
    rng: ChaCha8Rng,
    half: usize,
}

impl<'a> MonomialSampler<'a> {
    pub fn new(graph: &'a MultiGraph, favoured: Vec<usize>, seed: u64, max_total_length: usize) -> Self {
        Self {
            graph,
            favoured,
            rng: ChaCha8Rng::seed_from_u64(seed),
            half: max_total_length / 2,
        }
    }

    fn vertex(&mut self) -> usize {
        if !self.favoured.is_empty() && self.rng.random_bool(0.5) {
            self.favoured[self.rng.random_range(0..self.favoured.len())]
        } else {
            self.rng.random_range(0..self.graph.vertex_count())
        }
    }

    fn length(&mut self) -> usize {
        self.rng.random_range(0..=self.half)
    }

    pub fn monomial(&mut self) -> Monomial {
        let s = self.vertex();
        let (a, b) = (self.length(), self.length());
        let mu = forward_walk(self.graph, &mut self.rng, s, a);
        let nu = forward_walk(self.graph, &mut self.rng, s, b);
        Monomial { mu, nu }
    }

    /// A partner for `f = L_μL_ν*`: its adjoint, a `g` with `L_ν*L_α ≠ 0`, or a random monomial.
    pub fn partner(&mut self, f: &Monomial) -> Monomial {
        match self.rng.random_range(0..3) {
            0 => f.adjoint(),
            1 => {
                let extra = self.half.saturating_sub(f.nu.len());
                let len = self.rng.random_range(0..=extra);
                let q = backward_walk(self.graph, &mut self.rng, f.nu.source(), len);
                let alpha = f.nu.after(&q);
                let len = self.length();
                let gamma = forward_walk(self.graph, &mut self.rng, alpha.source(), len);
                Monomial { mu: alpha, nu: gamma }
            }
            _ => self.monomial(),
        }
    }
}

fn eval_product(state: &dyn KmsState, graph: &MultiGraph, a: &Monomial, b: &Monomial) -> f64 {
    a.product(b, graph).map_or(0.0, |m| state.eval(&m))
}

/// Max of `|φ(fg) − e^{−β·deg f} φ(gf)|` over sampled pairs, plus the same
/// for products `f = f_1f_2`, `g = g_1g_2`.
pub fn kms_residual_for(
    state: &dyn KmsState,
    graph: &MultiGraph,
    favoured: Vec<usize>,
    depth: usize,
    trials: usize,
    seed: u64,
) -> KmsResidual {
    let beta = state.beta();
    let max_len = depth.saturating_sub(2).min(MAX_SAMPLED_LENGTH);
    let mut sampler = MonomialSampler::new(graph, favoured, seed, max_len);
    let mut max_residual = 0.0f64;
    let mut nontrivial = 0;
    for _ in 0..trials {
        let f = sampler.monomial();
        let g = sampler.partner(&f);
        let lhs = eval_product(state, graph, &f, &g);
        let rhs = (-beta * f.degree() as f64).exp() * eval_product(state, graph, &g, &f);
        max_residual = max_residual.max((lhs - rhs).abs());

        let f2 = sampler.partner(&f.adjoint());
        let g2 = sampler.partner(&g.adjoint());
        let mut four = 0.0f64;
        let mut touched = lhs != 0.0 || rhs != 0.0;
        if let (Some(a), Some(b)) = (f2.product(&f, graph), g.product(&g2, graph)) {
            let l = eval_product(state, graph, &a, &b);
            let r = (-beta * a.degree() as f64).exp() * eval_product(state, graph, &b, &a);
            four = (l - r).abs();
            touched |= l != 0.0 || r != 0.0;
        }
        max_residual = max_residual.max(four);
        if touched {
            nontrivial += 1;
        }
    }
    KmsResidual {
        max_residual,
        depth,
        seed,
        trials,
        nontrivial,
    }
}

fn favoured_vertices(analysis: &GraphAnalysis, tau: &Trace) -> Vec<usize> {
    let dec = analysis.decomposition();
    let mut out: Vec<usize> = tau
        .support()
        .into_iter()
        .flat_map(|v| dec.reachable_from_vertex(v).iter().copied())
        .flat_map(|c| dec.component(c).vertices.iter().copied())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// KMS residual of `Φ(τ)` (truncated at depth `N`) or `Ψ(τ)`.
pub fn kms_residual(
    analysis: &GraphAnalysis,
    depth: usize,
    tau: &Trace,
    beta: f64,
    kind: StateKind,
    trials: usize,
    seed: u64,
) -> Result<KmsResidual> {
    if depth < 2 {
        return Err(Error::InvalidArgument("Fock depth must be at least 2".into()));
    }
    let graph = analysis.graph();
    let favoured = favoured_vertices(analysis, tau);
    match kind {
        StateKind::Finite => {
            FiniteState::new(analysis, tau, beta, SERIES_TOLERANCE)?;
            let state = TruncatedFiniteState::new(graph, tau, beta, depth)?;
            Ok(kms_residual_for(&state, graph, favoured, depth, trials, seed))
        }
        StateKind::Infinite => {
            let state = InfiniteState::new(analysis, tau, beta)?;
            Ok(kms_residual_for(&state, graph, favoured, depth, trials, seed))
        }
    }
}

/// Depth at which truncation errors on sampled products stay below `tol`.
pub fn kms_depth(analysis: &GraphAnalysis, tau: &Trace, beta: f64, kind: StateKind, tol: f64) -> Result<usize> {
    let margin = MAX_PRODUCT_LENGTH + 2;
    match kind {
        StateKind::Finite => {
            let state = FiniteState::new(analysis, tau, beta, SERIES_TOLERANCE)?;
            Ok(state.tail().terms_for(tol) + margin)
        }
        StateKind::Infinite => Ok(margin),
    }
}

/// `‖e^β τ − Gᵀτ‖_∞`.
pub fn averaging_residual(graph: &MultiGraph, tau: &Trace, beta: f64) -> f64 {
    crate::states::averaging_defect(graph, tau, beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEntropyPoint {
    pub k: usize,
    /// `(1/k) log max_v Σ_j (G^k)_{vj}`, or 0 once all counts vanish.
    pub value: f64,
    pub vanished: bool,
}

/// Exact growth-rate estimates of the longest-row path counts.
pub fn norm_entropy_estimate(graph: &MultiGraph, k_max: usize) -> Result<Vec<NormEntropyPoint>> {
    if k_max > 200 {
        return Err(Error::InvalidArgument(format!("k_max {k_max} exceeds 200")));
    }
    let n = graph.vertex_count();
    // Row sums of G^k: r_k = G r_{k−1}, r_0 = 1.
    let mut rows: Vec<BigUint> = vec![BigUint::from(1u32); n];
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        rows = (0..n)
            .map(|i| {
                graph.adjacency()[i]
                    .iter()
                    .zip(&rows)
                    .filter(|(c, _)| **c > 0)
                    .map(|(&c, r)| r * c)
                    .sum()
            })
            .collect();
        let max = rows.iter().max().cloned().unwrap_or_default();
        let vanished = max.is_zero();
        let value = if vanished {
            0.0
        } else {
            crate::graph::ln_big(&max) / k as f64
        };
        out.push(NormEntropyPoint { k, value, vanished });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSummary {
    pub relations_exact: bool,
    pub kms_max_residual: f64,
    pub averaging_residual: f64,
    pub depth: usize,
    pub relation_depth: usize,
    pub seed: u64,
}

impl VerificationSummary {
    pub fn to_json(&self) -> Value {
        json!({
            "relations_exact": self.relations_exact,
            "kms_max_residual": self.kms_max_residual,
            "averaging_residual": self.averaging_residual,
            "N": self.depth,
            "relation_depth": self.relation_depth,
            "seed": self.seed,
        })
    }
}

/// Largest depth `≤ want` whose truncated space fits comfortably for exhaustive checks.
pub fn relation_depth(graph: &MultiGraph, want: usize, budget: usize) -> usize {
    let mut total = BigUint::zero();
    let mut depth = 0;
    for k in 0..=want {
        total += count_paths(graph, k, None, None);
        if total > BigUint::from(budget) {
            break;
        }
        depth = k;
    }
    depth.max(1)
}
