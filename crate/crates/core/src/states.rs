//! The normalizing series, finite and infinite KMS states, and simplex descriptions.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::entropy::{GraphAnalysis, BETA_SLACK};
use crate::error::{Error, Result};
use crate::graph::{MultiGraph, Path, Trace};
use crate::spectral::avt_extreme_points;

/// Default agreement tolerance between closed form and truncated sum.
pub const SERIES_TOLERANCE: f64 = 1e-9;
const MAX_DOUBLINGS: usize = 60;
/// Partial sums longer than this are evaluated by doubling.
const LINEAR_TERMS: usize = 4096;

/// `L_μ L_ν*`. Both paths must share their source; empty paths at `v` encode `π(p_v)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub mu: Path,
    pub nu: Path,
}

impl Monomial {
    pub fn new(mu: Path, nu: Path) -> Result<Self> {
        if mu.source() != nu.source() {
            return Err(Error::InvalidPath(
                "the two paths of a monomial must start at the same vertex".into(),
            ));
        }
        Ok(Self { mu, nu })
    }

    pub fn vertex(v: usize) -> Self {
        Self {
            mu: Path::empty(v),
            nu: Path::empty(v),
        }
    }

    /// `L_μ L_μ*`.
    pub fn diagonal(mu: Path) -> Self {
        Self {
            nu: mu.clone(),
            mu,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mu: self.nu.clone(),
            nu: self.mu.clone(),
        }
    }

    /// Gauge degree `|μ| − |ν|`.
    pub fn degree(&self) -> i64 {
        self.mu.len() as i64 - self.nu.len() as i64
    }

    /// `(L_a L_b*)(L_c L_d*)` as a single monomial, or `None` when it vanishes.
    pub fn product(&self, other: &Monomial, graph: &MultiGraph) -> Option<Monomial> {
        let (a, b) = (&self.mu, &self.nu);
        let (c, d) = (&other.mu, &other.nu);
        if b.len() <= c.len() {
            // L_b* L_c = L_{c'} when c = c' followed by b.
            let cut = c.len() - b.len();
            if c.edges()[cut..] != *b.edges() {
                return None;
            }
            let prefix = Path::from_parts_unchecked(c.source(), c.edges()[..cut].to_vec());
            if prefix.range(graph) != b.source() {
                return None;
            }
            Some(Monomial {
                mu: a.after(&prefix),
                nu: d.clone(),
            })
        } else {
            // L_b* L_c = L_{b'}* when b = b' followed by c.
            let cut = b.len() - c.len();
            if b.edges()[cut..] != *c.edges() {
                return None;
            }
            let prefix = Path::from_parts_unchecked(b.source(), b.edges()[..cut].to_vec());
            if prefix.range(graph) != c.source() {
                return None;
            }
            Some(Monomial {
                mu: a.clone(),
                nu: d.after(&prefix),
            })
        }
    }

    pub fn display(&self, graph: &MultiGraph) -> String {
        format!("L[{}] L[{}]*", self.mu.display(graph), self.nu.display(graph))
    }
}

/// A state on the Toeplitz algebra that can be evaluated on monomials.
pub trait KmsState {
    fn beta(&self) -> f64;
    fn eval(&self, m: &Monomial) -> f64;
}

/// Geometric bound on `Σ_{k>N} ‖B^k‖_∞` for a matrix with spectral radius below 1.
///
/// `period` is the smallest power of two `m` with `‖B^m‖_∞ ≤ 1/2`, `contraction`
/// is that norm and `constant` bounds `‖B^j‖_∞` for every `j < m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub period: usize,
    pub contraction: f64,
    pub constant: f64,
}

fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl TailBound {
    pub fn new(b: &DMatrix<f64>) -> Result<Self> {
        let mut power = b.clone();
        let mut period = 1usize;
        // ‖B^j‖ ≤ Π over the binary digits of j of ‖B^{2^i}‖.
        let mut constant = 1.0f64;
        for _ in 0..MAX_DOUBLINGS {
            let q = row_sum_norm(&power);
            if q <= 0.5 {
                return Ok(Self {
                    period,
                    contraction: q,
                    constant,
                });
            }
            constant *= q.max(1.0);
            power = &power * &power;
            period *= 2;
        }
        Err(Error::NonConvergence {
            iterations: period,
            estimate: row_sum_norm(&power),
        })
    }

    /// Bound on the terms with index `> terms`.
    pub fn bound(&self, terms: usize) -> f64 {
        let m = self.period as f64;
        let blocks = ((terms + 1) / self.period) as f64;
        self.constant * m * self.contraction.powf(blocks) / (1.0 - self.contraction)
    }

    /// Smallest `N` of the form `km − 1` with `bound(N) < tol`.
    pub fn terms_for(&self, tol: f64) -> usize {
        let lead = self.constant * self.period as f64 / (1.0 - self.contraction);
        let mut blocks = if self.contraction == 0.0 {
            1
        } else {
            ((lead / tol).ln() / -self.contraction.ln()).ceil().max(1.0) as usize
        };
        while blocks > 1 && self.bound((blocks - 1) * self.period - 1) < tol {
            blocks -= 1;
        }
        while self.bound(blocks * self.period - 1) >= tol {
            blocks += 1;
        }
        blocks * self.period - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMethod {
    ClosedForm,
    Truncated,
    Divergent,
}

impl fmt::Display for SeriesMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ClosedForm => "closed_form",
            Self::Truncated => "truncated",
            Self::Divergent => "divergent",
        })
    }
}

/// Value of `c_{τ,β}`; `+∞` when divergent.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub method: SeriesMethod,
    pub tail_bound: f64,
    /// Truncated sum used for cross-validation, with its number of terms.
    pub truncated: Option<(f64, usize)>,
}

impl SeriesValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "value": if self.is_finite() { json!(self.value) } else { json!("inf") },
            "method": self.method.to_string(),
            "tail_bound": self.tail_bound,
            "truncated": self.truncated.map(|(v, _)| v),
            "terms": self.truncated.map(|(_, n)| n),
        })
    }
}

fn reachable_vertices(analysis: &GraphAnalysis, tau: &Trace) -> Vec<usize> {
    let dec = analysis.decomposition();
    let mut hit = vec![false; dec.len()];
    for v in tau.support() {
        for &c in dec.reachable_from_vertex(v) {
            hit[c] = true;
        }
    }
    let mut out: Vec<usize> = (0..dec.len())
        .filter(|&c| hit[c])
        .flat_map(|c| dec.component(c).vertices.iter().copied())
        .collect();
    out.sort_unstable();
    out
}

/// `Σ_{k≤N} e^{−kβ} pᵀG^k 1`.
pub fn c_partial_sum(graph: &MultiGraph, tau: &Trace, beta: f64, terms: usize) -> Result<f64> {
    tau.check_len(graph)?;
    let w = (-beta).exp();
    let g = graph.to_dmatrix();
    let p = DVector::from_column_slice(tau.weights());
    if terms > LINEAR_TERMS {
        let (_, sum) = power_sum(&(g * w), terms + 1);
        return Ok((sum.tr_mul(&p)).sum());
    }
    let mut row = p;
    let mut total = 0.0;
    for k in 0..=terms {
        if k > 0 {
            row = g.tr_mul(&row) * w;
        }
        total += row.sum();
    }
    Ok(total)
}

/// `(B^t, Σ_{k<t} B^k)` by binary splitting.
fn power_sum(b: &DMatrix<f64>, t: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = b.nrows();
    if t == 0 {
        return (DMatrix::identity(n, n), DMatrix::zeros(n, n));
    }
    if t % 2 == 1 {
        let (p, s) = power_sum(b, t - 1);
        let next = &p * b;
        return (next, s + p);
    }
    let (p, s) = power_sum(b, t / 2);
    let s2 = &s + &p * &s;
    (&p * &p, s2)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!("beta {beta} must be finite and > 0")));
    }
    Ok(())
}

/// Closed-form data of the finite state `Φ(τ)` at β.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteState {
    beta: f64,
    series: SeriesValue,
    /// `pᵀ(1 − e^{−β}G)^{−1}`, zero off the part reachable from `supp τ`.
    weights: Vec<f64>,
    tail: TailBound,
    trace: Trace,
}

impl FiniteState {
    pub fn new(analysis: &GraphAnalysis, tau: &Trace, beta: f64, tol: f64) -> Result<Self> {
        check_beta(beta)?;
        let h = analysis.trace_entropy(tau)?;
        if h >= beta - BETA_SLACK {
            return Err(Error::Precondition(format!(
                "trace entropy {h} is not below beta {beta}"
            )));
        }
        let graph = analysis.graph();
        let reach = reachable_vertices(analysis, tau);
        let k = reach.len();
        let w = (-beta).exp();
        let b = DMatrix::from_fn(k, k, |i, j| w * graph.count(reach[i], reach[j]) as f64);
        let p = DVector::from_fn(k, |i, _| tau.weight(reach[i]));
        // gᵀ(1 − B) = pᵀ  ⟺  (1 − Bᵀ) g = p
        let system = DMatrix::identity(k, k) - b.transpose();
        let g = system
            .lu()
            .solve(&p)
            .ok_or_else(|| Error::Precondition("resolvent is singular".into()))?;
        let c: f64 = g.sum();

        let tail = TailBound::new(&b)?;
        let terms = tail.terms_for(tol / 2.0);
        let truncated = c_partial_sum(graph, tau, beta, terms)?;
        let tail_bound = tail.bound(terms);
        if (c - truncated).abs() > tol * c.max(1.0) + tail_bound {
            return Err(Error::Inconsistent {
                closed: c,
                truncated,
                tolerance: tol,
            });
        }

        let mut weights = vec![0.0; graph.vertex_count()];
        for (i, &v) in reach.iter().enumerate() {
            weights[v] = g[i];
        }
        Ok(Self {
            beta,
            series: SeriesValue {
                value: c,
                method: SeriesMethod::ClosedForm,
                tail_bound: 0.0,
                truncated: Some((truncated, terms)),
            },
            weights,
            tail,
            trace: tau.clone(),
        })
    }

    pub fn c(&self) -> f64 {
        self.series.value
    }

    pub fn series(&self) -> &SeriesValue {
        &self.series
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn tail(&self) -> TailBound {
        self.tail
    }

    /// `Φ(τ)(π(p_v))` for every vertex.
    pub fn vertex_values(&self) -> Vec<f64> {
        self.weights.iter().map(|g| g / self.c()).collect()
    }

    /// `Φ(τ)(p_0)`, the vacuum mass `c^{−1}`.
    pub fn vacuum_mass(&self) -> f64 {
        1.0 / self.c()
    }
}

impl KmsState for FiniteState {
    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, m: &Monomial) -> f64 {
        if m.mu != m.nu {
            return 0.0;
        }
        (-(m.mu.len() as f64) * self.beta).exp() * self.weights[m.mu.source()] / self.c()
    }
}

/// `c_{τ,β}` with the divergent case reported as `+∞`.
pub fn c_series(graph: &MultiGraph, tau: &Trace, beta: f64, tol: f64) -> Result<SeriesValue> {
    let analysis = GraphAnalysis::new(graph.clone())?;
    c_series_with(&analysis, tau, beta, tol)
}

pub fn c_series_with(analysis: &GraphAnalysis, tau: &Trace, beta: f64, tol: f64) -> Result<SeriesValue> {
    check_beta(beta)?;
    if analysis.trace_entropy(tau)? >= beta - BETA_SLACK {
        return Ok(SeriesValue {
            value: f64::INFINITY,
            method: SeriesMethod::Divergent,
            tail_bound: f64::INFINITY,
            truncated: None,
        });
    }
    Ok(FiniteState::new(analysis, tau, beta, tol)?.series)
}

pub fn finite_state_eval(graph: &MultiGraph, tau: &Trace, beta: f64, m: &Monomial) -> Result<f64> {
    let analysis = GraphAnalysis::new(graph.clone())?;
    Ok(FiniteState::new(&analysis, tau, beta, SERIES_TOLERANCE)?.eval(m))
}

/// `Ψ(τ)` for an averaging trace τ.
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteState {
    beta: f64,
    trace: Trace,
}

impl InfiniteState {
    pub fn new(analysis: &GraphAnalysis, tau: &Trace, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        tau.check_len(analysis.graph())?;
        let defect = averaging_defect(analysis.graph(), tau, beta);
        let scale = beta.exp().max(1.0);
        if defect > 1e-8 * scale {
            return Err(Error::Precondition(format!(
                "trace is not averaging at beta {beta} (defect {defect})"
            )));
        }
        if let Some(v) = analysis
            .decomposition()
            .ideal_vertices()
            .into_iter()
            .find(|&v| tau.weight(v) > 1e-12)
        {
            return Err(Error::Precondition(format!(
                "trace does not vanish at `{}`",
                analysis.graph().label(v)
            )));
        }
        Ok(Self {
            beta,
            trace: tau.clone(),
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }
}

impl KmsState for InfiniteState {
    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, m: &Monomial) -> f64 {
        if m.mu != m.nu {
            return 0.0;
        }
        (-(m.mu.len() as f64) * self.beta).exp() * self.trace.weight(m.mu.source())
    }
}

/// `‖e^β τ − Gᵀτ‖_∞`.
pub fn averaging_defect(graph: &MultiGraph, tau: &Trace, beta: f64) -> f64 {
    let t = DVector::from_column_slice(tau.weights());
    (graph.to_dmatrix().tr_mul(&t) - t * beta.exp()).amax()
}

pub fn infinite_state_eval(graph: &MultiGraph, tau: &Trace, beta: f64, m: &Monomial) -> Result<f64> {
    let analysis = GraphAnalysis::new(graph.clone())?;
    Ok(InfiniteState::new(&analysis, tau, beta)?.eval(m))
}

/// Which quotient of the Toeplitz algebra to describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algebra {
    Toeplitz,
    /// Relative to the non-sources.
    CuntzPimsner,
    /// Relative to the whole vertex algebra.
    Oa,
}

impl Algebra {
    pub const ALL: [Algebra; 3] = [Algebra::Toeplitz, Algebra::CuntzPimsner, Algebra::Oa];

    pub fn name(self) -> &'static str {
        match self {
            Self::Toeplitz => "toeplitz",
            Self::CuntzPimsner => "cuntz_pimsner",
            Self::Oa => "oa",
        }
    }

    /// Vertices a finite or ground trace may charge.
    pub fn permitted_vertices(self, graph: &MultiGraph) -> Vec<usize> {
        match self {
            Self::Toeplitz => (0..graph.vertex_count()).collect(),
            Self::CuntzPimsner => graph.sources(),
            Self::Oa => Vec::new(),
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algebra {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toeplitz" => Ok(Self::Toeplitz),
            "cuntz" | "cuntz_pimsner" => Ok(Self::CuntzPimsner),
            "oa" => Ok(Self::Oa),
            other => Err(Error::InvalidArgument(format!("unknown algebra `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexDescription {
    pub beta: f64,
    pub algebra: Algebra,
    /// Extreme traces of the finite part with their `c_{τ,β}`.
    pub finite_extremes: Vec<(Trace, f64)>,
    pub infinite_extremes: Vec<Trace>,
    /// Number of extreme points minus one; −1 when empty.
    pub dimension: i64,
    pub empty: bool,
}

impl SimplexDescription {
    pub fn finite_dimension(&self) -> i64 {
        self.finite_extremes.len() as i64 - 1
    }

    pub fn infinite_dimension(&self) -> i64 {
        self.infinite_extremes.len() as i64 - 1
    }

    pub fn to_json(&self, graph: &MultiGraph) -> Value {
        json!({
            "beta": self.beta,
            "algebra": self.algebra.name(),
            "finite_extremes": self.finite_extremes.iter().map(|(t, c)| json!({
                "trace": t.to_json(graph),
                "c": c,
            })).collect::<Vec<_>>(),
            "infinite_extremes": self.infinite_extremes.iter().map(|t| t.to_json(graph)).collect::<Vec<_>>(),
            "dimension": self.dimension,
            "empty": self.empty,
        })
    }
}

pub fn kms_simplex(analysis: &GraphAnalysis, beta: f64, algebra: Algebra) -> Result<SimplexDescription> {
    check_beta(beta)?;
    let graph = analysis.graph();
    let n = graph.vertex_count();
    let permitted = algebra.permitted_vertices(graph);
    let mut finite_extremes = Vec::new();
    for v in analysis.allowed_vertices(beta) {
        if permitted.binary_search(&v).is_ok() {
            let tau = Trace::dirac(n, v);
            let c = FiniteState::new(analysis, &tau, beta, SERIES_TOLERANCE)?.c();
            finite_extremes.push((tau, c));
        }
    }
    let ideal = analysis.decomposition().ideal_vertices();
    let infinite_extremes: Vec<Trace> = avt_extreme_points(graph, beta)?
        .extreme_points
        .into_iter()
        .filter(|t| ideal.iter().all(|&v| t.weight(v) == 0.0))
        .collect();
    let total = finite_extremes.len() + infinite_extremes.len();
    Ok(SimplexDescription {
        beta,
        algebra,
        finite_extremes,
        infinite_extremes,
        dimension: total as i64 - 1,
        empty: total == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexCheck {
    /// Max deviation over vertex projections.
    pub deviation: f64,
    /// `|c_mix − (λc_1 + (1−λ)c_2)|`.
    pub c_deviation: f64,
}

/// Compares `Φ(λτ_1 + (1−λ)τ_2)` with the `c`-weighted combination of `Φ(τ_1)`, `Φ(τ_2)`.
pub fn convex_combination_check(
    analysis: &GraphAnalysis,
    tau1: &Trace,
    tau2: &Trace,
    lambda: f64,
    beta: f64,
) -> Result<ConvexCheck> {
    let mix = Trace::mix(lambda, tau1, tau2)?;
    let s1 = FiniteState::new(analysis, tau1, beta, SERIES_TOLERANCE)?;
    let s2 = FiniteState::new(analysis, tau2, beta, SERIES_TOLERANCE)?;
    let sm = FiniteState::new(analysis, &mix, beta, SERIES_TOLERANCE)?;
    let c = lambda * s1.c() + (1.0 - lambda) * s2.c();
    let (v1, v2, vm) = (s1.vertex_values(), s2.vertex_values(), sm.vertex_values());
    let deviation = (0..vm.len())
        .map(|v| {
            let rhs = lambda * s1.c() / c * v1[v] + (1.0 - lambda) * s2.c() / c * v2[v];
            (vm[v] - rhs).abs()
        })
        .fold(0.0, f64::max);
    Ok(ConvexCheck {
        deviation,
        c_deviation: (sm.c() - c).abs(),
    })
}

/// Extreme ground (equivalently KMS∞) states: Diracs at the permitted vertices.
pub fn ground_and_kms_infinity(graph: &MultiGraph, algebra: Algebra) -> Vec<Trace> {
    let n = graph.vertex_count();
    algebra
        .permitted_vertices(graph)
        .into_iter()
        .map(|v| Trace::dirac(n, v))
        .collect()
}

/// Ground-state value: `τ` on vertex projections, 0 elsewhere.
pub fn ground_state_eval(tau: &Trace, m: &Monomial) -> f64 {
    if m.mu.is_empty() && m.nu.is_empty() {
        tau.weight(m.mu.source())
    } else {
        0.0
    }
}
