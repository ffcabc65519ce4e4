//! Reports, β parsing, sweeps, state queries and verification summaries.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::entropy::{component_labels, pretty_log, GraphAnalysis};
use crate::error::{Error, ParseError, Result};
use crate::fock::{
    averaging_residual, kms_depth, kms_residual, relation_depth, StateKind, TruncatedFock, VerificationSummary,
    DEFAULT_TRIALS,
};
use crate::graph::{MultiGraph, Path, Trace};
use crate::spectral::avt_extreme_points;
use crate::states::{
    ground_and_kms_infinity, kms_simplex, Algebra, FiniteState, InfiniteState, KmsState, Monomial,
    SimplexDescription, SERIES_TOLERANCE,
};

/// A real number, or `log:<x>` for `ln x`.
pub fn parse_beta(text: &str) -> Result<f64, ParseError> {
    let bad = || ParseError::Beta(text.to_string());
    let value = match text.trim().strip_prefix("log:") {
        Some(arg) => {
            let x: f64 = arg.trim().parse().map_err(|_| bad())?;
            if !(x > 0.0) || !x.is_finite() {
                return Err(bad());
            }
            x.ln()
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Shortest decimal that survives a sweep grid's rounding noise.
pub fn format_beta(beta: f64) -> String {
    let s = format!("{beta:.10}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}

#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub analysis: GraphAnalysis,
    pub simplices: Vec<SimplexDescription>,
}

impl AnalysisReport {
    pub fn build(graph: MultiGraph, betas: &[f64], algebras: &[Algebra]) -> Result<Self> {
        let analysis = GraphAnalysis::new(graph)?;
        let mut simplices = Vec::new();
        for &beta in betas {
            for &algebra in algebras {
                simplices.push(kms_simplex(&analysis, beta, algebra)?);
            }
        }
        Ok(Self { analysis, simplices })
    }

    fn averaging(&self) -> Result<Vec<(f64, Vec<Trace>)>> {
        let mut betas: Vec<f64> = self.analysis.phase_diagram().transitions.iter().map(|t| t.beta).collect();
        betas.dedup();
        betas
            .into_iter()
            .map(|b| Ok((b, avt_extreme_points(self.analysis.graph(), b)?.extreme_points)))
            .collect()
    }

    pub fn to_json(&self) -> Result<Value> {
        let a = &self.analysis;
        let g = a.graph();
        let dec = a.decomposition();
        let labels = |vs: &[usize]| vs.iter().map(|&v| g.label(v).to_string()).collect::<Vec<_>>();
        let components: Vec<Value> = dec
            .components()
            .iter()
            .enumerate()
            .map(|(c, comp)| {
                json!({
                    "vertices": component_labels(a, c),
                    "lambda": a.component_radius(c),
                    "is_zero": comp.is_zero,
                    "is_sink": comp.is_sink,
                })
            })
            .collect();
        let averaging: Vec<Value> = self
            .averaging()?
            .into_iter()
            .map(|(b, ts)| {
                json!({
                    "beta": b,
                    "pretty": pretty_log(b),
                    "extremes": ts.iter().map(|t| t.to_json(g)).collect::<Vec<_>>(),
                })
            })
            .collect();
        let ground: serde_json::Map<String, Value> = Algebra::ALL
            .iter()
            .map(|&alg| {
                let ts = ground_and_kms_infinity(g, alg);
                (alg.name().to_string(), json!(ts.iter().map(|t| t.to_json(g)).collect::<Vec<_>>()))
            })
            .collect();
        Ok(json!({
            "graph": {
                "vertices": g.labels(),
                "matrix": g.adjacency(),
                "edge_count": g.edge_count(),
            },
            "components": components,
            "order": labels(dec.order()),
            "sources": labels(&g.sources()),
            "ideal": labels(&dec.ideal_vertices()),
            "entropy": a.entropy_report().to_json(a),
            "phase_diagram": a.phase_diagram().to_json(a),
            "averaging": averaging,
            "ground_and_kms_infinity": ground,
            "simplices": self.simplices.iter().map(|s| s.to_json(g)).collect::<Vec<_>>(),
        }))
    }

    pub fn to_text(&self) -> Result<String> {
        let a = &self.analysis;
        let g = a.graph();
        let dec = a.decomposition();
        let names = |vs: &[usize]| {
            let v: Vec<&str> = vs.iter().map(|&v| g.label(v)).collect();
            format!("{{{}}}", v.join(", "))
        };
        let trace = |t: &Trace| {
            t.support()
                .into_iter()
                .map(|v| format!("{}:{}", g.label(v), t.weight(v)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        writeln!(out, "vertices: {}", g.labels().join(" ")).ok();
        writeln!(out, "edges: {}", g.edge_count()).ok();
        writeln!(out, "components:").ok();
        for (c, comp) in dec.components().iter().enumerate() {
            let mut flags = Vec::new();
            if comp.is_zero {
                flags.push("zero");
            }
            if comp.is_sink {
                flags.push("sink");
            }
            writeln!(
                out,
                "  {} lambda={} {}",
                names(&comp.vertices),
                a.component_radius(c),
                flags.join(" ")
            )
            .ok();
        }
        writeln!(out, "sources: {}", names(&g.sources())).ok();
        writeln!(out, "ideal: {}", names(&dec.ideal_vertices())).ok();
        writeln!(out, "h_min: {}", pretty_log(a.entropy_hx())).ok();
        writeln!(out, "h_strong: {}", pretty_log(a.strong_entropy())).ok();
        let pd = a.phase_diagram();
        writeln!(out, "transitions:").ok();
        for t in &pd.transitions {
            let comps: Vec<String> = t.components.iter().map(|&c| names(&dec.component(c).vertices)).collect();
            writeln!(
                out,
                "  beta={}{} {}",
                pretty_log(t.beta),
                if t.boundary { " (boundary)" } else { "" },
                comps.join(" ")
            )
            .ok();
        }
        writeln!(out, "intervals:").ok();
        for i in &pd.intervals {
            let hi = i.hi.map_or("inf)".to_string(), |h| format!("{}]", pretty_log(h)));
            writeln!(out, "  ({}, {} allowed {}", pretty_log(i.lo), hi, names(&i.allowed)).ok();
        }
        writeln!(out, "averaging traces:").ok();
        for (b, ts) in self.averaging()? {
            for t in ts {
                writeln!(out, "  beta={} {}", pretty_log(b), trace(&t)).ok();
            }
        }
        for s in &self.simplices {
            writeln!(
                out,
                "simplex beta={} algebra={} dimension={}",
                pretty_log(s.beta),
                s.algebra,
                s.dimension
            )
            .ok();
            for (t, c) in &s.finite_extremes {
                writeln!(out, "  finite {} c={}", trace(t), c).ok();
            }
            for t in &s.infinite_extremes {
                writeln!(out, "  infinite {}", trace(t)).ok();
            }
        }
        Ok(out)
    }
}

/// `lo:hi:step` with `lo > 0` and `step > 0`.
pub fn parse_range(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |why: &str| Error::InvalidArgument(format!("range `{text}`: {why}"));
    if parts.len() != 3 {
        return Err(bad("expected lo:hi:step"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(bad("lo must be > 0"));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(bad("step must be > 0"));
    }
    if !(hi >= lo) || !hi.is_finite() {
        return Err(bad("hi must be ≥ lo"));
    }
    Ok((lo, hi, step))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub algebra: Algebra,
    pub finite_dim: i64,
    pub infinite_dim: i64,
    pub total_dim: i64,
}

pub const SWEEP_HEADER: &str = "beta,algebra,finite_dim,infinite_dim,total_dim";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            format_beta(self.beta),
            self.algebra,
            self.finite_dim,
            self.infinite_dim,
            self.total_dim
        )
    }
}

pub fn sweep(analysis: &GraphAnalysis, lo: f64, hi: f64, step: f64, algebras: &[Algebra]) -> Result<Vec<SweepRow>> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let mut rows: Vec<(usize, Vec<SweepRow>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let beta = lo + i as f64 * step;
            let rows = algebras
                .iter()
                .map(|&algebra| {
                    let s = kms_simplex(analysis, beta, algebra)?;
                    Ok(SweepRow {
                        beta,
                        algebra,
                        finite_dim: s.finite_dimension(),
                        infinite_dim: s.infinite_dimension(),
                        total_dim: s.dimension,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((i, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().flat_map(|(_, r)| r).collect())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

/// Either state type, chosen by what the trace admits at β.
pub enum AnyState {
    Finite(FiniteState),
    Infinite(InfiniteState),
}

impl AnyState {
    pub fn new(analysis: &GraphAnalysis, tau: &Trace, beta: f64, kind: Option<StateKind>) -> Result<Self> {
        match kind {
            Some(StateKind::Finite) => Ok(Self::Finite(FiniteState::new(analysis, tau, beta, SERIES_TOLERANCE)?)),
            Some(StateKind::Infinite) => Ok(Self::Infinite(InfiniteState::new(analysis, tau, beta)?)),
            None => {
                if analysis.trace_entropy(tau)? < beta - crate::entropy::BETA_SLACK {
                    Self::new(analysis, tau, beta, Some(StateKind::Finite))
                } else {
                    Self::new(analysis, tau, beta, Some(StateKind::Infinite)).map_err(|_| {
                        Error::Precondition(format!(
                            "trace is neither admissible (entropy below beta) nor averaging at beta {beta}"
                        ))
                    })
                }
            }
        }
    }

    pub fn kind(&self) -> StateKind {
        match self {
            Self::Finite(_) => StateKind::Finite,
            Self::Infinite(_) => StateKind::Infinite,
        }
    }

    pub fn state(&self) -> &dyn KmsState {
        match self {
            Self::Finite(s) => s,
            Self::Infinite(s) => s,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match self {
            Self::Finite(s) => Some(s.c()),
            Self::Infinite(_) => None,
        }
    }
}

fn kind_name(kind: StateKind) -> &'static str {
    match kind {
        StateKind::Finite => "finite",
        StateKind::Infinite => "infinite",
    }
}

pub fn parse_kind(text: &str) -> Result<StateKind> {
    match text {
        "finite" => Ok(StateKind::Finite),
        "infinite" => Ok(StateKind::Infinite),
        other => Err(Error::InvalidArgument(format!("unknown state kind `{other}`"))),
    }
}

fn field_error(field: &str, message: impl Into<String>) -> Error {
    Error::Parse(ParseError::Field {
        field: field.to_string(),
        message: message.into(),
    })
}

/// `{"v": 0.5, ...}` by label, or a plain weight array.
pub fn parse_trace(graph: &MultiGraph, value: &Value, field: &str) -> Result<Trace> {
    let mut weights = vec![0.0; graph.vertex_count()];
    match value {
        Value::Object(map) => {
            for (label, w) in map {
                let v = graph.vertex_index(label).ok_or_else(|| {
                    Error::Parse(ParseError::UnknownVertex {
                        field: field.to_string(),
                        label: label.clone(),
                    })
                })?;
                weights[v] = w
                    .as_f64()
                    .ok_or_else(|| field_error(&format!("{field}.{label}"), "expected a number"))?;
            }
        }
        Value::Array(items) => {
            if items.len() != weights.len() {
                return Err(field_error(field, format!("{} weights for {} vertices", items.len(), weights.len())));
            }
            for (i, w) in items.iter().enumerate() {
                weights[i] = w
                    .as_f64()
                    .ok_or_else(|| field_error(&format!("{field}[{i}]"), "expected a number"))?;
            }
        }
        _ => return Err(field_error(field, "expected an object of weights")),
    }
    Trace::new(weights)
}

fn parse_edges(graph: &MultiGraph, value: Option<&Value>, field: &str) -> Result<Vec<usize>> {
    let Some(value) = value else { return Ok(Vec::new()) };
    let items = value
        .as_array()
        .ok_or_else(|| field_error(field, "expected an array of edge identifiers"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let label = item
                .as_str()
                .ok_or_else(|| field_error(&format!("{field}[{i}]"), "expected a string"))?;
            graph.edge_by_label(label).ok_or_else(|| {
                Error::Parse(ParseError::UnknownEdge {
                    field: format!("{field}[{i}]"),
                    label: label.to_string(),
                })
            })
        })
        .collect()
}

/// `{"mu": [...], "nu": [...], "vertex"?: label}` with edges in traversal order.
pub fn parse_monomial(graph: &MultiGraph, value: &Value, field: &str) -> Result<Monomial> {
    let obj = value
        .as_object()
        .ok_or_else(|| field_error(field, "expected an object"))?;
    let mu = parse_edges(graph, obj.get("mu"), &format!("{field}.mu"))?;
    let nu = parse_edges(graph, obj.get("nu"), &format!("{field}.nu"))?;
    let vertex = match obj.get("vertex") {
        Some(v) => {
            let label = v
                .as_str()
                .ok_or_else(|| field_error(&format!("{field}.vertex"), "expected a vertex label"))?;
            Some(graph.vertex_index(label).ok_or_else(|| {
                Error::Parse(ParseError::UnknownVertex {
                    field: format!("{field}.vertex"),
                    label: label.to_string(),
                })
            })?)
        }
        None => None,
    };
    let start = vertex
        .or_else(|| mu.first().map(|&e| graph.edge(e).source))
        .or_else(|| nu.first().map(|&e| graph.edge(e).source))
        .ok_or_else(|| field_error(field, "empty monomial needs a `vertex`"))?;
    let mu = Path::new(graph, start, mu)?;
    let nu = Path::new(graph, start, nu)?;
    Monomial::new(mu, nu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub kind: StateKind,
    pub beta: f64,
    pub values: Vec<f64>,
    pub c: Option<f64>,
}

impl QueryResult {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": kind_name(self.kind),
            "beta": self.beta,
            "values": self.values,
            "c": self.c,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("kind: {}\nbeta: {}\n", kind_name(self.kind), self.beta);
        if let Some(c) = self.c {
            writeln!(out, "c: {c}").ok();
        }
        for v in &self.values {
            writeln!(out, "{v}").ok();
        }
        out
    }
}

/// Evaluates `{"beta", "trace", "monomials", "kind"?}`.
pub fn evaluate_query(analysis: &GraphAnalysis, query: &Value) -> Result<QueryResult> {
    let graph = analysis.graph();
    let obj = query
        .as_object()
        .ok_or_else(|| field_error("<root>", "expected a JSON object"))?;
    let beta = match obj.get("beta") {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| field_error("beta", "not a number"))?,
        Some(Value::String(s)) => parse_beta(s)?,
        _ => return Err(field_error("beta", "expected a number or `log:<x>`")),
    };
    let tau = parse_trace(
        graph,
        obj.get("trace").ok_or_else(|| field_error("trace", "missing"))?,
        "trace",
    )?;
    let kind = match obj.get("kind") {
        Some(Value::String(s)) => Some(parse_kind(s)?),
        Some(_) => return Err(field_error("kind", "expected `finite` or `infinite`")),
        None => None,
    };
    let monomials: Vec<Monomial> = match obj.get("monomials") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, m)| parse_monomial(graph, m, &format!("monomials[{i}]")))
            .collect::<Result<_>>()?,
        None => Vec::new(),
        Some(_) => return Err(field_error("monomials", "expected an array")),
    };
    let state = AnyState::new(analysis, &tau, beta, kind)?;
    Ok(QueryResult {
        kind: state.kind(),
        beta,
        values: monomials.iter().map(|m| state.state().eval(m)).collect(),
        c: state.c(),
    })
}

/// Budget for the exhaustive relation check on the truncated Fock space.
pub const RELATION_BUDGET: usize = 20_000;

/// KMS residuals for one trace, or for every extreme state of the Toeplitz simplex at β.
pub fn verify(
    analysis: &GraphAnalysis,
    beta: f64,
    trace: Option<&Trace>,
    depth: Option<usize>,
    trials: Option<usize>,
    seed: u64,
) -> Result<VerificationSummary> {
    let graph = analysis.graph();
    let trials = trials.unwrap_or(DEFAULT_TRIALS);
    let targets: Vec<(Trace, StateKind)> = match trace {
        Some(t) => vec![(t.clone(), AnyState::new(analysis, t, beta, None)?.kind())],
        None => {
            let s = kms_simplex(analysis, beta, Algebra::Toeplitz)?;
            s.finite_extremes
                .into_iter()
                .map(|(t, _)| (t, StateKind::Finite))
                .chain(s.infinite_extremes.into_iter().map(|t| (t, StateKind::Infinite)))
                .collect()
        }
    };
    let mut max_residual = 0.0f64;
    let mut avg = 0.0f64;
    let mut used_depth = depth.unwrap_or(0);
    for (tau, kind) in &targets {
        let n = match depth {
            Some(n) => n,
            None => kms_depth(analysis, tau, beta, *kind, 1e-10)?,
        };
        used_depth = used_depth.max(n);
        let r = kms_residual(analysis, n, tau, beta, *kind, trials, seed)?;
        max_residual = max_residual.max(r.max_residual);
        if *kind == StateKind::Infinite || trace.is_some() {
            avg = avg.max(averaging_residual(graph, tau, beta));
        }
    }
    let rel = relation_depth(graph, used_depth.clamp(1, 8), RELATION_BUDGET);
    let fock = TruncatedFock::build(graph, rel)?;
    Ok(VerificationSummary {
        relations_exact: fock.relations_exact(graph),
        kms_max_residual: max_residual,
        averaging_residual: avg,
        depth: used_depth,
        relation_depth: rel,
        seed,
    })
}
