//! Entropies, λ-maximal components and the phase diagram.

use serde_json::{json, Value};

use crate::error::Result;
use crate::graph::{ComponentDecomposition, MultiGraph, Trace};
use crate::spectral::{radii_equal, spectral_radius};

/// Slack used when comparing an entropy against β.
pub const BETA_SLACK: f64 = 1e-12;

/// A graph together with its component decomposition and Perron roots.
#[derive(Debug, Clone)]
pub struct GraphAnalysis {
    graph: MultiGraph,
    decomposition: ComponentDecomposition,
    component_radii: Vec<f64>,
    vertex_lambda: Vec<f64>,
}

impl GraphAnalysis {
    pub fn new(graph: MultiGraph) -> Result<Self> {
        let decomposition = ComponentDecomposition::new(&graph);
        let mut component_radii = Vec::with_capacity(decomposition.len());
        for comp in decomposition.components() {
            let r = if comp.is_zero {
                0.0
            } else if comp.vertices.len() == 1 {
                graph.count(comp.vertices[0], comp.vertices[0]) as f64
            } else {
                spectral_radius(&graph.induced(&comp.vertices).to_dmatrix())?.radius
            };
            component_radii.push(r);
        }
        let vertex_lambda = (0..graph.vertex_count())
            .map(|v| {
                decomposition
                    .reachable_from_vertex(v)
                    .iter()
                    .map(|&c| component_radii[c])
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Self {
            graph,
            decomposition,
            component_radii,
            vertex_lambda,
        })
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn decomposition(&self) -> &ComponentDecomposition {
        &self.decomposition
    }

    pub fn component_radius(&self, c: usize) -> f64 {
        self.component_radii[c]
    }

    pub fn component_radii(&self) -> &[f64] {
        &self.component_radii
    }

    /// Largest Perron root among nonzero components reachable from `v`; 0 if none.
    pub fn vertex_lambda(&self, v: usize) -> f64 {
        self.vertex_lambda[v]
    }

    /// `log λ_v`, or 0 when `v` reaches no nonzero component.
    pub fn vertex_entropy(&self, v: usize) -> f64 {
        let l = self.vertex_lambda[v];
        if l >= 1.0 {
            l.ln()
        } else {
            0.0
        }
    }

    pub fn strong_entropy(&self) -> f64 {
        self.component_radii
            .iter()
            .filter(|&&r| r >= 1.0)
            .map(|r| r.ln())
            .fold(0.0, f64::max)
    }

    pub fn entropy_hx(&self) -> f64 {
        let mut min = f64::INFINITY;
        for (c, comp) in self.decomposition.components().iter().enumerate() {
            if !comp.is_sink {
                continue;
            }
            if comp.is_zero {
                return 0.0;
            }
            min = min.min(self.component_radii[c].ln());
        }
        if min.is_finite() {
            min.max(0.0)
        } else {
            0.0
        }
    }

    pub fn trace_entropy(&self, tau: &Trace) -> Result<f64> {
        tau.check_len(&self.graph)?;
        Ok(tau
            .support()
            .into_iter()
            .map(|v| self.vertex_entropy(v))
            .fold(0.0, f64::max))
    }

    /// Vertices `v` with `log λ_v < β`.
    pub fn allowed_vertices(&self, beta: f64) -> Vec<usize> {
        (0..self.graph.vertex_count())
            .filter(|&v| self.vertex_entropy(v) < beta - BETA_SLACK)
            .collect()
    }

    /// Components dominating everything they communicate with, with `λ ≥ 1`.
    pub fn lambda_maximal_components(&self) -> Vec<(usize, f64)> {
        (0..self.decomposition.len())
            .filter_map(|s| {
                let ls = self.component_radii[s];
                if ls < 1.0 {
                    return None;
                }
                let dominates = self
                    .decomposition
                    .reachable_from_component(s)
                    .iter()
                    .all(|&r| ls >= self.component_radii[r] || radii_equal(ls, self.component_radii[r]));
                dominates.then_some((s, ls))
            })
            .collect()
    }

    /// Zero components from which only zero components are reachable.
    fn zero_maximal_components(&self) -> Vec<usize> {
        (0..self.decomposition.len())
            .filter(|&s| {
                self.decomposition
                    .reachable_from_component(s)
                    .iter()
                    .all(|&r| self.decomposition.component(r).is_zero)
            })
            .collect()
    }

    pub fn entropy_report(&self) -> EntropyReport {
        EntropyReport {
            h_strong: self.strong_entropy(),
            h_min: self.entropy_hx(),
            per_vertex: self.vertex_lambda.clone(),
            per_component: self.component_radii.clone(),
        }
    }

    pub fn phase_diagram(&self) -> PhaseDiagram {
        let mut transitions: Vec<Transition> = Vec::new();

        let zero = self.zero_maximal_components();
        if !zero.is_empty() {
            transitions.push(Transition {
                beta: 0.0,
                lambda: 0.0,
                components: zero,
                boundary: true,
            });
        }
        for (s, l) in self.lambda_maximal_components() {
            let boundary = l <= 1.0 || radii_equal(l, 1.0);
            let beta = if boundary { 0.0 } else { l.ln() };
            let lambda = if boundary { 1.0 } else { l };
            match transitions
                .iter_mut()
                .find(|t| t.boundary == boundary && t.lambda != 0.0 && radii_equal(t.lambda, lambda))
            {
                Some(t) => t.components.push(s),
                None => transitions.push(Transition {
                    beta,
                    lambda,
                    components: vec![s],
                    boundary,
                }),
            }
        }
        transitions.sort_by(|a, b| {
            a.beta
                .total_cmp(&b.beta)
                .then_with(|| a.lambda.total_cmp(&b.lambda))
        });

        let cuts: Vec<f64> = transitions.iter().filter(|t| !t.boundary).map(|t| t.beta).collect();
        let mut intervals = Vec::with_capacity(cuts.len() + 1);
        let mut lo = 0.0;
        for hi in cuts.iter().copied().map(Some).chain(std::iter::once(None)) {
            let probe = match hi {
                Some(h) => 0.5 * (lo + h),
                None => lo + 1.0,
            };
            intervals.push(Interval {
                lo,
                hi,
                allowed: self.allowed_vertices(probe),
            });
            if let Some(h) = hi {
                lo = h;
            }
        }
        PhaseDiagram {
            transitions,
            intervals,
        }
    }
}

pub fn strong_entropy(g: &MultiGraph) -> Result<f64> {
    Ok(GraphAnalysis::new(g.clone())?.strong_entropy())
}

pub fn entropy_hx(g: &MultiGraph) -> Result<f64> {
    Ok(GraphAnalysis::new(g.clone())?.entropy_hx())
}

pub fn trace_entropy(g: &MultiGraph, tau: &Trace) -> Result<f64> {
    GraphAnalysis::new(g.clone())?.trace_entropy(tau)
}

pub fn lambda_maximal_components(g: &MultiGraph) -> Result<Vec<(usize, f64)>> {
    Ok(GraphAnalysis::new(g.clone())?.lambda_maximal_components())
}

pub fn phase_diagram(g: &MultiGraph) -> Result<PhaseDiagram> {
    Ok(GraphAnalysis::new(g.clone())?.phase_diagram())
}

/// `log n` when `e^x` is an integer `n` within 1e-9, else the decimal value.
pub fn pretty_log(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf".into() } else { x.to_string() };
    }
    let e = x.exp();
    let n = e.round();
    if n >= 2.0 && (e - n).abs() <= 1e-9 * e.max(1.0) {
        format!("log {}", n as u64)
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub h_strong: f64,
    pub h_min: f64,
    /// `λ_v` per vertex.
    pub per_vertex: Vec<f64>,
    /// `λ_{G_s}` per component, in block order.
    pub per_component: Vec<f64>,
}

impl EntropyReport {
    pub fn to_json(&self, analysis: &GraphAnalysis) -> Value {
        let g = analysis.graph();
        let per_vertex: serde_json::Map<String, Value> = self
            .per_vertex
            .iter()
            .enumerate()
            .map(|(v, l)| (g.label(v).to_string(), json!(l)))
            .collect();
        let per_component: Vec<Value> = self
            .per_component
            .iter()
            .enumerate()
            .map(|(c, l)| {
                json!({
                    "vertices": component_labels(analysis, c),
                    "lambda": l,
                })
            })
            .collect();
        json!({
            "h_strong": self.h_strong,
            "h_strong_pretty": pretty_log(self.h_strong),
            "h_min": self.h_min,
            "h_min_pretty": pretty_log(self.h_min),
            "per_vertex": per_vertex,
            "per_component": per_component,
        })
    }
}

pub(crate) fn component_labels(analysis: &GraphAnalysis, c: usize) -> Vec<String> {
    analysis
        .decomposition()
        .component(c)
        .vertices
        .iter()
        .map(|&v| analysis.graph().label(v).to_string())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub beta: f64,
    pub lambda: f64,
    pub components: Vec<usize>,
    /// Sits at β = 0, outside the β > 0 simplex machinery.
    pub boundary: bool,
}

/// `(lo, hi]`, with `hi = None` meaning `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: Option<f64>,
    pub allowed: Vec<usize>,
}

impl Interval {
    pub fn contains(&self, beta: f64) -> bool {
        beta > self.lo + BETA_SLACK && self.hi.is_none_or(|h| beta <= h + BETA_SLACK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub transitions: Vec<Transition>,
    pub intervals: Vec<Interval>,
}

impl PhaseDiagram {
    /// β values of the genuine (β > 0) transitions.
    pub fn transition_betas(&self) -> Vec<f64> {
        self.transitions.iter().filter(|t| !t.boundary).map(|t| t.beta).collect()
    }

    pub fn includes_beta_zero_entry(&self) -> bool {
        self.transitions.iter().any(|t| t.boundary)
    }

    pub fn interval_of(&self, beta: f64) -> Option<&Interval> {
        self.intervals.iter().find(|i| i.contains(beta))
    }

    pub fn to_json(&self, analysis: &GraphAnalysis) -> Value {
        let g = analysis.graph();
        json!({
            "transitions": self.transitions.iter().map(|t| json!({
                "beta": t.beta,
                "pretty": pretty_log(t.beta),
                "lambda": t.lambda,
                "components": t.components.iter().map(|&c| component_labels(analysis, c)).collect::<Vec<_>>(),
                "boundary": t.boundary,
            })).collect::<Vec<_>>(),
            "includes_beta_zero_entry": self.includes_beta_zero_entry(),
            "intervals": self.intervals.iter().map(|i| json!({
                "lo": i.lo,
                "hi": i.hi,
                "allowed": i.allowed.iter().map(|&v| g.label(v)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}
