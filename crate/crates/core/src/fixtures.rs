//! Bundled example graphs with their expected phase structure.

use serde_json::{json, Map, Value};

use crate::entropy::GraphAnalysis;
use crate::error::Result;
use crate::graph::{parse_graph_value, MultiGraph, Trace};
use crate::spectral::avt_extreme_points;

pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub labels: &'static [&'static str],
    pub matrix: &'static [&'static [u64]],
    expected: fn() -> Value,
}

impl Fixture {
    pub fn graph(&self) -> MultiGraph {
        MultiGraph::from_matrix(self.labels, self.matrix).expect("bundled fixture is valid")
    }

    pub fn expected(&self) -> Value {
        (self.expected)()
    }

    /// `{"name", "description", "graph", "expected"}`.
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "description": self.description,
            "graph": self.graph().to_json(),
            "expected": self.expected(),
        })
    }
}

fn ln(x: f64) -> f64 {
    x.ln()
}

fn gamma() -> f64 {
    1.0 + 5f64.sqrt()
}

fn transition(beta: f64, boundary: bool, components: &[&[&str]]) -> Value {
    json!({ "beta": beta, "boundary": boundary, "components": components })
}

fn extremes(beta: f64, traces: &[&[(&str, f64)]]) -> Value {
    let traces: Vec<Value> = traces
        .iter()
        .map(|t| Value::Object(t.iter().map(|(l, w)| (l.to_string(), json!(w))).collect()))
        .collect();
    json!({ "beta": beta, "extremes": traces })
}

#[allow(clippy::too_many_arguments)]
fn expected(
    h_min: f64,
    h_strong: f64,
    transitions: Vec<Value>,
    allowed: &[&[&str]],
    cuntz_allowed: &[&[&str]],
    averaging: Vec<Value>,
    sources: &[&str],
    ideal: &[&str],
) -> Value {
    json!({
        "h_min": h_min,
        "h_strong": h_strong,
        "transitions": transitions,
        "allowed": allowed,
        "cuntz_allowed": cuntz_allowed,
        "averaging": averaging,
        "sources": sources,
        "ideal": ideal,
    })
}

pub static FIXTURES: &[Fixture] = &[
    Fixture {
        name: "ex8_1",
        description: "two vertices: two loops at v and one edge v -> w",
        labels: &["v", "w"],
        matrix: &[&[2, 1], &[0, 0]],
        expected: || {
            expected(
                0.0,
                ln(2.0),
                vec![transition(0.0, true, &[&["w"]]), transition(ln(2.0), false, &[&["v"]])],
                &[&["w"], &["v", "w"]],
                &[&[], &[]],
                vec![
                    extremes(0.0, &[]),
                    extremes(ln(2.0), &[&[("v", 2.0 / 3.0), ("w", 1.0 / 3.0)]]),
                ],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex8_2",
        description: "three-vertex chain with loops 1, 1, 2",
        labels: &["v1", "v2", "v3"],
        matrix: &[&[1, 1, 0], &[0, 1, 1], &[0, 0, 2]],
        expected: || {
            expected(
                ln(2.0),
                ln(2.0),
                vec![transition(ln(2.0), false, &[&["v3"]])],
                &[&[], &["v1", "v2", "v3"]],
                &[&[], &[]],
                vec![extremes(ln(2.0), &[&[("v3", 1.0)]])],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex8_3",
        description: "a 2-loop vertex feeding a 1-loop sink and a 3-loop sink",
        labels: &["v1", "v2", "v3"],
        matrix: &[&[2, 1, 1], &[0, 1, 0], &[0, 0, 3]],
        expected: || {
            expected(
                0.0,
                ln(3.0),
                vec![transition(0.0, true, &[&["v2"]]), transition(ln(3.0), false, &[&["v3"]])],
                &[&["v2"], &["v1", "v2", "v3"]],
                &[&[], &[]],
                vec![extremes(0.0, &[&[("v2", 1.0)]]), extremes(ln(3.0), &[&[("v3", 1.0)]])],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex8_4",
        description: "loops 2 and 3 both feeding a single-loop sink v0",
        labels: &["v1", "v2", "v0"],
        matrix: &[&[2, 0, 1], &[0, 3, 1], &[0, 0, 1]],
        expected: || {
            expected(
                0.0,
                ln(3.0),
                vec![
                    transition(0.0, true, &[&["v0"]]),
                    transition(ln(2.0), false, &[&["v1"]]),
                    transition(ln(3.0), false, &[&["v2"]]),
                ],
                &[&["v0"], &["v1", "v0"], &["v1", "v2", "v0"]],
                &[&[], &[], &[]],
                vec![
                    extremes(0.0, &[&[("v0", 1.0)]]),
                    extremes(ln(2.0), &[&[("v1", 0.5), ("v0", 0.5)]]),
                    extremes(ln(3.0), &[&[("v2", 2.0 / 3.0), ("v0", 1.0 / 3.0)]]),
                ],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex6_1",
        description: "loop 2 at w feeding loop 3 at v",
        labels: &["w", "v"],
        matrix: &[&[2, 1], &[0, 3]],
        expected: || {
            expected(
                ln(3.0),
                ln(3.0),
                vec![transition(ln(3.0), false, &[&["v"]])],
                &[&[], &["w", "v"]],
                &[&[], &[]],
                vec![extremes(ln(3.0), &[&[("v", 1.0)]])],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex6_2",
        description: "loop 3 at w feeding loop 2 at v",
        labels: &["w", "v"],
        matrix: &[&[3, 1], &[0, 2]],
        expected: || {
            expected(
                ln(2.0),
                ln(3.0),
                vec![transition(ln(2.0), false, &[&["v"]]), transition(ln(3.0), false, &[&["w"]])],
                &[&[], &["v"], &["w", "v"]],
                &[&[], &[], &[]],
                vec![
                    extremes(ln(2.0), &[&[("v", 1.0)]]),
                    extremes(ln(3.0), &[&[("w", 0.5), ("v", 0.5)]]),
                ],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex6_3",
        description: "irreducible pair {u, w} with radius 1 + sqrt 5 feeding loop 2 at v",
        labels: &["u", "w", "v"],
        matrix: &[&[2, 2, 0], &[2, 0, 1], &[0, 0, 2]],
        expected: || {
            let g = gamma();
            expected(
                ln(2.0),
                ln(g),
                vec![transition(ln(2.0), false, &[&["v"]]), transition(ln(g), false, &[&["u", "w"]])],
                &[&[], &["v"], &["u", "w", "v"]],
                &[&[], &[], &[]],
                vec![
                    extremes(ln(2.0), &[&[("v", 1.0)]]),
                    extremes(
                        ln(g),
                        &[&[("u", 2.0 / (g + 1.0)), ("w", (g - 2.0) / (g + 1.0)), ("v", 1.0 / (g + 1.0))]],
                    ),
                ],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex6_4",
        description: "loop 3 at w and a source u_1, both reaching loop 2 at v",
        labels: &["w", "u_2", "u_1", "v"],
        matrix: &[&[3, 1, 0, 0], &[0, 0, 0, 1], &[0, 0, 0, 1], &[0, 0, 0, 2]],
        expected: || {
            expected(
                ln(2.0),
                ln(3.0),
                vec![transition(ln(2.0), false, &[&["v"]]), transition(ln(3.0), false, &[&["w"]])],
                &[&[], &["u_2", "u_1", "v"], &["w", "u_2", "u_1", "v"]],
                &[&[], &["u_1"], &["u_1"]],
                vec![
                    extremes(ln(2.0), &[&[("v", 1.0)]]),
                    extremes(ln(3.0), &[&[("w", 0.6), ("u_2", 0.2), ("v", 0.2)]]),
                ],
                &["u_1"],
                &["u_1"],
            )
        },
    },
    Fixture {
        name: "ex6_5",
        description: "loop 3 at w through u_2 to loop 2 at v, ending in the zero sink u_1",
        labels: &["w", "u_2", "v", "u_1"],
        matrix: &[&[3, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 2, 1], &[0, 0, 0, 0]],
        expected: || {
            expected(
                0.0,
                ln(3.0),
                vec![
                    transition(0.0, true, &[&["u_1"]]),
                    transition(ln(2.0), false, &[&["v"]]),
                    transition(ln(3.0), false, &[&["w"]]),
                ],
                &[&["u_1"], &["u_2", "v", "u_1"], &["w", "u_2", "v", "u_1"]],
                &[&[], &[], &[]],
                vec![
                    extremes(0.0, &[]),
                    extremes(ln(2.0), &[&[("v", 2.0 / 3.0), ("u_1", 1.0 / 3.0)]]),
                    extremes(
                        ln(3.0),
                        &[&[("w", 9.0 / 16.0), ("u_2", 3.0 / 16.0), ("v", 3.0 / 16.0), ("u_1", 1.0 / 16.0)]],
                    ),
                ],
                &[],
                &[],
            )
        },
    },
    Fixture {
        name: "ex6_6",
        description: "ex6_5 with an extra source u_3 pointing at u_1",
        labels: &["w", "u_2", "v", "u_1", "u_3"],
        matrix: &[
            &[3, 1, 0, 0, 0],
            &[0, 0, 1, 0, 0],
            &[0, 0, 2, 1, 0],
            &[0, 0, 0, 0, 0],
            &[0, 0, 0, 1, 0],
        ],
        expected: || {
            expected(
                0.0,
                ln(3.0),
                vec![
                    transition(0.0, true, &[&["u_1"], &["u_3"]]),
                    transition(ln(2.0), false, &[&["v"]]),
                    transition(ln(3.0), false, &[&["w"]]),
                ],
                &[&["u_1", "u_3"], &["u_2", "v", "u_1", "u_3"], &["w", "u_2", "v", "u_1", "u_3"]],
                &[&["u_3"], &["u_3"], &["u_3"]],
                vec![
                    extremes(0.0, &[]),
                    extremes(ln(2.0), &[&[("v", 2.0 / 3.0), ("u_1", 1.0 / 3.0)]]),
                    extremes(
                        ln(3.0),
                        &[&[("w", 9.0 / 16.0), ("u_2", 3.0 / 16.0), ("v", 3.0 / 16.0), ("u_1", 1.0 / 16.0)]],
                    ),
                ],
                &["u_3"],
                &["u_3"],
            )
        },
    },
    Fixture {
        name: "ex6_7",
        description: "three 2-loop vertices, x feeding v and w, both feeding the 1-loop sink u",
        labels: &["x", "v", "w", "u"],
        matrix: &[&[2, 1, 1, 0], &[0, 2, 0, 1], &[0, 0, 2, 1], &[0, 0, 0, 1]],
        expected: || {
            expected(
                0.0,
                ln(2.0),
                vec![transition(0.0, true, &[&["u"]]), transition(ln(2.0), false, &[&["v"], &["w"], &["x"]])],
                &[&["u"], &["x", "v", "w", "u"]],
                &[&[], &[]],
                vec![
                    extremes(0.0, &[&[("u", 1.0)]]),
                    extremes(ln(2.0), &[&[("v", 0.5), ("u", 0.5)], &[("w", 0.5), ("u", 0.5)]]),
                ],
                &[],
                &[],
            )
        },
    },
];

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

fn labels(g: &MultiGraph, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| g.label(v).to_string()).collect()
}

fn trace_map(g: &MultiGraph, t: &Trace) -> Value {
    let map: Map<String, Value> = t
        .support()
        .into_iter()
        .map(|v| (g.label(v).to_string(), json!(t.weight(v))))
        .collect();
    Value::Object(map)
}

/// The computed counterpart of a fixture's `expected` block.
pub fn observe(analysis: &GraphAnalysis) -> Result<Value> {
    let g = analysis.graph();
    let dec = analysis.decomposition();
    let pd = analysis.phase_diagram();
    let sources = g.sources();
    let transitions: Vec<Value> = pd
        .transitions
        .iter()
        .map(|t| {
            let mut comps: Vec<Vec<String>> = t
                .components
                .iter()
                .map(|&c| labels(g, &dec.component(c).vertices))
                .collect();
            comps.sort();
            json!({ "beta": t.beta, "boundary": t.boundary, "components": comps })
        })
        .collect();
    let allowed: Vec<Vec<String>> = pd.intervals.iter().map(|i| labels(g, &i.allowed)).collect();
    let cuntz: Vec<Vec<String>> = pd
        .intervals
        .iter()
        .map(|i| {
            let vs: Vec<usize> = i.allowed.iter().copied().filter(|v| sources.contains(v)).collect();
            labels(g, &vs)
        })
        .collect();
    let mut betas: Vec<f64> = pd.transitions.iter().map(|t| t.beta).collect();
    betas.dedup();
    let averaging = betas
        .into_iter()
        .map(|b| {
            let p = avt_extreme_points(g, b)?;
            let ts: Vec<Value> = p.extreme_points.iter().map(|t| trace_map(g, t)).collect();
            Ok(json!({ "beta": b, "extremes": ts }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "h_min": analysis.entropy_hx(),
        "h_strong": analysis.strong_entropy(),
        "transitions": transitions,
        "allowed": allowed,
        "cuntz_allowed": cuntz,
        "averaging": averaging,
        "sources": labels(g, &sources),
        "ideal": labels(g, &dec.ideal_vertices()),
    }))
}

/// Differences between two JSON trees, numbers compared within `tol`.
pub fn json_diff(expected: &Value, observed: &Value, tol: f64, at: &str, out: &mut Vec<String>) {
    match (expected, observed) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if !((a - b).abs() <= tol) {
                out.push(format!("{at}: expected {a}, got {b}"));
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                out.push(format!("{at}: expected {} entries, got {}", a.len(), b.len()));
                return;
            }
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                json_diff(x, y, tol, &format!("{at}[{i}]"), out);
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            for k in a.keys().chain(b.keys().filter(|k| !a.contains_key(*k))) {
                match (a.get(k), b.get(k)) {
                    (Some(x), Some(y)) => json_diff(x, y, tol, &format!("{at}.{k}"), out),
                    (Some(_), None) => out.push(format!("{at}.{k}: missing")),
                    (None, Some(_)) => out.push(format!("{at}.{k}: unexpected")),
                    (None, None) => {}
                }
            }
        }
        (a, b) if a == b => {}
        (a, b) => out.push(format!("{at}: expected {a}, got {b}")),
    }
}

/// Tolerance for golden comparisons.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Re-analyzes a fixture document and lists every mismatch.
pub fn check_document(doc: &Value) -> Result<Vec<String>> {
    let graph = parse_graph_value(&doc["graph"])?;
    let analysis = GraphAnalysis::new(graph)?;
    let observed = observe(&analysis)?;
    let mut out = Vec::new();
    json_diff(&doc["expected"], &observed, CHECK_TOLERANCE, "expected", &mut out);
    Ok(out)
}
