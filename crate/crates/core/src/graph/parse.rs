use serde_json::Value;

use super::MultiGraph;
use crate::error::ParseError;

/// Reads either `{"vertices": [...], "matrix": [[...]]}` or
/// `{"vertices": [...], "edges": [{"from", "to", "count"?, "labels"?}]}`.
/// A fixture document `{"graph": {...}, ...}` is unwrapped.
pub fn parse_graph(text: &str) -> Result<MultiGraph, ParseError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    parse_graph_value(&value)
}

pub fn parse_graph_value(value: &Value) -> Result<MultiGraph, ParseError> {
    let obj = value.as_object().ok_or_else(|| ParseError::Field {
        field: "<root>".into(),
        message: "expected a JSON object".into(),
    })?;
    if let (None, Some(inner)) = (obj.get("vertices"), obj.get("graph")) {
        return parse_graph_value(inner);
    }

    let labels = parse_labels(obj.get("vertices"))?;
    let n = labels.len();

    match (obj.get("matrix"), obj.get("edges")) {
        (Some(matrix), None) => {
            let adjacency = parse_matrix(matrix, n)?;
            let g = MultiGraph::new(labels, adjacency)?;
            match obj.get("edge_labels") {
                Some(v) => g.with_edge_labels(string_list(v, "edge_labels")?),
                None => Ok(g),
            }
        }
        (None, Some(edges)) => parse_edge_list(edges, labels),
        _ => Err(ParseError::AmbiguousFormat),
    }
}

fn parse_labels(value: Option<&Value>) -> Result<Vec<String>, ParseError> {
    let value = value.ok_or_else(|| ParseError::Field {
        field: "vertices".into(),
        message: "missing".into(),
    })?;
    let labels = string_list(value, "vertices")?;
    if labels.is_empty() {
        return Err(ParseError::NoVertices);
    }
    Ok(labels)
}

fn string_list(value: &Value, field: &str) -> Result<Vec<String>, ParseError> {
    let arr = value.as_array().ok_or_else(|| ParseError::Field {
        field: field.into(),
        message: "expected an array of strings".into(),
    })?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str().map(str::to_string).ok_or_else(|| ParseError::Field {
                field: format!("{field}[{i}]"),
                message: "expected a string".into(),
            })
        })
        .collect()
}

fn parse_count(value: &Value, field: &str) -> Result<u64, ParseError> {
    if let Some(c) = value.as_u64() {
        return Ok(c);
    }
    if let Some(c) = value.as_i64() {
        return Err(ParseError::NegativeCount {
            field: field.into(),
            value: c,
        });
    }
    if let Some(f) = value.as_f64() {
        if f < 0.0 && f.is_finite() && f.fract() == 0.0 {
            return Err(ParseError::NegativeCount {
                field: field.into(),
                value: f as i64,
            });
        }
        if f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < u64::MAX as f64 {
            return Ok(f as u64);
        }
    }
    Err(ParseError::InvalidCount {
        field: field.into(),
        value: value.to_string(),
    })
}

fn parse_matrix(value: &Value, n: usize) -> Result<Vec<Vec<u64>>, ParseError> {
    let rows = value.as_array().ok_or_else(|| ParseError::Field {
        field: "matrix".into(),
        message: "expected an array of rows".into(),
    })?;
    if rows.len() != n {
        return Err(ParseError::Field {
            field: "matrix".into(),
            message: format!("{} rows for {} vertices", rows.len(), n),
        });
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let entries = row.as_array().ok_or_else(|| ParseError::Field {
                field: format!("matrix[{i}]"),
                message: "expected an array".into(),
            })?;
            if entries.len() != n {
                return Err(ParseError::NonSquare {
                    expected: n,
                    row: i,
                    found: entries.len(),
                });
            }
            entries
                .iter()
                .enumerate()
                .map(|(j, v)| parse_count(v, &format!("matrix[{i}][{j}]")))
                .collect()
        })
        .collect()
}

fn parse_edge_list(value: &Value, labels: Vec<String>) -> Result<MultiGraph, ParseError> {
    let n = labels.len();
    let entries = value.as_array().ok_or_else(|| ParseError::Field {
        field: "edges".into(),
        message: "expected an array".into(),
    })?;
    let index_of = |field: String, label: &str| {
        labels
            .iter()
            .position(|l| l == label)
            .ok_or(ParseError::UnknownVertex {
                field,
                label: label.to_string(),
            })
    };

    let mut adjacency = vec![vec![0u64; n]; n];
    // (source, range) -> names in order of appearance
    let mut names: Vec<Vec<Vec<Option<String>>>> = vec![vec![Vec::new(); n]; n];
    let mut any_named = false;

    for (k, entry) in entries.iter().enumerate() {
        let field = |name: &str| format!("edges[{k}].{name}");
        let obj = entry.as_object().ok_or_else(|| ParseError::Field {
            field: format!("edges[{k}]"),
            message: "expected an object".into(),
        })?;
        let endpoint = |name: &str| -> Result<usize, ParseError> {
            let label = obj
                .get(name)
                .and_then(Value::as_str)
                .ok_or_else(|| ParseError::Field {
                    field: field(name),
                    message: "expected a vertex label".into(),
                })?;
            index_of(field(name), label)
        };
        let s = endpoint("from")?;
        let r = endpoint("to")?;
        let count = match obj.get("count") {
            Some(v) => parse_count(v, &field("count"))?,
            None => 1,
        };
        let given = match obj.get("labels") {
            Some(v) => {
                let given = string_list(v, &field("labels"))?;
                if given.len() as u64 != count {
                    return Err(ParseError::Field {
                        field: field("labels"),
                        message: format!("{} labels for count {}", given.len(), count),
                    });
                }
                any_named = true;
                given.into_iter().map(Some).collect()
            }
            None => vec![None; count as usize],
        };
        adjacency[s][r] += count;
        names[s][r].extend(given);
    }

    let g = MultiGraph::new(labels, adjacency)?;
    if !any_named {
        return Ok(g);
    }
    let edge_labels = g
        .edges()
        .iter()
        .enumerate()
        .map(|(id, e)| {
            names[e.source][e.range][e.index as usize]
                .clone()
                .unwrap_or_else(|| g.edge_label(id))
        })
        .collect();
    g.with_edge_labels(edge_labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_and_edge_list_agree() {
        let m = parse_graph(r#"{"vertices":["v","w"],"matrix":[[2,1],[0,0]]}"#).unwrap();
        let e = parse_graph(
            r#"{"vertices":["v","w"],"edges":[{"from":"v","to":"v","count":2},{"from":"v","to":"w","count":1}]}"#,
        )
        .unwrap();
        assert_eq!(m, e);
        assert_eq!(m.count(0, 0), 2);
        assert_eq!(m.count(0, 1), 1);
        assert_eq!(m.edge_count(), 3);
    }

    #[test]
    fn single_vertex_no_edges() {
        let g = parse_graph(r#"{"vertices":["a"],"matrix":[[0]]}"#).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn distinct_errors() {
        let dup = parse_graph(r#"{"vertices":["a","a"],"matrix":[[0,0],[0,0]]}"#).unwrap_err();
        assert!(matches!(dup, ParseError::DuplicateLabel(_)));

        let neg = parse_graph(r#"{"vertices":["a"],"matrix":[[-1]]}"#).unwrap_err();
        assert!(matches!(neg, ParseError::NegativeCount { value: -1, .. }));

        let sq = parse_graph(r#"{"vertices":["a","b"],"matrix":[[0,0],[0]]}"#).unwrap_err();
        assert!(matches!(sq, ParseError::NonSquare { row: 1, found: 1, .. }));

        let unk = parse_graph(r#"{"vertices":["a"],"edges":[{"from":"a","to":"b"}]}"#).unwrap_err();
        match unk {
            ParseError::UnknownVertex { field, label } => {
                assert_eq!(field, "edges[0].to");
                assert_eq!(label, "b");
            }
            other => panic!("unexpected {other:?}"),
        }

        let frac = parse_graph(r#"{"vertices":["a"],"matrix":[[1.5]]}"#).unwrap_err();
        assert!(matches!(frac, ParseError::InvalidCount { .. }));

        let both = parse_graph(r#"{"vertices":["a"],"matrix":[[0]],"edges":[]}"#).unwrap_err();
        assert_eq!(both, ParseError::AmbiguousFormat);
    }

    #[test]
    fn named_edges_survive() {
        let g = parse_graph(
            r#"{"vertices":["v"],"edges":[{"from":"v","to":"v","count":2,"labels":["e","f"]}]}"#,
        )
        .unwrap();
        assert_eq!(g.edge_by_label("f"), Some(1));
        assert_eq!(g.edge_label(0), "e");
        let round = parse_graph_value(&g.to_json()).unwrap();
        assert_eq!(round, g);
    }
}
