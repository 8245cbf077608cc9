use std::path::Path;

use serde::Deserialize;

use crate::error::{GraphError, Result};
use crate::graph::FiniteGraph;
use crate::metric::TableMetric;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    vertices: Vec<VertexRecord>,
    #[serde(default)]
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    metric: Option<MetricRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexRecord {
    id: String,
    mu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    a: String,
    b: String,
    w: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MetricRecord {
    Hop,
    Table { distances: Vec<DistanceRecord> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistanceRecord {
    a: String,
    b: String,
    d: f64,
}

/// Parses a graph document:
///
/// ```json
/// {"vertices": [{"id": "a", "mu": 1.0}, {"id": "b", "mu": 1.0}],
///  "edges": [{"a": "a", "b": "b", "w": 1.0}],
///  "metric": {"kind": "hop"}}
/// ```
///
/// `metric` defaults to hop distance; `{"kind": "table", "distances": [...]}`
/// supplies every pairwise distance explicitly.
pub fn parse_graph_json(text: &str) -> Result<(FiniteGraph<String>, TableMetric<String>), GraphError> {
    let doc: GraphDocument = serde_json::from_str(text)?;
    let mut builder = FiniteGraph::builder();
    for v in doc.vertices {
        builder = builder.vertex(v.id, v.mu);
    }
    for e in doc.edges {
        builder = builder.edge(e.a, e.b, e.w);
    }
    let graph = builder.build()?;
    let metric = match doc.metric.unwrap_or(MetricRecord::Hop) {
        MetricRecord::Hop => TableMetric::hop(&graph, graph.vertices()),
        MetricRecord::Table { distances } => TableMetric::explicit(
            graph.vertices(),
            distances.into_iter().map(|r| (r.a, r.b, r.d)),
        )?,
    };
    Ok((graph, metric))
}

pub fn load_graph_json(path: impl AsRef<Path>) -> Result<(FiniteGraph<String>, TableMetric<String>)> {
    let text = std::fs::read_to_string(path).map_err(GraphError::from)?;
    Ok(parse_graph_json(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::metric::jump_size;

    #[test]
    fn two_vertices_one_edge() {
        let (g, d) = parse_graph_json(
            r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":1}],"edges":[{"a":"a","b":"b","w":1}]}"#,
        )
        .unwrap();
        assert_eq!(g.neighbors(&"b".to_string()), vec![("a".to_string(), 1.0)]);
        assert_eq!(jump_size(&g, &d, g.vertices()).explored, 1.0);
    }

    #[test]
    fn diagnostics_are_distinct() {
        let self_loop = r#"{"vertices":[{"id":"a","mu":1}],"edges":[{"a":"a","b":"a","w":1}]}"#;
        let err = parse_graph_json(self_loop).unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop(_)));
        assert!(err.to_string().contains("self-loop"));

        let asym = r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":1}],
            "edges":[{"a":"a","b":"b","w":1},{"a":"b","b":"a","w":2}]}"#;
        assert!(matches!(parse_graph_json(asym).unwrap_err(), GraphError::Asymmetric { .. }));

        let neg = r#"{"vertices":[{"id":"a","mu":-1}]}"#;
        assert!(matches!(parse_graph_json(neg).unwrap_err(), GraphError::NonPositiveMeasure { .. }));

        let unknown_key = r#"{"vertices":[],"extra":1}"#;
        assert!(matches!(parse_graph_json(unknown_key).unwrap_err(), GraphError::Schema(_)));

        let missing = r#"{"vertices":[{"id":"a","mu":1}],"edges":[{"a":"a","b":"z","w":1}]}"#;
        assert!(matches!(parse_graph_json(missing).unwrap_err(), GraphError::UnknownVertex(_)));
    }

    #[test]
    fn explicit_metric_table() {
        let text = r#"{"vertices":[{"id":"a","mu":1},{"id":"b","mu":1}],
            "edges":[{"a":"a","b":"b","w":1}],
            "metric":{"kind":"table","distances":[{"a":"a","b":"b","d":2.5}]}}"#;
        let (g, d) = parse_graph_json(text).unwrap();
        assert_eq!(jump_size(&g, &d, g.vertices()).explored, 2.5);
    }
}
