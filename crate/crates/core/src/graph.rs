//! Weighted directed graphs over factors and their JSON form.
//!
//! ```json
//! {"factors": ["f1", "f2"], "edges": [["f1", "f2", 0.5]]}
//! ```
//!
//! Weights are signed; only magnitudes are used when projecting onto columns.
//! Both `a -> b` and `b -> a` may be present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphDocument {
    factors: Vec<String>,
    edges: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorCausalGraph {
    factors: Vec<String>,
    edges: Vec<Edge>,
}

impl FactorCausalGraph {
    pub fn new(factors: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        for e in &edges {
            if e.from == e.to {
                return Err(Error::Schema(format!("self-edge on factor {:?}", e.from)));
            }
            if !e.weight.is_finite() {
                return Err(Error::Schema(format!(
                    "edge {} -> {} has non-finite weight",
                    e.from, e.to
                )));
            }
            for end in [&e.from, &e.to] {
                if !factors.contains(end) {
                    return Err(Error::Schema(format!("edge endpoint {end:?} is not a listed factor")));
                }
            }
        }
        Ok(Self { factors, edges })
    }

    pub fn empty(factors: Vec<String>) -> Self {
        Self {
            factors,
            edges: Vec::new(),
        }
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    /// Unordered adjacent pairs, each reported once with names sorted.
    pub fn skeleton(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|e| {
                if e.from <= e.to {
                    (e.from.clone(), e.to.clone())
                } else {
                    (e.to.clone(), e.from.clone())
                }
            })
            .collect();
        pairs.sort();
        pairs.dedup();
        pairs
    }

    /// Equality up to edge order.
    pub fn same_as(&self, other: &Self) -> bool {
        let key = |g: &Self| {
            let mut v: Vec<(String, String, u64)> = g
                .edges
                .iter()
                .map(|e| (e.from.clone(), e.to.clone(), e.weight.to_bits()))
                .collect();
            v.sort();
            v
        };
        self.factors == other.factors && key(self) == key(other)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            factors: self.factors.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.from.clone(), e.to.clone(), e.weight))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("graph JSON: {e}")))?;
        Self::new(
            doc.factors,
            doc.edges
                .into_iter()
                .map(|(from, to, weight)| Edge { from, to, weight })
                .collect(),
        )
    }
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<FactorCausalGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FactorCausalGraph::from_json(&text)
}

pub fn save_graph(graph: &FactorCausalGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, graph.to_json() + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| (*s).to_owned()).collect()
    }

    #[test]
    fn parses_single_edge() {
        let g = FactorCausalGraph::from_json(r#"{"factors":["f1","f2"],"edges":[["f1","f2",0.5]]}"#).unwrap();
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].weight, 0.5);
        assert!(g.has_edge("f1", "f2"));
        assert!(!g.has_edge("f2", "f1"));
    }

    #[test]
    fn rejects_self_edge() {
        let err = FactorCausalGraph::from_json(r#"{"factors":["f1"],"edges":[["f1","f1",1.0]]}"#).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn rejects_non_finite_weight() {
        let err = FactorCausalGraph::new(
            names(&["a", "b"]),
            vec![Edge {
                from: "a".into(),
                to: "b".into(),
                weight: f64::NAN,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        // JSON has no NaN literal; a string in the weight slot is a schema error too.
        assert!(FactorCausalGraph::from_json(r#"{"factors":["a","b"],"edges":[["a","b","NaN"]]}"#).is_err());
    }

    #[test]
    fn rejects_unlisted_endpoint() {
        assert!(FactorCausalGraph::from_json(r#"{"factors":["a"],"edges":[["a","b",1.0]]}"#).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let g = FactorCausalGraph::new(
            names(&["f1", "f2", "f3"]),
            vec![
                Edge { from: "f1".into(), to: "f2".into(), weight: 0.25 },
                Edge { from: "f2".into(), to: "f1".into(), weight: 0.25 },
                Edge { from: "f3".into(), to: "f2".into(), weight: -1.0 / 3.0 },
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        save_graph(&g, &path).unwrap();
        let back = load_graph(&path).unwrap();
        assert!(g.same_as(&back));
        assert_eq!(back.skeleton(), vec![("f1".into(), "f2".into()), ("f2".into(), "f3".into())]);
    }
}
