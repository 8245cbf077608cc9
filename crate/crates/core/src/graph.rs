//! Weighted graphs `(V, ω, μ)` and real-valued functions on their vertices.
//!
//! A graph only has to answer two local questions: who are the neighbors of
//! `x` (with their edge weights) and what is the node measure at `x`. That is
//! enough for every stencil computation in the crate, and it lets the infinite
//! families (lattices, trees) be generated lazily while loaded graphs stay
//! explicit.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{Debug, Display};
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, GraphError, Result};

/// How a graph stores its vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    FiniteExplicit,
    LazyProcedural,
}

/// A locally finite weighted graph.
///
/// Implementations must return neighbors in ascending vertex order, never list
/// `x` among its own neighbors, and report the same weight from both ends of
/// an edge.
pub trait WeightedGraph: Sync {
    type Vertex: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync;

    fn neighbors(&self, x: &Self::Vertex) -> Vec<(Self::Vertex, f64)>;

    /// Node measure `μ(x) > 0`.
    fn measure(&self, x: &Self::Vertex) -> f64;

    fn flavor(&self) -> Flavor;

    /// Whether `x` belongs to the part of the graph this instance can
    /// generate. Explorations stop with an error instead of stepping outside.
    fn contains(&self, _x: &Self::Vertex) -> bool {
        true
    }
}

/// A real-valued function on vertices.
///
/// `value` returns `None` where the function is not known; stencil
/// operations turn that into [`Error::StencilIncomplete`].
pub trait VertexFunction<V>: Sync {
    fn value(&self, x: &V) -> Option<f64>;

    /// The finite support of the function, when it has one.
    fn finite_support(&self) -> Option<Vec<V>> {
        None
    }
}

impl<V, F> VertexFunction<V> for F
where
    F: Fn(&V) -> f64 + Sync,
{
    fn value(&self, x: &V) -> Option<f64> {
        Some(self(x))
    }
}

/// Table-backed vertex function.
#[derive(Debug, Clone)]
pub struct TableFunction<V> {
    values: BTreeMap<V, f64>,
    fallback: Option<f64>,
}

impl<V: Ord + Clone> TableFunction<V> {
    /// Defined only on the listed vertices.
    pub fn partial(values: impl IntoIterator<Item = (V, f64)>) -> Self {
        Self {
            values: values.into_iter().collect(),
            fallback: None,
        }
    }

    /// Zero off the listed vertices, so the support is finite.
    pub fn finitely_supported(values: impl IntoIterator<Item = (V, f64)>) -> Self {
        Self {
            values: values.into_iter().collect(),
            fallback: Some(0.0),
        }
    }

    /// Takes `fallback` off the listed vertices.
    pub fn with_fallback(values: impl IntoIterator<Item = (V, f64)>, fallback: f64) -> Self {
        Self {
            values: values.into_iter().collect(),
            fallback: Some(fallback),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<V: Ord + Clone + Sync + Send> VertexFunction<V> for TableFunction<V> {
    fn value(&self, x: &V) -> Option<f64> {
        self.values.get(x).copied().or(self.fallback)
    }

    fn finite_support(&self) -> Option<Vec<V>> {
        match self.fallback {
            Some(f) if f == 0.0 => Some(
                self.values
                    .iter()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(k, _)| k.clone())
                    .collect(),
            ),
            _ => None,
        }
    }
}

pub(crate) fn eval<V: Display, F: VertexFunction<V> + ?Sized>(f: &F, x: &V) -> Result<f64> {
    f.value(x).ok_or_else(|| Error::StencilIncomplete {
        vertex: x.to_string(),
    })
}

/// An explicit finite graph with validated weights.
#[derive(Debug, Clone)]
pub struct FiniteGraph<V> {
    index: HashMap<V, usize>,
    vertices: Vec<V>,
    measure: Vec<f64>,
    adjacency: Vec<Vec<(V, f64)>>,
}

impl<V> FiniteGraph<V>
where
    V: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync,
{
    pub fn builder() -> FiniteGraphBuilder<V> {
        FiniteGraphBuilder {
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Vertices in ascending order.
    pub fn vertices(&self) -> &[V] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, x: &V) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Every undirected edge once, as `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> Vec<(V, V, f64)> {
        let mut out = Vec::new();
        for (i, x) in self.vertices.iter().enumerate() {
            for (y, w) in &self.adjacency[i] {
                if x < y {
                    out.push((x.clone(), y.clone(), *w));
                }
            }
        }
        out
    }

    /// Returns a copy with every node measure multiplied by `factor`.
    pub fn with_scaled_measure(&self, factor: f64) -> Self {
        let mut g = self.clone();
        for m in &mut g.measure {
            *m *= factor;
        }
        g
    }
}

impl<V> WeightedGraph for FiniteGraph<V>
where
    V: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync,
{
    type Vertex = V;

    fn neighbors(&self, x: &V) -> Vec<(V, f64)> {
        match self.index.get(x) {
            Some(&i) => self.adjacency[i].clone(),
            None => Vec::new(),
        }
    }

    fn measure(&self, x: &V) -> f64 {
        self.index.get(x).map_or(f64::NAN, |&i| self.measure[i])
    }

    fn flavor(&self) -> Flavor {
        Flavor::FiniteExplicit
    }

    fn contains(&self, x: &V) -> bool {
        self.index.contains_key(x)
    }
}

pub struct FiniteGraphBuilder<V> {
    vertices: Vec<(V, f64)>,
    edges: Vec<(V, V, f64)>,
}

impl<V> FiniteGraphBuilder<V>
where
    V: Clone + Eq + Hash + Ord + Debug + Display + Send + Sync,
{
    pub fn vertex(mut self, id: V, mu: f64) -> Self {
        self.vertices.push((id, mu));
        self
    }

    /// Adds an undirected edge. Listing an edge from both ends is allowed as
    /// long as the two weights agree.
    pub fn edge(mut self, a: V, b: V, w: f64) -> Self {
        self.edges.push((a, b, w));
        self
    }

    pub fn build(self) -> Result<FiniteGraph<V>, GraphError> {
        let mut sorted = self.vertices;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in sorted.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(GraphError::DuplicateVertex(pair[0].0.to_string()));
            }
        }
        for (v, mu) in &sorted {
            if !(*mu > 0.0) || !mu.is_finite() {
                return Err(GraphError::NonPositiveMeasure {
                    vertex: v.to_string(),
                    mu: *mu,
                });
            }
        }
        let index: HashMap<V, usize> = sorted
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (v.clone(), i))
            .collect();

        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in self.edges {
            let ia = *index
                .get(&a)
                .ok_or_else(|| GraphError::UnknownVertex(a.to_string()))?;
            let ib = *index
                .get(&b)
                .ok_or_else(|| GraphError::UnknownVertex(b.to_string()))?;
            if ia == ib {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight {
                    a: a.to_string(),
                    b: b.to_string(),
                    weight: w,
                });
            }
            let key = (ia.min(ib), ia.max(ib));
            if let Some(&prev) = weights.get(&key) {
                if prev != w {
                    return Err(GraphError::Asymmetric {
                        a: a.to_string(),
                        b: b.to_string(),
                        forward: prev,
                        backward: w,
                    });
                }
            }
            weights.insert(key, w);
        }

        let mut adjacency: Vec<Vec<(V, f64)>> = vec![Vec::new(); sorted.len()];
        for (&(i, j), &w) in &weights {
            adjacency[i].push((sorted[j].0.clone(), w));
            adjacency[j].push((sorted[i].0.clone(), w));
        }
        for list in &mut adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let (vertices, measure) = sorted.into_iter().unzip();
        Ok(FiniteGraph {
            index,
            vertices,
            measure,
            adjacency,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_listed_once_is_symmetrized() {
        let g = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .vertex(1, 1.0)
            .edge(0, 1, 2.0)
            .build()
            .unwrap();
        assert_eq!(g.neighbors(&0), vec![(1, 2.0)]);
        assert_eq!(g.neighbors(&1), vec![(0, 2.0)]);
    }

    #[test]
    fn rejects_self_loop_and_asymmetry() {
        let err = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .edge(0, 0, 1.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop(_)));

        let err = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .vertex(1, 1.0)
            .edge(0, 1, 1.0)
            .edge(1, 0, 2.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::Asymmetric { .. }));
    }

    #[test]
    fn rejects_bad_measure_and_weight() {
        let err = FiniteGraph::builder()
            .vertex(0usize, 0.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveMeasure { .. }));
        let err = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .vertex(1, 1.0)
            .edge(0, 1, -1.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveWeight { .. }));
    }

    #[test]
    fn table_function_support() {
        let f = TableFunction::finitely_supported([(1usize, 2.0), (3, 0.0)]);
        assert_eq!(f.value(&7), Some(0.0));
        assert_eq!(f.finite_support(), Some(vec![1]));
        let p = TableFunction::partial([(1usize, 2.0)]);
        assert_eq!(p.value(&7), None);
        assert_eq!(p.finite_support(), None);
    }
}
