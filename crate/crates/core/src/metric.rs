//! Pseudo-metrics, jump size, balls, volumes and distance-Laplacian bounds.

use std::collections::{HashMap, VecDeque};
use std::fmt::Display;
use std::hash::Hash;

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::calculus::laplacian;
use crate::error::{Error, GraphError, Result};
use crate::graph::WeightedGraph;

/// Default cap on the number of vertices a single exploration may visit.
pub const DEFAULT_BUDGET: usize = 30_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    HopDistance,
    CoordinateEuclidean,
    ExplicitTable,
}

/// Symmetric, zero-diagonal, triangle-inequality distance that may vanish
/// between distinct vertices.
pub trait PseudoMetric<V>: Sync {
    fn distance(&self, x: &V, y: &V) -> f64;

    fn kind(&self) -> MetricKind;

    /// Jump size known in closed form for the whole (possibly infinite) graph.
    fn analytic_jump(&self) -> Option<f64> {
        None
    }
}

/// Pairwise distances over a finite vertex set.
#[derive(Debug, Clone)]
pub struct TableMetric<V> {
    index: HashMap<V, usize>,
    n: usize,
    dist: Vec<f64>,
    kind: MetricKind,
}

impl<V: Clone + Eq + Hash + Display> TableMetric<V> {
    /// Builds an explicit table from unordered pairs. Every pair of distinct
    /// vertices must be listed (once or twice with equal values).
    pub fn explicit(
        vertices: &[V],
        pairs: impl IntoIterator<Item = (V, V, f64)>,
    ) -> Result<Self, GraphError> {
        let index: HashMap<V, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let n = vertices.len();
        let mut dist = vec![f64::NAN; n * n];
        for i in 0..n {
            dist[i * n + i] = 0.0;
        }
        for (a, b, d) in pairs {
            let ia = *index
                .get(&a)
                .ok_or_else(|| GraphError::UnknownVertex(a.to_string()))?;
            let ib = *index
                .get(&b)
                .ok_or_else(|| GraphError::UnknownVertex(b.to_string()))?;
            if !(d >= 0.0) || !d.is_finite() {
                return Err(GraphError::Metric(format!(
                    "distance between `{a}` and `{b}` must be finite and nonnegative, got {d}"
                )));
            }
            if ia == ib {
                if d != 0.0 {
                    return Err(GraphError::Metric(format!(
                        "distance from `{a}` to itself must be 0"
                    )));
                }
                continue;
            }
            let prev = dist[ia * n + ib];
            if !prev.is_nan() && prev != d {
                return Err(GraphError::Metric(format!(
                    "conflicting distances between `{a}` and `{b}`: {prev} vs {d}"
                )));
            }
            dist[ia * n + ib] = d;
            dist[ib * n + ia] = d;
        }
        if let Some(k) = dist.iter().position(|d| d.is_nan()) {
            return Err(GraphError::Metric(format!(
                "missing distance between `{}` and `{}`",
                vertices[k / n],
                vertices[k % n]
            )));
        }
        if n > 1 && dist.iter().all(|&d| d == 0.0) {
            return Err(GraphError::Metric(
                "all off-diagonal distances vanish; the pseudo-metric carries no information".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i * n + j] > dist[i * n + k] + dist[k * n + j] + 1e-12 {
                        return Err(GraphError::Metric(format!(
                            "triangle inequality fails for `{}`, `{}` via `{}`",
                            vertices[i], vertices[j], vertices[k]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            index,
            n,
            dist,
            kind: MetricKind::ExplicitTable,
        })
    }

    /// All-pairs hop distance of a finite graph (infinite across components).
    pub fn hop<G>(g: &G, vertices: &[V]) -> Self
    where
        G: WeightedGraph<Vertex = V>,
    {
        let index: HashMap<V, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let n = vertices.len();
        let mut dist = vec![f64::INFINITY; n * n];
        for (s, src) in vertices.iter().enumerate() {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0.0;
            let mut queue = VecDeque::from([src.clone()]);
            while let Some(x) = queue.pop_front() {
                let dx = row[index[&x]];
                for (y, _) in g.neighbors(&x) {
                    if let Some(&iy) = index.get(&y) {
                        if row[iy].is_infinite() {
                            row[iy] = dx + 1.0;
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        Self {
            index,
            n,
            dist,
            kind: MetricKind::HopDistance,
        }
    }
}

impl<V: Eq + Hash + Sync + Send> PseudoMetric<V> for TableMetric<V> {
    fn distance(&self, x: &V, y: &V) -> f64 {
        match (self.index.get(x), self.index.get(y)) {
            (Some(&i), Some(&j)) => self.dist[i * self.n + j],
            _ => f64::INFINITY,
        }
    }

    fn kind(&self) -> MetricKind {
        self.kind
    }
}

/// A finite ball `{x : d(x, x₀) ≤ r}` found by exploration.
#[derive(Debug, Clone, Serialize)]
pub struct BallRegion<V> {
    pub center: V,
    pub radius: f64,
    /// Exploration passed through vertices with `d ≤ radius + margin`.
    pub margin: f64,
    /// Members in ascending vertex order.
    #[serde(skip)]
    pub vertices: Vec<V>,
    pub size: usize,
}

impl<V> BallRegion<V> {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Breadth-first exploration from `center` through vertices within
/// `r + margin`, keeping those within `r`.
pub fn ball<G, M>(
    g: &G,
    d: &M,
    center: &G::Vertex,
    r: f64,
    margin: f64,
    budget: usize,
) -> Result<BallRegion<G::Vertex>>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    if !(r >= 0.0) || !(margin >= 0.0) {
        return Err(Error::Domain(format!(
            "ball radius and margin must be nonnegative (r = {r}, margin = {margin})"
        )));
    }
    let reach = r + margin;
    let mut seen: FxHashSet<G::Vertex> = FxHashSet::default();
    let mut queue = VecDeque::new();
    let mut kept = Vec::new();
    seen.insert(center.clone());
    queue.push_back(center.clone());
    while let Some(x) = queue.pop_front() {
        if d.distance(&x, center) <= r {
            kept.push(x.clone());
        }
        for (y, _) in g.neighbors(&x) {
            if seen.contains(&y) || d.distance(&y, center) > reach {
                continue;
            }
            if !g.contains(&y) {
                return Err(Error::OutsideDomain {
                    vertex: y.to_string(),
                });
            }
            if seen.len() >= budget {
                return Err(Error::BudgetExceeded {
                    budget,
                    explored: seen.len(),
                });
            }
            seen.insert(y.clone());
            queue.push_back(y);
        }
    }
    drop(seen);
    kept.par_sort_unstable();
    Ok(BallRegion {
        center: center.clone(),
        radius: r,
        margin,
        size: kept.len(),
        vertices: kept,
    })
}

/// `Vol(Ω) = Σ_{x∈Ω} μ(x)`.
pub fn volume<G: WeightedGraph>(g: &G, region: &[G::Vertex]) -> f64 {
    region.iter().map(|x| g.measure(x)).sum()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpReport {
    /// Supremum of `d(x, y)` over the explored edges.
    pub explored: f64,
    /// Closed-form value for the whole graph, when the builder knows it.
    pub analytic: Option<f64>,
    pub edges_examined: usize,
}

/// Supremum of the metric over edges incident to `region`.
pub fn jump_size<G, M>(g: &G, d: &M, region: &[G::Vertex]) -> JumpReport
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    let (explored, edges) = region
        .par_iter()
        .map(|x| {
            let nb = g.neighbors(x);
            let m = nb
                .iter()
                .map(|(y, _)| d.distance(x, y))
                .fold(0.0f64, f64::max);
            (m, nb.len())
        })
        .reduce(|| (0.0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    JumpReport {
        explored,
        analytic: d.analytic_jump(),
        edges_examined: edges,
    }
}

/// `Δ[d(·, x₀)](x)`.
pub fn laplacian_of_distance<G, M>(g: &G, d: &M, base: &G::Vertex, x: &G::Vertex) -> f64
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    let dist = |y: &G::Vertex| d.distance(y, base);
    laplacian(g, &dist, x).expect("distance is defined everywhere")
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceLaplacianBound {
    pub alpha: f64,
    pub r0: f64,
    pub r_max: f64,
    /// Smallest `C` with `Δd ≤ C / d^α` on the annulus (clamped at 0).
    pub constant: f64,
    /// Unclamped maximum of `Δd · d^α`.
    pub raw_max: f64,
    pub argmax: Option<String>,
    pub annulus_size: usize,
}

/// Fits `Δd(x, x₀) ≤ C / d(x, x₀)^α` over `B_{r_max} \ B_{r0}`.
pub fn fit_distance_laplacian_bound<G, M>(
    g: &G,
    d: &M,
    base: &G::Vertex,
    alpha: f64,
    r0: f64,
    r_max: f64,
    budget: usize,
) -> Result<DistanceLaplacianBound>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    if !(0.0..=1.0).contains(&alpha) || !(r0 >= 1.0) || !(r_max > r0) {
        return Err(Error::Domain(format!(
            "need 0 <= alpha <= 1, r0 >= 1, r_max > r0 (alpha = {alpha}, r0 = {r0}, r_max = {r_max})"
        )));
    }
    let region = ball(g, d, base, r_max, 0.0, budget)?;
    fit_on_region(g, d, base, alpha, r0, r_max, &region.vertices)
}

pub(crate) fn fit_on_region<G, M>(
    g: &G,
    d: &M,
    base: &G::Vertex,
    alpha: f64,
    r0: f64,
    r_max: f64,
    region: &[G::Vertex],
) -> Result<DistanceLaplacianBound>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    let best = region
        .par_iter()
        .enumerate()
        .filter_map(|(i, x)| {
            let r = d.distance(x, base);
            (r > r0 && r <= r_max)
                .then(|| (laplacian_of_distance(g, d, base, x) * r.powf(alpha), i))
        })
        .map(|(v, i)| (v, i, 1usize))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, 0),
            |a, b| {
                let count = a.2 + b.2;
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    (b.0, b.1, count)
                } else {
                    (a.0, a.1, count)
                }
            },
        );
    if best.2 == 0 {
        return Err(Error::Domain(format!(
            "annulus B_{r_max} \\ B_{r0} contains no vertices"
        )));
    }
    Ok(DistanceLaplacianBound {
        alpha,
        r0,
        r_max,
        constant: best.0.max(0.0),
        raw_max: best.0,
        argmax: region.get(best.1).map(|x| x.to_string()),
        annulus_size: best.2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerDistanceBound {
    pub p: f64,
    /// `max Δ[d^p](x)` over the region.
    pub max_laplacian: f64,
    pub argmax: Option<String>,
    /// `min{p − 1, 1}`.
    pub implied_alpha: f64,
    /// Largest `Δd(x) − max / (p d(x)^{p−1})` over vertices with `d > 0`;
    /// nonpositive whenever the convexity bound holds.
    pub convexity_excess: f64,
}

/// Maximum of `Δ[d^p(·, x₀)]` over `region` and the decay exponent it
/// implies, together with a pointwise check of the convexity bound
/// `Δd ≤ max / (p d^{p−1})`.
pub fn check_power_distance_bound<G, M>(
    g: &G,
    d: &M,
    base: &G::Vertex,
    p: f64,
    region: &[G::Vertex],
) -> Result<PowerDistanceBound>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
{
    if !(p > 1.0) {
        return Err(Error::Domain(format!("exponent p must exceed 1, got {p}")));
    }
    if region.is_empty() {
        return Err(Error::Domain("empty region".into()));
    }
    let power = |y: &G::Vertex| d.distance(y, base).powf(p);
    let values: Vec<f64> = region
        .par_iter()
        .map(|x| laplacian(g, &power, x).expect("distance is defined everywhere"))
        .collect();
    let (imax, max) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let excess = region
        .par_iter()
        .filter_map(|x| {
            let r = d.distance(x, base);
            (r > 0.0).then(|| {
                laplacian_of_distance(g, d, base, x) - max / (p * r.powf(p - 1.0))
            })
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(PowerDistanceBound {
        p,
        max_laplacian: max,
        argmax: Some(region[imax].to_string()),
        implied_alpha: (p - 1.0).min(1.0),
        convexity_excess: excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FiniteGraph;

    fn single_edge() -> (FiniteGraph<String>, TableMetric<String>) {
        let g = FiniteGraph::builder()
            .vertex("a".to_string(), 1.0)
            .vertex("b".to_string(), 1.0)
            .edge("a".into(), "b".into(), 1.0)
            .build()
            .unwrap();
        let d = TableMetric::explicit(
            g.vertices(),
            [("a".to_string(), "b".to_string(), 2.5)],
        )
        .unwrap();
        (g, d)
    }

    #[test]
    fn jump_of_single_edge() {
        let (g, d) = single_edge();
        let j = jump_size(&g, &d, g.vertices());
        assert_eq!(j.explored, 2.5);
        let hop = TableMetric::hop(&g, g.vertices());
        assert_eq!(jump_size(&g, &hop, g.vertices()).explored, 1.0);
    }

    #[test]
    fn zero_radius_ball_and_empty_volume() {
        let (g, d) = single_edge();
        let b = ball(&g, &d, &"a".to_string(), 0.0, 0.0, 10).unwrap();
        assert_eq!(b.vertices, vec!["a".to_string()]);
        assert_eq!(volume(&g, &[]), 0.0);
    }

    #[test]
    fn zero_distance_twin_is_reached_within_margin() {
        let g = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .vertex(1, 1.0)
            .vertex(2, 1.0)
            .edge(0, 1, 1.0)
            .edge(1, 2, 1.0)
            .build()
            .unwrap();
        // 2 is a distance-0 twin of 0, reachable only through 1 at distance 1.
        let d = TableMetric::explicit(g.vertices(), [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 0.0)])
            .unwrap();
        let tight = ball(&g, &d, &0, 0.0, 0.0, 10).unwrap();
        assert_eq!(tight.vertices, vec![0]);
        let wide = ball(&g, &d, &0, 0.0, 1.0, 10).unwrap();
        assert_eq!(wide.vertices, vec![0, 2]);
    }

    #[test]
    fn table_metric_validation() {
        let v = vec![0usize, 1, 2];
        assert!(TableMetric::explicit(&v, [(0, 1, 1.0), (1, 2, 1.0)]).is_err());
        assert!(TableMetric::explicit(&v, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)]).is_err());
        assert!(TableMetric::explicit(&v, [(0, 1, 0.0), (1, 2, 0.0), (0, 2, 0.0)]).is_err());
        assert!(TableMetric::explicit(&v, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.0)]).is_ok());
    }

    #[test]
    fn budget_is_enforced() {
        let g = FiniteGraph::builder()
            .vertex(0usize, 1.0)
            .vertex(1, 1.0)
            .vertex(2, 1.0)
            .edge(0, 1, 1.0)
            .edge(1, 2, 1.0)
            .build()
            .unwrap();
        let d = TableMetric::hop(&g, g.vertices());
        match ball(&g, &d, &0, 5.0, 0.0, 2) {
            Err(Error::BudgetExceeded { explored, .. }) => assert_eq!(explored, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
