//! Hypothesis checks for the Liouville-type nonexistence result, the cutoff
//! machinery of its proof as numerical estimates, the capacity certificate,
//! and the strong maximum principle.
//!
//! Every check has two routes: explicit enumeration of a ball (lattices and
//! loaded graphs) and a level-profile route for spherically symmetric trees,
//! whose balls are far too large to enumerate at useful radii.

mod capacity;
mod cutoff;
mod hypotheses;
mod max_principle;

use rayon::prelude::*;
use serde::Serialize;

pub use capacity::{capacity_certificate, capacity_certificate_levels, CapacityCertificate, CapacityRow, CapacityVerdict};
pub use cutoff::{default_cutoff, default_power, CutoffProfile};
pub use hypotheses::{
    check_hypotheses, check_hypotheses_levels, cutoff_laplacian_estimate, cutoff_laplacian_estimate_levels,
    Check, CutoffEstimate, HypothesisReport, Verdict, EVIDENCE_LABEL,
};
pub use max_principle::{strong_maximum_principle_check, MaxPrincipleVerdict};

use crate::error::{Error, Result};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::levels::LevelProfile;
use crate::metric::{ball, jump_size, PseudoMetric, DEFAULT_BUDGET};

/// Data of `Δu + v·u^σ ≤ 0` on an explicitly explored graph.
pub struct ProblemSpec<'a, G, M, P>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    pub graph: &'a G,
    pub metric: &'a M,
    pub base: G::Vertex,
    pub potential: &'a P,
    pub sigma: f64,
    /// Decay exponent in `Δd ≤ C/d^α`.
    pub alpha: f64,
    pub r0: f64,
    /// Cutoff power, `s > σ/(σ−1)`.
    pub s: f64,
    /// Ball exploration margin; defaults to the jump size.
    pub margin: Option<f64>,
    pub budget: usize,
}

pub const DEFAULT_R0: f64 = 2.0;

impl<'a, G, M, P> ProblemSpec<'a, G, M, P>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    pub fn new(graph: &'a G, metric: &'a M, base: G::Vertex, potential: &'a P, sigma: f64, alpha: f64) -> Self {
        Self {
            graph,
            metric,
            base,
            potential,
            sigma,
            alpha,
            r0: DEFAULT_R0,
            s: default_power(sigma),
            margin: None,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_parameters(self.sigma, self.alpha, self.r0, self.s)
    }

    /// The closed-form jump size if the metric knows it, otherwise the
    /// supremum over edges touching `B_radius(x₀)`.
    pub fn jump(&self, radius: f64) -> Result<f64> {
        if let Some(j) = self.metric.analytic_jump() {
            return Ok(j);
        }
        let region = ball(self.graph, self.metric, &self.base, radius, 0.0, self.budget)?;
        Ok(jump_size(self.graph, self.metric, &region.vertices).explored)
    }
}

/// Same data for a spherically symmetric tree with the hop metric from the
/// root and a potential depending on the level only.
pub struct RadialProblem<'a, L: LevelProfile + ?Sized, P: Fn(usize) -> f64 + Sync> {
    pub profile: &'a L,
    pub potential: P,
    pub sigma: f64,
    pub alpha: f64,
    pub r0: f64,
    pub s: f64,
}

impl<'a, L: LevelProfile + ?Sized, P: Fn(usize) -> f64 + Sync> RadialProblem<'a, L, P> {
    pub fn new(profile: &'a L, potential: P, sigma: f64, alpha: f64) -> Self {
        Self {
            profile,
            potential,
            sigma,
            alpha,
            r0: DEFAULT_R0,
            s: default_power(sigma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_parameters(self.sigma, self.alpha, self.r0, self.s)
    }
}

fn validate_parameters(sigma: f64, alpha: f64, r0: f64, s: f64) -> Result<()> {
    let mut problems = Vec::new();
    if !(sigma > 1.0) {
        problems.push(format!("sigma must exceed 1, got {sigma}"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        problems.push(format!("alpha must lie in [0, 1], got {alpha}"));
    }
    if !(r0 > 1.0) {
        problems.push(format!("R0 must exceed 1, got {r0}"));
    }
    if sigma > 1.0 && !(s > sigma / (sigma - 1.0)) {
        problems.push(format!(
            "cutoff power s must exceed sigma/(sigma-1) = {}, got {s}",
            sigma / (sigma - 1.0)
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Spec(problems.join("; ")))
    }
}

/// Vertices of a ball sorted by distance to the center (ties by vertex
/// order), so per-radius work is a prefix and sums have a fixed order.
pub(crate) struct Sites<V> {
    pub vertices: Vec<V>,
    pub distances: Vec<f64>,
    pub margin: f64,
}

impl<V> Sites<V> {
    /// Number of sites with `d ≤ r`.
    pub fn within(&self, r: f64) -> usize {
        self.distances.partition_point(|&d| d <= r)
    }
}

pub(crate) fn enumerate_sites<G, M, P>(spec: &ProblemSpec<'_, G, M, P>, radius: f64, jump: f64) -> Result<Sites<G::Vertex>>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    let margin = spec.margin.unwrap_or(jump);
    let region = ball(spec.graph, spec.metric, &spec.base, radius, margin, spec.budget)?;
    let mut pairs: Vec<(f64, G::Vertex)> = region
        .vertices
        .into_par_iter()
        .map(|x| (spec.metric.distance(&x, &spec.base), x))
        .collect();
    pairs.par_sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let (distances, vertices) = pairs.into_iter().unzip();
    Ok(Sites {
        vertices,
        distances,
        margin,
    })
}

/// Accumulator for [`chunked_fold`].
pub(crate) trait Accumulate: Default + Send {
    fn merge(&mut self, other: Self);
}

const CHUNK: usize = 4096;

/// Folds `f(0), …, f(n−1)` in fixed-size chunks: each chunk sequentially, in
/// parallel across chunks, then the chunk results in order. The result does
/// not depend on the number of worker threads.
pub(crate) fn chunked_fold<A, F>(n: usize, f: F) -> Result<A>
where
    A: Accumulate,
    F: Fn(&mut A, usize) -> Result<()> + Sync,
{
    let chunks: Vec<A> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = A::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = A::default();
    for c in chunks {
        total.merge(c);
    }
    Ok(total)
}

/// Running maximum with the lowest index winning ties.
#[derive(Debug, Clone, Copy, Serialize)]
pub(crate) struct ArgMax {
    pub value: f64,
    pub index: Option<usize>,
}

impl Default for ArgMax {
    fn default() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            index: None,
        }
    }
}

impl ArgMax {
    pub fn offer(&mut self, value: f64, index: usize) {
        let better = match self.index {
            None => true,
            Some(i) => value > self.value || (value == self.value && index < i),
        };
        if better {
            self.value = value;
            self.index = Some(index);
        }
    }

    pub fn merge(&mut self, other: Self) {
        if let Some(i) = other.index {
            self.offer(other.value, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Default)]
    struct Sum(f64);

    impl Accumulate for Sum {
        fn merge(&mut self, other: Self) {
            self.0 += other.0;
        }
    }

    #[test]
    fn chunked_fold_is_thread_independent() {
        let f = |acc: &mut Sum, i: usize| {
            acc.0 += 1.0 / (1.0 + i as f64).sqrt();
            Ok(())
        };
        let a: Sum = chunked_fold(100_000, f).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b: Sum = pool.install(|| chunked_fold(100_000, f)).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
    }

    #[test]
    fn parameter_problems_are_listed_together() {
        let msg = validate_parameters(0.5, 2.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(msg.contains("sigma") && msg.contains("alpha") && msg.contains("R0"));
    }

    #[test]
    fn argmax_ties() {
        let mut m = ArgMax::default();
        m.offer(2.0, 5);
        m.offer(2.0, 3);
        m.offer(1.0, 0);
        assert_eq!(m.index, Some(3));
    }
}
