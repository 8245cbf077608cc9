use std::collections::VecDeque;

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::calculus::laplacian;
use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum MaxPrincipleVerdict {
    /// `u > 0` at every vertex of the region.
    StrictlyPositive { checked: usize },
    /// A zero in the region forced `u = 0` along its whole component.
    IdenticallyZero { seed: String, component_size: usize },
    /// `u(x) = 0` next to a positive value, hence `Δu(x) > 0`.
    Violation { vertex: String, laplacian: f64 },
    /// `Δu(x) > tol` at a region vertex with `u(x) > 0`.
    NotSuperharmonic { vertex: String, laplacian: f64 },
}

/// Strong maximum principle for nonnegative superharmonic functions: a zero
/// of `u` inside `region` propagates to every neighbor, so `u` vanishes on
/// the connected component. Superharmonicity is checked at every vertex of
/// `region`; neighbors outside it only supply stencil values.
pub fn strong_maximum_principle_check<G, U>(
    g: &G,
    u: &U,
    region: &[G::Vertex],
    tolerance: f64,
) -> Result<MaxPrincipleVerdict>
where
    G: WeightedGraph,
    U: VertexFunction<G::Vertex> + ?Sized,
{
    for x in region {
        let ux = eval(u, x)?;
        if ux < 0.0 {
            return Err(Error::Domain(format!("u must be nonnegative, found u({x}) = {ux}")));
        }
        for (y, _) in g.neighbors(x) {
            let val = eval(u, &y)?;
            if val < 0.0 {
                return Err(Error::Domain(format!("u must be nonnegative, found u({y}) = {val}")));
            }
        }
    }
    let interior: Vec<&G::Vertex> = region.iter().collect();

    let mut zeros = Vec::new();
    for &x in &interior {
        if eval(u, x)? == 0.0 {
            zeros.push(x);
            if g.neighbors(x).iter().any(|(y, _)| eval(u, y).unwrap_or(0.0) > 0.0) {
                return Ok(MaxPrincipleVerdict::Violation {
                    vertex: x.to_string(),
                    laplacian: laplacian(g, u, x)?,
                });
            }
        }
    }
    for &x in &interior {
        let lap = laplacian(g, u, x)?;
        if lap > tolerance * eval(u, x)?.abs().max(1.0) {
            return Ok(MaxPrincipleVerdict::NotSuperharmonic {
                vertex: x.to_string(),
                laplacian: lap,
            });
        }
    }

    let Some(&seed) = zeros.first() else {
        return Ok(MaxPrincipleVerdict::StrictlyPositive {
            checked: interior.len(),
        });
    };
    let interior_set: FxHashSet<&G::Vertex> = interior.iter().copied().collect();
    let mut seen: FxHashSet<G::Vertex> = FxHashSet::default();
    let mut queue = VecDeque::from([seed.clone()]);
    seen.insert(seed.clone());
    while let Some(x) = queue.pop_front() {
        // Zeros propagate only out of region vertices, where the stencil is
        // known to be superharmonic.
        if !interior_set.contains(&x) {
            continue;
        }
        for (y, _) in g.neighbors(&x) {
            if !seen.contains(&y) {
                debug_assert_eq!(eval(u, &y)?, 0.0);
                seen.insert(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(MaxPrincipleVerdict::IdenticallyZero {
        seed: seed.to_string(),
        component_size: seen.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FiniteGraph, TableFunction};

    fn path(n: usize) -> FiniteGraph<usize> {
        let mut b = FiniteGraph::builder();
        for i in 0..n {
            b = b.vertex(i, 2.0);
        }
        for i in 0..n - 1 {
            b = b.edge(i, i + 1, 1.0);
        }
        b.build().unwrap()
    }

    #[test]
    fn zero_function() {
        let g = path(5);
        let zero = |_: &usize| 0.0;
        let v = strong_maximum_principle_check(&g, &zero, g.vertices(), 1e-12).unwrap();
        assert_eq!(
            v,
            MaxPrincipleVerdict::IdenticallyZero {
                seed: "0".into(),
                component_size: 5
            }
        );
    }

    #[test]
    fn positive_constant() {
        let g = path(5);
        let one = |_: &usize| 1.0;
        let v = strong_maximum_principle_check(&g, &one, g.vertices(), 1e-12).unwrap();
        assert_eq!(v, MaxPrincipleVerdict::StrictlyPositive { checked: 5 });
    }

    #[test]
    fn planted_zero_next_to_one() {
        let g = path(5);
        let u = TableFunction::partial([(0, 1.0), (1, 1.0), (2, 0.0), (3, 1.0), (4, 1.0)]);
        match strong_maximum_principle_check(&g, &u, g.vertices(), 1e-12).unwrap() {
            MaxPrincipleVerdict::Violation { vertex, laplacian } => {
                assert_eq!(vertex, "2");
                assert_eq!(laplacian, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }
}
