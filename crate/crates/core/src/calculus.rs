//! Difference operator, weighted Laplacian, gradient squared, and numerical
//! checks of the product rule and the summation-by-parts identity.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};

/// `∇_{xy} f = f(y) − f(x)`.
pub fn difference<V, F>(f: &F, x: &V, y: &V) -> Result<f64>
where
    V: std::fmt::Display,
    F: VertexFunction<V> + ?Sized,
{
    Ok(eval(f, y)? - eval(f, x)?)
}

/// `Δf(x) = (1/μ(x)) Σ_{y∼x} ω_xy (f(y) − f(x))`.
pub fn laplacian<G, F>(g: &G, f: &F, x: &G::Vertex) -> Result<f64>
where
    G: WeightedGraph,
    F: VertexFunction<G::Vertex> + ?Sized,
{
    let fx = eval(f, x)?;
    let mut acc = 0.0;
    for (y, w) in g.neighbors(x) {
        acc += w * (eval(f, &y)? - fx);
    }
    Ok(acc / g.measure(x))
}

/// `|∇f(x)|² = (1/μ(x)) Σ_{y∼x} ω_xy (f(y) − f(x))²`.
pub fn gradient_squared<G, F>(g: &G, f: &F, x: &G::Vertex) -> Result<f64>
where
    G: WeightedGraph,
    F: VertexFunction<G::Vertex> + ?Sized,
{
    let fx = eval(f, x)?;
    let mut acc = 0.0;
    for (y, w) in g.neighbors(x) {
        let d = eval(f, &y)? - fx;
        acc += w * d * d;
    }
    Ok(acc / g.measure(x))
}

/// The three sums of the summation-by-parts identity and their pairwise gaps.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IbpDiscrepancy {
    /// `Σ (Δf) h μ`
    pub laplacian_left: f64,
    /// `−½ Σ_{x,y} ω_xy (∇f)(∇h)`
    pub gradient_form: f64,
    /// `Σ f (Δh) μ`
    pub laplacian_right: f64,
    pub gap_left_middle: f64,
    pub gap_middle_right: f64,
    pub gap_left_right: f64,
    /// Largest absolute term encountered; gaps are meaningful relative to it.
    pub scale: f64,
}

impl IbpDiscrepancy {
    pub fn max_gap(&self) -> f64 {
        self.gap_left_middle
            .max(self.gap_middle_right)
            .max(self.gap_left_right)
    }

    pub fn max_relative_gap(&self) -> f64 {
        self.max_gap() / self.scale.max(1.0)
    }
}

/// Evaluates the three sums of the summation-by-parts identity over
/// `support`.
///
/// One of `f`, `h` must report a finite support contained in `support`, and
/// `support` must contain every neighbor of that finite support.
pub fn check_integration_by_parts<G, F, H>(
    g: &G,
    f: &F,
    h: &H,
    support: &[G::Vertex],
) -> Result<IbpDiscrepancy>
where
    G: WeightedGraph,
    F: VertexFunction<G::Vertex> + ?Sized,
    H: VertexFunction<G::Vertex> + ?Sized,
{
    let core = f
        .finite_support()
        .or_else(|| h.finite_support())
        .ok_or_else(|| {
            Error::Contract("summation by parts needs a finitely supported function".into())
        })?;
    let closure: BTreeSet<&G::Vertex> = support.iter().collect();
    for x in &core {
        if !closure.contains(x) {
            return Err(Error::Contract(format!(
                "support vertex {x} is missing from the summation region"
            )));
        }
        for (y, _) in g.neighbors(x) {
            if !closure.contains(&y) {
                return Err(Error::Contract(format!(
                    "summation region is not closed under one hop: {y} (neighbor of {x}) is missing"
                )));
            }
        }
    }

    let mut left = 0.0;
    let mut middle = 0.0;
    let mut right = 0.0;
    let mut scale: f64 = 0.0;
    for x in support {
        let fx = eval(f, x)?;
        let hx = eval(h, x)?;
        for (y, w) in g.neighbors(x) {
            let term = w * (eval(f, &y)? - fx) * (eval(h, &y)? - hx);
            middle += term;
            scale = scale.max(term.abs());
        }
        let mu = g.measure(x);
        let a = laplacian(g, f, x)? * hx * mu;
        let b = fx * laplacian(g, h, x)? * mu;
        left += a;
        right += b;
        scale = scale.max(a.abs()).max(b.abs());
    }
    let middle = -0.5 * middle;
    Ok(IbpDiscrepancy {
        laplacian_left: left,
        gradient_form: middle,
        laplacian_right: right,
        gap_left_middle: (left - middle).abs(),
        gap_middle_right: (middle - right).abs(),
        gap_left_right: (left - right).abs(),
        scale,
    })
}

/// `|∇_{xy}(f·h) − f(x)∇_{xy}h − (∇_{xy}f) h(y)|`.
pub fn check_product_rule<V, F, H>(f: &F, h: &H, x: &V, y: &V) -> Result<f64>
where
    V: std::fmt::Display,
    F: VertexFunction<V> + ?Sized,
    H: VertexFunction<V> + ?Sized,
{
    let (fx, fy) = (eval(f, x)?, eval(f, y)?);
    let (hx, hy) = (eval(h, x)?, eval(h, y)?);
    let lhs = fy * hy - fx * hx;
    let rhs = fx * (hy - hx) + (fy - fx) * hy;
    Ok((lhs - rhs).abs())
}

/// Smallest `C` with `Σ_{y∼x} ω_xy ≤ C μ(x)` on `region`.
pub fn check_row_sum_bound<G: WeightedGraph>(g: &G, region: &[G::Vertex]) -> Result<f64> {
    if region.is_empty() {
        return Err(Error::Contract("row-sum bound needs a nonempty region".into()));
    }
    Ok(region
        .iter()
        .map(|x| {
            let total: f64 = g.neighbors(x).iter().map(|(_, w)| w).sum();
            total / g.measure(x)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}
