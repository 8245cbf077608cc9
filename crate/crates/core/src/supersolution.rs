//! Explicit positive supersolutions of `Δu + v·u^σ ≤ 0`, parameter tuning, and
//! pointwise residual scans.
//!
//! Residuals are computed from the full stencil of each vertex, so no Taylor
//! remainder ever enters: a passing scan on a region is a statement about
//! exactly those vertices.

use rayon::prelude::*;
use serde::Serialize;

use crate::builders::{
    build_lattice, HomogeneousTree, HomogeneousTreeSpec, LatticePoint, LatticeSpec, TreePath,
};
use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};
use crate::levels::{radial_laplacian, LevelProfile};
use crate::metric::{ball, BallRegion, PseudoMetric};

/// Relative per-vertex tolerance: `r(x) ≤ tol · max(1, |Δu(x)|)` passes.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// `u(x) = δ / (K + |x|²)^γ` on `ℤᴺ`, `γ = 1/(σ−1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeSupersolution {
    pub dim: usize,
    pub sigma: f64,
    pub delta: f64,
    #[serde(rename = "K")]
    pub shift: f64,
    pub gamma: f64,
    /// `(γ − 2γ(γ+1)/N) / 2`, positive exactly when `σ > N/(N−2)`.
    pub lambda: f64,
}

/// `N/(N−2)`, infinite for `N ≤ 2`.
pub fn critical_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        dim as f64 / (dim as f64 - 2.0)
    }
}

impl LatticeSupersolution {
    pub fn new(dim: usize, sigma: f64, delta: f64, shift: f64) -> Result<Self> {
        let critical = critical_exponent(dim);
        if !(sigma > critical) {
            return Err(Error::Subcritical {
                dim,
                sigma,
                critical,
            });
        }
        Self::family_member(dim, sigma, delta, shift)
    }

    /// Same formula without the supercriticality requirement, for probing the
    /// family where no member can be a supersolution.
    pub fn family_member(dim: usize, sigma: f64, delta: f64, shift: f64) -> Result<Self> {
        if dim == 0 || dim > crate::builders::MAX_DIM {
            return Err(Error::Spec(format!("unsupported lattice dimension {dim}")));
        }
        if !(sigma > 1.0) || !(delta > 0.0) || !(shift > 0.0) {
            return Err(Error::Spec(format!(
                "need sigma > 1, delta > 0, K > 0 (sigma = {sigma}, delta = {delta}, K = {shift})"
            )));
        }
        let gamma = 1.0 / (sigma - 1.0);
        let lambda = (gamma - 2.0 * gamma * (gamma + 1.0) / dim as f64) / 2.0;
        Ok(Self {
            dim,
            sigma,
            delta,
            shift,
            gamma,
            lambda,
        })
    }

    pub fn eval(&self, x: &LatticePoint) -> f64 {
        self.delta / (self.shift + x.norm_squared() as f64).powf(self.gamma)
    }

    pub fn with_shift(&self, shift: f64) -> Self {
        Self { shift, ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }
}

impl VertexFunction<LatticePoint> for LatticeSupersolution {
    fn value(&self, x: &LatticePoint) -> Option<f64> {
        Some(self.eval(x))
    }
}

/// Where a residual scan was run.
#[derive(Debug, Clone, Serialize)]
pub struct RegionInfo {
    pub center: String,
    pub radius: f64,
    pub margin: f64,
    pub size: usize,
}

impl<V: std::fmt::Display> From<&BallRegion<V>> for RegionInfo {
    fn from(b: &BallRegion<V>) -> Self {
        Self {
            center: b.center.to_string(),
            radius: b.radius,
            margin: b.margin,
            size: b.vertices.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualScan {
    pub region: RegionInfo,
    /// `max r(x)`, `r = Δu + v·u^σ`.
    pub max_residual: f64,
    pub argmax_vertex: Option<String>,
    pub pass: bool,
    pub tolerance: f64,
    /// Largest `r(x) − tol·max(1, |Δu(x)|)`; the scan passes iff this is ≤ 0.
    pub worst_excess: f64,
    pub worst_excess_vertex: Option<String>,
    pub params: serde_json::Value,
}

#[derive(Clone, Copy)]
struct Extreme {
    value: f64,
    index: usize,
}

impl Extreme {
    const NONE: Self = Self {
        value: f64::NEG_INFINITY,
        index: usize::MAX,
    };

    // Largest value wins, ties go to the lowest index.
    fn merge(self, other: Self) -> Self {
        if other.value > self.value || (other.value == self.value && other.index < self.index) {
            other
        } else {
            self
        }
    }
}

/// `Δu(x) + v(x)·u(x)^σ`, failing if `u` is negative anywhere on the stencil.
pub fn residual_at<G, U, P>(g: &G, u: &U, v: &P, sigma: f64, x: &G::Vertex) -> Result<(f64, f64)>
where
    G: WeightedGraph,
    U: VertexFunction<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    let negative = |y: &G::Vertex, value: f64| {
        Error::Domain(format!("u must be nonnegative, found u({y}) = {value}"))
    };
    let ux = eval(u, x)?;
    if ux < 0.0 {
        return Err(negative(x, ux));
    }
    let mut acc = 0.0;
    for (y, w) in g.neighbors(x) {
        let uy = eval(u, &y)?;
        if uy < 0.0 {
            return Err(negative(&y, uy));
        }
        acc += w * (uy - ux);
    }
    let lap = acc / g.measure(x);
    Ok((lap + eval(v, x)? * ux.powf(sigma), lap))
}

/// Residual scan over an explicit list of vertices.
pub fn scan_residuals<G, U, P>(
    g: &G,
    u: &U,
    v: &P,
    sigma: f64,
    vertices: &[G::Vertex],
    region: RegionInfo,
    tolerance: f64,
) -> Result<ResidualScan>
where
    G: WeightedGraph,
    U: VertexFunction<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    if !(sigma > 1.0) {
        return Err(Error::Domain(format!("sigma must exceed 1, got {sigma}")));
    }
    type Acc = (Extreme, Extreme, Option<(usize, Error)>);
    let (best, excess, err) = vertices
        .par_iter()
        .enumerate()
        .fold(
            || (Extreme::NONE, Extreme::NONE, None),
            |mut acc: Acc, (i, x)| {
                if acc.2.is_some() {
                    return acc;
                }
                match residual_at(g, u, v, sigma, x) {
                    Ok((r, lap)) => {
                        let allowed = tolerance * lap.abs().max(1.0);
                        acc.0 = acc.0.merge(Extreme { value: r, index: i });
                        acc.1 = acc.1.merge(Extreme {
                            value: r - allowed,
                            index: i,
                        });
                    }
                    Err(e) => acc.2 = Some((i, e)),
                }
                acc
            },
        )
        .reduce(
            || (Extreme::NONE, Extreme::NONE, None),
            |a, b| {
                let err = match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(if x.0 <= y.0 { x } else { y }),
                    (x, y) => x.or(y),
                };
                (a.0.merge(b.0), a.1.merge(b.1), err)
            },
        );
    if let Some((_, e)) = err {
        return Err(e);
    }
    let name = |e: Extreme| vertices.get(e.index).map(|x| x.to_string());
    Ok(ResidualScan {
        region,
        max_residual: best.value,
        argmax_vertex: name(best),
        pass: excess.value <= 0.0,
        tolerance,
        worst_excess: excess.value,
        worst_excess_vertex: name(excess),
        params: serde_json::Value::Null,
    })
}

/// Pointwise check of `Δu + v·u^σ ≤ 0` on a ball.
pub fn verify_supersolution<G, U, P>(
    g: &G,
    u: &U,
    v: &P,
    sigma: f64,
    region: &BallRegion<G::Vertex>,
    tolerance: f64,
) -> Result<ResidualScan>
where
    G: WeightedGraph,
    U: VertexFunction<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    scan_residuals(g, u, v, sigma, &region.vertices, region.into(), tolerance)
}

fn one<V>(_: &V) -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningTrial {
    pub delta: f64,
    #[serde(rename = "K")]
    pub shift: f64,
    pub max_residual: f64,
    pub argmax_vertex: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeTuning {
    pub solution: LatticeSupersolution,
    pub scan: ResidualScan,
    pub trace: Vec<TuningTrial>,
}

/// Largest `K` tried before `δ` is halved.
pub const MAX_SHIFT: f64 = 1e8;
const MAX_HALVINGS: usize = 8;

/// Searches `(δ, K)` with `v ≡ 1` until the residual scan passes on
/// `B_{r_check}(0)`. Starts from `δ^{σ−1} = min{λ, γ/2}` and
/// `K = 2C₀/γ + γ + 1` with `C₀ = 1`, doubles `K`, and halves `δ` when `K`
/// runs past [`MAX_SHIFT`].
pub fn tune_lattice_parameters(
    dim: usize,
    sigma: f64,
    r_check: f64,
    budget: usize,
) -> Result<LatticeTuning> {
    let start = LatticeSupersolution::new(dim, sigma, 1.0, 1.0)?;
    let gamma = start.gamma;
    let delta0 = start.lambda.min(gamma / 2.0).powf(1.0 / (sigma - 1.0));
    let shift0 = 2.0 / gamma + gamma + 1.0;
    let (lattice, metric) = build_lattice(LatticeSpec { dim })?;
    let region = ball(
        &lattice,
        &metric,
        &lattice.origin(),
        r_check,
        0.0,
        budget,
    )?;
    let mut trace = Vec::new();
    let mut delta = delta0;
    let mut last_failure = None;
    for _ in 0..=MAX_HALVINGS {
        let mut shift = shift0;
        while shift <= MAX_SHIFT {
            let sol = start.with_delta(delta).with_shift(shift);
            let mut scan =
                verify_supersolution(&lattice, &sol, &one, sigma, &region, DEFAULT_TOLERANCE)?;
            trace.push(TuningTrial {
                delta,
                shift,
                max_residual: scan.max_residual,
                argmax_vertex: scan.argmax_vertex.clone(),
                pass: scan.pass,
            });
            if scan.pass {
                scan.params = serde_json::to_value(sol).expect("plain data");
                return Ok(LatticeTuning {
                    solution: sol,
                    scan,
                    trace,
                });
            }
            last_failure = scan.worst_excess_vertex.clone();
            shift *= 2.0;
        }
        delta /= 2.0;
    }
    Err(Error::Tuning(format!(
        "no passing (delta, K) with K <= {MAX_SHIFT:e} after {MAX_HALVINGS} halvings of delta; \
         last failing vertex {}",
        last_failure.unwrap_or_default()
    )))
}

/// `u_n = δ / (n + n₀)^{2/(σ−1)}` on a homogeneous tree.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TreeSupersolution {
    pub sigma: f64,
    pub epsilon: f64,
    pub offset: u64,
    pub delta: f64,
}

impl TreeSupersolution {
    pub fn new(sigma: f64, epsilon: f64, offset: u64, delta: f64) -> Result<Self> {
        if !(sigma > 1.0) || !(epsilon > 0.0) || offset < 1 || !(delta > 0.0) {
            return Err(Error::Spec(format!(
                "need sigma > 1, epsilon > 0, n0 >= 1, delta > 0 \
                 (sigma = {sigma}, epsilon = {epsilon}, n0 = {offset}, delta = {delta})"
            )));
        }
        Ok(Self {
            sigma,
            epsilon,
            offset,
            delta,
        })
    }

    /// Fails unless `(σ, ε, n₀)` agree with the tree's parameters.
    pub fn bind(&self, tree: &HomogeneousTreeSpec) -> Result<()> {
        let mut mismatches = Vec::new();
        if self.sigma != tree.sigma {
            mismatches.push(format!("sigma {} vs tree {}", self.sigma, tree.sigma));
        }
        if self.epsilon != tree.epsilon {
            mismatches.push(format!("epsilon {} vs tree {}", self.epsilon, tree.epsilon));
        }
        if self.offset != tree.offset {
            mismatches.push(format!("n0 {} vs tree {}", self.offset, tree.offset));
        }
        if mismatches.is_empty() {
            Ok(())
        } else {
            Err(Error::Binding(mismatches.join("; ")))
        }
    }

    pub fn decay_exponent(&self) -> f64 {
        2.0 / (self.sigma - 1.0)
    }

    pub fn level_value(&self, n: usize) -> f64 {
        self.delta / ((n as u64 + self.offset) as f64).powf(self.decay_exponent())
    }
}

impl VertexFunction<TreePath> for TreeSupersolution {
    fn value(&self, x: &TreePath) -> Option<f64> {
        Some(self.level_value(x.depth()))
    }
}

/// `Λ = n₀²[1 − (n₀/(n₀+1))^{2/(σ−1)}]`: the root inequality holds iff
/// `δ^{σ−1} ≤ Λ`.
pub fn root_threshold(sigma: f64, offset: u64) -> f64 {
    let a = 2.0 / (sigma - 1.0);
    let n0 = offset as f64;
    n0 * n0 * -(a * (-1.0 / (n0 + 1.0)).ln_1p()).exp_m1()
}

/// The level-`n` inequality holds iff `δ^{σ−1} ≤ F(k)`, `k = n + n₀`, where
///
/// ```text
/// F(k) = k² [(1 − (1+1/k)^{−a}) + q(1 − (1−1/k)^{−a})] / (1 + q)
/// ```
///
/// with `a = 2/(σ−1)` and `q = ((k−1)/k)^p`. `F(k) → ε/(σ−1)` as `k → ∞`.
/// Written with `expm1`/`ln_1p` because both differences are `O(1/k)` and
/// nearly cancel.
pub fn level_bracket(sigma: f64, epsilon: f64, k: f64) -> f64 {
    let a = 2.0 / (sigma - 1.0);
    let p = (sigma + 1.0) / (sigma - 1.0) + epsilon;
    let q = (p * (-1.0 / k).ln_1p()).exp();
    let up = -(-a * (1.0 / k).ln_1p()).exp_m1();
    let down = -(-a * (-1.0 / k).ln_1p()).exp_m1();
    k * k * (up + q * down) / (1.0 + q)
}

/// Level-wise residual check of a radial function.
#[derive(Debug, Clone, Serialize)]
pub struct LevelScan {
    pub first_level: usize,
    pub last_level: usize,
    pub max_residual: f64,
    pub argmax_level: usize,
    pub worst_excess: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// `Δu(n) + v(n)·u(n)^σ` at level `n` of a spherically symmetric tree.
pub fn level_residual<L, U, P>(profile: &L, u: U, v: P, sigma: f64, n: usize) -> (f64, f64)
where
    L: LevelProfile + ?Sized,
    U: Fn(usize) -> f64,
    P: Fn(usize) -> f64,
{
    let lap = radial_laplacian(profile, &u, n);
    (lap + v(n) * u(n).powf(sigma), lap)
}

pub fn scan_levels<L, U, P>(
    profile: &L,
    u: U,
    v: P,
    sigma: f64,
    levels: std::ops::RangeInclusive<usize>,
    tolerance: f64,
) -> LevelScan
where
    L: LevelProfile + ?Sized,
    U: Fn(usize) -> f64 + Sync,
    P: Fn(usize) -> f64 + Sync,
{
    let (first, last) = (*levels.start(), *levels.end());
    let (best, excess) = levels
        .into_par_iter()
        .map(|n| {
            let (r, lap) = level_residual(profile, &u, &v, sigma, n);
            (
                Extreme { value: r, index: n },
                Extreme {
                    value: r - tolerance * lap.abs().max(1.0),
                    index: n,
                },
            )
        })
        .reduce(
            || (Extreme::NONE, Extreme::NONE),
            |a, b| (a.0.merge(b.0), a.1.merge(b.1)),
        );
    LevelScan {
        first_level: first,
        last_level: last,
        max_residual: best.value,
        argmax_level: best.index,
        worst_excess: excess.value,
        pass: excess.value <= 0.0,
        tolerance,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeTrial {
    pub offset: u64,
    pub bracket_min: f64,
    pub bracket_max: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeTuning {
    pub solution: TreeSupersolution,
    pub degree: usize,
    /// Root threshold `Λ`.
    pub lambda: f64,
    /// `min F(k)` and `max F(k)` over the checked levels.
    pub bracket_min: f64,
    pub bracket_max: f64,
    /// `bracket_min / ε` and `bracket_max / ε`.
    pub c1: f64,
    pub c2: f64,
    pub n_check: usize,
    pub levels: LevelScan,
    pub trace: Vec<TreeTrial>,
}

impl TreeTuning {
    pub fn tree_spec(&self, max_depth: usize) -> HomogeneousTreeSpec {
        HomogeneousTreeSpec {
            degree: self.degree,
            sigma: self.solution.sigma,
            epsilon: self.solution.epsilon,
            offset: self.solution.offset,
            max_depth,
        }
    }
}

pub const MAX_TREE_OFFSET: u64 = 100_000;

/// Doubles `n₀` from 1 until `F(k)` lies in `[L/2, 2L]`, `L = ε/(σ−1)`, for
/// every `k = n₀+1, …, n₀+n_check`, then takes
/// `δ^{σ−1} = ½ min{Λ, min F}` and rechecks the inequality level by level.
pub fn tune_tree_parameters(
    degree: usize,
    sigma: f64,
    epsilon: f64,
    n_check: usize,
) -> Result<TreeTuning> {
    if degree < 2 || !(sigma > 1.0) || !(epsilon > 0.0) || n_check == 0 {
        return Err(Error::Spec(format!(
            "need degree >= 2, sigma > 1, epsilon > 0, n_check >= 1 \
             (degree = {degree}, sigma = {sigma}, epsilon = {epsilon}, n_check = {n_check})"
        )));
    }
    let limit = epsilon / (sigma - 1.0);
    let mut trace = Vec::new();
    let mut offset = 1u64;
    while offset <= MAX_TREE_OFFSET {
        let (lo, hi) = (1..=n_check as u64)
            .into_par_iter()
            .map(|n| {
                let f = level_bracket(sigma, epsilon, (offset + n) as f64);
                (f, f)
            })
            .reduce(
                || (f64::INFINITY, f64::NEG_INFINITY),
                |a, b| (a.0.min(b.0), a.1.max(b.1)),
            );
        let stable = lo >= limit / 2.0 && hi <= 2.0 * limit;
        trace.push(TreeTrial {
            offset,
            bracket_min: lo,
            bracket_max: hi,
            stable,
        });
        if stable {
            let lambda = root_threshold(sigma, offset);
            let delta = (0.5 * lambda.min(lo)).powf(1.0 / (sigma - 1.0));
            let solution = TreeSupersolution::new(sigma, epsilon, offset, delta)?;
            let spec = HomogeneousTreeSpec {
                degree,
                sigma,
                epsilon,
                offset,
                max_depth: 0,
            };
            let levels = scan_levels(
                &spec,
                |n| solution.level_value(n),
                |_| 1.0,
                sigma,
                0..=n_check,
                DEFAULT_TOLERANCE,
            );
            if !levels.pass {
                return Err(Error::Tuning(format!(
                    "level inequality fails at level {} (residual {:e}) for n0 = {offset}",
                    levels.argmax_level, levels.max_residual
                )));
            }
            return Ok(TreeTuning {
                solution,
                degree,
                lambda,
                bracket_min: lo,
                bracket_max: hi,
                c1: lo / epsilon,
                c2: hi / epsilon,
                n_check,
                levels,
                trace,
            });
        }
        offset *= 2;
    }
    Err(Error::Tuning(format!(
        "bracket did not settle within [{:e}, {:e}] for n0 up to {MAX_TREE_OFFSET}",
        limit / 2.0,
        2.0 * limit
    )))
}

/// Largest relative difference between the full-stencil residual at each
/// listed vertex and the level-profile residual at its depth, relative to
/// `max(|Δu|, u^σ)`.
pub fn stencil_level_discrepancy(
    tree: &HomogeneousTree,
    sol: &TreeSupersolution,
    vertices: &[TreePath],
) -> Result<f64> {
    sol.bind(tree.spec())?;
    let sigma = sol.sigma;
    vertices
        .par_iter()
        .map(|x| {
            let (full, _) = residual_at(tree, sol, &one, sigma, x)?;
            let (level, lap) =
                level_residual(tree, |n| sol.level_value(n), |_| 1.0, sigma, x.depth());
            let scale = lap.abs().max(sol.level_value(x.depth()).powf(sigma));
            Ok((full - level).abs() / scale)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Convenience wrapper: ball around `center`, then [`verify_supersolution`].
#[allow(clippy::too_many_arguments)]
pub fn verify_on_ball<G, M, U, P>(
    g: &G,
    d: &M,
    center: &G::Vertex,
    radius: f64,
    u: &U,
    v: &P,
    sigma: f64,
    tolerance: f64,
    budget: usize,
) -> Result<ResidualScan>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    U: VertexFunction<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    let region = ball(g, d, center, radius, 0.0, budget)?;
    verify_supersolution(g, u, v, sigma, &region, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_for_three_dimensions_sigma_four() {
        let s = LatticeSupersolution::new(3, 4.0, 0.1, 20.0).unwrap();
        assert!((s.gamma - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.lambda - 1.0 / 54.0).abs() < 1e-15);
        let u0 = s.eval(&LatticePoint::origin(3));
        assert!((u0 - 0.1 * 20f64.powf(-1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn critical_exponent_is_rejected() {
        assert!(matches!(
            LatticeSupersolution::new(4, 2.0, 0.1, 1.0),
            Err(Error::Subcritical { .. })
        ));
        assert!(matches!(
            LatticeSupersolution::new(2, 10.0, 0.1, 1.0),
            Err(Error::Subcritical { .. })
        ));
    }

    #[test]
    fn root_threshold_matches_its_definition() {
        for (sigma, n0) in [(2.0, 10u64), (3.0, 4), (1.5, 1)] {
            let a = 2.0 / (sigma - 1.0);
            let n = n0 as f64;
            let direct = n * n * ((1.0 + n).powf(a) - n.powf(a)) / (1.0 + n).powf(a);
            assert!((root_threshold(sigma, n0) - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn bracket_tends_to_its_limit() {
        let f = level_bracket(2.0, 0.5, 1e6);
        assert!((f - 0.5).abs() < 1e-4, "{f}");
        // Without the ε term the leading order vanishes.
        assert!(level_bracket(2.0, 0.0, 1e6).abs() < 1e-5);
    }

    #[test]
    fn binding_mismatch() {
        let sol = TreeSupersolution::new(2.0, 0.5, 10, 0.05).unwrap();
        let spec = HomogeneousTreeSpec {
            degree: 3,
            sigma: 2.0,
            epsilon: 0.5,
            offset: 11,
            max_depth: 5,
        };
        assert!(matches!(sol.bind(&spec), Err(Error::Binding(_))));
    }

    #[test]
    fn ties_pick_lowest_index() {
        let a = Extreme { value: 1.0, index: 7 };
        let b = Extreme { value: 1.0, index: 3 };
        assert_eq!(a.merge(b).index, 3);
        assert_eq!(b.merge(a).index, 3);
    }
}
