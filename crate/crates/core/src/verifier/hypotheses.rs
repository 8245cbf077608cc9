use serde::Serialize;

use super::{chunked_fold, enumerate_sites, Accumulate, ArgMax, ProblemSpec, RadialProblem};
use super::cutoff::default_cutoff;
use crate::calculus::{check_row_sum_bound, laplacian};
use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};
use crate::growth::{self, VolumeGrowthReport};
use crate::levels::{radial_laplacian, LevelProfile};
use crate::metric::{fit_on_region, jump_size, DistanceLaplacianBound, PseudoMetric};

/// Attached to every hypothesis report: the checks see a finite region only.
pub const EVIDENCE_LABEL: &str = "finite-region evidence";

/// Largest negative slack tolerated in the per-edge convexity inequality.
const CONVEXITY_SLACK: f64 = 1e-14;

/// Vertices sampled for the weight-symmetry check.
const SYMMETRY_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub verdict: Verdict,
    pub value: Option<f64>,
    pub detail: String,
}

impl Check {
    fn pass(value: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Pass,
            value,
            detail: detail.into(),
        }
    }

    fn fail(value: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Fail,
            value,
            detail: detail.into(),
        }
    }

    fn inconclusive(detail: impl Into<String>) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            value: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub label: &'static str,
    pub method: &'static str,
    pub sigma: f64,
    pub alpha: f64,
    pub r0: f64,
    pub radii: Vec<f64>,
    pub explored: usize,
    pub margin: f64,
    pub connectivity: Check,
    pub row_sum: Check,
    pub jump: Check,
    pub ball_finiteness: Check,
    pub distance_laplacian: Check,
    pub distance_laplacian_fit: Option<DistanceLaplacianBound>,
    /// `C·j`: the constant for which `Δd ≤ C·j` always holds with `α = 0`.
    pub alpha_zero_fallback: Option<f64>,
    pub weight_symmetry: Check,
    pub volume_growth: Check,
    pub growth: Option<VolumeGrowthReport>,
    /// Conjunction of all checks above.
    pub theorem_applies: bool,
    pub overall: Verdict,
}

fn overall(checks: &[&Check]) -> Verdict {
    if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

impl HypothesisReport {
    fn finish(mut self) -> Self {
        self.overall = overall(&[
            &self.connectivity,
            &self.row_sum,
            &self.jump,
            &self.ball_finiteness,
            &self.distance_laplacian,
            &self.weight_symmetry,
            &self.volume_growth,
        ]);
        self.theorem_applies = self.overall == Verdict::Pass;
        self
    }
}

fn growth_check(report: &VolumeGrowthReport) -> Check {
    let detail = format!(
        "log-log slope {:.4} against target exponent {:.4}",
        report.slope, report.target_exponent
    );
    if report.is_consistent() {
        Check::pass(Some(report.slope), detail)
    } else {
        Check::fail(Some(report.slope), detail)
    }
}

/// Checks the standing assumptions and the volume-growth condition on
/// `B_{2·max R}(x₀)`. An exhausted exploration budget yields an inconclusive
/// report rather than an error.
pub fn check_hypotheses<G, M, P>(spec: &ProblemSpec<'_, G, M, P>, radii: &[f64]) -> Result<HypothesisReport>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    spec.validate()?;
    growth::validate(spec.sigma, spec.alpha, radii)?;
    let r_explore = 2.0 * radii.last().copied().unwrap_or(0.0);
    let mut report = HypothesisReport {
        label: EVIDENCE_LABEL,
        method: "enumerated",
        sigma: spec.sigma,
        alpha: spec.alpha,
        r0: spec.r0,
        radii: radii.to_vec(),
        explored: 0,
        margin: 0.0,
        connectivity: Check::inconclusive("not run"),
        row_sum: Check::inconclusive("not run"),
        jump: Check::inconclusive("not run"),
        ball_finiteness: Check::inconclusive("not run"),
        distance_laplacian: Check::inconclusive("not run"),
        distance_laplacian_fit: None,
        alpha_zero_fallback: None,
        weight_symmetry: Check::inconclusive("not run"),
        volume_growth: Check::inconclusive("not run"),
        growth: None,
        theorem_applies: false,
        overall: Verdict::Inconclusive,
    };
    let explored = spec
        .jump(r_explore)
        .and_then(|j| enumerate_sites(spec, r_explore, j).map(|s| (j, s)));
    let (j0, sites) = match explored {
        Ok(x) => x,
        Err(Error::BudgetExceeded { budget, explored }) => {
            let why = format!("exploration stopped at {explored} vertices (budget {budget})");
            report.ball_finiteness = Check::inconclusive(why.clone());
            report.connectivity = Check::inconclusive(why);
            return Ok(report.finish());
        }
        Err(e) => return Err(e),
    };
    let g = spec.graph;
    let region = &sites.vertices;
    report.explored = region.len();
    report.margin = sites.margin;

    report.connectivity = Check::pass(
        Some(region.len() as f64),
        format!("all {} vertices of the ball were reached from x0 along edges", region.len()),
    );
    report.ball_finiteness = Check::pass(
        Some(region.len() as f64),
        format!("B_{r_explore} enumerated with margin {}", sites.margin),
    );

    let row = check_row_sum_bound(g, region)?;
    report.row_sum = Check::pass(Some(row), "max over the ball of (sum of weights)/mu");

    let jr = jump_size(g, spec.metric, region);
    let j = jr.analytic.unwrap_or(jr.explored).max(j0);
    report.jump = if jr.explored.is_finite() {
        Check::pass(
            Some(jr.explored),
            format!(
                "sup of d over {} explored edges; closed form {:?}",
                jr.edges_examined, jr.analytic
            ),
        )
    } else {
        Check::fail(None, "unbounded distance across an edge")
    };
    report.alpha_zero_fallback = Some(row * j);

    match fit_on_region(g, spec.metric, &spec.base, spec.alpha, spec.r0, r_explore, region) {
        Ok(fit) => {
            report.distance_laplacian = Check::pass(
                Some(fit.constant),
                format!(
                    "Delta d <= C/d^alpha on B_{r_explore} \\ B_{} with C = {:.6}",
                    spec.r0, fit.constant
                ),
            );
            report.distance_laplacian_fit = Some(fit);
        }
        Err(Error::Domain(msg)) => report.distance_laplacian = Check::inconclusive(msg),
        Err(e) => return Err(e),
    }

    report.weight_symmetry = symmetry_check(g, region);

    let exponent = -1.0 / (spec.sigma - 1.0);
    let weighted: Vec<(f64, f64)> = region
        .iter()
        .zip(&sites.distances)
        .map(|(x, &d)| {
            let v = eval(spec.potential, x)?;
            if !(v > 0.0) {
                return Err(Error::PotentialNotPositive {
                    vertex: x.to_string(),
                    value: v,
                });
            }
            Ok((d, v.powf(exponent) * g.measure(x)))
        })
        .collect::<Result<_>>()?;
    let masses = growth::annulus_masses(&weighted, radii);
    let gr = growth::assemble(
        spec.sigma,
        spec.alpha,
        radii,
        masses,
        "enumerated",
        sites.margin,
        growth::DEFAULT_SLOPE_TOLERANCE,
    );
    report.volume_growth = growth_check(&gr);
    report.growth = Some(gr);
    Ok(report.finish())
}

fn symmetry_check<G: WeightedGraph>(g: &G, region: &[G::Vertex]) -> Check {
    let step = (region.len() / SYMMETRY_SAMPLES).max(1);
    let mut sampled = 0;
    for x in region.iter().step_by(step) {
        sampled += 1;
        for (y, w) in g.neighbors(x) {
            if &y == x {
                return Check::fail(None, format!("self-loop at {x}"));
            }
            let back = g.neighbors(&y).into_iter().find(|(z, _)| z == x).map(|(_, w)| w);
            if back != Some(w) {
                return Check::fail(
                    None,
                    format!("weight {x}->{y} is {w} but the reverse is {back:?}"),
                );
            }
        }
    }
    Check::pass(
        Some(sampled as f64),
        format!("symmetric, loop-free weights at {sampled} sampled vertices"),
    )
}

/// Level-profile version of [`check_hypotheses`]. Connectivity, local
/// finiteness, weight symmetry and the unit jump of the hop metric hold for
/// every tree by construction; the row-sum ratio, `Δd` and the volume growth
/// are computed level by level.
pub fn check_hypotheses_levels<L, P>(problem: &RadialProblem<'_, L, P>, radii: &[f64]) -> Result<HypothesisReport>
where
    L: LevelProfile + ?Sized,
    P: Fn(usize) -> f64 + Sync,
{
    problem.validate()?;
    growth::validate(problem.sigma, problem.alpha, radii)?;
    let profile = problem.profile;
    let n_max = (2.0 * radii.last().copied().unwrap_or(0.0)).floor() as usize;
    let row = (0..=n_max)
        .map(|n| profile.outward_fraction(n) + profile.inward_fraction(n))
        .fold(0.0, f64::max);
    let mut fit = ArgMax::default();
    let mut annulus = 0usize;
    for n in 0..=n_max {
        let d = n as f64;
        if d > problem.r0 {
            annulus += 1;
            let lap = radial_laplacian(profile, |k| k as f64, n);
            fit.offer(lap * d.powf(problem.alpha), n);
        }
    }
    let distance_laplacian = if annulus == 0 {
        Check::inconclusive("no level beyond R0")
    } else {
        Check::pass(
            Some(fit.value.max(0.0)),
            format!("Delta d * d^alpha over levels {}..={n_max}", problem.r0.floor() as usize + 1),
        )
    };
    let fit_report = (annulus > 0).then(|| DistanceLaplacianBound {
        alpha: problem.alpha,
        r0: problem.r0,
        r_max: n_max as f64,
        constant: fit.value.max(0.0),
        raw_max: fit.value,
        argmax: fit.index.map(|n| format!("level {n}")),
        annulus_size: annulus,
    });
    let gr = growth::volume_growth_report_levels(profile, &problem.potential, problem.sigma, problem.alpha, radii)?;
    let report = HypothesisReport {
        label: EVIDENCE_LABEL,
        method: "level-profile",
        sigma: problem.sigma,
        alpha: problem.alpha,
        r0: problem.r0,
        radii: radii.to_vec(),
        explored: n_max + 1,
        margin: 0.0,
        connectivity: Check::pass(None, "trees are connected"),
        row_sum: Check::pass(Some(row), "max over levels of (outward + inward share)"),
        jump: Check::pass(Some(1.0), "hop metric"),
        ball_finiteness: Check::pass(None, "locally finite tree with the hop metric"),
        distance_laplacian,
        distance_laplacian_fit: fit_report,
        alpha_zero_fallback: Some(row),
        weight_symmetry: Check::pass(None, "level weights are symmetric by construction"),
        volume_growth: growth_check(&gr),
        growth: Some(gr),
        theorem_applies: false,
        overall: Verdict::Inconclusive,
    };
    Ok(report.finish())
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffEstimate {
    pub r: f64,
    pub alpha: f64,
    pub jump: f64,
    /// `max_{A_R} (−Δφ)·R^{1+α}`.
    pub c_hat: f64,
    pub argmax: Option<String>,
    pub annulus_size: usize,
    pub explored: usize,
    pub margin: f64,
    /// `−Δφ = 0` exactly at every explored vertex outside `A_R`.
    pub support_vanishes: bool,
    pub nonzero_outside: usize,
    pub first_nonzero_outside: Option<String>,
    /// `φ = 1` on `B_R` and `φ = 0` outside `B_{2R}` at every explored vertex.
    pub phi_consistent: bool,
    /// `φˢ(y) − φˢ(x) ≥ s φ^{s−1}(x)(φ(y) − φ(x))` on every explored edge.
    pub convexity_holds: bool,
    /// Smallest value of the difference of the two sides.
    pub convexity_worst: f64,
    pub convexity_edges: usize,
    pub s_values: Vec<f64>,
    /// `A_R ⊂ B_{4R} \ B_{R/2}`.
    pub wide_annulus_inclusion: bool,
}

#[derive(Default)]
struct CutoffAcc {
    c_hat: ArgMax,
    annulus: usize,
    nonzero_outside: usize,
    first_outside: Option<usize>,
    phi_bad: usize,
    convexity_worst: f64,
    convexity_edges: usize,
}

impl Accumulate for CutoffAcc {
    fn merge(&mut self, o: Self) {
        self.c_hat.merge(o.c_hat);
        self.annulus += o.annulus;
        self.nonzero_outside += o.nonzero_outside;
        self.first_outside = match (self.first_outside, o.first_outside) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.phi_bad += o.phi_bad;
        self.convexity_worst = self.convexity_worst.min(o.convexity_worst);
        self.convexity_edges += o.convexity_edges;
    }
}

fn s_values(s: f64) -> Vec<f64> {
    let mut v = vec![1.5, 2.0, s, 4.0];
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

struct CutoffSite {
    d: f64,
    phi: f64,
    lap_phi: f64,
}

impl CutoffAcc {
    fn record(&mut self, site: CutoffSite, i: usize, r: f64, j: f64, alpha: f64) {
        let in_annulus = site.d > r - j && site.d <= 2.0 * r + j;
        if in_annulus {
            self.annulus += 1;
            self.c_hat.offer(-site.lap_phi * r.powf(1.0 + alpha), i);
        } else if site.lap_phi != 0.0 {
            self.nonzero_outside += 1;
            self.first_outside = Some(self.first_outside.map_or(i, |k| k.min(i)));
        }
        if (site.d <= r && site.phi != 1.0) || (site.d > 2.0 * r && site.phi != 0.0) {
            self.phi_bad += 1;
        }
    }

    fn edge(&mut self, phi_x: f64, phi_y: f64, ss: &[f64]) {
        if phi_x == phi_y {
            return;
        }
        for &s in ss {
            let gap = phi_y.powf(s) - phi_x.powf(s) - s * phi_x.powf(s - 1.0) * (phi_y - phi_x);
            self.convexity_worst = self.convexity_worst.min(gap);
        }
        self.convexity_edges += 1;
    }

    fn finish(self, r: f64, alpha: f64, j: f64, explored: usize, margin: f64, ss: Vec<f64>, name: impl Fn(usize) -> String) -> CutoffEstimate {
        CutoffEstimate {
            r,
            alpha,
            jump: j,
            c_hat: self.c_hat.value.max(0.0),
            argmax: self.c_hat.index.map(&name),
            annulus_size: self.annulus,
            explored,
            margin,
            support_vanishes: self.nonzero_outside == 0,
            nonzero_outside: self.nonzero_outside,
            first_nonzero_outside: self.first_outside.map(&name),
            phi_consistent: self.phi_bad == 0,
            convexity_holds: self.convexity_worst >= -CONVEXITY_SLACK,
            convexity_worst: self.convexity_worst,
            convexity_edges: self.convexity_edges,
            s_values: ss,
            wide_annulus_inclusion: r - j >= r / 2.0 && 2.0 * r + j <= 4.0 * r,
        }
    }
}

/// `Ĉ(R)` on `A_R = B_{2R+j} \ B_{R−j}` from explicit enumeration of
/// `B_{2R+2j}`, with the support and per-edge convexity checks.
pub fn cutoff_laplacian_estimate<G, M, P>(spec: &ProblemSpec<'_, G, M, P>, r: f64) -> Result<CutoffEstimate>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    spec.validate()?;
    let j = spec.jump(2.0 * r)?;
    if !(r >= spec.r0.max(j)) {
        return Err(Error::Domain(format!(
            "R = {r} must be at least max(R0, j) = {}",
            spec.r0.max(j)
        )));
    }
    let sites = enumerate_sites(spec, 2.0 * r + 2.0 * j, j)?;
    let cutoff = default_cutoff();
    let ss = s_values(spec.s);
    let phi = |y: &G::Vertex| cutoff.phi(spec.metric.distance(y, &spec.base), r);
    let acc: CutoffAcc = chunked_fold(sites.vertices.len(), |acc: &mut CutoffAcc, i| {
        let x = &sites.vertices[i];
        let phi_x = phi(x);
        acc.record(
            CutoffSite {
                d: sites.distances[i],
                phi: phi_x,
                lap_phi: laplacian(spec.graph, &phi, x)?,
            },
            i,
            r,
            j,
            spec.alpha,
        );
        for (y, _) in spec.graph.neighbors(x) {
            acc.edge(phi_x, phi(&y), &ss);
        }
        Ok(())
    })?;
    Ok(acc.finish(r, spec.alpha, j, sites.vertices.len(), sites.margin, ss, |i| {
        sites.vertices[i].to_string()
    }))
}

/// Level-profile version of [`cutoff_laplacian_estimate`] with `j = 1`.
pub fn cutoff_laplacian_estimate_levels<L, P>(problem: &RadialProblem<'_, L, P>, r: f64) -> Result<CutoffEstimate>
where
    L: LevelProfile + ?Sized,
    P: Fn(usize) -> f64 + Sync,
{
    problem.validate()?;
    let j = 1.0;
    if !(r >= problem.r0.max(j)) {
        return Err(Error::Domain(format!(
            "R = {r} must be at least max(R0, j) = {}",
            problem.r0.max(j)
        )));
    }
    let cutoff = default_cutoff();
    let ss = s_values(problem.s);
    let phi = |n: usize| cutoff.phi(n as f64, r);
    let n_max = (2.0 * r + 2.0 * j).floor() as usize;
    let acc: CutoffAcc = chunked_fold(n_max + 1, |acc: &mut CutoffAcc, n| {
        let phi_n = phi(n);
        acc.record(
            CutoffSite {
                d: n as f64,
                phi: phi_n,
                lap_phi: radial_laplacian(problem.profile, phi, n),
            },
            n,
            r,
            j,
            problem.alpha,
        );
        if n > 0 {
            acc.edge(phi_n, phi(n - 1), &ss);
        }
        acc.edge(phi_n, phi(n + 1), &ss);
        Ok(())
    })?;
    Ok(acc.finish(r, problem.alpha, j, n_max + 1, 0.0, ss, |n| format!("level {n}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_factorial_tree, build_lattice, FactorialTreeSpec, LatticeSpec, TreePath};

    #[test]
    fn lattice_check_passes() {
        let (g, d) = build_lattice(LatticeSpec { dim: 3 }).unwrap();
        let one = |_: &crate::builders::LatticePoint| 1.0;
        let spec = ProblemSpec::new(&g, &d, g.origin(), &one, 3.0, 1.0);
        let rep = check_hypotheses(&spec, &[2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(rep.row_sum.value, Some(1.0));
        assert_eq!(rep.jump.value, Some(1.0));
        assert!(rep.distance_laplacian.value.unwrap() <= 0.5);
    }

    #[test]
    fn budget_makes_the_report_inconclusive() {
        let (g, d) = build_lattice(LatticeSpec { dim: 3 }).unwrap();
        let one = |_: &crate::builders::LatticePoint| 1.0;
        let mut spec = ProblemSpec::new(&g, &d, g.origin(), &one, 3.0, 1.0);
        spec.budget = 100;
        let rep = check_hypotheses(&spec, &[8.0, 16.0, 32.0, 64.0]).unwrap();
        assert_eq!(rep.overall, Verdict::Inconclusive);
        assert!(!rep.theorem_applies);
    }

    #[test]
    fn factorial_tree_routes_agree_on_the_cutoff() {
        let (g, d) = build_factorial_tree(FactorialTreeSpec { max_depth: 12 }).unwrap();
        let one = |_: &TreePath| 1.0;
        let spec = ProblemSpec::new(&g, &d, TreePath::root(), &one, 2.0, 1.0);
        let a = cutoff_laplacian_estimate(&spec, 4.0).unwrap();
        let problem = RadialProblem::new(&g, |_| 1.0, 2.0, 1.0);
        let b = cutoff_laplacian_estimate_levels(&problem, 4.0).unwrap();
        assert!((a.c_hat - b.c_hat).abs() <= 1e-12 * a.c_hat.max(1.0));
        assert!(a.support_vanishes && b.support_vanishes);
    }
}
