//! The capacity argument as a table over `R`.
//!
//! For a candidate `u ≥ 0` and the test function `φ = ψ(d/R)` the proof runs
//! through the chain
//!
//! ```text
//! Σ μ v φˢ uᵟ  ≤  −Σ μ φˢ Δu             (u solves the inequality)
//!              =  −Σ μ u Δ(φˢ)           (summation by parts)
//!              ≤  s Σ μ u φ^{s−1} (−Δφ)  (convexity of t ↦ tˢ)
//!              ≤  (sĈ/R^{1+α}) Σ_{A_R} μ u φ^{s−1}
//!              ≤  Young / Hölder bounds over A_R
//! ```
//!
//! Each link is evaluated separately. Only the first depends on `u` being a
//! supersolution, and together with Young it forces the tail mass
//! `Σ_{B_R} μ v uᵟ` under a bound that stays finite as `R` grows when the
//! volume-growth condition holds.

use rayon::prelude::*;
use serde::Serialize;

use super::cutoff::default_cutoff;
use super::{chunked_fold, enumerate_sites, Accumulate, ArgMax, ProblemSpec, RadialProblem};
use crate::calculus::laplacian;
use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};
use crate::levels::{radial_laplacian, LevelProfile};
use crate::metric::PseudoMetric;

/// Relative slack allowed when comparing two sides of a link.
const LINK_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct CapacityRow {
    #[serde(rename = "R")]
    pub r: f64,
    /// `Σ μ v φˢ uᵟ`.
    pub lhs: f64,
    /// `−Σ μ φˢ Δu`.
    pub solution_link: f64,
    /// `−Σ μ u Δ(φˢ)`, equal to `solution_link` by summation by parts.
    pub ibp_term: f64,
    /// `s Σ μ u φ^{s−1} (−Δφ)` over `A_R`.
    pub convexity_term: f64,
    /// `(sĈ/R^{1+α}) Σ_{A_R} μ u φ^{s−1}`.
    pub cutoff_term: f64,
    pub young_bound: f64,
    /// Hölder with the `φ` weights kept.
    pub hoelder_weighted: f64,
    /// Hölder after dropping `φ ≤ 1`:
    /// `(sĈ/R^{1+α}) (Σ_{A_R} μ uᵟ v)^{1/σ} (Σ_{A_R} μ v^{−1/(σ−1)})^{(σ−1)/σ}`.
    pub hoelder_bound: f64,
    /// `Σ_{A_R} μ v^{−1/(σ−1)}`.
    pub annulus_mass: f64,
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    /// `Σ_{B_R} μ v uᵟ`.
    pub tail_mass: f64,
    /// `(sĈ/R^{1+α})^{σ/(σ−1)} Σ_{A_R} μ φ^{s−σ/(σ−1)} v^{−1/(σ−1)}`; bounds
    /// the tail mass whenever `u` is a supersolution.
    pub integrability_bound: f64,
    pub solution_link_holds: bool,
    pub ibp_gap: f64,
    pub convexity_link_holds: bool,
    pub cutoff_link_holds: bool,
    pub young_link_holds: bool,
    pub hoelder_links_hold: bool,
    pub tail_within_bound: bool,
    /// `A_R ⊂ B_{4R} \ B_{R/2}`.
    pub wide_annulus_inclusion: bool,
    pub annulus_size: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CapacityVerdict {
    /// Every link the data can test holds at every radius.
    ConsistentWithChain,
    /// The data contradict `u` being a nonnegative supersolution.
    InconsistentWithBeingASolution { r: f64, reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct CapacityCertificate {
    pub sigma: f64,
    pub alpha: f64,
    pub s: f64,
    pub jump: f64,
    pub cutoff: &'static str,
    pub method: &'static str,
    pub rows: Vec<CapacityRow>,
    pub verdict: CapacityVerdict,
}

struct Site {
    d: f64,
    mass: f64,
    v: f64,
    u: f64,
    phi: f64,
    lap_u: f64,
    lap_phi: f64,
    lap_phi_s: f64,
}

#[derive(Default)]
struct Sums {
    lhs: f64,
    solution_link: f64,
    ibp: f64,
    convexity: f64,
    u_phi: f64,
    usig_phis_v: f64,
    usig_v: f64,
    phi_w: f64,
    annulus_mass: f64,
    tail: f64,
    c_hat: ArgMax,
    annulus: usize,
}

impl Accumulate for Sums {
    fn merge(&mut self, o: Self) {
        self.lhs += o.lhs;
        self.solution_link += o.solution_link;
        self.ibp += o.ibp;
        self.convexity += o.convexity;
        self.u_phi += o.u_phi;
        self.usig_phis_v += o.usig_phis_v;
        self.usig_v += o.usig_v;
        self.phi_w += o.phi_w;
        self.annulus_mass += o.annulus_mass;
        self.tail += o.tail;
        self.c_hat.merge(o.c_hat);
        self.annulus += o.annulus;
    }
}

#[derive(Clone, Copy)]
struct Params {
    r: f64,
    j: f64,
    alpha: f64,
    sigma: f64,
    s: f64,
}

impl Sums {
    fn record(&mut self, x: Site, i: usize, p: Params) {
        let Params { r, j, alpha, sigma, s } = p;
        let conj = sigma / (sigma - 1.0);
        let w = x.v.powf(-1.0 / (sigma - 1.0));
        let usig = x.u.powf(sigma);
        if x.phi > 0.0 {
            let phis = x.phi.powf(s);
            self.lhs += x.mass * x.v * phis * usig;
            self.solution_link += phis * x.mass * -x.lap_u;
        }
        self.ibp += x.mass * x.u * -x.lap_phi_s;
        if x.d <= r {
            self.tail += x.mass * x.v * usig;
        }
        if x.d > r - j && x.d <= 2.0 * r + j {
            self.annulus += 1;
            self.c_hat.offer(-x.lap_phi * r.powf(1.0 + alpha), i);
            let phi_s1 = x.phi.powf(s - 1.0);
            self.convexity += x.mass * x.u * s * phi_s1 * -x.lap_phi;
            self.u_phi += x.mass * x.u * phi_s1;
            self.usig_phis_v += x.mass * usig * x.phi.powf(s) * x.v;
            self.usig_v += x.mass * usig * x.v;
            self.phi_w += x.mass * x.phi.powf(s - conj) * w;
            self.annulus_mass += x.mass * w;
        }
    }

    fn row(self, p: Params) -> CapacityRow {
        let Params { r, j, alpha, sigma, s } = p;
        let conj = sigma / (sigma - 1.0);
        let c_hat = self.c_hat.value.max(0.0);
        let c = s * c_hat / r.powf(1.0 + alpha);
        let cutoff_term = c * self.u_phi;
        let young = self.usig_phis_v / sigma + c.powf(conj) * self.phi_w / conj;
        let hoelder_weighted = c * self.usig_phis_v.powf(1.0 / sigma) * self.phi_w.powf(1.0 / conj);
        let hoelder_bound = c * self.usig_v.powf(1.0 / sigma) * self.annulus_mass.powf(1.0 / conj);
        let integrability_bound = c.powf(conj) * self.phi_w;
        let le = |a: f64, b: f64| a <= b + LINK_SLACK * a.abs().max(b.abs());
        let scale = self.solution_link.abs().max(self.ibp.abs());
        CapacityRow {
            r,
            lhs: self.lhs,
            solution_link: self.solution_link,
            ibp_term: self.ibp,
            convexity_term: self.convexity,
            cutoff_term,
            young_bound: young,
            hoelder_weighted,
            hoelder_bound,
            annulus_mass: self.annulus_mass,
            c_hat,
            tail_mass: self.tail,
            integrability_bound,
            solution_link_holds: le(self.lhs, self.solution_link),
            ibp_gap: if scale > 0.0 {
                (self.solution_link - self.ibp).abs() / scale
            } else {
                0.0
            },
            convexity_link_holds: le(self.ibp, self.convexity),
            cutoff_link_holds: le(self.convexity, cutoff_term),
            young_link_holds: le(cutoff_term, young),
            hoelder_links_hold: le(cutoff_term, hoelder_weighted) && le(hoelder_weighted, hoelder_bound),
            tail_within_bound: le(self.tail, integrability_bound),
            wide_annulus_inclusion: r - j >= r / 2.0 && 2.0 * r + j <= 4.0 * r,
            annulus_size: self.annulus,
        }
    }
}

fn verdict(rows: &[CapacityRow]) -> CapacityVerdict {
    for row in rows {
        if !row.solution_link_holds {
            return CapacityVerdict::InconsistentWithBeingASolution {
                r: row.r,
                reason: format!(
                    "sum of mu v phi^s u^sigma = {:e} exceeds -sum of mu phi^s Delta u = {:e}, \
                     so Delta u + v u^sigma <= 0 fails somewhere in B_2R",
                    row.lhs, row.solution_link
                ),
            };
        }
        if !row.tail_within_bound {
            return CapacityVerdict::InconsistentWithBeingASolution {
                r: row.r,
                reason: format!(
                    "tail mass {:e} exceeds the integrability bound {:e}",
                    row.tail_mass, row.integrability_bound
                ),
            };
        }
    }
    CapacityVerdict::ConsistentWithChain
}

fn check_radii(radii: &[f64], r0: f64, j: f64) -> Result<()> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("radii must be nonempty and increasing".into()));
    }
    if radii[0] < r0.max(j) {
        return Err(Error::Domain(format!(
            "every radius must be at least max(R0, j) = {}, got {}",
            r0.max(j),
            radii[0]
        )));
    }
    Ok(())
}

/// Capacity certificate on an explicitly explored graph.
pub fn capacity_certificate<G, M, P, U>(
    spec: &ProblemSpec<'_, G, M, P>,
    u: &U,
    radii: &[f64],
) -> Result<CapacityCertificate>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
    U: VertexFunction<G::Vertex> + ?Sized,
{
    spec.validate()?;
    let r_max = radii.last().copied().unwrap_or(0.0);
    let j = spec.jump(2.0 * r_max)?;
    check_radii(radii, spec.r0, j)?;
    let sites = enumerate_sites(spec, 2.0 * r_max + 2.0 * j, j)?;
    // u must be nonnegative on every stencil used below.
    if let Some((x, val)) = sites
        .vertices
        .par_iter()
        .map(|x| eval(u, x).map(|val| (x, val)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .find(|(_, val)| *val < 0.0)
    {
        return Err(Error::Domain(format!("u must be nonnegative, found u({x}) = {val}")));
    }
    let cutoff = default_cutoff();
    let (g, d, base) = (spec.graph, spec.metric, &spec.base);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let p = Params {
            r,
            j,
            alpha: spec.alpha,
            sigma: spec.sigma,
            s: spec.s,
        };
        let phi = |y: &G::Vertex| cutoff.phi(d.distance(y, base), r);
        let phi_s = |y: &G::Vertex| phi(y).powf(spec.s);
        let sums: Sums = chunked_fold(sites.within(2.0 * r + j), |acc: &mut Sums, i| {
            let x = &sites.vertices[i];
            let v = eval(spec.potential, x)?;
            if !(v > 0.0) {
                return Err(Error::PotentialNotPositive {
                    vertex: x.to_string(),
                    value: v,
                });
            }
            let site = Site {
                d: sites.distances[i],
                mass: g.measure(x),
                v,
                u: eval(u, x)?,
                phi: phi(x),
                lap_u: laplacian(g, u, x)?,
                lap_phi: laplacian(g, &phi, x)?,
                lap_phi_s: laplacian(g, &phi_s, x)?,
            };
            acc.record(site, i, p);
            Ok(())
        })?;
        rows.push(sums.row(p));
    }
    Ok(CapacityCertificate {
        sigma: spec.sigma,
        alpha: spec.alpha,
        s: spec.s,
        jump: j,
        cutoff: cutoff.name,
        method: "enumerated",
        verdict: verdict(&rows),
        rows,
    })
}

/// Capacity certificate for a radial candidate `u(n)` on a spherically
/// symmetric tree, summing level masses.
pub fn capacity_certificate_levels<L, P, U>(
    problem: &RadialProblem<'_, L, P>,
    u: U,
    radii: &[f64],
) -> Result<CapacityCertificate>
where
    L: LevelProfile + ?Sized,
    P: Fn(usize) -> f64 + Sync,
    U: Fn(usize) -> f64 + Sync,
{
    problem.validate()?;
    let j = 1.0;
    check_radii(radii, problem.r0, j)?;
    let cutoff = default_cutoff();
    let n_all = (2.0 * radii.last().copied().unwrap_or(0.0) + 2.0 * j).floor() as usize;
    if let Some(n) = (0..=n_all).find(|&n| u(n) < 0.0) {
        return Err(Error::Domain(format!("u must be nonnegative, found u(level {n}) = {}", u(n))));
    }
    let profile = problem.profile;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let p = Params {
            r,
            j,
            alpha: problem.alpha,
            sigma: problem.sigma,
            s: problem.s,
        };
        let phi = |n: usize| cutoff.phi(n as f64, r);
        let phi_s = |n: usize| phi(n).powf(problem.s);
        let n_max = (2.0 * r + j).floor() as usize;
        let sums: Sums = chunked_fold(n_max + 1, |acc: &mut Sums, n| {
            let v = (problem.potential)(n);
            if !(v > 0.0) {
                return Err(Error::PotentialNotPositive {
                    vertex: format!("level {n}"),
                    value: v,
                });
            }
            let site = Site {
                d: n as f64,
                mass: profile.level_mass(n),
                v,
                u: u(n),
                phi: phi(n),
                lap_u: radial_laplacian(profile, &u, n),
                lap_phi: radial_laplacian(profile, phi, n),
                lap_phi_s: radial_laplacian(profile, phi_s, n),
            };
            acc.record(site, n, p);
            Ok(())
        })?;
        rows.push(sums.row(p));
    }
    Ok(CapacityCertificate {
        sigma: problem.sigma,
        alpha: problem.alpha,
        s: problem.s,
        jump: j,
        cutoff: cutoff.name,
        method: "level-profile",
        verdict: verdict(&rows),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_lattice, LatticePoint, LatticeSpec};

    #[test]
    fn zero_candidate_gives_zero_rows() {
        let (g, d) = build_lattice(LatticeSpec { dim: 3 }).unwrap();
        let one = |_: &LatticePoint| 1.0;
        let zero = |_: &LatticePoint| 0.0;
        let spec = ProblemSpec::new(&g, &d, g.origin(), &one, 3.0, 1.0);
        let cert = capacity_certificate(&spec, &zero, &[4.0, 8.0]).unwrap();
        for row in &cert.rows {
            assert_eq!(row.lhs, 0.0);
            assert_eq!(row.tail_mass, 0.0);
            assert_eq!(row.hoelder_bound, 0.0);
            assert!(row.c_hat > 0.0 && row.annulus_mass > 0.0);
        }
        assert!(matches!(cert.verdict, CapacityVerdict::ConsistentWithChain));
    }

    #[test]
    fn negative_candidate_is_rejected() {
        let (g, d) = build_lattice(LatticeSpec { dim: 2 }).unwrap();
        let one = |_: &LatticePoint| 1.0;
        let bad = |x: &LatticePoint| if x.norm_squared() == 9 { -1.0 } else { 1.0 };
        let spec = ProblemSpec::new(&g, &d, g.origin(), &one, 3.0, 1.0);
        assert!(matches!(
            capacity_certificate(&spec, &bad, &[2.0, 4.0]),
            Err(Error::Domain(_))
        ));
    }
}
