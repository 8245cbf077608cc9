//! Weighted mass of dyadic annuli and its growth exponent.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{eval, VertexFunction, WeightedGraph};
use crate::levels::LevelProfile;
use crate::metric::{ball, PseudoMetric};

pub const DEFAULT_RADII: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.1;
/// Ratios over the upper half of the radii may exceed the lower-half maximum
/// by at most this factor and still count as bounded.
pub const RATIO_GROWTH_ALLOWANCE: f64 = 1.05;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthRow {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub ratio: f64,
    pub slope_so_far: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Consistent,
    ExceedsBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeGrowthReport {
    pub sigma: f64,
    pub alpha: f64,
    /// `(1+α)σ/(σ−1)`.
    pub target_exponent: f64,
    pub rows: Vec<GrowthRow>,
    pub slope: f64,
    pub slope_tolerance: f64,
    pub verdict: GrowthVerdict,
    /// `"enumerated"` or `"level-profile"`.
    pub method: &'static str,
    pub margin: f64,
}

impl VolumeGrowthReport {
    pub fn is_consistent(&self) -> bool {
        self.verdict == GrowthVerdict::Consistent
    }
}

/// Ordinary least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub(crate) fn validate(sigma: f64, alpha: f64, radii: &[f64]) -> Result<()> {
    if !(sigma > 1.0) {
        return Err(Error::Domain(format!("sigma must exceed 1, got {sigma}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if radii.len() < 4 {
        return Err(Error::Contract(format!(
            "slope estimation needs at least 4 radii, got {}",
            radii.len()
        )));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract("radii must be positive and increasing".into()));
    }
    Ok(())
}

pub(crate) fn assemble(
    sigma: f64,
    alpha: f64,
    radii: &[f64],
    masses: Vec<f64>,
    method: &'static str,
    margin: f64,
    slope_tolerance: f64,
) -> VolumeGrowthReport {
    let target = (1.0 + alpha) * sigma / (sigma - 1.0);
    let rows: Vec<GrowthRow> = radii
        .iter()
        .zip(&masses)
        .enumerate()
        .map(|(i, (&r, &w))| {
            let pts: Vec<(f64, f64)> = radii[..=i].iter().copied().zip(masses[..=i].iter().copied()).collect();
            GrowthRow {
                r,
                w,
                ratio: w / r.powf(target),
                slope_so_far: (i >= 1).then(|| log_log_slope(&pts)),
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = radii.iter().copied().zip(masses.iter().copied()).collect();
    let slope = log_log_slope(&pts);

    let half = rows.len() / 2;
    let max_ratio = |rs: &[GrowthRow]| rs.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    let bounded = max_ratio(&rows[half..]) <= RATIO_GROWTH_ALLOWANCE * max_ratio(&rows[..half]);
    let verdict = if bounded || slope <= target + slope_tolerance {
        GrowthVerdict::Consistent
    } else {
        GrowthVerdict::ExceedsBound
    };
    VolumeGrowthReport {
        sigma,
        alpha,
        target_exponent: target,
        rows,
        slope,
        slope_tolerance,
        verdict,
        method,
        margin,
    }
}

/// `W(R) = Σ_{B_{2R} \ B_R} v^{−1/(σ−1)} μ` by explicit enumeration of
/// `B_{2 max R}`.
#[allow(clippy::too_many_arguments)]
pub fn volume_growth_report<G, M, P>(
    g: &G,
    d: &M,
    base: &G::Vertex,
    potential: &P,
    sigma: f64,
    alpha: f64,
    radii: &[f64],
    budget: usize,
) -> Result<VolumeGrowthReport>
where
    G: WeightedGraph,
    M: PseudoMetric<G::Vertex> + ?Sized,
    P: VertexFunction<G::Vertex> + ?Sized,
{
    validate(sigma, alpha, radii)?;
    let r_max = *radii.last().unwrap();
    let region = ball(g, d, base, 2.0 * r_max, 0.0, budget)?;
    let exponent = -1.0 / (sigma - 1.0);
    let mut weighted: Vec<(f64, f64)> = region
        .vertices
        .par_iter()
        .map(|x| {
            let v = eval(potential, x)?;
            if !(v > 0.0) {
                return Err(Error::PotentialNotPositive {
                    vertex: x.to_string(),
                    value: v,
                });
            }
            Ok((d.distance(x, base), v.powf(exponent) * g.measure(x)))
        })
        .collect::<Result<_>>()?;
    // Stable sort keeps the canonical vertex order among equal distances.
    weighted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let masses = annulus_masses(&weighted, radii);
    Ok(assemble(
        sigma,
        alpha,
        radii,
        masses,
        "enumerated",
        region.margin,
        DEFAULT_SLOPE_TOLERANCE,
    ))
}

/// `W(R)` for each radius from `(distance, weight)` pairs sorted by distance.
pub(crate) fn annulus_masses(sorted: &[(f64, f64)], radii: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for (_, w) in sorted {
        acc += w;
        prefix.push(acc);
    }
    let mass_within = |r: f64| prefix[sorted.partition_point(|p| p.0 <= r)];
    radii
        .iter()
        .map(|&r| mass_within(2.0 * r) - mass_within(r))
        .collect()
}

/// Same report for a spherically symmetric tree with the hop metric and a
/// potential depending on the level only.
pub fn volume_growth_report_levels<L, V>(
    profile: &L,
    potential: V,
    sigma: f64,
    alpha: f64,
    radii: &[f64],
) -> Result<VolumeGrowthReport>
where
    L: LevelProfile + ?Sized,
    V: Fn(usize) -> f64,
{
    validate(sigma, alpha, radii)?;
    let exponent = -1.0 / (sigma - 1.0);
    let mut masses = Vec::with_capacity(radii.len());
    for &r in radii {
        let lo = r.floor() as usize;
        let hi = (2.0 * r).floor() as usize;
        let mut w = 0.0;
        for n in lo + 1..=hi {
            let v = potential(n);
            if !(v > 0.0) {
                return Err(Error::PotentialNotPositive {
                    vertex: format!("level {n}"),
                    value: v,
                });
            }
            w += profile.level_mass(n) * v.powf(exponent);
        }
        masses.push(w);
    }
    Ok(assemble(
        sigma,
        alpha,
        radii,
        masses,
        "level-profile",
        0.0,
        DEFAULT_SLOPE_TOLERANCE,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0].iter().map(|&x| (x, 3.0 * x.powf(2.5))).collect();
        assert!((log_log_slope(&pts) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_radii() {
        let t = crate::levels::UniformTree { degree: 3 };
        assert!(volume_growth_report_levels(&t, |_| 1.0, 2.0, 1.0, &[1.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn nonpositive_potential_is_rejected() {
        let t = crate::levels::UniformTree { degree: 3 };
        let err = volume_growth_report_levels(&t, |n| 5.0 - n as f64, 2.0, 1.0, &[1.0, 2.0, 4.0, 8.0]);
        assert!(matches!(err, Err(Error::PotentialNotPositive { .. })));
    }
}
