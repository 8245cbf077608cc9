//! Radial shooting for `Δu + u^σ = 0` on spherically symmetric trees.
//!
//! At level `n ≥ 1` the equation reads
//!
//! ```text
//! out(n)·(u_{n+1} − u_n) + in(n)·(u_{n−1} − u_n) + u_n^σ = 0
//! ```
//!
//! and is solved for `u_{n+1}`. At the root `out(0) = 1`, so
//! `u_1 = u_0 − u_0^σ`. Marching stops at the requested depth, at the first
//! non-positive value, or when `|u|` exceeds [`BLOW_UP`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levels::{radial_laplacian, LevelProfile};

pub const BLOW_UP: f64 = 1e300;
/// Bisection stops once the bracket is this narrow relative to its upper end.
pub const RELATIVE_WIDTH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    MaxDepth,
    CrossedZero { level: usize },
    BlowUp { level: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub sigma: f64,
    pub u0: f64,
    pub max_depth: usize,
    pub stop: StopReason,
    /// `u_0, u_1, …` up to and including the level where marching stopped.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub u_n: f64,
    /// `Δu(n) + u_n^σ`, absent on the last stored level.
    pub residual: Option<f64>,
}

impl RadialProfile {
    pub fn stays_positive(&self) -> bool {
        self.stop == StopReason::MaxDepth
    }

    pub fn rows<L: LevelProfile + ?Sized>(&self, profile: &L) -> Vec<ProfileRow> {
        let last = self.values.len() - 1;
        (0..=last)
            .map(|n| ProfileRow {
                n,
                u_n: self.values[n],
                residual: (n < last).then(|| self.residual(profile, n).0),
            })
            .collect()
    }

    /// Residual of the equation at level `n` and the size of its largest
    /// operand. Operands are taken before the differences cancel, since
    /// `u(n±1) − u(n)` carries rounding of order `ulp(u)`, not of its own size.
    fn residual<L: LevelProfile + ?Sized>(&self, profile: &L, n: usize) -> (f64, f64) {
        let u = |k: usize| self.values[k];
        let lap = radial_laplacian(profile, u, n);
        let source = u(n).powf(self.sigma);
        let out = profile.outward_fraction(n);
        let mut scale = source.abs().max(out * u(n + 1).abs().max(u(n).abs()));
        if n > 0 {
            scale = scale.max(profile.inward_fraction(n) * u(n - 1).abs().max(u(n).abs()));
        }
        (lap + source, scale)
    }

    /// Largest `|Δu + u^σ|` relative to the largest term, over the levels
    /// where the recurrence was applied with a positive `u_n`.
    pub fn max_relative_residual<L: LevelProfile + ?Sized>(&self, profile: &L) -> f64 {
        let last = self.values.len() - 1;
        (0..last)
            .map(|n| {
                let (r, scale) = self.residual(profile, n);
                if scale == 0.0 {
                    r.abs()
                } else {
                    r.abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Marches the equality recurrence from `u_0`.
pub fn shoot<L>(profile: &L, sigma: f64, u0: f64, max_depth: usize) -> Result<RadialProfile>
where
    L: LevelProfile + ?Sized,
{
    if !(u0 > 0.0) || !(sigma > 1.0) {
        return Err(Error::Domain(format!(
            "need u0 > 0 and sigma > 1 (u0 = {u0}, sigma = {sigma})"
        )));
    }
    let mut values = Vec::with_capacity(max_depth.min(1 << 20) + 1);
    values.push(u0);
    let mut stop = StopReason::MaxDepth;
    for n in 0..max_depth {
        let un = values[n];
        let inward = if n == 0 {
            0.0
        } else {
            profile.inward_fraction(n) * (values[n - 1] - un)
        };
        let next = un - (un.powf(sigma) + inward) / profile.outward_fraction(n);
        values.push(next);
        if !next.is_finite() || next.abs() > BLOW_UP {
            stop = StopReason::BlowUp { level: n + 1 };
            break;
        }
        if next <= 0.0 {
            stop = StopReason::CrossedZero { level: n + 1 };
            break;
        }
    }
    Ok(RadialProfile {
        sigma,
        u0,
        max_depth,
        stop,
        values,
    })
}

impl RadialProfile {
    /// Levels on which the marched values are still meaningful: everything
    /// before a zero crossing or blow-up.
    pub fn live_levels(&self) -> usize {
        match self.stop {
            StopReason::MaxDepth => self.values.len(),
            StopReason::CrossedZero { level } | StopReason::BlowUp { level } => level,
        }
    }
}

/// First level where `upper` drops below `lower`, over the levels on which
/// neither profile has terminated.
pub fn dominance_violation(upper: &RadialProfile, lower: &RadialProfile) -> Option<usize> {
    let live = upper.live_levels().min(lower.live_levels());
    upper.values[..live]
        .iter()
        .zip(&lower.values[..live])
        .position(|(a, b)| a < b)
}

#[derive(Debug, Clone, Serialize)]
pub struct Threshold {
    pub sigma: f64,
    pub depth: usize,
    /// Midpoint of the final bracket.
    pub u_star: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    /// Whether the positive outcome sits below the threshold.
    pub positive_below: bool,
    #[serde(skip)]
    pub lower_profile: RadialProfile,
    #[serde(skip)]
    pub upper_profile: RadialProfile,
}

/// Bisects on `u_0` for the boundary between profiles that stay positive
/// through `depth` and profiles that stop early.
pub fn bisect_positive_threshold<L>(
    profile: &L,
    sigma: f64,
    depth: usize,
    bracket: (f64, f64),
) -> Result<Threshold>
where
    L: LevelProfile + ?Sized,
{
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(Error::Bracket(format!(
            "need 0 < lower < upper, got ({lo}, {hi})"
        )));
    }
    let mut lo_prof = shoot(profile, sigma, lo, depth)?;
    let mut hi_prof = shoot(profile, sigma, hi, depth)?;
    let positive_below = lo_prof.stays_positive();
    if positive_below == hi_prof.stays_positive() {
        return Err(Error::Bracket(format!(
            "both ends {} through depth {depth}",
            if positive_below { "stay positive" } else { "stop early" }
        )));
    }
    let mut iterations = 0;
    // Each round shoots three interior points concurrently and keeps the
    // quarter of the bracket where the outcome changes.
    while hi - lo > RELATIVE_WIDTH * hi {
        let trials: Vec<RadialProfile> = (1..=3)
            .into_par_iter()
            .map(|k| shoot(profile, sigma, lo + (hi - lo) * k as f64 / 4.0, depth))
            .collect::<Result<_>>()?;
        iterations += 1;
        let mut next_lo = None;
        for t in trials {
            if t.stays_positive() == positive_below {
                next_lo = Some(t);
            } else {
                hi = t.u0;
                hi_prof = t;
                break;
            }
        }
        if let Some(t) = next_lo {
            lo = t.u0;
            lo_prof = t;
        }
    }
    Ok(Threshold {
        sigma,
        depth,
        u_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        iterations,
        positive_below,
        lower_profile: lo_prof,
        upper_profile: hi_prof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::UniformTree;

    #[test]
    fn root_step() {
        let t = UniformTree { degree: 3 };
        let p = shoot(&t, 2.0, 0.3, 1).unwrap();
        assert_eq!(p.values[1], 0.3 - 0.09);
    }

    #[test]
    fn large_start_crosses_zero_at_once() {
        let t = UniformTree { degree: 3 };
        let p = shoot(&t, 2.0, 1.0, 50).unwrap();
        assert_eq!(p.stop, StopReason::CrossedZero { level: 1 });
    }

    #[test]
    fn rejects_nonpositive_start() {
        let t = UniformTree { degree: 3 };
        assert!(shoot(&t, 2.0, 0.0, 5).is_err());
    }

    #[test]
    fn same_outcome_bracket_is_an_error() {
        let t = UniformTree { degree: 3 };
        let err = bisect_positive_threshold(&t, 2.0, 30, (1.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }
}
