//! Run configuration: a JSON file and command-line flags merged key by key
//! (flags win), then resolved against defaults and validated in one pass.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use liouville_core::builders::{LatticePoint, TreePath};
use liouville_core::metric::DEFAULT_BUDGET;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lattice,
    Factorial,
    Homogeneous,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    BuildInfo,
    CheckHypotheses,
    VolumeGrowth,
    VerifySupersolution,
    Tune,
    Certificate,
    Shoot,
    MaxPrinciple,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::BuildInfo => "build-info",
            Command::CheckHypotheses => "check-hypotheses",
            Command::VolumeGrowth => "volume-growth",
            Command::VerifySupersolution => "verify-supersolution",
            Command::Tune => "tune",
            Command::Certificate => "certificate",
            Command::Shoot => "shoot",
            Command::MaxPrinciple => "max-principle",
        }
    }
}

/// Every setting, all optional; used both for the config file and the flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Subcommand named in a config file; must match the one on the command line.
    #[arg(skip)]
    pub subcommand: Option<Command>,
    /// Graph family.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Lattice dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Homogeneous tree degree N.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Homogeneous tree weight excess ε.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Homogeneous tree offset n₀ (also the tree supersolution offset).
    #[arg(long)]
    pub n0: Option<u64>,
    /// Graph JSON file for --family file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Exponent σ > 1.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Decay exponent α in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Threshold radius R₀ > 1.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Base point: lattice coordinates "0,0,0", a tree path "/", or a vertex id.
    #[arg(long)]
    pub x0: Option<String>,
    /// Cutoff power s > σ/(σ−1).
    #[arg(long)]
    pub s: Option<f64>,
    /// Potential: "one", an expression, or "@table.csv".
    #[arg(long)]
    pub v: Option<String>,
    /// Function for max-principle: an expression or "@table.csv".
    #[arg(long)]
    pub u: Option<String>,
    /// Comma-separated radii.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Ball radius for verification, tuning, and max-principle.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Depth: generated tree depth, checked levels, or shooting depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Relative tolerance of residual checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Vertex enumeration cap.
    #[arg(long, env = "GRAPH_LIOUVILLE_BUDGET")]
    pub budget: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Supersolution amplitude δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Lattice supersolution shift K.
    #[arg(long)]
    pub shift: Option<f64>,
    /// Root value for shoot.
    #[arg(long)]
    pub u0: Option<f64>,
    /// Bisection bracket "lo,hi" for the positivity threshold.
    #[arg(long, value_delimiter = ',')]
    pub bracket: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// `top` wins wherever it is set.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay!(
            self, top, subcommand, family, dim, degree, epsilon, n0, input, sigma, alpha, r0, x0, s, v, u, radii,
            radius, depth, tol, budget, workers, out, delta, shift, u0, bracket
        )
    }
}

/// Settings after defaults, as embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub family: Family,
    pub metric: &'static str,
    pub dim: Option<usize>,
    pub degree: Option<usize>,
    pub epsilon: Option<f64>,
    pub n0: Option<u64>,
    pub input: Option<PathBuf>,
    pub sigma: Option<f64>,
    pub alpha: f64,
    pub r0: f64,
    pub x0: Option<String>,
    pub s: Option<f64>,
    pub v: String,
    pub u: Option<String>,
    pub radii: Vec<f64>,
    pub radius: Option<f64>,
    pub depth: Option<usize>,
    pub tol: f64,
    pub budget: usize,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub delta: Option<f64>,
    pub shift: Option<f64>,
    pub u0: Option<f64>,
    pub bracket: Option<(f64, f64)>,
}

pub const DEFAULT_RADII: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];
pub const DEFAULT_OUT: &str = "graph-liouville-out";

impl RunConfig {
    /// Applies defaults and validates; all problems are reported together,
    /// each prefixed by its key.
    pub fn resolve(cmd: Command, s: Settings) -> anyhow::Result<Self> {
        let mut problems: Vec<String> = Vec::new();
        let mut bad = |key: &str, msg: String| problems.push(format!("{key}: {msg}"));

        if let Some(named) = s.subcommand {
            if named != cmd {
                bad("subcommand", format!("config names {} but {} was invoked", named.name(), cmd.name()));
            }
        }
        let Some(family) = s.family else {
            bad("family", "required (lattice, factorial, homogeneous, or file)".into());
            bail!(problems.join("\n"));
        };

        match family {
            Family::Lattice => {
                let dim = s.dim.unwrap_or(3);
                if !(1..=6).contains(&dim) {
                    bad("dim", format!("must lie in 1..=6, got {dim}"));
                }
                if let Some(x0) = &s.x0 {
                    match x0.parse::<LatticePoint>() {
                        Ok(p) if p.dim() != dim => bad("x0", format!("has {} coordinates, dim is {dim}", p.dim())),
                        Ok(_) => {}
                        Err(e) => bad("x0", e.to_string()),
                    }
                }
            }
            Family::Homogeneous | Family::Factorial => {
                if let Some(x0) = &s.x0 {
                    match x0.parse::<TreePath>() {
                        Ok(p) if p.depth() != 0 => bad("x0", "tree reports are taken from the root \"/\"".into()),
                        Ok(_) => {}
                        Err(e) => bad("x0", e.to_string()),
                    }
                }
                if family == Family::Homogeneous {
                    if let Some(n) = s.degree.filter(|&n| n < 2) {
                        bad("degree", format!("must be at least 2, got {n}"));
                    }
                    if let Some(e) = s.epsilon.filter(|&e| !(e > 0.0)) {
                        bad("epsilon", format!("must be positive, got {e}"));
                    }
                    if s.n0 == Some(0) {
                        bad("n0", "must be at least 1".into());
                    }
                }
            }
            Family::File => {
                if s.input.is_none() {
                    bad("input", "required for --family file".into());
                }
            }
        }

        let needs_sigma = !matches!(cmd, Command::BuildInfo | Command::MaxPrinciple);
        match s.sigma {
            None if needs_sigma => bad("sigma", "required".into()),
            Some(sg) if !(sg > 1.0) => bad("sigma", format!("must exceed 1, got {sg}")),
            _ => {}
        }
        let alpha = s.alpha.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&alpha) {
            bad("alpha", format!("must lie in [0, 1], got {alpha}"));
        }
        let r0 = s.r0.unwrap_or(liouville_core::verifier::DEFAULT_R0);
        if !(r0 > 1.0) {
            bad("r0", format!("must exceed 1, got {r0}"));
        }
        if let (Some(sv), Some(sg)) = (s.s, s.sigma) {
            if sg > 1.0 && !(sv > sg / (sg - 1.0)) {
                bad("s", format!("must exceed sigma/(sigma-1) = {}, got {sv}", sg / (sg - 1.0)));
            }
        }
        let radii = s.radii.clone().unwrap_or_else(|| DEFAULT_RADII.to_vec());
        if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
            bad("radii", format!("must be positive and strictly increasing, got {radii:?}"));
        }
        if let Some(r) = s.radius.filter(|r| !(*r >= 0.0)) {
            bad("radius", format!("must be nonnegative, got {r}"));
        }
        let tol = s.tol.unwrap_or(liouville_core::supersolution::DEFAULT_TOLERANCE);
        if !(tol >= 0.0) {
            bad("tol", format!("must be nonnegative, got {tol}"));
        }
        if s.workers == Some(0) {
            bad("workers", "must be at least 1".into());
        }
        if s.budget == Some(0) {
            bad("budget", "must be at least 1".into());
        }
        if let Some(d) = s.delta.filter(|d| !(*d > 0.0)) {
            bad("delta", format!("must be positive, got {d}"));
        }
        if let Some(k) = s.shift.filter(|k| !(*k > 0.0)) {
            bad("shift", format!("must be positive, got {k}"));
        }
        if let Some(u0) = s.u0.filter(|u| !(*u > 0.0)) {
            bad("u0", format!("must be positive, got {u0}"));
        }
        let bracket = match s.bracket.as_deref() {
            None => None,
            Some(&[lo, hi]) if lo > 0.0 && hi > lo => Some((lo, hi)),
            Some(b) => {
                bad("bracket", format!("must be two values 0 < lo < hi, got {b:?}"));
                None
            }
        };
        let trees = matches!(family, Family::Factorial | Family::Homogeneous);
        match cmd {
            Command::VerifySupersolution | Command::Certificate => {
                if s.delta.is_none() {
                    bad("delta", format!("required for {}", cmd.name()));
                }
                match family {
                    Family::Lattice if s.shift.is_none() => bad("shift", format!("required for {}", cmd.name())),
                    Family::Homogeneous if s.n0.is_none() => bad("n0", format!("required for {}", cmd.name())),
                    Family::Factorial | Family::File => {
                        bad("family", format!("{} needs a closed-form candidate: lattice or homogeneous", cmd.name()))
                    }
                    _ => {}
                }
            }
            Command::Tune if !matches!(family, Family::Lattice | Family::Homogeneous) => {
                bad("family", "tune supports lattice and homogeneous".into())
            }
            Command::Shoot => {
                if !trees {
                    bad("family", "shoot needs a tree family".into());
                }
                if s.u0.is_none() && bracket.is_none() {
                    bad("u0", "give --u0, --bracket, or both".into());
                }
            }
            Command::MaxPrinciple => {
                if s.u.is_none() {
                    bad("u", "required for max-principle".into());
                }
                if trees {
                    bad("family", "max-principle works on lattice balls or graph files".into());
                }
            }
            _ => {}
        }
        if let Some(v) = &s.v {
            if v.trim().is_empty() {
                bad("v", "empty potential".into());
            }
            if trees && v.starts_with('@') {
                bad("v", "table potentials need --family file or lattice".into());
            }
        }

        if !problems.is_empty() {
            bail!("invalid configuration:\n  {}", problems.join("\n  "));
        }
        Ok(RunConfig {
            subcommand: cmd,
            family,
            metric: match family {
                Family::Lattice => "coordinate-euclidean",
                Family::Factorial | Family::Homogeneous => "hop-distance",
                Family::File => "from-file",
            },
            dim: (family == Family::Lattice).then(|| s.dim.unwrap_or(3)),
            degree: (family == Family::Homogeneous).then(|| s.degree.unwrap_or(3)),
            epsilon: (family == Family::Homogeneous).then(|| s.epsilon.unwrap_or(0.5)),
            n0: s.n0,
            input: s.input,
            sigma: s.sigma,
            alpha,
            r0,
            x0: s.x0,
            s: s.s,
            v: s.v.unwrap_or_else(|| "one".into()),
            u: s.u,
            radii,
            radius: s.radius,
            depth: s.depth,
            tol,
            budget: s.budget.unwrap_or(DEFAULT_BUDGET),
            workers: s.workers,
            out: s.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            delta: s.delta,
            shift: s.shift,
            u0: s.u0,
            bracket,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.expect("validated")
    }

    pub fn cutoff_power(&self) -> f64 {
        self.s.unwrap_or_else(|| liouville_core::verifier::default_power(self.sigma()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: Settings = serde_json::from_str(r#"{"family":"lattice","sigma":3,"dim":2}"#).unwrap();
        let flags = Settings {
            sigma: Some(4.0),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.sigma, Some(4.0));
        assert_eq!(merged.dim, Some(2));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<Settings>(r#"{"family":"lattice","sigam":3}"#).unwrap_err();
        assert!(err.to_string().contains("sigam"));
    }

    #[test]
    fn problems_are_listed_together() {
        let s = Settings {
            family: Some(Family::Lattice),
            dim: Some(9),
            sigma: Some(0.5),
            alpha: Some(3.0),
            ..Default::default()
        };
        let msg = RunConfig::resolve(Command::CheckHypotheses, s).unwrap_err().to_string();
        for key in ["dim:", "sigma:", "alpha:"] {
            assert!(msg.contains(key), "{msg}");
        }
    }
}
