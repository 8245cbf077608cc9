use serde::{Deserialize, Serialize};

use super::tree::{TreeHop, TreePath};
use crate::error::{Error, Result};
use crate::graph::{Flavor, WeightedGraph};
use crate::levels::LevelProfile;

/// Smallest edge weight a generated level may carry.
const WEIGHT_FLOOR: f64 = 1e-290;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousTreeSpec {
    pub degree: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub offset: u64,
    /// Deepest level whose vertices can be generated explicitly. Weights
    /// decay like `(N−1)^{−n}`, so this is bounded by floating-point range;
    /// level-wise computations are not.
    pub max_depth: usize,
}

impl HomogeneousTreeSpec {
    /// `(σ+1)/(σ−1) + ε`.
    pub fn weight_exponent(&self) -> f64 {
        (self.sigma + 1.0) / (self.sigma - 1.0) + self.epsilon
    }

    /// `ω_n = (n + n₀)^p / (N−1)^n`.
    pub fn level_weight(&self, n: usize) -> f64 {
        let k = (n as u64 + self.offset) as f64;
        let p = self.weight_exponent();
        // Two separately rounded powers keep a few-ulp error at any depth;
        // exp of the log difference loses |exponent|·ulp, which the stencil
        // cancellation at deep levels would amplify.
        let decay = ((self.degree - 1) as f64).powf(-(n as f64));
        let growth = k.powf(p);
        if decay >= f64::MIN_POSITIVE && growth.is_finite() {
            growth * decay
        } else {
            (p * k.ln() - n as f64 * ((self.degree - 1) as f64).ln()).exp()
        }
    }

    /// Deepest level whose outward weight stays above the representable floor.
    pub fn max_representable_depth(&self) -> usize {
        if self.degree == 2 {
            return 1_000_000;
        }
        let mut n = 0;
        while self.level_weight(n + 1) >= WEIGHT_FLOOR {
            n += 1;
        }
        n
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.degree < 2 {
            problems.push(format!("degree must be at least 2, got {}", self.degree));
        }
        if !(self.sigma > 1.0) {
            problems.push(format!("sigma must exceed 1, got {}", self.sigma));
        }
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.offset < 1 {
            problems.push("offset n0 must be at least 1".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Spec(problems.join("; ")));
        }
        let cap = self.max_representable_depth();
        if self.max_depth > cap {
            return Err(Error::Spec(format!(
                "edge weights underflow past depth {cap}; requested max_depth {}",
                self.max_depth
            )));
        }
        Ok(())
    }
}

/// Homogeneous tree of degree `N` with level weights
/// `ω_n = (n + n₀)^{(σ+1)/(σ−1)+ε} / (N−1)^n` on the edges `D_n – D_{n+1}`
/// and `μ` equal to the row sum.
#[derive(Debug, Clone)]
pub struct HomogeneousTree {
    spec: HomogeneousTreeSpec,
    weights: Vec<f64>,
    measure: Vec<f64>,
}

/// Level data: `(|D_n|, ω_n, μ_n)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelEntry {
    pub level: usize,
    pub size: f64,
    pub weight: f64,
    pub measure: f64,
}

pub fn build_homogeneous_tree(spec: HomogeneousTreeSpec) -> Result<(HomogeneousTree, TreeHop)> {
    spec.validate()?;
    let weights: Vec<f64> = (0..=spec.max_depth + 1)
        .map(|n| spec.level_weight(n))
        .collect();
    let measure = (0..=spec.max_depth + 1)
        .map(|n| {
            // Same summation order as the neighbor list: parent, then children.
            let mut mu = 0.0;
            if n > 0 {
                mu += weights[n - 1];
            }
            let children = if n == 0 { spec.degree } else { spec.degree - 1 };
            let w = weights.get(n).copied().unwrap_or_else(|| spec.level_weight(n));
            for _ in 0..children {
                mu += w;
            }
            mu
        })
        .collect();
    Ok((
        HomogeneousTree {
            spec,
            weights,
            measure,
        },
        TreeHop,
    ))
}

impl HomogeneousTree {
    pub fn spec(&self) -> &HomogeneousTreeSpec {
        &self.spec
    }

    fn children_at(&self, n: usize) -> usize {
        if n == 0 {
            self.spec.degree
        } else {
            self.spec.degree - 1
        }
    }

    pub fn level_entry(&self, n: usize) -> LevelEntry {
        LevelEntry {
            level: n,
            size: self.level_size(n),
            weight: self.weights[n],
            measure: self.measure[n],
        }
    }

    /// Vertex on the left-most branch at depth `n`.
    pub fn leftmost(&self, n: usize) -> TreePath {
        TreePath::from_indices(vec![0; n])
    }
}

impl WeightedGraph for HomogeneousTree {
    type Vertex = TreePath;

    fn neighbors(&self, x: &TreePath) -> Vec<(TreePath, f64)> {
        let n = x.depth();
        assert!(
            n <= self.spec.max_depth + 1,
            "vertex {x} is beyond the generated depth {}",
            self.spec.max_depth
        );
        let mut out = Vec::with_capacity(self.spec.degree);
        if let Some(p) = x.parent() {
            out.push((p, self.weights[n - 1]));
        }
        for k in 0..self.children_at(n) {
            out.push((x.child(k as u32), self.weights[n]));
        }
        out
    }

    fn measure(&self, x: &TreePath) -> f64 {
        self.measure[x.depth()]
    }

    fn flavor(&self) -> Flavor {
        Flavor::LazyProcedural
    }

    fn contains(&self, x: &TreePath) -> bool {
        x.depth() <= self.spec.max_depth
            && x
                .indices()
                .iter()
                .enumerate()
                .all(|(d, &k)| (k as usize) < self.children_at(d))
    }
}

// The level profile depends on the parameters only, so it stays available
// far beyond the depth where explicit weights underflow.
impl LevelProfile for HomogeneousTreeSpec {
    fn outward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            return 1.0;
        }
        1.0 / (1.0 + self.inward_ratio(n))
    }

    fn inward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let q = self.inward_ratio(n);
        q / (1.0 + q)
    }

    /// `Σ_{x∈D_n} μ(x) = N[(n₀+n)^p + (n₀+n−1)^p]`, `N n₀^p` at the root.
    fn level_mass(&self, n: usize) -> f64 {
        let p = self.weight_exponent();
        let k = (n as u64 + self.offset) as f64;
        let deg = self.degree as f64;
        if n == 0 {
            deg * k.powf(p)
        } else {
            deg * (k.powf(p) + (k - 1.0).powf(p))
        }
    }

    fn level_size(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.degree as f64 * ((self.degree - 1) as f64).powi(n as i32 - 1)
        }
    }
}

impl HomogeneousTreeSpec {
    /// `ω_{n−1} / ((N−1) ω_n) = ((n+n₀−1)/(n+n₀))^p`.
    pub fn inward_ratio(&self, n: usize) -> f64 {
        let k = (n as u64 + self.offset) as f64;
        (self.weight_exponent() * (-1.0 / k).ln_1p()).exp()
    }
}

impl LevelProfile for HomogeneousTree {
    fn outward_fraction(&self, n: usize) -> f64 {
        self.spec.outward_fraction(n)
    }

    fn inward_fraction(&self, n: usize) -> f64 {
        self.spec.inward_fraction(n)
    }

    fn level_mass(&self, n: usize) -> f64 {
        self.spec.level_mass(n)
    }

    fn level_size(&self, n: usize) -> f64 {
        self.spec.level_size(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> HomogeneousTreeSpec {
        HomogeneousTreeSpec {
            degree: 3,
            sigma: 2.0,
            epsilon: 0.5,
            offset: 4,
            max_depth: 40,
        }
    }

    #[test]
    fn root_measure() {
        let (t, _) = build_homogeneous_tree(spec()).unwrap();
        let expected = 3.0 * 4f64.powf(3.5);
        assert!((t.measure(&TreePath::root()) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn degree_is_constant() {
        let (t, _) = build_homogeneous_tree(spec()).unwrap();
        assert_eq!(t.neighbors(&TreePath::root()).len(), 3);
        assert_eq!(t.neighbors(&t.leftmost(7)).len(), 3);
    }

    #[test]
    fn parameter_validation() {
        let mut s = spec();
        s.degree = 1;
        s.sigma = 1.0;
        let msg = build_homogeneous_tree(s).unwrap_err().to_string();
        assert!(msg.contains("degree") && msg.contains("sigma"));
        let mut s = spec();
        s.max_depth = 5000;
        assert!(build_homogeneous_tree(s).is_err());
    }

    #[test]
    fn fractions_match_weights() {
        let (t, _) = build_homogeneous_tree(spec()).unwrap();
        for n in 1..30 {
            let e = t.level_entry(n);
            let out = 2.0 * e.weight / e.measure;
            assert!((out - t.outward_fraction(n)).abs() < 1e-14);
            assert!((t.outward_fraction(n) + t.inward_fraction(n) - 1.0).abs() < 1e-15);
        }
    }
}
