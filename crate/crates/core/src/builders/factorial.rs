use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::tree::{TreeHop, TreePath};
use crate::error::{Error, Result};
use crate::graph::{Flavor, WeightedGraph};
use crate::levels::LevelProfile;

/// Deepest level the factorial tree may be generated to.
pub const FACTORIAL_DEPTH_CAP: usize = 25;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FactorialTreeSpec {
    pub max_depth: usize,
}

/// Rooted tree where the root has one child and every vertex of `D_n`,
/// `n ≥ 1`, has `n` children. Edges between `D_h` and `D_k` weigh
/// `1 / min{h!, k!}` and `μ` is the row sum: `μ(root) = 1`,
/// `μ(D_n) = 2 / (n−1)!`.
#[derive(Debug, Clone)]
pub struct FactorialTree {
    max_depth: usize,
    /// `1 / n!`: weight of the edges between `D_n` and `D_{n+1}`.
    outward: Vec<f64>,
    measure: Vec<f64>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exact weight of the edges between `D_n` and `D_{n+1}`.
pub fn exact_outward_weight(n: usize) -> BigRational {
    BigRational::new(BigInt::one(), factorial(n))
}

/// Exact node measure on `D_n`.
pub fn exact_level_measure(n: usize) -> BigRational {
    if n == 0 {
        BigRational::one()
    } else {
        BigRational::new(BigInt::from(2), factorial(n - 1))
    }
}

/// Number of children of a vertex of `D_n`.
pub fn children_at(n: usize) -> usize {
    n.max(1)
}

pub fn build_factorial_tree(spec: FactorialTreeSpec) -> Result<(FactorialTree, TreeHop)> {
    if spec.max_depth > FACTORIAL_DEPTH_CAP {
        return Err(Error::Spec(format!(
            "factorial tree depth is capped at {FACTORIAL_DEPTH_CAP}, got {}",
            spec.max_depth
        )));
    }
    let levels = spec.max_depth + 2;
    let to_f64 = |r: BigRational| r.to_f64().expect("factorial weights are representable");
    let outward = (0..levels).map(|n| to_f64(exact_outward_weight(n))).collect();
    let measure = (0..levels).map(|n| to_f64(exact_level_measure(n))).collect();
    Ok((
        FactorialTree {
            max_depth: spec.max_depth,
            outward,
            measure,
        },
        TreeHop,
    ))
}

impl FactorialTree {
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Neighbors with exact rational weights, in the same order as
    /// [`WeightedGraph::neighbors`].
    pub fn exact_neighbors(&self, x: &TreePath) -> Vec<(TreePath, BigRational)> {
        let n = x.depth();
        let mut out = Vec::with_capacity(children_at(n) + 1);
        if let Some(p) = x.parent() {
            out.push((p, exact_outward_weight(n - 1)));
        }
        for k in 0..children_at(n) {
            out.push((x.child(k as u32), exact_outward_weight(n)));
        }
        out
    }

    pub fn exact_measure(&self, x: &TreePath) -> BigRational {
        exact_level_measure(x.depth())
    }

    /// `Δf(x)` in exact rational arithmetic for a rational-valued `f`.
    pub fn exact_laplacian(
        &self,
        f: impl Fn(&TreePath) -> BigRational,
        x: &TreePath,
    ) -> BigRational {
        let fx = f(x);
        let sum = self
            .exact_neighbors(x)
            .into_iter()
            .fold(BigRational::zero(), |acc, (y, w)| acc + w * (f(&y) - &fx));
        sum / self.exact_measure(x)
    }

    /// Visits every vertex of `D_n` in ascending order.
    pub fn for_each_in_level(&self, n: usize, mut visit: impl FnMut(&TreePath)) {
        fn walk(path: &mut Vec<u32>, target: usize, visit: &mut dyn FnMut(&TreePath)) {
            let depth = path.len();
            if depth == target {
                visit(&TreePath::from_indices(path.clone()));
                return;
            }
            for k in 0..children_at(depth) as u32 {
                path.push(k);
                walk(path, target, visit);
                path.pop();
            }
        }
        walk(&mut Vec::new(), n, &mut visit);
    }
}

impl WeightedGraph for FactorialTree {
    type Vertex = TreePath;

    fn neighbors(&self, x: &TreePath) -> Vec<(TreePath, f64)> {
        let n = x.depth();
        assert!(
            n <= self.max_depth + 1,
            "vertex {x} is beyond the generated depth {}",
            self.max_depth
        );
        let mut out = Vec::with_capacity(children_at(n) + 1);
        if let Some(p) = x.parent() {
            out.push((p, self.outward[n - 1]));
        }
        for k in 0..children_at(n) {
            out.push((x.child(k as u32), self.outward[n]));
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
        x.depth() <= self.max_depth
            && x
                .indices()
                .iter()
                .enumerate()
                .all(|(d, &k)| (k as usize) < children_at(d))
    }
}

impl LevelProfile for FactorialTree {
    fn outward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            0.5
        }
    }

    fn inward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            0.5
        }
    }

    fn level_mass(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            2.0
        }
    }

    fn level_size(&self, n: usize) -> f64 {
        (1..n).map(|k| k as f64).product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_three_measure_and_weights() {
        let (t, _) = build_factorial_tree(FactorialTreeSpec { max_depth: 6 }).unwrap();
        let x: TreePath = "/0/1/0".parse().unwrap();
        assert_eq!(t.measure(&x), 1.0);
        let nb = t.neighbors(&x);
        assert_eq!(nb.len(), 4);
        // parent edge D_2–D_3 weighs 1/2!
        assert_eq!(nb[0], ("/0/1".parse().unwrap(), 0.5));
        assert!(nb[1..].iter().all(|(_, w)| *w == 1.0 / 6.0));
    }

    #[test]
    fn transition_ratios() {
        let (t, _) = build_factorial_tree(FactorialTreeSpec { max_depth: 10 }).unwrap();
        for n in 1..=8usize {
            let mut x = TreePath::root();
            for _ in 0..n {
                x = x.child(0);
            }
            let mu = t.exact_measure(&x);
            let nb = t.exact_neighbors(&x);
            assert_eq!(&nb[0].1 / &mu, BigRational::new(1.into(), 2.into()));
            for (_, w) in &nb[1..] {
                assert_eq!(w / &mu, BigRational::new(1.into(), (2 * n).into()));
            }
        }
    }

    #[test]
    fn depth_cap() {
        assert!(build_factorial_tree(FactorialTreeSpec { max_depth: 26 }).is_err());
        assert!(build_factorial_tree(FactorialTreeSpec { max_depth: 25 }).is_ok());
    }

    #[test]
    fn root_has_a_single_unit_edge() {
        let (t, _) = build_factorial_tree(FactorialTreeSpec { max_depth: 3 }).unwrap();
        assert_eq!(t.neighbors(&TreePath::root()), vec![("/0".parse().unwrap(), 1.0)]);
        assert_eq!(t.measure(&TreePath::root()), 1.0);
    }
}
