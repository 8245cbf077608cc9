use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metric::{MetricKind, PseudoMetric};

/// A tree vertex named by the child indices on the way down from the root.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct TreePath(Vec<u32>);

impl TreePath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_indices(indices: Vec<u32>) -> Self {
        Self(indices)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn parent(&self) -> Option<Self> {
        let mut p = self.0.clone();
        p.pop().map(|_| Self(p))
    }

    pub fn child(&self, k: u32) -> Self {
        let mut p = Vec::with_capacity(self.0.len() + 1);
        p.extend_from_slice(&self.0);
        p.push(k);
        Self(p)
    }

    fn common_prefix(&self, other: &Self) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count()
    }
}

// Shallower vertices first, then lexicographic: the parent always precedes
// its children in neighbor lists.
impl Ord for TreePath {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for TreePath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "/");
        }
        for k in &self.0 {
            write!(f, "/{k}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for TreePath {
    type Err = Error;

    /// Parses `/`, `root`, or `/0/2/1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "/" || s.eq_ignore_ascii_case("root") || s.is_empty() {
            return Ok(Self::root());
        }
        s.trim_start_matches('/')
            .split('/')
            .map(|k| k.parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Self)
            .map_err(|e| Error::Spec(format!("bad tree vertex `{s}`: {e}")))
    }
}

/// Number of edges on the unique path between two tree vertices.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeHop;

impl PseudoMetric<TreePath> for TreeHop {
    fn distance(&self, x: &TreePath, y: &TreePath) -> f64 {
        let lcp = x.common_prefix(y);
        (x.depth() + y.depth() - 2 * lcp) as f64
    }

    fn kind(&self) -> MetricKind {
        MetricKind::HopDistance
    }

    fn analytic_jump(&self) -> Option<f64> {
        Some(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hop_distance() {
        let a: TreePath = "/0/1/2".parse().unwrap();
        let b: TreePath = "/0/3".parse().unwrap();
        assert_eq!(TreeHop.distance(&a, &b), 3.0);
        assert_eq!(TreeHop.distance(&a, &TreePath::root()), 3.0);
        assert_eq!(TreeHop.distance(&a, &a), 0.0);
    }

    #[test]
    fn ordering_puts_parent_first() {
        let p: TreePath = "/5".parse().unwrap();
        let c = p.child(0);
        let sibling: TreePath = "/0/7".parse().unwrap();
        assert!(p < c);
        assert!(sibling < c);
        assert_eq!(TreePath::root().to_string(), "/");
        assert_eq!(c.to_string(), "/5/0");
        assert_eq!(c.parent(), Some(p));
    }
}
