use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Flavor, WeightedGraph};
use crate::metric::{MetricKind, PseudoMetric};

pub const MAX_DIM: usize = 6;

/// A point of `ℤᴺ`, `N ≤ 6`. Unused trailing coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl LatticePoint {
    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        Self {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    pub fn new(coords: &[i32]) -> Self {
        let mut p = Self::origin(coords.len());
        p.coords[..coords.len()].copy_from_slice(coords);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim()]
    }

    pub fn coord(&self, k: usize) -> i32 {
        self.coords[k]
    }

    /// `|x|²` as an exact integer.
    pub fn norm_squared(&self) -> i64 {
        self.coords().iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_squared() as f64).sqrt()
    }

    fn shifted(&self, k: usize, step: i32) -> Self {
        let mut p = *self;
        p.coords[k] = p.coords[k]
            .checked_add(step)
            .expect("lattice coordinate overflow");
        p
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for LatticePoint {
    type Err = Error;

    /// Parses `1,-2,0` or `(1,-2,0)`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = inner
            .split(',')
            .map(|c| c.trim().parse::<i32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Spec(format!("bad lattice point `{s}`: {e}")))?;
        if !(1..=MAX_DIM).contains(&coords.len()) {
            return Err(Error::Spec(format!(
                "lattice point `{s}` must have between 1 and {MAX_DIM} coordinates"
            )));
        }
        Ok(Self::new(&coords))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
}

/// `ℤᴺ` with unit weights between nearest neighbors and `μ ≡ 2N`.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    dim: usize,
}

impl Lattice {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> LatticePoint {
        LatticePoint::origin(self.dim)
    }
}

impl WeightedGraph for Lattice {
    type Vertex = LatticePoint;

    fn neighbors(&self, x: &LatticePoint) -> Vec<(LatticePoint, f64)> {
        debug_assert_eq!(x.dim(), self.dim);
        // Ascending order: x − e_0 < … < x − e_{N−1} < x + e_{N−1} < … < x + e_0.
        let mut out = Vec::with_capacity(2 * self.dim);
        for k in 0..self.dim {
            out.push((x.shifted(k, -1), 1.0));
        }
        for k in (0..self.dim).rev() {
            out.push((x.shifted(k, 1), 1.0));
        }
        out
    }

    fn measure(&self, _x: &LatticePoint) -> f64 {
        2.0 * self.dim as f64
    }

    fn flavor(&self) -> Flavor {
        Flavor::LazyProcedural
    }

    fn contains(&self, x: &LatticePoint) -> bool {
        x.dim() == self.dim
    }
}

/// Euclidean distance between integer coordinate vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl PseudoMetric<LatticePoint> for Euclidean {
    fn distance(&self, x: &LatticePoint, y: &LatticePoint) -> f64 {
        let s: i64 = x
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(&a, &b)| {
                let d = a as i64 - b as i64;
                d * d
            })
            .sum();
        (s as f64).sqrt()
    }

    fn kind(&self) -> MetricKind {
        MetricKind::CoordinateEuclidean
    }

    fn analytic_jump(&self) -> Option<f64> {
        Some(1.0)
    }
}

pub fn build_lattice(spec: LatticeSpec) -> Result<(Lattice, Euclidean)> {
    if !(1..=MAX_DIM).contains(&spec.dim) {
        return Err(Error::Spec(format!(
            "lattice dimension must be between 1 and {MAX_DIM}, got {}",
            spec.dim
        )));
    }
    Ok((Lattice { dim: spec.dim }, Euclidean))
}

/// Every point of the box `[−⌊r⌋, ⌊r⌋]ᴺ` with `|x − center| ≤ r`, in
/// ascending order. Independent of graph exploration.
pub fn ball_by_box_scan(center: &LatticePoint, r: f64) -> Vec<LatticePoint> {
    let dim = center.dim();
    let side = r.floor() as i32;
    let r2 = r * r;
    let mut out = Vec::new();
    let mut offset = vec![-side; dim];
    loop {
        let s: i64 = offset.iter().map(|&c| (c as i64) * (c as i64)).sum();
        if (s as f64) <= r2 {
            let coords: Vec<i32> = center
                .coords()
                .iter()
                .zip(&offset)
                .map(|(&c, &o)| c + o)
                .collect();
            out.push(LatticePoint::new(&coords));
        }
        let mut k = dim;
        loop {
            if k == 0 {
                out.sort_unstable();
                return out;
            }
            k -= 1;
            if offset[k] < side {
                offset[k] += 1;
                break;
            }
            offset[k] = -side;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::laplacian;

    #[test]
    fn neighbors_in_one_dimension() {
        let (g, _) = build_lattice(LatticeSpec { dim: 1 }).unwrap();
        let nb = g.neighbors(&LatticePoint::new(&[5]));
        assert_eq!(
            nb,
            vec![(LatticePoint::new(&[4]), 1.0), (LatticePoint::new(&[6]), 1.0)]
        );
    }

    #[test]
    fn three_dimensional_stencil() {
        let (g, _) = build_lattice(LatticeSpec { dim: 3 }).unwrap();
        let nb = g.neighbors(&g.origin());
        assert_eq!(nb.len(), 6);
        assert!(nb.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(g.measure(&g.origin()), 6.0);
        let sq = |x: &LatticePoint| x.norm_squared() as f64;
        assert_eq!(laplacian(&g, &sq, &LatticePoint::new(&[4, -1, 2])).unwrap(), 1.0);
    }

    #[test]
    fn dimension_guard() {
        assert!(build_lattice(LatticeSpec { dim: 0 }).is_err());
        assert!(build_lattice(LatticeSpec { dim: 7 }).is_err());
    }

    #[test]
    fn parse_and_display() {
        let p: LatticePoint = "(1,-2,0)".parse().unwrap();
        assert_eq!(p.to_string(), "(1,-2,0)");
        assert_eq!("3, 4".parse::<LatticePoint>().unwrap().norm(), 5.0);
        assert!("a,b".parse::<LatticePoint>().is_err());
    }

    #[test]
    fn box_scan_count() {
        assert_eq!(ball_by_box_scan(&LatticePoint::origin(3), 2.0).len(), 33);
    }
}
