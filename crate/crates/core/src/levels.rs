//! Level-wise description of spherically symmetric rooted trees.
//!
//! On a tree where every vertex of `D_n` sees the same weights towards `D_{n−1}`
//! and `D_{n+1}`, the Laplacian of a function of the level alone is again a
//! function of the level:
//!
//! ```text
//! Δf(n) = out(n)·(f(n+1) − f(n)) + in(n)·(f(n−1) − f(n))
//! ```
//!
//! where `out(n)` and `in(n)` are the shares of `μ` carried by the outward and
//! inward edges. Working with these shares keeps every quantity finite even
//! when the raw weights leave floating-point range.

use serde::Serialize;

/// Level data of a spherically symmetric tree rooted at level 0.
pub trait LevelProfile: Sync {
    /// Share of `μ(x)`, `x ∈ D_n`, carried by the edges to `D_{n+1}`.
    fn outward_fraction(&self, n: usize) -> f64;

    /// Share of `μ(x)`, `x ∈ D_n`, carried by the edge to `D_{n−1}`.
    fn inward_fraction(&self, n: usize) -> f64;

    /// `Σ_{x∈D_n} μ(x)`.
    fn level_mass(&self, n: usize) -> f64;

    /// `|D_n|`, possibly infinite in floating point.
    fn level_size(&self, n: usize) -> f64;
}

/// Laplacian of the radial function `f` at level `n`.
pub fn radial_laplacian<L, F>(profile: &L, f: F, n: usize) -> f64
where
    L: LevelProfile + ?Sized,
    F: Fn(usize) -> f64,
{
    let fn_ = f(n);
    let mut lap = profile.outward_fraction(n) * (f(n + 1) - fn_);
    if n > 0 {
        lap += profile.inward_fraction(n) * (f(n - 1) - fn_);
    }
    lap
}

/// Homogeneous tree of degree `N` with unit weights and `μ ≡ N`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniformTree {
    pub degree: usize,
}

impl LevelProfile for UniformTree {
    fn outward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            (self.degree - 1) as f64 / self.degree as f64
        }
    }

    fn inward_fraction(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            1.0 / self.degree as f64
        }
    }

    fn level_mass(&self, n: usize) -> f64 {
        self.level_size(n) * self.degree as f64
    }

    fn level_size(&self, n: usize) -> f64 {
        if n == 0 {
            1.0
        } else {
            self.degree as f64 * ((self.degree - 1) as f64).powi(n as i32 - 1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_laplacian_on_uniform_tree() {
        let t = UniformTree { degree: 3 };
        assert_eq!(radial_laplacian(&t, |n| n as f64, 0), 1.0);
        let v = radial_laplacian(&t, |n| n as f64, 4);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}
