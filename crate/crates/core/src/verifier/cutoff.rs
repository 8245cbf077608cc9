use serde::Serialize;

/// A `C²` profile with `ψ ≡ 1` on `[0, 1]`, `ψ ≡ 0` on `[2, ∞)`, `ψ' ≤ 0`,
/// and known bounds on `|ψ'|`, `|ψ''|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffProfile {
    pub name: &'static str,
    /// `sup |ψ'|`.
    pub m1: f64,
    /// `sup |ψ''|`.
    pub m2: f64,
}

/// Quintic smoothstep: `ψ(t) = 1 − s₅(t − 1)` on `[1, 2]` with
/// `s₅(τ) = 6τ⁵ − 15τ⁴ + 10τ³`. First and second derivatives vanish at both
/// ends, `sup|ψ'| = 15/8` at `t = 3/2` and `sup|ψ''| = 10/√3`.
pub fn default_cutoff() -> CutoffProfile {
    CutoffProfile {
        name: "quintic-smoothstep",
        m1: 15.0 / 8.0,
        m2: 10.0 / 3f64.sqrt(),
    }
}

impl CutoffProfile {
    pub fn psi(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            let tau = t - 1.0;
            1.0 - tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
        }
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        if t <= 1.0 || t >= 2.0 {
            0.0
        } else {
            let tau = t - 1.0;
            let w = tau * (1.0 - tau);
            -30.0 * w * w
        }
    }

    pub fn d2psi(&self, t: f64) -> f64 {
        if t <= 1.0 || t >= 2.0 {
            0.0
        } else {
            let tau = t - 1.0;
            -60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)
        }
    }

    /// `φ(x) = ψ(d(x, x₀) / R)`.
    pub fn phi(&self, distance: f64, r: f64) -> f64 {
        self.psi(distance / r)
    }
}

/// `s = 2σ/(σ−1)`, comfortably above the required `σ/(σ−1)`.
pub fn default_power(sigma: f64) -> f64 {
    2.0 * sigma / (sigma - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_ends_and_midpoint() {
        let c = default_cutoff();
        assert_eq!(c.psi(0.3), 1.0);
        assert_eq!(c.psi(1.0), 1.0);
        assert_eq!(c.psi(2.0), 0.0);
        assert_eq!(c.psi(7.0), 0.0);
        assert!((c.psi(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivative_bounds_match_dense_sampling() {
        let c = default_cutoff();
        let (mut d1, mut d2) = (0.0f64, 0.0f64);
        for i in 0..=200_000 {
            let t = 1.0 + i as f64 / 200_000.0;
            assert!(c.dpsi(t) <= 0.0);
            d1 = d1.max(c.dpsi(t).abs());
            d2 = d2.max(c.d2psi(t).abs());
        }
        assert!((d1 - c.m1).abs() < 1e-12);
        assert!(d2 <= c.m2 && c.m2 - d2 < 1e-6);
        assert_eq!(c.dpsi(1.5), -15.0 / 8.0);
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let c = default_cutoff();
        let h = 1e-6;
        for t in [1.1, 1.37, 1.5, 1.8, 1.95] {
            let fd1 = (c.psi(t + h) - c.psi(t - h)) / (2.0 * h);
            let fd2 = (c.dpsi(t + h) - c.dpsi(t - h)) / (2.0 * h);
            assert!((fd1 - c.dpsi(t)).abs() < 1e-8);
            assert!((fd2 - c.d2psi(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn default_power_is_admissible() {
        for sigma in [1.01, 1.5, 2.0, 3.0, 10.0] {
            assert!(default_power(sigma) > sigma / (sigma - 1.0));
        }
    }
}
