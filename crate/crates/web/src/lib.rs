//! Browser demo: three operations exported through wasm-bindgen, each
//! returning JSON for the page in `www/` to draw.
//!
//! The exports are thin wrappers over plain functions so the logic is
//! tested natively.

use liouville_core::builders::{build_lattice, HomogeneousTreeSpec, LatticePoint, LatticeSpec};
use liouville_core::growth::{volume_growth_report, volume_growth_report_levels};
use liouville_core::metric::DEFAULT_BUDGET;
use liouville_core::radial::shoot;
use liouville_core::supersolution::{residual_at, LatticeSupersolution, TreeSupersolution};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest slice half-width the page may request.
pub const MAX_HALF_WIDTH: i32 = 60;

/// Residual `Δu + u^σ` of `δ/(K+|x|²)^{1/(σ−1)}` on the plane `x₃ = … = 0`
/// of ℤᴺ, over `|x₁|, |x₂| ≤ half_width`. Row-major, `x₂` outer.
pub fn residual_slice(dim: usize, sigma: f64, delta: f64, shift: f64, half_width: i32) -> Result<Value, String> {
    if !(2..=4).contains(&dim) {
        return Err(format!("dimension must be 2, 3, or 4, got {dim}"));
    }
    if !(1..=MAX_HALF_WIDTH).contains(&half_width) {
        return Err(format!("half width must lie in 1..={MAX_HALF_WIDTH}"));
    }
    let u = LatticeSupersolution::family_member(dim, sigma, delta, shift).map_err(|e| e.to_string())?;
    let (g, _) = build_lattice(LatticeSpec { dim }).map_err(|e| e.to_string())?;
    let one = |_: &LatticePoint| 1.0;
    let mut values = Vec::new();
    let (mut max, mut at) = (f64::NEG_INFINITY, (0, 0));
    let mut coords = vec![0; dim];
    for y in -half_width..=half_width {
        for x in -half_width..=half_width {
            coords[0] = x;
            coords[1] = y;
            let (r, _) = residual_at(&g, &u, &one, sigma, &LatticePoint::new(&coords)).map_err(|e| e.to_string())?;
            if r > max {
                (max, at) = (r, (x, y));
            }
            values.push(r);
        }
    }
    Ok(json!({
        "half_width": half_width,
        "values": values,
        "max": max,
        "argmax": [at.0, at.1],
        "critical": dim > 2 && sigma > dim as f64 / (dim as f64 - 2.0),
    }))
}

/// Shooting profile from `u₀` next to the closed-form tree supersolution
/// with the same root value.
pub fn tree_profile(degree: usize, sigma: f64, epsilon: f64, n0: u64, u0: f64, depth: usize) -> Result<Value, String> {
    let spec = HomogeneousTreeSpec {
        degree,
        sigma,
        epsilon,
        offset: n0,
        max_depth: 0,
    };
    spec.validate().map_err(|e| e.to_string())?;
    if depth == 0 || depth > 100_000 {
        return Err("depth must lie in 1..=100000".into());
    }
    let profile = shoot(&spec, sigma, u0, depth).map_err(|e| e.to_string())?;
    let a = 2.0 / (sigma - 1.0);
    let closed = TreeSupersolution::new(sigma, epsilon, n0, u0 * (n0 as f64).powf(a)).map_err(|e| e.to_string())?;
    let reference: Vec<f64> = (0..profile.values.len()).map(|n| closed.level_value(n)).collect();
    Ok(json!({
        "shot": profile.values,
        "closed_form": reference,
        "stop": profile.stop,
    }))
}

/// Weighted volume `W(R)` with its log-log slope, on ℤᴺ or on the
/// homogeneous tree (level route).
pub fn growth_curve(family: &str, param: f64, sigma: f64, radii: &[f64]) -> Result<Value, String> {
    let report = match family {
        "lattice" => {
            let dim = param as usize;
            if !(1..=4).contains(&dim) || radii.last().is_some_and(|&r| r > 200.0 / dim as f64) {
                return Err("lattice demo: dimension 1..=4 and radii up to 200/N".into());
            }
            let (g, d) = build_lattice(LatticeSpec { dim }).map_err(|e| e.to_string())?;
            let one = |_: &LatticePoint| 1.0;
            volume_growth_report(&g, &d, &g.origin(), &one, sigma, 1.0, radii, DEFAULT_BUDGET)
        }
        "homogeneous" => {
            let spec = HomogeneousTreeSpec {
                degree: 3,
                sigma,
                epsilon: param,
                offset: 2,
                max_depth: 0,
            };
            spec.validate().map_err(|e| e.to_string())?;
            volume_growth_report_levels(&spec, |_| 1.0, sigma, 1.0, radii)
        }
        other => return Err(format!("unknown family {other:?}")),
    }
    .map_err(|e| e.to_string())?;
    serde_json::to_value(report).map_err(|e| e.to_string())
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = residualSlice)]
pub fn residual_slice_js(dim: usize, sigma: f64, delta: f64, shift: f64, half_width: i32) -> Result<String, JsError> {
    to_js(residual_slice(dim, sigma, delta, shift, half_width))
}

#[wasm_bindgen(js_name = treeProfile)]
pub fn tree_profile_js(degree: usize, sigma: f64, epsilon: f64, n0: u32, u0: f64, depth: usize) -> Result<String, JsError> {
    to_js(tree_profile(degree, sigma, epsilon, n0 as u64, u0, depth))
}

#[wasm_bindgen(js_name = growthCurve)]
pub fn growth_curve_js(family: &str, param: f64, sigma: f64, radii: Vec<f64>) -> Result<String, JsError> {
    to_js(growth_curve(family, param, sigma, &radii))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_of_a_tuned_instance_is_negative() {
        let v = residual_slice(3, 4.0, 0.264567, 7.333333333333333, 10).unwrap();
        assert!(v["max"].as_f64().unwrap() < 0.0);
        assert_eq!(v["values"].as_array().unwrap().len(), 21 * 21);
        assert_eq!(v["critical"], true);
    }

    #[test]
    fn slice_rejects_bad_sizes() {
        assert!(residual_slice(3, 4.0, 0.1, 10.0, 0).is_err());
        assert!(residual_slice(7, 4.0, 0.1, 10.0, 5).is_err());
    }

    #[test]
    fn profile_starts_at_the_closed_form() {
        let v = tree_profile(3, 2.0, 0.5, 2, 0.0625, 50).unwrap();
        assert_eq!(v["shot"][0], v["closed_form"][0]);
        assert_eq!(v["stop"]["reason"], "crossed-zero");
    }

    #[test]
    fn lattice_growth_slope() {
        let v = growth_curve("lattice", 2.0, 3.0, &[4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!((v["slope"].as_f64().unwrap() - 2.0).abs() < 0.1);
        assert!(growth_curve("torus", 2.0, 3.0, &[4.0, 8.0, 16.0, 32.0]).is_err());
    }
}
