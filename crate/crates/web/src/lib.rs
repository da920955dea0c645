//! wasm-bindgen bindings for the demo page in `www/`. Each export returns a
//! JSON string; the `*_json` functions behind them are plain Rust.

use magsob::period_integrals::flux_integral;
use magsob::profile::gamma_max;
use magsob::reconstruct::{constant_sample, sample_minimizer};
use magsob::solver::{critical_flux, sharp_constant, SolverConfig};
use magsob::QuadratureConfig;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_CURVE_POINTS: usize = 2000;
const MAX_PROFILE_POINTS: usize = 8192;

/// `M` on `n` interior points of `(0, gamma_max)`, plus the two limits.
pub fn m_curve_json(q: f64, n: usize) -> Result<String, String> {
    let gmax = gamma_max(q).map_err(|e| e.to_string())?;
    let n = n.clamp(2, MAX_CURVE_POINTS);
    let cfg = QuadratureConfig::default();
    let mut gamma = Vec::with_capacity(n);
    let mut m = Vec::with_capacity(n);
    for k in 1..=n {
        let g = gmax * k as f64 / (n + 1) as f64;
        gamma.push(g);
        m.push(flux_integral(g, q, &cfg).map_err(|e| e.to_string())?);
    }
    Ok(json!({
        "q": q,
        "gamma_max": gmax,
        "gamma": gamma,
        "m": m,
        "limit_low": std::f64::consts::PI,
        "limit_high": 2.0 * std::f64::consts::PI / (q + 2.0).sqrt(),
    })
    .to_string())
}

pub fn solve_json(q: f64, alpha: f64) -> Result<String, String> {
    let cfg = SolverConfig {
        extrapolate: true,
        ..SolverConfig::default()
    };
    let sc = sharp_constant(q, alpha, &cfg).map_err(|e| e.to_string())?;
    let alpha_star = critical_flux(q).map_err(|e| e.to_string())?;
    Ok(json!({
        "q": q,
        "alpha": sc.alpha,
        "alpha_star": alpha_star,
        "regime": sc.regime.as_str(),
        "mu": sc.mu,
        "mu_constant": magsob::solver::constant_value(q, sc.alpha),
        "extrapolated": sc.extrapolated,
        "detail": sc.detail,
    })
    .to_string())
}

/// `x`, `|u|`, `Re u`, `Im u` on `n + 1` grid points.
pub fn minimizer_profile_json(q: f64, alpha: f64, n: usize) -> Result<String, String> {
    let n = (n.clamp(16, MAX_PROFILE_POINTS) / 2) * 2;
    let cfg = SolverConfig::default();
    let sc = sharp_constant(q, alpha, &cfg).map_err(|e| e.to_string())?;
    let sample = match &sc.detail {
        Some(sol) => sample_minimizer(sol, n, &cfg.quad),
        None => constant_sample(q, sc.alpha, n),
    }
    .map_err(|e| e.to_string())?;
    let (re, im): (Vec<f64>, Vec<f64>) = sample
        .r
        .iter()
        .zip(&sample.theta)
        .map(|(r, th)| (r * th.cos(), r * th.sin()))
        .unzip();
    Ok(json!({
        "regime": sc.regime.as_str(),
        "mu": sc.mu,
        "x": sample.x,
        "r": sample.r,
        "re": re,
        "im": im,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn m_curve(q: f64, n: usize) -> Result<String, JsError> {
    m_curve_json(q, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(q: f64, alpha: f64) -> Result<String, JsError> {
    solve_json(q, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn minimizer_profile(q: f64, alpha: f64, n: usize) -> Result<String, JsError> {
    minimizer_profile_json(q, alpha, n).map_err(|e| JsError::new(&e))
}
