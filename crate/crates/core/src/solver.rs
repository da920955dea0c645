//! Regime classification and the sharp constant `mu_q(alpha)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::period_integrals::{flux_integral_on, period_integral_on, QuadratureConfig};
use crate::profile::{check_exponent, gamma_max, rpow, OvalShape};

/// `(q + 2) alpha^2` within this distance of 1 counts as critical.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Fractions of `gamma_max` used to extrapolate to the boundary flux 1/2.
pub const BOUNDARY_GAMMAS: [f64; 3] = [1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `(q + 2) alpha^2 < 1`: the constant function is the minimizer.
    ConstantMinimizer,
    /// `(q + 2) alpha^2 = 1`: the bifurcation point; still constant.
    Critical,
    /// `(q + 2) alpha^2 > 1`: the minimizer has non-constant modulus.
    SymmetryBroken,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::ConstantMinimizer => "constant",
            Regime::Critical => "critical",
            Regime::SymmetryBroken => "symmetry_broken",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub quad: QuadratureConfig,
    /// Bisection stops once `|M(gamma) - 2 pi |alpha|| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// At `|alpha| = 1/2` extrapolate `mu` along `gamma -> 0` instead of
    /// reporting a boundary-flux error.
    pub extrapolate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default(),
            tol: 1e-10,
            max_iter: 200,
            extrapolate: false,
        }
    }
}

/// The symmetry-broken solution: oval parameter, first integrals, multiplier
/// and modulus range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvalSolution {
    pub q: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// `r^2 phi' = a`, carries the sign of alpha.
    pub a: f64,
    pub lambda: f64,
    /// Energy constant of `r'^2/2 + a^2/(2 r^2) + lambda r^q / q = c`.
    pub c: f64,
    pub r1: f64,
    pub r2: f64,
    pub mu: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpConstant {
    pub q: f64,
    /// Flux after reduction to `[-1/2, 1/2]`.
    pub alpha: f64,
    pub mu: f64,
    pub regime: Regime,
    pub detail: Option<OvalSolution>,
    /// Set when `mu` is the `gamma -> 0` extrapolation at `|alpha| = 1/2`.
    pub extrapolated: bool,
}

/// Reduces a flux modulo 1 into `[-1/2, 1/2]`; `+-1/2` both map to `+1/2`.
pub fn normalize_flux(alpha_raw: f64) -> f64 {
    let r = alpha_raw - alpha_raw.round();
    if r == -0.5 {
        0.5
    } else {
        r
    }
}

pub fn classify(q: f64, alpha: f64) -> Result<Regime> {
    check_exponent(q)?;
    let ratio = (q + 2.0) * alpha * alpha;
    Ok(if (ratio - 1.0).abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if ratio < 1.0 {
        Regime::ConstantMinimizer
    } else {
        Regime::SymmetryBroken
    })
}

/// Threshold flux `1/sqrt(q + 2)`.
pub fn critical_flux(q: f64) -> Result<f64> {
    check_exponent(q)?;
    Ok(1.0 / (q + 2.0).sqrt())
}

/// `(2 pi)^(1/2 - 1/q) |alpha|`, the value of the quotient at `u = 1`.
pub fn constant_value(q: f64, alpha: f64) -> f64 {
    rpow(2.0 * PI, 0.5 - 1.0 / q) * alpha.abs()
}

/// The sharp constant in the constant regime.
pub fn mu_constant(q: f64, alpha: f64) -> Result<f64> {
    match classify(q, alpha)? {
        Regime::SymmetryBroken => Err(Error::Precondition(format!(
            "(q+2) alpha^2 = {} > 1: the constant function is not the minimizer",
            (q + 2.0) * alpha * alpha
        ))),
        _ => Ok(constant_value(q, alpha)),
    }
}

/// Solves `M(gamma) = 2 pi |alpha|` by bisection, using that `M` decreases
/// strictly from `pi` (gamma -> 0) to `2 pi / sqrt(q + 2)` (gamma -> gamma_max).
pub fn solve_gamma(q: f64, alpha: f64, cfg: &SolverConfig) -> Result<f64> {
    let gmax = gamma_max(q)?;
    let target = 2.0 * PI * alpha.abs();
    let (m_low, m_high) = (2.0 * PI / (q + 2.0).sqrt(), PI);
    if alpha.abs() >= 0.5 {
        return Err(Error::BoundaryFlux);
    }
    if target <= m_low {
        return Err(Error::NoSolution {
            target,
            lo: m_low,
            hi: m_high,
        });
    }
    let (mut lo, mut hi) = (0.0, gmax);
    let mut mid = 0.5 * gmax;
    for _ in 0..cfg.max_iter {
        mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = flux_integral_on(&OvalShape::new(mid, q)?, &cfg.quad)?;
        let resid = m - target;
        if resid.abs() <= cfg.tol {
            return Ok(mid);
        }
        if resid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        what: format!("flux equation M(gamma) = {target}"),
        lo,
        hi,
        last: mid,
    })
}

/// Physical scales of the oval at `gamma`, normalized by `int r^q = 2 pi`
/// and a half-period of `pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub a: f64,
    pub lambda: f64,
    pub c: f64,
    /// `a^2 / lambda`.
    pub s: f64,
}

/// Inverts `t = (lambda / a^2)(1 + 2/q) r^2`:
/// `a^2/lambda = [(q/2) gamma (1 + 2/q)^(q/2+1)]^(2/q)`, and the half-period
/// condition `pi = a / (2 lambda (1 + 2/q)) P(gamma)` fixes `a / lambda`.
pub fn recover_scales(q: f64, gamma: f64, cfg: &QuadratureConfig) -> Result<Scales> {
    recover_scales_on(&OvalShape::new(gamma, q)?, cfg)
}

pub fn recover_scales_on(shape: &OvalShape, cfg: &QuadratureConfig) -> Result<Scales> {
    let (q, gamma) = (shape.q, shape.gamma);
    let k = 1.0 + 2.0 / q;
    let s = rpow(0.5 * q * gamma * rpow(k, q / 2.0 + 1.0), 2.0 / q);
    let p = 2.0 * PI * k / period_integral_on(shape, cfg)?;
    let a = s / p;
    let lambda = s / (p * p);
    Ok(Scales {
        a,
        lambda,
        c: lambda * (0.5 + 1.0 / q),
        s,
    })
}

/// `mu = sqrt((2 pi)^(1 - 2/q) lambda)`.
pub fn mu_from_lambda(q: f64, lambda: f64) -> f64 {
    (rpow(2.0 * PI, 1.0 - 2.0 / q) * lambda).sqrt()
}

/// Assembles the full solution record at a given oval.
pub fn oval_solution(
    q: f64,
    alpha: f64,
    gamma: f64,
    cfg: &QuadratureConfig,
) -> Result<OvalSolution> {
    let shape = OvalShape::new(gamma, q)?;
    let sc = recover_scales_on(&shape, cfg)?;
    let k = 1.0 + 2.0 / q;
    let sign = if alpha < 0.0 { -1.0 } else { 1.0 };
    Ok(OvalSolution {
        q,
        alpha,
        gamma,
        a: sign * sc.a,
        lambda: sc.lambda,
        c: sc.c,
        r1: (sc.s * shape.t1 / k).sqrt(),
        r2: (sc.s * shape.t2 / k).sqrt(),
        mu: mu_from_lambda(q, sc.lambda),
        t1: shape.t1,
        t2: shape.t2,
    })
}

/// Aitken extrapolation of `mu` along `gamma = BOUNDARY_GAMMAS * gamma_max`.
pub fn boundary_extrapolation(q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let gmax = gamma_max(q)?;
    let mut mus = [0.0; 3];
    for (m, frac) in mus.iter_mut().zip(BOUNDARY_GAMMAS) {
        *m = mu_from_lambda(q, recover_scales(q, frac * gmax, cfg)?.lambda);
    }
    let (d1, d2) = (mus[1] - mus[0], mus[2] - mus[1]);
    let denom = d2 - d1;
    if denom.abs() <= f64::EPSILON * mus[2].abs() {
        return Ok(mus[2]);
    }
    Ok(mus[2] - d2 * d2 / denom)
}

/// The sharp constant `mu_q(alpha)` for any real flux.
pub fn sharp_constant(q: f64, alpha_raw: f64, cfg: &SolverConfig) -> Result<SharpConstant> {
    check_exponent(q)?;
    if !alpha_raw.is_finite() {
        return Err(Error::Domain(format!(
            "flux must be finite, got {alpha_raw}"
        )));
    }
    let alpha = normalize_flux(alpha_raw);
    let regime = classify(q, alpha)?;
    let mut out = SharpConstant {
        q,
        alpha,
        mu: 0.0,
        regime,
        detail: None,
        extrapolated: false,
    };
    if regime != Regime::SymmetryBroken {
        out.mu = constant_value(q, alpha);
        return Ok(out);
    }
    if alpha.abs() >= 0.5 {
        if !cfg.extrapolate {
            return Err(Error::BoundaryFlux);
        }
        out.mu = boundary_extrapolation(q, &cfg.quad)?;
        out.extrapolated = true;
        return Ok(out);
    }
    let gamma = solve_gamma(q, alpha, cfg)?;
    let sol = oval_solution(q, alpha, gamma, &cfg.quad)?;
    out.mu = sol.mu;
    out.detail = Some(sol);
    Ok(out)
}
