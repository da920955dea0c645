//! The dimensionless profile `f(t) = t - gamma * t^(q/2+1) - 1` whose positive
//! lobe `(t1, t2)` parametrizes one oval of the phase plane.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Root refinement tolerance (relative).
pub const ROOT_RTOL: f64 = 1e-13;

/// Below this relative distance to `gamma_max` the roots come from the local
/// quadratic model around `t0` instead of Newton.
pub const DEGENERATE_REL_GAP: f64 = 1e-10;

const MAX_ROOT_ITERS: usize = 200;

/// The pair `(q, alpha)` defining one embedding problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub q: f64,
    pub alpha: f64,
}

impl ProblemParams {
    /// Validates `q > 2` and reduces the flux to `[-1/2, 1/2]`.
    pub fn new(q: f64, alpha_raw: f64) -> Result<Self> {
        check_exponent(q)?;
        if !alpha_raw.is_finite() {
            return domain(format!("flux must be finite, got {alpha_raw}"));
        }
        Ok(Self {
            q,
            alpha: crate::solver::normalize_flux(alpha_raw),
        })
    }

    /// `(q + 2) alpha^2`, the quantity compared against 1.
    pub fn threshold_ratio(&self) -> f64 {
        (self.q + 2.0) * self.alpha * self.alpha
    }
}

/// Dimensionless data of one oval: the shape parameter and the three
/// distinguished points `t1 < t0 < t2` of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvalShape {
    pub q: f64,
    pub gamma: f64,
    pub t1: f64,
    pub t0: f64,
    pub t2: f64,
}

impl OvalShape {
    pub fn new(gamma: f64, q: f64) -> Result<Self> {
        let t0 = critical_point(gamma, q)?;
        let (t1, t2) = bracket_roots(gamma, q)?;
        Ok(Self {
            q,
            gamma,
            t1,
            t0,
            t2,
        })
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        f_unchecked(t, self.gamma, self.q)
    }

    #[inline]
    pub fn derivs(&self, t: f64) -> Derivs {
        derivs_unchecked(t, self.gamma, self.q)
    }

    /// Maximum of `f` on the lobe, `f(t0) = q t0 / (q + 2) - 1`.
    pub fn f_max(&self) -> f64 {
        f_at_critical(self.t0, self.q)
    }

    pub fn width(&self) -> f64 {
        self.t2 - self.t1
    }

    /// `f(t) / (t - t1)`, free of cancellation near `t1`.
    pub fn quotient_left(&self, t: f64) -> f64 {
        let p = self.q / 2.0 + 1.0;
        let d = t - self.t1;
        if d == 0.0 {
            return self.derivs(self.t1).d1;
        }
        1.0 - self.gamma * pow_diff(t, self.t1, p) / d
    }

    /// `f(t) / (t2 - t)`, free of cancellation near `t2`.
    pub fn quotient_right(&self, t: f64) -> f64 {
        let p = self.q / 2.0 + 1.0;
        let d = self.t2 - t;
        if d == 0.0 {
            return -self.derivs(self.t2).d1;
        }
        -1.0 + self.gamma * pow_diff(self.t2, t, p) / d
    }
}

/// `f'`, `f''`, `f'''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub(crate) fn check_exponent(q: f64) -> Result<()> {
    if q.is_finite() && q > 2.0 {
        Ok(())
    } else {
        domain(format!("exponent must satisfy 2 < q < inf, got q = {q}"))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        domain(format!("profile argument must be positive, got t = {t}"))
    }
}

fn check_gamma(gamma: f64, q: f64) -> Result<()> {
    let gmax = gamma_max(q)?;
    if gamma.is_finite() && gamma > 0.0 && gamma < gmax {
        Ok(())
    } else {
        domain(format!(
            "shape parameter must lie in (0, gamma_max = {gmax}), got gamma = {gamma}"
        ))
    }
}

/// `t^e` for real exponents, through `exp(e ln t)`.
#[inline]
pub(crate) fn rpow(t: f64, e: f64) -> f64 {
    (e * t.ln()).exp()
}

/// `a^p - b^p` without cancellation when `a` and `b` are close.
#[inline]
pub(crate) fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    rpow(b, p) * (p * ((a - b) / b).ln_1p()).exp_m1()
}

#[inline]
fn f_unchecked(t: f64, gamma: f64, q: f64) -> f64 {
    t - gamma * rpow(t, q / 2.0 + 1.0) - 1.0
}

#[inline]
fn derivs_unchecked(t: f64, gamma: f64, q: f64) -> Derivs {
    let tq = rpow(t, q / 2.0 - 2.0);
    let c = gamma * (q + 2.0);
    Derivs {
        d1: 1.0 - 0.5 * c * tq * t * t,
        d2: -0.25 * c * q * tq * t,
        d3: -0.125 * c * q * (q - 2.0) * tq,
    }
}

#[inline]
pub(crate) fn f_at_critical(t0: f64, q: f64) -> f64 {
    q * t0 / (q + 2.0) - 1.0
}

/// Evaluates `f(t) = t - gamma t^(q/2+1) - 1`.
pub fn eval_f(t: f64, gamma: f64, q: f64) -> Result<f64> {
    check_t(t)?;
    Ok(f_unchecked(t, gamma, q))
}

/// The first three derivatives of `f` at `t`.
pub fn eval_f_derivs(t: f64, gamma: f64, q: f64) -> Result<Derivs> {
    check_t(t)?;
    Ok(derivs_unchecked(t, gamma, q))
}

/// Shape parameter of the degenerate (single point) oval,
/// `2/(q+2) * (1 + 2/q)^(-q/2)`.
pub fn gamma_max(q: f64) -> Result<f64> {
    check_exponent(q)?;
    Ok(2.0 / (q + 2.0) * rpow(1.0 + 2.0 / q, -q / 2.0))
}

/// Unique zero of `f'`: `t0 = (2 / (gamma (q+2)))^(2/q)`.
pub fn critical_point(gamma: f64, q: f64) -> Result<f64> {
    check_gamma(gamma, q)?;
    Ok(critical_point_unchecked(gamma, q))
}

#[inline]
pub(crate) fn critical_point_unchecked(gamma: f64, q: f64) -> f64 {
    rpow(2.0 / (gamma * (q + 2.0)), 2.0 / q)
}

/// The two zeros `t1 < t0 < t2` of `f`.
pub fn bracket_roots(gamma: f64, q: f64) -> Result<(f64, f64)> {
    check_gamma(gamma, q)?;
    let gmax = gamma_max(q)?;
    let t0 = critical_point_unchecked(gamma, q);
    let fmax = f_at_critical(t0, q);
    if fmax <= 0.0 {
        return domain(format!(
            "oval at gamma = {gamma} is numerically degenerate (f(t0) = {fmax})"
        ));
    }

    if gmax - gamma < DEGENERATE_REL_GAP * gmax {
        let d2 = derivs_unchecked(t0, gamma, q).d2;
        let half = (-2.0 * fmax / d2).sqrt();
        return Ok((t0 - half, t0 + half));
    }

    let f = |t: f64| f_unchecked(t, gamma, q);
    let df = |t: f64| derivs_unchecked(t, gamma, q).d1;
    // f(1) = -gamma < 0 and f(gamma^(-2/q)) = -1 < 0 bound the lobe.
    let t_hi = rpow(gamma, -2.0 / q);
    let t1 = newton_bisect(f, df, 1.0, t0, "left root t1")?;
    let t2 = newton_bisect(f, df, t0, t_hi, "right root t2")?;
    Ok((t1, t2))
}

/// Safeguarded Newton on a sign-changing bracket: a Newton step that leaves
/// the current bracket (or fails to halve it) is replaced by bisection.
pub(crate) fn newton_bisect<F, D>(f: F, df: D, a: f64, b: f64, what: &str) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (a, b);
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Convergence {
            what: format!("{what}: no sign change"),
            lo,
            hi,
            last: f64::NAN,
        });
    }
    // Orient so that f(lo) < 0 < f(hi) in terms of bookkeeping.
    let neg_at_lo = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = (hi - lo).abs();
    for _ in 0..MAX_ROOT_ITERS {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == neg_at_lo {
            lo = x;
        } else {
            hi = x;
        }
        let dfx = df(x);
        let newton = x - fx / dfx;
        let (next, dx) = if dfx != 0.0
            && newton > lo.min(hi)
            && newton < lo.max(hi)
            && (newton - x).abs() < 0.5 * dx_old
        {
            (newton, (newton - x).abs())
        } else {
            let mid = 0.5 * (lo + hi);
            (mid, (mid - x).abs())
        };
        dx_old = dx;
        x = next;
        if dx <= ROOT_RTOL * x.abs() || (hi - lo).abs() <= ROOT_RTOL * x.abs() {
            return Ok(x);
        }
    }
    Err(Error::Convergence {
        what: what.to_string(),
        lo,
        hi,
        last: x,
    })
}
