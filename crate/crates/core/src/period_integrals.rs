//! Period integrals over one oval: the flux integral `M(gamma)`, the
//! half-period integral `P(gamma)`, their partial (running) versions used for
//! reconstruction, and the derivative `M'(gamma)` through the `H_beta` identity.
//!
//! Both `1/(t sqrt f)` and `1/sqrt f` have inverse square-root singularities
//! at the roots. Writing `f = (t - t1)(t2 - t) g(t)` with `g > 0` smooth, the
//! substitution `t = c - h cos(theta)` turns `dt / sqrt((t-t1)(t2-t))` into
//! `d theta`, so the integrals become integrals of smooth even functions of
//! `theta` over `[0, pi]`, which Chebyshev-Gauss nodes integrate spectrally.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gauss;
use crate::profile::{gamma_max, rpow, OvalShape};
use crate::spectral;

/// Below `SPLIT_GAMMA_FRACTION * gamma_max` the oval is long and thin in `t`
/// and the integrals are split at `t0` with square-root substitutions.
pub const SPLIT_GAMMA_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Chebyshev node count for `M`, `P` and the partial integrals.
    pub n_nodes: usize,
    /// Gauss-Legendre node count for `M'`.
    pub n_legendre: usize,
    /// Node counts are doubled until two successive results agree to this
    /// relative tolerance.
    pub rel_tol: f64,
    /// Ceiling for the doubling; exceeding it is a convergence error.
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_nodes: 128,
            n_legendre: 96,
            rel_tol: 1e-12,
            max_nodes: 1 << 15,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 16 || self.n_legendre < 16 {
            return domain(format!(
                "node counts must be at least 16 (n_nodes = {}, n_legendre = {})",
                self.n_nodes, self.n_legendre
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return domain(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if self.max_nodes < self.n_nodes.max(self.n_legendre) {
            return domain("max_nodes is below the starting node count");
        }
        Ok(())
    }
}

/// Smooth factor `g = f / ((t - t1)(t2 - t))`, evaluated through the divided
/// difference anchored at the nearer root so neither root loses digits.
#[inline]
pub(crate) fn smooth_factor(shape: &OvalShape, t: f64) -> f64 {
    if t <= shape.t0 {
        shape.quotient_left(t) / (shape.t2 - t)
    } else {
        shape.quotient_right(t) / (t - shape.t1)
    }
}

/// Maps `theta in [0, pi]` onto `[t1, t2]`, `theta = 0` at `t1`.
#[inline]
fn t_of_theta(shape: &OvalShape, theta: f64) -> f64 {
    let c = 0.5 * (shape.t1 + shape.t2);
    let h = 0.5 * shape.width();
    (c - h * theta.cos()).clamp(shape.t1, shape.t2)
}

#[inline]
fn theta_of_t(shape: &OvalShape, t: f64) -> f64 {
    let c = 0.5 * (shape.t1 + shape.t2);
    let h = 0.5 * shape.width();
    ((c - t) / h).clamp(-1.0, 1.0).acos()
}

#[derive(Clone, Copy)]
enum Weight {
    /// `1/t`, the flux integral.
    Flux,
    /// `1`, the half-period integral.
    Period,
}

impl Weight {
    #[inline]
    fn at(self, t: f64) -> f64 {
        match self {
            Weight::Flux => 1.0 / t,
            Weight::Period => 1.0,
        }
    }
}

fn chebyshev_sum(shape: &OvalShape, weight: Weight, n: usize) -> f64 {
    gauss::chebyshev_angles(n)
        .map(|th| {
            let t = t_of_theta(shape, th);
            weight.at(t) / smooth_factor(shape, t).sqrt()
        })
        .sum::<f64>()
        * PI
        / n as f64
}

/// Split at `t0`; `t = t1 + u^2` on the left and `t = t2 - u^2` on the right.
fn split_sum(shape: &OvalShape, weight: Weight, n: usize) -> f64 {
    let per_panel = (n / 8).max(8);
    let left = gauss::geometric_panels(
        |u| {
            let t = shape.t1 + u * u;
            2.0 * weight.at(t) / shape.quotient_left(t).sqrt()
        },
        (shape.t0 - shape.t1).sqrt(),
        0.5,
        per_panel,
    );
    let right = gauss::geometric_panels(
        |u| {
            let t = shape.t2 - u * u;
            2.0 * weight.at(t) / shape.quotient_right(t).sqrt()
        },
        (shape.t2 - shape.t0).sqrt(),
        0.5,
        per_panel,
    );
    left + right
}

/// Runs `eval(n)` with `n` doubling from `start` until two successive values
/// agree to `rel_tol`.
fn converge<F: Fn(usize) -> f64>(
    start: usize,
    cfg: &QuadratureConfig,
    what: &str,
    eval: F,
) -> Result<(f64, usize)> {
    let mut n = start;
    let mut prev = eval(n);
    while 2 * n <= cfg.max_nodes {
        let next = eval(2 * n);
        if !next.is_finite() {
            break;
        }
        if (next - prev).abs() <= cfg.rel_tol * next.abs() {
            return Ok((next, 2 * n));
        }
        prev = next;
        n *= 2;
    }
    Err(Error::Convergence {
        what: format!(
            "{what}: quadrature did not settle by {} nodes",
            cfg.max_nodes
        ),
        lo: prev,
        hi: prev,
        last: prev,
    })
}

fn weighted_integral(shape: &OvalShape, weight: Weight, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let gmax = gamma_max(shape.q)?;
    let what = match weight {
        Weight::Flux => "M",
        Weight::Period => "P",
    };
    let (v, _) = if shape.gamma < SPLIT_GAMMA_FRACTION * gmax {
        converge(cfg.n_nodes, cfg, what, |n| split_sum(shape, weight, n))?
    } else {
        converge(cfg.n_nodes, cfg, what, |n| chebyshev_sum(shape, weight, n))?
    };
    Ok(v)
}

/// The flux integral `M(gamma) = int_{t1}^{t2} dt / (t sqrt f(t))`.
pub fn flux_integral(gamma: f64, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    flux_integral_on(&OvalShape::new(gamma, q)?, cfg)
}

pub fn flux_integral_on(shape: &OvalShape, cfg: &QuadratureConfig) -> Result<f64> {
    weighted_integral(shape, Weight::Flux, cfg)
}

/// The half-period integral `P(gamma) = int_{t1}^{t2} dt / sqrt f(t)`.
pub fn period_integral(gamma: f64, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    period_integral_on(&OvalShape::new(gamma, q)?, cfg)
}

pub fn period_integral_on(shape: &OvalShape, cfg: &QuadratureConfig) -> Result<f64> {
    weighted_integral(shape, Weight::Period, cfg)
}

/// Running integrals `X(t) = int_{t1}^t ds/sqrt f` and
/// `Phi(t) = int_{t1}^t ds/(s sqrt f)` as truncated cosine series in `theta`.
///
/// With `F(theta) = sum a_k cos(k theta)` the primitive is
/// `a_0 theta + sum a_k sin(k theta) / k`, so the running integral is as
/// accurate as the full one.
#[derive(Debug, Clone)]
pub struct OvalSeries {
    pub shape: OvalShape,
    x_coef: Vec<f64>,
    phase_coef: Vec<f64>,
}

impl OvalSeries {
    pub fn new(shape: OvalShape, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let (_, n) = converge(cfg.n_nodes, cfg, "running period integral", |n| {
            chebyshev_sum(&shape, Weight::Period, n)
        })?;
        Ok(Self::with_nodes(shape, n))
    }

    pub fn with_nodes(shape: OvalShape, n: usize) -> Self {
        let mut xs = Vec::with_capacity(n);
        let mut phis = Vec::with_capacity(n);
        for th in gauss::chebyshev_angles(n) {
            let t = t_of_theta(&shape, th);
            let v = 1.0 / smooth_factor(&shape, t).sqrt();
            xs.push(v);
            phis.push(v / t);
        }
        let scale = |coef: Vec<f64>| -> Vec<f64> {
            coef.into_iter()
                .enumerate()
                .map(|(k, a)| {
                    if k == 0 {
                        a / n as f64
                    } else {
                        2.0 * a / n as f64
                    }
                })
                .collect()
        };
        Self {
            shape,
            x_coef: scale(spectral::dct2(&xs)),
            phase_coef: scale(spectral::dct2(&phis)),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.x_coef.len()
    }

    pub fn theta_of(&self, t: f64) -> f64 {
        theta_of_t(&self.shape, t)
    }

    pub fn t_of(&self, theta: f64) -> f64 {
        t_of_theta(&self.shape, theta)
    }

    /// `dX/d theta = 1 / sqrt g(t(theta))`, evaluated directly.
    pub fn x_density(&self, theta: f64) -> f64 {
        1.0 / smooth_factor(&self.shape, self.t_of(theta)).sqrt()
    }

    fn primitive(coef: &[f64], theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut sk, mut skm1) = (s1, 0.0);
        let mut acc = coef[0] * theta;
        for (k, a) in coef.iter().enumerate().skip(1) {
            acc += a * sk / k as f64;
            let next = 2.0 * c1 * sk - skm1;
            skm1 = sk;
            sk = next;
        }
        acc
    }

    /// `int_{t1}^{t(theta)} dt / sqrt f`.
    pub fn x_at(&self, theta: f64) -> f64 {
        Self::primitive(&self.x_coef, theta)
    }

    /// `int_{t1}^{t(theta)} dt / (t sqrt f)`.
    pub fn phase_at(&self, theta: f64) -> f64 {
        Self::primitive(&self.phase_coef, theta)
    }

    pub fn x_total(&self) -> f64 {
        PI * self.x_coef[0]
    }

    pub fn phase_total(&self) -> f64 {
        PI * self.phase_coef[0]
    }
}

/// `int_{t1}^{t} ds / sqrt f(s)` for `t in [t1, t2]`.
pub fn partial_x(gamma: f64, q: f64, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let shape = OvalShape::new(gamma, q)?;
    if !(t >= shape.t1 && t <= shape.t2) {
        return domain(format!(
            "t = {t} outside the oval [{}, {}]",
            shape.t1, shape.t2
        ));
    }
    if t == shape.t1 {
        return Ok(0.0);
    }
    let series = OvalSeries::new(shape, cfg)?;
    Ok(series.x_at(series.theta_of(t)))
}

/// The auxiliary functions of the derivative identity, bound to one oval and
/// the multiplier `beta` that makes `H_beta(t0) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeIdentity {
    pub shape: OvalShape,
    pub beta: f64,
}

impl DerivativeIdentity {
    pub fn new(shape: OvalShape) -> Result<Self> {
        let q = shape.q;
        let fmax = shape.f_max();
        if !(fmax > 0.0) {
            return domain(format!("f(t0) = {fmax} must be positive to fix beta"));
        }
        let d2 = shape.derivs(shape.t0).d2;
        let beta = -q * (q - 2.0) * rpow(shape.t0, q / 2.0 - 2.0) / (12.0 * fmax * d2 * d2);
        Ok(Self { shape, beta })
    }

    /// `f`, with the factored form inside the lobe.
    #[inline]
    fn f(&self, t: f64) -> f64 {
        let s = &self.shape;
        if t > s.t1 && t < s.t2 {
            (t - s.t1) * (s.t2 - t) * smooth_factor(s, t)
        } else {
            s.f(t)
        }
    }

    /// `Psi = f'^2 - 2 f f''`.
    pub fn psi(&self, t: f64) -> f64 {
        let d = self.shape.derivs(t);
        d.d1 * d.d1 - 2.0 * self.f(t) * d.d2
    }

    /// `H_beta = beta (3 f'^2 f'' + 2 f f' f''' - 6 f f''^2) - q (q-2) t^(q/2-2) / 2`.
    pub fn h_beta(&self, t: f64) -> f64 {
        let q = self.shape.q;
        let d = self.shape.derivs(t);
        let f = self.f(t);
        self.beta * (3.0 * d.d1 * d.d1 * d.d2 + 2.0 * f * d.d1 * d.d3 - 6.0 * f * d.d2 * d.d2)
            - 0.5 * q * (q - 2.0) * rpow(t, q / 2.0 - 2.0)
    }

    /// `H_beta` through the polynomial `h`:
    /// `q t^(q/2-2) (beta gamma (q+2) h(t) / 16 - (q-2)/2)`.
    pub fn h_beta_factored(&self, t: f64) -> f64 {
        let (q, gamma) = (self.shape.q, self.shape.gamma);
        let h = h_family_unchecked(t, gamma, q).h;
        q * rpow(t, q / 2.0 - 2.0) * (self.beta * gamma * (q + 2.0) * h / 16.0 - 0.5 * (q - 2.0))
    }

    /// The integrand `sqrt(f) f' H_beta / Psi^2` of the derivative identity.
    pub fn integrand(&self, t: f64) -> f64 {
        let f = self.f(t).max(0.0);
        let psi = self.psi(t);
        f.sqrt() * self.shape.derivs(t).d1 * self.h_beta(t) / (psi * psi)
    }

    /// `M'(gamma)` by Gauss-Legendre in `theta`; the `sqrt f` factor becomes
    /// `h sin(theta) sqrt g`, leaving an analytic integrand.
    pub fn integrate(&self, cfg: &QuadratureConfig) -> Result<f64> {
        cfg.validate()?;
        let s = self.shape;
        let h = 0.5 * s.width();
        let eval = |n: usize| {
            let (x, w) = gauss::legendre(n);
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let th = 0.5 * PI * (xi + 1.0);
                    let t = t_of_theta(&s, th);
                    let sin = th.sin();
                    let g = smooth_factor(&s, t);
                    let psi = self.psi(t);
                    wi * h * h * sin * sin * g.sqrt() * s.derivs(t).d1 * self.h_beta(t)
                        / (psi * psi)
                })
                .sum::<f64>()
                * 0.5
                * PI
        };
        let (v, _) = converge(cfg.n_legendre, cfg, "M'", eval)?;
        Ok(v)
    }
}

/// `M'(gamma)` from the `H_beta` identity.
pub fn flux_derivative(gamma: f64, q: f64, cfg: &QuadratureConfig) -> Result<f64> {
    DerivativeIdentity::new(OvalShape::new(gamma, q)?)?.integrate(cfg)
}

/// The polynomial `h` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HFamily {
    pub h: f64,
    pub dh: f64,
    pub d2h: f64,
}

/// `h(t) = 4(q-2) - 4(q+1) t - 4 gamma (q+1)(q-2) t^(q/2+1)
///        + 4 gamma (q+2)(q+1) t^(q/2) + gamma^2 (q+2)(q-2) t^(q+1)`,
/// `h'` by term-wise differentiation and `h'' = -gamma q (q+1)(q-2)(q+2) t^(q/2-2) f(t)`.
pub fn h_family(t: f64, gamma: f64, q: f64) -> Result<HFamily> {
    if !(t.is_finite() && t > 0.0) {
        return domain(format!("h is defined for t > 0, got t = {t}"));
    }
    if !(gamma > 0.0) {
        return domain(format!("h requires gamma > 0, got {gamma}"));
    }
    Ok(h_family_unchecked(t, gamma, q))
}

fn h_family_unchecked(t: f64, gamma: f64, q: f64) -> HFamily {
    let half = q / 2.0;
    let th = rpow(t, half);
    let th1 = th * t;
    let tq = th * th;
    let (qm2, qp1, qp2) = (q - 2.0, q + 1.0, q + 2.0);
    let h = 4.0 * qm2 - 4.0 * qp1 * t - 4.0 * gamma * qp1 * qm2 * th1
        + 4.0 * gamma * qp2 * qp1 * th
        + gamma * gamma * qp2 * qm2 * tq * t;
    let dh = -4.0 * qp1 - 4.0 * gamma * qp1 * qm2 * (half + 1.0) * th
        + 4.0 * gamma * qp2 * qp1 * half * th / t
        + gamma * gamma * qp2 * qm2 * qp1 * tq;
    let f = t - gamma * th1 - 1.0;
    let d2h = -gamma * q * qp1 * qm2 * qp2 * rpow(t, half - 2.0) * f;
    HFamily { h, dh, d2h }
}
