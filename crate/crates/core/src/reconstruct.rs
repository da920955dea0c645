//! Sampling the symmetry-broken minimizer `u(x) = r(x) exp(i (phi(x) - alpha x))`.
//!
//! The rising half of the modulus is parametrized by `t in [t1, t2]`:
//! `r^2 = a^2 t / (lambda (1 + 2/q))`, `dx = a dt / (2 lambda (1 + 2/q) sqrt f)`
//! and `d phi = dt / (2 t sqrt f)`. The falling half is the mirror image
//! about `x = pi`.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::period_integrals::{OvalSeries, QuadratureConfig};
use crate::profile::{newton_bisect, OvalShape};
use crate::solver::{constant_value, OvalSolution};
use crate::spectral;

pub const CSV_HEADER: &str = "x,r,theta,re_u,im_u";

/// Grid points next to each modulus extremum left out of the ODE residual.
pub const ODE_EXCLUDE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerSample {
    pub q: f64,
    pub alpha: f64,
    /// `n + 1` points `2 pi j / n`, both endpoints included.
    pub x: Vec<f64>,
    pub r: Vec<f64>,
    /// Argument of `u`, unwrapped, `theta(0) = 0`.
    pub theta: Vec<f64>,
    /// Cumulative phase `phi = theta + alpha x`.
    pub phi: Vec<f64>,
    pub a: f64,
    pub lambda: f64,
    pub c: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|int r^q dx - 2 pi|`.
    pub norm_residual: f64,
    /// `|int a / r^2 dx - 2 pi alpha|`.
    pub flux_residual: f64,
    /// Max interior `|-r'' + a^2/r^3 - lambda r^(q-1)|` from second differences.
    pub ode_residual: f64,
    /// `int (r'^2 + a^2/r^2) dx`, equal to `2 pi lambda` on a solution.
    pub energy: f64,
    /// `|energy - 2 pi lambda| / (2 pi lambda)`.
    pub energy_rel_err: f64,
    /// Max relative deviation of `r'^2 + a^2/r^2 + (2 lambda/q) r^q` from `2c`.
    pub first_integral_drift: f64,
    /// `|(2 pi)^(-2/q) energy - mu^2| / mu^2`.
    pub rayleigh_rel_err: f64,
}

impl MinimizerSample {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Samples of `u` on the periodic grid (the duplicated endpoint dropped).
    pub fn u_periodic(&self) -> Vec<(f64, f64)> {
        let n = self.len() - 1;
        (0..n)
            .map(|j| {
                let (s, c) = self.theta[j].sin_cos();
                (self.r[j] * c, self.r[j] * s)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for j in 0..self.len() {
            let (s, c) = self.theta[j].sin_cos();
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.x[j],
                self.r[j],
                self.theta[j],
                self.r[j] * c,
                self.r[j] * s
            )?;
        }
        Ok(())
    }
}

fn check_grid(n: usize) -> Result<()> {
    if n < 16 || !n.is_multiple_of(2) {
        return domain(format!("grid size must be even and at least 16, got {n}"));
    }
    Ok(())
}

fn grid(n: usize) -> Vec<f64> {
    (0..=n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// The constant minimizer `u = 1`, with `phi = alpha x` so `theta = 0`.
pub fn constant_sample(q: f64, alpha: f64, n: usize) -> Result<MinimizerSample> {
    check_grid(n)?;
    let x = grid(n);
    let lambda = alpha * alpha;
    Ok(MinimizerSample {
        q,
        alpha,
        r: vec![1.0; n + 1],
        theta: vec![0.0; n + 1],
        phi: x.iter().map(|x| alpha * x).collect(),
        x,
        a: alpha,
        lambda,
        c: lambda * (0.5 + 1.0 / q),
        mu: constant_value(q, alpha),
    })
}

/// Samples the non-constant minimizer on `n + 1` uniform points of `[0, 2 pi]`.
pub fn sample_minimizer(
    sol: &OvalSolution,
    n: usize,
    cfg: &QuadratureConfig,
) -> Result<MinimizerSample> {
    check_grid(n)?;
    if !(sol.gamma > 0.0) || sol.a == 0.0 {
        return domain("the constant solution has no oval to sample; use constant_sample");
    }
    let q = sol.q;
    let shape = OvalShape::new(sol.gamma, q)?;
    let series = OvalSeries::new(shape, cfg)?;
    let k = 1.0 + 2.0 / q;
    let x_total = series.x_total();
    let half_phase = 0.5 * series.phase_total();
    let sign = sol.a.signum();
    let r_scale = sol.a * sol.a / (sol.lambda * k);

    let x = grid(n);
    let half = n / 2;
    let mut r = vec![0.0; n + 1];
    let mut phi = vec![0.0; n + 1];
    let x_of = |th: f64| PI * series.x_at(th) / x_total;
    for j in 0..=half {
        let th = if j == 0 {
            0.0
        } else if j == half {
            PI
        } else {
            let target = x[j];
            newton_bisect(
                |th| x_of(th) - target,
                |th| PI * series.x_density(th) / x_total,
                0.0,
                PI,
                "inverse of the arclength map",
            )
            .map_err(|e| match e {
                Error::Convergence { lo, hi, last, .. } => Error::Convergence {
                    what: format!("x(theta) = {target}"),
                    lo,
                    hi,
                    last,
                },
                other => other,
            })?
        };
        r[j] = (r_scale * series.t_of(th)).sqrt();
        phi[j] = sign * 0.5 * series.phase_at(th);
    }
    for j in half + 1..=n {
        r[j] = r[n - j];
        phi[j] = sign * 2.0 * half_phase - phi[n - j];
    }
    let alpha = sol.alpha;
    let theta = phi.iter().zip(&x).map(|(p, x)| p - alpha * x).collect();
    Ok(MinimizerSample {
        q,
        alpha,
        x,
        r,
        theta,
        phi,
        a: sol.a,
        lambda: sol.lambda,
        c: sol.c,
        mu: sol.mu,
    })
}

/// Self-consistency diagnostics of a sample; integrals use the periodic
/// trapezoid rule and `r'` is the spectral derivative.
pub fn residuals(sample: &MinimizerSample) -> Residuals {
    let n = sample.len() - 1;
    let (q, a, lambda, c) = (sample.q, sample.a, sample.lambda, sample.c);
    let dx = 2.0 * PI / n as f64;
    let r = &sample.r[..n];
    let dr = spectral::derivative(r);

    let norm: f64 = r.iter().map(|v| v.powf(q)).sum::<f64>() * dx;
    let flux: f64 = r.iter().map(|v| a / (v * v)).sum::<f64>() * dx;
    let energy: f64 = r
        .iter()
        .zip(&dr)
        .map(|(v, d)| d * d + a * a / (v * v))
        .sum::<f64>()
        * dx;

    let first_integral_drift = if c > 0.0 {
        r.iter()
            .zip(&dr)
            .map(|(v, d)| {
                let e = d * d + a * a / (v * v) + 2.0 * lambda / q * v.powf(q);
                (e - 2.0 * c).abs() / (2.0 * c)
            })
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    let half = n / 2;
    let near_extremum = |j: usize| [0, half, n].iter().any(|&e| j.abs_diff(e) <= ODE_EXCLUDE);
    let ode_residual = (1..n)
        .filter(|&j| !near_extremum(j))
        .map(|j| {
            let rv = sample.r[j];
            let d2 = (sample.r[j + 1] - 2.0 * rv + sample.r[j - 1]) / (dx * dx);
            (-d2 + a * a / (rv * rv * rv) - lambda * rv.powf(q - 1.0)).abs()
        })
        .fold(0.0, f64::max);

    let two_pi_lambda = 2.0 * PI * lambda;
    let mu2 = sample.mu * sample.mu;
    let rayleigh = (2.0 * PI).powf(-2.0 / q) * energy;
    Residuals {
        norm_residual: (norm - 2.0 * PI).abs(),
        flux_residual: (flux - 2.0 * PI * sample.alpha).abs(),
        ode_residual,
        energy,
        energy_rel_err: if two_pi_lambda > 0.0 {
            (energy - two_pi_lambda).abs() / two_pi_lambda
        } else {
            energy.abs()
        },
        first_integral_drift,
        rayleigh_rel_err: if mu2 > 0.0 {
            (rayleigh - mu2).abs() / mu2
        } else {
            rayleigh.abs()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{sharp_constant, SolverConfig};

    fn broken(q: f64, alpha: f64, n: usize) -> MinimizerSample {
        let r = sharp_constant(q, alpha, &SolverConfig::default()).unwrap();
        sample_minimizer(&r.detail.unwrap(), n, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn constant_fallback() {
        let s = constant_sample(4.0, 0.3, 64).unwrap();
        assert!(s.r.iter().all(|&r| r == 1.0));
        assert!(s.theta.iter().all(|&t| t == 0.0));
        let res = residuals(&s);
        assert!(res.norm_residual < 1e-12);
        assert!(res.flux_residual < 1e-12);
        assert!(res.ode_residual < 1e-12);
        assert!(res.energy_rel_err < 1e-12);
        assert!(res.rayleigh_rel_err < 1e-12);
        assert!(constant_sample(4.0, 0.3, 15).is_err());
    }

    #[test]
    fn shape_of_broken_minimizer() {
        let s = broken(4.0, 0.45, 256);
        let sol = sharp_constant(4.0, 0.45, &SolverConfig::default())
            .unwrap()
            .detail
            .unwrap();
        assert!((s.r[0] - sol.r1).abs() < 1e-12);
        assert!((s.r[256] - sol.r1).abs() < 1e-12);
        assert!((s.r[128] - sol.r2).abs() < 1e-12);
        for j in 0..=256 {
            assert!((s.r[j] - s.r[256 - j]).abs() < 1e-10);
        }
        // phi(pi) - phi(0) = M / 2 = pi alpha
        assert!((s.phi[128] - PI * 0.45).abs() < 1e-9);
        assert!(s.theta[0] == 0.0 && s.theta[256].abs() < 1e-9);
    }

    #[test]
    fn residuals_are_small() {
        let s = broken(4.0, 0.45, 512);
        let res = residuals(&s);
        assert!(res.norm_residual < 1e-9, "{res:?}");
        assert!(res.flux_residual < 1e-9, "{res:?}");
        assert!(res.energy_rel_err < 1e-9, "{res:?}");
        assert!(res.first_integral_drift < 1e-9, "{res:?}");
        assert!(res.rayleigh_rel_err < 1e-9, "{res:?}");
    }

    #[test]
    fn ode_residual_is_second_order() {
        let coarse = residuals(&broken(4.0, 0.45, 256)).ode_residual;
        let fine = residuals(&broken(4.0, 0.45, 512)).ode_residual;
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn negative_flux_mirrors_phase() {
        let pos = broken(4.0, 0.45, 64);
        let neg = broken(4.0, -0.45, 64);
        for j in 0..pos.len() {
            assert!((pos.r[j] - neg.r[j]).abs() < 1e-14);
            assert!((pos.theta[j] + neg.theta[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let s = constant_sample(4.0, 0.3, 16).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 18);
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }
}
