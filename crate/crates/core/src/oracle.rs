//! Direct minimization of the discretized magnetic Rayleigh quotient, an
//! independent check on the phase-plane pipeline.
//!
//! The unknown is the vector of Fourier coefficients `c_k` of `u` on an
//! `n`-point periodic grid, so the magnetic derivative is exact:
//! `||u' + i alpha u||^2 = 2 pi sum (k + alpha)^2 |c_k|^2`. The optimizer
//! works with `w_k = c_k sqrt((k + alpha)^2 + 1)`, in which the quadratic part
//! is uniformly conditioned, and minimizes `log ||u'+i alpha u||^2 - (2/q) log int |u|^q`
//! by L-BFGS.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::profile::check_exponent;
use crate::reconstruct::CSV_HEADER;
use crate::spectral::wavenumber;

pub const DEFAULT_SEED: u64 = 0x5eed_2017;

const LBFGS_MEMORY: usize = 12;

/// Progress below `STAGNATION_TOL` in the log-quotient over this many
/// iterations ends a run; the value is then at roundoff level.
const STAGNATION_WINDOW: usize = 50;
const STAGNATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum Start {
    /// `u = 1`.
    Constant,
    /// `u = 1 + 0.3 sin x`, tilted toward the first unstable mode.
    Modulated,
    /// Constant plus smooth random low modes.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n: usize,
    pub max_iters: usize,
    /// Stop once `||grad|| * ||w|| <= grad_tol` (a scale-free measure).
    pub grad_tol: f64,
    pub starts: Vec<Start>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n: 512,
            max_iters: 4000,
            grad_tol: 1e-9,
            starts: vec![
                Start::Constant,
                Start::Modulated,
                Start::Random(DEFAULT_SEED),
            ],
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 64 {
            return domain(format!("oracle grid needs n >= 64, got {}", self.n));
        }
        if !(self.grad_tol > 0.0) {
            return domain("grad_tol must be positive");
        }
        if self.starts.is_empty() {
            return domain("at least one start is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: Start,
    pub mu: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mu_est: f64,
    /// Best minimizer on the grid, scaled to `int |u|^q = 2 pi`, `arg u(0) = 0`.
    pub u_best: Vec<Complex64>,
    pub best_start: Start,
    pub runs: Vec<StartReport>,
}

impl OracleResult {
    /// Writes `u_best` in the reconstruction CSV schema (periodic endpoint repeated).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let n = self.u_best.len();
        let mut theta = unwrap_phase(&self.u_best);
        theta.push(
            theta[0]
                + (theta[n - 1] - theta[0])
                + wrap(self.u_best[0].arg() - self.u_best[n - 1].arg()),
        );
        for (j, th) in theta.iter().enumerate() {
            let u = self.u_best[j % n];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                2.0 * PI * j as f64 / n as f64,
                u.norm(),
                th,
                u.re,
                u.im
            )?;
        }
        Ok(())
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.u_best.iter().map(|u| u.norm()).collect()
    }
}

fn wrap(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

fn unwrap_phase(u: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len() + 1);
    let mut acc = u[0].arg();
    out.push(acc);
    for pair in u.windows(2) {
        acc += wrap(pair[1].arg() - pair[0].arg());
        out.push(acc);
    }
    out
}

/// Number of strict local maxima of a periodic sequence; 0 when the sequence
/// is flat to `1e-8` relative.
pub fn count_local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if hi - lo <= 1e-8 * hi.abs() {
        return 0;
    }
    (0..n)
        .filter(|&j| {
            let prev = values[(j + n - 1) % n];
            let next = values[(j + 1) % n];
            values[j] > prev && values[j] >= next
        })
        .count()
}

/// `||u' + i alpha u||_2 / ||u||_q` on the uniform periodic grid, with the
/// spectral derivative and rectangle-rule norms.
pub fn rayleigh(u: &[Complex64], q: f64, alpha: f64) -> Result<f64> {
    check_exponent(q)?;
    let n = u.len();
    if n == 0 || u.iter().all(|z| z.norm_sqr() == 0.0) {
        return domain("the Rayleigh quotient is undefined for the zero function");
    }
    let mut c = u.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut c);
    let nf = n as f64;
    let energy: f64 = c
        .iter()
        .enumerate()
        .map(|(j, ck)| {
            let k = wavenumber(j, n) + alpha;
            k * k * (ck / nf).norm_sqr()
        })
        .sum::<f64>()
        * 2.0
        * PI;
    let dx = 2.0 * PI / nf;
    let nq: f64 = u.iter().map(|z| z.norm().powf(q)).sum::<f64>() * dx;
    Ok(energy.sqrt() / nq.powf(1.0 / q))
}

struct Objective {
    n: usize,
    q: f64,
    /// `(k + alpha)^2`.
    symbol: Vec<f64>,
    /// `sqrt((k + alpha)^2 + 1)`.
    precond: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Objective {
    fn new(n: usize, q: f64, alpha: f64) -> Self {
        let symbol: Vec<f64> = (0..n)
            .map(|j| {
                let k = wavenumber(j, n) + alpha;
                k * k
            })
            .collect();
        let precond = symbol.iter().map(|s| (s + 1.0).sqrt()).collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            q,
            symbol,
            precond,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn to_grid(&self, w: &[Complex64]) -> Vec<Complex64> {
        let mut u: Vec<Complex64> = w.iter().zip(&self.precond).map(|(w, s)| w / s).collect();
        self.inverse.process(&mut u);
        u
    }

    fn grid_to_weights(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut c = u.to_vec();
        self.forward.process(&mut c);
        let nf = self.n as f64;
        c.iter()
            .zip(&self.precond)
            .map(|(c, s)| c / nf * s)
            .collect()
    }

    /// Value of `log E - (2/q) log N_q` and its real gradient packed as complex.
    fn eval(&self, w: &[Complex64]) -> (f64, Vec<Complex64>) {
        let q = self.q;
        let dx = 2.0 * PI / self.n as f64;
        let coeffs: Vec<Complex64> = w.iter().zip(&self.precond).map(|(w, s)| w / s).collect();
        let energy: f64 = 2.0
            * PI
            * coeffs
                .iter()
                .zip(&self.symbol)
                .map(|(c, s)| s * c.norm_sqr())
                .sum::<f64>();
        let mut u = coeffs.clone();
        self.inverse.process(&mut u);
        let mut nq = 0.0;
        for z in u.iter_mut() {
            let m = z.norm();
            nq += m.powf(q);
            *z *= if m > 0.0 { m.powf(q - 2.0) } else { 0.0 };
        }
        nq *= dx;
        self.forward.process(&mut u);
        let grad = coeffs
            .iter()
            .zip(&u)
            .zip(self.symbol.iter().zip(&self.precond))
            .map(|((c, v), (sym, s))| 2.0 * (2.0 * PI * sym * c / energy - dx * v / nq) / s)
            .collect();
        (energy.ln() - 2.0 / q * nq.ln(), grad)
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).sqrt()
}

struct RunOutcome {
    value: f64,
    w: Vec<Complex64>,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

fn lbfgs(obj: &Objective, mut w: Vec<Complex64>, cfg: &OracleConfig) -> RunOutcome {
    let (mut fx, mut g) = obj.eval(&w);
    let mut mem: Vec<(Vec<Complex64>, Vec<Complex64>, f64)> = Vec::new();
    let mut iterations = 0;
    let scaled = |g: &[Complex64], w: &[Complex64]| norm(g) * norm(w);
    let mut window_start = fx;
    while iterations < cfg.max_iters {
        if !(scaled(&g, &w) > cfg.grad_tol) {
            break;
        }
        if iterations > 0 && iterations % STAGNATION_WINDOW == 0 {
            if window_start - fx < STAGNATION_TOL {
                break;
            }
            window_start = fx;
        }
        iterations += 1;
        // two-loop recursion
        let mut d: Vec<Complex64> = g.iter().map(|x| -x).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match mem.last() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1e-2 * norm(&w) / norm(&g),
        };
        for di in d.iter_mut() {
            *di *= gamma;
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            mem.clear();
            d = g.iter().map(|x| -x * 1e-2 * norm(&w) / norm(&g)).collect();
            slope = dot(&g, &d);
        }
        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<Complex64> = w.iter().zip(&d).map(|(w, d)| w + step * d).collect();
            let (ft, gt) = obj.eval(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, f_new, g_new)) = accepted else {
            break;
        };
        let s: Vec<Complex64> = w_new.iter().zip(&w).map(|(a, b)| a - b).collect();
        let y: Vec<Complex64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if mem.len() == LBFGS_MEMORY {
                mem.remove(0);
            }
            mem.push((s, y, 1.0 / sy));
        }
        w = w_new;
        fx = f_new;
        g = g_new;
    }
    let grad_norm = scaled(&g, &w);
    RunOutcome {
        value: fx,
        w,
        iterations,
        grad_norm,
        // a stalled line search this close to stationarity is roundoff
        converged: grad_norm <= cfg.grad_tol.max(1e-6),
    }
}

fn initial_guess(start: Start, n: usize) -> Vec<Complex64> {
    let x = |j: usize| 2.0 * PI * j as f64 / n as f64;
    match start {
        Start::Constant => vec![Complex64::new(1.0, 0.0); n],
        Start::Modulated => (0..n)
            .map(|j| Complex64::new(1.0 + 0.3 * x(j).sin(), 0.0))
            .collect(),
        Start::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, Complex64)> = (-8i32..=8)
                .filter(|&k| k != 0)
                .map(|k| {
                    let amp = 0.4 / (1.0 + (k * k) as f64);
                    let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (k as f64, amp * z)
                })
                .collect();
            (0..n)
                .map(|j| {
                    modes.iter().fold(Complex64::new(1.0, 0.0), |acc, (k, c)| {
                        acc + c * Complex64::from_polar(1.0, k * x(j))
                    })
                })
                .collect()
        }
    }
}

/// Normalizes to `int |u|^q = 2 pi` and `arg u(0) = 0`.
fn normalize(u: &mut [Complex64], q: f64) {
    let dx = 2.0 * PI / u.len() as f64;
    let nq: f64 = u.iter().map(|z| z.norm().powf(q)).sum::<f64>() * dx;
    let scale = (2.0 * PI / nq).powf(1.0 / q);
    let phase = Complex64::from_polar(1.0, -u[0].arg());
    for z in u.iter_mut() {
        *z *= scale * phase;
    }
}

fn run_start(
    obj: &Objective,
    start: Start,
    cfg: &OracleConfig,
    q: f64,
) -> (StartReport, Vec<Complex64>) {
    let w0 = obj.grid_to_weights(&initial_guess(start, cfg.n));
    let out = lbfgs(obj, w0, cfg);
    let mut u = obj.to_grid(&out.w);
    normalize(&mut u, q);
    (
        StartReport {
            start,
            mu: (0.5 * out.value).exp(),
            iterations: out.iterations,
            grad_norm: out.grad_norm,
            converged: out.converged,
        },
        u,
    )
}

/// Minimizes the discrete quotient from every configured start and keeps the
/// smallest converged value. This is a feasible-point upper bound on `mu`.
pub fn minimize_rayleigh(q: f64, alpha: f64, cfg: &OracleConfig) -> Result<OracleResult> {
    check_exponent(q)?;
    cfg.validate()?;
    let obj = Objective::new(cfg.n, q, alpha);

    #[cfg(feature = "parallel")]
    let runs: Vec<(StartReport, Vec<Complex64>)> = {
        use rayon::prelude::*;
        cfg.starts
            .par_iter()
            .map(|&s| run_start(&obj, s, cfg, q))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<(StartReport, Vec<Complex64>)> = cfg
        .starts
        .iter()
        .map(|&s| run_start(&obj, s, cfg, q))
        .collect();

    let best = runs
        .iter()
        .filter(|(r, _)| r.converged)
        .min_by(|a, b| a.0.mu.total_cmp(&b.0.mu));
    let Some((best_report, u)) = best else {
        let last = runs
            .iter()
            .map(|(r, _)| r.grad_norm)
            .fold(f64::INFINITY, f64::min);
        return Err(Error::Convergence {
            what: format!(
                "no oracle start converged within {} iterations",
                cfg.max_iters
            ),
            lo: 0.0,
            hi: cfg.grad_tol,
            last,
        });
    };
    Ok(OracleResult {
        mu_est: rayleigh(u, q, alpha)?,
        u_best: u.clone(),
        best_start: best_report.start,
        runs: runs.iter().map(|(r, _)| r.clone()).collect(),
    })
}

/// Second variation of the quotient at the constant function, restricted to
/// zero-mean perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMargin {
    /// `min_k>=1 (k^2 - alpha^2 (q+2)) = 1 - alpha^2 (q+2)`.
    pub analytic: f64,
    /// Smallest eigenvalue of the discretized form on an `n`-point grid.
    pub discrete: f64,
    pub n: usize,
}

impl StabilityMargin {
    pub fn agreement(&self) -> f64 {
        (self.analytic - self.discrete).abs()
    }
}

/// The quadratic form `int (h'^2 - alpha^2 (q+2) h^2)` on zero-mean periodic
/// `h`; its sign decides whether the constant function is a local minimum.
pub fn second_order_margin(q: f64, alpha: f64, n: usize) -> Result<StabilityMargin> {
    check_exponent(q)?;
    if n < 8 || !n.is_multiple_of(2) {
        return domain(format!("margin grid must be even and at least 8, got {n}"));
    }
    let coupling = alpha * alpha * (q + 2.0);
    // Fourier second-derivative matrix on the periodic grid; the mean mode is
    // lifted out of the way so the minimum is over zero-mean functions.
    let h = 2.0 * PI / n as f64;
    let lift = (n * n) as f64;
    let form = DMatrix::from_fn(n, n, |i, j| {
        let d2 = if i == j {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let m = i as f64 - j as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (0.5 * m * h).sin().powi(2))
        };
        let diag = if i == j { coupling } else { 0.0 };
        -d2 - diag + lift / n as f64
    });
    let eig = form.symmetric_eigen();
    let discrete = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(StabilityMargin {
        analytic: 1.0 - coupling,
        discrete,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_fn(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn rayleigh_of_constant() {
        let u = vec![Complex64::new(1.0, 0.0); 64];
        let v = rayleigh(&u, 4.0, 0.3).unwrap();
        assert!((v - (2.0 * PI).powf(0.25) * 0.3).abs() < 1e-14);
    }

    #[test]
    fn rayleigh_of_first_mode() {
        // u = e^{-ix}: |u' + i alpha u| = |alpha - 1| pointwise
        let u = grid_fn(64, |x| Complex64::from_polar(1.0, -x));
        let v = rayleigh(&u, 4.0, 0.3).unwrap();
        assert!((v - (2.0 * PI).powf(0.25) * 0.7).abs() < 1e-13);
    }

    #[test]
    fn rayleigh_scale_invariance_and_zero() {
        let u = grid_fn(64, |x| Complex64::new(1.0 + 0.2 * x.cos(), 0.1 * x.sin()));
        let scaled: Vec<Complex64> = u.iter().map(|z| z * Complex64::new(3.0, 4.0)).collect();
        let (a, b) = (
            rayleigh(&u, 5.0, 0.2).unwrap(),
            rayleigh(&scaled, 5.0, 0.2).unwrap(),
        );
        assert!((a - b).abs() < 1e-14 * a);
        assert!(rayleigh(&[Complex64::new(0.0, 0.0); 8], 4.0, 0.3).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let obj = Objective::new(64, 3.5, 0.37);
        let w = obj.grid_to_weights(&initial_guess(Start::Random(7), 64));
        let (_, g) = obj.eval(&w);
        for &(idx, imag) in &[(0usize, false), (1, true), (5, false), (60, true)] {
            let h = 1e-6;
            let bump = if imag {
                Complex64::new(0.0, h)
            } else {
                Complex64::new(h, 0.0)
            };
            let mut wp = w.clone();
            wp[idx] += bump;
            let mut wm = w.clone();
            wm[idx] -= bump;
            let fd = (obj.eval(&wp).0 - obj.eval(&wm).0) / (2.0 * h);
            let an = if imag { g[idx].im } else { g[idx].re };
            assert!(
                (fd - an).abs() < 1e-7 * (1.0 + an.abs()),
                "{idx}: {fd} vs {an}"
            );
        }
    }

    #[test]
    fn constant_regime_converges_to_constant() {
        let cfg = OracleConfig {
            n: 256,
            ..Default::default()
        };
        let r = minimize_rayleigh(4.0, 0.3, &cfg).unwrap();
        assert!(
            (r.mu_est - 0.474_970_046_125_848).abs() < 1e-6,
            "{}",
            r.mu_est
        );
        assert_eq!(count_local_maxima(&r.modulus()), 0);
        assert_eq!(r.u_best[0].arg(), 0.0);
    }

    #[test]
    fn margin_examples() {
        let m = second_order_margin(4.0, 0.3, 64).unwrap();
        assert!((m.analytic - 0.46).abs() < 1e-15);
        assert!(m.agreement() < 1e-8, "{m:?}");
        let crit = second_order_margin(4.0, 1.0 / 6f64.sqrt(), 64).unwrap();
        assert!(crit.analytic.abs() < 1e-15 && crit.discrete.abs() < 1e-8);
        let m = second_order_margin(4.0, 0.5, 128).unwrap();
        assert!((m.analytic + 0.5).abs() < 1e-15 && m.agreement() < 1e-8);
    }

    #[test]
    fn maxima_counting() {
        let one: Vec<f64> = (0..100).map(|j| (j as f64 * 0.0628).cos()).collect();
        assert_eq!(count_local_maxima(&one), 1);
        let two: Vec<f64> = (0..100)
            .map(|j| (2.0 * j as f64 * 0.06283185307).cos())
            .collect();
        assert_eq!(count_local_maxima(&two), 2);
        assert_eq!(count_local_maxima(&[1.0; 10]), 0);
    }
}
