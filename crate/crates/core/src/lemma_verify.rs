//! Numerical certificates for the behaviour of the period map: `M` decreases
//! strictly, tends to `2 pi / sqrt(q + 2)` at the degenerate oval, and the
//! integrand of the derivative identity has the sign pattern that forces
//! `M' < 0`.
//!
//! Every check returns its raw numbers; the `*_check` wrappers turn a failed
//! report into [`Error::Verification`].

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::period_integrals::{flux_integral_on, h_family, DerivativeIdentity, QuadratureConfig};
use crate::profile::{check_exponent, gamma_max, rpow, OvalShape};

pub const SCAN_CSV_HEADER: &str = "gamma,M,Mprime_analytic,Mprime_fd,t1,t2";

/// Analytic vs finite-difference derivative tolerance (relative).
pub const FD_REL_TOL: f64 = 1e-4;
/// Rows closer than this fraction of `gamma_max` to either end skip the
/// finite-difference comparison.
pub const FD_EDGE_FRACTION: f64 = 1e-3;
pub const LIMIT_EPSILONS: [f64; 3] = [1e-4, 1e-6, 1e-8];
pub const LIMIT_REL_TOL: f64 = 1e-5;
pub const H_PRIME_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "Mprime_analytic")]
    pub m_prime_analytic: f64,
    #[serde(rename = "Mprime_fd")]
    pub m_prime_fd: f64,
    pub t1: f64,
    pub t2: f64,
}

fn map_rows<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// One scan row: `M`, the analytic `M'` and a central difference of `M`.
pub fn scan_row(gamma: f64, q: f64, cfg: &QuadratureConfig) -> Result<ScanRow> {
    let gmax = gamma_max(q)?;
    let shape = OvalShape::new(gamma, q)?;
    let m = flux_integral_on(&shape, cfg)?;
    let m_prime_analytic = DerivativeIdentity::new(shape)?.integrate(cfg)?;
    let h = (1e-6 * gmax).min(0.5 * gamma).min(0.5 * (gmax - gamma));
    let plus = flux_integral_on(&OvalShape::new(gamma + h, q)?, cfg)?;
    let minus = flux_integral_on(&OvalShape::new(gamma - h, q)?, cfg)?;
    Ok(ScanRow {
        gamma,
        m,
        m_prime_analytic,
        m_prime_fd: (plus - minus) / (2.0 * h),
        t1: shape.t1,
        t2: shape.t2,
    })
}

/// Rows at `gamma_k = gamma_max k / (n_grid + 1)`, `k = 1..=n_grid`.
pub fn scan(q: f64, n_grid: usize, cfg: &QuadratureConfig) -> Result<Vec<ScanRow>> {
    let gmax = gamma_max(q)?;
    if n_grid == 0 {
        return domain("scan needs at least one grid point");
    }
    map_rows(n_grid, |i| {
        scan_row(gmax * (i + 1) as f64 / (n_grid + 1) as f64, q, cfg)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub q: f64,
    pub rows: usize,
    pub passed: bool,
    pub strictly_decreasing: bool,
    pub analytic_negative: bool,
    pub fd_negative: bool,
    /// Largest relative analytic-vs-FD disagreement on interior rows.
    pub max_fd_rel_err: f64,
    pub fd_rows_compared: usize,
    pub m_first: f64,
    pub m_last: f64,
    pub first_failure: Option<String>,
}

/// Checks a scan: `M` strictly decreasing row to row, both derivative
/// estimates negative, and their agreement to `fd_rel_tol` on interior rows.
pub fn check_scan_rows(q: f64, rows: &[ScanRow], fd_rel_tol: f64) -> Result<ScanReport> {
    let gmax = gamma_max(q)?;
    let mut report = ScanReport {
        q,
        rows: rows.len(),
        passed: true,
        strictly_decreasing: true,
        analytic_negative: true,
        fd_negative: true,
        max_fd_rel_err: 0.0,
        fd_rows_compared: 0,
        m_first: rows.first().map_or(f64::NAN, |r| r.m),
        m_last: rows.last().map_or(f64::NAN, |r| r.m),
        first_failure: None,
    };
    let fail = |report: &mut ScanReport, msg: String| {
        report.passed = false;
        if report.first_failure.is_none() {
            report.first_failure = Some(msg);
        }
    };
    for (i, row) in rows.iter().enumerate() {
        if i > 0 && !(row.m < rows[i - 1].m) {
            report.strictly_decreasing = false;
            fail(
                &mut report,
                format!(
                    "row {i} (gamma = {}): M = {} does not decrease from {}",
                    row.gamma,
                    row.m,
                    rows[i - 1].m
                ),
            );
        }
        if !(row.m_prime_analytic < 0.0) {
            report.analytic_negative = false;
            fail(
                &mut report,
                format!(
                    "row {i} (gamma = {}): analytic M' = {} is not negative",
                    row.gamma, row.m_prime_analytic
                ),
            );
        }
        if !(row.m_prime_fd < 0.0) {
            report.fd_negative = false;
            fail(
                &mut report,
                format!(
                    "row {i} (gamma = {}): finite-difference M' = {} is not negative",
                    row.gamma, row.m_prime_fd
                ),
            );
        }
        let interior =
            row.gamma > FD_EDGE_FRACTION * gmax && row.gamma < (1.0 - FD_EDGE_FRACTION) * gmax;
        if interior {
            let rel = (row.m_prime_analytic - row.m_prime_fd).abs() / row.m_prime_analytic.abs();
            report.max_fd_rel_err = report.max_fd_rel_err.max(rel);
            report.fd_rows_compared += 1;
            if !(rel <= fd_rel_tol) {
                fail(
                    &mut report,
                    format!(
                        "row {i} (gamma = {}): analytic {} vs finite difference {} (rel {rel:.3e})",
                        row.gamma, row.m_prime_analytic, row.m_prime_fd
                    ),
                );
            }
        }
    }
    Ok(report)
}

/// The scan plus its checks; fails on the first offending row.
pub fn monotonicity_scan(q: f64, n_grid: usize, cfg: &QuadratureConfig) -> Result<Vec<ScanRow>> {
    if n_grid < 10 {
        return domain(format!(
            "monotonicity scan needs n_grid >= 10, got {n_grid}"
        ));
    }
    let rows = scan(q, n_grid, cfg)?;
    let report = check_scan_rows(q, &rows, FD_REL_TOL)?;
    match report.first_failure {
        Some(msg) => Err(Error::Verification(msg)),
        None => Ok(rows),
    }
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SCAN_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.gamma, r.m, r.m_prime_analytic, r.m_prime_fd, r.t1, r.t2
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub q: f64,
    /// `(epsilon, M((1 - epsilon) gamma_max))`.
    pub raw: Vec<(f64, f64)>,
    pub measured: f64,
    pub expected: f64,
    pub rel_err: f64,
    pub passed: bool,
}

/// Evaluates `M` at `(1 - eps) gamma_max` for the three `LIMIT_EPSILONS` and
/// extrapolates to `eps = 0` with the quadratic through them.
pub fn limit_report(q: f64, cfg: &QuadratureConfig) -> Result<LimitReport> {
    let gmax = gamma_max(q)?;
    let raw = LIMIT_EPSILONS
        .iter()
        .map(|&eps| {
            Ok((
                eps,
                flux_integral_on(&OvalShape::new((1.0 - eps) * gmax, q)?, cfg)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    // Lagrange extrapolation to eps = 0
    let measured: f64 = (0..3)
        .map(|i| {
            let (ei, mi) = raw[i];
            let w: f64 = (0..3)
                .filter(|&j| j != i)
                .map(|j| raw[j].0 / (raw[j].0 - ei))
                .product();
            w * mi
        })
        .sum();
    let expected = 2.0 * PI / (q + 2.0).sqrt();
    let rel_err = (measured - expected).abs() / expected;
    Ok(LimitReport {
        q,
        raw,
        measured,
        expected,
        rel_err,
        passed: rel_err <= LIMIT_REL_TOL,
    })
}

pub fn limit_check(q: f64, cfg: &QuadratureConfig) -> Result<LimitReport> {
    let r = limit_report(q, cfg)?;
    if r.passed {
        Ok(r)
    } else {
        Err(Error::Verification(format!(
            "limit of M at q = {q}: extrapolated {} vs {} (rel {:.3e}); raw {:?}",
            r.measured, r.expected, r.rel_err, r.raw
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPrimeReport {
    pub q: f64,
    pub gamma: f64,
    pub t1: f64,
    /// `h'(t1)` from the term-wise derivative.
    pub direct: f64,
    /// `-(q+1) (q t1 - (q+2))^2 / t1^2`.
    pub closed_form: f64,
    pub rel_err: f64,
    pub passed: bool,
}

/// Compares `h'(t1)` with its closed form. The error is relative to the closed
/// form, floored at `1e-6 * 4(q+1)` (the size of the leading term of `h'`) so
/// that the degenerate oval, where both vanish, is measured absolutely.
pub fn h_prime_report(gamma: f64, q: f64) -> Result<HPrimeReport> {
    let shape = OvalShape::new(gamma, q)?;
    let t1 = shape.t1;
    let direct = h_family(t1, gamma, q)?.dh;
    let closed_form = -(q + 1.0) * (q * t1 - (q + 2.0)).powi(2) / (t1 * t1);
    let floor = 1e-6 * 4.0 * (q + 1.0);
    let rel_err = (direct - closed_form).abs() / closed_form.abs().max(floor);
    Ok(HPrimeReport {
        q,
        gamma,
        t1,
        direct,
        closed_form,
        rel_err,
        passed: rel_err <= H_PRIME_REL_TOL && closed_form <= 0.0,
    })
}

pub fn h_prime_identity_check(gamma: f64, q: f64) -> Result<f64> {
    let r = h_prime_report(gamma, q)?;
    if r.passed {
        Ok(r.rel_err)
    } else {
        Err(Error::Verification(format!(
            "h'(t1) at q = {q}, gamma = {gamma}: direct {} vs closed form {} (rel {:.3e})",
            r.direct, r.closed_form, r.rel_err
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub q: f64,
    pub gamma: f64,
    pub t1: f64,
    pub t0: f64,
    pub t2: f64,
    pub beta: f64,
    pub h_beta_at_t0: f64,
    pub h_beta_at_t1: f64,
    pub h_beta_at_t2: f64,
    pub psi_at_t1: f64,
    pub psi_min: f64,
    pub h2_max: f64,
    pub integrand_max: f64,
    pub n_pts: usize,
    pub passed: bool,
    pub violations: Vec<String>,
}

/// Samples `H_beta`, `Psi`, `h''` and the identity's integrand at `n_pts`
/// Chebyshev points of `(t1, t2)` and at `t1, t0, t2`.
pub fn sign_structure(gamma: f64, q: f64, n_pts: usize) -> Result<SignReport> {
    check_exponent(q)?;
    if n_pts == 0 {
        return domain("sign structure check needs at least one sample point");
    }
    let shape = OvalShape::new(gamma, q)?;
    let id = DerivativeIdentity::new(shape)?;
    let (t1, t0, t2) = (shape.t1, shape.t0, shape.t2);
    // size of the constant term of H_beta
    let h_scale = |t: f64| 0.5 * q * (q - 2.0) * rpow(t, q / 2.0 - 2.0);
    let h_tol = |t: f64| 1e-10 * h_scale(t).max(1.0);

    let mut violations = Vec::new();
    let h_beta_at_t0 = id.h_beta(t0);
    if !(h_beta_at_t0.abs() <= h_tol(t0)) {
        violations.push(format!("H_beta(t0) = {h_beta_at_t0:e} is not zero"));
    }
    let (h_beta_at_t1, h_beta_at_t2) = (id.h_beta(t1), id.h_beta(t2));
    if !(h_beta_at_t1 < 0.0) {
        violations.push(format!("H_beta(t1) = {h_beta_at_t1:e} is not negative"));
    }
    if !(h_beta_at_t2 > 0.0) {
        violations.push(format!("H_beta(t2) = {h_beta_at_t2:e} is not positive"));
    }
    let psi_at_t1 = id.psi(t1);
    let mut psi_min = psi_at_t1.min(id.psi(t2));

    let (c, h) = (0.5 * (t1 + t2), 0.5 * (t2 - t1));
    let pts: Vec<f64> = (0..n_pts)
        .map(|j| c - h * ((j as f64 + 0.5) * PI / n_pts as f64).cos())
        .collect();
    let integrands: Vec<f64> = pts.iter().map(|&t| id.integrand(t)).collect();
    let integrand_scale = integrands.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut integrand_max = f64::NEG_INFINITY;
    let mut h2_max = f64::NEG_INFINITY;
    for (&t, &integrand) in pts.iter().zip(&integrands) {
        let hb = id.h_beta(t);
        let near_zero = hb.abs() <= h_tol(t);
        if t < t0 && !(hb < 0.0) && !near_zero {
            violations.push(format!("H_beta({t}) = {hb:e} should be negative (t < t0)"));
        }
        if t > t0 && !(hb > 0.0) && !near_zero {
            violations.push(format!("H_beta({t}) = {hb:e} should be positive (t > t0)"));
        }
        let psi = id.psi(t);
        psi_min = psi_min.min(psi);
        if !(psi > 0.0) {
            violations.push(format!("Psi({t}) = {psi:e} is not positive"));
        }
        let h2 = h_family(t, gamma, q)?.d2h;
        h2_max = h2_max.max(h2);
        if !(h2 < 0.0) {
            violations.push(format!("h''({t}) = {h2:e} is not negative"));
        }
        integrand_max = integrand_max.max(integrand);
        if !(integrand <= 1e-12 * integrand_scale.max(1.0)) {
            violations.push(format!("integrand({t}) = {integrand:e} is positive"));
        }
    }
    Ok(SignReport {
        q,
        gamma,
        t1,
        t0,
        t2,
        beta: id.beta,
        h_beta_at_t0,
        h_beta_at_t1,
        h_beta_at_t2,
        psi_at_t1,
        psi_min,
        h2_max,
        integrand_max,
        n_pts,
        passed: violations.is_empty(),
        violations,
    })
}

pub fn sign_structure_check(gamma: f64, q: f64, n_pts: usize) -> Result<SignReport> {
    let r = sign_structure(gamma, q, n_pts)?;
    if r.passed {
        Ok(r)
    } else {
        Err(Error::Verification(format!(
            "sign structure at q = {q}, gamma = {gamma}: {}",
            r.violations.join("; ")
        )))
    }
}

/// `gamma_max k / (count + 1)` for `k = 1..=count`.
pub fn gamma_grid(q: f64, count: usize) -> Result<Vec<f64>> {
    let gmax = gamma_max(q)?;
    Ok((1..=count)
        .map(|k| gmax * k as f64 / (count + 1) as f64)
        .collect())
}

/// All pointwise certificates (limit, sign structure, `h'(t1)`) for one `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub q: f64,
    pub passed: bool,
    pub limit: LimitReport,
    pub sign: Vec<SignReport>,
    pub h_prime: Vec<HPrimeReport>,
}

impl CertificateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only plain data")
    }
}

pub fn certify(
    q: f64,
    n_gamma: usize,
    n_pts: usize,
    cfg: &QuadratureConfig,
) -> Result<CertificateReport> {
    let limit = limit_report(q, cfg)?;
    let grid = gamma_grid(q, n_gamma)?;
    let sign = grid
        .iter()
        .map(|&g| sign_structure(g, q, n_pts))
        .collect::<Result<Vec<_>>>()?;
    let h_prime = grid
        .iter()
        .map(|&g| h_prime_report(g, q))
        .collect::<Result<Vec<_>>>()?;
    let passed = limit.passed && sign.iter().all(|s| s.passed) && h_prime.iter().all(|h| h.passed);
    Ok(CertificateReport {
        q,
        passed,
        limit,
        sign,
        h_prime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_targets() {
        let cfg = QuadratureConfig::default();
        for (q, expected) in [
            (4.0, 2.565_099_660_323_728),
            (6.0, 2.221_441_469_079_183),
            (3.0, 2.809_925_892_416_291),
        ] {
            let r = limit_check(q, &cfg).unwrap();
            assert!((r.expected - expected).abs() < 1e-12);
            assert!(r.rel_err <= LIMIT_REL_TOL, "{r:?}");
        }
    }

    #[test]
    fn h_prime_identity_examples() {
        assert!(h_prime_identity_check(0.1, 4.0).unwrap() <= 1e-9);
        let g = gamma_max(4.0).unwrap() * (1.0 - 1e-12);
        let r = h_prime_report(g, 4.0).unwrap();
        assert!(
            r.closed_form.abs() < 1e-10 && r.direct.abs() < 1e-10,
            "{r:?}"
        );
        assert!(r.closed_form <= 0.0);
    }

    #[test]
    fn sign_structure_examples() {
        let r = sign_structure_check(0.1, 4.0, 64).unwrap();
        assert!(r.h_beta_at_t0.abs() < 1e-10);
        let d1 = OvalShape::new(0.1, 4.0).unwrap().derivs(r.t1).d1;
        assert!((r.psi_at_t1 - d1 * d1).abs() < 1e-12);
        assert!(r.integrand_max <= 1e-12);
    }

    #[test]
    fn scan_rejects_short_grids_and_flags_bad_rows() {
        let cfg = QuadratureConfig::default();
        assert!(monotonicity_scan(4.0, 5, &cfg).is_err());
        let mut rows = scan(4.0, 12, &cfg).unwrap();
        assert!(check_scan_rows(4.0, &rows, FD_REL_TOL).unwrap().passed);
        rows[4].m = rows[3].m + 1e-9;
        let report = check_scan_rows(4.0, &rows, FD_REL_TOL).unwrap();
        assert!(!report.passed && !report.strictly_decreasing);
        assert!(report.first_failure.unwrap().starts_with("row 4"));
    }

    #[test]
    fn scan_csv_header() {
        let rows = scan(4.0, 2, &QuadratureConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,M,Mprime_analytic,Mprime_fd,t1,t2\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
