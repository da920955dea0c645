use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use magsob::lemma_verify::{certify, check_scan_rows, scan, write_scan_csv, FD_REL_TOL};
use magsob::oracle::{minimize_rayleigh, second_order_margin, OracleConfig, Start};
use magsob::period_integrals::flux_integral;
use magsob::profile::gamma_max;
use magsob::reconstruct::{constant_sample, residuals, sample_minimizer};
use magsob::solver::{critical_flux, sharp_constant, Regime, SharpConstant, SolverConfig};
use magsob::{Error, QuadratureConfig};
use serde_json::{json, Value};

use crate::output::{object, OutputEnvelope};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an unusable output path.
    Usage(String),
    Core(Error),
    /// The command ran but a check failed; the envelope is still reported.
    Failed(Box<OutputEnvelope>, String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e {
                Error::Domain(_) | Error::Precondition(_) | Error::BoundaryFlux => 2,
                Error::Convergence { .. } | Error::NoSolution { .. } => 3,
                Error::Verification(_) => 4,
            },
            CliError::Failed(..) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            2 => "domain",
            3 => "convergence",
            _ => "verification",
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Failed(_, msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult = Result<OutputEnvelope, CliError>;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn write_to(
    path: Option<&PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), CliError> {
    let res = match path {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w).and_then(|_| w.flush())
        }
        None => write(&mut io::stdout().lock()),
    };
    res.map_err(|e| CliError::Usage(format!("write failed: {e}")))
}

fn quad_params(quad: &QuadratureConfig) -> Value {
    json!({
        "n_nodes": quad.n_nodes,
        "n_legendre": quad.n_legendre,
        "rel_tol": quad.rel_tol,
        "max_nodes": quad.max_nodes,
    })
}

fn solution_fields(sc: &SharpConstant) -> Vec<(&'static str, Value)> {
    let mut fields = vec![
        ("regime", json!(sc.regime.as_str())),
        ("alpha", json!(sc.alpha)),
        ("mu", json!(sc.mu)),
        ("extrapolated", json!(sc.extrapolated)),
    ];
    if let Some(s) = &sc.detail {
        fields.extend([
            ("gamma", json!(s.gamma)),
            ("a", json!(s.a)),
            ("lambda", json!(s.lambda)),
            ("c", json!(s.c)),
            ("r1", json!(s.r1)),
            ("r2", json!(s.r2)),
            ("t1", json!(s.t1)),
            ("t2", json!(s.t2)),
        ]);
    }
    fields
}

pub fn solve(q: f64, alpha: f64, cfg: &SolverConfig) -> CmdResult {
    let sc = sharp_constant(q, alpha, cfg)?;
    let mut diagnostics = vec![];
    if let Some(s) = &sc.detail {
        let m = flux_integral(s.gamma, q, &cfg.quad)?;
        diagnostics.push(("flux_residual", json!((m - 2.0 * PI * s.alpha.abs()).abs())));
    }
    Ok(OutputEnvelope::new(
        "solve",
        json!({
            "q": q,
            "alpha": alpha,
            "tol": cfg.tol,
            "max_iter": cfg.max_iter,
            "extrapolate": cfg.extrapolate,
            "quadrature": quad_params(&cfg.quad),
        }),
        object(solution_fields(&sc)),
        object(diagnostics),
    ))
}

pub fn scan_cmd(q: f64, n: usize, out: Option<&PathBuf>, quad: &QuadratureConfig) -> CmdResult {
    if n == 0 {
        return Err(Error::Domain("scan needs n >= 1".into()).into());
    }
    let rows = scan(q, n, quad)?;
    let report = check_scan_rows(q, &rows, FD_REL_TOL)?;
    write_to(out, |w| write_scan_csv(&rows, w))?;
    let env = OutputEnvelope::new(
        "scan",
        json!({
            "q": q,
            "n": n,
            "out": out.map(|p| p.display().to_string()),
            "fd_rel_tol": FD_REL_TOL,
            "quadrature": quad_params(quad),
        }),
        json!({
            "rows": report.rows,
            "m_first": report.m_first,
            "m_last": report.m_last,
            "strictly_decreasing": report.strictly_decreasing,
            "analytic_negative": report.analytic_negative,
            "fd_negative": report.fd_negative,
        }),
        json!({
            "max_fd_rel_err": report.max_fd_rel_err,
            "fd_rows_compared": report.fd_rows_compared,
            "first_failure": report.first_failure,
        }),
    );
    match report.first_failure {
        Some(msg) => Err(CliError::Failed(Box::new(env), msg)),
        None => Ok(env),
    }
}

pub fn minimizer(
    q: f64,
    alpha: f64,
    n: usize,
    out: Option<&PathBuf>,
    cfg: &SolverConfig,
) -> CmdResult {
    let sc = sharp_constant(q, alpha, cfg)?;
    let mut warnings = Vec::new();
    let sample = match &sc.detail {
        Some(sol) => sample_minimizer(sol, n, &cfg.quad)?,
        None => {
            warnings.push(format!(
                "{} regime: the minimizer is the constant function",
                sc.regime.as_str()
            ));
            constant_sample(q, sc.alpha, n)?
        }
    };
    write_to(out, |w| sample.write_csv(w))?;
    let r = residuals(&sample);
    let mut result = solution_fields(&sc);
    let (r_min, r_max) = sample
        .r
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    result.extend([
        ("points", json!(sample.len())),
        ("r_at_0", json!(sample.r[0])),
        ("r_at_pi", json!(sample.r[n / 2])),
        ("r_min", json!(r_min)),
        ("r_max", json!(r_max)),
    ]);
    Ok(OutputEnvelope::new(
        "minimizer",
        json!({
            "q": q,
            "alpha": alpha,
            "n": n,
            "out": out.map(|p| p.display().to_string()),
            "tol": cfg.tol,
            "quadrature": quad_params(&cfg.quad),
        }),
        object(result),
        json!({
            "residuals": {
                "norm": r.norm_residual,
                "flux": r.flux_residual,
                "ode": r.ode_residual,
                "energy": r.energy,
                "two_pi_lambda": 2.0 * PI * sample.lambda,
                "energy_rel_err": r.energy_rel_err,
                "first_integral_drift": r.first_integral_drift,
                "rayleigh_rel_err": r.rayleigh_rel_err,
            },
            "warnings": warnings,
        }),
    ))
}

pub struct VerifyOptions {
    pub n: usize,
    pub seed: u64,
    pub gap_tol: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub margin_n: usize,
}

pub fn verify(q: f64, alpha: f64, opts: &VerifyOptions, cfg: &SolverConfig) -> CmdResult {
    let sc = sharp_constant(q, alpha, cfg)?;
    let oracle_cfg = OracleConfig {
        n: opts.n,
        max_iters: opts.max_iters,
        grad_tol: opts.grad_tol,
        starts: vec![Start::Constant, Start::Modulated, Start::Random(opts.seed)],
    };
    let oracle = minimize_rayleigh(q, sc.alpha, &oracle_cfg)?;
    let margin = second_order_margin(q, sc.alpha, opts.margin_n)?;
    let gap = (oracle.mu_est - sc.mu).abs() / sc.mu;
    let maxima = magsob::oracle::count_local_maxima(&oracle.modulus());
    let env = OutputEnvelope::new(
        "verify",
        json!({
            "q": q,
            "alpha": alpha,
            "n": opts.n,
            "seed": opts.seed,
            "gap_tol": opts.gap_tol,
            "max_iters": opts.max_iters,
            "grad_tol": opts.grad_tol,
            "margin_n": opts.margin_n,
            "tol": cfg.tol,
        }),
        json!({
            "regime": sc.regime.as_str(),
            "mu_solver": sc.mu,
            "mu_oracle": oracle.mu_est,
            "relative_gap": gap,
            "modulus_maxima": maxima,
            "second_order_margin": margin.analytic,
            "second_order_margin_discrete": margin.discrete,
        }),
        json!({
            "best_start": oracle.best_start,
            "runs": oracle.runs,
            "margin_agreement": margin.agreement(),
        }),
    );
    if gap <= opts.gap_tol {
        Ok(env)
    } else {
        let msg = format!(
            "solver and oracle disagree: relative gap {gap:.3e} > {:.1e}",
            opts.gap_tol
        );
        Err(CliError::Failed(Box::new(env), msg))
    }
}

pub fn threshold(q: f64) -> CmdResult {
    let alpha_star = critical_flux(q)?;
    let gmax = gamma_max(q)?;
    Ok(OutputEnvelope::new(
        "threshold",
        json!({ "q": q }),
        json!({
            "alpha_star": alpha_star,
            "gamma_max": gmax,
            "mu_at_threshold": magsob::solver::constant_value(q, alpha_star),
            "limit_of_m": 2.0 * PI / (q + 2.0).sqrt(),
        }),
        json!({ "regime_at_threshold": Regime::Critical.as_str() }),
    ))
}

pub fn certify_cmd(q: f64, n_gamma: usize, n_pts: usize, quad: &QuadratureConfig) -> CmdResult {
    let report = certify(q, n_gamma, n_pts, quad)?;
    let failures: Vec<String> = report
        .sign
        .iter()
        .flat_map(|s| {
            s.violations
                .iter()
                .map(move |v| format!("gamma {}: {v}", s.gamma))
        })
        .chain(
            report
                .h_prime
                .iter()
                .filter(|h| !h.passed)
                .map(|h| format!("gamma {}: h'(t1) rel err {:.3e}", h.gamma, h.rel_err)),
        )
        .chain(
            (!report.limit.passed).then(|| format!("limit rel err {:.3e}", report.limit.rel_err)),
        )
        .collect();
    let passed = report.passed;
    let env = OutputEnvelope::new(
        "certify",
        json!({
            "q": q,
            "n_gamma": n_gamma,
            "n_pts": n_pts,
            "quadrature": quad_params(quad),
        }),
        serde_json::to_value(&report).expect("plain data"),
        json!({ "failures": failures }),
    );
    if passed {
        Ok(env)
    } else {
        let msg = failures.first().cloned().unwrap_or_default();
        Err(CliError::Failed(Box::new(env), msg))
    }
}
