mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use magsob::solver::SolverConfig;
use magsob::QuadratureConfig;
use serde_json::json;

use commands::{CliError, VerifyOptions};
use output::OutputEnvelope;

/// Sharp constants of the periodic magnetic Sobolev embedding.
#[derive(Debug, Parser)]
#[command(name = "msob", version)]
struct Cli {
    /// Emit one JSON object on stdout instead of key = value lines.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Quadrature {
    /// Initial Chebyshev node count for the period integrals.
    #[arg(long, default_value_t = 128)]
    nodes: usize,
    /// Relative tolerance of the node-doubling loop.
    #[arg(long, default_value_t = 1e-12)]
    quad_tol: f64,
}

impl Quadrature {
    fn config(&self) -> QuadratureConfig {
        QuadratureConfig {
            n_nodes: self.nodes,
            rel_tol: self.quad_tol,
            ..QuadratureConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct Solver {
    /// Tolerance on |M(gamma) - 2 pi |alpha||.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[command(flatten)]
    quad: Quadrature,
}

impl Solver {
    fn config(&self, extrapolate: bool) -> SolverConfig {
        SolverConfig {
            quad: self.quad.config(),
            tol: self.tol,
            extrapolate,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sharp constant mu_q(alpha) and, above the threshold, the oval parameters.
    Solve {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        /// At |alpha| = 1/2, extrapolate along gamma -> 0 instead of failing.
        #[arg(long)]
        extrapolate: bool,
        #[command(flatten)]
        solver: Solver,
    },
    /// Tabulate M, its analytic derivative and a finite difference as CSV.
    Scan {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        quad: Quadrature,
    },
    /// Sample the minimizer on a uniform grid as CSV.
    Minimizer {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: Solver,
    },
    /// Cross-check the solver against direct minimization of the quotient.
    Verify {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = magsob::oracle::DEFAULT_SEED)]
        seed: u64,
        /// Largest accepted relative gap between the two estimates.
        #[arg(long, default_value_t = 1e-4)]
        gap_tol: f64,
        #[arg(long, default_value_t = 4000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        grad_tol: f64,
        /// Grid size for the discrete second-variation eigenvalue.
        #[arg(long, default_value_t = 256)]
        margin_n: usize,
        #[command(flatten)]
        solver: Solver,
    },
    /// Critical flux 1/sqrt(q+2) and gamma_max(q).
    Threshold {
        #[arg(long)]
        q: f64,
    },
    /// Limit, sign-structure and h'(t1) certificates for one exponent.
    Certify {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 20)]
        n_gamma: usize,
        #[arg(long, default_value_t = 64)]
        n_pts: usize,
        #[command(flatten)]
        quad: Quadrature,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Scan { .. } => "scan",
            Command::Minimizer { .. } => "minimizer",
            Command::Verify { .. } => "verify",
            Command::Threshold { .. } => "threshold",
            Command::Certify { .. } => "certify",
        }
    }
}

fn run(command: &Command) -> Result<OutputEnvelope, CliError> {
    match command {
        Command::Solve {
            q,
            alpha,
            extrapolate,
            solver,
        } => commands::solve(*q, *alpha, &solver.config(*extrapolate)),
        Command::Scan { q, n, out, quad } => {
            commands::scan_cmd(*q, *n, out.as_ref(), &quad.config())
        }
        Command::Minimizer {
            q,
            alpha,
            n,
            out,
            solver,
        } => commands::minimizer(*q, *alpha, *n, out.as_ref(), &solver.config(false)),
        Command::Verify {
            q,
            alpha,
            n,
            seed,
            gap_tol,
            max_iters,
            grad_tol,
            margin_n,
            solver,
        } => {
            let opts = VerifyOptions {
                n: *n,
                seed: *seed,
                gap_tol: *gap_tol,
                max_iters: *max_iters,
                grad_tol: *grad_tol,
                margin_n: *margin_n,
            };
            commands::verify(*q, *alpha, &opts, &solver.config(false))
        }
        Command::Threshold { q } => commands::threshold(*q),
        Command::Certify {
            q,
            n_gamma,
            n_pts,
            quad,
        } => commands::certify_cmd(*q, *n_gamma, *n_pts, &quad.config()),
    }
}

fn emit(env: &OutputEnvelope, json: bool) {
    if json {
        println!("{}", env.to_json());
    } else {
        print!("{}", env.to_human());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(env) => {
            emit(&env, cli.json);
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = err.exit_code();
            match &err {
                CliError::Failed(env, _) => emit(env, cli.json),
                _ if cli.json => {
                    let env = OutputEnvelope::new(
                        cli.command.name(),
                        json!(null),
                        json!(null),
                        json!({ "error": { "kind": err.kind(), "message": err.to_string() } }),
                    );
                    emit(&env, true);
                }
                _ => {}
            }
            eprintln!("msob: {err}");
            ExitCode::from(code)
        }
    }
}
