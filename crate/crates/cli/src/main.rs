#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{InvalidInput, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fraclap",
    version,
    about = "Fractional p-Laplacian eigenpairs and their p -> infinity limits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the principal eigenpair at a single p.
    Solve(RunArgs),
    /// Solve over an increasing list of p and check the limit statements.
    Sweep(RunArgs),
    /// Emit the cone pair and its closed-form identities.
    Cones(RunArgs),
    /// Residuals of the limit equations on saved eigenpairs.
    ViscosityCheck(ViscosityArgs),
    /// Oracle and gradient checks.
    Selftest,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; overrides the configuration.
    #[arg(long, env = "FRACLAP_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long, short)]
    config: PathBuf,
    #[command(flatten)]
    out: OutArgs,
    /// Exponent for `solve` and `cones`.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated exponents, e.g. `8,16,32`.
    #[arg(long, value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    /// Cells per side of the grid.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Solver convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Tolerance of the limit checks of `sweep`.
    #[arg(long)]
    limit_tol: Option<f64>,
}

#[derive(Args)]
struct ViscosityArgs {
    /// Directory with `pair_p*.json` files written by `sweep`.
    #[arg(long)]
    input: PathBuf,
    /// Optional configuration for `layer_k` and sign conventions.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Boundary layer width, in cells, excluded from the residuals.
    #[arg(long)]
    layer_k: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

fn load(path: &Path) -> Result<RunConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    RunConfig::from_json(&text)
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = load(&self.config)?;
        if let Some(p) = self.p {
            c.problem.p = Some(p);
        }
        if let Some(l) = &self.p_list {
            c.sweep.p_list = l.clone();
        }
        if let Some(n) = self.n {
            c.domain.n = n;
        }
        if let Some(m) = self.max_iter {
            c.solver.max_iter = m;
        }
        if let Some(t) = self.tol {
            c.solver.tol = t;
        }
        if let Some(t) = self.limit_tol {
            c.checks.limit_tol = t;
        }
        if let Some(o) = &self.out.out {
            c.output.directory = o.clone();
        }
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let bad = |e: anyhow::Error| anyhow::Error::new(InvalidInput(e));
    match cli.command {
        Command::Solve(a) => {
            let c = a.config().map_err(bad)?;
            commands::solve(&c, &c.output.directory)
        }
        Command::Sweep(a) => {
            let c = a.config().map_err(bad)?;
            commands::sweep(&c, &c.output.directory)
        }
        Command::Cones(a) => {
            let c = a.config().map_err(bad)?;
            commands::cones(&c, &c.output.directory)
        }
        Command::ViscosityCheck(a) => {
            let mut c = match &a.config {
                Some(p) => Some(load(p).map_err(bad)?),
                None => None,
            };
            if let (Some(k), Some(c)) = (a.layer_k, c.as_mut()) {
                c.checks.layer_k = k;
            }
            let out = a
                .out
                .out
                .clone()
                .or_else(|| c.as_ref().map(|c| c.output.directory.join("viscosity")))
                .unwrap_or_else(|| a.input.join("viscosity"));
            if c.is_none() {
                if let Some(k) = a.layer_k {
                    let mut d = RunConfig::from_json(DEFAULT_STUB).expect("stub parses");
                    d.checks.layer_k = k;
                    return commands::viscosity_check(Some(&d), &a.input, &out);
                }
            }
            commands::viscosity_check(c.as_ref(), &a.input, &out)
        }
        Command::Selftest => commands::selftest(),
    }
}

// only the checks block of this stub is read
const DEFAULT_STUB: &str = r#"{"domain": {"dim": 1, "bounds": [0, 1], "n": 8},
    "problem": {"variant": "P1", "s": 0.5, "t": 0.5, "theta": 0.5}}"#;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InvalidInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
