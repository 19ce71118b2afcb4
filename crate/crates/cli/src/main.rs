//! `crgeo`: deterministic verification reports for pseudohermitian geometry
//! on explicit chart models.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage error,
//! 3 model load or validation failure.

mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use crgeo_core::models::{self, ModelDecl};
use crgeo_core::riemann::GridSpec;
use crgeo_core::Report;
use runner::Config;

#[derive(Parser)]
#[command(
    name = "crgeo",
    about = "pointwise verification of Tanaka-Webster curvature, CR Yamabe soliton identities and Webster adapted metrics on explicit models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Built-in model name (heisenberg, heisenberg_gaussian, heisenberg_contact,
    /// cr_sphere, cr_sphere_trivial).
    #[arg(long, conflicts_with = "model_file")]
    model: Option<String>,
    /// Load a model declaration file instead of a built-in.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Halton sequence seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of sample points.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    /// Jet truncation order for the pipeline.
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Override every default tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Emit the report as JSON on stdout (default).
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Emit the report as a plain-text table on stdout.
    #[arg(long)]
    text: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Model parameter μ (shorthand for --param mu=VALUE).
    #[arg(long)]
    mu: Option<f64>,
    /// Set a model parameter, e.g. --param mu=1.5 (repeatable).
    #[arg(long, value_name = "NAME=VALUE")]
    param: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structure normalization invariants over Halton samples.
    Validate(Common),
    /// Tanaka-Webster curvature, torsion, Cartan tensor, R1 and Q-curvature.
    Curvature {
        #[command(flatten)]
        common: Common,
        /// Evaluate at one point "x,y,t" instead of over samples.
        #[arg(long, value_parser = parse_point)]
        point: Option<[f64; 3]>,
    },
    /// Verify the soliton equations of the model's declared potential.
    CheckSoliton(Common),
    /// Verify the Harnack identity of a contact-field candidate.
    Harnack(Common),
    /// Verify the conformal transformation laws for θ → e^{2g}θ.
    Conformal {
        #[command(flatten)]
        common: Common,
        /// Conformal exponent g as an expression; a small deterministic
        /// suite is used when omitted.
        #[arg(long)]
        g: Option<String>,
    },
    /// Ricci/scalar curvature of the Webster adapted metric h^λ.
    AdaptedMetric {
        #[command(flatten)]
        common: Common,
        /// λ values, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        lambda: Vec<f64>,
    },
    /// Level-surface second fundamental forms, Gaussian curvature and the
    /// isoparametric table of the potential.
    LevelSets {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Regular values of the potential, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        levels: Vec<f64>,
    },
    /// Scan for the critical set of the potential and classify the
    /// diffeomorphism type.
    CriticalSet {
        #[command(flatten)]
        common: Common,
        /// Grid cells per axis.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Critical-set membership threshold for |∇φ|.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Run the full verification suite.
    All {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if v.len() != 3 {
        return Err("expected three comma-separated coordinates".to_string());
    }
    Ok([v[0], v[1], v[2]])
}

fn load_model(common: &Common) -> Result<ModelDecl> {
    let mut decl = if let Some(path) = &common.model_file {
        models::load(path)?
    } else {
        let name = common.model.as_deref().unwrap_or("heisenberg");
        models::builtin(name, &[])?
    };
    let mut set = |name: &str, value: f64| -> Result<()> {
        if !decl.structure.params.set(name, value) {
            return Err(anyhow!(models::ModelError::UnknownParameter(name.to_string())));
        }
        Ok(())
    };
    if let Some(mu) = common.mu {
        set("mu", mu)?;
    }
    let pairs: Vec<(String, f64)> = common
        .param
        .iter()
        .map(|p| {
            let (n, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("--param expects NAME=VALUE, got `{p}`"))?;
            Ok((n.trim().to_string(), v.trim().parse::<f64>()?))
        })
        .collect::<Result<_>>()?;
    for (n, v) in pairs {
        set(&n, v)?;
    }
    Ok(decl)
}

fn config(common: &Common) -> Config {
    Config {
        seed: common.seed,
        samples: common.samples,
        order: common.order,
        tolerance: common.tolerance,
    }
}

fn emit(report: &Report, common: &Common) -> Result<()> {
    let body = if common.text {
        report.text_summary()
    } else {
        let mut s = serde_json::to_string_pretty(report)?;
        s.push('\n');
        s
    };
    match &common.output {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    // human-readable summary on stderr regardless of the stdout format
    eprint!("{}", report.text_summary());
    Ok(())
}

fn init_threads() {
    if let Ok(v) = std::env::var("CRGEO_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(cli: Cli) -> Result<(Report, Common)> {
    let (common, report) = match cli.command {
        Command::Validate(common) => {
            let decl = load_model(&common)?;
            let r = runner::run_validate(&decl, &config(&common))?;
            (common, r)
        }
        Command::Curvature { common, point } => {
            let decl = load_model(&common)?;
            let r = runner::run_curvature(&decl, &config(&common), point)?;
            (common, r)
        }
        Command::CheckSoliton(common) => {
            let decl = load_model(&common)?;
            let mu = common.mu.unwrap_or_else(|| runner::default_mu(&decl));
            let r = runner::run_check_soliton(&decl, &config(&common), mu)?;
            (common, r)
        }
        Command::Harnack(common) => {
            let decl = load_model(&common)?;
            let mu = common.mu.unwrap_or_else(|| runner::default_mu(&decl));
            let r = runner::run_harnack(&decl, &config(&common), mu)?;
            (common, r)
        }
        Command::Conformal { common, g } => {
            let decl = load_model(&common)?;
            let r = runner::run_conformal(&decl, &config(&common), g.as_deref())?;
            (common, r)
        }
        Command::AdaptedMetric { common, lambda } => {
            let decl = load_model(&common)?;
            let r = runner::run_adapted_metric(&decl, &config(&common), &lambda)?;
            (common, r)
        }
        Command::LevelSets { common, lambda, levels } => {
            let decl = load_model(&common)?;
            let mu = common.mu.unwrap_or_else(|| runner::default_mu(&decl));
            let r = runner::run_level_sets(&decl, &config(&common), mu, lambda, &levels)?;
            (common, r)
        }
        Command::CriticalSet { common, grid, epsilon } => {
            let decl = load_model(&common)?;
            let r = runner::run_critical_set(
                &decl,
                &config(&common),
                GridSpec { cells: grid, epsilon },
            )?;
            (common, r)
        }
        Command::All { common, lambda } => {
            let decl = load_model(&common)?;
            let mu = common.mu.unwrap_or_else(|| runner::default_mu(&decl));
            let r = runner::run_all(&decl, &config(&common), mu, lambda)?;
            (common, r)
        }
    };
    Ok((report, common))
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((report, common)) => {
            if let Err(e) = emit(&report, &common) {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
