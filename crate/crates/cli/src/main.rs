//! `cce`: run the analysis pipeline on a model from the library.
//!
//! Exit status: 0 when every gate passes, 1 on a failed gate or a module
//! error, 2 when the command line or configuration cannot be parsed.

mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cce_core::models::ModelSpec;
use cce_core::pipeline::{
    parse_ladder, run_analyze, run_check, run_curvature, run_volume, write_outputs, Fault, Outcome, Overrides,
    RunConfig,
};
use cce_core::Error;

#[derive(Parser, Debug)]
#[command(name = "cce", version, about = "Renormalized volume, compactification and curvature integrals of model Einstein metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full pipeline: normal form, volume, compactification, integrals, topology report.
    Analyze(Common),
    /// Invariant suites only (curvature symmetries, Bochner, conformal invariance, combined formulas).
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Renormalized volume fit only.
    Volume(Common),
    /// Pointwise curvature packet.
    Curvature {
        #[command(flatten)]
        common: Common,
        /// Chart coordinates, comma separated; defaults to the centre of the chart box.
        #[arg(long)]
        point: Option<String>,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML run configuration with [model], [numerics] and [outputs] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model family, e.g. hyperbolic, ads-schwarzschild, round-sphere-closed.
    #[arg(long)]
    model: Option<String>,
    /// Main parameter of the family (mass, amplitude, radius or nut charge).
    #[arg(long)]
    m: Option<f64>,
    /// Epsilon ladder, comma separated and strictly decreasing.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    tol_quadrature: Option<f64>,
    #[arg(long)]
    tol_fit: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure before any computation: exit 2.
struct UsageError(String);

impl Common {
    fn config(&self) -> Result<RunConfig, UsageError> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p).map_err(|e| UsageError(e.to_string()))?,
            None => RunConfig::default(),
        };
        let ladder = match &self.ladder {
            Some(l) => Some(parse_ladder(l).map_err(|e| UsageError(e.to_string()))?),
            None => None,
        };
        let o = Overrides {
            model: self.model.clone(),
            m: self.m,
            ladder,
            tol_quadrature: self.tol_quadrature,
            tol_fit: self.tol_fit,
            out: self.out.clone(),
        };
        base.apply(&o).map_err(|e| UsageError(e.to_string()))
    }

    fn model_given(&self) -> bool {
        self.model.is_some() || self.config.is_some()
    }
}

fn parse_point(text: &str) -> Result<Vec<f64>, UsageError> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| UsageError(format!("bad coordinate '{t}': {e}"))))
        .collect()
}

fn finish(cfg: &RunConfig, stem: &str, outcome: cce_core::Result<Outcome>) -> ExitCode {
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => return module_error(&e),
    };
    let written = match write_outputs(&outcome, &cfg.outputs, stem) {
        Ok(w) => w,
        Err(e) => return module_error(&e),
    };
    print!("{}", summary::render(&outcome.report));
    for p in written {
        println!("wrote {}", p.display());
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn module_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<ExitCode, UsageError> {
    Ok(match cli.command {
        Command::Analyze(c) => {
            let cfg = c.config()?;
            let stem = cfg.model.name();
            finish(&cfg, stem, run_analyze(&cfg))
        }
        Command::Volume(c) => {
            let cfg = c.config()?;
            let stem = format!("{}_volume", cfg.model.name());
            finish(&cfg, &stem, run_volume(&cfg))
        }
        Command::Curvature { common, point } => {
            let cfg = common.config()?;
            let point = point.as_deref().map(parse_point).transpose()?;
            let stem = format!("{}_curvature", cfg.model.name());
            finish(&cfg, &stem, run_curvature(&cfg, point.as_deref()))
        }
        Command::Check { common, inject_fault } => {
            let cfg = common.config()?;
            let fault = match inject_fault.as_deref() {
                Some(name) => Some(Fault::from_name(name).ok_or_else(|| UsageError(format!("unknown fault '{name}'")))?),
                None => None,
            };
            let models = if common.model_given() { vec![cfg.model.clone()] } else { ModelSpec::library() };
            match run_check(&models, &cfg.numerics, fault) {
                Ok(out) => {
                    if cfg.outputs.report {
                        let path = cfg.outputs.dir.join("check_report.txt");
                        let written = std::fs::create_dir_all(&cfg.outputs.dir)
                            .map_err(Error::from)
                            .and_then(|_| out.report.write_to(std::fs::File::create(&path)?));
                        if let Err(e) = written {
                            return Ok(module_error(&e));
                        }
                        print!("{}", summary::render(&out.report));
                        println!("wrote {}", path.display());
                    } else {
                        print!("{}", summary::render(&out.report));
                    }
                    if out.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => module_error(&e),
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
