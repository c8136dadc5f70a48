//! `twistmap`: rotation intervals, locking certificates, periodic orbits and
//! saddle manifolds for torus twist maps.
//!
//! Exit codes: 0 success (certify: free curve), 1 climbing path or invalid
//! certificate, 2 indeterminate, 64 configuration error, 65 module failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_CONFIG: u8 = 64;
pub const EXIT_MODULE: u8 = 65;

#[derive(Debug, Parser)]
#[command(name = "twistmap", version, about = "Rotation intervals and mode-locking for torus twist maps")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Map definition text, e.g. "k=1; phi1=0.1 sin(2 pi x); t=0".
    #[arg(long, global = true)]
    pub map: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: TWISTMAP_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled and certified vertical rotation interval.
    Interval(IntervalArgs),
    /// Pseudo-orbit dichotomy for f^q - (0, p): free curve, climbing path or
    /// indeterminate.
    Certify(CertifyArgs),
    /// Re-validate a certificate file from scratch.
    Validate(ValidateArgs),
    /// Rotation interval along the family f + (0, t).
    Tongues(TonguesArgs),
    /// Periodic orbit census with fixed point indices.
    Orbits(OrbitsArgs),
    /// Saddle manifolds, crossings with translates, and an SVG picture.
    Manifolds(ManifoldsArgs),
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub qmax: Option<u32>,
    #[arg(long)]
    pub bound_qmax: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<i64>,
    #[arg(long)]
    pub q: Option<u32>,
    /// Decreasing eps ladder, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub cell_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub certificate: PathBuf,
    /// Curve samples relative to the default validation density.
    #[arg(long, default_value_t = 4)]
    pub density: usize,
}

#[derive(Debug, Args)]
pub struct TonguesArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub qmax: Option<u32>,
    /// Try to certify locking at plateau midpoints.
    #[arg(long)]
    pub lock: bool,
}

#[derive(Debug, Args)]
pub struct OrbitsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<i64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ManifoldsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<i64>,
    #[arg(long)]
    pub q: Option<u32>,
    #[arg(long)]
    pub saddle: Option<usize>,
    #[arg(long)]
    pub arclength: Option<f64>,
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Certify a free curve and draw its forward iterates.
    #[arg(long)]
    pub curve: bool,
}

/// A failure and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Module(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Module(_) => EXIT_MODULE,
        }
    }
}

pub trait Classify<T> {
    fn config(self) -> Result<T, Failure>;
    fn module(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn config(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Config(e.into()))
    }
    fn module(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Module(e.into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let (kind, err) = match &f {
                Failure::Config(e) => ("configuration error", e),
                Failure::Module(e) => ("error", e),
            };
            eprintln!("twistmap: {kind}: {err:#}");
            ExitCode::from(f.code())
        }
    }
}
