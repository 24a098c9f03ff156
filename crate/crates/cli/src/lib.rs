//! Command-line driver: config parsing, orchestration and reproducible output directories.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{CommandFactory, Parser, ValueEnum};

pub use config::{parse_config, parse_config_with_env, CommandOptions, Config};
pub use error::CliError;
pub use output::{fmt_f64, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Constants,
    SpectralCheck,
    SemigroupCheck,
    ResidualStudy,
    Simulate,
    Shoot,
    Monitor,
    Analyze,
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::SpectralCheck => "spectral-check",
            Command::SemigroupCheck => "semigroup-check",
            Command::ResidualStudy => "residual-study",
            Command::Simulate => "simulate",
            Command::Shoot => "shoot",
            Command::Monitor => "monitor",
            Command::Analyze => "analyze",
            Command::Stability => "stability",
        }
    }
}

/// Blow-up laboratory for u_t = Δu + μ|∇u|^q + |u|^{p−1}u.
#[derive(Debug, Parser)]
#[command(name = "critblow", version)]
pub struct Args {
    pub command: Command,
    /// key=value configuration file (defaults apply to missing keys)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// worker threads for independent runs
    #[arg(long)]
    pub threads: Option<usize>,
    /// continue a simulation from its last checkpoint
    #[arg(long)]
    pub resume: bool,
}

/// Loads the config named by `args` with `CRITBLOW_*` overrides from the process environment.
pub fn load_config(args: &Args) -> Result<Config, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => String::new(),
    };
    parse_config_with_env(&text, std::env::vars())
}

/// Runs one command to completion; returns the text meant for stdout.
pub fn run_command(command: Command, cfg: &Config, out_dir: &std::path::Path, resume: bool) -> Result<String, CliError> {
    let start = Instant::now();
    let out = OutputDir::create(out_dir)?;
    let text = match command {
        Command::Constants => commands::constants(cfg, &out),
        Command::SpectralCheck => commands::spectral_check(cfg, &out),
        Command::SemigroupCheck => commands::semigroup_check(cfg, &out),
        Command::ResidualStudy => commands::residual_study(cfg, &out),
        Command::Simulate => commands::simulate(cfg, &out, resume),
        Command::Shoot => commands::shoot(cfg, &out),
        Command::Monitor => commands::monitor(cfg, &out),
        Command::Analyze => commands::analyze(cfg, &out),
        Command::Stability => commands::stability(cfg, &out),
    }?;
    out.write_manifest(command.name(), cfg, start.elapsed().as_secs_f64())?;
    Ok(text)
}

/// Full entry point: parse arguments, run, report; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if e.kind() == clap::error::ErrorKind::InvalidValue {
                eprintln!("\n{}", Args::command().render_usage());
            }
            return code;
        }
    };
    match execute(&args) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(args: &Args) -> Result<String, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load_config(args)?;
    run_command(args.command, &cfg, &args.out, args.resume)
}
