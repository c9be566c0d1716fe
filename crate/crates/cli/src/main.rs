use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lis_core::sim::{
    dlis_cdf_tables, run_clis_sweep, run_response_curves, sweep_table, validate, Associator, CheckStatus, SimConfig,
    SimError, Table,
};

/// Link-level simulator for large-intelligent-surface uplinks.
#[derive(Parser)]
#[command(name = "lis-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aperture response against chi and against radius.
    ResponseCurve(Common),
    /// Mean centralized sum SE and its bound over the radius and wavelength grid.
    ClisSweep(Common),
    /// Per-user SE distribution of the distributed layout.
    DlisCdf(Common),
    /// Closed-form and model-validity diagnostics; exits 1 if any check fails.
    Validate(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssocArg {
    Lua,
    Nearest,
    Random,
}

impl From<AssocArg> for Associator {
    fn from(a: AssocArg) -> Self {
        match a {
            AssocArg::Lua => Associator::Lua,
            AssocArg::Nearest => Associator::Nearest,
            AssocArg::Random => Associator::Random,
        }
    }
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long = "users", value_name = "K")]
    users: Option<usize>,
    #[arg(long = "units", value_name = "M")]
    units: Option<usize>,
    /// Centralized radius in meters. For clis-sweep and response-curve it
    /// replaces the radius grid.
    #[arg(long = "radius", value_name = "R")]
    radius: Option<f64>,
    /// Wavelength in meters. For clis-sweep it replaces the wavelength grid.
    #[arg(long = "wavelength", value_name = "L")]
    wavelength: Option<f64>,
    #[arg(long = "rho-db", value_name = "X", allow_hyphen_values = true)]
    rho_db: Option<f64>,
    #[arg(long = "runs", value_name = "N")]
    runs: Option<usize>,
    /// Association policy for dlis-cdf; all three when omitted.
    #[arg(long, value_enum)]
    associator: Option<AssocArg>,
    #[arg(long = "area-parity", value_enum)]
    area_parity: Option<Switch>,
}

impl Common {
    fn config(&self, command: &Command) -> Result<SimConfig, SimError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
                SimConfig::from_toml(&text)?
            }
            None => SimConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.users {
            cfg.users = v;
        }
        if let Some(v) = self.units {
            cfg.units = v;
        }
        if let Some(v) = self.radius {
            cfg.radius = v;
            match command {
                Command::ClisSweep(_) => cfg.sweep.radii = vec![v],
                Command::ResponseCurve(_) => cfg.response.radii = vec![v],
                _ => {}
            }
        }
        if let Some(v) = self.wavelength {
            cfg.wavelength = v;
            if let Command::ClisSweep(_) = command {
                cfg.sweep.wavelengths = vec![v];
            }
        }
        if let Some(v) = self.rho_db {
            cfg.rho_db = v;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.area_parity {
            cfg.area_parity = matches!(v, Switch::On);
            if cfg.area_parity {
                cfg.unit_radius = None;
            }
        }
        cfg.check()?;
        Ok(cfg)
    }
}

fn write(dir: &Path, name: &str, table: &Table) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {} rows to {}", table.len(), path.display());
    Ok(())
}

enum Failure {
    Config(String),
    Validation,
    Other(anyhow::Error),
}

fn run(command: &Command) -> Result<(), Failure> {
    let common = match command {
        Command::ResponseCurve(c) | Command::ClisSweep(c) | Command::DlisCdf(c) | Command::Validate(c) => c,
    };
    let cfg = common.config(command).map_err(|e| Failure::Config(e.to_string()))?;
    let sim = |e: SimError| match e {
        SimError::Config(msg) => Failure::Config(msg),
        other => Failure::Other(other.into()),
    };
    let out = &common.out;
    fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(Failure::Other)?;
    match command {
        Command::ResponseCurve(_) => {
            let curves = run_response_curves(&cfg).map_err(sim)?;
            write(out, "response_vs_chi.csv", &curves.versus_chi).map_err(Failure::Other)?;
            write(out, "response_vs_radius.csv", &curves.versus_radius).map_err(Failure::Other)?;
        }
        Command::ClisSweep(_) => {
            let points = run_clis_sweep(&cfg).map_err(sim)?;
            write(out, "clis_sweep.csv", &sweep_table(&points)).map_err(Failure::Other)?;
        }
        Command::DlisCdf(_) => {
            let associators: Vec<Associator> = match common.associator {
                Some(a) => vec![a.into()],
                None => Associator::ALL.to_vec(),
            };
            let (cdf, summary) = dlis_cdf_tables(&cfg, &associators).map_err(sim)?;
            write(out, "dlis_cdf.csv", &cdf).map_err(Failure::Other)?;
            write(out, "dlis_summary.csv", &summary).map_err(Failure::Other)?;
        }
        Command::Validate(_) => {
            let report = validate(&cfg).map_err(sim)?;
            write(out, "validation.csv", &report.table()).map_err(Failure::Other)?;
            for c in &report.checks {
                if c.status != CheckStatus::Pass {
                    eprintln!("{}: {} ({})", c.name, c.status, c.detail);
                }
            }
            if !report.passed() {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
