//! `optocool`: runs pulse, cooling and comparison scenarios from TOML files
//! and writes CSV tables plus a JSON run manifest.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{out_dir, ConfigFile, Overrides};
use crate::error::CliError;
use crate::output::{Artifacts, Manifest};

#[derive(Debug, Parser)]
#[command(name = "optocool", version, about = "STIRAP-assisted optomechanical cooling scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Drop the counter-rotating terms.
    #[arg(long, global = true, visible_alias = "no-counter-rotating")]
    rwa: bool,

    #[arg(long, global = true, value_name = "N")]
    cycles: Option<usize>,

    /// Truncation window `t0,t1` in the symmetric time frame.
    #[arg(long, global = true, value_name = "T0,T1", value_parser = pair, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,

    /// Write all twelve second moments to trajectory files.
    #[arg(long, global = true)]
    full_moments: bool,

    /// Integrator tolerances `rel,abs`.
    #[arg(long, global = true, value_name = "REL,ABS", value_parser = pair)]
    tol: Option<(f64, f64)>,

    /// Worker threads for `compare` and `sweep`.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Coherent single-excitation transfer under the pulse schedule.
    Transfer,
    /// Dissipative moment evolution, full or iterated over a window.
    Cool,
    /// Adiabatic eigenvalues, Stokes crossings and gaps.
    Spectrum,
    /// Sideband limit versus iterated STIRAP cooling, row by row.
    Compare,
    /// Moment engine against the truncated Fock-space master equation.
    OracleCheck,
    /// Search pulse and window parameters for the lowest phonon number.
    Tune,
    /// Cooling summary over a grid of one or two parameters.
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Transfer => "transfer",
            Command::Cool => "cool",
            Command::Spectrum => "spectrum",
            Command::Compare => "compare",
            Command::OracleCheck => "oracle-check",
            Command::Tune => "tune",
            Command::Sweep => "sweep",
        }
    }
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides {
        out: cli.out.clone(),
        rwa: cli.rwa,
        cycles: cli.cycles,
        window: cli.window,
        full_moments: cli.full_moments,
        tol: cli.tol,
        jobs: cli.jobs,
    };
    let name = cli.command.name();
    let cfg = match &cli.config {
        None => Err(CliError::config("no scenario file given (use --config <path>)")),
        Some(p) => ConfigFile::load(p),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail(name, &e, ov.out.as_deref().map(Artifacts::create)),
    };
    let art = match Artifacts::create(&out_dir(Some(&cfg), &ov)) {
        Ok(a) => a,
        Err(e) => return fail(name, &e, None),
    };
    let mut manifest = Manifest::new(name, cli.config.as_deref());
    manifest.insert("overrides", serde_json::to_value(&ov).expect("overrides serialize"));
    let mut ctx = Context {
        cfg,
        ov,
        art,
        manifest,
    };
    let result = match cli.command {
        Command::Transfer => commands::transfer(&mut ctx),
        Command::Cool => commands::cool(&mut ctx),
        Command::Spectrum => commands::spectrum(&mut ctx),
        Command::Compare => commands::compare(&mut ctx),
        Command::OracleCheck => commands::oracle_check(&mut ctx),
        Command::Tune => commands::tune_cmd(&mut ctx),
        Command::Sweep => commands::sweep(&mut ctx),
    };
    let Context { art, manifest, .. } = ctx;
    let error = result.as_ref().err().map(|e| e.record(name));
    let manifest = manifest.finish(&art.written, error);
    if let Err(e) = art.write_json("manifest.json", &manifest) {
        return fail(name, &e, None);
    }
    match result {
        Ok(()) => {
            for f in &art.written {
                println!("{}", art.dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(name, &e, Some(Ok(art))),
    }
}

/// Prints the error record to stderr and, when an output directory is
/// available, also writes it to `error.json`.
fn fail(command: &str, e: &CliError, art: Option<Result<Artifacts, CliError>>) -> ExitCode {
    let record = e.record(command);
    eprintln!("{}", serde_json::to_string(&record).expect("json values always serialize"));
    if let Some(Ok(a)) = art {
        let _ = a.write_json("error.json", &record);
    }
    ExitCode::from(e.exit_code() as u8)
}
