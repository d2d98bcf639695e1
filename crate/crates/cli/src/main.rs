//! `cwsim`: runs the Curie-Weiss measurement model and writes CSV tables.

mod commands;
mod csv;
mod settings;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use settings::{manifest, Settings};

#[derive(Parser)]
#[command(name = "cwsim", version, about = "Curie-Weiss quantum measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Registration dynamics from the paramagnet: timeseries and snapshots.
    Register(RunArgs),
    /// Off-diagonal decay for a pair of sectors.
    Truncate(RunArgs),
    /// Equilibrium states for every sector, with and without the basin restriction.
    Gibbs(RunArgs),
    /// Registration followed by relaxation with the coupling switched off.
    Decouple(RunArgs),
    /// Decoupling and reset energy balance.
    Energetics(RunArgs),
    /// Compares the lumped dynamics against the exact configuration-space run.
    OracleCheck(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    spin: Option<String>,
    #[arg(long = "N", short = 'N')]
    n: Option<String>,
    #[arg(long = "J2")]
    j2: Option<String>,
    #[arg(long = "J4")]
    j4: Option<String>,
    #[arg(long, short)]
    g: Option<String>,
    #[arg(long = "T", short = 'T')]
    temperature: Option<String>,
    /// Bath cutoff.
    #[arg(long = "Gamma")]
    cutoff: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sector: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sector_tilde: Option<String>,
    #[arg(long)]
    delta_g_std: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Bath coupling strength.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    tau_max: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshots: Option<String>,
    /// Snapshot rows below this probability are dropped.
    #[arg(long)]
    pmin: Option<String>,
    #[arg(long)]
    t_dc: Option<String>,
    #[arg(long)]
    relax_tau: Option<String>,
    /// RK4 step as a fraction of the inverse largest outflow.
    #[arg(long)]
    safety: Option<String>,
    /// Comma-separated checkpoint times.
    #[arg(long)]
    checkpoints: Option<String>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let overrides = [
            ("spin", &self.spin),
            ("N", &self.n),
            ("J2", &self.j2),
            ("J4", &self.j4),
            ("g", &self.g),
            ("T", &self.temperature),
            ("Gamma", &self.cutoff),
            ("sector", &self.sector),
            ("sector_tilde", &self.sector_tilde),
            ("delta_g_std", &self.delta_g_std),
            ("seed", &self.seed),
            ("gamma", &self.gamma),
            ("tau_max", &self.tau_max),
            ("dt", &self.dt),
            ("snapshots", &self.snapshots),
            ("pmin", &self.pmin),
            ("t_dc", &self.t_dc),
            ("relax_tau", &self.relax_tau),
            ("safety", &self.safety),
            ("checkpoints", &self.checkpoints),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                s.set(k, v.clone())?;
            }
        }
        Ok(s)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CWSIM_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("CWSIM_THREADS = `{v}` is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

type Runner = fn(&Settings, &Path) -> Result<()>;

fn run(name: &str, args: &RunArgs, runner: Runner) -> Result<()> {
    let out = &args.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let failed = out.join("FAILED");
    let result = args
        .settings()
        .and_then(|s| {
            let s = s.resolved()?;
            fs::write(out.join("manifest.txt"), manifest(name, &s, out))
                .context("writing manifest.txt")?;
            Ok(s)
        })
        .and_then(|s| runner(&s, out));
    match &result {
        Ok(()) => {
            if failed.exists() {
                fs::remove_file(&failed).context("removing stale FAILED marker")?;
            }
        }
        Err(e) => {
            // best effort: the error itself is what gets reported
            let _ = fs::write(&failed, format!("{e:#}\n"));
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Register(a) => run("register", a, commands::register),
        Command::Truncate(a) => run("truncate", a, commands::truncate),
        Command::Gibbs(a) => run("gibbs", a, commands::gibbs_cmd),
        Command::Decouple(a) => run("decouple", a, commands::decouple),
        Command::Energetics(a) => run("energetics", a, commands::energetics),
        Command::OracleCheck(a) => run("oracle-check", a, commands::oracle_check),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cwsim: {e:#}");
            ExitCode::FAILURE
        }
    }
}
