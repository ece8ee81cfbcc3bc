use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use commands::Failure;
use output::{write_metadata, Format, Metadata};

#[derive(Debug, Parser)]
#[command(name = "focksync", version, about = "Phase locking of a gain-stabilized Fock-state oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file, `key = value` lines or a flat JSON object.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Overrides the `seed` config key.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Steady state: photon statistics, phase density, optional Wigner grid.
    Steady,
    /// Wigner function of the steady state on a square grid.
    Wigner,
    /// Phase distribution of the steady state.
    PhaseDist,
    /// Drift and diffusion over the (delta, f) grid.
    Tongue,
    /// ln(diffusion) versus f with the exponential fit.
    Kramers,
    /// Quantum cumulants against the noisy Adler model and its SDE.
    Adler,
    /// Maximum phase density of the gain-free model over (delta, f).
    Coherent,
    /// Reduced two-mode steady state against the eliminated model.
    Twomode,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Wigner => "wigner",
            Command::PhaseDist => "phase_dist",
            Command::Tongue => "tongue",
            Command::Kramers => "kramers",
            Command::Adler => "adler",
            Command::Coherent => "coherent",
            Command::Twomode => "twomode",
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<config::RunConfig> {
    let mut raw = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => config::RawConfig::new(),
    };
    config::apply_env(&mut raw, std::env::vars());
    if let Some(seed) = cli.seed {
        raw.insert("seed".into(), seed.to_string());
    }
    config::build(raw)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli).map_err(Failure::Usage)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.into()))?;
    }
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("cannot create {}", cli.out.display()))
        .map_err(Failure::Usage)?;

    let start = Instant::now();
    let outcome = match cli.command {
        Command::Steady => commands::steady(&cfg),
        Command::Wigner => commands::wigner_cmd(&cfg),
        Command::PhaseDist => commands::phase_dist(&cfg),
        Command::Tongue => commands::tongue(&cfg),
        Command::Kramers => commands::kramers(&cfg),
        Command::Adler => commands::adler(&cfg),
        Command::Coherent => commands::coherent(&cfg),
        Command::Twomode => commands::twomode(&cfg),
    }?;
    let wall = start.elapsed().as_secs_f64();

    let mut files = Vec::new();
    for t in &outcome.tables {
        let path = t.write(&cli.out, cli.format).map_err(Failure::Numerical)?;
        files.push(path.display().to_string());
    }
    let meta = Metadata {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: wall,
        threads: rayon::current_num_threads(),
        files,
        config: &cfg,
        extra: outcome.summary,
    };
    write_metadata(&cli.out, &meta).map_err(Failure::Numerical)?;
    match outcome.failure {
        Some(msg) => Err(Failure::Numerical(anyhow!(msg))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("focksync: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
