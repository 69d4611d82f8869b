use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use maxwell_nehari::io::{exit_code, parse_config_for, run, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Eigs,
    Ground,
    Symmetric,
    CheckNonlinearity,
    Oracle,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Eigs => Command::Eigs,
            Cmd::Ground => Command::Ground,
            Cmd::Symmetric => Command::Symmetric,
            Cmd::CheckNonlinearity => Command::CheckNonlinearity,
            Cmd::Oracle => Command::Oracle,
        }
    }
}

/// Ground states of the semilinear curl-curl problem in a cavity.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Cmd,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the `seed` key of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "MAXWELL_NEHARI_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let mut config = match parse_config_for(&text, Some(cli.command.into())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = run(&config, &cli.out_dir, rayon::current_num_threads());
    for a in &outcome.manifest.artifacts {
        println!("{}", cli.out_dir.join(&a.file).display());
    }
    println!("{}", cli.out_dir.join("manifest.json").display());
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.exit_code as u8)
}
