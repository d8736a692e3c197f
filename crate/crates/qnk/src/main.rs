use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use qnk::{load_config, run_all, ScenarioKind};

#[derive(Parser)]
#[command(name = "qnk", version, about = "Quasineutral kinetic laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config file.
    Run {
        config: PathBuf,
        /// Output root; each scenario writes into a subdirectory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run scenarios concurrently (worker count capped by QNK_THREADS).
        #[arg(long)]
        parallel: bool,
    },
    /// Run the penrose_check scenarios of a config file.
    Penrose {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the bgk_build and ion_variant scenarios of a config file.
    Bgk {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Quadrature identity and oracle checks.
    Selftest,
}

fn run(config: &Path, out: &Path, parallel: bool, keep: impl Fn(ScenarioKind) -> bool) -> Result<bool> {
    let scenarios: Vec<_> = load_config(config)?.into_iter().filter(|s| keep(s.kind)).collect();
    if scenarios.is_empty() {
        bail!("{}: no matching scenarios", config.display());
    }
    let reports = run_all(&scenarios, out, parallel)?;
    let mut ok = true;
    for r in &reports {
        let status = if r.passed() { "pass" } else { "FAIL" };
        println!("{status} {} ({})", r.scenario, r.kind);
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!("    {}: {}", c.name, c.detail);
        }
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
        ok &= r.passed();
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, parallel } => run(&config, &out, parallel, |_| true),
        Command::Penrose { config, out } => run(&config, &out, false, |k| k == ScenarioKind::PenroseCheck),
        Command::Bgk { config, out } => run(&config, &out, false, |k| {
            matches!(k, ScenarioKind::BgkBuild | ScenarioKind::IonVariant)
        }),
        Command::Selftest => {
            let mut ok = true;
            for t in qnk::selftest::run() {
                println!("{} {}: {}", if t.passed { "pass" } else { "FAIL" }, t.name, t.detail);
                ok &= t.passed;
            }
            Ok(ok)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
