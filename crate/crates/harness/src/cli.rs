//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
//! Every failure prints one line starting with `evocomm: error: ` to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::ber::run_ber_sweep_with_models;
use crate::config::{load_config, ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::output::ber_csv_string;

pub const ERROR_PREFIX: &str = "evocomm: error: ";

#[derive(Debug, Parser)]
#[command(
    name = "evocomm",
    version,
    about = "BER sweeps and swarm rendezvous experiments with CSV output",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detector BER against SNR.
    BerSweep(BerArgs),
    /// Q-learning against SE-QL episodes to convergence.
    Rendezvous(RunArgs),
    /// Parse and validate a config without running it.
    ValidateConfig {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the config's base seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, value_name = "N", env = "EVOCOMM_WORKERS")]
    workers: Option<NonZeroUsize>,
}

#[derive(Debug, Args)]
struct BerArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Also save every trained ELM / SaE-ELM model here.
    #[arg(long, value_name = "DIR")]
    models_dir: Option<PathBuf>,
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clap_failure(e: clap::Error) -> i32 {
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            0
        }
        ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            eprintln!("{ERROR_PREFIX}usage: missing subcommand");
            2
        }
        _ => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{ERROR_PREFIX}usage: {}", one_line(first));
            2
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => return clap_failure(e),
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{ERROR_PREFIX}{}", one_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::BerSweep(args) => run_ber(args),
        Command::Rendezvous(args) => run(ExperimentKind::Rendezvous, args),
        Command::ValidateConfig { config } => {
            let c = load_config(&config)?;
            eprintln!("evocomm: {}: valid {} config", config.display(), c.kind());
            Ok(())
        }
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let (config, workers) = prepare(kind, &args)?;
    let csv = crate::run_to_csv(&config, workers)?;
    write_output(args.out.as_deref(), csv.as_bytes())
}

fn run_ber(args: BerArgs) -> Result<()> {
    let Some(dir) = args.models_dir else {
        return run(ExperimentKind::BerSweep, args.run);
    };
    let (config, workers) = prepare(ExperimentKind::BerSweep, &args.run)?;
    let ExperimentConfig::BerSweep(c) = config else {
        unreachable!("kind checked by prepare")
    };
    let plan = c.plan()?;
    let sweep = crate::with_workers(workers, || run_ber_sweep_with_models(&plan))??;
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Output {
        path: dir.clone(),
        source,
    })?;
    for m in &sweep.models {
        let path = dir.join(m.file_name());
        std::fs::write(&path, m.model.to_bytes())
            .map_err(|source| HarnessError::Output { path, source })?;
    }
    write_output(
        args.run.out.as_deref(),
        ber_csv_string(&sweep.rows).as_bytes(),
    )
}

/// Loads the config, checks its kind and applies the seed and worker overrides.
fn prepare(kind: ExperimentKind, args: &RunArgs) -> Result<(ExperimentConfig, usize)> {
    let mut config = load_config(&args.config)?;
    if config.kind() != kind {
        return Err(HarnessError::invalid(
            "kind",
            format!(
                "config describes a {} experiment; run it with `evocomm {}`",
                config.kind(),
                config.kind()
            ),
        ));
    }
    if let Some(seed) = args.seed {
        config.set_seed(seed);
    }
    let workers = args.workers.map_or_else(default_workers, NonZeroUsize::get);
    Ok((config, workers))
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| HarnessError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|()| stdout.flush())
                .map_err(|source| HarnessError::Output {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
