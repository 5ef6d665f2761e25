//! Experiment harness: config loading, deterministic parallel runs and CSV
//! output for BER sweeps and swarm rendezvous comparisons.
//!
//! Work is split into `(grid point, seed)` tuples, each with its own derived
//! random streams. Rows are sorted before writing, so the worker count
//! changes wall time only.

pub mod ber;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod swarm;

pub use ber::{run_ber_sweep, run_ber_sweep_with_models, BerRow, BerSweep, TrainedModel};
pub use cli::cli_main;
pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind};
pub use error::{HarnessError, Result};
pub use swarm::{run_rendezvous_experiment, RendezvousRow};

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs a validated experiment and renders its CSV.
pub fn run_to_csv(config: &ExperimentConfig, workers: usize) -> Result<String> {
    match config {
        ExperimentConfig::BerSweep(c) => {
            let plan = c.plan()?;
            let rows = with_workers(workers, || run_ber_sweep(&plan))??;
            Ok(output::ber_csv_string(&rows))
        }
        ExperimentConfig::Rendezvous(c) => {
            let plan = c.plan()?;
            let rows = with_workers(workers, || run_rendezvous_experiment(&plan))??;
            Ok(output::rendezvous_csv_string(&rows))
        }
    }
}
