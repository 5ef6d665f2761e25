//! Rendezvous comparison: Q-learning against SE-QL over sensing ranges.

use rayon::prelude::*;

use evocomm_core::numerics::{derive_seed, RngStream};
use evocomm_core::rendezvous::{env_create, measure_throughput, ql_run, seql_run};

use crate::ber::repetition_seed;
use crate::config::{RendezvousMethod, RendezvousPlan};
use crate::error::Result;

const TAG_LAYOUT: u64 = 0x4c41_594f;
const TAG_LEARN: u64 = 0x4c45_4152;

#[derive(Clone, Debug, PartialEq)]
pub struct RendezvousRow {
    pub method: RendezvousMethod,
    pub sensing_range_m: f64,
    pub seed: u64,
    /// The episode budget when the run did not converge.
    pub episodes_to_convergence: usize,
    pub converged: bool,
    /// Normalized throughput of the last learning episode.
    pub final_throughput: f64,
}

/// One run.
///
/// The initial layout depends on the seed only, and the learning stream on
/// seed and range, so both methods start from the same swarm and draw the
/// same random numbers until their paths diverge.
pub fn rendezvous_point(
    plan: &RendezvousPlan,
    method: RendezvousMethod,
    sensing_range_m: f64,
    seed: u64,
) -> Result<RendezvousRow> {
    let mut layout = RngStream::new(seed, derive_seed(TAG_LAYOUT, 0));
    let (env, initial) = env_create(plan.swarm_at(sensing_range_m), &mut layout)?;
    let mut rng = RngStream::new(
        seed,
        derive_seed(TAG_LEARN, (sensing_range_m + 0.0).to_bits()),
    );
    let (episodes, converged, trace) = match method {
        RendezvousMethod::Ql => {
            let out = ql_run(&env, &initial, &mut rng)?;
            (
                out.episodes_to_convergence,
                out.converged,
                out.round.throughput_trace,
            )
        }
        RendezvousMethod::Seql => {
            let out = seql_run(&env, &initial, &plan.seql, &mut rng)?;
            let trace = out.throughput_trace();
            (out.episodes_to_convergence, out.converged, trace)
        }
    };
    let normalized = measure_throughput(&trace, env.intra_cluster_pairs().len())?;
    Ok(RendezvousRow {
        method,
        sensing_range_m,
        seed,
        episodes_to_convergence: episodes,
        converged,
        final_throughput: *normalized.last().expect("non-empty trace"),
    })
}

/// Every `(method, range, seed)` row, sorted in that order.
///
/// Runs go to the current rayon pool.
pub fn run_rendezvous_experiment(plan: &RendezvousPlan) -> Result<Vec<RendezvousRow>> {
    let mut points = Vec::new();
    for &method in &plan.methods {
        for &range in &plan.sensing_ranges_m {
            for r in 0..plan.repetitions {
                points.push((method, range, repetition_seed(plan.seed, r)));
            }
        }
    }
    let mut rows = points
        .par_iter()
        .map(|&(m, range, seed)| rendezvous_point(plan, m, range, seed))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.sensing_range_m.total_cmp(&b.sensing_range_m))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}
