//! UAV swarm space-frequency rendezvous.
//!
//! UAVs live on a square grid and pick a channel every step. Two UAVs of the
//! same cluster are connected when their cell centers are within sensing
//! range and they share a channel. Each UAV is an independent tabular
//! Q-learner over its own (cell, channel) and is rewarded with its number of
//! connected cluster peers. [`seql_run`] adds a GA over whole swarm states
//! between learning rounds.

mod env;
mod learning;
mod seql;

pub use env::{
    contiguous_clusters, env_create, Action, Move, StepOutcome, SwarmConfig, SwarmEnv, SwarmState,
    Uav,
};
pub use learning::{
    greedy_rollout, measure_throughput, ql_run, ql_run_round, QTable, QlOutcome, RoundPlan,
    RoundResult,
};
pub use seql::{seql_run, Evolution, SeqlConfig, SeqlOutcome, SeqlRound, SwarmProblem};
