//! Population-based optimizers.
//!
//! [`sade_run`] minimizes a box-constrained objective with self-adaptive
//! differential evolution: four trial-vector strategies compete, and each is
//! chosen with a probability driven by its recent success/failure record.
//! [`ga_run`] is a generic elitist genetic algorithm used to evolve swarm
//! states between learning rounds.

mod ga;
mod sade;

pub use ga::{ga_run, seed_population, GaConfig, GaOutcome, GaProblem};
pub use sade::{
    sade_run, strategy_probabilities, SadeConfig, SadeOutcome, SadeState, Strategy, STRATEGY_POOL,
};
