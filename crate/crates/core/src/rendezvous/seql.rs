use super::env::{SwarmEnv, SwarmState, Uav};
use super::learning::{ql_run_round, QTable, RoundPlan, RoundResult};
use crate::evolution::{ga_run, GaConfig, GaProblem};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Round length and inter-round GA settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqlConfig {
    /// Learning episodes per round.
    pub round_episodes: usize,
    pub ga: GaConfig,
}

impl Default for SeqlConfig {
    fn default() -> Self {
        Self {
            round_episodes: 50,
            ga: GaConfig {
                population_size: 30,
                generations: 20,
                crossover_rate: 0.8,
                mutation_rate: 0.05,
                elitism_count: 1,
            },
        }
    }
}

impl SeqlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.round_episodes == 0 {
            return Err(Error::Config("seql.round_episodes must be >= 1".into()));
        }
        self.ga.validate()
    }
}

/// Swarm states as GA genomes: one gene per UAV.
pub struct SwarmProblem<'a> {
    env: &'a SwarmEnv,
}

impl<'a> SwarmProblem<'a> {
    pub fn new(env: &'a SwarmEnv) -> Self {
        Self { env }
    }
}

impl GaProblem for SwarmProblem<'_> {
    type Gene = Uav;

    fn random_individual(&self, rng: &mut RngStream) -> Vec<Uav> {
        self.env.random_state(rng).uavs
    }

    /// Re-draws either the cell or the channel, with equal odds.
    fn mutate_gene(&self, _locus: usize, gene: &mut Uav, rng: &mut RngStream) {
        let fresh = self.env.random_uav(rng);
        if rng.bernoulli(0.5) {
            gene.x = fresh.x;
            gene.y = fresh.y;
        } else {
            gene.channel = fresh.channel;
        }
    }

    fn fitness(&self, genome: &[Uav]) -> f64 {
        self.env.connected_pairs(&SwarmState {
            uavs: genome.to_vec(),
        }) as f64
    }
}

/// Inter-round evolution record.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolution {
    /// The round's final state, first member of the GA population.
    pub seed: SwarmState,
    pub seed_fitness: f64,
    pub best: SwarmState,
    pub best_fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqlRound {
    pub result: RoundResult,
    /// `None` for the last round (converged or out of budget).
    pub evolution: Option<Evolution>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeqlOutcome {
    pub rounds: Vec<SeqlRound>,
    /// Total learning episodes when converged, otherwise the budget.
    pub episodes_to_convergence: usize,
    pub converged: bool,
    pub qtable: QTable,
}

impl SeqlOutcome {
    /// Per-episode throughput trace concatenated over rounds.
    pub fn throughput_trace(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .flat_map(|r| r.result.throughput_trace.iter().copied())
            .collect()
    }
}

/// Self-evolving Q-learning.
///
/// Alternates learning rounds of `round_episodes` with a GA over swarm
/// states whose population holds the round's final state plus random
/// states; the fittest state (most connected pairs) starts the next round.
/// Q-tables persist across rounds and the epsilon schedule runs over the
/// global episode count. Stops at convergence or when the episode budget
/// is spent.
pub fn seql_run(
    env: &SwarmEnv,
    initial: &SwarmState,
    config: &SeqlConfig,
    rng: &mut RngStream,
) -> Result<SeqlOutcome> {
    config.validate()?;
    let window = env.config().convergence_window;
    if config.round_episodes < window {
        return Err(Error::Config(format!(
            "seql.round_episodes ({}) must be >= swarm.convergence_window ({window})",
            config.round_episodes
        )));
    }
    env.check_state(initial)?;
    let budget = env.config().episode_budget;
    let problem = SwarmProblem::new(env);
    let mut q = QTable::for_env(env);
    let mut start = initial.clone();
    let mut used = 0;
    let mut rounds = Vec::new();
    loop {
        let plan = RoundPlan {
            max_episodes: config.round_episodes.min(budget - used),
            episode_offset: used,
        };
        let result = ql_run_round(env, &start, &mut q, plan, rng)?;
        used += result.episodes_used;
        if result.converged || used >= budget {
            let converged = result.converged;
            rounds.push(SeqlRound {
                result,
                evolution: None,
            });
            return Ok(SeqlOutcome {
                rounds,
                episodes_to_convergence: if converged { used } else { budget },
                converged,
                qtable: q,
            });
        }
        let seed = result.final_state.clone();
        let ga = ga_run(&config.ga, &problem, std::slice::from_ref(&seed.uavs), rng)?;
        let evolution = Evolution {
            seed_fitness: problem.fitness(&seed.uavs),
            seed,
            best: SwarmState { uavs: ga.best },
            best_fitness: ga.best_fitness,
        };
        start = evolution.best.clone();
        rounds.push(SeqlRound {
            result,
            evolution: Some(evolution),
        });
    }
}
