use std::collections::VecDeque;

use rayon::prelude::*;

use crate::numerics::{Matrix, RngStream};
use crate::{Error, Result};

/// DE trial-vector generation strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// `x_r1 + F(x_r2 − x_r3)`, binomial crossover.
    RandOne,
    /// `x_i + F(x_best − x_i) + F(x_r1 − x_r2) + F(x_r3 − x_r4)`, binomial crossover.
    RandToBestTwo,
    /// `x_r1 + F(x_r2 − x_r3) + F(x_r4 − x_r5)`, binomial crossover.
    RandTwo,
    /// `x_i + K(x_r1 − x_i) + F(x_r2 − x_r3)` with `K ~ U[0,1)`, no crossover.
    CurrentToRandOne,
}

pub const STRATEGY_POOL: [Strategy; 4] = [
    Strategy::RandOne,
    Strategy::RandToBestTwo,
    Strategy::RandTwo,
    Strategy::CurrentToRandOne,
];

impl Strategy {
    fn donors(self) -> usize {
        match self {
            Strategy::RandOne | Strategy::CurrentToRandOne => 3,
            Strategy::RandToBestTwo => 4,
            Strategy::RandTwo => 5,
        }
    }

    fn uses_crossover(self) -> bool {
        !matches!(self, Strategy::CurrentToRandOne)
    }
}

const F_MEAN: f64 = 0.5;
const F_SD: f64 = 0.3;
const F_MIN: f64 = 1e-3;
const F_MAX: f64 = 2.0;
const CR_SD: f64 = 0.1;
const CR_INITIAL_MEAN: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SadeConfig {
    pub population_size: usize,
    pub generations: usize,
    pub strategy_pool: [Strategy; 4],
    /// Floor added to success counts so no strategy's rate reaches zero.
    pub xi: f64,
    /// Generations of success/failure memory (and the CR re-estimation period).
    pub learning_period: usize,
    pub bounds: Vec<(f64, f64)>,
}

impl SadeConfig {
    /// Population 100, 50 generations, ξ = 0.01, learning period 20.
    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Self {
            population_size: 100,
            generations: 50,
            strategy_pool: STRATEGY_POOL,
            xi: 0.01,
            learning_period: 20,
            bounds,
        }
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::Config(format!(
                "sade.population_size must be >= 4, got {}",
                self.population_size
            )));
        }
        if !(self.xi > 0.0) {
            return Err(Error::Config(format!(
                "sade.xi must be > 0, got {}",
                self.xi
            )));
        }
        if self.learning_period == 0 {
            return Err(Error::Config("sade.learning_period must be >= 1".into()));
        }
        if self.bounds.is_empty() {
            return Err(Error::Config(
                "sade.bounds must cover at least one dimension".into(),
            ));
        }
        for (d, (lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!(
                    "sade.bounds[{d}]: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Per-strategy selection probabilities
/// `p_k ∝ (S_k + ξ) / (S_k + F_k + 2ξ)`, normalized to sum 1.
pub fn strategy_probabilities(success: &[f64], failure: &[f64], xi: f64) -> Vec<f64> {
    assert_eq!(success.len(), failure.len());
    let rates: Vec<f64> = success
        .iter()
        .zip(failure)
        .map(|(&s, &f)| (s + xi) / (s + f + 2.0 * xi))
        .collect();
    let total: f64 = rates.iter().sum();
    rates.iter().map(|r| r / total).collect()
}

#[derive(Clone, Debug, Default)]
struct GenerationRecord {
    success: [u64; 4],
    failure: [u64; 4],
    successful_cr: [Vec<f64>; 4],
}

/// Population, fitness and strategy memory of a SaDE run.
#[derive(Clone, Debug)]
pub struct SadeState {
    population: Matrix,
    fitness: Vec<f64>,
    memory: VecDeque<GenerationRecord>,
    cr_means: [f64; 4],
    generation: usize,
    best_vector: Vec<f64>,
    best_fitness: f64,
}

struct Trial {
    strategy: usize,
    cr: Option<f64>,
    vector: Vec<f64>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

impl SadeState {
    /// Uniform-in-bounds initial population, evaluated once.
    pub fn initialize<F>(config: &SadeConfig, fitness_fn: &F, rng: &mut RngStream) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        config.validate()?;
        let (np, d) = (config.population_size, config.dims());
        let mut data = Vec::with_capacity(np * d);
        for _ in 0..np {
            for &(lo, hi) in &config.bounds {
                data.push(rng.uniform_range(lo, hi));
            }
        }
        let population = Matrix::from_vec(np, d, data)?;
        let fitness: Vec<f64> = (0..np)
            .into_par_iter()
            .map(|i| sanitize(fitness_fn(population.row(i))))
            .collect();
        let best = argmin(&fitness);
        Ok(Self {
            best_vector: population.row(best).to_vec(),
            best_fitness: fitness[best],
            population,
            fitness,
            memory: VecDeque::new(),
            cr_means: [CR_INITIAL_MEAN; 4],
            generation: 0,
        })
    }

    pub fn population(&self) -> &Matrix {
        &self.population
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn best_vector(&self) -> &[f64] {
        &self.best_vector
    }

    pub fn best_fitness(&self) -> f64 {
        self.best_fitness
    }

    pub fn cr_means(&self) -> [f64; 4] {
        self.cr_means
    }

    /// Success and failure totals per strategy over the memory window.
    pub fn memory_totals(&self) -> ([f64; 4], [f64; 4]) {
        let mut s = [0.0; 4];
        let mut f = [0.0; 4];
        for rec in &self.memory {
            for k in 0..4 {
                s[k] += rec.success[k] as f64;
                f[k] += rec.failure[k] as f64;
            }
        }
        (s, f)
    }

    pub fn strategy_probabilities(&self, xi: f64) -> Vec<f64> {
        let (s, f) = self.memory_totals();
        strategy_probabilities(&s, &f, xi)
    }

    /// One generation: assign strategies, build trials, evaluate, select.
    ///
    /// All random choices are drawn up front from `rng`; evaluation of the
    /// trials may then run in parallel without affecting the outcome.
    pub fn step<F>(
        &mut self,
        config: &SadeConfig,
        fitness_fn: &F,
        rng: &mut RngStream,
    ) -> Result<()>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        config.validate()?;
        let (np, d) = (self.population.rows(), self.population.cols());
        if np != config.population_size || d != config.dims() {
            return Err(Error::Config(
                "state shape does not match the configuration".into(),
            ));
        }
        let probs = self.strategy_probabilities(config.xi);
        let best_idx = argmin(&self.fitness);

        let mut trials = Vec::with_capacity(np);
        for i in 0..np {
            let k = roulette(&probs, rng);
            let strategy = config.strategy_pool[k];
            let f = rng.normal(F_MEAN, F_SD).clamp(F_MIN, F_MAX);
            let donors = distinct_donors(np, i, strategy.donors(), rng);
            let x = |j: usize| self.population.row(j);
            let xi = x(i);
            let mut v: Vec<f64> = match strategy {
                Strategy::RandOne => (0..d)
                    .map(|j| x(donors[0])[j] + f * (x(donors[1])[j] - x(donors[2])[j]))
                    .collect(),
                Strategy::RandToBestTwo => {
                    let xb = x(best_idx);
                    (0..d)
                        .map(|j| {
                            xi[j]
                                + f * (xb[j] - xi[j])
                                + f * (x(donors[0])[j] - x(donors[1])[j])
                                + f * (x(donors[2])[j] - x(donors[3])[j])
                        })
                        .collect()
                }
                Strategy::RandTwo => (0..d)
                    .map(|j| {
                        x(donors[0])[j]
                            + f * (x(donors[1])[j] - x(donors[2])[j])
                            + f * (x(donors[3])[j] - x(donors[4])[j])
                    })
                    .collect(),
                Strategy::CurrentToRandOne => {
                    let kk = rng.uniform();
                    (0..d)
                        .map(|j| {
                            xi[j]
                                + kk * (x(donors[0])[j] - xi[j])
                                + f * (x(donors[1])[j] - x(donors[2])[j])
                        })
                        .collect()
                }
            };
            let cr = if strategy.uses_crossover() {
                let cr = rng.normal(self.cr_means[k], CR_SD).clamp(0.0, 1.0);
                let forced = rng.below(d);
                for (j, vj) in v.iter_mut().enumerate() {
                    let take_mutant = rng.uniform() < cr || j == forced;
                    if !take_mutant {
                        *vj = xi[j];
                    }
                }
                Some(cr)
            } else {
                None
            };
            for (vj, &(lo, hi)) in v.iter_mut().zip(&config.bounds) {
                *vj = vj.clamp(lo, hi);
            }
            trials.push(Trial {
                strategy: k,
                cr,
                vector: v,
            });
        }

        let trial_fitness: Vec<f64> = trials
            .par_iter()
            .map(|t| sanitize(fitness_fn(&t.vector)))
            .collect();

        let mut record = GenerationRecord::default();
        for (i, (trial, tf)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if tf < self.fitness[i] {
                record.success[trial.strategy] += 1;
                if let Some(cr) = trial.cr {
                    record.successful_cr[trial.strategy].push(cr);
                }
                if tf < self.best_fitness {
                    self.best_fitness = tf;
                    self.best_vector.clone_from(&trial.vector);
                }
                self.population.row_mut(i).copy_from_slice(&trial.vector);
                self.fitness[i] = tf;
            } else {
                record.failure[trial.strategy] += 1;
            }
        }
        self.memory.push_back(record);
        while self.memory.len() > config.learning_period {
            self.memory.pop_front();
        }
        self.generation += 1;
        if self.generation >= config.learning_period {
            for k in 0..4 {
                let mut crs: Vec<f64> = self
                    .memory
                    .iter()
                    .flat_map(|r| r.successful_cr[k].iter().copied())
                    .collect();
                if let Some(m) = median(&mut crs) {
                    self.cr_means[k] = m;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SadeOutcome {
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    /// Best-so-far fitness after each generation; length = `generations`.
    pub trace: Vec<f64>,
    /// Fitness of every member of the initial population.
    pub initial_fitness: Vec<f64>,
}

/// Initializes uniformly in bounds and runs `config.generations` SaDE steps.
pub fn sade_run<F>(config: &SadeConfig, fitness_fn: &F, rng: &mut RngStream) -> Result<SadeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut state = SadeState::initialize(config, fitness_fn, rng)?;
    let initial_fitness = state.fitness.clone();
    let mut trace = Vec::with_capacity(config.generations);
    for _ in 0..config.generations {
        state.step(config, fitness_fn, rng)?;
        trace.push(state.best_fitness);
    }
    Ok(SadeOutcome {
        best_vector: state.best_vector,
        best_fitness: state.best_fitness,
        trace,
        initial_fitness,
    })
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x < v[best] {
            best = i;
        }
    }
    best
}

fn roulette(probs: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

/// `count` indices distinct from each other and from `target` when the
/// population allows it; small populations fall back to reuse.
fn distinct_donors(np: usize, target: usize, count: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let j = rng.below(np);
        let exhausted = out.len() >= np - 1;
        if exhausted || (j != target && !out.contains(&j)) {
            out.push(j);
        }
    }
    out
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
