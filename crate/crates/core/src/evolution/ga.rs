use rayon::prelude::*;

use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Best individuals copied unchanged into the next generation.
    pub elitism_count: usize,
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::Config("ga.population_size must be >= 1".into()));
        }
        for (name, p) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!(
                    "ga.{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.elitism_count == 0 || self.elitism_count > self.population_size {
            return Err(Error::Config(format!(
                "ga.elitism_count must lie in [1, population_size={}], got {}",
                self.population_size, self.elitism_count
            )));
        }
        Ok(())
    }
}

/// Encoding hooks for a maximization problem over gene vectors.
pub trait GaProblem: Sync {
    type Gene: Clone + Send + Sync;

    fn random_individual(&self, rng: &mut RngStream) -> Vec<Self::Gene>;

    /// Mutates the gene at `locus` in place.
    fn mutate_gene(&self, locus: usize, gene: &mut Self::Gene, rng: &mut RngStream);

    fn fitness(&self, genome: &[Self::Gene]) -> f64;
}

#[derive(Clone, Debug)]
pub struct GaOutcome<G> {
    pub best: Vec<G>,
    pub best_fitness: f64,
    /// Best-ever fitness: initial population first, then one entry per generation.
    pub trace: Vec<f64>,
}

/// Seeds first (in order), then random individuals up to `size`.
pub fn seed_population<P: GaProblem>(
    problem: &P,
    seeds: &[Vec<P::Gene>],
    size: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<P::Gene>>> {
    if seeds.len() > size {
        return Err(Error::Config(format!(
            "{} seed individuals exceed population size {size}",
            seeds.len()
        )));
    }
    let mut pop = seeds.to_vec();
    while pop.len() < size {
        pop.push(problem.random_individual(rng));
    }
    Ok(pop)
}

/// Elitist GA: size-2 tournament selection, copy, one-point crossover,
/// per-gene mutation, elitist replacement. Maximizes `problem.fitness`.
pub fn ga_run<P: GaProblem>(
    config: &GaConfig,
    problem: &P,
    seeds: &[Vec<P::Gene>],
    rng: &mut RngStream,
) -> Result<GaOutcome<P::Gene>> {
    config.validate()?;
    let mut pop = seed_population(problem, seeds, config.population_size, rng)?;
    let mut fit = evaluate(problem, &pop);
    let mut best_idx = argmax(&fit);
    let mut best = pop[best_idx].clone();
    let mut best_fitness = fit[best_idx];
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(best_fitness);

    for _ in 0..config.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        // Stable sort: equal fitness keeps population order.
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]));
        let mut next: Vec<Vec<P::Gene>> = order[..config.elitism_count]
            .iter()
            .map(|&i| pop[i].clone())
            .collect();
        while next.len() < config.population_size {
            let a = tournament(&fit, rng);
            let b = tournament(&fit, rng);
            let mut c1 = pop[a].clone();
            let mut c2 = pop[b].clone();
            let len = c1.len();
            if rng.bernoulli(config.crossover_rate) && len > 1 {
                let cut = 1 + rng.below(len - 1);
                for locus in cut..len {
                    std::mem::swap(&mut c1[locus], &mut c2[locus]);
                }
            }
            for child in [&mut c1, &mut c2] {
                for (locus, gene) in child.iter_mut().enumerate() {
                    if rng.bernoulli(config.mutation_rate) {
                        problem.mutate_gene(locus, gene, rng);
                    }
                }
            }
            next.push(c1);
            if next.len() < config.population_size {
                next.push(c2);
            }
        }
        pop = next;
        fit = evaluate(problem, &pop);
        best_idx = argmax(&fit);
        if fit[best_idx] > best_fitness {
            best_fitness = fit[best_idx];
            best = pop[best_idx].clone();
        }
        trace.push(best_fitness);
    }
    Ok(GaOutcome {
        best,
        best_fitness,
        trace,
    })
}

fn evaluate<P: GaProblem>(problem: &P, pop: &[Vec<P::Gene>]) -> Vec<f64> {
    pop.par_iter()
        .map(|g| {
            let f = problem.fitness(g);
            if f.is_nan() {
                f64::NEG_INFINITY
            } else {
                f
            }
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn tournament(fit: &[f64], rng: &mut RngStream) -> usize {
    let a = rng.below(fit.len());
    let b = rng.below(fit.len());
    if fit[b] > fit[a] {
        b
    } else {
        a
    }
}
