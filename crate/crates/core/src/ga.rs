//! A small elitist genetic algorithm.
//!
//! Used for both LAM boundary-shell selection and labeling optimization.
//! Fitness evaluations within a generation run in parallel; selection and
//! variation draw from one sequential seeded stream, so the outcome does not
//! depend on the thread count.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Genetic algorithm hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub elite_count: usize,
    /// Monte Carlo samples per fitness evaluation (per SNR point).
    pub sample_budget: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 64,
            generations: 200,
            mutation_rate: 0.1,
            crossover_rate: 0.9,
            elite_count: 2,
            sample_budget: 20_000,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elite_count < 1 || self.population <= self.elite_count {
            return Err(Error::InvalidArgument(format!(
                "need population > elite_count >= 1, got {} and {}",
                self.population, self.elite_count
            )));
        }
        for (name, r) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {r}")));
            }
        }
        if self.sample_budget == 0 {
            return Err(Error::InvalidArgument("sample_budget must be positive".into()));
        }
        Ok(())
    }
}

/// A chromosome with its variation operators.
pub trait Genome: Clone + Send + Sync {
    fn crossover(&self, other: &Self, rng: &mut Rng) -> Self;
    fn mutate(&mut self, rng: &mut Rng);
}

#[derive(Debug, Clone)]
pub struct GaResult<G> {
    pub best: G,
    pub best_fitness: f64,
    /// Best fitness of the initial population and after each generation.
    pub history: Vec<f64>,
}

const TOURNAMENT: usize = 3;

fn rank(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = if fitness[a].is_nan() { f64::NEG_INFINITY } else { fitness[a] };
        let fb = if fitness[b].is_nan() { f64::NEG_INFINITY } else { fitness[b] };
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    order
}

fn tournament(fitness: &[f64], rng: &mut Rng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..TOURNAMENT {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// Runs the GA from `population` and returns the best genome ever seen.
///
/// Elites are copied unchanged with their cached fitness, so the best-fitness
/// history is nondecreasing.
pub fn evolve<G, F>(cfg: &GaConfig, population: Vec<G>, fitness: F, seed: u64) -> GaResult<G>
where
    G: Genome,
    F: Fn(&G) -> f64 + Sync,
{
    assert!(!population.is_empty(), "empty initial population");
    let mut rng = rng::stream(seed, 0x6a);
    let mut pop = population;
    let mut fit: Vec<f64> = pop.par_iter().map(&fitness).collect();
    let mut history = Vec::with_capacity(cfg.generations + 1);

    let order = rank(&fit);
    history.push(fit[order[0]]);

    for _ in 0..cfg.generations {
        let order = rank(&fit);
        let elites = cfg.elite_count.min(pop.len());
        let mut next: Vec<G> = order[..elites].iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = order[..elites].iter().map(|&i| fit[i]).collect();

        let mut children = Vec::with_capacity(cfg.population.saturating_sub(elites));
        while next.len() + children.len() < cfg.population {
            let a = tournament(&fit, &mut rng);
            let mut child = if rng.random_bool(cfg.crossover_rate) {
                let b = tournament(&fit, &mut rng);
                pop[a].crossover(&pop[b], &mut rng)
            } else {
                pop[a].clone()
            };
            if rng.random_bool(cfg.mutation_rate) {
                child.mutate(&mut rng);
            }
            children.push(child);
        }
        let child_fit: Vec<f64> = children.par_iter().map(&fitness).collect();
        next.extend(children);
        next_fit.extend(child_fit);
        pop = next;
        fit = next_fit;

        let order = rank(&fit);
        history.push(fit[order[0]]);
    }

    let order = rank(&fit);
    GaResult {
        best: pop[order[0]].clone(),
        best_fitness: fit[order[0]],
        history,
    }
}
