//! Genetic algorithm: binary tournament on rank fitness, arithmetic crossover,
//! Gaussian mutation, single elite.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::evaluation::Evaluation;
use crate::problem::{Domain, Point};

use super::fitness::{assign_fitness, best_first};
use super::{Objective, Population, SolverConfig, Terminated};

/// Index of the fitter of two uniformly drawn members.
pub fn tournament<R: Rng + ?Sized>(fitness: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    if fitness[b] > fitness[a] {
        b
    } else {
        a
    }
}

pub fn arithmetic_crossover(a: &[f64], b: &[f64], alpha: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| alpha * x + (1.0 - alpha) * y)
        .collect()
}

/// Perturbs each coordinate with probability `1/n` by `N(0, sigma * range)`,
/// then clips and rounds into the domain.
pub fn gaussian_mutation<R: Rng + ?Sized>(
    values: &[f64],
    domain: &Domain,
    sigma: f64,
    rng: &mut R,
) -> Point {
    let rate = 1.0 / values.len().max(1) as f64;
    let mutated: Vec<f64> = values
        .iter()
        .zip(domain.dims())
        .map(|(&x, dim)| {
            let sd = sigma * dim.range();
            if sd > 0.0 && rng.random_bool(rate) {
                x + Normal::new(0.0, sd).map_or(0.0, |n| n.sample(rng))
            } else {
                x
            }
        })
        .collect();
    domain.repair(&mutated)
}

/// One generation. Shared solutions join the population first, so selection
/// can pick them; the output always has `cfg.size` members.
pub fn ga_step<R: Rng + ?Sized, O: Objective>(
    mut pop: Population,
    cfg: &SolverConfig,
    domain: &Domain,
    rng: &mut R,
    shared: &[Evaluation],
    objective: &mut O,
) -> Result<Population, Terminated> {
    pop.members.extend(shared.iter().cloned());
    let Ok(fitness) = assign_fitness(&pop.members) else {
        return Ok(pop);
    };
    let elite = pop.members[best_first(&pop.members)[0]].clone();
    let mut next = Vec::with_capacity(cfg.size);
    next.push(elite);
    while next.len() < cfg.size {
        let a = &pop.members[tournament(&fitness, rng)];
        let b = &pop.members[tournament(&fitness, rng)];
        let child = if rng.random_bool(cfg.params.crossover_rate) {
            arithmetic_crossover(a.point.values(), b.point.values(), rng.random::<f64>())
        } else {
            a.point.values().to_vec()
        };
        let child = gaussian_mutation(&child, domain, cfg.params.mutation_sigma, rng);
        next.push(objective.evaluate(&child)?);
    }
    Ok(Population {
        members: next,
        generation: pop.generation + 1,
    })
}
