//! Plant propagation: fit plants send many short runners, weak plants a few
//! long ones.

use rand::Rng;

use crate::evaluation::Evaluation;
use crate::problem::{Domain, Point};

use super::fitness::{assign_fitness, best_first};
use super::{Objective, Population, SolverConfig, Terminated};

/// `ceil(f * n_max)`, at least one.
pub fn runner_count(fitness: f64, n_max: usize) -> usize {
    ((fitness * n_max as f64).ceil() as usize).clamp(1, n_max.max(1))
}

/// Runner positions for one parent: each coordinate moves by
/// `U(-1, 1) * (1 - f) * range`, then is clipped into the domain.
pub fn propagate<R: Rng + ?Sized>(
    parent: &Point,
    fitness: f64,
    domain: &Domain,
    n_max: usize,
    rng: &mut R,
) -> Vec<Point> {
    let reach = 1.0 - fitness;
    (0..runner_count(fitness, n_max))
        .map(|_| {
            let v: Vec<f64> = parent
                .values()
                .iter()
                .zip(domain.dims())
                .map(|(&x, dim)| x + rng.random_range(-1.0..=1.0) * reach * dim.range())
                .collect();
            domain.repair(&v)
        })
        .collect()
}

pub fn ppa_step<R: Rng + ?Sized, O: Objective>(
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
    let order = best_first(&pop.members);
    let selected: Vec<usize> = order.into_iter().take(cfg.size).collect();
    let mut next: Vec<Evaluation> = selected.iter().map(|&i| pop.members[i].clone()).collect();
    for &i in &selected {
        for runner in propagate(&pop.members[i].point, fitness[i], domain, cfg.params.max_runners, rng)
        {
            next.push(objective.evaluate(&runner)?);
        }
    }
    let keep: Vec<usize> = best_first(&next).into_iter().take(2 * cfg.size).collect();
    let mut members: Vec<Option<Evaluation>> = next.into_iter().map(Some).collect();
    Ok(Population {
        members: keep.into_iter().filter_map(|i| members[i].take()).collect(),
        generation: pop.generation + 1,
    })
}
