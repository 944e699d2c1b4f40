//! Particle swarm with inertia weight and clamped velocities.

use rand::Rng;

use crate::evaluation::{better, precedes, Evaluation};
use crate::problem::{Domain, Point};

use super::fitness::{best_first, ranks};
use super::{Objective, SolverConfig, Terminated};

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub current: Evaluation,
    pub velocity: Vec<f64>,
    pub best: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub iteration: u64,
}

impl Swarm {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Swarm leader. With several objectives it is drawn from the first
    /// non-dominated layer of personal bests.
    pub fn leader<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&Evaluation> {
        let bests: Vec<Evaluation> = self.particles.iter().map(|p| p.best.clone()).collect();
        if bests.is_empty() {
            return None;
        }
        let i = if bests[0].z.len() == 1 {
            best_first(&bests)[0]
        } else {
            let first: Vec<usize> = ranks(&bests)
                .into_iter()
                .enumerate()
                .filter(|&(_, r)| r == 1)
                .map(|(i, _)| i)
                .collect();
            first[rng.random_range(0..first.len())]
        };
        Some(&self.particles[i].best)
    }
}

fn improves(new: &Evaluation, old: &Evaluation) -> bool {
    if new.z.len() == 1 {
        better(new, old)
    } else {
        !precedes(old, new)
    }
}

/// Evaluates the starting positions. A swarm larger than the initial list is
/// topped up with random points; a smaller one keeps the best members.
pub fn pso_init<R: Rng + ?Sized, O: Objective>(
    points: &[Point],
    cfg: &SolverConfig,
    domain: &Domain,
    rng: &mut R,
    objective: &mut O,
) -> Result<Swarm, Terminated> {
    let size = cfg.size.max(1);
    let mut evals = Vec::with_capacity(points.len().max(size));
    for p in points {
        evals.push(objective.evaluate(p)?);
    }
    while evals.len() < size {
        evals.push(objective.evaluate(&domain.sample(rng))?);
    }
    let keep: Vec<usize> = best_first(&evals).into_iter().take(size).collect();
    let ranges = domain.ranges();
    let particles = keep
        .into_iter()
        .map(|i| Particle {
            current: evals[i].clone(),
            velocity: ranges.iter().map(|&r| rng.random_range(-0.1..=0.1) * r).collect(),
            best: evals[i].clone(),
        })
        .collect();
    Ok(Swarm {
        particles,
        iteration: 0,
    })
}

pub fn pso_step<R: Rng + ?Sized, O: Objective>(
    mut swarm: Swarm,
    cfg: &SolverConfig,
    domain: &Domain,
    rng: &mut R,
    shared: &[Evaluation],
    objective: &mut O,
) -> Result<Swarm, Terminated> {
    if let Some(newest) = shared.last() {
        let current: Vec<Evaluation> = swarm.particles.iter().map(|p| p.current.clone()).collect();
        if let Some(&worst) = best_first(&current).last() {
            swarm.particles[worst] = Particle {
                current: newest.clone(),
                velocity: vec![0.0; domain.len()],
                best: newest.clone(),
            };
        }
    }
    let Some(leader) = swarm.leader(rng).map(|e| e.point.clone()) else {
        return Ok(swarm);
    };
    let ranges = domain.ranges();
    let p = &cfg.params;
    for particle in swarm.particles.iter_mut() {
        let x = particle.current.point.values();
        let pb = particle.best.point.values();
        let mut next = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let v = p.inertia * particle.velocity[i]
                + p.cognitive * r1 * (pb[i] - x[i])
                + p.social * r2 * (leader.values()[i] - x[i]);
            particle.velocity[i] = v.clamp(-ranges[i], ranges[i]);
            next.push(x[i] + particle.velocity[i]);
        }
        let e = objective.evaluate(&domain.repair(&next))?;
        if improves(&e, &particle.best) {
            particle.best = e.clone();
        }
        particle.current = e;
    }
    swarm.iteration += 1;
    Ok(swarm)
}
