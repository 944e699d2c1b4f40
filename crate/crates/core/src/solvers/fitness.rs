//! Ranking, rank-based fitness and scalarization shared by the solvers.

use std::cmp::Ordering;

use crate::evaluation::{precedes, Evaluation};

use super::SolverError;

fn single_key(e: &Evaluation) -> (bool, f64) {
    if e.feasible() {
        (false, e.z[0])
    } else {
        (true, e.g)
    }
}

fn cmp_single(a: &Evaluation, b: &Evaluation) -> Ordering {
    let (ia, va) = single_key(a);
    let (ib, vb) = single_key(b);
    ia.cmp(&ib).then(va.total_cmp(&vb))
}

/// 1-based ranks: one plus the number of members in strictly better
/// non-dominated layers. Members in the same layer share a rank, so the map
/// commutes with permutations of the input.
pub fn ranks(members: &[Evaluation]) -> Vec<usize> {
    let n = members.len();
    if n == 0 {
        return Vec::new();
    }
    if members[0].z.len() == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| cmp_single(&members[a], &members[b]));
        let mut rank = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            rank[i] = if pos > 0 && cmp_single(&members[order[pos - 1]], &members[i]).is_eq() {
                rank[order[pos - 1]]
            } else {
                pos + 1
            };
        }
        return rank;
    }
    let mut rank = vec![0; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut placed = 0;
    while !remaining.is_empty() {
        let layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| precedes(&members[j], &members[i])))
            .collect();
        for &i in &layer {
            rank[i] = placed + 1;
        }
        placed += layer.len();
        remaining.retain(|i| !layer.contains(i));
    }
    rank
}

/// Indices ordered best first; ties keep input order.
pub fn best_first(members: &[Evaluation]) -> Vec<usize> {
    let rank = ranks(members);
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by_key(|&i| rank[i]);
    order
}

/// Rank-based fitness in `(0, 1)`: `(N - rank + 1) / (N + 1)`.
pub fn assign_fitness(members: &[Evaluation]) -> Result<Vec<f64>, SolverError> {
    if members.is_empty() {
        return Err(SolverError::EmptyPopulation);
    }
    let n = members.len() as f64;
    Ok(ranks(members)
        .into_iter()
        .map(|r| (n - r as f64 + 1.0) / (n + 1.0))
        .collect())
}

/// Weighted sum `omega * z1 + (1 - omega) * z2` of a bi-objective vector.
pub fn scalarize(z: &[f64], omega: f64) -> Result<f64, SolverError> {
    if z.len() != 2 {
        return Err(SolverError::NotBiObjective(z.len()));
    }
    Ok(omega * z[0] + (1.0 - omega) * z[1])
}

/// Scalar value the direct-search methods minimize: the objective (or its
/// weighted sum) plus `penalty * max(g, 0)`.
pub fn penalized(e: &Evaluation, omega: f64, penalty: f64) -> f64 {
    let base = match e.z.len() {
        1 => e.z[0],
        2 => omega * e.z[0] + (1.0 - omega) * e.z[1],
        // more than two objectives are not supported; fall back to a mean
        k => e.z.iter().sum::<f64>() / k as f64,
    };
    let v = base + penalty * e.g.max(0.0);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::eval;
    use proptest::prelude::*;

    #[test]
    fn rank_map_example() {
        let pop: Vec<_> = [1.0, 2.0, 3.0].iter().map(|&z| eval(&[z], -1.0)).collect();
        assert_eq!(assign_fitness(&pop).unwrap(), vec![0.75, 0.5, 0.25]);
    }

    #[test]
    fn feasible_outranks_infeasible() {
        let pop = vec![eval(&[10.0], -1.0), eval(&[0.0], 1.0)];
        let f = assign_fitness(&pop).unwrap();
        assert!(f[0] > f[1]);
    }

    #[test]
    fn smaller_violation_outranks() {
        let pop = vec![eval(&[0.0], 5.0), eval(&[0.0], 2.0)];
        let f = assign_fitness(&pop).unwrap();
        assert!(f[1] > f[0]);
    }

    #[test]
    fn empty_population_is_an_error() {
        assert!(matches!(assign_fitness(&[]), Err(SolverError::EmptyPopulation)));
    }

    #[test]
    fn multi_objective_layers() {
        let pop = vec![
            eval(&[1.0, 3.0], -1.0),
            eval(&[2.0, 4.0], -1.0),
            eval(&[3.0, 1.0], -1.0),
            eval(&[0.0, 0.0], 1.0),
        ];
        assert_eq!(ranks(&pop), vec![1, 3, 1, 4]);
        assert_eq!(best_first(&pop), vec![0, 2, 1, 3]);
    }

    #[test]
    fn scalarize_examples() {
        assert_eq!(scalarize(&[2.0, 4.0], 0.5).unwrap(), 3.0);
        assert_eq!(scalarize(&[7.0, 99.0], 1.0).unwrap(), 7.0);
        assert!((scalarize(&[10.0, 5.0], 0.2).unwrap() - 6.0).abs() < 1e-12);
        assert!(scalarize(&[1.0], 0.5).is_err());
        assert!(scalarize(&[1.0, 2.0, 3.0], 0.5).is_err());
    }

    #[test]
    fn penalty_applies_to_violation_only() {
        assert_eq!(penalized(&eval(&[2.0], -3.0), 0.5, 1e3), 2.0);
        assert_eq!(penalized(&eval(&[2.0], 0.5), 0.5, 1e3), 502.0);
        assert_eq!(penalized(&eval(&[f64::INFINITY], f64::INFINITY), 0.5, 1e3), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn fitness_commutes_with_permutation(
            zs in proptest::collection::vec((0..6i32, -1..2i32), 1..30),
            seed in any::<u64>(),
        ) {
            let pop: Vec<_> = zs.iter().map(|&(z, g)| eval(&[z as f64], g as f64)).collect();
            let mut perm: Vec<usize> = (0..pop.len()).collect();
            // Fisher-Yates with a tiny LCG
            let mut s = seed | 1;
            for i in (1..perm.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let permuted: Vec<_> = perm.iter().map(|&i| pop[i].clone()).collect();
            let f = assign_fitness(&pop).unwrap();
            let fp = assign_fitness(&permuted).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(fp[k], f[i]);
            }
            prop_assert!(f.iter().all(|&v| v > 0.0 && v < 1.0));
        }

        #[test]
        fn multi_ranks_commute_with_permutation(
            zs in proptest::collection::vec((0..5i32, 0..5i32), 1..20),
        ) {
            let pop: Vec<_> = zs.iter().map(|&(a, b)| eval(&[a as f64, b as f64], -1.0)).collect();
            let mut rev = pop.clone();
            rev.reverse();
            let r = ranks(&pop);
            let mut rr = ranks(&rev);
            rr.reverse();
            prop_assert_eq!(r, rr);
        }

        #[test]
        fn scalarized_argmin_is_scale_invariant(
            zs in proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..20),
            omega in 0.0..=1.0f64,
            scale in 0.1..100.0f64,
        ) {
            let argmin = |k: f64| {
                zs.iter()
                    .enumerate()
                    .map(|(i, &(a, b))| (i, scalarize(&[k * a, k * b], omega).unwrap()))
                    .min_by(|x, y| x.1.total_cmp(&y.1))
                    .unwrap()
            };
            let (i, v) = argmin(1.0);
            let (j, _) = argmin(scale);
            // equal up to exact ties
            let vj = scalarize(&[zs[j].0, zs[j].1], omega).unwrap();
            prop_assert!(i == j || (vj - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }
}
