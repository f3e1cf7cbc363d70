//! Seeded random instances for property tests, benches and the CLI
//! generator.

use rand::Rng;

use crate::model::{CostModel, DiscreteProblem, TabularPolicy};

/// Shape of a random discrete instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomShape {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Point-mass transition rows.
    pub deterministic: bool,
}

impl RandomShape {
    /// Uniformly drawn dimensions in `1..=max` (states and actions at least 2).
    pub fn sample<R: Rng>(
        rng: &mut R,
        max_states: usize,
        max_actions: usize,
        max_horizon: usize,
    ) -> Self {
        Self {
            num_states: rng.gen_range(2..=max_states.max(2)),
            num_actions: rng.gen_range(2..=max_actions.max(2)),
            horizon: rng.gen_range(1..=max_horizon.max(1)),
            deterministic: false,
        }
    }
}

/// A flat-Dirichlet draw: normalized exponential variates.
pub fn random_simplex<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

pub fn random_problem<R: Rng>(rng: &mut R, shape: RandomShape) -> DiscreteProblem {
    let RandomShape {
        num_states: n,
        num_actions: m,
        horizon,
        deterministic,
    } = shape;
    let transitions = (0..horizon)
        .map(|_| {
            (0..n * m)
                .flat_map(|_| {
                    if deterministic {
                        let mut row = vec![0.0; n];
                        row[rng.gen_range(0..n)] = 1.0;
                        row
                    } else {
                        random_simplex(rng, n)
                    }
                })
                .collect()
        })
        .collect();
    let initial = random_simplex(rng, n);
    DiscreteProblem::new(n, m, initial, transitions).expect("random rows are stochastic")
}

/// Stage and terminal costs drawn from `U[0, 1)`.
pub fn random_cost<R: Rng>(rng: &mut R, problem: &DiscreteProblem) -> CostModel {
    let (n, m) = (problem.num_states(), problem.num_actions());
    let stage = (0..problem.horizon())
        .map(|_| (0..n * m).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let terminal = (0..n).map(|_| rng.gen::<f64>()).collect();
    CostModel::new(stage, terminal, 1.0).expect("finite costs")
}

/// Full-support random policy.
pub fn random_policy<R: Rng>(
    rng: &mut R,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> TabularPolicy {
    let tables = (0..horizon)
        .map(|_| {
            (0..num_states)
                .flat_map(|_| random_simplex(rng, num_actions))
                .collect()
        })
        .collect();
    TabularPolicy::from_weights(num_states, num_actions, tables).expect("positive rows")
}
