//! Small hand-checkable instances used by tests, benches and the CLI.

use crate::model::{CostModel, DiscreteProblem};

/// Two states, two actions, one step. `x_0 = 0` surely, `x_1 = u_0`,
/// `r_0 ≡ 0`, `r_T = [0, 1]`.
pub fn chain2() -> (DiscreteProblem, CostModel) {
    chain2_with_flip(0.0)
}

/// Like [`chain2`], but the intended successor is flipped with
/// probability 0.25.
pub fn stochastic_chain2() -> (DiscreteProblem, CostModel) {
    chain2_with_flip(0.25)
}

fn chain2_with_flip(flip: f64) -> (DiscreteProblem, CostModel) {
    let keep = 1.0 - flip;
    #[rustfmt::skip]
    let table = vec![
        keep, flip,  flip, keep, // x = 0: u = 0, u = 1
        keep, flip,  flip, keep, // x = 1
    ];
    let problem = DiscreteProblem::time_invariant(2, 2, vec![1.0, 0.0], table, 1)
        .expect("chain-2 tables are stochastic");
    let cost = CostModel::new(vec![vec![0.0; 4]], vec![0.0, 1.0], 1.0).expect("finite costs");
    (problem, cost)
}

/// One step where the expected-cost and the risk-seeking optimal actions
/// differ: action 0 lands on a sure terminal cost of 0.5, action 1 on a
/// fair coin between 0 and 1.2. SOC prefers action 0 (0.5 < 0.6), RSOC
/// prefers action 1 (`-log(½ + ½e^{-1.2}) ≈ 0.430 < 0.5`).
pub fn mode_separation() -> (DiscreteProblem, CostModel) {
    let row0 = [0.0, 1.0, 0.0, 0.0];
    let row1 = [0.0, 0.0, 0.5, 0.5];
    let table: Vec<f64> = (0..4)
        .flat_map(|_| row0.iter().chain(row1.iter()).copied())
        .collect();
    let problem = DiscreteProblem::time_invariant(4, 2, vec![1.0, 0.0, 0.0, 0.0], table, 1)
        .expect("stochastic tables");
    let cost =
        CostModel::new(vec![vec![0.0; 8]], vec![0.0, 0.5, 0.0, 1.2], 1.0).expect("finite costs");
    (problem, cost)
}
