//! Brute-force ground truth: Bellman dynamic programming for the expected
//! and the exponential-utility objectives, plus exhaustive search over
//! deterministic policies.
//!
//! Nothing here calls into the projection or MM code.

use crate::error::{Error, Result};
use crate::model::{CostModel, DiscreteProblem, TabularPolicy};
use crate::trajectory::objectives_capped;

/// Cap on the number of deterministic policies enumerated by
/// [`exhaustive_policy_search`].
pub const POLICY_SEARCH_CAP: u128 = 1_000_000;

/// Which objective an oracle minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `E[R]`
    A,
    /// `-log E[exp(-R)]`
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// `actions[t][x]`
    pub actions: Vec<Vec<usize>>,
    /// `values[t][x]` for `t ≤ T`.
    pub values: Vec<Vec<f64>>,
    /// Objective at the initial distribution.
    pub objective: f64,
}

impl OracleSolution {
    pub fn policy(&self, num_actions: usize) -> TabularPolicy {
        let n = self.values[0].len();
        TabularPolicy::deterministic(n, num_actions, &self.actions)
            .expect("oracle actions are in range")
    }
}

// Kept local so the oracle shares no arithmetic with the solvers.
fn lse(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn dp(problem: &DiscreteProblem, cost: &CostModel, objective: Objective) -> Result<OracleSolution> {
    let policy = TabularPolicy::uniform_for(problem);
    problem.check_policy(&policy)?;
    problem.check_cost(cost)?;
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = cost.terminal().to_vec();
    let mut actions = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let next = &values[t + 1];
        let mut v_t = vec![0.0; n];
        let mut a_t = vec![0; n];
        for x in 0..n {
            let mut best = (f64::INFINITY, 0);
            for u in 0..m {
                let row = problem.transition_row(t, x, u);
                let future = match objective {
                    Objective::A => row
                        .iter()
                        .zip(next)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, v)| p * v)
                        .sum::<f64>(),
                    Objective::B => -lse(row
                        .iter()
                        .zip(next)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, v)| p.ln() - v)),
                };
                let q = cost.stage(t, x, u) + future;
                if q < best.0 {
                    best = (q, u);
                }
            }
            v_t[x] = best.0;
            a_t[x] = best.1;
        }
        values[t] = v_t;
        actions[t] = a_t;
    }
    let init = problem.initial();
    let objective = match objective {
        Objective::A => init
            .iter()
            .zip(&values[0])
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum(),
        Objective::B => -lse(init
            .iter()
            .zip(&values[0])
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p.ln() - v)),
    };
    Ok(OracleSolution {
        actions,
        values,
        objective,
    })
}

/// `V_t(x) = min_u [r_t + E_τ V_{t+1}]`, lowest action index on ties.
pub fn dp_soc(problem: &DiscreteProblem, cost: &CostModel) -> Result<OracleSolution> {
    dp(problem, cost, Objective::A)
}

/// `V_t(x) = min_u [r_t - log E_τ exp(-V_{t+1})]`, lowest action index on ties.
pub fn dp_rsoc(problem: &DiscreteProblem, cost: &CostModel) -> Result<OracleSolution> {
    dp(problem, cost, Objective::B)
}

/// Evaluates every deterministic policy by exact trajectory enumeration and
/// returns the lexicographically first minimizer.
///
/// `values` holds the per-state cost-to-go of the returned policy.
pub fn exhaustive_policy_search(
    problem: &DiscreteProblem,
    cost: &CostModel,
    objective: Objective,
) -> Result<OracleSolution> {
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let slots = (n * horizon) as u32;
    let count = (m as u128).checked_pow(slots).unwrap_or(u128::MAX);
    if count > POLICY_SEARCH_CAP {
        return Err(Error::Capacity {
            requested: count,
            cap: POLICY_SEARCH_CAP as usize,
        });
    }
    problem.check_cost(cost)?;

    // digits[t * n + x] is the action at (t, x); slot 0 is most significant
    let mut digits = vec![0usize; n * horizon];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..count {
        let actions: Vec<Vec<usize>> = digits.chunks(n).map(<[usize]>::to_vec).collect();
        let policy = TabularPolicy::deterministic(n, m, &actions)?;
        let obj = objectives_capped(problem, &policy, cost, usize::MAX)?;
        let value = match objective {
            Objective::A => obj.a,
            Objective::B => obj.b,
        };
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, digits.clone()));
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < m {
                break;
            }
            *d = 0;
        }
    }
    let (objective_value, digits) = best.expect("at least one policy");
    let actions: Vec<Vec<usize>> = digits.chunks(n).map(<[usize]>::to_vec).collect();
    let values = evaluate_deterministic(problem, cost, &actions, objective);
    Ok(OracleSolution {
        actions,
        values,
        objective: objective_value,
    })
}

fn evaluate_deterministic(
    problem: &DiscreteProblem,
    cost: &CostModel,
    actions: &[Vec<usize>],
    objective: Objective,
) -> Vec<Vec<f64>> {
    let horizon = problem.horizon();
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = cost.terminal().to_vec();
    for t in (0..horizon).rev() {
        values[t] = (0..problem.num_states())
            .map(|x| {
                let u = actions[t][x];
                let row = problem.transition_row(t, x, u);
                let next = &values[t + 1];
                let future = match objective {
                    Objective::A => row
                        .iter()
                        .zip(next)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, v)| p * v)
                        .sum(),
                    Objective::B => -lse(row
                        .iter()
                        .zip(next)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, v)| p.ln() - v)),
                };
                cost.stage(t, x, u) + future
            })
            .collect();
    }
    values
}
