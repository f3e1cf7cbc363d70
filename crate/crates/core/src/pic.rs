//! Monte-Carlo path-integral estimates under the prior closed loop, and the
//! exact smoothing recursion that yields the same policy as the
//! M-projection.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CostModel, DiscreteProblem, TabularPolicy};
use crate::numeric::log_sum_exp;
use crate::projection::{backward_pass, ProjectionKind};
use crate::trajectory::{desired_distribution, total_variation, TrajectoryDistribution};

/// Rollouts per RNG stream.
pub const CHUNK_SIZE: usize = 4096;

/// `-log mean exp(-C)` over sampled costs-to-go.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Precomputed categorical samplers for every policy and transition row.
struct Sampler<'a> {
    problem: &'a DiscreteProblem,
    cost: &'a CostModel,
    actions: Vec<Option<WeightedIndex<f64>>>,
    successors: Vec<Option<WeightedIndex<f64>>>,
}

impl<'a> Sampler<'a> {
    fn new(
        problem: &'a DiscreteProblem,
        policy: &'a TabularPolicy,
        cost: &'a CostModel,
    ) -> Result<Self> {
        problem.check_policy(policy)?;
        problem.check_cost(cost)?;
        let (n, m) = (problem.num_states(), problem.num_actions());
        let mut actions = Vec::with_capacity(problem.horizon() * n);
        let mut successors = Vec::with_capacity(problem.horizon() * n * m);
        for t in 0..problem.horizon() {
            for x in 0..n {
                actions.push(WeightedIndex::new(policy.row(t, x)).ok());
                for u in 0..m {
                    successors.push(WeightedIndex::new(problem.transition_row(t, x, u)).ok());
                }
            }
        }
        Ok(Self {
            problem,
            cost,
            actions,
            successors,
        })
    }

    fn action<R: Rng>(&self, rng: &mut R, t: usize, x: usize) -> usize {
        let dist = self.actions[t * self.problem.num_states() + x]
            .as_ref()
            .expect("policy rows are stochastic");
        dist.sample(rng)
    }

    fn successor<R: Rng>(&self, rng: &mut R, t: usize, x: usize, u: usize) -> usize {
        let (n, m) = (self.problem.num_states(), self.problem.num_actions());
        let dist = self.successors[(t * n + x) * m + u]
            .as_ref()
            .expect("transition rows are stochastic");
        dist.sample(rng)
    }

    /// Cost-to-go of one rollout from `(t, x)`, optionally forcing the
    /// first action.
    fn rollout<R: Rng>(&self, rng: &mut R, t: usize, mut x: usize, first: Option<usize>) -> f64 {
        let mut total = 0.0;
        for s in t..self.problem.horizon() {
            let u = match first {
                Some(u) if s == t => u,
                _ => self.action(rng, s, x),
            };
            total += self.cost.stage(s, x, u);
            if total == f64::INFINITY {
                return total;
            }
            x = self.successor(rng, s, x, u);
        }
        total + self.cost.terminal()[x]
    }

    /// `n_samples` costs in chunk order; chunk `c` draws from stream
    /// `stream_base + c` of the seeded generator.
    fn costs(
        &self,
        t: usize,
        x: usize,
        first: Option<usize>,
        n_samples: usize,
        seed: u64,
        stream_base: u64,
    ) -> Vec<f64> {
        let chunks = n_samples.div_ceil(CHUNK_SIZE);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream_base + c as u64);
                let len = CHUNK_SIZE.min(n_samples - c * CHUNK_SIZE);
                (0..len)
                    .map(|_| self.rollout(&mut rng, t, x, first))
                    .collect()
            })
            .collect();
        parts.concat()
    }
}

/// `(log mean exp(-C), delta-method standard error of that log)`.
fn log_mean_exp(costs: &[f64]) -> Option<(f64, f64)> {
    let shift = costs.iter().copied().fold(f64::INFINITY, f64::min);
    if shift == f64::INFINITY {
        return None;
    }
    let n = costs.len() as f64;
    let weights: Vec<f64> = costs.iter().map(|c| (shift - c).exp()).collect();
    let mean = weights.iter().sum::<f64>() / n;
    let var = if costs.len() > 1 {
        weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean.ln() - shift, var.sqrt() / (n.sqrt() * mean)))
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        Err(Error::config("n_samples must be positive"))
    } else {
        Ok(())
    }
}

/// Estimates `V*_t(x) = -log E_ρ[exp(-C_t)]` from rollouts of the prior.
#[allow(clippy::too_many_arguments)]
pub fn pic_value_mc(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
    state: usize,
    t: usize,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(n_samples)?;
    if t > problem.horizon() || state >= problem.num_states() {
        return Err(Error::config(format!("(t={t}, x={state}) is out of range")));
    }
    let sampler = Sampler::new(problem, prior, cost)?;
    let costs = sampler.costs(t, state, None, n_samples, seed, 0);
    let (log_mean, std_err) = log_mean_exp(&costs).ok_or_else(|| {
        Error::Degenerate(format!(
            "every rollout weight underflowed at t={t}, x={state}"
        ))
    })?;
    Ok(McEstimate {
        value: -log_mean,
        std_err,
        n_samples,
        seed,
    })
}

/// Rollout estimate of the M-projection policy together with per-entry
/// delta-method standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PicPolicyEstimate {
    pub policy: TabularPolicy,
    /// `std_err[t][x * |U| + u]`
    pub std_err: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub seed: u64,
}

/// `π(u|x) ∝ ρ(u|x) E[exp(-C) | x_t = x, u_t = u]`, each expectation from
/// `n_samples` rollouts that force the first action.
pub fn pic_policy_mc(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
    n_samples: usize,
    seed: u64,
) -> Result<TabularPolicy> {
    pic_policy_mc_with_errors(problem, prior, cost, n_samples, seed).map(|e| e.policy)
}

pub fn pic_policy_mc_with_errors(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
    n_samples: usize,
    seed: u64,
) -> Result<PicPolicyEstimate> {
    check_samples(n_samples)?;
    let sampler = Sampler::new(problem, prior, cost)?;
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let chunks = n_samples.div_ceil(CHUNK_SIZE) as u64;
    let reachable = problem.reachable();
    let mut tables = Vec::with_capacity(horizon);
    let mut errors = Vec::with_capacity(horizon);
    for (t, reach) in reachable.iter().enumerate().take(horizon) {
        let mut table = vec![0.0; n * m];
        let mut err = vec![0.0; n * m];
        for x in 0..n {
            let row = prior.row(t, x);
            // log(ρ w) and the standard error of log w, per action
            let mut log_terms = vec![f64::NEG_INFINITY; m];
            let mut log_se = vec![0.0; m];
            for u in 0..m {
                if row[u] == 0.0 || cost.stage(t, x, u) == f64::INFINITY {
                    continue;
                }
                let cell = ((t * n + x) * m + u) as u64;
                let costs = sampler.costs(t, x, Some(u), n_samples, seed, cell * chunks);
                if let Some((log_w, se)) = log_mean_exp(&costs) {
                    log_terms[u] = row[u].ln() + log_w;
                    log_se[u] = se;
                }
            }
            let out = &mut table[x * m..(x + 1) * m];
            let lse = log_sum_exp(log_terms.iter().copied());
            if lse == f64::NEG_INFINITY {
                if reach[x] {
                    return Err(Error::Degenerate(format!("zero row mass at t={t}, x={x}")));
                }
                out.copy_from_slice(row);
                continue;
            }
            for u in 0..m {
                out[u] = (log_terms[u] - lse).exp();
            }
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|p| *p /= total);
            for u in 0..m {
                let var: f64 = (0..m)
                    .map(|v| {
                        let d = out[u] * (if u == v { 1.0 } else { 0.0 } - out[v]);
                        (d * log_se[v]).powi(2)
                    })
                    .sum();
                err[x * m + u] = var.sqrt();
            }
        }
        tables.push(table);
        errors.push(err);
    }
    Ok(PicPolicyEstimate {
        policy: TabularPolicy::new(n, m, tables)?,
        std_err: errors,
        n_samples,
        seed,
    })
}

/// Total-variation distance between the normalized desired distribution and
/// the exact closed loop of the M-projection policy.
///
/// The closed loop is started from the desired marginal over `x_0`, so the
/// comparison is of trajectory laws conditional on the initial state. The
/// two coincide with the plain closed loop when `x_0` is fixed.
///
/// The distance vanishes for deterministic dynamics. With stochastic
/// transitions the desired distribution also tilts the successor law,
/// which no policy can reproduce, and the distance is generally positive.
pub fn closed_loop_equivalence_check(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
) -> Result<f64> {
    let desired = desired_distribution(problem, prior, cost)?;
    let (_, policy) = backward_pass(problem, cost, prior, ProjectionKind::M)?;
    let target = desired.to_distribution();
    let support = Arc::clone(desired.support());
    let mut marginal = vec![0.0; problem.num_states()];
    for (i, w) in target.probabilities().iter().enumerate() {
        marginal[support.path(i)[0] as usize] += w;
    }
    let initial = problem.initial();
    let closed: Vec<f64> = support
        .probabilities(&policy)
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let x0 = support.path(i)[0] as usize;
            q * marginal[x0] / initial[x0]
        })
        .collect();
    let total: f64 = closed.iter().sum();
    let closed = closed.iter().map(|q| q / total).collect();
    let closed =
        TrajectoryDistribution::from_weights(support, Arc::new(target.costs().to_vec()), closed)?;
    total_variation(&target, &closed)
}

/// Conditional action distribution given that every optimality emission,
/// with likelihood `exp(-r)`, fired.
///
/// The backward messages are rescaled per time slice; rows with zero
/// normalizer at unreachable states keep the prior row.
pub fn exact_smoothing(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
) -> Result<TabularPolicy> {
    problem.check_policy(prior)?;
    problem.check_cost(cost)?;
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let reachable = problem.reachable();

    let rescale = |v: &mut [f64]| {
        let max = v.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            v.iter_mut().for_each(|b| *b /= max);
        }
    };
    // state messages β_{t+1}(x')
    let mut next: Vec<f64> = cost.terminal().iter().map(|r| (-r).exp()).collect();
    rescale(&mut next);
    let mut tables = vec![Vec::new(); horizon];
    for t in (0..horizon).rev() {
        let mut beta = vec![0.0; n * m];
        for x in 0..n {
            for u in 0..m {
                let emission = (-cost.stage(t, x, u)).exp();
                if emission == 0.0 {
                    continue;
                }
                let future: f64 = problem
                    .transition_row(t, x, u)
                    .iter()
                    .zip(&next)
                    .map(|(p, b)| p * b)
                    .sum();
                beta[x * m + u] = emission * future;
            }
        }
        let mut table = vec![0.0; n * m];
        let mut state = vec![0.0; n];
        for x in 0..n {
            let row = prior.row(t, x);
            let out = &mut table[x * m..(x + 1) * m];
            let mut total = 0.0;
            for u in 0..m {
                out[u] = row[u] * beta[x * m + u];
                total += out[u];
            }
            state[x] = total;
            if total > 0.0 {
                out.iter_mut().for_each(|p| *p /= total);
            } else if reachable[t][x] {
                return Err(Error::Degenerate(format!(
                    "zero smoothing normalizer at t={t}, x={x}"
                )));
            } else {
                out.copy_from_slice(row);
            }
        }
        rescale(&mut state);
        next = state;
        tables[t] = table;
    }
    TabularPolicy::new(n, m, tables)
}
