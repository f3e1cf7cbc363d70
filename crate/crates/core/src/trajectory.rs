//! Exact trajectory enumeration, the desired (cost-tilted) distribution,
//! divergences between trajectory distributions and the SOC/RSOC objectives.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{CostModel, DiscreteProblem, TabularPolicy};
use crate::numeric::{log_sum_exp, LogSumExp};

/// Default cap on the number of enumerated trajectories.
pub const DEFAULT_SUPPORT_CAP: usize = 10_000_000;

/// Number of trajectories with positive probability under the dynamics
/// (and a full-support policy), counted without enumerating them.
pub fn support_size(problem: &DiscreteProblem) -> u128 {
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let mut count = vec![1u128; n];
    for t in (0..horizon).rev() {
        let next = count;
        count = (0..n)
            .map(|x| {
                (0..m)
                    .map(|u| {
                        problem
                            .transition_row(t, x, u)
                            .iter()
                            .zip(&next)
                            .filter(|(p, _)| **p > 0.0)
                            .map(|(_, c)| *c)
                            .fold(0u128, u128::saturating_add)
                    })
                    .fold(0u128, u128::saturating_add)
            })
            .collect();
    }
    problem
        .initial()
        .iter()
        .zip(&count)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, c)| *c)
        .fold(0u128, u128::saturating_add)
}

/// The set of dynamics-feasible trajectories in lexicographic order of
/// `(x_0, u_0, x_1, …, x_T)`.
///
/// Trajectories whose probability vanishes only because of the policy are
/// kept, so distributions induced by different policies share one support.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySupport {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    paths: Vec<u32>,
    /// `p(x_0) ∏ τ_t` for every path.
    dynamics: Vec<f64>,
}

impl TrajectorySupport {
    pub fn new(problem: &DiscreteProblem) -> Result<Self> {
        Self::with_cap(problem, DEFAULT_SUPPORT_CAP)
    }

    pub fn with_cap(problem: &DiscreteProblem, cap: usize) -> Result<Self> {
        let requested = support_size(problem);
        if requested > cap as u128 {
            return Err(Error::Capacity { requested, cap });
        }
        let horizon = problem.horizon();
        let stride = 2 * horizon + 1;
        let len = requested as usize;
        let mut support = Self {
            num_states: problem.num_states(),
            num_actions: problem.num_actions(),
            horizon,
            paths: Vec::with_capacity(len * stride),
            dynamics: Vec::with_capacity(len),
        };
        let mut path = vec![0u32; stride];
        for (x0, p0) in problem.initial().iter().enumerate() {
            if *p0 > 0.0 {
                path[0] = x0 as u32;
                support.descend(problem, 0, *p0, &mut path);
            }
        }
        debug_assert_eq!(support.dynamics.len(), len);
        Ok(support)
    }

    fn descend(&mut self, problem: &DiscreteProblem, t: usize, prob: f64, path: &mut [u32]) {
        if t == self.horizon {
            self.paths.extend_from_slice(path);
            self.dynamics.push(prob);
            return;
        }
        let x = path[2 * t] as usize;
        for u in 0..self.num_actions {
            path[2 * t + 1] = u as u32;
            for (x1, p) in problem.transition_row(t, x, u).iter().enumerate() {
                if *p > 0.0 {
                    path[2 * t + 2] = x1 as u32;
                    self.descend(problem, t + 1, prob * p, path);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.dynamics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dynamics.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `[x_0, u_0, x_1, …, u_{T-1}, x_T]` of the `i`-th trajectory.
    #[inline]
    pub fn path(&self, i: usize) -> &[u32] {
        let stride = 2 * self.horizon + 1;
        &self.paths[i * stride..(i + 1) * stride]
    }

    /// Total cost `R(ξ) = r_T(x_T) + Σ_t r_t(x_t, u_t)` of every trajectory.
    pub fn costs(&self, cost: &CostModel) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let path = self.path(i);
                let stage: f64 = (0..self.horizon)
                    .map(|t| cost.stage(t, path[2 * t] as usize, path[2 * t + 1] as usize))
                    .sum();
                stage + cost.terminal()[path[2 * self.horizon] as usize]
            })
            .collect()
    }

    /// Closed-loop probability of every trajectory under `policy`.
    pub fn probabilities(&self, policy: &TabularPolicy) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let path = self.path(i);
                (0..self.horizon).fold(self.dynamics[i], |acc, t| {
                    acc * policy.prob(t, path[2 * t] as usize, path[2 * t + 1] as usize)
                })
            })
            .collect()
    }

    /// `Σ_t log π_t(u_t | x_t)` of every trajectory.
    pub fn policy_log_likelihoods(&self, policy: &TabularPolicy) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let path = self.path(i);
                (0..self.horizon)
                    .map(|t| {
                        policy
                            .prob(t, path[2 * t] as usize, path[2 * t + 1] as usize)
                            .ln()
                    })
                    .sum()
            })
            .collect()
    }

    fn check_shape(&self, policy: &TabularPolicy) -> Result<()> {
        if policy.num_states() != self.num_states
            || policy.num_actions() != self.num_actions
            || policy.horizon() != self.horizon
        {
            return Err(Error::config(
                "policy shape does not match the trajectory support",
            ));
        }
        Ok(())
    }
}

/// One enumerated trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryEntry<'a> {
    pub path: &'a [u32],
    pub probability: f64,
    pub cost: f64,
}

/// Exact closed-loop distribution over the shared trajectory support.
#[derive(Debug, Clone)]
pub struct TrajectoryDistribution {
    support: Arc<TrajectorySupport>,
    probabilities: Vec<f64>,
    costs: Arc<Vec<f64>>,
    exact: bool,
}

impl TrajectoryDistribution {
    /// Distribution of `policy` over a pre-enumerated support with
    /// pre-computed trajectory costs.
    pub fn from_support(
        support: Arc<TrajectorySupport>,
        costs: Arc<Vec<f64>>,
        policy: &TabularPolicy,
    ) -> Result<Self> {
        support.check_shape(policy)?;
        if costs.len() != support.len() {
            return Err(Error::config("cost vector does not match support"));
        }
        let probabilities = support.probabilities(policy);
        Ok(Self {
            support,
            probabilities,
            costs,
            exact: true,
        })
    }

    /// Arbitrary weights over a support, e.g. a normalized desired
    /// distribution. Weights must already sum to one.
    pub fn from_weights(
        support: Arc<TrajectorySupport>,
        costs: Arc<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != support.len() || costs.len() != support.len() {
            return Err(Error::config("weights do not match support"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::config(format!("weights sum to {total}")));
        }
        Ok(Self {
            support,
            probabilities: weights,
            costs,
            exact: true,
        })
    }

    pub fn support(&self) -> &Arc<TrajectorySupport> {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = TrajectoryEntry<'_>> + '_ {
        (0..self.len()).map(move |i| TrajectoryEntry {
            path: self.support.path(i),
            probability: self.probabilities[i],
            cost: self.costs[i],
        })
    }

    /// `E[R]` with the convention `0 · ∞ = 0`.
    pub fn expected_cost(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(self.costs.iter())
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, c)| p * c)
            .sum()
    }

    /// `-log E[exp(-R)]`.
    pub fn exponential_cost(&self) -> f64 {
        -log_sum_exp(
            self.probabilities
                .iter()
                .zip(self.costs.iter())
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, c)| p.ln() - c),
        )
    }
}

/// Closed-loop distribution of `policy`, enumerated exhaustively.
pub fn enumerate_trajectories(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
) -> Result<TrajectoryDistribution> {
    enumerate_trajectories_capped(problem, policy, cost, DEFAULT_SUPPORT_CAP)
}

pub fn enumerate_trajectories_capped(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
    cap: usize,
) -> Result<TrajectoryDistribution> {
    problem.check_policy(policy)?;
    problem.check_cost(cost)?;
    let support = Arc::new(TrajectorySupport::with_cap(problem, cap)?);
    let costs = Arc::new(support.costs(cost));
    TrajectoryDistribution::from_support(support, costs, policy)
}

/// The prior closed loop tilted by `exp(-R)` and renormalized.
#[derive(Debug, Clone)]
pub struct DesiredDistribution {
    support: Arc<TrajectorySupport>,
    costs: Arc<Vec<f64>>,
    weights: Vec<f64>,
    log_eta: f64,
    truncated: bool,
}

impl DesiredDistribution {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `η = Σ p(ξ; ρ) exp(-R(ξ))`.
    pub fn eta(&self) -> f64 {
        self.log_eta.exp()
    }

    pub fn log_eta(&self) -> f64 {
        self.log_eta
    }

    /// True when some prior-feasible trajectory lost all weight to an
    /// infinite cost; weights are then normalized over the survivors.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn support(&self) -> &Arc<TrajectorySupport> {
        &self.support
    }

    pub fn to_distribution(&self) -> TrajectoryDistribution {
        TrajectoryDistribution {
            support: Arc::clone(&self.support),
            probabilities: self.weights.clone(),
            costs: Arc::clone(&self.costs),
            exact: true,
        }
    }

    /// Tilts an already-enumerated prior distribution.
    pub fn from_prior(prior: &TrajectoryDistribution) -> Result<Self> {
        let log_terms: Vec<f64> = prior
            .probabilities
            .iter()
            .zip(prior.costs.iter())
            .map(|(p, c)| {
                if *p > 0.0 {
                    p.ln() - c
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let log_eta = log_sum_exp(log_terms.iter().copied());
        if log_eta == f64::NEG_INFINITY {
            return Err(Error::Degenerate(
                "every trajectory has zero desirability weight".to_string(),
            ));
        }
        let truncated = prior
            .probabilities
            .iter()
            .zip(prior.costs.iter())
            .any(|(p, c)| *p > 0.0 && *c == f64::INFINITY);
        let weights = log_terms.iter().map(|l| (l - log_eta).exp()).collect();
        Ok(Self {
            support: Arc::clone(&prior.support),
            costs: Arc::clone(&prior.costs),
            weights,
            log_eta,
            truncated,
        })
    }
}

pub fn desired_distribution(
    problem: &DiscreteProblem,
    prior: &TabularPolicy,
    cost: &CostModel,
) -> Result<DesiredDistribution> {
    let prior = enumerate_trajectories(problem, prior, cost)?;
    DesiredDistribution::from_prior(&prior)
}

fn check_same_support(p: &TrajectoryDistribution, q: &TrajectoryDistribution) -> Result<()> {
    if Arc::ptr_eq(&p.support, &q.support) || p.support == q.support {
        Ok(())
    } else {
        Err(Error::config(
            "divergence arguments were enumerated over different supports",
        ))
    }
}

/// Relative entropy `Σ p log(p/q)`; `+∞` when `p` puts mass where `q` has none.
pub fn kl(p: &TrajectoryDistribution, q: &TrajectoryDistribution) -> Result<f64> {
    check_same_support(p, q)?;
    Ok(kl_slices(&p.probabilities, &q.probabilities))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (a, b) in p.iter().zip(q) {
        if *a > 0.0 {
            if *b <= 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total
}

/// Rényi divergence `(1/(α(α-1))) log Σ p^α q^{1-α}` for `α ∈ (0, 1)`.
///
/// Tends to `kl(p, q)` as `α → 1` and to `kl(q, p)` as `α → 0`.
pub fn renyi(p: &TrajectoryDistribution, q: &TrajectoryDistribution, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "Rényi order must lie strictly inside (0, 1), got {alpha}; use kl for the limits"
        )));
    }
    check_same_support(p, q)?;
    let log_mass = log_sum_exp(
        p.probabilities
            .iter()
            .zip(&q.probabilities)
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| alpha * a.ln() + (1.0 - alpha) * b.ln()),
    );
    Ok(log_mass / (alpha * (alpha - 1.0)))
}

/// Total-variation distance `½ Σ |p - q|`.
pub fn total_variation(p: &TrajectoryDistribution, q: &TrajectoryDistribution) -> Result<f64> {
    check_same_support(p, q)?;
    Ok(0.5
        * p.probabilities
            .iter()
            .zip(&q.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// The SOC objective `A = E[R]` and the risk-seeking RSOC objective
/// `B = -log E[exp(-R)]` of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objectives {
    pub a: f64,
    pub b: f64,
}

/// Both objectives over the exact trajectory distribution.
///
/// Streams the enumeration depth-first instead of materializing it.
pub fn objectives(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
) -> Result<Objectives> {
    objectives_capped(problem, policy, cost, DEFAULT_SUPPORT_CAP)
}

pub fn objectives_capped(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
    cap: usize,
) -> Result<Objectives> {
    problem.check_policy(policy)?;
    problem.check_cost(cost)?;
    let requested = support_size(problem);
    if requested > cap as u128 {
        return Err(Error::Capacity { requested, cap });
    }

    // Linear-space B with per-step minimum-cost shifts; the log-space walk
    // only runs when every weight underflows.
    let horizon = problem.horizon();
    let shift = |table: &[f64]| {
        let c = table.iter().cloned().fold(f64::INFINITY, f64::min);
        if c.is_finite() {
            c
        } else {
            0.0
        }
    };
    let mut offset = 0.0;
    let mut factors: Vec<Vec<f64>> = (0..horizon)
        .map(|t| {
            let table = cost.stage_table(t);
            let c = shift(table);
            offset += c;
            table.iter().map(|r| (c - r).exp()).collect()
        })
        .collect();
    let c = shift(cost.terminal());
    offset += c;
    factors.push(cost.terminal().iter().map(|r| (c - r).exp()).collect());

    let mut walk = Walk {
        problem,
        policy,
        cost,
        factors: &factors,
        a: 0.0,
        linear: 0.0,
        log: None,
    };
    walk.run();
    let b = if walk.linear > 0.0 && walk.linear.is_finite() {
        offset - walk.linear.ln()
    } else {
        walk.log = Some(LogSumExp::new());
        walk.a = 0.0;
        walk.run();
        -walk.log.expect("log walk").value()
    };
    Ok(Objectives { a: walk.a, b })
}

struct Walk<'a> {
    problem: &'a DiscreteProblem,
    policy: &'a TabularPolicy,
    cost: &'a CostModel,
    /// `exp(min r_t - r_t)` per step, terminal last.
    factors: &'a [Vec<f64>],
    a: f64,
    linear: f64,
    log: Option<LogSumExp>,
}

impl Walk<'_> {
    fn run(&mut self) {
        for (x0, p0) in self.problem.initial().iter().enumerate() {
            if *p0 > 0.0 {
                self.descend(0, x0, *p0, 0.0, 1.0);
            }
        }
    }

    fn descend(&mut self, t: usize, x: usize, prob: f64, acc: f64, weight: f64) {
        let horizon = self.problem.horizon();
        if t == horizon {
            let total = acc + self.cost.terminal()[x];
            self.a += prob * total;
            match &mut self.log {
                Some(log) => log.push(prob.ln() - total),
                None => self.linear += prob * weight * self.factors[horizon][x],
            }
            return;
        }
        let m = self.problem.num_actions();
        for u in 0..m {
            let pu = prob * self.policy.prob(t, x, u);
            if pu == 0.0 {
                continue;
            }
            let stage = acc + self.cost.stage(t, x, u);
            let w = weight * self.factors[t][x * m + u];
            for (x1, p) in self.problem.transition_row(t, x, u).iter().enumerate() {
                if *p > 0.0 {
                    self.descend(t + 1, x1, pu * p, stage, w);
                }
            }
        }
    }
}

/// Per-state cost-to-go of a fixed policy under both objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    /// `expected[t][x] = E[R(ξ_{t:T}) | x_t = x]`
    pub expected: Vec<Vec<f64>>,
    /// `exponential[t][x] = -log E[exp(-R(ξ_{t:T})) | x_t = x]`
    pub exponential: Vec<Vec<f64>>,
}

impl PolicyValues {
    pub fn objective_a(&self, problem: &DiscreteProblem) -> f64 {
        problem
            .initial()
            .iter()
            .zip(&self.expected[0])
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }

    pub fn objective_b(&self, problem: &DiscreteProblem) -> f64 {
        -log_sum_exp(
            problem
                .initial()
                .iter()
                .zip(&self.exponential[0])
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, v)| p.ln() - v),
        )
    }

    pub fn objectives(&self, problem: &DiscreteProblem) -> Objectives {
        Objectives {
            a: self.objective_a(problem),
            b: self.objective_b(problem),
        }
    }
}

/// Backward policy evaluation; agrees with [`objectives`] at the initial
/// distribution without enumerating trajectories.
pub fn policy_evaluation(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
) -> Result<PolicyValues> {
    problem.check_policy(policy)?;
    problem.check_cost(cost)?;
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );
    let mut expected = vec![Vec::new(); horizon + 1];
    let mut exponential = vec![Vec::new(); horizon + 1];
    expected[horizon] = cost.terminal().to_vec();
    exponential[horizon] = cost.terminal().to_vec();
    for t in (0..horizon).rev() {
        let mut e_row = vec![0.0; n];
        let mut x_row = vec![0.0; n];
        for x in 0..n {
            let mut mean = 0.0;
            let mut lse = LogSumExp::new();
            for u in 0..m {
                let pu = policy.prob(t, x, u);
                if pu == 0.0 {
                    continue;
                }
                let r = cost.stage(t, x, u);
                for (x1, p) in problem.transition_row(t, x, u).iter().enumerate() {
                    if *p > 0.0 {
                        let w = pu * p;
                        mean += w * (r + expected[t + 1][x1]);
                        lse.push(w.ln() - r - exponential[t + 1][x1]);
                    }
                }
            }
            e_row[x] = mean;
            x_row[x] = -lse.value();
        }
        expected[t] = e_row;
        exponential[t] = x_row;
    }
    Ok(PolicyValues {
        expected,
        exponential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn objectives_survive_underflowing_weights() {
        let (problem, _) = fixtures::chain2();
        let policy = TabularPolicy::uniform_for(&problem);
        // every reachable path carries 800 while the per-step minimum is 0
        let cost = CostModel::new(vec![vec![800.0, 800.0, 0.0, 0.0]], vec![0.0, 1.0], 1.0).unwrap();
        let obj = objectives(&problem, &policy, &cost).unwrap();
        let want = 800.0 - (0.5 + 0.5 * (-1.0f64).exp()).ln();
        assert!((obj.b - want).abs() < 1e-12, "{}", obj.b);
        assert!((obj.a - 800.5).abs() < 1e-12);
        let eval = policy_evaluation(&problem, &policy, &cost)
            .unwrap()
            .objectives(&problem);
        assert!((eval.b - obj.b).abs() < 1e-12);
    }

    #[test]
    fn single_outcome_problem() {
        let problem = DiscreteProblem::new(1, 1, vec![1.0], vec![vec![1.0]]).unwrap();
        let policy = TabularPolicy::uniform_for(&problem);
        let dist = enumerate_trajectories(&problem, &policy, &CostModel::zero(&problem)).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist.probabilities(), &[1.0]);
    }

    #[test]
    fn chain2_enumeration() {
        let (problem, cost) = fixtures::chain2();
        let dist =
            enumerate_trajectories(&problem, &TabularPolicy::uniform_for(&problem), &cost).unwrap();
        let entries: Vec<_> = dist.iter().collect();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].path, &[0, 0, 0]);
        assert_eq!(entries[1].path, &[0, 1, 1]);
        assert_eq!(dist.probabilities(), &[0.5, 0.5]);
        assert_eq!(dist.costs(), &[0.0, 1.0]);

        let delta = TabularPolicy::deterministic(2, 2, &[vec![0, 0]]).unwrap();
        let dist = enumerate_trajectories(&problem, &delta, &cost).unwrap();
        assert_eq!(dist.probabilities(), &[1.0, 0.0]);
    }

    #[test]
    fn capacity_is_enforced() {
        let (problem, cost) = fixtures::chain2();
        let err = enumerate_trajectories_capped(
            &problem,
            &TabularPolicy::uniform_for(&problem),
            &cost,
            1,
        );
        assert!(matches!(
            err,
            Err(Error::Capacity {
                requested: 2,
                cap: 1
            })
        ));
        let bad = TabularPolicy::uniform(2, 2, 3);
        assert!(matches!(
            enumerate_trajectories(&problem, &bad, &cost),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn chain2_desired_distribution() {
        let (problem, cost) = fixtures::chain2();
        let desired =
            desired_distribution(&problem, &TabularPolicy::uniform_for(&problem), &cost).unwrap();
        // η = ½(1 + e^{-1})
        assert!((desired.eta() - 0.683_939_720_585_721).abs() < 1e-12);
        assert!((desired.weights()[0] - 0.731_058_578_630_005).abs() < 1e-12);
        assert!((desired.weights()[1] - 0.268_941_421_369_995).abs() < 1e-12);
        assert!(!desired.is_truncated());
    }

    #[test]
    fn zero_cost_desired_equals_prior() {
        let (problem, _) = fixtures::chain2();
        let cost = CostModel::zero(&problem);
        let prior = TabularPolicy::uniform_for(&problem);
        let desired = desired_distribution(&problem, &prior, &cost).unwrap();
        assert_eq!(desired.eta(), 1.0);
        assert_eq!(desired.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn infinite_cost_trajectory_gets_zero_weight() {
        let (problem, _) = fixtures::chain2();
        let cost = CostModel::new(vec![vec![0.0; 4]], vec![0.0, f64::INFINITY], 1.0).unwrap();
        let desired =
            desired_distribution(&problem, &TabularPolicy::uniform_for(&problem), &cost).unwrap();
        assert_eq!(desired.weights(), &[1.0, 0.0]);
        assert!(desired.is_truncated());

        let all_forbidden =
            CostModel::new(vec![vec![0.0; 4]], vec![f64::INFINITY; 2], 1.0).unwrap();
        assert!(matches!(
            desired_distribution(
                &problem,
                &TabularPolicy::uniform_for(&problem),
                &all_forbidden
            ),
            Err(Error::Degenerate(_))
        ));
    }

    fn two_point(p: [f64; 2]) -> TrajectoryDistribution {
        let (problem, cost) = fixtures::chain2();
        let policy = TabularPolicy::new(2, 2, vec![vec![p[0], p[1], 0.5, 0.5]]).unwrap();
        enumerate_trajectories(&problem, &policy, &cost).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = two_point([0.5, 0.5]);
        let q = two_point([0.75, 0.25]);
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        // ½ log(2/3) + ½ log 2
        assert!((kl(&p, &q).unwrap() - 0.143_841_036_225_890).abs() < 1e-12);
        let a = two_point([1.0, 0.0]);
        let b = two_point([0.0, 1.0]);
        assert_eq!(kl(&a, &b).unwrap(), f64::INFINITY);
    }

    #[test]
    fn renyi_examples_and_limits() {
        let p = two_point([0.5, 0.5]);
        let q = two_point([0.75, 0.25]);
        assert!(renyi(&p, &p, 0.5).unwrap().abs() < 1e-15);
        let near_one = renyi(&p, &q, 0.999).unwrap();
        assert!((near_one - kl(&p, &q).unwrap()).abs() < 1e-2);
        let near_zero = renyi(&p, &q, 0.001).unwrap();
        assert!((near_zero - kl(&q, &p).unwrap()).abs() < 1e-2);
        for alpha in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(renyi(&p, &q, alpha), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn chain2_objectives() {
        let (problem, cost) = fixtures::chain2();
        let obj = objectives(&problem, &TabularPolicy::uniform_for(&problem), &cost).unwrap();
        assert!((obj.a - 0.5).abs() < 1e-15);
        assert!((obj.b - 0.379_885_493_041_722).abs() < 1e-12);
        let zero = objectives(
            &problem,
            &TabularPolicy::uniform_for(&problem),
            &CostModel::zero(&problem),
        )
        .unwrap();
        assert_eq!((zero.a, zero.b), (0.0, 0.0));
    }
}
