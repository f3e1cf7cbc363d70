//! Majorize-minimize fixed-point iterations.
//!
//! Feeding the I-projection policy back in as the next prior descends the
//! expected cost `A`; feeding the M-projection policy back descends the
//! risk-seeking objective `B`. Both iterations concentrate onto the
//! deterministic optimal policy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{CostModel, DiscreteProblem, TabularPolicy};
use crate::projection::{backward_pass, ProjectionKind};
use crate::trajectory::{
    kl_slices, objectives_capped, policy_evaluation, support_size, DesiredDistribution, Objectives,
    TrajectoryDistribution, TrajectorySupport,
};

/// Slack allowed on the monitored objective between iterations.
pub const DESCENT_SLACK: f64 = 1e-10;

/// Largest support monitored by exact enumeration; larger problems use the
/// policy-evaluation identity at the initial distribution.
pub const MONITOR_ENUMERATION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmMode {
    /// Iterated I-projection, descending `A = E[R]`.
    Soc,
    /// Iterated M-projection, descending `B = -log E[exp(-R)]`.
    Rsoc,
}

impl MmMode {
    pub fn kind(self) -> ProjectionKind {
        match self {
            MmMode::Soc => ProjectionKind::I,
            MmMode::Rsoc => ProjectionKind::M,
        }
    }

    fn monitored(self, obj: Objectives) -> f64 {
        match self {
            MmMode::Soc => obj.a,
            MmMode::Rsoc => obj.b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MmInit {
    Uniform,
    Custom(TabularPolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MMConfig {
    pub max_iters: usize,
    /// Sup-norm policy change below which the policy is considered fixed.
    pub tol_policy: f64,
    /// Objective change below which the objective is considered flat.
    pub tol_objective: f64,
    pub init: MmInit,
}

impl Default for MMConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol_policy: 1e-9,
            tol_objective: 1e-12,
            init: MmInit::Uniform,
        }
    }
}

impl MMConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if !(self.tol_policy > 0.0 && self.tol_objective > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective_a: f64,
    pub objective_b: f64,
    /// `None` for the initial policy.
    pub policy_delta: Option<f64>,
    pub residual_mass: f64,
    /// Argmax actions unchanged since the previous iterate.
    pub argmax_stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MMTrace {
    pub mode: MmMode,
    pub rows: Vec<TraceRow>,
    pub policy: TabularPolicy,
    pub converged: bool,
    pub iterations: usize,
}

impl MMTrace {
    pub fn monitored(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| match self.mode {
            MmMode::Soc => r.objective_a,
            MmMode::Rsoc => r.objective_b,
        })
    }
}

fn monitor(
    problem: &DiscreteProblem,
    policy: &TabularPolicy,
    cost: &CostModel,
    exact: bool,
) -> Result<Objectives> {
    if exact {
        objectives_capped(problem, policy, cost, MONITOR_ENUMERATION_CAP)
    } else {
        Ok(policy_evaluation(problem, policy, cost)?.objectives(problem))
    }
}

/// Runs the fixed-point iteration until both the policy and the monitored
/// objective stop moving, or `max_iters` backward passes were spent.
pub fn mm_iterate(
    problem: &DiscreteProblem,
    cost: &CostModel,
    mode: MmMode,
    config: &MMConfig,
) -> Result<MMTrace> {
    config.validate()?;
    problem.check_cost(cost)?;
    let mut policy = match &config.init {
        MmInit::Uniform => TabularPolicy::uniform_for(problem),
        MmInit::Custom(p) => {
            problem.check_policy(p)?;
            p.clone()
        }
    };
    let exact = support_size(problem) <= MONITOR_ENUMERATION_CAP as u128;

    let obj = monitor(problem, &policy, cost, exact)?;
    let mut rows = vec![TraceRow {
        iter: 0,
        objective_a: obj.a,
        objective_b: obj.b,
        policy_delta: None,
        residual_mass: policy.residual_mass(),
        argmax_stable: false,
    }];
    let mut previous = mode.monitored(obj);
    let mut argmax = extract_deterministic(&policy, 0.0).actions;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iters {
        let (_, next) = backward_pass(problem, cost, &policy, mode.kind())?;
        let delta = next.sup_distance(&policy);
        let obj = monitor(problem, &next, cost, exact)?;
        let current = mode.monitored(obj);
        if current > previous + DESCENT_SLACK {
            return Err(Error::NonMonotone {
                iter,
                before: previous,
                after: current,
            });
        }
        let next_argmax = extract_deterministic(&next, 0.0).actions;
        rows.push(TraceRow {
            iter,
            objective_a: obj.a,
            objective_b: obj.b,
            policy_delta: Some(delta),
            residual_mass: next.residual_mass(),
            argmax_stable: next_argmax == argmax,
        });
        let flat = (previous - current).abs() < config.tol_objective || previous == current;
        policy = next;
        argmax = next_argmax;
        previous = current;
        iterations = iter;
        if delta < config.tol_policy && flat {
            converged = true;
            break;
        }
    }

    Ok(MMTrace {
        mode,
        rows,
        policy,
        converged,
        iterations,
    })
}

/// Argmax read-off of a probabilistic policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicPolicy {
    /// `actions[t][x]`, lowest index on ties.
    pub actions: Vec<Vec<usize>>,
    /// Largest `1 - max_u π_t(u|x)`.
    pub max_residual: f64,
    /// `max_residual <= mass_tol`.
    pub within_tol: bool,
}

impl DeterministicPolicy {
    pub fn to_policy(&self, num_states: usize, num_actions: usize) -> TabularPolicy {
        TabularPolicy::deterministic(num_states, num_actions, &self.actions)
            .expect("argmax actions are in range")
    }
}

pub fn extract_deterministic(policy: &TabularPolicy, mass_tol: f64) -> DeterministicPolicy {
    let m = policy.num_actions();
    let mut max_residual: f64 = 0.0;
    let actions = policy
        .tables()
        .iter()
        .map(|table| {
            table
                .chunks_exact(m)
                .map(|row| {
                    let (best, mass) =
                        row.iter()
                            .enumerate()
                            .fold((0, f64::NEG_INFINITY), |acc, (u, p)| {
                                if *p > acc.1 {
                                    (u, *p)
                                } else {
                                    acc
                                }
                            });
                    max_residual = max_residual.max(1.0 - mass);
                    best
                })
                .collect()
        })
        .collect();
    DeterministicPolicy {
        actions,
        max_residual,
        within_tol: max_residual <= mass_tol,
    }
}

/// Tolerance on the constancy of the majorization and MERL decompositions.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

/// Outcome of checking one surrogate decomposition over a probe set.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    /// Closed-form value every probe should reproduce.
    pub constant: f64,
    /// Largest `|c(probe) - constant|`.
    pub max_deviation: f64,
    /// Largest `objective - surrogate`; nonpositive up to the tolerance.
    pub max_domination_excess: f64,
    /// `|objective - surrogate|` at the prior (tangency).
    pub tangency_gap: f64,
    /// Probes skipped because a divergence was infinite.
    pub skipped: usize,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.max_deviation < DECOMPOSITION_TOL
            && self.max_domination_excess <= DECOMPOSITION_TOL
            && self.tangency_gap < DECOMPOSITION_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationReport {
    /// `A[π] + D[p_π‖p_ρ] - D[p_π‖p̂*] = -log η[ρ]`
    pub soc: BoundCheck,
    /// `B[π] - D[p̂*_ρ‖p_π] + D[p̂*_ρ‖p̂*_π] = E_{p̂*_ρ}[R]`
    pub rsoc: BoundCheck,
}

impl MajorizationReport {
    pub fn passed(&self) -> bool {
        self.soc.passed() && self.rsoc.passed()
    }
}

struct Enumerated {
    support: Arc<TrajectorySupport>,
    costs: Arc<Vec<f64>>,
}

impl Enumerated {
    fn new(problem: &DiscreteProblem, cost: &CostModel) -> Result<Self> {
        problem.check_cost(cost)?;
        let support = Arc::new(TrajectorySupport::new(problem)?);
        let costs = Arc::new(support.costs(cost));
        Ok(Self { support, costs })
    }

    fn closed_loop(&self, policy: &TabularPolicy) -> Result<TrajectoryDistribution> {
        TrajectoryDistribution::from_support(
            Arc::clone(&self.support),
            Arc::clone(&self.costs),
            policy,
        )
    }
}

/// Verifies the decompositions that make the I- and M-projection
/// objectives majorize `A` and `B` at the anchor `prior`.
///
/// The `B` check needs probes with full support on the prior's support;
/// others are counted in [`BoundCheck::skipped`].
pub fn majorization_report(
    problem: &DiscreteProblem,
    cost: &CostModel,
    prior: &TabularPolicy,
    probes: &[TabularPolicy],
) -> Result<MajorizationReport> {
    problem.check_policy(prior)?;
    let en = Enumerated::new(problem, cost)?;
    let p_rho = en.closed_loop(prior)?;
    let desired_rho = DesiredDistribution::from_prior(&p_rho)?;
    let w_rho = desired_rho.weights();
    let log_eta = desired_rho.log_eta();

    let soc_constant = -log_eta;
    let rsoc_constant: f64 = w_rho
        .iter()
        .zip(en.costs.iter())
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, c)| w * c)
        .sum();

    let mut soc = BoundCheck {
        constant: soc_constant,
        max_deviation: 0.0,
        max_domination_excess: f64::NEG_INFINITY,
        tangency_gap: 0.0,
        skipped: 0,
    };
    let mut rsoc = BoundCheck {
        constant: rsoc_constant,
        ..soc.clone()
    };

    // tangency at the prior
    {
        let a = p_rho.expected_cost();
        let b = p_rho.exponential_cost();
        soc.tangency_gap = (a - (kl_slices(p_rho.probabilities(), w_rho) - log_eta)).abs();
        rsoc.tangency_gap = (b - (kl_slices(w_rho, p_rho.probabilities()) + rsoc_constant)).abs();
    }

    for probe in probes {
        problem.check_policy(probe)?;
        let p_pi = en.closed_loop(probe)?;
        let probs = p_pi.probabilities();

        let a = p_pi.expected_cost();
        let kl_prior = kl_slices(probs, p_rho.probabilities());
        let kl_desired = kl_slices(probs, w_rho);
        if kl_prior.is_finite() && kl_desired.is_finite() {
            let c = a + kl_prior - kl_desired;
            soc.max_deviation = soc.max_deviation.max((c - soc_constant).abs());
            soc.max_domination_excess = soc.max_domination_excess.max(a - (kl_desired - log_eta));
        } else {
            soc.skipped += 1;
        }

        let b = p_pi.exponential_cost();
        let kl_cover = kl_slices(w_rho, probs);
        let tilted = DesiredDistribution::from_prior(&p_pi).ok();
        match tilted {
            Some(tilted) if kl_cover.is_finite() => {
                let kl_tilted = kl_slices(w_rho, tilted.weights());
                let c = b - kl_cover + kl_tilted;
                rsoc.max_deviation = rsoc.max_deviation.max((c - rsoc_constant).abs());
                rsoc.max_domination_excess = rsoc
                    .max_domination_excess
                    .max(b - (kl_cover + rsoc_constant));
            }
            _ => rsoc.skipped += 1,
        }
    }
    for check in [&mut soc, &mut rsoc] {
        if check.max_domination_excess == f64::NEG_INFINITY {
            check.max_domination_excess = 0.0;
        }
    }
    Ok(MajorizationReport { soc, rsoc })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    /// `T log|U| + log η[ν]` for the uniform reference `ν`.
    pub constant: f64,
    pub max_deviation: f64,
    pub skipped: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_deviation < DECOMPOSITION_TOL
    }
}

/// Checks that `D[p_π ‖ p̂*(·; ν)] - (A[π] + Σ_t E_{p_π}[log π_t(u_t|x_t)])`
/// is the same for every probe, with `ν` uniform: the I-projection
/// objective against a uniform reference is entropy-regularized expected
/// cost.
pub fn merl_identity_check(
    problem: &DiscreteProblem,
    cost: &CostModel,
    probes: &[TabularPolicy],
) -> Result<IdentityCheck> {
    let en = Enumerated::new(problem, cost)?;
    let reference = TabularPolicy::uniform_for(problem);
    let p_nu = en.closed_loop(&reference)?;
    let desired = DesiredDistribution::from_prior(&p_nu)?;
    let constant =
        problem.horizon() as f64 * (problem.num_actions() as f64).ln() + desired.log_eta();

    let mut check = IdentityCheck {
        constant,
        max_deviation: 0.0,
        skipped: 0,
    };
    for probe in probes {
        problem.check_policy(probe)?;
        let p_pi = en.closed_loop(probe)?;
        let probs = p_pi.probabilities();
        let kl_desired = kl_slices(probs, desired.weights());
        if !kl_desired.is_finite() {
            check.skipped += 1;
            continue;
        }
        let log_lik = en.support.policy_log_likelihoods(probe);
        let expected_log_lik: f64 = probs
            .iter()
            .zip(&log_lik)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, l)| p * l)
            .sum();
        let c = kl_desired - (p_pi.expected_cost() + expected_log_lik);
        check.max_deviation = check.max_deviation.max((c - constant).abs());
    }
    Ok(check)
}
