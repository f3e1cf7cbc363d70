//! Backward recursions for the I-, M- and Rényi-projection policies.
//!
//! All three share the same structure. Starting from `V_T = r_T`, for
//! `t = T-1, …, 0`:
//!
//! ```text
//! Q_t(x, u) = r_t(x, u) + Φ[V_{t+1}](x, u)
//! V_t(x)    = -log Σ_u ρ_t(u|x) exp(-Q_t(x, u))
//! π_t(u|x)  = ρ_t(u|x) exp(V_t(x) - Q_t(x, u))
//! ```
//!
//! and only the successor aggregate `Φ` differs: the expectation
//! `E_τ[V]` (I), the soft-min `-log E_τ[exp(-V)]` (M), or the tempered
//! soft-min `-(1/α) log E_τ[exp(-α V)]` (Rényi).

use crate::error::{Error, Result};
use crate::model::{CostModel, DiscreteProblem, TabularPolicy};
use crate::numeric::{log_sum_exp, LogSumExp};

/// Which divergence the projection minimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionKind {
    /// Mode-seeking `D[p_π ‖ p*]`.
    I,
    /// Mode-covering `D[p* ‖ p_π]`.
    M,
    /// Rényi order strictly inside `(0, 1)`; construct with [`ProjectionKind::renyi`].
    Renyi(f64),
}

impl ProjectionKind {
    pub fn renyi(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(ProjectionKind::Renyi(alpha))
        } else {
            Err(Error::Domain(format!(
                "Rényi order must lie strictly inside (0, 1), got {alpha}; \
                 use the I-projection for α = 0 and the M-projection for α = 1"
            )))
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            ProjectionKind::Renyi(alpha) => Self::renyi(alpha),
            kind => Ok(kind),
        }
    }

    /// Successor aggregate over one transition row.
    #[inline]
    fn aggregate(self, row: &[f64], next: &[f64]) -> f64 {
        match self {
            ProjectionKind::I => {
                let mut mean = 0.0;
                for (p, v) in row.iter().zip(next) {
                    if *p > 0.0 {
                        mean += p * v;
                    }
                }
                mean
            }
            ProjectionKind::M => {
                let mut acc = LogSumExp::new();
                for (p, v) in row.iter().zip(next) {
                    if *p > 0.0 {
                        acc.push(p.ln() - v);
                    }
                }
                -acc.value()
            }
            ProjectionKind::Renyi(alpha) => {
                let mut acc = LogSumExp::new();
                for (p, v) in row.iter().zip(next) {
                    if *p > 0.0 {
                        acc.push(p.ln() - alpha * v);
                    }
                }
                -acc.value() / alpha
            }
        }
    }
}

/// State-action and state values produced by one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    /// `q[t][x * |U| + u]` for `t < T`.
    pub q: Vec<Vec<f64>>,
    /// `v[t][x]` for `t ≤ T`.
    pub v: Vec<Vec<f64>>,
    pub kind: ProjectionKind,
    /// `(t, x)` cells where every action has infinite `Q`; the policy keeps
    /// the prior row there.
    pub infeasible: Vec<(usize, usize)>,
}

impl ValueTables {
    pub fn num_actions(&self) -> usize {
        self.q[0].len() / self.v[0].len()
    }

    #[inline]
    pub fn q(&self, t: usize, x: usize, u: usize) -> f64 {
        self.q[t][x * self.num_actions() + u]
    }

    /// Largest absolute difference between the `Q` tables.
    pub fn q_distance(&self, other: &ValueTables) -> f64 {
        self.q
            .iter()
            .flatten()
            .zip(other.q.iter().flatten())
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

/// One exact backward pass; returns the value tables and the projection
/// policy relative to `prior`.
pub fn backward_pass(
    problem: &DiscreteProblem,
    cost: &CostModel,
    prior: &TabularPolicy,
    kind: ProjectionKind,
) -> Result<(ValueTables, TabularPolicy)> {
    let kind = kind.validate()?;
    problem.check_policy(prior)?;
    problem.check_cost(cost)?;
    let (n, m, horizon) = (
        problem.num_states(),
        problem.num_actions(),
        problem.horizon(),
    );

    let mut q = vec![Vec::new(); horizon];
    let mut v = vec![Vec::new(); horizon + 1];
    v[horizon] = cost.terminal().to_vec();
    let mut infeasible = Vec::new();

    for t in (0..horizon).rev() {
        let mut q_t = vec![0.0; n * m];
        let mut v_t = vec![0.0; n];
        for x in 0..n {
            for u in 0..m {
                let r = cost.stage(t, x, u);
                let value = if r == f64::INFINITY {
                    f64::INFINITY
                } else {
                    r + kind.aggregate(problem.transition_row(t, x, u), &v[t + 1])
                };
                if value.is_nan() {
                    return Err(Error::numeric(t, x, format!("Q is NaN for action {u}")));
                }
                q_t[x * m + u] = value;
            }
            let row = prior.row(t, x);
            let lse = log_sum_exp(
                row.iter()
                    .zip(&q_t[x * m..(x + 1) * m])
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, q)| p.ln() - q),
            );
            if lse.is_nan() || lse == f64::INFINITY {
                return Err(Error::numeric(
                    t,
                    x,
                    "log-partition over actions overflowed",
                ));
            }
            if lse == f64::NEG_INFINITY {
                infeasible.push((t, x));
            }
            v_t[x] = -lse;
        }
        q[t] = q_t;
        v[t] = v_t;
    }
    infeasible.reverse();

    let values = ValueTables {
        q,
        v,
        kind,
        infeasible,
    };
    let policy = policy_from_values(prior, &values)?;
    Ok((values, policy))
}

/// `π_t(u|x) = ρ_t(u|x) exp(V_t(x) - Q_t(x, u))`, row-renormalized.
///
/// Rows whose `V` is `+∞` (every action forbidden) reproduce the prior row.
pub fn policy_from_values(prior: &TabularPolicy, values: &ValueTables) -> Result<TabularPolicy> {
    let (n, m) = (prior.num_states(), prior.num_actions());
    if values.q.len() != prior.horizon()
        || values.v.first().map(Vec::len) != Some(n)
        || values.num_actions() != m
    {
        return Err(Error::config("value tables do not match the prior policy"));
    }
    let mut tables = Vec::with_capacity(prior.horizon());
    for t in 0..prior.horizon() {
        let mut table = vec![0.0; n * m];
        for x in 0..n {
            let v = values.v[t][x];
            let row = prior.row(t, x);
            let out = &mut table[x * m..(x + 1) * m];
            if v == f64::INFINITY {
                out.copy_from_slice(row);
                continue;
            }
            let mut total = 0.0;
            for u in 0..m {
                let p = row[u];
                let q = values.q(t, x, u);
                out[u] = if p == 0.0 || q == f64::INFINITY {
                    0.0
                } else {
                    let exponent = v - q;
                    if !exponent.is_finite() {
                        return Err(Error::numeric(
                            t,
                            x,
                            format!("non-finite exponent V - Q = {exponent}"),
                        ));
                    }
                    p * exponent.exp()
                };
                total += out[u];
            }
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::numeric(t, x, format!("policy row mass {total}")));
            }
            out.iter_mut().for_each(|p| *p /= total);
        }
        tables.push(table);
    }
    TabularPolicy::new(n, m, tables)
}
