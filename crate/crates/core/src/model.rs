//! Finite controlled Markov chains, their stage costs and tabular policies.
//!
//! All tables are stored flat and row-major: a transition table for step `t`
//! is indexed `[(x * |U| + u) * |X| + x']`, stage costs and policies are
//! indexed `[x * |U| + u]`.

use crate::error::{Error, Result};

/// Tolerance on probability rows summing to one.
pub const STOCHASTIC_TOL: f64 = 1e-12;

fn check_distribution(row: &[f64], what: impl Fn() -> String) -> Result<()> {
    if let Some(bad) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::config(format!(
            "{}: invalid probability {bad}",
            what()
        )));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::config(format!(
            "{}: sums to {total}, expected 1",
            what()
        )));
    }
    Ok(())
}

/// A finite-horizon controlled Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    num_states: usize,
    num_actions: usize,
    initial: Vec<f64>,
    transitions: Vec<Vec<f64>>,
}

impl DiscreteProblem {
    /// Builds a problem from one transition table per step; the horizon is
    /// the number of tables.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::config("state and action counts must be positive"));
        }
        if transitions.is_empty() {
            return Err(Error::config("horizon must be positive"));
        }
        if initial.len() != num_states {
            return Err(Error::config(format!(
                "initial distribution has {} entries, expected {num_states}",
                initial.len()
            )));
        }
        check_distribution(&initial, || "initial distribution".to_string())?;
        let table_len = num_states * num_actions * num_states;
        for (t, table) in transitions.iter().enumerate() {
            if table.len() != table_len {
                return Err(Error::config(format!(
                    "transition table {t} has {} entries, expected {table_len}",
                    table.len()
                )));
            }
            for (row_idx, row) in table.chunks_exact(num_states).enumerate() {
                let (x, u) = (row_idx / num_actions, row_idx % num_actions);
                check_distribution(row, || format!("transition row t={t} x={x} u={u}"))?;
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            initial,
            transitions,
        })
    }

    /// Same transition table at every step.
    pub fn time_invariant(
        num_states: usize,
        num_actions: usize,
        initial: Vec<f64>,
        table: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(num_states, num_actions, initial, vec![table; horizon])
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition_table(&self, t: usize) -> &[f64] {
        &self.transitions[t]
    }

    /// Distribution of `x_{t+1}` given `(x_t, u_t) = (x, u)`.
    #[inline]
    pub fn transition_row(&self, t: usize, x: usize, u: usize) -> &[f64] {
        let n = self.num_states;
        let start = (x * self.num_actions + u) * n;
        &self.transitions[t][start..start + n]
    }

    /// True when every transition row is a point mass.
    pub fn is_deterministic(&self) -> bool {
        self.transitions
            .iter()
            .flat_map(|table| table.iter())
            .all(|p| *p == 0.0 || *p == 1.0)
    }

    /// `reachable[t][x]` is true when `x_t = x` has positive probability under
    /// some policy with full support.
    pub fn reachable(&self) -> Vec<Vec<bool>> {
        let n = self.num_states;
        let mut out = Vec::with_capacity(self.horizon() + 1);
        out.push(self.initial.iter().map(|p| *p > 0.0).collect::<Vec<_>>());
        for t in 0..self.horizon() {
            let prev = &out[t];
            let mut next = vec![false; n];
            for x in (0..n).filter(|x| prev[*x]) {
                for u in 0..self.num_actions {
                    for (x1, p) in self.transition_row(t, x, u).iter().enumerate() {
                        if *p > 0.0 {
                            next[x1] = true;
                        }
                    }
                }
            }
            out.push(next);
        }
        out
    }

    pub(crate) fn check_policy(&self, policy: &TabularPolicy) -> Result<()> {
        if policy.num_states() != self.num_states
            || policy.num_actions() != self.num_actions
            || policy.horizon() != self.horizon()
        {
            return Err(Error::config(format!(
                "policy shape (|X|={}, |U|={}, T={}) does not match problem (|X|={}, |U|={}, T={})",
                policy.num_states(),
                policy.num_actions(),
                policy.horizon(),
                self.num_states,
                self.num_actions,
                self.horizon()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_cost(&self, cost: &CostModel) -> Result<()> {
        let ok = cost.horizon() == self.horizon()
            && cost.terminal().len() == self.num_states
            && cost
                .stage
                .iter()
                .all(|table| table.len() == self.num_states * self.num_actions);
        if !ok {
            return Err(Error::config("cost tables do not match problem dimensions"));
        }
        Ok(())
    }
}

/// Stage and terminal cost tables, stored after multiplication by `sigma`.
///
/// `f64::INFINITY` marks forbidden state-actions: their desirability weight
/// `exp(-r)` is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    num_actions: usize,
    stage: Vec<Vec<f64>>,
    terminal: Vec<f64>,
    sigma: f64,
}

impl CostModel {
    /// Scales raw tables by `sigma`.
    pub fn new(stage: Vec<Vec<f64>>, terminal: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let scale = |v: f64| -> Result<f64> {
            if v.is_nan() || v == f64::NEG_INFINITY {
                return Err(Error::config(format!("invalid cost entry {v}")));
            }
            let s = if v == f64::INFINITY { v } else { v * sigma };
            if s.is_nan() || s == f64::NEG_INFINITY || (v.is_finite() && !s.is_finite()) {
                return Err(Error::config(format!(
                    "cost entry {v} overflows after scaling"
                )));
            }
            Ok(s)
        };
        let stage = stage
            .into_iter()
            .map(|table| table.into_iter().map(scale).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let terminal = terminal
            .into_iter()
            .map(scale)
            .collect::<Result<Vec<_>>>()?;
        if terminal.is_empty() || stage.is_empty() {
            return Err(Error::config("cost tables must be non-empty"));
        }
        let num_actions = stage[0].len() / terminal.len();
        if num_actions == 0
            || stage
                .iter()
                .any(|table| table.len() != num_actions * terminal.len())
        {
            return Err(Error::config("stage cost tables must all be |X|·|U| long"));
        }
        Ok(Self {
            num_actions,
            stage,
            terminal,
            sigma,
        })
    }

    /// All-zero costs shaped for `problem`.
    pub fn zero(problem: &DiscreteProblem) -> Self {
        let (n, m) = (problem.num_states(), problem.num_actions());
        Self {
            num_actions: m,
            stage: vec![vec![0.0; n * m]; problem.horizon()],
            terminal: vec![0.0; n],
            sigma: 1.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.stage.len()
    }

    /// Scale factor the stored tables were multiplied by.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn stage_table(&self, t: usize) -> &[f64] {
        &self.stage[t]
    }

    #[inline]
    pub fn stage(&self, t: usize, x: usize, u: usize) -> f64 {
        self.stage[t][x * self.num_actions + u]
    }

    pub fn terminal(&self) -> &[f64] {
        &self.terminal
    }

    pub fn is_zero(&self) -> bool {
        self.stage
            .iter()
            .flatten()
            .chain(&self.terminal)
            .all(|c| *c == 0.0)
    }
}

/// Per-step conditional action tables `π_t(u | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    num_states: usize,
    num_actions: usize,
    tables: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(num_states: usize, num_actions: usize, tables: Vec<Vec<f64>>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || tables.is_empty() {
            return Err(Error::config("policy dimensions must be positive"));
        }
        for (t, table) in tables.iter().enumerate() {
            if table.len() != num_states * num_actions {
                return Err(Error::config(format!(
                    "policy table {t} has {} entries, expected {}",
                    table.len(),
                    num_states * num_actions
                )));
            }
            for (x, row) in table.chunks_exact(num_actions).enumerate() {
                check_distribution(row, || format!("policy row t={t} x={x}"))?;
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            tables,
        })
    }

    /// Normalizes every row of nonnegative weights. Rows with zero total
    /// mass are rejected.
    pub fn from_weights(
        num_states: usize,
        num_actions: usize,
        mut tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        for (t, table) in tables.iter_mut().enumerate() {
            for (x, row) in table.chunks_exact_mut(num_actions).enumerate() {
                let total: f64 = row.iter().sum();
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::Degenerate(format!(
                        "policy row t={t} x={x} has mass {total}"
                    )));
                }
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        Self::new(num_states, num_actions, tables)
    }

    pub fn uniform(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            num_states,
            num_actions,
            tables: vec![vec![p; num_states * num_actions]; horizon],
        }
    }

    pub fn uniform_for(problem: &DiscreteProblem) -> Self {
        Self::uniform(
            problem.num_states(),
            problem.num_actions(),
            problem.horizon(),
        )
    }

    /// Point-mass policy; `actions[t][x]` is the chosen action.
    pub fn deterministic(
        num_states: usize,
        num_actions: usize,
        actions: &[Vec<usize>],
    ) -> Result<Self> {
        let mut tables = Vec::with_capacity(actions.len());
        for map in actions {
            if map.len() != num_states || map.iter().any(|u| *u >= num_actions) {
                return Err(Error::config(
                    "deterministic action map does not fit the action set",
                ));
            }
            let mut table = vec![0.0; num_states * num_actions];
            for (x, u) in map.iter().enumerate() {
                table[x * num_actions + u] = 1.0;
            }
            tables.push(table);
        }
        Self::new(num_states, num_actions, tables)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.tables.len()
    }

    pub fn table(&self, t: usize) -> &[f64] {
        &self.tables[t]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    #[inline]
    pub fn row(&self, t: usize, x: usize) -> &[f64] {
        let m = self.num_actions;
        &self.tables[t][x * m..(x + 1) * m]
    }

    #[inline]
    pub fn prob(&self, t: usize, x: usize, u: usize) -> f64 {
        self.tables[t][x * self.num_actions + u]
    }

    /// Largest absolute entrywise difference.
    pub fn sup_distance(&self, other: &TabularPolicy) -> f64 {
        self.tables
            .iter()
            .flatten()
            .zip(other.tables.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `1 - max_u π_t(u|x)` over all rows.
    pub fn residual_mass(&self) -> f64 {
        self.tables
            .iter()
            .flat_map(|table| table.chunks_exact(self.num_actions))
            .map(|row| 1.0 - row.iter().cloned().fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}
