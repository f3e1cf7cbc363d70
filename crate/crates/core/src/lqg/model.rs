use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetry tolerance on covariance and cost blocks.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

fn check_square(m: &DMatrix<f64>, dim: usize, what: &str) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::config(format!(
            "{what} is {:?}, expected {dim}×{dim}",
            m.shape()
        )));
    }
    if asymmetry(m) > SYMMETRY_TOL * m.amax().max(1.0) {
        return Err(Error::config(format!("{what} is not symmetric")));
    }
    Ok(())
}

/// One step of `x_{t+1} ~ N(F_ξ [x; u] + f, P)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianStep {
    /// `n × (n + m)` state-action Jacobian.
    pub f_xi: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Noise covariance, symmetric PSD.
    pub p: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianDynamics {
    state_dim: usize,
    action_dim: usize,
    steps: Vec<LinearGaussianStep>,
}

impl LinearGaussianDynamics {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        steps: Vec<LinearGaussianStep>,
    ) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 || steps.is_empty() {
            return Err(Error::config("dimensions and horizon must be positive"));
        }
        for (t, step) in steps.iter().enumerate() {
            if step.f_xi.shape() != (state_dim, state_dim + action_dim) || step.f.len() != state_dim
            {
                return Err(Error::config(format!(
                    "dynamics step {t} has mismatched shapes"
                )));
            }
            check_square(&step.p, state_dim, &format!("P_{t}"))?;
            if min_eigenvalue(&step.p) < -1e-12 {
                return Err(Error::config(format!("P_{t} is not positive semidefinite")));
            }
        }
        Ok(Self {
            state_dim,
            action_dim,
            steps,
        })
    }

    pub fn time_invariant(
        state_dim: usize,
        action_dim: usize,
        step: LinearGaussianStep,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(state_dim, action_dim, vec![step; horizon])
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, t: usize) -> &LinearGaussianStep {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[LinearGaussianStep] {
        &self.steps
    }

    /// Copy with every noise covariance replaced by `p`.
    pub fn with_noise(&self, p: DMatrix<f64>) -> Result<Self> {
        let steps = self
            .steps
            .iter()
            .map(|s| LinearGaussianStep {
                p: p.clone(),
                ..s.clone()
            })
            .collect();
        Self::new(self.state_dim, self.action_dim, steps)
    }
}

/// `r_t(ξ) = ½ ξᵀ R_ξξ ξ + ξᵀ R_ξ` with `ξ = [x; u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticStage {
    pub r_xixi: DMatrix<f64>,
    pub r_xi: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    stages: Vec<QuadraticStage>,
    r_xx_terminal: DMatrix<f64>,
    r_x_terminal: DVector<f64>,
}

impl QuadraticCost {
    /// Requires symmetric blocks and a positive definite control block
    /// `R_uu` at every stage.
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        stages: Vec<QuadraticStage>,
        r_xx_terminal: DMatrix<f64>,
        r_x_terminal: DVector<f64>,
    ) -> Result<Self> {
        let dim = state_dim + action_dim;
        for (t, stage) in stages.iter().enumerate() {
            check_square(&stage.r_xixi, dim, &format!("R_ξξ,{t}"))?;
            if stage.r_xi.len() != dim {
                return Err(Error::config(format!(
                    "R_ξ,{t} has length {}",
                    stage.r_xi.len()
                )));
            }
            let r_uu = stage
                .r_xixi
                .view((state_dim, state_dim), (action_dim, action_dim))
                .into_owned();
            if min_eigenvalue(&r_uu) <= 0.0 {
                return Err(Error::config(format!("R_uu,{t} is not positive definite")));
            }
        }
        check_square(&r_xx_terminal, state_dim, "R_xx,T")?;
        if r_x_terminal.len() != state_dim {
            return Err(Error::config("R_x,T has the wrong length"));
        }
        Ok(Self {
            stages,
            r_xx_terminal,
            r_x_terminal,
        })
    }

    /// Blocks are not re-validated; used for the all-zero cost, whose
    /// control block is only semidefinite.
    pub fn zero(state_dim: usize, action_dim: usize, horizon: usize) -> Self {
        let dim = state_dim + action_dim;
        Self {
            stages: vec![
                QuadraticStage {
                    r_xixi: DMatrix::zeros(dim, dim),
                    r_xi: DVector::zeros(dim),
                };
                horizon
            ],
            r_xx_terminal: DMatrix::zeros(state_dim, state_dim),
            r_x_terminal: DVector::zeros(state_dim),
        }
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, t: usize) -> &QuadraticStage {
        &self.stages[t]
    }

    pub fn r_xx_terminal(&self) -> &DMatrix<f64> {
        &self.r_xx_terminal
    }

    pub fn r_x_terminal(&self) -> &DVector<f64> {
        &self.r_x_terminal
    }

    pub(crate) fn check(&self, dynamics: &LinearGaussianDynamics) -> Result<()> {
        let n = dynamics.state_dim();
        let dim = n + dynamics.action_dim();
        let ok = self.horizon() == dynamics.horizon()
            && self
                .stages
                .iter()
                .all(|s| s.r_xixi.shape() == (dim, dim) && s.r_xi.len() == dim)
            && self.r_xx_terminal.shape() == (n, n)
            && self.r_x_terminal.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::config("cost blocks do not match the dynamics"))
        }
    }
}

/// `N(u | K x + k, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGain {
    /// `K`, `m × n`.
    pub gain: DMatrix<f64>,
    /// `k`, length `m`.
    pub offset: DVector<f64>,
    /// `Σ`, `m × m` symmetric positive definite.
    pub sigma: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianPolicy {
    steps: Vec<GaussianGain>,
}

impl LinearGaussianPolicy {
    pub fn new(state_dim: usize, action_dim: usize, steps: Vec<GaussianGain>) -> Result<Self> {
        for (t, s) in steps.iter().enumerate() {
            if s.gain.shape() != (action_dim, state_dim) || s.offset.len() != action_dim {
                return Err(Error::config(format!(
                    "policy step {t} has mismatched shapes"
                )));
            }
            check_square(&s.sigma, action_dim, &format!("Σ_{t}"))?;
            if min_eigenvalue(&s.sigma) <= 0.0 {
                return Err(Error::config(format!("Σ_{t} is not positive definite")));
            }
        }
        Ok(Self { steps })
    }

    /// `K = 0`, `k = 0`, `Σ = I` at every step.
    pub fn standard(dynamics: &LinearGaussianDynamics) -> Self {
        let (n, m) = (dynamics.state_dim(), dynamics.action_dim());
        Self {
            steps: vec![
                GaussianGain {
                    gain: DMatrix::zeros(m, n),
                    offset: DVector::zeros(m),
                    sigma: DMatrix::identity(m, m),
                };
                dynamics.horizon()
            ],
        }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, t: usize) -> &GaussianGain {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[GaussianGain] {
        &self.steps
    }

    /// Largest entrywise change of `K` and `k` over all steps.
    pub fn gain_distance(&self, other: &Self) -> f64 {
        self.steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| {
                (&a.gain - &b.gain)
                    .amax()
                    .max((&a.offset - &b.offset).amax())
            })
            .fold(0.0, f64::max)
    }

    /// Largest eigenvalue of any `Σ_t`.
    pub fn max_sigma(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| symmetrize(&s.sigma).symmetric_eigenvalues().max())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check(&self, dynamics: &LinearGaussianDynamics) -> Result<()> {
        let (n, m) = (dynamics.state_dim(), dynamics.action_dim());
        if self.horizon() != dynamics.horizon()
            || self
                .steps
                .iter()
                .any(|s| s.gain.shape() != (m, n) || s.sigma.shape() != (m, m))
        {
            return Err(Error::config("policy does not match the dynamics"));
        }
        Ok(())
    }
}

/// Quadratic value coefficients with the constant terms dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticValue {
    pub state_dim: usize,
    /// `V_xx,t` for `t ≤ T`.
    pub v_xx: Vec<DMatrix<f64>>,
    pub v_x: Vec<DVector<f64>>,
    /// `Q_ξξ,t` for `t < T`.
    pub q_xixi: Vec<DMatrix<f64>>,
    pub q_xi: Vec<DVector<f64>>,
}

impl QuadraticValue {
    fn action_dim(&self, t: usize) -> usize {
        self.q_xi[t].len() - self.state_dim
    }

    pub fn q_xx(&self, t: usize) -> DMatrix<f64> {
        let n = self.state_dim;
        self.q_xixi[t].view((0, 0), (n, n)).into_owned()
    }

    pub fn q_ux(&self, t: usize) -> DMatrix<f64> {
        let (n, m) = (self.state_dim, self.action_dim(t));
        self.q_xixi[t].view((n, 0), (m, n)).into_owned()
    }

    pub fn q_uu(&self, t: usize) -> DMatrix<f64> {
        let (n, m) = (self.state_dim, self.action_dim(t));
        self.q_xixi[t].view((n, n), (m, m)).into_owned()
    }

    pub fn q_x(&self, t: usize) -> DVector<f64> {
        self.q_xi[t].rows(0, self.state_dim).into_owned()
    }

    pub fn q_u(&self, t: usize) -> DVector<f64> {
        let m = self.action_dim(t);
        self.q_xi[t].rows(self.state_dim, m).into_owned()
    }
}
