use nalgebra::{DMatrix, DVector};

use super::model::{
    min_eigenvalue, symmetrize, GaussianGain, LinearGaussianDynamics, LinearGaussianPolicy,
    QuadraticCost, QuadraticValue,
};
use crate::error::{Error, Result};
use crate::mm::MMConfig;

/// Gain norm above which an MM iteration is declared divergent.
pub const INSTABILITY_GAIN: f64 = 1e8;

/// Relative slack when testing `V_xx` for semidefiniteness.
const PSD_SLACK: f64 = 1e-10;

/// Smallest admissible eigenvalue of `I + P^{1/2} S P^{1/2}` in [`leqr`].
pub const BREAKDOWN_TOL: f64 = 1e-8;

fn linalg(t: usize, what: impl Into<String>) -> Error {
    Error::LinearAlgebra {
        t,
        what: what.into(),
    }
}

fn block(m: &DMatrix<f64>, r: usize, c: usize, nr: usize, nc: usize) -> DMatrix<f64> {
    m.view((r, c), (nr, nc)).into_owned()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain(format!("α must lie in [0, 1], got {alpha}")))
    }
}

/// `Q_ξξ = R_ξξ + Fᵀ M F` and `Q_ξ = R_ξ + Fᵀ y` for a successor value
/// already pushed through the noise resolvent.
fn q_blocks(
    cost: &QuadraticCost,
    dynamics: &LinearGaussianDynamics,
    t: usize,
    m: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let stage = cost.stage(t);
    let f_xi = &dynamics.step(t).f_xi;
    let q_xixi = symmetrize(&(&stage.r_xixi + f_xi.transpose() * m * f_xi));
    let q_xi = &stage.r_xi + f_xi.transpose() * y;
    (q_xixi, q_xi)
}

/// One exact projection pass in the linear-Gaussian-quadratic family.
///
/// `alpha = 0` gives the I-projection and `alpha = 1` the M-projection of
/// the desired distribution onto policies of the same form as `prior`.
pub fn lqg_backward(
    dynamics: &LinearGaussianDynamics,
    cost: &QuadraticCost,
    prior: &LinearGaussianPolicy,
    alpha: f64,
) -> Result<(LinearGaussianPolicy, QuadraticValue)> {
    check_alpha(alpha)?;
    cost.check(dynamics)?;
    prior.check(dynamics)?;
    let (n, m, horizon) = (
        dynamics.state_dim(),
        dynamics.action_dim(),
        dynamics.horizon(),
    );

    let mut v_xx = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut v_x = vec![DVector::zeros(n); horizon + 1];
    let mut q_xixi = vec![DMatrix::zeros(n + m, n + m); horizon];
    let mut q_xi = vec![DVector::zeros(n + m); horizon];
    let mut steps = vec![None; horizon];
    v_xx[horizon] = symmetrize(cost.r_xx_terminal());
    v_x[horizon] = cost.r_x_terminal().clone();

    for t in (0..horizon).rev() {
        let s = &v_xx[t + 1];
        let scale = s.amax().max(1.0);
        if min_eigenvalue(s) < -PSD_SLACK * scale {
            return Err(linalg(t, "successor V_xx is indefinite"));
        }
        let step = dynamics.step(t);
        // (S⁻¹ + αP)⁻¹ = (I + αSP)⁻¹ S, which stays defined for singular S
        let g = DMatrix::identity(n, n) + s * &step.p * alpha;
        let lu = g.lu();
        let resolvent = lu
            .solve(s)
            .ok_or_else(|| linalg(t, "singular resolvent I + αSP"))?;
        let shifted = lu
            .solve(&(&v_x[t + 1] + s * &step.f))
            .ok_or_else(|| linalg(t, "singular resolvent I + αSP"))?;
        let (qq, q) = q_blocks(cost, dynamics, t, &symmetrize(&resolvent), &shifted);

        let q_xx = block(&qq, 0, 0, n, n);
        let q_ux = block(&qq, n, 0, m, n);
        let q_uu = block(&qq, n, n, m, m);
        let q_x = q.rows(0, n).into_owned();
        let q_u = q.rows(n, m).into_owned();

        let gain = prior.step(t);
        let sigma_inv = gain
            .sigma
            .clone()
            .cholesky()
            .ok_or_else(|| linalg(t, "prior Σ is not positive definite"))?
            .inverse();
        let precision = symmetrize(&(&sigma_inv + &q_uu));
        let chol = precision
            .clone()
            .cholesky()
            .ok_or_else(|| linalg(t, "Σ⁻¹ + Q_uu is not positive definite"))?;
        let sigma_new = symmetrize(&chol.inverse());
        let k_gain = chol.solve(&(&sigma_inv * &gain.gain - &q_ux));
        let k_off = chol.solve(&(&sigma_inv * &gain.offset - &q_u));

        let vxx = &q_xx + gain.gain.transpose() * &sigma_inv * &gain.gain
            - k_gain.transpose() * &precision * &k_gain;
        let vx = &q_x + gain.gain.transpose() * &sigma_inv * &gain.offset
            - k_gain.transpose() * &precision * &k_off;
        if !(vxx.iter().chain(vx.iter()).all(|v| v.is_finite())) {
            return Err(linalg(t, "non-finite value coefficients"));
        }
        v_xx[t] = symmetrize(&vxx);
        v_x[t] = vx;
        q_xixi[t] = qq;
        q_xi[t] = q;
        steps[t] = Some(GaussianGain {
            gain: k_gain,
            offset: k_off,
            sigma: sigma_new,
        });
    }

    let policy = LinearGaussianPolicy::new(
        n,
        m,
        steps
            .into_iter()
            .map(|s| s.expect("every step visited"))
            .collect(),
    )?;
    let value = QuadraticValue {
        state_dim: n,
        v_xx,
        v_x,
        q_xixi,
        q_xi,
    };
    Ok((policy, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqgTrace {
    pub alpha: f64,
    /// `iterates[0]` is the initial prior.
    pub iterates: Vec<LinearGaussianPolicy>,
    /// `deltas[k]` is the sup-norm gain change from iterate `k` to `k + 1`.
    pub deltas: Vec<f64>,
    pub policy: LinearGaussianPolicy,
    pub value: QuadraticValue,
    pub converged: bool,
    pub iterations: usize,
}

/// MM iteration from the standard prior `K = 0`, `k = 0`, `Σ = I`.
///
/// Only `max_iters` and `tol_policy` of `config` are used.
pub fn mm_lqg(
    dynamics: &LinearGaussianDynamics,
    cost: &QuadraticCost,
    alpha: f64,
    config: &MMConfig,
) -> Result<LqgTrace> {
    mm_lqg_from(
        dynamics,
        cost,
        alpha,
        LinearGaussianPolicy::standard(dynamics),
        config,
    )
}

pub fn mm_lqg_from(
    dynamics: &LinearGaussianDynamics,
    cost: &QuadraticCost,
    alpha: f64,
    prior: LinearGaussianPolicy,
    config: &MMConfig,
) -> Result<LqgTrace> {
    if config.max_iters == 0 {
        return Err(Error::config("max_iters must be positive"));
    }
    let mut iterates = vec![prior];
    let mut deltas = Vec::new();
    let mut converged = false;
    let mut value = None;
    for iter in 1..=config.max_iters {
        let current = iterates.last().expect("non-empty");
        let (next, v) = lqg_backward(dynamics, cost, current, alpha)?;
        let norm = next
            .steps()
            .iter()
            .map(|s| s.gain.norm().max(s.offset.norm()))
            .fold(0.0, f64::max);
        if norm.is_nan() || norm > INSTABILITY_GAIN {
            return Err(Error::Instability {
                iter,
                what: format!("gain norm {norm:e} exceeds {INSTABILITY_GAIN:e}"),
            });
        }
        let delta = next.gain_distance(current);
        deltas.push(delta);
        iterates.push(next);
        value = Some(v);
        if delta < config.tol_policy {
            converged = true;
            break;
        }
    }
    let iterations = deltas.len();
    Ok(LqgTrace {
        alpha,
        policy: iterates.last().expect("non-empty").clone(),
        iterates,
        deltas,
        value: value.expect("at least one iteration"),
        converged,
        iterations,
    })
}

/// Deterministic feedback `u = K x + k` with its quadratic cost-to-go.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    pub gains: Vec<DMatrix<f64>>,
    pub offsets: Vec<DVector<f64>>,
    /// `S_t` for `t ≤ T`.
    pub s_xx: Vec<DMatrix<f64>>,
    pub s_x: Vec<DVector<f64>>,
}

/// Symmetric PSD square root by eigendecomposition.
fn psd_sqrt(p: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(p).symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    symmetrize(&(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()))
}

fn riccati(
    dynamics: &LinearGaussianDynamics,
    cost: &QuadraticCost,
    risk: bool,
) -> Result<LqrSolution> {
    cost.check(dynamics)?;
    let (n, m, horizon) = (
        dynamics.state_dim(),
        dynamics.action_dim(),
        dynamics.horizon(),
    );
    let mut s_xx = vec![DMatrix::zeros(n, n); horizon + 1];
    let mut s_x = vec![DVector::zeros(n); horizon + 1];
    let mut gains = vec![DMatrix::zeros(m, n); horizon];
    let mut offsets = vec![DVector::zeros(m); horizon];
    s_xx[horizon] = symmetrize(cost.r_xx_terminal());
    s_x[horizon] = cost.r_x_terminal().clone();

    for t in (0..horizon).rev() {
        let step = dynamics.step(t);
        let s = &s_xx[t + 1];
        let g = &s_x[t + 1] + s * &step.f;
        let (m_eff, y) = if risk {
            // Woodbury on (S⁻¹ + P)⁻¹ with L = P^{1/2}
            let l = psd_sqrt(&step.p);
            let w = symmetrize(&(DMatrix::identity(n, n) + &l * s * &l));
            let lowest = min_eigenvalue(&w);
            if lowest.is_nan() || lowest <= BREAKDOWN_TOL {
                return Err(Error::Breakdown {
                    t,
                    what: format!("I + P^½ S P^½ has eigenvalue {lowest:e}"),
                });
            }
            let sl = s * &l;
            let lu = w.lu();
            let breakdown = || Error::Breakdown {
                t,
                what: "singular resolvent".into(),
            };
            let inner = lu.solve(&sl.transpose()).ok_or_else(breakdown)?;
            let m_eff = symmetrize(&(s - &sl * inner));
            let y = &g - &sl * lu.solve(&(&l * &g)).ok_or_else(breakdown)?;
            (m_eff, y)
        } else {
            (s.clone(), g)
        };
        let (qq, q) = q_blocks(cost, dynamics, t, &m_eff, &y);
        let q_xx = block(&qq, 0, 0, n, n);
        let q_ux = block(&qq, n, 0, m, n);
        let q_uu = block(&qq, n, n, m, m);
        let q_x = q.rows(0, n).into_owned();
        let q_u = q.rows(n, m).into_owned();
        let chol = q_uu
            .cholesky()
            .ok_or_else(|| linalg(t, "Q_uu is not positive definite"))?;
        let k_gain = -chol.solve(&q_ux);
        let k_off = -chol.solve(&q_u);
        s_xx[t] = symmetrize(&(&q_xx + q_ux.transpose() * &k_gain));
        s_x[t] = &q_x + q_ux.transpose() * &k_off;
        gains[t] = k_gain;
        offsets[t] = k_off;
    }
    Ok(LqrSolution {
        gains,
        offsets,
        s_xx,
        s_x,
    })
}

/// Certainty-equivalent discrete-time Riccati recursion.
pub fn riccati_lqr(dynamics: &LinearGaussianDynamics, cost: &QuadraticCost) -> Result<LqrSolution> {
    riccati(dynamics, cost, false)
}

/// Risk-seeking exponential-cost Riccati recursion with the successor
/// curvature replaced by `(S⁻¹ + P)⁻¹`.
pub fn leqr(dynamics: &LinearGaussianDynamics, cost: &QuadraticCost) -> Result<LqrSolution> {
    riccati(dynamics, cost, true)
}

/// Largest entrywise gap between the policy means and deterministic gains.
pub fn gain_gap(policy: &LinearGaussianPolicy, lqr: &LqrSolution) -> f64 {
    policy
        .steps()
        .iter()
        .zip(lqr.gains.iter().zip(&lqr.offsets))
        .map(|(s, (k, o))| (&s.gain - k).amax().max((&s.offset - o).amax()))
        .fold(0.0, f64::max)
}
