//! Linear-Gaussian dynamics with quadratic costs, where every projection
//! stays in closed form, plus the classical Riccati baselines.

mod model;
mod solve;

pub use model::{
    GaussianGain, LinearGaussianDynamics, LinearGaussianPolicy, LinearGaussianStep, QuadraticCost,
    QuadraticStage, QuadraticValue, SYMMETRY_TOL,
};
pub use solve::{
    gain_gap, leqr, lqg_backward, mm_lqg, mm_lqg_from, riccati_lqr, LqgTrace, LqrSolution,
    BREAKDOWN_TOL, INSTABILITY_GAIN,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;

/// Scalar `x' = x + u + w`, `w ~ N(0, p)`, stage cost `½u²`, terminal `½x²`.
pub fn scalar_benchmark(p: f64, horizon: usize) -> Result<(LinearGaussianDynamics, QuadraticCost)> {
    let step = LinearGaussianStep {
        f_xi: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        f: DVector::zeros(1),
        p: DMatrix::from_element(1, 1, p),
    };
    let dynamics = LinearGaussianDynamics::time_invariant(1, 1, step, horizon)?;
    let stage = QuadraticStage {
        r_xixi: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        r_xi: DVector::zeros(2),
    };
    let cost = QuadraticCost::new(
        1,
        1,
        vec![stage; horizon],
        DMatrix::from_element(1, 1, 1.0),
        DVector::zeros(1),
    )?;
    Ok((dynamics, cost))
}

fn uniform_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    scale: f64,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0))
}

fn uniform_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * rng.gen_range(-1.0..1.0))
}

fn random_spd<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64, shift: f64) -> DMatrix<f64> {
    let g = uniform_matrix(rng, dim, dim, scale);
    let spd = &g * g.transpose() + DMatrix::identity(dim, dim) * shift;
    (&spd + spd.transpose()) * 0.5
}

/// Random time-varying instance with full-rank input matrices, positive
/// definite costs and small noise.
pub fn random_lqg<R: Rng + ?Sized>(
    rng: &mut R,
    state_dim: usize,
    action_dim: usize,
    horizon: usize,
) -> Result<(LinearGaussianDynamics, QuadraticCost)> {
    let (n, m) = (state_dim, action_dim);
    let steps = (0..horizon)
        .map(|_| {
            let a = DMatrix::identity(n, n) + uniform_matrix(rng, n, n, 0.3);
            let b = DMatrix::identity(n, m) + uniform_matrix(rng, n, m, 0.5);
            let mut f_xi = DMatrix::zeros(n, n + m);
            f_xi.view_mut((0, 0), (n, n)).copy_from(&a);
            f_xi.view_mut((0, n), (n, m)).copy_from(&b);
            LinearGaussianStep {
                f_xi,
                f: uniform_vector(rng, n, 0.2),
                p: random_spd(rng, n, 0.3, 0.0),
            }
        })
        .collect();
    let dynamics = LinearGaussianDynamics::new(n, m, steps)?;
    let stages = (0..horizon)
        .map(|_| QuadraticStage {
            r_xixi: random_spd(rng, n + m, 0.5, 0.5),
            r_xi: uniform_vector(rng, n + m, 0.5),
        })
        .collect();
    let cost = QuadraticCost::new(
        n,
        m,
        stages,
        random_spd(rng, n, 0.5, 1.0),
        uniform_vector(rng, n, 0.5),
    )?;
    Ok((dynamics, cost))
}
