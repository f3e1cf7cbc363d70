use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes, horizons or stochasticity constraints do not line up.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("support of {requested} trajectories exceeds the cap of {cap}")]
    Capacity { requested: u128, cap: usize },

    /// Every trajectory (or every action of a row) carries zero weight.
    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("numeric failure at t={t}, x={x}: {what}")]
    Numeric { t: usize, x: usize, what: String },

    #[error("numeric failure in linear-Gaussian step t={t}: {what}")]
    LinearAlgebra { t: usize, what: String },

    /// The risk-modified value resolvent lost definiteness.
    #[error("neurotic breakdown at t={t}: {what}")]
    Breakdown { t: usize, what: String },

    #[error("MM iteration diverged after {iter} iterations: {what}")]
    Instability { iter: usize, what: String },

    /// A quantity that the MM principle guarantees to be monotone increased.
    #[error("objective increased at iteration {iter}: {before} -> {after}")]
    NonMonotone {
        iter: usize,
        before: f64,
        after: f64,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numeric(t: usize, x: usize, what: impl Into<String>) -> Self {
        Error::Numeric {
            t,
            x,
            what: what.into(),
        }
    }

    /// True for errors caused by malformed input rather than by arithmetic.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Capacity { .. }
        )
    }
}
