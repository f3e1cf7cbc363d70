//! Stochastic optimal control posed as matching a desired trajectory
//! distribution.
//!
//! Finite problems are solved by exact backward passes ([`projection`]) and
//! majorize-minimize fixed points ([`mm`]); the linear-Gaussian-quadratic
//! family has closed-form counterparts in [`lqg`]. [`pic`] samples the
//! path-integral form of the M-projection, and [`oracle`] holds brute-force
//! ground truth.

pub mod error;
pub mod fixtures;
pub mod lqg;
pub mod mm;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod pic;
pub mod projection;
pub mod random;
pub mod trajectory;

pub use error::{Error, Result};
pub use mm::{
    extract_deterministic, majorization_report, merl_identity_check, mm_iterate, MMConfig, MMTrace,
    MmInit, MmMode, TraceRow,
};
pub use model::{CostModel, DiscreteProblem, TabularPolicy};
pub use oracle::{dp_rsoc, dp_soc, exhaustive_policy_search, Objective, OracleSolution};
pub use pic::{
    closed_loop_equivalence_check, exact_smoothing, pic_policy_mc, pic_value_mc, McEstimate,
};
pub use projection::{backward_pass, ProjectionKind, ValueTables};
pub use trajectory::{
    desired_distribution, enumerate_trajectories, kl, renyi, total_variation, DesiredDistribution,
    TrajectoryDistribution,
};
