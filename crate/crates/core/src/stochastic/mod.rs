//! Exact jump-process simulation and the chemical Langevin diffusion
//! approximation.
//!
//! Both jump engines draw events with intensity `omega * lambda_a(n / omega)`
//! and apply the negative-count guard of
//! [`ReactionNetwork::count_propensities_into`].

mod cle;
mod jump;
mod trajectory;

pub use cle::{cle_simulate, cle_simulate_replica, SdePath};
pub use jump::{DirectSimulator, Engine, JumpSimulator, TimeChangeSimulator};
pub use trajectory::{JumpTrajectory, WindowCounts};

use thiserror::Error;

use crate::model::{PropensityForm, ReactionNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StochasticError {
    #[error("non-finite propensity for channel {channel} at t = {t}")]
    PropensityOverflow { t: f64, channel: usize },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Gillespie direct method up to `t_end`.
pub fn ssa_direct(
    net: &ReactionNetwork,
    n0: &[u64],
    t_end: f64,
    seed: u64,
    form: PropensityForm,
) -> Result<JumpTrajectory, StochasticError> {
    let mut sim = DirectSimulator::new(net, n0, form, seed, 0)?;
    JumpTrajectory::record(net, &mut sim, t_end)
}

/// Next-reaction method on the random time change representation.
pub fn ssa_time_change(
    net: &ReactionNetwork,
    n0: &[u64],
    t_end: f64,
    seed: u64,
    form: PropensityForm,
) -> Result<JumpTrajectory, StochasticError> {
    let mut sim = TimeChangeSimulator::new(net, n0, form, seed, 0)?;
    JumpTrajectory::record(net, &mut sim, t_end)
}

/// `count_reactions(traj, u, t)`.
pub fn count_reactions(traj: &JumpTrajectory, u: f64, t: f64) -> WindowCounts {
    traj.count_reactions(u, t)
}
