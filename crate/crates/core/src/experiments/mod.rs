//! Ensemble drivers: escape statistics and their scaling fit, reaction-count
//! tails, diffusion-approximation comparisons and the Brusselator benchmark.
//!
//! Every replica draws from its own streams keyed by (master seed, replica
//! index), and reductions are sums, so results do not depend on the size of
//! the rayon pool they run in.

mod benchmark;
mod diffusion;
mod escape;
mod tail;

pub use benchmark::{brusselator_benchmark, oscillator_benchmark, Benchmark, BenchmarkNoise, PhaseRow};
pub use diffusion::{diffusion_comparison, phase_diffusion_comparison, MeanPathComparison, PhaseDiffusion};
pub use escape::{escape_probability, escape_run, fit_scaling, EscapeOptions, EscapeRun, EscapeStats, ScalingFit};
pub use tail::{reaction_tail, TailRow, TailTable};

use thiserror::Error;

use crate::deterministic::{find_limit_cycle, CycleError, CycleOptions, LimitCycle};
use crate::floquet::{compute_prc, floquet_decompose, FloquetData, FloquetError, PhaseResponseCurve};
use crate::model::{ModelError, ReactionNetwork};
use crate::ode::OdeError;
use crate::phase::PhaseError;
use crate::stochastic::StochasticError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("need at least {required} points with >= 5 escapes, got {usable}")]
    InsufficientPoints { usable: usize, required: usize },
    #[error("estimable points span a factor {ratio:.3} in omega * zeta^2; need >= 4")]
    InsufficientSpan { ratio: f64 },
    #[error("observed propensity {observed} exceeds the rate bound {bound}")]
    RateBoundViolated { observed: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// A network together with its limit cycle, Floquet data and PRC.
#[derive(Debug, Clone)]
pub struct Oscillator {
    pub net: ReactionNetwork,
    pub lc: LimitCycle,
    pub fd: FloquetData,
    pub prc: PhaseResponseCurve,
}

impl Oscillator {
    pub fn build(net: ReactionNetwork, x_seed: &[f64], opts: &CycleOptions) -> Result<Self, ExperimentError> {
        let lc = find_limit_cycle(&net, x_seed, opts)?;
        let fd = floquet_decompose(&lc, &net)?;
        let prc = compute_prc(&lc, &fd, &net)?;
        Ok(Self { net, lc, fd, prc })
    }

    /// The same deterministic structure at another system size.
    pub fn at_omega(&self, omega: f64) -> Result<Self, ExperimentError> {
        Ok(Self {
            net: self.net.with_omega(omega)?,
            ..self.clone()
        })
    }

    /// Copy numbers nearest to `Phi(theta) * omega`.
    pub fn counts_on_cycle(&self, theta: f64) -> Vec<u64> {
        let (phi, _) = self.lc.eval(theta);
        phi.iter().map(|v| (v * self.net.omega()).round().max(0.0) as u64).collect()
    }
}

/// The oscillator at the benchmark parameters `a = 1, b = 2.5` and the
/// given system size.
pub fn brusselator_oscillator(omega: f64) -> Result<Oscillator, ExperimentError> {
    let net = crate::model::brusselator(1.0, 2.5, omega)?;
    Oscillator::build(net, &[2.0, 2.0], &CycleOptions::default())
}

/// Stream tags for [`crate::rng::aux_rng`].
pub(crate) const TAG_INITIAL_PHASE: u64 = 1;
