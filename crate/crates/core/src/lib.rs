//! Phase reduction of stochastic chemical reaction network oscillators.
//!
//! The pipeline runs from a mass-action [`model::ReactionNetwork`] through
//! the deterministic limit cycle ([`deterministic`]), its Floquet structure
//! and phase response curve ([`floquet`]), exact and diffusion-approximate
//! sample paths ([`stochastic`]), and per-event phase tracking ([`phase`]),
//! to the ensemble drivers in [`experiments`]. [`cli`], [`config`] and [`io`]
//! wrap it as the `crn-phase` command-line tool.

pub mod interp;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod phase;
pub mod rng;
pub mod stats;
pub mod stochastic;
pub mod deterministic;
pub mod floquet;
pub mod experiments;
pub mod config;
pub mod io;
pub mod cli;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Parse(#[from] model::ParseError),
    #[error(transparent)]
    Ode(#[from] ode::OdeError),
    #[error(transparent)]
    Stochastic(#[from] stochastic::StochasticError),
    #[error(transparent)]
    Cycle(#[from] deterministic::CycleError),
    #[error(transparent)]
    Floquet(#[from] floquet::FloquetError),
    #[error(transparent)]
    Phase(#[from] phase::PhaseError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
