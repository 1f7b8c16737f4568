use std::f64::consts::TAU;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ExperimentError, Oscillator, TAG_INITIAL_PHASE};
use crate::model::PropensityForm;
use crate::phase::{PhaseError, PhaseTracker, VariationalConfig};
use crate::rng;
use crate::stats::{binomial_ci, linear_fit};
use crate::stochastic::{DirectSimulator, Engine, JumpSimulator, TimeChangeSimulator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeOptions {
    pub engine: Engine,
    pub form: PropensityForm,
    pub variational: VariationalConfig,
}

impl Default for EscapeOptions {
    fn default() -> Self {
        Self {
            engine: Engine::Direct,
            form: PropensityForm::MassAction,
            variational: VariationalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeStats {
    pub omega: f64,
    pub zeta: f64,
    pub horizon: f64,
    pub replicas: u64,
    /// Replicas with `||w|| >= zeta` before the horizon, including those
    /// whose variational phase was lost.
    pub escapes: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Decay rate `b` of the limit cycle.
    pub b: f64,
    /// Escapes caused by the variational phase losing its local minimum.
    pub phase_failures: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Stayed,
    Escaped,
    PhaseLost,
}

/// First exit time of every replica of an escape run, so that escape
/// counts at any shorter horizon come from the same paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeRun {
    pub omega: f64,
    pub zeta: f64,
    pub horizon: f64,
    pub seed: u64,
    pub b: f64,
    /// `(time, phase_lost)` of the first exit, `None` if the replica stayed.
    pub exits: Vec<Option<(f64, bool)>>,
}

impl EscapeRun {
    /// Statistics of the same replicas truncated at `t <= horizon`.
    pub fn stats_at(&self, t: f64) -> EscapeStats {
        let replicas = self.exits.len() as u64;
        let within = || self.exits.iter().flatten().filter(|(s, _)| *s <= t);
        let escapes = within().count() as u64;
        let phase_failures = within().filter(|(_, lost)| *lost).count() as u64;
        let (ci_lo, ci_hi) = binomial_ci(escapes, replicas);
        EscapeStats {
            omega: self.omega,
            zeta: self.zeta,
            horizon: t.min(self.horizon),
            replicas,
            escapes,
            p_hat: escapes as f64 / replicas as f64,
            ci_lo,
            ci_hi,
            b: self.b,
            phase_failures,
            seed: self.seed,
        }
    }
}

/// Fraction of replicas, started on the cycle at a uniform random phase,
/// whose weighted amplitude reaches `zeta` before `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn escape_probability(
    osc: &Oscillator,
    omega: f64,
    zeta: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    opts: &EscapeOptions,
) -> Result<EscapeStats, ExperimentError> {
    Ok(escape_run(osc, omega, zeta, horizon, replicas, seed, opts)?.stats_at(horizon))
}

/// Runs the replicas of [`escape_probability`] and keeps their exit times.
#[allow(clippy::too_many_arguments)]
pub fn escape_run(
    osc: &Oscillator,
    omega: f64,
    zeta: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    opts: &EscapeOptions,
) -> Result<EscapeRun, ExperimentError> {
    if replicas == 0 {
        return Err(ExperimentError::InvalidArgument("replicas must be positive".into()));
    }
    if !(zeta > 0.0 && horizon >= 0.0) {
        return Err(ExperimentError::InvalidArgument("zeta must be positive and horizon nonnegative".into()));
    }
    if engine_is_cle(opts.engine) {
        return Err(ExperimentError::InvalidArgument("escape statistics need a jump engine".into()));
    }
    let osc = osc.at_omega(omega)?;
    let cfg = VariationalConfig {
        eta: Some(zeta),
        ..opts.variational
    };
    let exits = (0..replicas)
        .into_par_iter()
        .map(|r| {
            run_replica(&osc, zeta, horizon, seed, r, &cfg, opts).map(|(o, t)| match o {
                Outcome::Stayed => None,
                Outcome::Escaped => Some((t, false)),
                Outcome::PhaseLost => Some((t, true)),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(EscapeRun {
        omega,
        zeta,
        horizon,
        seed,
        b: osc.fd.decay_rate(),
        exits,
    })
}

fn engine_is_cle(e: Engine) -> bool {
    matches!(e, Engine::Cle)
}

fn run_replica(
    osc: &Oscillator,
    zeta: f64,
    horizon: f64,
    seed: u64,
    replica: u64,
    cfg: &VariationalConfig,
    opts: &EscapeOptions,
) -> Result<(Outcome, f64), ExperimentError> {
    let theta0 = rng::aux_rng(seed, replica, TAG_INITIAL_PHASE).random::<f64>() * TAU;
    let n0 = osc.counts_on_cycle(theta0);
    let tracker = PhaseTracker::new(&osc.net, &osc.fd, None, cfg, None, opts.form, &n0, 0.0, theta0)?;
    if tracker.normw() > zeta / 2.0 {
        return Err(ExperimentError::InvalidArgument(format!(
            "initial amplitude {} exceeds zeta / 2 = {}",
            tracker.normw(),
            zeta / 2.0
        )));
    }
    match opts.engine {
        Engine::TimeChange => {
            let sim = TimeChangeSimulator::new(&osc.net, &n0, opts.form, seed, replica)?;
            drive(sim, tracker, horizon)
        }
        _ => {
            let sim = DirectSimulator::new(&osc.net, &n0, opts.form, seed, replica)?;
            drive(sim, tracker, horizon)
        }
    }
}

fn drive<S: JumpSimulator>(
    mut sim: S,
    mut tracker: PhaseTracker<'_>,
    horizon: f64,
) -> Result<(Outcome, f64), ExperimentError> {
    while let Some((t, a)) = sim.next_event(horizon)? {
        match tracker.on_event(t, a) {
            Ok(true) => return Ok((Outcome::Escaped, t)),
            Ok(false) => {}
            Err(PhaseError::NoLocalMinimum { .. } | PhaseError::NewtonNonConvergence { .. }) => {
                return Ok((Outcome::PhaseLost, t))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((Outcome::Stayed, horizon))
}

/// Least-squares fit of `log(p_hat / (b T)) = -C * omega * b * zeta^2 + c0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// `(omega, zeta, horizon, p_hat)` of the points used.
    pub points: Vec<(f64, f64, f64, f64)>,
    pub c: f64,
    /// Intercept with the `b T` prefactor.
    pub intercept_bt: f64,
    /// Intercept of the same fit with the `T` prefactor.
    pub intercept_t: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Largest `p_hat - fitted` over the points, in units of the CI width.
    pub max_envelope_excess: f64,
    /// No point exceeds the fitted curve by more than its CI width.
    pub envelope_ok: bool,
}

/// Points with at least this many escapes enter the fit.
pub const MIN_ESCAPES: u64 = 5;

pub fn fit_scaling(points: &[EscapeStats], b: f64) -> Result<ScalingFit, ExperimentError> {
    let used: Vec<&EscapeStats> = points.iter().filter(|p| p.escapes >= MIN_ESCAPES).collect();
    if used.len() < 4 {
        return Err(ExperimentError::InsufficientPoints {
            usable: used.len(),
            required: 4,
        });
    }
    let oz: Vec<f64> = used.iter().map(|p| p.omega * p.zeta * p.zeta).collect();
    let lo = oz.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = oz.iter().copied().fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return Err(ExperimentError::InsufficientSpan { ratio: hi / lo });
    }
    let x: Vec<f64> = used.iter().map(|p| p.omega * b * p.zeta * p.zeta).collect();
    let y: Vec<f64> = used.iter().map(|p| (p.p_hat / (b * p.horizon)).ln()).collect();
    let fit = linear_fit(&x, &y);
    let c = -fit.slope;
    // Same line, T prefactor: log(p/T) = log(p/(bT)) + log b.
    let intercept_t = fit.intercept + b.ln();
    let mut max_excess = f64::NEG_INFINITY;
    for (p, &xi) in used.iter().zip(&x) {
        let fitted = b * p.horizon * (fit.intercept - c * xi).exp();
        let width = (p.ci_hi - p.ci_lo).max(f64::MIN_POSITIVE);
        max_excess = max_excess.max((p.p_hat - fitted) / width);
    }
    Ok(ScalingFit {
        points: used.iter().map(|p| (p.omega, p.zeta, p.horizon, p.p_hat)).collect(),
        c,
        intercept_bt: fit.intercept,
        intercept_t,
        r_squared: fit.r_squared,
        residuals: fit.residuals,
        max_envelope_excess: max_excess,
        envelope_ok: max_excess <= 1.0,
    })
}
