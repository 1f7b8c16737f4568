use serde::{Deserialize, Serialize};

use super::{brusselator_oscillator, ExperimentError, Oscillator};
use crate::deterministic::drift_fn;
use crate::model::PropensityForm;
use crate::ode::{integrate_at, OdeOptions};
use crate::phase::{CompensatorMode, ExitReason, PhaseEvaluator, PhaseTracker, VariationalConfig};
use crate::stochastic::{DirectSimulator, JumpSimulator};

/// Source of the sample path in a benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkNoise {
    /// Exact jump process.
    #[default]
    Jump,
    /// Mass-action ODE from the same start.
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRow {
    pub t: f64,
    pub beta_var: f64,
    pub beta_lin: f64,
    pub beta_var_minus_w0t: f64,
    pub beta_lin_minus_w0t: f64,
    pub norm_w: f64,
    pub curvature: f64,
}

/// Sampled concentrations and phases of one run started on the cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Benchmark {
    pub omega: f64,
    pub seed: u64,
    pub noise: BenchmarkNoise,
    pub period: f64,
    pub omega0: f64,
    pub eta: f64,
    pub horizon: f64,
    pub species: Vec<String>,
    pub times: Vec<f64>,
    /// Concentrations at `times`; also the phase portrait.
    pub states: Vec<Vec<f64>>,
    pub phase: Vec<PhaseRow>,
    /// Deterministic orbit at the phase-grid nodes.
    pub cycle: Vec<Vec<f64>>,
    pub events: u64,
    pub escaped_at: Option<f64>,
    pub exit_reason: Option<ExitReason>,
}

impl Benchmark {
    /// Largest `|beta_var - beta_lin|` over rows with `t <= t_max`.
    pub fn max_separation(&self, t_max: f64) -> f64 {
        self.phase
            .iter()
            .filter(|r| r.t <= t_max)
            .map(|r| (r.beta_var - r.beta_lin).abs())
            .fold(0.0, f64::max)
    }
}

/// Run from the copy numbers nearest `Phi(0)` for `horizon`, sampling
/// `samples_per_period` times per period. Noise off integrates the ODE from
/// `Phi(0)` itself.
pub fn oscillator_benchmark(
    osc: &Oscillator,
    omega: f64,
    horizon: f64,
    samples_per_period: usize,
    seed: u64,
    noise: BenchmarkNoise,
    cfg: &VariationalConfig,
) -> Result<Benchmark, ExperimentError> {
    if samples_per_period == 0 || !(horizon >= 0.0) {
        return Err(ExperimentError::InvalidArgument("need samples_per_period > 0 and horizon >= 0".into()));
    }
    let osc = osc.at_omega(omega)?;
    let period = osc.lc.period();
    let omega0 = osc.lc.omega0();
    let dt = period / samples_per_period as f64;
    let n_samples = (horizon / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n_samples).map(|i| i as f64 * dt).collect();
    if horizon - times[n_samples] > 1e-9 * dt {
        times.push(horizon);
    }
    let row = |t: f64, beta_var: f64, beta_lin: f64, norm_w: f64, curvature: f64| PhaseRow {
        t,
        beta_var,
        beta_lin,
        beta_var_minus_w0t: beta_var - omega0 * t,
        beta_lin_minus_w0t: beta_lin - omega0 * t,
        norm_w,
        curvature,
    };

    let mut states = Vec::with_capacity(times.len());
    let mut phase = Vec::with_capacity(times.len());
    let mut events = 0u64;
    let mut escaped_at = None;
    let mut exit_reason = None;
    let eta = cfg.eta_for(&osc.fd);
    match noise {
        BenchmarkNoise::Jump => {
            let n0 = osc.counts_on_cycle(0.0);
            let mut sim = DirectSimulator::new(&osc.net, &n0, PropensityForm::MassAction, seed, 0)?;
            let mut tr = PhaseTracker::new(
                &osc.net,
                &osc.fd,
                Some(&osc.prc),
                cfg,
                Some(CompensatorMode::Trajectory),
                PropensityForm::MassAction,
                &n0,
                0.0,
                0.0,
            )?;
            'samples: for &t in &times {
                while let Some((te, a)) = sim.next_event(t)? {
                    events += 1;
                    if tr.on_event(te, a)? {
                        escaped_at = tr.escaped_at();
                        exit_reason = tr.exit_reason();
                        break 'samples;
                    }
                }
                tr.advance_to(t);
                let r = tr.record();
                states.push(tr.counts().iter().map(|&v| v as f64 / omega).collect());
                phase.push(row(t, r.beta_var, r.beta_lin, r.normw, r.curvature));
            }
            times.truncate(states.len());
        }
        BenchmarkNoise::Off => {
            let (x0, _) = osc.lc.eval(0.0);
            let opts = OdeOptions::with_tol(osc.lc.integrator_tol());
            states = integrate_at(drift_fn(&osc.net), 0.0, &x0, &times, &opts)?;
            let mut ev = PhaseEvaluator::new(&osc.fd);
            let mut beta = 0.0;
            for (&t, x) in times.iter().zip(&states) {
                let sol = ev.solve(x, beta, cfg)?;
                beta = sol.beta;
                phase.push(row(t, sol.beta, omega0 * t, sol.normw, sol.curvature));
            }
        }
    }
    let grid = osc.lc.grid();
    let cycle = (0..grid.len()).map(|g| osc.lc.node(g).0.to_vec()).collect();
    Ok(Benchmark {
        omega,
        seed,
        noise,
        period,
        omega0,
        eta,
        horizon,
        species: osc.net.species().to_vec(),
        times,
        states,
        phase,
        cycle,
        events,
        escaped_at,
        exit_reason,
    })
}

/// The Brusselator at `a = 1, b = 2.5, omega = 3000` over five periods.
pub fn brusselator_benchmark(seed: u64) -> Result<Benchmark, ExperimentError> {
    let osc = brusselator_oscillator(3000.0)?;
    let horizon = 5.0 * osc.lc.period();
    oscillator_benchmark(&osc, 3000.0, horizon, 200, seed, BenchmarkNoise::Jump, &VariationalConfig::default())
}
