use rayon::prelude::*;
use serde::Serialize;

use super::{ExperimentError, Oscillator};
use crate::model::PropensityForm;
use crate::phase::{isochronal_phase_sde_from, CompensatorMode, PhaseTracker, VariationalConfig};
use crate::stats::linear_fit;
use crate::stochastic::{cle_simulate_replica, DirectSimulator, JumpSimulator};

/// Ensemble mean concentration paths of the jump process and of the
/// chemical Langevin equation at common checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanPathComparison {
    pub omega: f64,
    pub replicas: u64,
    pub h: f64,
    pub times: Vec<f64>,
    pub ssa_mean: Vec<Vec<f64>>,
    pub ssa_se: Vec<Vec<f64>>,
    pub cle_mean: Vec<Vec<f64>>,
    pub cle_se: Vec<Vec<f64>>,
    /// `max |ssa_mean - cle_mean| / sqrt(ssa_se^2 + cle_se^2)`.
    pub max_z: f64,
}

/// Both ensembles start at the copy numbers nearest to `Phi(0)`; the CLE
/// checkpoints are taken on its step grid, so `horizon / checkpoints`
/// should be a multiple of `h`.
pub fn diffusion_comparison(
    osc: &Oscillator,
    omega: f64,
    horizon: f64,
    checkpoints: usize,
    replicas: u64,
    seed: u64,
    h: f64,
) -> Result<MeanPathComparison, ExperimentError> {
    if checkpoints == 0 || replicas < 2 {
        return Err(ExperimentError::InvalidArgument("need checkpoints >= 1 and replicas >= 2".into()));
    }
    let osc = osc.at_omega(omega)?;
    let k = osc.net.num_species();
    let n0 = osc.counts_on_cycle(0.0);
    let x0: Vec<f64> = n0.iter().map(|&v| v as f64 / omega).collect();
    let times: Vec<f64> = (1..=checkpoints).map(|i| horizon * i as f64 / checkpoints as f64).collect();

    let ssa: Vec<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<_, ExperimentError> {
            let mut sim = DirectSimulator::new(&osc.net, &n0, PropensityForm::MassAction, seed, r)?;
            let mut out = Vec::with_capacity(times.len());
            for &t in &times {
                while sim.next_event(t)?.is_some() {}
                out.push(sim.counts().iter().map(|&v| v as f64 / omega).collect());
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    // CLE replicas use stream indices after the SSA ones.
    let cle: Vec<Vec<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<_, ExperimentError> {
            let path = cle_simulate_replica(&osc.net, &x0, horizon, h, seed, replicas + r)?;
            Ok(times
                .iter()
                .map(|&t| {
                    let idx = path.times.partition_point(|&s| s < t - 1e-9 * h).min(path.times.len() - 1);
                    path.states[idx].clone()
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;

    let summarize = |runs: &[Vec<Vec<f64>>]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = runs.len() as f64;
        let mut means = vec![vec![0.0; k]; times.len()];
        let mut ses = vec![vec![0.0; k]; times.len()];
        for c in 0..times.len() {
            for i in 0..k {
                let xs: Vec<f64> = runs.iter().map(|r| r[c][i]).collect();
                means[c][i] = crate::stats::mean(&xs);
                ses[c][i] = (crate::stats::variance(&xs) / n).sqrt();
            }
        }
        (means, ses)
    };
    let (ssa_mean, ssa_se) = summarize(&ssa);
    let (cle_mean, cle_se) = summarize(&cle);
    let mut max_z: f64 = 0.0;
    for c in 0..times.len() {
        for i in 0..k {
            let se = (ssa_se[c][i].powi(2) + cle_se[c][i].powi(2)).sqrt();
            max_z = max_z.max((ssa_mean[c][i] - cle_mean[c][i]).abs() / se);
        }
    }
    Ok(MeanPathComparison {
        omega,
        replicas,
        h,
        times,
        ssa_mean,
        ssa_se,
        cle_mean,
        cle_se,
        max_z,
    })
}

/// Growth of the ensemble variance of `beta_lin - omega0 t` (jump process)
/// against that of `theta - omega0 t` (isochronal phase SDE).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiffusion {
    pub omega: f64,
    pub replicas: u64,
    pub times: Vec<f64>,
    pub var_linear: Vec<f64>,
    pub var_sde: Vec<f64>,
    pub slope_linear: f64,
    pub slope_sde: f64,
    /// `|slope_linear / slope_sde - 1|`.
    pub relative_gap: f64,
    /// Replicas that left the tube and were dropped.
    pub exits: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn phase_diffusion_comparison(
    osc: &Oscillator,
    omega: f64,
    horizon: f64,
    checkpoints: usize,
    replicas: u64,
    seed: u64,
    h: f64,
    cfg: &VariationalConfig,
) -> Result<PhaseDiffusion, ExperimentError> {
    if checkpoints < 2 || replicas < 2 {
        return Err(ExperimentError::InvalidArgument("need checkpoints >= 2 and replicas >= 2".into()));
    }
    let osc = osc.at_omega(omega)?;
    let omega0 = osc.lc.omega0();
    let n0 = osc.counts_on_cycle(0.0);
    let times: Vec<f64> = (1..=checkpoints).map(|i| horizon * i as f64 / checkpoints as f64).collect();
    let linear: Vec<Option<Vec<f64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| -> Result<_, ExperimentError> {
            let mut sim = DirectSimulator::new(&osc.net, &n0, PropensityForm::MassAction, seed, r)?;
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
            let start = tr.beta_lin();
            let mut out = Vec::with_capacity(times.len());
            for &t in &times {
                while let Some((te, a)) = sim.next_event(t)? {
                    if tr.on_event(te, a)? {
                        return Ok(None);
                    }
                }
                tr.advance_to(t);
                out.push(tr.beta_lin() - start - omega0 * t);
            }
            Ok(Some(out))
        })
        .collect::<Result<_, _>>()?;
    let exits = linear.iter().filter(|v| v.is_none()).count() as u64;
    let linear: Vec<Vec<f64>> = linear.into_iter().flatten().collect();
    let sde: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = isochronal_phase_sde_from(&osc.lc, &osc.prc, &osc.net, 0.0, horizon, h, seed, replicas + r);
            times
                .iter()
                .map(|&t| {
                    let idx = path.times.partition_point(|&s| s < t - 1e-9 * h).min(path.times.len() - 1);
                    path.theta[idx] - omega0 * path.times[idx]
                })
                .collect()
        })
        .collect();
    let var_at = |runs: &[Vec<f64>]| -> Vec<f64> {
        (0..times.len())
            .map(|c| crate::stats::variance(&runs.iter().map(|r| r[c]).collect::<Vec<_>>()))
            .collect()
    };
    let var_linear = var_at(&linear);
    let var_sde = var_at(&sde);
    let slope_linear = linear_fit(&times, &var_linear).slope;
    let slope_sde = linear_fit(&times, &var_sde).slope;
    Ok(PhaseDiffusion {
        omega,
        replicas,
        times,
        var_linear,
        var_sde,
        slope_linear,
        slope_sde,
        relative_gap: (slope_linear / slope_sde - 1.0).abs(),
        exits,
    })
}
