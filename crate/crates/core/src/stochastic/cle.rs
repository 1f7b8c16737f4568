use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::StochasticError;
use crate::model::ReactionNetwork;
use crate::rng;

/// Euler–Maruyama path of the chemical Langevin equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdePath {
    pub h: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Channel evaluations where a negative propensity was clipped to zero
    /// under the square root.
    pub clip_count: u64,
}

/// `dX = F(X) dt + omega^{-1/2} sum_a S_a sqrt(lambda_a(X)) dW_a` on the grid
/// `0, h, 2h, ...` up to `t_end` (the final step is shortened to land on
/// `t_end`). An infinite `omega` switches the noise off.
pub fn cle_simulate(
    net: &ReactionNetwork,
    x0: &[f64],
    t_end: f64,
    h: f64,
    seed: u64,
) -> Result<SdePath, StochasticError> {
    cle_simulate_replica(net, x0, t_end, h, seed, 0)
}

pub fn cle_simulate_replica(
    net: &ReactionNetwork,
    x0: &[f64],
    t_end: f64,
    h: f64,
    seed: u64,
    replica: u64,
) -> Result<SdePath, StochasticError> {
    if !(h > 0.0) {
        return Err(StochasticError::InvalidArgument(format!("step {h} must be positive")));
    }
    if x0.len() != net.num_species() {
        return Err(StochasticError::InvalidArgument("state dimension".into()));
    }
    let k = net.num_species();
    let m = net.num_reactions();
    let noise = 1.0 / net.omega().sqrt();
    let mut rng = rng::replica_rng(seed, replica);
    let steps = ((t_end / h) - 1e-9).ceil().max(0.0) as usize;
    let mut x = x0.to_vec();
    let mut props = vec![0.0; m];
    let mut drift = vec![0.0; k];
    let mut path = SdePath {
        h,
        seed,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        clip_count: 0,
    };
    path.times.push(0.0);
    path.states.push(x.clone());
    let mut t = 0.0;
    for s in 0..steps {
        let t_next = if s + 1 == steps { t_end } else { (s + 1) as f64 * h };
        let dt = t_next - t;
        net.drift_into(&x, &mut props, &mut drift);
        let sq = dt.sqrt();
        for i in 0..k {
            x[i] += drift[i] * dt;
        }
        for (a, &lam) in props.iter().enumerate() {
            // Draw for every channel so the stream layout is fixed.
            let xi: f64 = StandardNormal.sample(&mut rng);
            if lam < 0.0 {
                path.clip_count += 1;
                continue;
            }
            let amp = noise * lam.sqrt() * sq * xi;
            for &(i, d) in net.changes(a) {
                x[i] += d as f64 * amp;
            }
        }
        t = t_next;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(StochasticError::NonFiniteState { t });
        }
        path.times.push(t);
        path.states.push(x.clone());
    }
    Ok(path)
}
