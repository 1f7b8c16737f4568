use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::deterministic::LimitCycle;
use crate::floquet::PhaseResponseCurve;
use crate::model::ReactionNetwork;
use crate::rng;

/// Euler–Maruyama path of the diffusion-approximation phase (unwrapped).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePath {
    pub h: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub theta: Vec<f64>,
}

/// `d theta = omega0 dt + omega^{-1/2} sum_a (R(theta) . S_a)
/// sqrt(lambda_a(Phi(theta))) dW_a`, started at `theta = 0`.
pub fn isochronal_phase_sde(
    lc: &LimitCycle,
    prc: &PhaseResponseCurve,
    net: &ReactionNetwork,
    t_end: f64,
    h: f64,
    seed: u64,
) -> PhasePath {
    isochronal_phase_sde_from(lc, prc, net, 0.0, t_end, h, seed, 0)
}

#[allow(clippy::too_many_arguments)]
pub fn isochronal_phase_sde_from(
    lc: &LimitCycle,
    prc: &PhaseResponseCurve,
    net: &ReactionNetwork,
    theta0: f64,
    t_end: f64,
    h: f64,
    seed: u64,
    replica: u64,
) -> PhasePath {
    assert!(h > 0.0, "step must be positive");
    let k = net.num_species();
    let m = net.num_reactions();
    let noise = 1.0 / net.omega().sqrt();
    let columns: Vec<Vec<f64>> = (0..m).map(|a| net.stoich_column(a)).collect();
    let mut rng = rng::replica_rng(seed, replica);
    let steps = ((t_end / h) - 1e-9).ceil().max(0.0) as usize;
    let (mut r, mut rs) = (vec![0.0; k], vec![0.0; k]);
    let (mut phi, mut dphi, mut ddphi) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut props = vec![0.0; m];
    let mut path = PhasePath {
        h,
        seed,
        times: Vec::with_capacity(steps + 1),
        theta: Vec::with_capacity(steps + 1),
    };
    let mut theta = theta0;
    let mut t = 0.0;
    path.times.push(t);
    path.theta.push(theta);
    for s in 0..steps {
        let t_next = if s + 1 == steps { t_end } else { (s + 1) as f64 * h };
        let dt = t_next - t;
        prc.eval_into(theta, &mut r, &mut rs);
        lc.eval_into(theta, &mut phi, &mut dphi, &mut ddphi);
        net.propensities_into(&phi, &mut props);
        let mut d = lc.omega0() * dt;
        for a in 0..m {
            let xi: f64 = StandardNormal.sample(&mut rng);
            let coupling: f64 = (0..k).map(|j| r[j] * columns[a][j]).sum();
            d += noise * coupling * props[a].max(0.0).sqrt() * dt.sqrt() * xi;
        }
        theta += d;
        t = t_next;
        path.times.push(t);
        path.theta.push(theta);
    }
    path
}
