use crn_phase::model::{birth_death, brusselator, parse_network, PropensityForm};
use crn_phase::stats::{ks_two_sample, mean, std_error, variance};
use crn_phase::stochastic::{cle_simulate, count_reactions, ssa_direct, ssa_time_change, DirectSimulator, JumpSimulator, JumpTrajectory};
use rayon::prelude::*;

/// Time average and time variance of a piecewise-constant count path over
/// `[t0, t_end]`.
fn time_moments(traj: &JumpTrajectory, t0: f64) -> (f64, f64) {
    let path = traj.count_path();
    let times = traj.times();
    let (mut s1, mut s2, mut total) = (0.0, 0.0, 0.0);
    for i in 0..path.len() {
        let start = if i == 0 { 0.0 } else { times[i - 1] };
        let end = if i < times.len() { times[i] } else { traj.t_end() };
        let dt = (end.min(traj.t_end()) - start.max(t0)).max(0.0);
        let n = path[i][0] as f64;
        s1 += n * dt;
        s2 += n * n * dt;
        total += dt;
    }
    let m = s1 / total;
    (m, s2 / total - m * m)
}

#[test]
fn birth_death_time_average_is_poisson() {
    let net = birth_death(2.0, 1.0, 100.0).unwrap();
    let traj = ssa_direct(&net, &[200], 2000.0, 11, PropensityForm::MassAction).unwrap();
    let (m, v) = time_moments(&traj, 0.0);
    // autocorrelation time 1: standard error of the time mean is about sqrt(2 * 200 / 2000)
    assert!((m - 200.0).abs() < 3.0 * (2.0 * 200.0 / 2000.0f64).sqrt(), "mean {m}");
    assert!((v / 200.0 - 1.0).abs() < 0.15, "variance {v}");
}

#[test]
fn constant_rate_channel_is_poisson() {
    let net = parse_network("1.5 : -> X", 10.0).unwrap();
    let counts: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut sim = crn_phase::stochastic::TimeChangeSimulator::new(&net, &[0], PropensityForm::MassAction, 5, r).unwrap();
            let mut c = 0u64;
            while sim.next_event(1.0).unwrap().is_some() {
                c += 1;
            }
            c as f64
        })
        .collect();
    let expect = 15.0;
    assert!((mean(&counts) - expect).abs() < 3.0 * (expect / 1e4f64).sqrt());
    assert!((variance(&counts) / expect - 1.0).abs() < 0.05);
}

#[test]
fn engines_agree_in_law() {
    let net = birth_death(2.0, 1.0, 20.0).unwrap();
    let run = |time_change: bool| -> (Vec<f64>, Vec<f64>) {
        (0..4000u64)
            .into_par_iter()
            .map(|r| {
                let traj = if time_change {
                    ssa_time_change(&net, &[10], 2.0, 1000 + r, PropensityForm::MassAction).unwrap()
                } else {
                    ssa_direct(&net, &[10], 2.0, r, PropensityForm::MassAction).unwrap()
                };
                (traj.counts_at(2.0)[0] as f64, traj.times()[0])
            })
            .unzip()
    };
    let (ca, ta) = run(false);
    let (cb, tb) = run(true);
    assert!(ks_two_sample(&ca, &cb).p_value > 1e-3);
    assert!(ks_two_sample(&ta, &tb).p_value > 1e-3);
}

#[test]
fn compensated_counts_have_zero_mean() {
    let net = birth_death(2.0, 1.0, 30.0).unwrap();
    let omega = net.omega();
    let t_end = 3.0;
    let residual: Vec<Vec<f64>> = (0..3000u64)
        .into_par_iter()
        .map(|r| {
            let traj = ssa_direct(&net, &[20], t_end, r, PropensityForm::MassAction).unwrap();
            let path = traj.count_path();
            let mut integral = [0.0; 2];
            let mut props = [0.0; 2];
            for (i, n) in path.iter().enumerate() {
                let start = if i == 0 { 0.0 } else { traj.times()[i - 1] };
                let end = traj.times().get(i).copied().unwrap_or(t_end);
                net.count_propensities_into(n, PropensityForm::MassAction, &mut props);
                for a in 0..2 {
                    integral[a] += omega * props[a] * (end - start);
                }
            }
            let counters = traj.reaction_counters(t_end);
            (0..2).map(|a| (counters[a] as f64 - integral[a]) / omega).collect()
        })
        .collect();
    for a in 0..2 {
        let xs: Vec<f64> = residual.iter().map(|r| r[a]).collect();
        assert!(mean(&xs).abs() < 3.0 * std_error(&xs), "channel {a}: {} +- {}", mean(&xs), std_error(&xs));
    }
}

#[test]
fn window_counts() {
    let net = birth_death(2.0, 1.0, 10.0).unwrap();
    let traj = ssa_direct(&net, &[20], 5.0, 3, PropensityForm::MassAction).unwrap();
    assert_eq!(count_reactions(&traj, 2.0, 2.0).total, 0);
    assert_eq!(count_reactions(&traj, 0.0, 5.0).total as usize, traj.len());
    let w = count_reactions(&traj, 1.0, 4.0);
    assert_eq!(w.per_channel.iter().sum::<u64>(), w.total);
}

#[test]
fn law_of_large_numbers_scaling() {
    let base = brusselator(1.0, 2.5, 1.0).unwrap();
    let opts = crn_phase::ode::OdeOptions::with_tol(1e-10);
    let mut sups = Vec::new();
    for omega in [1e2, 1e3, 1e4] {
        let net = base.with_omega(omega).unwrap();
        let n0 = [(2.0 * omega) as u64, (2.0 * omega) as u64];
        let reps = 6u64;
        let total: f64 = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut sim = DirectSimulator::new(&net, &n0, PropensityForm::MassAction, 9, r).unwrap();
                let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
                let xs = crn_phase::ode::integrate_at(crn_phase::deterministic::drift_fn(&base), 0.0, &[2.0, 2.0], &grid, &opts).unwrap();
                let mut sup: f64 = 0.0;
                for (t, x) in grid.iter().zip(&xs) {
                    while sim.next_event(*t).unwrap().is_some() {}
                    let n = sim.counts();
                    sup = sup.max((n[0] as f64 / omega - x[0]).hypot(n[1] as f64 / omega - x[1]));
                }
                sup
            })
            .sum();
        sups.push(total / reps as f64);
    }
    for w in sups.windows(2) {
        let ratio = w[0] / w[1];
        // Omega^{-1/2} gives sqrt(10)
        assert!(ratio > 1.8 && ratio < 6.0, "{sups:?}");
    }
}

#[test]
fn cle_birth_death_moments() {
    let net = birth_death(2.0, 1.0, 100.0).unwrap();
    let path = cle_simulate(&net, &[2.0], 2000.0, 0.01, 4).unwrap();
    let xs: Vec<f64> = path.states.iter().skip(1000).map(|x| x[0]).collect();
    let m = mean(&xs);
    let v = variance(&xs);
    // stationary law N(k/gamma, k/(gamma omega)) in concentration
    assert!((m - 2.0).abs() < 0.02, "mean {m}");
    assert!((v / 0.02 - 1.0).abs() < 0.1, "variance {v}");
    assert!(path.states.iter().all(|x| x[0].is_finite()));
}
