use std::f64::consts::TAU;
use std::sync::OnceLock;

use crn_phase::deterministic::{find_limit_cycle, integrate_ode, CycleOptions, LimitCycle};
use crn_phase::floquet::{
    adjoint_prc, compute_prc, floquet_decompose, fundamental_matrix, initial_basis, principal_fundamental, weighted_inner,
    FloquetData, PhaseResponseCurve,
};
use crn_phase::model::{brusselator, ReactionNetwork};
use crn_phase::ode::{integrate, Control, OdeOptions};
use nalgebra::DMatrix;

struct Setup {
    net: ReactionNetwork,
    lc: LimitCycle,
    fd: FloquetData,
    prc: PhaseResponseCurve,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let net = brusselator(1.0, 2.5, 1.0).unwrap();
        let lc = find_limit_cycle(&net, &[2.0, 2.0], &CycleOptions::default()).unwrap();
        let fd = floquet_decompose(&lc, &net).unwrap();
        let prc = compute_prc(&lc, &fd, &net).unwrap();
        Setup { net, lc, fd, prc }
    })
}

/// Mean interval between same-direction crossings of the section through the
/// anchor, from a long trajectory started at (2, 2).
fn return_time_oracle(s: &Setup) -> f64 {
    let anchor = s.lc.anchor().to_vec();
    let normal = s.lc.section_normal().to_vec();
    let side = |x: &[f64]| (x[0] - anchor[0]) * normal[0] + (x[1] - anchor[1]) * normal[1];
    let opts = OdeOptions::with_tol(1e-12);
    let mut crossings = Vec::new();
    let net = &s.net;
    let f = move |_t: f64, x: &[f64], out: &mut [f64]| out.copy_from_slice(&net.drift(x));
    integrate(f, 0.0, &[2.0, 2.0], 400.0, &opts, |step| {
        let (a, b) = (side(step.start()), side(&step.end()));
        // near the anchor only, upward crossings
        if a < 0.0 && b >= 0.0 && step.t0 > 100.0 {
            let (mut lo, mut hi) = (step.t0, step.t1);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if side(&step.eval(mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = step.eval(lo);
            if (x[0] - anchor[0]).hypot(x[1] - anchor[1]) < 0.5 {
                crossings.push(0.5 * (lo + hi));
            }
        }
        Control::Continue
    })
    .unwrap();
    assert!(crossings.len() > 10);
    (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64
}

#[test]
fn period_matches_return_time_oracle() {
    let s = setup();
    let oracle = return_time_oracle(s);
    let rel = (s.lc.period() - oracle).abs() / oracle;
    assert!(rel < 1e-6, "shooting {} vs oracle {oracle}", s.lc.period());
}

#[test]
fn seed_invariance() {
    let s = setup();
    let other = find_limit_cycle(&s.net, &[0.5, 3.0], &CycleOptions::default()).unwrap();
    assert!((other.period() - s.lc.period()).abs() < 1e-9 * s.lc.period());
    for i in 0..2 {
        assert!((other.anchor()[i] - s.lc.anchor()[i]).abs() < 1e-6);
    }
}

#[test]
fn closed_orbit_recurrence() {
    let s = setup();
    let x0 = s.lc.anchor().to_vec();
    let path = integrate_ode(&s.net, &x0, (0.0, s.lc.period()), 1e-12).unwrap();
    let x1 = path.states.last().unwrap();
    assert!((x1[0] - x0[0]).hypot(x1[1] - x0[1]) < 1e-6);
    // the unstable fixed point stays put for a while
    let fixed = integrate_ode(&s.net, &[1.0, 2.5], (0.0, 5.0), 1e-12).unwrap();
    let xf = fixed.states.last().unwrap();
    assert!((xf[0] - 1.0).abs() < 1e-9 && (xf[1] - 2.5).abs() < 1e-9);
}

fn max_velocity_defect(lc: &LimitCycle, net: &ReactionNetwork) -> f64 {
    let mut worst: f64 = 0.0;
    for q in 0..2000 {
        let th = (q as f64 + 0.37) * TAU / 2000.0;
        let (phi, dphi) = lc.eval(th);
        let f = net.drift(&phi);
        let scale = f[0].hypot(f[1]);
        let gap = (lc.omega0() * dphi[0] - f[0]).hypot(lc.omega0() * dphi[1] - f[1]) / scale;
        worst = worst.max(gap);
    }
    worst
}

#[test]
fn orbit_interpolation_refines() {
    let s = setup();
    let mut defects = Vec::new();
    for g in [64usize, 128, 256] {
        let opts = CycleOptions {
            grid_size: g,
            ..CycleOptions::default()
        };
        let lc = find_limit_cycle(&s.net, &[2.0, 2.0], &opts).unwrap();
        defects.push(max_velocity_defect(&lc, &s.net));
    }
    assert!(defects[2] < 1e-5, "{defects:?}");
    assert!(defects[1] <= 0.5 * defects[0] && defects[2] <= 0.5 * defects[1], "{defects:?}");
    assert!(max_velocity_defect(&s.lc, &s.net) < 1e-5);
}

#[test]
fn fundamental_matrix_properties() {
    let s = setup();
    let d0 = s.lc.period();
    assert_eq!(fundamental_matrix(&s.lc, &s.net, 0.0).unwrap(), initial_basis(&s.lc));
    let (_, dphi0) = s.lc.eval(0.0);
    let psi = principal_fundamental(&s.lc, &s.net, d0).unwrap();
    let v = &psi * nalgebra::DVector::from_column_slice(&dphi0);
    for i in 0..2 {
        assert!((v[i] - dphi0[i]).abs() < 1e-6);
    }
    // Liouville: det = exp(integral of tr J), periodic trapezoid rule on the grid
    let g = s.lc.grid();
    let mean_trace: f64 = (0..g.len()).map(|i| s.net.jacobian(s.lc.node(i).0).trace()).sum::<f64>() / g.len() as f64;
    let liouville = (mean_trace * d0).exp();
    let pi = fundamental_matrix(&s.lc, &s.net, d0).unwrap();
    let det = pi.determinant() / initial_basis(&s.lc).determinant();
    assert!((det / liouville - 1.0).abs() < 1e-6, "{det} vs {liouville}");
}

#[test]
fn floquet_reconstruction() {
    let s = setup();
    let d0 = s.lc.period();
    let nu = s.fd.exponents();
    assert!(nu[0].abs() < 1e-6 * s.lc.omega0());
    assert!(nu[1] < 0.0);
    assert!((nu[1] - s.fd.multipliers()[1].ln() / d0).abs() < 1e-12);
    let p0inv = s.fd.pinv(0.0);
    for q in 0..16 {
        let t = d0 * (q as f64 + 0.5) / 16.0;
        let psi = principal_fundamental(&s.lc, &s.net, t).unwrap();
        let exp_s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(2, nu.iter().map(|v| (v * t).exp())));
        let rebuilt = s.fd.p(s.lc.omega0() * t) * exp_s * &p0inv;
        let rel = (&rebuilt - &psi).abs().max() / psi.abs().max();
        assert!(rel < 1e-6, "t = {t}: {rel}");
    }
    assert!(s.fd.periodicity_defect() < 1e-6);
    for q in 0..64 {
        let th = q as f64 * 0.0981;
        let p = s.fd.p(th);
        let pinv = s.fd.pinv(th);
        assert!((&p * &pinv - DMatrix::identity(2, 2)).abs().max() < 1e-10);
        let (_, dphi) = s.lc.eval(th);
        let e = &pinv * nalgebra::DVector::from_column_slice(&dphi);
        // S P^-1 Phi' = (nu1 e1_1, nu2 e_2)
        assert!((nu[0] * e[0]).abs() < 1e-8 && (nu[1] * e[1]).abs() < 1e-8);
        // S P^T R = 0
        let r = s.prc.eval(th);
        let ptr = p.transpose() * nalgebra::DVector::from_column_slice(&r);
        assert!((nu[1] * ptr[1]).abs() < 1e-6, "{}", ptr[1]);
        assert!((weighted_inner(&s.fd, th, &dphi, &dphi) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn decay_rate_matches_perturbation_fit() {
    let s = setup();
    let d0 = s.lc.period();
    let p0 = s.fd.p(0.0);
    let eps = 1e-4;
    let x0: Vec<f64> = (0..2).map(|i| s.lc.anchor()[i] + eps * p0[(i, 1)]).collect();
    let opts = OdeOptions::with_tol(1e-13);
    let times: Vec<f64> = (0..=3).map(|n| n as f64 * d0).collect();
    let states = crn_phase::ode::integrate_at(crn_phase::deterministic::drift_fn(&s.net), 0.0, &x0, &times, &opts).unwrap();
    let logs: Vec<f64> = states
        .iter()
        .map(|x| (x[0] - s.lc.anchor()[0]).hypot(x[1] - s.lc.anchor()[1]).ln())
        .collect();
    let fit = crn_phase::stats::linear_fit(&times, &logs);
    let nu2 = s.fd.exponents()[1];
    assert!((fit.slope / nu2 - 1.0).abs() < 0.05, "fit {} vs {nu2}", fit.slope);
}

#[test]
fn prc_constructions_agree_and_refine() {
    let s = setup();
    assert!(s.prc.adjoint_gap() < 1e-4);
    let oracle = adjoint_prc(&s.lc, &s.net).unwrap();
    let g = s.lc.grid();
    let mut gap: f64 = 0.0;
    for i in 0..g.len() {
        for j in 0..2 {
            gap = gap.max((oracle[i * 2 + j] - s.prc.node(i)[j]).abs());
        }
        let (_, d, _) = s.lc.node(i);
        assert!((s.prc.node(i)[0] * d[0] + s.prc.node(i)[1] * d[1] - 1.0).abs() < 1e-6);
    }
    assert!(gap < 1e-4, "{gap}");
    let residual = |grid: usize| {
        let opts = CycleOptions {
            grid_size: grid,
            ..CycleOptions::default()
        };
        let lc = find_limit_cycle(&s.net, &[2.0, 2.0], &opts).unwrap();
        let fd = floquet_decompose(&lc, &s.net).unwrap();
        let prc = compute_prc(&lc, &fd, &s.net).unwrap();
        (prc.adjoint_residual(&lc, &s.net), fd.periodicity_defect())
    };
    let (r1, _) = residual(128);
    let (r2, _) = residual(256);
    assert!(r2 < r1, "{r1} -> {r2}");
    assert!(s.prc.adjoint_residual(&s.lc, &s.net) < 1e-4);
}
