//! Mass-action ODE integration and limit-cycle location by Poincaré
//! shooting.
//!
//! The phase origin is the section point found by the shooting: the state
//! of maximal first-coordinate velocity on the attracting orbit.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::interp::{PhaseGrid, QuinticCurve};
use crate::linalg;
use crate::model::ReactionNetwork;
use crate::ode::{self, Control, DenseStep, OdeError, OdeOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CycleError {
    #[error("no limit cycle: {0}")]
    NoCycle(String),
    #[error("shooting did not converge: return residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOptions {
    pub grid_size: usize,
    /// Return-map residual target for the shooting Newton iteration.
    pub tol: f64,
    pub integrator_tol: f64,
    /// Pre-integration length in estimated periods.
    pub pre_periods: f64,
    pub max_newton_iters: usize,
    /// Give up looking for oscillations after this much model time.
    pub max_probe_time: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            grid_size: 512,
            tol: 1e-10,
            integrator_tol: 1e-12,
            pre_periods: 50.0,
            max_newton_iters: 50,
            max_probe_time: 1e5,
        }
    }
}

/// Adaptive integration of `dx/dt = F(x)` recording every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

pub fn integrate_ode(
    net: &ReactionNetwork,
    x0: &[f64],
    t_span: (f64, f64),
    tol: f64,
) -> Result<OdePath, OdeError> {
    let opts = OdeOptions::with_tol(tol);
    let mut path = OdePath {
        times: vec![t_span.0],
        states: vec![x0.to_vec()],
    };
    ode::integrate(drift_fn(net), t_span.0, x0, t_span.1, &opts, |step| {
        path.times.push(step.t1);
        path.states.push(step.end());
        Control::Continue
    })?;
    Ok(path)
}

/// `F` as an ODE right-hand side.
pub fn drift_fn(net: &ReactionNetwork) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    let mut props = vec![0.0; net.num_reactions()];
    move |_, x, dx| net.drift_into(x, &mut props, dx)
}

/// State plus row-major `K x K` variational matrix: `Psi' = J(x) Psi`.
pub fn variational_fn(net: &ReactionNetwork) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    let k = net.num_species();
    let mut props = vec![0.0; net.num_reactions()];
    let mut jac = vec![0.0; k * k];
    move |_, y, dy| {
        let (x, psi) = y.split_at(k);
        let (dx, dpsi) = dy.split_at_mut(k);
        net.drift_into(x, &mut props, dx);
        net.jacobian_into(x, &mut jac);
        for r in 0..k {
            for c in 0..k {
                dpsi[r * k + c] = (0..k).map(|j| jac[r * k + j] * psi[j * k + c]).sum();
            }
        }
    }
}

/// The stable periodic orbit, parameterized by phase.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycle {
    period: f64,
    omega0: f64,
    anchor: Vec<f64>,
    section_normal: Vec<f64>,
    return_residual: f64,
    integrator_tol: f64,
    orbit: QuinticCurve,
}

impl LimitCycle {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// `Phi(0)`.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn section_normal(&self) -> &[f64] {
        &self.section_normal
    }

    /// `|phi_T(x0) - x0|` at the converged shooting solution.
    pub fn return_residual(&self) -> f64 {
        self.return_residual
    }

    pub fn integrator_tol(&self) -> f64 {
        self.integrator_tol
    }

    pub fn grid(&self) -> PhaseGrid {
        self.orbit.grid()
    }

    /// Stored `(Phi, Phi', Phi'')` at grid node `g`.
    pub fn node(&self, g: usize) -> (&[f64], &[f64], &[f64]) {
        self.orbit.node_values(g)
    }

    /// `(Phi(theta), Phi'(theta))`; `theta` is wrapped.
    pub fn eval(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.dim();
        let (mut v, mut d, mut dd) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        self.orbit.eval_into(theta, &mut v, &mut d, &mut dd);
        (v, d)
    }

    /// `Phi`, `Phi'` and `Phi''` at `theta` into caller buffers.
    #[inline]
    pub fn eval_into(&self, theta: f64, phi: &mut [f64], dphi: &mut [f64], ddphi: &mut [f64]) {
        self.orbit.eval_into(theta, phi, dphi, ddphi);
    }

    /// The same orbit with the phase origin moved to old phase `shift`,
    /// resampled by re-integrating from the old anchor.
    pub fn reanchored(&self, net: &ReactionNetwork, shift: f64) -> Result<Self, CycleError> {
        let shift = shift.rem_euclid(TAU);
        let opts = OdeOptions::with_tol(self.integrator_tol);
        let x = ode::integrate_to(drift_fn(net), 0.0, &self.anchor, shift / self.omega0, &opts)?;
        let mut out = sample_orbit(net, &x, self.period, self.grid().len(), self.integrator_tol)?;
        out.section_normal = self.section_normal.clone();
        out.return_residual = self.return_residual;
        Ok(out)
    }
}

/// `eval_orbit(lc, theta)`.
pub fn eval_orbit(lc: &LimitCycle, theta: f64) -> (Vec<f64>, Vec<f64>) {
    lc.eval(theta)
}

pub fn find_limit_cycle(
    net: &ReactionNetwork,
    x_seed: &[f64],
    opts: &CycleOptions,
) -> Result<LimitCycle, CycleError> {
    let k = net.num_species();
    assert_eq!(x_seed.len(), k, "seed dimension");
    let ode_opts = OdeOptions::with_tol(opts.integrator_tol);

    // Probe for oscillations and estimate the period from successive maxima
    // of the first coordinate, then keep going for `pre_periods` of them.
    let (x_pre, t_est) = pre_integrate(net, x_seed, opts, &ode_opts)?;

    // Section through the state of maximal first-coordinate velocity over
    // the next estimated period.
    let anchor = max_velocity_point(net, &x_pre, 1.25 * t_est, &ode_opts)?;
    let f_anchor = net.drift(&anchor);
    let fnorm = linalg::norm(&f_anchor);
    let normal: Vec<f64> = f_anchor.iter().map(|v| v / fnorm).collect();

    // Newton on (x0, T) for phi_T(x0) = x0 with n . (x0 - anchor) = 0.
    let mut x0 = anchor.clone();
    let mut period = t_est;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..opts.max_newton_iters {
        iterations = it + 1;
        let (xt, mono) = flow_with_monodromy(net, &x0, period, &ode_opts)?;
        let r: Vec<f64> = xt.iter().zip(&x0).map(|(a, b)| a - b).collect();
        residual = linalg::norm(&r);
        if residual < opts.tol {
            break;
        }
        let ft = net.drift(&xt);
        let mut a = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for i in 0..k {
            for j in 0..k {
                a[(i, j)] = mono[i * k + j] - if i == j { 1.0 } else { 0.0 };
            }
            a[(i, k)] = ft[i];
            a[(k, i)] = normal[i];
            rhs[i] = -r[i];
        }
        rhs[k] = -(0..k).map(|i| normal[i] * (x0[i] - anchor[i])).sum::<f64>();
        let delta = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CycleError::NoCycle("singular shooting system".into()))?;
        // Damp steps that would change the period by more than half.
        let scale = if delta[k].abs() > 0.5 * period {
            0.5 * period / delta[k].abs()
        } else {
            1.0
        };
        for i in 0..k {
            x0[i] += scale * delta[i];
        }
        period += scale * delta[k];
        if !(period > 1e-6 * t_est) || !x0.iter().all(|v| v.is_finite()) {
            return Err(CycleError::NoCycle("period collapsed during shooting".into()));
        }
        if linalg::norm(&net.drift(&x0)) < 1e-9 * (1.0 + linalg::norm(&x0)) {
            return Err(CycleError::NoCycle("shooting converged onto a fixed point".into()));
        }
    }
    if residual >= opts.tol {
        return Err(CycleError::NotConverged { residual, iterations });
    }

    let mut lc = sample_orbit(net, &x0, period, opts.grid_size, opts.integrator_tol)?;
    lc.section_normal = normal;
    lc.return_residual = residual;
    Ok(lc)
}

fn pre_integrate(
    net: &ReactionNetwork,
    x_seed: &[f64],
    opts: &CycleOptions,
    ode_opts: &OdeOptions,
) -> Result<(Vec<f64>, f64), CycleError> {
    let k = net.num_species();
    let mut props = vec![0.0; net.num_reactions()];
    let mut f_prev = vec![0.0; k];
    let mut f_now = vec![0.0; k];
    net.drift_into(x_seed, &mut props, &mut f_prev);
    let scale = 1.0 + linalg::norm(x_seed);
    let mut maxima: Vec<f64> = Vec::new();
    let mut target = f64::INFINITY;
    let mut fixed_point = false;
    let (_, x_end) = ode::integrate(
        drift_fn(net),
        0.0,
        x_seed,
        opts.max_probe_time,
        ode_opts,
        |step: &DenseStep| {
            let y = step.end();
            net.drift_into(&y, &mut props, &mut f_now);
            if f_prev[0] > 0.0 && f_now[0] <= 0.0 {
                maxima.push(step.t1);
                if maxima.len() >= 3 && target.is_infinite() {
                    let n = maxima.len();
                    target = step.t1 + opts.pre_periods * (maxima[n - 1] - maxima[n - 2]);
                }
            }
            std::mem::swap(&mut f_prev, &mut f_now);
            if linalg::norm(&f_prev) < 1e-12 * scale {
                fixed_point = true;
                return Control::Stop;
            }
            if step.t1 >= target {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )?;
    if fixed_point {
        return Err(CycleError::NoCycle("trajectory settles on a fixed point".into()));
    }
    if maxima.len() < 3 {
        return Err(CycleError::NoCycle(format!(
            "no sustained oscillation within t = {}",
            opts.max_probe_time
        )));
    }
    let n = maxima.len();
    let t_est = maxima[n - 1] - maxima[n - 2];

    // A decaying oscillation has shrinking amplitude over the last period.
    let amp_now = oscillation_amplitude(net, &x_end, t_est, ode_opts)?;
    if amp_now < 1e-6 * scale {
        return Err(CycleError::NoCycle(format!(
            "oscillation amplitude decays to {amp_now:e}"
        )));
    }
    Ok((x_end, t_est))
}

fn oscillation_amplitude(
    net: &ReactionNetwork,
    x: &[f64],
    span: f64,
    ode_opts: &OdeOptions,
) -> Result<f64, OdeError> {
    let k = x.len();
    let mut lo = x.to_vec();
    let mut hi = x.to_vec();
    ode::integrate(drift_fn(net), 0.0, x, span, ode_opts, |step| {
        for (i, v) in step.end().into_iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
        Control::Continue
    })?;
    Ok((0..k).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt())
}

/// State along the next `span` of the flow where `F_1` is maximal, refined
/// as a root of `(J F)_1`.
fn max_velocity_point(
    net: &ReactionNetwork,
    x: &[f64],
    span: f64,
    ode_opts: &OdeOptions,
) -> Result<Vec<f64>, CycleError> {
    let k = x.len();
    let mut steps: Vec<DenseStep> = Vec::new();
    ode::integrate(drift_fn(net), 0.0, x, span, ode_opts, |step| {
        steps.push(step.clone());
        Control::Continue
    })?;
    let mut jac = vec![0.0; k * k];
    let mut accel = |y: &[f64]| -> f64 {
        let f = net.drift(y);
        net.jacobian_into(y, &mut jac);
        (0..k).map(|j| jac[j] * f[j]).sum()
    };
    // Best sampled point, 8 samples per step.
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
    for (si, st) in steps.iter().enumerate() {
        for q in 0..8 {
            let t = st.t0 + (st.t1 - st.t0) * q as f64 / 8.0;
            let f1 = net.drift(&st.eval(t))[0];
            if f1 > best.0 {
                best = (f1, si, t);
            }
        }
    }
    let (_, si, t_best) = best;
    // Bracket a + to - sign change of (J F)_1 around the sample.
    let t_of = |s: &DenseStep, t: f64| s.eval(t);
    let lo_t = (t_best - (steps[si].t1 - steps[si].t0) / 4.0).max(steps[0].t0);
    let hi_t = (t_best + (steps[si].t1 - steps[si].t0) / 4.0).min(steps.last().unwrap().t1);
    let locate = |t: f64| -> &DenseStep {
        let idx = steps.partition_point(|s| s.t1 < t).min(steps.len() - 1);
        &steps[idx]
    };
    let (mut a, mut b) = (lo_t, hi_t);
    let (ga, gb) = (accel(&t_of(locate(a), a)), accel(&t_of(locate(b), b)));
    if !(ga >= 0.0 && gb <= 0.0) {
        return Ok(t_of(locate(t_best), t_best));
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if accel(&t_of(locate(m), m)) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-14 * span {
            break;
        }
    }
    let m = 0.5 * (a + b);
    Ok(t_of(locate(m), m))
}

/// Flow `phi_T(x0)` and the monodromy (row-major).
pub fn flow_with_monodromy(
    net: &ReactionNetwork,
    x0: &[f64],
    t: f64,
    ode_opts: &OdeOptions,
) -> Result<(Vec<f64>, Vec<f64>), OdeError> {
    let k = x0.len();
    let mut y0 = vec![0.0; k + k * k];
    y0[..k].copy_from_slice(x0);
    for i in 0..k {
        y0[k + i * k + i] = 1.0;
    }
    let y = ode::integrate_to(variational_fn(net), 0.0, &y0, t, ode_opts)?;
    Ok((y[..k].to_vec(), y[k..].to_vec()))
}

fn sample_orbit(
    net: &ReactionNetwork,
    x0: &[f64],
    period: f64,
    grid_size: usize,
    integrator_tol: f64,
) -> Result<LimitCycle, CycleError> {
    let k = x0.len();
    let grid = PhaseGrid::new(grid_size);
    let omega0 = TAU / period;
    let times: Vec<f64> = (0..grid_size).map(|g| g as f64 * period / grid_size as f64).collect();
    let states = ode::integrate_at(drift_fn(net), 0.0, x0, &times, &OdeOptions::with_tol(integrator_tol))?;
    let mut y = Vec::with_capacity(grid_size * k);
    let mut dy = Vec::with_capacity(grid_size * k);
    let mut ddy = Vec::with_capacity(grid_size * k);
    let mut jac = vec![0.0; k * k];
    for x in &states {
        let f = net.drift(x);
        net.jacobian_into(x, &mut jac);
        y.extend_from_slice(x);
        dy.extend(f.iter().map(|v| v / omega0));
        for r in 0..k {
            let jf: f64 = (0..k).map(|c| jac[r * k + c] * f[c]).sum();
            ddy.push(jf / (omega0 * omega0));
        }
    }
    Ok(LimitCycle {
        period,
        omega0,
        anchor: x0.to_vec(),
        section_normal: vec![0.0; k],
        return_residual: 0.0,
        integrator_tol,
        orbit: QuinticCurve::new(grid, k, y, dy, ddy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{birth_death, brusselator};

    #[test]
    fn ode_linear_decay() {
        let net = birth_death(1e-300, 1.0, 1.0).unwrap();
        let path = integrate_ode(&net, &[1.0], (0.0, 1.0), 1e-12).unwrap();
        let x1 = path.states.last().unwrap()[0];
        assert!((x1 - (-1f64).exp()).abs() < 1e-11);
        assert_eq!(*path.times.last().unwrap(), 1.0);
    }

    #[test]
    fn brusselator_cycle_basic_properties() {
        let net = brusselator(1.0, 2.5, 1.0).unwrap();
        let lc = find_limit_cycle(&net, &[2.0, 2.0], &CycleOptions::default()).unwrap();
        assert!((lc.omega0() * lc.period() - TAU).abs() < 1e-14);
        assert!(lc.return_residual() < 1e-8);
        for g in (0..512).step_by(37) {
            let (phi, dphi, _) = lc.node(g);
            let f = net.drift(phi);
            for i in 0..2 {
                assert!((lc.omega0() * dphi[i] - f[i]).abs() < 1e-12);
            }
        }
        let (a, da) = lc.eval(1.234);
        let (b, db) = lc.eval(1.234 + TAU);
        assert_eq!(a, b);
        assert_eq!(da, db);
    }

    #[test]
    fn stable_focus_has_no_cycle() {
        let net = brusselator(1.0, 1.5, 1.0).unwrap();
        let err = find_limit_cycle(&net, &[2.0, 2.0], &CycleOptions::default()).unwrap_err();
        assert!(matches!(err, CycleError::NoCycle(_)), "{err:?}");
    }
}
