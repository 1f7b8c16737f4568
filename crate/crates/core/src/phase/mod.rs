//! Variational and linear phase along stochastic trajectories.
//!
//! The variational phase `beta` of a state `x` is a root of
//! `G(x, b) = -2 <x - Phi(b), Phi'(b)>_b` with positive curvature
//! `M = G_b / 2`, chosen continuously from event to event. The weighted
//! amplitude is `w = P^-1(beta) (x - Phi(beta))`.

mod sde;
mod tracker;

pub use sde::{isochronal_phase_sde, isochronal_phase_sde_from, PhasePath};
pub use tracker::{initial_phase_guess, ExitReason, track_phase, CompensatorMode, PhaseRecord, PhaseTrace, PhaseTracker};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{FloquetData, Frame};
use crate::linalg::{self, Small};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("no local minimum within {halfwidth} rad of phase {beta_prev}")]
    NoLocalMinimum { beta_prev: f64, halfwidth: f64 },
    #[error("Newton iteration did not converge from phase {beta_prev}")]
    NewtonNonConvergence { beta_prev: f64 },
    #[error("curvature {0} is below 1/2")]
    CurvatureTooSmall(f64),
    #[error("invalid variational configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stochastic(#[from] crate::stochastic::StochasticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalConfig {
    /// Half-width of the search window around the previous phase.
    pub search_halfwidth: f64,
    pub newton_tol: f64,
    /// Escape radius in the weighted norm; `None` means
    /// `0.3 * orbit diameter`.
    pub eta: Option<f64>,
    pub max_newton_iters: usize,
    /// Points of the fallback scan over the window.
    pub scan_points: usize,
    /// Newton results further than this from the previous phase are
    /// confirmed by a full window scan.
    pub trust_radius: f64,
    /// Always scan the window so that `minima_count` is exact.
    pub count_minima: bool,
}

impl Default for VariationalConfig {
    fn default() -> Self {
        Self {
            search_halfwidth: PI / 4.0,
            newton_tol: 1e-10,
            eta: None,
            max_newton_iters: 50,
            scan_points: 256,
            trust_radius: 0.05,
            count_minima: false,
        }
    }
}

/// Escape-radius scale relative to the weighted orbit diameter.
pub const DEFAULT_ETA_FRACTION: f64 = 0.3;

impl VariationalConfig {
    pub fn validate(&self) -> Result<(), PhaseError> {
        let bad = |m: &str| Err(PhaseError::InvalidConfig(m.into()));
        if !(self.search_halfwidth > 0.0 && self.search_halfwidth < PI) {
            return bad("search_halfwidth must lie in (0, pi)");
        }
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0) {
                return bad("eta must be positive");
            }
        }
        if self.max_newton_iters == 0 || self.scan_points < 2 {
            return bad("max_newton_iters and scan_points must be positive");
        }
        if !(self.trust_radius > 0.0) {
            return bad("trust_radius must be positive");
        }
        Ok(())
    }

    pub fn eta_for(&self, fd: &FloquetData) -> f64 {
        self.eta.unwrap_or_else(|| DEFAULT_ETA_FRACTION * fd.orbit_diameter())
    }
}

/// Output of [`variational_phase`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSolution {
    /// On the same lift as `beta_prev`.
    pub beta: f64,
    pub normw: f64,
    pub curvature: f64,
    /// Roots with positive curvature found in the window; 1 when only the
    /// Newton path ran.
    pub minima_count: usize,
    /// `G(x, beta)` at the returned phase.
    pub residual: f64,
}

/// Scratch buffers for repeated phase evaluations at one state.
#[derive(Debug, Clone)]
pub struct PhaseEvaluator<'a> {
    fd: &'a FloquetData,
    k: usize,
    frame: Frame,
    v: Small,
    w: Small,
    q_dphi: Small,
    q_ddphi: Small,
    tmp: Small,
    tmp2: Small,
}

/// `G`, `M` and `w` at one phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEval {
    pub g: f64,
    pub curvature: f64,
    pub normw: f64,
}

impl<'a> PhaseEvaluator<'a> {
    pub fn new(fd: &'a FloquetData) -> Self {
        let k = fd.dim();
        let v = Small::from_elem(0.0, k);
        Self {
            fd,
            k,
            frame: Frame::new(k),
            v: v.clone(),
            w: v.clone(),
            q_dphi: v.clone(),
            q_ddphi: v.clone(),
            tmp: v.clone(),
            tmp2: v,
        }
    }

    pub fn floquet(&self) -> &'a FloquetData {
        self.fd
    }

    /// Frame of the most recent [`Self::eval`].
    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    /// Weighted amplitude of the most recent [`Self::eval`].
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// `P^-1 Phi'` of the most recent [`Self::eval`].
    pub fn q_dphi(&self) -> &[f64] {
        &self.q_dphi
    }

    /// Evaluate at phase `b`. The curvature is the three-term expression
    /// `<Phi', Phi'>_b - <x - Phi, Phi''>_b - (x - Phi)^T A' Phi'` with
    /// `A = (P P^T)^-1` differentiated through the `P` interpolant.
    #[inline]
    pub fn eval(&mut self, x: &[f64], b: f64) -> PhaseEval {
        let k = self.k;
        self.fd.frame_into(b, &mut self.frame);
        let f = &self.frame;
        for i in 0..k {
            self.v[i] = x[i] - f.phi[i];
        }
        linalg::mat_vec(&f.pinv, k, &self.v, &mut self.w);
        linalg::mat_vec(&f.pinv, k, &f.dphi, &mut self.q_dphi);
        linalg::mat_vec(&f.pinv, k, &f.ddphi, &mut self.q_ddphi);
        let g = -2.0 * linalg::dot(&self.w, &self.q_dphi);

        let t1 = linalg::dot(&self.q_dphi, &self.q_dphi);
        let t2 = -linalg::dot(&self.w, &self.q_ddphi);
        // -v^T A' Phi' with A' = -(Q P' Q)^T Q - Q^T (Q P' Q), Q = P^-1:
        // (Q P' w) . (Q Phi') + w . (Q P' Q Phi').
        linalg::mat_vec(&f.dp, k, &self.w, &mut self.tmp);
        linalg::mat_vec(&f.pinv, k, &self.tmp, &mut self.tmp2);
        let a = linalg::dot(&self.tmp2, &self.q_dphi);
        linalg::mat_vec(&f.dp, k, &self.q_dphi, &mut self.tmp);
        linalg::mat_vec(&f.pinv, k, &self.tmp, &mut self.tmp2);
        let c = linalg::dot(&self.w, &self.tmp2);
        PhaseEval {
            g,
            curvature: t1 + t2 + a + c,
            normw: linalg::norm(&self.w),
        }
    }

    /// `<Phi'(b), dx>_b` at the phase of the most recent [`Self::eval`].
    #[inline]
    pub fn tangent_component(&mut self, dx: &[f64]) -> f64 {
        linalg::mat_vec(&self.frame.pinv, self.k, dx, &mut self.tmp);
        linalg::dot(&self.tmp, &self.q_dphi)
    }

    /// Newton from `beta_prev` with a window-scan fallback.
    pub fn solve(&mut self, x: &[f64], beta_prev: f64, cfg: &VariationalConfig) -> Result<PhaseSolution, PhaseError> {
        if !cfg.count_minima {
            if let Some(sol) = self.newton(x, beta_prev, cfg) {
                if (sol.beta - beta_prev).abs() <= cfg.trust_radius {
                    return Ok(sol);
                }
            }
        }
        self.scan(x, beta_prev, cfg)
    }

    fn newton(&mut self, x: &[f64], beta_prev: f64, cfg: &VariationalConfig) -> Option<PhaseSolution> {
        let mut b = beta_prev;
        for _ in 0..cfg.max_newton_iters {
            let e = self.eval(x, b);
            if !(e.curvature > 0.0) {
                return None;
            }
            let step = -e.g / (2.0 * e.curvature);
            b += step;
            if (b - beta_prev).abs() > cfg.search_halfwidth || !b.is_finite() {
                return None;
            }
            if step.abs() < cfg.newton_tol {
                let e = self.eval(x, b);
                if !(e.curvature > 0.0) {
                    return None;
                }
                return Some(PhaseSolution {
                    beta: b,
                    normw: e.normw,
                    curvature: e.curvature,
                    minima_count: 1,
                    residual: e.g,
                });
            }
        }
        None
    }

    /// Bracket every increasing zero crossing of `G` on a uniform grid
    /// over the window and refine each by safeguarded Newton-bisection.
    fn scan(&mut self, x: &[f64], beta_prev: f64, cfg: &VariationalConfig) -> Result<PhaseSolution, PhaseError> {
        let n = cfg.scan_points;
        let lo = beta_prev - cfg.search_halfwidth;
        let step = 2.0 * cfg.search_halfwidth / n as f64;
        let mut roots: Vec<PhaseSolution> = Vec::new();
        let mut prev_b = lo;
        let mut prev_g = self.eval(x, lo).g;
        for i in 1..=n {
            let b = lo + i as f64 * step;
            let g = self.eval(x, b).g;
            if prev_g < 0.0 && g >= 0.0 {
                if let Some(sol) = self.refine(x, prev_b, b, cfg) {
                    if sol.curvature > 0.0 {
                        roots.push(sol);
                    }
                }
            } else if prev_g == 0.0 && g > 0.0 && i == 1 {
                let e = self.eval(x, prev_b);
                if e.curvature > 0.0 {
                    roots.push(PhaseSolution {
                        beta: prev_b,
                        normw: e.normw,
                        curvature: e.curvature,
                        minima_count: 1,
                        residual: e.g,
                    });
                }
            }
            prev_b = b;
            prev_g = g;
        }
        let count = roots.len();
        let best = roots
            .into_iter()
            .min_by(|a, b| {
                let da = a.beta - beta_prev;
                let db = b.beta - beta_prev;
                da.abs().total_cmp(&db.abs()).then(da.total_cmp(&db))
            })
            .ok_or(PhaseError::NoLocalMinimum {
                beta_prev,
                halfwidth: cfg.search_halfwidth,
            })?;
        Ok(PhaseSolution {
            minima_count: count,
            ..best
        })
    }

    fn refine(&mut self, x: &[f64], mut a: f64, mut b: f64, cfg: &VariationalConfig) -> Option<PhaseSolution> {
        let mut m = 0.5 * (a + b);
        for _ in 0..200 {
            let e = self.eval(x, m);
            if e.g < 0.0 {
                a = m;
            } else {
                b = m;
            }
            let newton = if e.curvature > 0.0 { m - e.g / (2.0 * e.curvature) } else { f64::NAN };
            let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            let done = (next - m).abs() < cfg.newton_tol || b - a < cfg.newton_tol;
            m = next;
            if done {
                let mut e = self.eval(x, m);
                // One more Newton step leaves the error well below the tolerance.
                if e.curvature > 0.0 {
                    let polished = m - e.g / (2.0 * e.curvature);
                    if (polished - m).abs() < cfg.newton_tol {
                        m = polished;
                        e = self.eval(x, m);
                    }
                }
                return Some(PhaseSolution {
                    beta: m,
                    normw: e.normw,
                    curvature: e.curvature,
                    minima_count: 1,
                    residual: e.g,
                });
            }
        }
        None
    }
}

/// `G0(x, b, theta) = -2 <x - Phi(b), Phi'(b)>_theta`.
pub fn g0(fd: &FloquetData, x: &[f64], b: f64, theta: f64) -> f64 {
    let (phi, dphi) = fd.limit_cycle().eval(b);
    let v: Vec<f64> = x.iter().zip(&phi).map(|(a, p)| a - p).collect();
    -2.0 * crate::floquet::weighted_inner(fd, theta, &v, &dphi)
}

/// `G(x, b) = G0(x, b, b)`.
pub fn g(fd: &FloquetData, x: &[f64], b: f64) -> f64 {
    g0(fd, x, b, b)
}

/// `M(x, b) = (1/2) dG/db`.
pub fn curvature(fd: &FloquetData, x: &[f64], b: f64) -> f64 {
    PhaseEvaluator::new(fd).eval(x, b).curvature
}

/// Continuity-preferred local minimizer near `beta_prev`.
pub fn variational_phase(
    fd: &FloquetData,
    x: &[f64],
    beta_prev: f64,
    cfg: &VariationalConfig,
) -> Result<PhaseSolution, PhaseError> {
    PhaseEvaluator::new(fd).solve(x, beta_prev, cfg)
}

/// Smallest curvature accepted by the linear phase update.
pub const MIN_CURVATURE: f64 = 0.5;

/// `delta beta = M^-1 <Phi'(beta), dx>_beta`.
pub fn linear_phase_update(fd: &FloquetData, beta: f64, curvature: f64, dx: &[f64]) -> Result<f64, PhaseError> {
    if !(curvature >= MIN_CURVATURE) {
        return Err(PhaseError::CurvatureTooSmall(curvature));
    }
    let (_, dphi) = fd.limit_cycle().eval(beta);
    Ok(crate::floquet::weighted_inner(fd, beta, &dphi, dx) / curvature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::{find_limit_cycle, CycleOptions};
    use crate::floquet::floquet_decompose;
    use crate::model::brusselator;

    fn fd() -> FloquetData {
        let net = brusselator(1.0, 2.5, 3000.0).unwrap();
        let lc = find_limit_cycle(&net, &[2.0, 2.0], &CycleOptions::default()).unwrap();
        floquet_decompose(&lc, &net).unwrap()
    }

    #[test]
    fn on_cycle() {
        let fd = fd();
        let cfg = VariationalConfig::default();
        for q in 0..20 {
            let th = 0.31 * q as f64;
            let (phi, _) = fd.limit_cycle().eval(th);
            let s = variational_phase(&fd, &phi, th + 0.01, &cfg).unwrap();
            assert!((s.beta - th).abs() < 1e-9, "{} {}", s.beta, th);
            assert!(s.normw < 1e-8);
            assert!((s.curvature - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn three_term_curvature_matches_compact_form_and_derivative() {
        let fd = fd();
        let mut ev = PhaseEvaluator::new(&fd);
        let x = [1.3, 2.9];
        for q in 0..10 {
            let b = 0.6 * q as f64;
            let e = ev.eval(&x, b);
            let f = ev.frame().clone();
            // 1 + (P^-1 P' w)_1
            let mut t = [0.0; 2];
            let mut u = [0.0; 2];
            linalg::mat_vec(&f.dp, 2, ev.w(), &mut t);
            linalg::mat_vec(&f.pinv, 2, &t, &mut u);
            assert!((e.curvature - (1.0 + u[0])).abs() < 1e-10);
            let h = 1e-6;
            let fd_m = (ev.eval(&x, b + h).g - ev.eval(&x, b - h).g) / (4.0 * h);
            assert!((fd_m - e.curvature).abs() < 1e-4 * e.curvature.abs().max(1.0));
        }
    }

    #[test]
    fn linear_update_is_prc_on_cycle() {
        let fd = fd();
        let mut ev = PhaseEvaluator::new(&fd);
        let th = 2.2;
        let (phi, _) = fd.limit_cycle().eval(th);
        let e = ev.eval(&phi, th);
        let dx = [1.0 / 3000.0, -1.0 / 3000.0];
        let d = linear_phase_update(&fd, th, e.curvature, &dx).unwrap();
        assert!((d - ev.tangent_component(&dx)).abs() < 1e-15);
        assert_eq!(linear_phase_update(&fd, th, 1.0, &[0.0, 0.0]).unwrap(), 0.0);
        assert!(linear_phase_update(&fd, th, 0.4, &dx).is_err());
    }
}
