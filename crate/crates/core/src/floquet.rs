//! Fundamental matrix, Floquet decomposition, the weighted inner product
//! and the phase response curve of a limit cycle.
//!
//! `P(theta)` is the periodic Floquet matrix with first column `Phi'(theta)`
//! and remaining columns the monodromy eigenvectors transported along the
//! orbit. The weighted inner product is
//! `<u, v>_theta = (P^-1(theta) u) . (P^-1(theta) v)`, and the phase
//! response curve is `R = (P P^T)^-1 Phi'`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::deterministic::{drift_fn, variational_fn, LimitCycle};
use crate::interp::{CubicCurve, PhaseGrid, QuinticCurve};
use crate::linalg::{self, Small};
use crate::model::ReactionNetwork;
use crate::ode::{self, OdeError, OdeOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("complex Floquet multiplier {re} + {im}i; only real multipliers are supported")]
    ComplexMultiplier { re: f64, im: f64 },
    #[error("non-positive Floquet multiplier {0}")]
    NegativeMultiplier(f64),
    #[error("trivial exponent {nu} is not zero to 1e-6 omega0")]
    TrivialExponent { nu: f64 },
    #[error("orbit is not stable: exponent {0} >= 0")]
    Unstable(f64),
    #[error("degenerate Floquet eigenvectors: {0}")]
    Degenerate(String),
    #[error("adjoint integration disagrees with the Floquet construction by {gap:e}")]
    AdjointMismatch { gap: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Columns `Z0 = [Phi'(0), e_2.., ]` with the completion orthonormal and
/// orthogonal to `Phi'(0)` (Gram–Schmidt on the standard basis).
pub fn initial_basis(lc: &LimitCycle) -> DMatrix<f64> {
    let k = lc.dim();
    let (_, d0) = lc.eval(0.0);
    let mut z = DMatrix::zeros(k, k);
    z.set_column(0, &nalgebra::DVector::from_column_slice(&d0));
    let mut basis: Vec<Vec<f64>> = vec![d0.iter().map(|v| v / linalg::norm(&d0)).collect()];
    for e in 0..k {
        if basis.len() == k {
            break;
        }
        let mut v = vec![0.0; k];
        v[e] = 1.0;
        for b in &basis {
            let p = linalg::dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = linalg::norm(&v);
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    for (c, b) in basis.iter().enumerate().skip(1) {
        z.set_column(c, &nalgebra::DVector::from_column_slice(b));
    }
    z
}

/// Principal fundamental matrix `Psi(t)` (with `Psi(0) = I`) of
/// `z' = J(Phi(omega0 s)) z`, integrated along the flow from the anchor.
pub fn principal_fundamental(lc: &LimitCycle, net: &ReactionNetwork, t: f64) -> Result<DMatrix<f64>, OdeError> {
    let k = lc.dim();
    let opts = OdeOptions::with_tol(lc.integrator_tol());
    let mut y0 = vec![0.0; k + k * k];
    y0[..k].copy_from_slice(lc.anchor());
    for i in 0..k {
        y0[k + i * k + i] = 1.0;
    }
    let y = ode::integrate_to(variational_fn(net), 0.0, &y0, t, &opts)?;
    Ok(DMatrix::from_row_slice(k, k, &y[k..]))
}

/// `Pi(t) = Psi(t) Z0`: the fundamental matrix whose first column starts at
/// `Phi'(0)` and whose other columns start on an orthonormal completion.
pub fn fundamental_matrix(lc: &LimitCycle, net: &ReactionNetwork, t: f64) -> Result<DMatrix<f64>, OdeError> {
    Ok(principal_fundamental(lc, net, t)? * initial_basis(lc))
}

/// Floquet structure of a limit cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetData {
    lc: LimitCycle,
    exponents: Vec<f64>,
    multipliers: Vec<f64>,
    monodromy: DMatrix<f64>,
    p0: DMatrix<f64>,
    /// Row-major `P` entries with `dP/dtheta` slopes.
    p_curve: CubicCurve,
    pinv_nodes: Vec<f64>,
}

/// Everything the phase tracker needs at one phase, in reusable buffers.
#[derive(Debug, Clone)]
pub struct Frame {
    pub phi: Small,
    pub dphi: Small,
    pub ddphi: Small,
    /// Row-major `P`.
    pub p: Small,
    pub dp: Small,
    pub pinv: Small,
}

impl Frame {
    pub fn new(k: usize) -> Self {
        let v = Small::from_elem(0.0, k);
        let m = Small::from_elem(0.0, k * k);
        Self {
            phi: v.clone(),
            dphi: v.clone(),
            ddphi: v,
            p: m.clone(),
            dp: m.clone(),
            pinv: m,
        }
    }
}

impl FloquetData {
    pub fn limit_cycle(&self) -> &LimitCycle {
        &self.lc
    }

    pub fn dim(&self) -> usize {
        self.lc.dim()
    }

    /// `nu_1 = 0, nu_2 >= nu_3 ...`.
    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// `b = -max_{i >= 2} nu_i`.
    pub fn decay_rate(&self) -> f64 {
        -self.exponents[1]
    }

    /// `Psi(Delta0)`.
    pub fn monodromy(&self) -> &DMatrix<f64> {
        &self.monodromy
    }

    pub fn p0(&self) -> &DMatrix<f64> {
        &self.p0
    }

    pub fn grid(&self) -> PhaseGrid {
        self.p_curve.grid()
    }

    /// Stored `P` and `P^-1` at node `g`.
    pub fn node_matrices(&self, g: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = self.dim();
        let (p, _) = self.p_curve.node_values(g);
        (
            DMatrix::from_row_slice(k, k, p),
            DMatrix::from_row_slice(k, k, &self.pinv_nodes[g * k * k..(g + 1) * k * k]),
        )
    }

    /// Orbit, `P`, `dP/dtheta` and `P^-1` at `theta`. The first column of
    /// `P` is taken from the orbit interpolant so that `P^-1 Phi' = e_1`.
    #[inline]
    pub fn frame_into(&self, theta: f64, f: &mut Frame) {
        let k = self.dim();
        self.lc.eval_into(theta, &mut f.phi, &mut f.dphi, &mut f.ddphi);
        self.p_curve.eval_into(theta, &mut f.p, &mut f.dp);
        for r in 0..k {
            f.p[r * k] = f.dphi[r];
            f.dp[r * k] = f.ddphi[r];
        }
        f.pinv = linalg::invert(&f.p, k).expect("Floquet matrix is invertible along the orbit");
    }

    pub fn frame(&self, theta: f64) -> Frame {
        let mut f = Frame::new(self.dim());
        self.frame_into(theta, &mut f);
        f
    }

    /// `P(theta)`.
    pub fn p(&self, theta: f64) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_row_slice(k, k, &self.frame(theta).p)
    }

    /// `P^-1(theta)`.
    pub fn pinv(&self, theta: f64) -> DMatrix<f64> {
        let k = self.dim();
        DMatrix::from_row_slice(k, k, &self.frame(theta).pinv)
    }

    /// `max_g |P(theta_g + 2pi) - P(theta_g)|` from the transport of
    /// `P(0)` over one full period: `Psi(Delta0) P(0) exp(-Delta0 S) - P(0)`.
    pub fn periodicity_defect(&self) -> f64 {
        let k = self.dim();
        let mut transported = &self.monodromy * &self.p0;
        for c in 0..k {
            let scale = (-self.exponents[c] * self.lc.period()).exp();
            transported.column_mut(c).scale_mut(scale);
        }
        (transported - &self.p0).amax()
    }

    /// `||P^-1(theta) Phi'(theta)||^2`; identically 1 by construction.
    pub fn tangent_weight(&self, theta: f64) -> f64 {
        let f = self.frame(theta);
        let k = self.dim();
        let mut w = vec![0.0; k];
        linalg::mat_vec(&f.pinv, k, &f.dphi, &mut w);
        linalg::dot(&w, &w)
    }

    /// Largest weighted distance between sampled orbit points,
    /// `max_{i,j} ||Phi(theta_i) - Phi(theta_j)||_{theta_i}` over 128 phases.
    pub fn orbit_diameter(&self) -> f64 {
        let n = 128;
        let k = self.dim();
        let frames: Vec<Frame> = (0..n).map(|i| self.frame(i as f64 * TAU / n as f64)).collect();
        let mut best: f64 = 0.0;
        let mut d = vec![0.0; k];
        let mut w = vec![0.0; k];
        for fi in &frames {
            for fj in &frames {
                for c in 0..k {
                    d[c] = fi.phi[c] - fj.phi[c];
                }
                linalg::mat_vec(&fi.pinv, k, &d, &mut w);
                best = best.max(linalg::norm(&w));
            }
        }
        best
    }
}

/// `<u, v>_theta = (P^-1 u) . (P^-1 v)`.
pub fn weighted_inner(fd: &FloquetData, theta: f64, u: &[f64], v: &[f64]) -> f64 {
    let k = fd.dim();
    let f = fd.frame(theta);
    let mut pu = vec![0.0; k];
    let mut pv = vec![0.0; k];
    linalg::mat_vec(&f.pinv, k, u, &mut pu);
    linalg::mat_vec(&f.pinv, k, v, &mut pv);
    linalg::dot(&pu, &pv)
}

pub fn weighted_norm(fd: &FloquetData, theta: f64, u: &[f64]) -> f64 {
    weighted_inner(fd, theta, u, u).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    /// Largest accepted `|Im mu| / |mu|`.
    pub complex_tol: f64,
    /// Largest accepted `|nu_1| / omega0`.
    pub trivial_tol: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            complex_tol: 1e-8,
            trivial_tol: 1e-6,
        }
    }
}

pub fn floquet_decompose(lc: &LimitCycle, net: &ReactionNetwork) -> Result<FloquetData, FloquetError> {
    floquet_decompose_with(lc, net, &FloquetOptions::default())
}

pub fn floquet_decompose_with(
    lc: &LimitCycle,
    net: &ReactionNetwork,
    opts: &FloquetOptions,
) -> Result<FloquetData, FloquetError> {
    let k = lc.dim();
    let period = lc.period();
    let omega0 = lc.omega0();
    let grid = lc.grid();
    let g_n = grid.len();
    let ode_opts = OdeOptions::with_tol(lc.integrator_tol());

    // Psi(t) at every grid time; the last sample is the monodromy.
    let mut y0 = vec![0.0; k + k * k];
    y0[..k].copy_from_slice(lc.anchor());
    for i in 0..k {
        y0[k + i * k + i] = 1.0;
    }
    let times: Vec<f64> = (0..=g_n).map(|g| g as f64 * period / g_n as f64).collect();
    let samples = ode::integrate_at(variational_fn(net), 0.0, &y0, &times, &ode_opts)?;
    let psi: Vec<DMatrix<f64>> = samples.iter().map(|y| DMatrix::from_row_slice(k, k, &y[k..])).collect();
    let monodromy = psi[g_n].clone();

    // Multipliers: trivial one closest to 1, the rest sorted descending.
    let eig = monodromy.complex_eigenvalues();
    let mut mus: Vec<f64> = Vec::with_capacity(k);
    for z in eig.iter() {
        if z.im.abs() > opts.complex_tol * z.norm() {
            return Err(FloquetError::ComplexMultiplier { re: z.re, im: z.im });
        }
        if z.re <= 0.0 {
            return Err(FloquetError::NegativeMultiplier(z.re));
        }
        mus.push(z.re);
    }
    let trivial = (0..k)
        .min_by(|&a, &b| (mus[a] - 1.0).abs().total_cmp(&(mus[b] - 1.0).abs()))
        .expect("k >= 1");
    let mu1 = mus.remove(trivial);
    mus.sort_by(|a, b| b.total_cmp(a));
    let nu1 = mu1.ln() / period;
    if nu1.abs() >= opts.trivial_tol * omega0 {
        return Err(FloquetError::TrivialExponent { nu: nu1 });
    }
    let mut exponents = vec![0.0];
    let mut multipliers = vec![mu1];
    for &mu in &mus {
        let nu = mu.ln() / period;
        if nu >= 0.0 {
            return Err(FloquetError::Unstable(nu));
        }
        exponents.push(nu);
        multipliers.push(mu);
    }
    for w in mus.windows(2) {
        if (w[0] - w[1]).abs() <= 1e-10 * w[0] {
            return Err(FloquetError::Degenerate(format!("repeated multiplier {}", w[0])));
        }
    }

    // P(0) = [Phi'(0), unit eigenvectors with positive first nonzero entry].
    let (_, d0) = lc.eval(0.0);
    let mut p0 = DMatrix::zeros(k, k);
    p0.set_column(0, &nalgebra::DVector::from_column_slice(&d0));
    for (c, &mu) in mus.iter().enumerate() {
        let shifted = &monodromy - DMatrix::identity(k, k) * mu;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let idx = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("nonempty");
        let mut v: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let n = linalg::norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        p0.set_column(c + 1, &nalgebra::DVector::from_column_slice(&v));
    }
    let sv = p0.clone().svd(false, false).singular_values;
    if sv.min() <= 1e-10 * sv.max() {
        return Err(FloquetError::Degenerate("P(0) is singular".into()));
    }

    // P(theta_g) = Psi(t_g) P(0) exp(-t_g S), slopes (J P - P S) / omega0.
    let mut p_vals = Vec::with_capacity(g_n * k * k);
    let mut p_slopes = Vec::with_capacity(g_n * k * k);
    let mut pinv_nodes = Vec::with_capacity(g_n * k * k);
    let mut jac = vec![0.0; k * k];
    for g in 0..g_n {
        let t = times[g];
        let mut p = &psi[g] * &p0;
        for c in 1..k {
            p.column_mut(c).scale_mut((-exponents[c] * t).exp());
        }
        let (phi, dphi, _) = lc.node(g);
        for r in 0..k {
            p[(r, 0)] = dphi[r];
        }
        net.jacobian_into(phi, &mut jac);
        let jm = DMatrix::from_row_slice(k, k, &jac);
        let mut dp = &jm * &p;
        for c in 0..k {
            for r in 0..k {
                dp[(r, c)] -= p[(r, c)] * exponents[c];
            }
        }
        dp /= omega0;
        let pinv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| FloquetError::Degenerate(format!("P singular at node {g}")))?;
        for r in 0..k {
            for c in 0..k {
                p_vals.push(p[(r, c)]);
                p_slopes.push(dp[(r, c)]);
                pinv_nodes.push(pinv[(r, c)]);
            }
        }
    }

    Ok(FloquetData {
        lc: lc.clone(),
        exponents,
        multipliers,
        monodromy,
        p0,
        p_curve: CubicCurve::new(grid, k * k, p_vals, p_slopes),
        pinv_nodes,
    })
}

/// Phase response curve on the phase grid with periodic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResponseCurve {
    curve: CubicCurve,
    /// Sup-norm gap to the adjoint-integration oracle.
    adjoint_gap: f64,
}

impl PhaseResponseCurve {
    pub fn dim(&self) -> usize {
        self.curve.dim()
    }

    pub fn grid(&self) -> PhaseGrid {
        self.curve.grid()
    }

    pub fn node(&self, g: usize) -> &[f64] {
        self.curve.node_values(g).0
    }

    pub fn eval(&self, theta: f64) -> Vec<f64> {
        let k = self.dim();
        let (mut v, mut d) = (vec![0.0; k], vec![0.0; k]);
        self.curve.eval_into(theta, &mut v, &mut d);
        v
    }

    #[inline]
    pub fn eval_into(&self, theta: f64, out: &mut [f64], slope: &mut [f64]) {
        self.curve.eval_into(theta, out, slope);
    }

    pub fn adjoint_gap(&self) -> f64 {
        self.adjoint_gap
    }

    /// `sup_g |omega0 R'(theta_g) + J^T R(theta_g)|`, with `R'` from a
    /// fourth-order periodic central difference of the node values.
    pub fn adjoint_residual(&self, lc: &LimitCycle, net: &ReactionNetwork) -> f64 {
        let k = self.dim();
        let n = self.grid().len();
        let h = self.grid().spacing();
        let mut jac = vec![0.0; k * k];
        let mut worst: f64 = 0.0;
        for g in 0..n {
            let at = |o: isize| self.node((g as isize + o).rem_euclid(n as isize) as usize);
            let (phi, _, _) = lc.node(g);
            net.jacobian_into(phi, &mut jac);
            let r = self.node(g);
            for i in 0..k {
                let d = (-at(2)[i] + 8.0 * at(1)[i] - 8.0 * at(-1)[i] + at(-2)[i]) / (12.0 * h);
                let jt_r: f64 = (0..k).map(|j| jac[j * k + i] * r[j]).sum();
                worst = worst.max((lc.omega0() * d + jt_r).abs());
            }
        }
        worst
    }
}

/// Largest accepted gap between the Floquet and adjoint constructions.
pub const ADJOINT_AGREEMENT: f64 = 1e-4;

/// `R(theta) = (P P^T)^-1 Phi'` at the nodes, checked against backward
/// integration of the adjoint equation `omega0 R' = -J^T R`.
pub fn compute_prc(
    lc: &LimitCycle,
    fd: &FloquetData,
    net: &ReactionNetwork,
) -> Result<PhaseResponseCurve, FloquetError> {
    let k = lc.dim();
    let grid = fd.grid();
    let n = grid.len();
    let omega0 = lc.omega0();
    let mut vals = Vec::with_capacity(n * k);
    let mut slopes = Vec::with_capacity(n * k);
    let mut jac = vec![0.0; k * k];
    for g in 0..n {
        let (p, _) = fd.node_matrices(g);
        let (phi, dphi, _) = lc.node(g);
        let a = (&p * p.transpose())
            .try_inverse()
            .ok_or_else(|| FloquetError::Degenerate(format!("P P^T singular at node {g}")))?;
        let r = a * nalgebra::DVector::from_column_slice(dphi);
        net.jacobian_into(phi, &mut jac);
        for i in 0..k {
            vals.push(r[i]);
            slopes.push(-(0..k).map(|j| jac[j * k + i] * r[j]).sum::<f64>() / omega0);
        }
    }
    let oracle = adjoint_prc(lc, net)?;
    let gap = vals
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if gap.is_nan() || gap > ADJOINT_AGREEMENT {
        return Err(FloquetError::AdjointMismatch { gap });
    }
    Ok(PhaseResponseCurve {
        curve: CubicCurve::new(grid, k, vals, slopes),
        adjoint_gap: gap,
    })
}

/// PRC node values (node-major) from integrating `dR/ds = J^T(Phi(-omega0 s)) R`
/// in reversed time until periodic, normalized so that `<R, Phi'> = 1` on
/// average.
pub fn adjoint_prc(lc: &LimitCycle, net: &ReactionNetwork) -> Result<Vec<f64>, OdeError> {
    let k = lc.dim();
    let n = lc.grid().len();
    let period = lc.period();
    let omega0 = lc.omega0();
    let opts = OdeOptions::with_tol(lc.integrator_tol());
    let mut jac = vec![0.0; k * k];
    let (mut phi, mut dphi, mut ddphi) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut rhs = |s: f64, r: &[f64], dr: &mut [f64]| {
        lc.eval_into(-omega0 * s, &mut phi, &mut dphi, &mut ddphi);
        net.jacobian_into(&phi, &mut jac);
        for i in 0..k {
            dr[i] = (0..k).map(|j| jac[j * k + i] * r[j]).sum();
        }
    };
    let (_, d0) = lc.eval(0.0);
    let d2 = linalg::dot(&d0, &d0);
    let mut r: Vec<f64> = d0.iter().map(|v| v / d2).collect();
    // Whole periods until the return map stops changing R(0).
    for _ in 0..200 {
        let next = ode::integrate_to(&mut rhs, 0.0, &r, period, &opts)?;
        // The adjoint conserves <R, Phi'>, so only the shape converges.
        let scale = linalg::dot(&next, &d0);
        let next: Vec<f64> = next.iter().map(|v| v / scale).collect();
        let change = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r = next;
        if change < 1e-13 {
            break;
        }
    }
    // Sample the last period: s = Delta0 - t_g gives phase theta_g.
    let times: Vec<f64> = (0..n).rev().map(|g| period - g as f64 * period / n as f64).collect();
    let samples = ode::integrate_at(&mut rhs, 0.0, &r, &times, &opts)?;
    let mut out = vec![0.0; n * k];
    for (idx, y) in samples.iter().enumerate() {
        let g = n - 1 - idx;
        out[g * k..(g + 1) * k].copy_from_slice(y);
    }
    out[..k].copy_from_slice(&r);
    let mut norm_sum = 0.0;
    for g in 0..n {
        let (_, dphi, _) = lc.node(g);
        norm_sum += linalg::dot(&out[g * k..(g + 1) * k], dphi);
    }
    let scale = norm_sum / n as f64;
    out.iter_mut().for_each(|v| *v /= scale);
    Ok(out)
}

/// `Phi(theta)` as a standalone curve: used by tests that need the orbit
/// without Floquet data.
pub fn orbit_curve(lc: &LimitCycle) -> QuinticCurve {
    let n = lc.grid().len();
    let k = lc.dim();
    let (mut y, mut dy, mut ddy) = (Vec::new(), Vec::new(), Vec::new());
    for g in 0..n {
        let (a, b, c) = lc.node(g);
        y.extend_from_slice(a);
        dy.extend_from_slice(b);
        ddy.extend_from_slice(c);
    }
    QuinticCurve::new(lc.grid(), k, y, dy, ddy)
}

/// Drift integration from the anchor for `t`; convenience for callers that
/// need a point of the true flow rather than the interpolant.
pub fn flow_from_anchor(lc: &LimitCycle, net: &ReactionNetwork, t: f64) -> Result<Vec<f64>, OdeError> {
    ode::integrate_to(drift_fn(net), 0.0, lc.anchor(), t, &OdeOptions::with_tol(lc.integrator_tol()))
}
