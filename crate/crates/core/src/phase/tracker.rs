use serde::{Deserialize, Serialize};

use super::{PhaseError, PhaseEvaluator, VariationalConfig};
use crate::floquet::{FloquetData, PhaseResponseCurve};
use crate::interp;
use crate::model::{PropensityForm, ReactionNetwork};
use crate::stochastic::JumpTrajectory;

/// How the linear phase compensates its jump increments between events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensatorMode {
    /// Coefficients `M^-1 <Phi', S_a>_beta` at the variational phase and
    /// propensities at the current state.
    #[default]
    Trajectory,
    /// Coefficients `R(theta) . S_a` and propensities `lambda_a(Phi(theta))`
    /// at the linear phase itself.
    OnCycle,
}

/// Why a tracker stopped before the end of its trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitReason {
    /// `||w||` reached `eta`.
    Amplitude,
    /// The curvature fell below 1/2, where the linear phase is undefined.
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseRecord {
    pub t: f64,
    pub beta_var: f64,
    pub beta_lin: f64,
    pub normw: f64,
    pub curvature: f64,
    pub minima_count: usize,
}

/// Per-event phase records. The first record is the initial state; when
/// the run did not escape the last record is at the trajectory end time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTrace {
    pub records: Vec<PhaseRecord>,
    pub escaped_at: Option<f64>,
    pub exit_reason: Option<ExitReason>,
    pub eta: f64,
    pub omega0: f64,
    pub anchor: Vec<f64>,
    pub mode: CompensatorMode,
}

/// Streaming phase tracker for one trajectory.
#[derive(Debug, Clone)]
pub struct PhaseTracker<'a> {
    net: &'a ReactionNetwork,
    ev: PhaseEvaluator<'a>,
    prc: Option<&'a PhaseResponseCurve>,
    cfg: VariationalConfig,
    mode: CompensatorMode,
    form: PropensityForm,
    eta: f64,
    omega0: f64,
    counts: Vec<u64>,
    x: Vec<f64>,
    t: f64,
    beta_var: f64,
    beta_lin: f64,
    normw: f64,
    curvature: f64,
    minima_count: usize,
    linear: bool,
    /// `d beta_lin / dt` until the next event.
    lin_drift: f64,
    coeff: Vec<f64>,
    props: Vec<f64>,
    columns: Vec<Vec<f64>>,
    r_buf: Vec<f64>,
    r_slope: Vec<f64>,
    phi: Vec<f64>,
    escaped_at: Option<f64>,
    exit_reason: Option<ExitReason>,
}

impl<'a> PhaseTracker<'a> {
    /// Start at counts `n0` and time `t0`, solving for the variational
    /// phase near `beta_guess`. `mode = None` skips the linear phase
    /// (escape statistics only need `w`); the `OnCycle` mode needs `prc`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        net: &'a ReactionNetwork,
        fd: &'a FloquetData,
        prc: Option<&'a PhaseResponseCurve>,
        cfg: &VariationalConfig,
        mode: Option<CompensatorMode>,
        form: PropensityForm,
        n0: &[u64],
        t0: f64,
        beta_guess: f64,
    ) -> Result<Self, PhaseError> {
        cfg.validate()?;
        if mode == Some(CompensatorMode::OnCycle) && prc.is_none() {
            return Err(PhaseError::InvalidConfig("on-cycle compensator needs a phase response curve".into()));
        }
        let k = net.num_species();
        let m = net.num_reactions();
        let omega = net.omega();
        let x: Vec<f64> = n0.iter().map(|&v| v as f64 / omega).collect();
        let mut ev = PhaseEvaluator::new(fd);
        let sol = ev.solve(&x, beta_guess, cfg)?;
        let mut tr = Self {
            net,
            ev,
            prc,
            cfg: *cfg,
            mode: mode.unwrap_or_default(),
            form,
            eta: cfg.eta_for(fd),
            omega0: fd.limit_cycle().omega0(),
            counts: n0.to_vec(),
            x,
            t: t0,
            beta_var: sol.beta,
            beta_lin: sol.beta,
            normw: sol.normw,
            curvature: sol.curvature,
            minima_count: sol.minima_count,
            linear: mode.is_some(),
            lin_drift: 0.0,
            coeff: vec![0.0; m],
            props: vec![0.0; m],
            columns: (0..m).map(|a| net.stoich_column(a)).collect(),
            r_buf: vec![0.0; k],
            r_slope: vec![0.0; k],
            phi: vec![0.0; k],
            escaped_at: None,
            exit_reason: None,
        };
        if tr.normw >= tr.eta {
            tr.exit(ExitReason::Amplitude);
        } else {
            tr.refresh_linear();
        }
        Ok(tr)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn escaped_at(&self) -> Option<f64> {
        self.escaped_at
    }

    pub fn exit_reason(&self) -> Option<ExitReason> {
        self.exit_reason
    }

    fn exit(&mut self, reason: ExitReason) {
        self.escaped_at = Some(self.t);
        self.exit_reason = Some(reason);
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn beta_var(&self) -> f64 {
        self.beta_var
    }

    pub fn beta_lin(&self) -> f64 {
        self.beta_lin
    }

    pub fn normw(&self) -> f64 {
        self.normw
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&self) -> PhaseRecord {
        PhaseRecord {
            t: self.t,
            beta_var: self.beta_var,
            beta_lin: self.beta_lin,
            normw: self.normw,
            curvature: self.curvature,
            minima_count: self.minima_count,
        }
    }

    /// Jump coefficients and drift of the linear phase for the current
    /// state. A curvature below 1/2 ends the run.
    fn refresh_linear(&mut self) {
        if !self.linear {
            return;
        }
        match self.mode {
            CompensatorMode::Trajectory => {
                if self.curvature < super::MIN_CURVATURE {
                    self.exit(ExitReason::Curvature);
                    return;
                }
                self.ev.eval(&self.x, self.beta_var);
                self.net.count_propensities_into(&self.counts, self.form, &mut self.props);
                let mut comp = 0.0;
                for a in 0..self.coeff.len() {
                    self.coeff[a] = self.ev.tangent_component(&self.columns[a]) / self.curvature;
                    comp += self.coeff[a] * self.props[a];
                }
                self.lin_drift = self.omega0 - comp;
            }
            CompensatorMode::OnCycle => {
                let prc = self.prc.expect("checked at construction");
                let theta = self.beta_lin;
                prc.eval_into(theta, &mut self.r_buf, &mut self.r_slope);
                let (phi, _) = self.ev.floquet().limit_cycle().eval(theta);
                self.phi.copy_from_slice(&phi);
                self.net.propensities_into(&self.phi, &mut self.props);
                let mut comp = 0.0;
                for a in 0..self.coeff.len() {
                    self.coeff[a] = crate::linalg::dot(&self.r_buf, &self.columns[a]);
                    comp += self.coeff[a] * self.props[a];
                }
                self.lin_drift = self.omega0 - comp;
            }
        }
    }

    /// Advance the clock to `t` with no event.
    pub fn advance_to(&mut self, t: f64) {
        if t > self.t {
            self.beta_lin += self.lin_drift * (t - self.t);
            self.t = t;
        }
    }

    /// Process the firing of `channel` at time `t`. Returns `true` once the
    /// run has exited (weighted amplitude at `eta`, or curvature below 1/2
    /// while the linear phase is tracked); later calls are ignored.
    pub fn on_event(&mut self, t: f64, channel: usize) -> Result<bool, PhaseError> {
        if self.escaped_at.is_some() {
            return Ok(true);
        }
        self.advance_to(t);
        if self.linear {
            self.beta_lin += self.coeff[channel] / self.net.omega();
        }
        let inv = 1.0 / self.net.omega();
        for &(i, d) in self.net.changes(channel) {
            self.counts[i] = self.counts[i].wrapping_add_signed(d);
            self.x[i] = self.counts[i] as f64 * inv;
        }
        let sol = self.ev.solve(&self.x, self.beta_var, &self.cfg)?;
        self.beta_var = sol.beta;
        self.normw = sol.normw;
        self.curvature = sol.curvature;
        self.minima_count = sol.minima_count;
        if self.normw >= self.eta {
            self.exit(ExitReason::Amplitude);
            return Ok(true);
        }
        self.refresh_linear();
        Ok(self.escaped_at.is_some())
    }

    pub fn mode(&self) -> CompensatorMode {
        self.mode
    }
}

/// Lowest Euclidean distance grid phase; a starting guess for states near
/// the orbit.
pub fn initial_phase_guess(fd: &FloquetData, x: &[f64]) -> f64 {
    let lc = fd.limit_cycle();
    let n = lc.grid().len();
    (0..n)
        .map(|g| {
            let (phi, _, _) = lc.node(g);
            let d: f64 = phi.iter().zip(x).map(|(p, v)| (p - v).powi(2)).sum();
            (d, g)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, g)| lc.grid().node(g))
        .unwrap_or(0.0)
}

/// Replay a recorded trajectory through a [`PhaseTracker`].
pub fn track_phase(
    net: &ReactionNetwork,
    traj: &JumpTrajectory,
    fd: &FloquetData,
    prc: Option<&PhaseResponseCurve>,
    cfg: &VariationalConfig,
    mode: CompensatorMode,
) -> Result<PhaseTrace, PhaseError> {
    let n0 = traj.initial_counts();
    let x0: Vec<f64> = n0.iter().map(|&v| v as f64 / net.omega()).collect();
    let guess = interp::wrap(initial_phase_guess(fd, &x0));
    let mut tr = PhaseTracker::new(net, fd, prc, cfg, Some(mode), PropensityForm::MassAction, n0, 0.0, guess)?;
    let mut records = vec![tr.record()];
    if tr.escaped_at().is_none() {
        for (t, a) in traj.events() {
            let escaped = tr.on_event(t, a)?;
            records.push(tr.record());
            if escaped {
                break;
            }
        }
    }
    if tr.escaped_at().is_none() && traj.t_end() > tr.time() {
        tr.advance_to(traj.t_end());
        records.push(tr.record());
    }
    Ok(PhaseTrace {
        records,
        escaped_at: tr.escaped_at(),
        exit_reason: tr.exit_reason(),
        eta: tr.eta(),
        omega0: fd.limit_cycle().omega0(),
        anchor: fd.limit_cycle().anchor().to_vec(),
        mode,
    })
}
