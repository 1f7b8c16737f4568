//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] (file, then flags), writes its
//! artifacts with a [`Metadata`] header and runs parallel work inside a
//! rayon pool of `--workers` threads.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_config, ConfigError, RunConfig};
use crate::deterministic::LimitCycle;
use crate::experiments::{self, escape_probability, fit_scaling, oscillator_benchmark, BenchmarkNoise, EscapeOptions, Oscillator};
use crate::io::{write_csv, write_json, Cell, Metadata};
use crate::model::{PropensityForm, ReactionNetwork};
use crate::phase::{initial_phase_guess, CompensatorMode, PhaseTracker};
use crate::stochastic::{cle_simulate, DirectSimulator, Engine, JumpSimulator, TimeChangeSimulator};
use crate::{interp, Error, Result};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CRN_PHASE_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "crn-phase", version, about = "Phase reduction of stochastic reaction network oscillators")]
pub struct Cli {
    /// TOML run configuration; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or directory for multi-file commands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample path of the jump process or the Langevin equation.
    Simulate(SimulateArgs),
    /// Limit cycle samples on the phase grid.
    LimitCycle(ModelArgs),
    /// Floquet exponents, monodromy and the periodic basis.
    Floquet(ModelArgs),
    /// Phase response curve on the phase grid.
    Prc(ModelArgs),
    /// Variational and linear phase along one jump trajectory.
    Phase(PhaseArgs),
    /// Escape probabilities over an omega/zeta grid and their scaling fit.
    Escape(EscapeArgs),
    /// Reference runs.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Reaction DSL file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub omega: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Output spacing; every event or step when absent.
    #[arg(long)]
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Direct,
    TimeChange,
    Cle,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Direct => Engine::Direct,
            EngineArg::TimeChange => Engine::TimeChange,
            EngineArg::Cle => Engine::Cle,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Tube radius in the weighted norm.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Record only at this spacing instead of at every event.
    #[arg(long)]
    pub sample_dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EscapeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub omega_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub zeta_list: Option<Vec<f64>>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(value_enum)]
    pub name: BenchmarkName,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Replace the jump process by the deterministic flow.
    #[arg(long)]
    pub noise_off: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkName {
    Brusselator,
}

impl Cli {
    /// Configuration file entries with the flags applied on top.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        let model = |cfg: &mut RunConfig, m: &ModelArgs| {
            if let Some(p) = &m.model {
                cfg.model = Some(p.clone());
            }
            if let Some(o) = m.omega {
                cfg.omega = o;
            }
        };
        match &self.command {
            Command::Simulate(a) => {
                model(&mut cfg, &a.model);
                cfg.t_end = a.t_end.or(cfg.t_end);
                cfg.sample_dt = a.sample_dt.or(cfg.sample_dt);
                if let Some(e) = a.engine {
                    cfg.engine = e.into();
                }
            }
            Command::LimitCycle(m) | Command::Floquet(m) | Command::Prc(m) => model(&mut cfg, m),
            Command::Phase(a) => {
                model(&mut cfg, &a.model);
                cfg.t_end = a.t_end.or(cfg.t_end);
                cfg.sample_dt = a.sample_dt.or(cfg.sample_dt);
                cfg.phase.eta = a.eta.or(cfg.phase.eta);
            }
            Command::Escape(a) => {
                if let Some(p) = &a.model {
                    cfg.model = Some(p.clone());
                }
                if let Some(v) = &a.omega_list {
                    cfg.escape.omega_list = v.clone();
                }
                if let Some(v) = &a.zeta_list {
                    cfg.escape.zeta_list = v.clone();
                }
                cfg.escape.horizon = a.horizon.or(cfg.escape.horizon);
                if let Some(r) = a.replicas {
                    cfg.escape.replicas = r;
                }
            }
            Command::Benchmark(a) => {
                cfg.model = None;
                if let Some(o) = a.omega {
                    cfg.omega = o;
                }
                cfg.t_end = a.t_end.or(cfg.t_end);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parse-free entry point: resolve the configuration and run the command.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve_config()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(ConfigError::Invalid("--workers must be positive".into()).into());
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| std::io::Error::other(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<()> {
    match cmd {
        Command::Simulate(_) => simulate(cfg),
        Command::LimitCycle(_) => limit_cycle(cfg),
        Command::Floquet(_) => floquet(cfg),
        Command::Prc(_) => prc(cfg),
        Command::Phase(_) => phase(cfg),
        Command::Escape(_) => escape(cfg),
        Command::Benchmark(a) => benchmark(cfg, a),
    }
}

/// `out` itself when it names a file, else `out/<default_name>`.
fn file_target(out: &Path, default_name: &str) -> Result<PathBuf> {
    if out.extension().is_some() {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        Ok(out.to_path_buf())
    } else {
        std::fs::create_dir_all(out)?;
        Ok(out.join(default_name))
    }
}

fn dir_target(out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    Ok(out.to_path_buf())
}

fn oscillator(cfg: &RunConfig) -> Result<Oscillator> {
    let net = cfg.network()?;
    let seed = cfg.cycle_seed_for(&net);
    Ok(Oscillator::build(net, &seed, &cfg.cycle_options())?)
}

fn cycle_header(meta: Metadata, lc: &LimitCycle) -> Metadata {
    meta.with("period", lc.period())
        .with("omega0", lc.omega0())
        .with("return_residual", lc.return_residual())
        .with("anchor", fmt_vec(lc.anchor()))
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn species_header<'a>(first: &'a str, net: &'a ReactionNetwork, prefix: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(net.species().iter().map(|s| format!("{prefix}{s}")))
        .collect()
}

fn simulate(cfg: &RunConfig) -> Result<()> {
    let net = cfg.network()?;
    let cycle = {
        let seed = cfg.cycle_seed_for(&net);
        crate::deterministic::find_limit_cycle(&net, &seed, &cfg.cycle_options()).ok()
    };
    let x0 = match (&cfg.initial_state, &cycle) {
        (Some(x), _) => x.clone(),
        (None, Some(lc)) => lc.eval(0.0).0,
        (None, None) => cfg.cycle_seed_for(&net),
    };
    if x0.len() != net.num_species() {
        return Err(ConfigError::Invalid(format!("initial state has {} entries for {} species", x0.len(), net.num_species())).into());
    }
    let t_end = cfg.t_end.unwrap_or_else(|| cycle.as_ref().map_or(10.0, |lc| 5.0 * lc.period()));
    let mut times = Vec::new();
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut clipped = 0u64;
    let cle_step = cfg.cle_step.unwrap_or_else(|| cycle.as_ref().map_or(1e-3, |lc| lc.period() / 2000.0));
    match cfg.engine {
        Engine::Cle => {
            let path = cle_simulate(&net, &x0, t_end, cle_step, cfg.seed)?;
            clipped = path.clip_count;
            times = path.times;
            states = path.states;
        }
        engine => {
            let omega = net.omega();
            let n0: Vec<u64> = x0.iter().map(|v| (v * omega).round().max(0.0) as u64).collect();
            let conc = |n: &[u64]| n.iter().map(|&v| v as f64 / omega).collect::<Vec<_>>();
            let mut sim: Box<dyn JumpSimulator> = match engine {
                Engine::TimeChange => Box::new(TimeChangeSimulator::new(&net, &n0, PropensityForm::MassAction, cfg.seed, 0)?),
                _ => Box::new(DirectSimulator::new(&net, &n0, PropensityForm::MassAction, cfg.seed, 0)?),
            };
            times.push(0.0);
            states.push(conc(&n0));
            match cfg.sample_dt {
                None => {
                    while let Some((t, _)) = sim.next_event(t_end)? {
                        times.push(t);
                        states.push(conc(sim.counts()));
                    }
                }
                Some(dt) => {
                    let n = (t_end / dt + 1e-9).floor() as usize;
                    for i in 1..=n {
                        let t = i as f64 * dt;
                        while sim.next_event(t)?.is_some() {}
                        times.push(t);
                        states.push(conc(sim.counts()));
                    }
                }
            }
        }
    }
    if let (Some(dt), Engine::Cle) = (cfg.sample_dt, cfg.engine) {
        let (t2, s2) = thin(&times, &states, dt);
        times = t2;
        states = s2;
    }
    let target = file_target(&cfg.out, "simulate.csv")?;
    let mut meta = Metadata::new("simulate", cfg)?.with("t_end", t_end).with("species", net.species().join(" "));
    if cfg.engine == Engine::Cle {
        meta = meta.with("cle_step", cle_step).with("clip_count", clipped);
    }
    let header = species_header("t", &net, "");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = times
        .iter()
        .zip(&states)
        .map(|(&t, x)| std::iter::once(Cell::F(t)).chain(x.iter().map(|&v| Cell::F(v))).collect());
    write_csv(&target, &meta, &header, rows)
}

/// Last sample at or before each multiple of `dt`.
fn thin(times: &[f64], states: &[Vec<f64>], dt: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let Some(&t_end) = times.last() else {
        return (Vec::new(), Vec::new());
    };
    let n = (t_end / dt + 1e-9).floor() as usize;
    let mut out_t = Vec::with_capacity(n + 1);
    let mut out_s = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * dt;
        let idx = times.partition_point(|&s| s <= t + 1e-9 * dt).saturating_sub(1);
        out_t.push(t);
        out_s.push(states[idx].clone());
    }
    (out_t, out_s)
}

fn limit_cycle(cfg: &RunConfig) -> Result<()> {
    let net = cfg.network()?;
    let seed = cfg.cycle_seed_for(&net);
    let lc = crate::deterministic::find_limit_cycle(&net, &seed, &cfg.cycle_options())?;
    let target = file_target(&cfg.out, "limit_cycle.csv")?;
    let meta = cycle_header(Metadata::new("limit-cycle", cfg)?, &lc);
    let mut header = species_header("theta", &net, "");
    header.extend(net.species().iter().map(|s| format!("d{s}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let grid = lc.grid();
    let rows = (0..grid.len()).map(|g| {
        let (phi, dphi, _) = lc.node(g);
        std::iter::once(Cell::F(grid.node(g)))
            .chain(phi.iter().chain(dphi).map(|&v| Cell::F(v)))
            .collect()
    });
    write_csv(&target, &meta, &header, rows)
}

#[derive(Serialize)]
struct FloquetReport {
    period: f64,
    omega0: f64,
    exponents: Vec<f64>,
    multipliers: Vec<f64>,
    decay_rate: f64,
    monodromy: Vec<Vec<f64>>,
    periodicity_defect: f64,
    orbit_diameter: f64,
    /// `(theta, P row-major)` on the phase grid.
    basis: Vec<(f64, Vec<f64>)>,
}

fn floquet(cfg: &RunConfig) -> Result<()> {
    let net = cfg.network()?;
    let seed = cfg.cycle_seed_for(&net);
    let lc = crate::deterministic::find_limit_cycle(&net, &seed, &cfg.cycle_options())?;
    let fd = crate::floquet::floquet_decompose(&lc, &net)?;
    let rows = |m: &nalgebra::DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect::<Vec<Vec<f64>>>();
    let grid = fd.grid();
    let report = FloquetReport {
        period: lc.period(),
        omega0: lc.omega0(),
        exponents: fd.exponents().to_vec(),
        multipliers: fd.multipliers().to_vec(),
        decay_rate: fd.decay_rate(),
        monodromy: rows(fd.monodromy()),
        periodicity_defect: fd.periodicity_defect(),
        orbit_diameter: fd.orbit_diameter(),
        basis: (0..grid.len())
            .map(|g| (grid.node(g), rows(&fd.node_matrices(g).0).concat()))
            .collect(),
    };
    let target = file_target(&cfg.out, "floquet.json")?;
    write_json(&target, &cycle_header(Metadata::new("floquet", cfg)?, &lc), &report)
}

fn prc(cfg: &RunConfig) -> Result<()> {
    let osc = oscillator(cfg)?;
    let target = file_target(&cfg.out, "prc.csv")?;
    let meta = cycle_header(Metadata::new("prc", cfg)?, &osc.lc)
        .with("adjoint_gap", osc.prc.adjoint_gap())
        .with("adjoint_residual", osc.prc.adjoint_residual(&osc.lc, &osc.net));
    let header = species_header("theta", &osc.net, "R_");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let grid = osc.prc.grid();
    let rows = (0..grid.len()).map(|g| {
        std::iter::once(Cell::F(grid.node(g)))
            .chain(osc.prc.node(g).iter().map(|&v| Cell::F(v)))
            .collect()
    });
    write_csv(&target, &meta, &header, rows)
}

fn phase(cfg: &RunConfig) -> Result<()> {
    let osc = oscillator(cfg)?;
    let net = &osc.net;
    let omega0 = osc.lc.omega0();
    let t_end = cfg.t_end.unwrap_or(5.0 * osc.lc.period());
    let n0 = osc.counts_on_cycle(0.0);
    let x0: Vec<f64> = n0.iter().map(|&v| v as f64 / net.omega()).collect();
    let guess = interp::wrap(initial_phase_guess(&osc.fd, &x0));
    let mut sim = DirectSimulator::new(net, &n0, PropensityForm::MassAction, cfg.seed, 0)?;
    let mut tr = PhaseTracker::new(
        net,
        &osc.fd,
        Some(&osc.prc),
        &cfg.phase,
        Some(CompensatorMode::Trajectory),
        PropensityForm::MassAction,
        &n0,
        0.0,
        guess,
    )?;
    let row = |tr: &PhaseTracker<'_>| {
        let r = tr.record();
        vec![
            Cell::F(r.t),
            Cell::F(r.beta_var),
            Cell::F(r.beta_lin),
            Cell::F(r.beta_var - omega0 * r.t),
            Cell::F(r.beta_lin - omega0 * r.t),
            Cell::F(r.normw),
            Cell::F(r.curvature),
        ]
    };
    let mut rows = vec![row(&tr)];
    match cfg.sample_dt {
        None => {
            let mut exited = tr.escaped_at().is_some();
            while !exited {
                let Some((t, a)) = sim.next_event(t_end)? else { break };
                exited = tr.on_event(t, a)?;
                rows.push(row(&tr));
            }
            if !exited && t_end > tr.time() {
                tr.advance_to(t_end);
                rows.push(row(&tr));
            }
        }
        Some(dt) => {
            let n = (t_end / dt + 1e-9).floor() as usize;
            'grid: for i in 1..=n {
                let t = i as f64 * dt;
                while let Some((te, a)) = sim.next_event(t)? {
                    if tr.on_event(te, a)? {
                        rows.push(row(&tr));
                        break 'grid;
                    }
                }
                tr.advance_to(t);
                rows.push(row(&tr));
            }
        }
    }
    let target = file_target(&cfg.out, "phase.csv")?;
    let mut meta = cycle_header(Metadata::new("phase", cfg)?, &osc.lc)
        .with("t_end", t_end)
        .with("eta", tr.eta());
    if let Some(t) = tr.escaped_at() {
        meta = meta.with("escaped_at", t);
    }
    if let Some(reason) = tr.exit_reason() {
        meta = meta.with("exit_reason", format!("{reason:?}").to_lowercase());
    }
    write_csv(
        &target,
        &meta,
        &["t", "beta_var", "beta_lin", "beta_var_minus_w0t", "beta_lin_minus_w0t", "norm_w", "curvature"],
        rows,
    )
}

fn escape(cfg: &RunConfig) -> Result<()> {
    let osc = oscillator(cfg)?;
    let dir = dir_target(&cfg.out)?;
    let horizon = cfg.escape.horizon.unwrap_or(osc.lc.period());
    let opts = EscapeOptions {
        engine: if cfg.engine == Engine::Cle { Engine::Direct } else { cfg.engine },
        form: PropensityForm::MassAction,
        variational: cfg.phase,
    };
    let meta = cycle_header(Metadata::new("escape", cfg)?, &osc.lc)
        .with("horizon", horizon)
        .with("decay_rate", osc.fd.decay_rate());
    let mut points = Vec::new();
    for &omega in &cfg.escape.omega_list {
        for &zeta in &cfg.escape.zeta_list {
            let stats = escape_probability(&osc, omega, zeta, horizon, cfg.escape.replicas, cfg.seed, &opts)?;
            write_json(&dir.join(format!("escape_omega{omega}_zeta{zeta}.json")), &meta, &stats)?;
            points.push(stats);
        }
    }
    let rows = points.iter().map(|p| {
        vec![
            Cell::F(p.omega),
            Cell::F(p.zeta),
            Cell::F(p.horizon),
            Cell::U(p.replicas),
            Cell::U(p.escapes),
            Cell::F(p.p_hat),
            Cell::F(p.ci_lo),
            Cell::F(p.ci_hi),
        ]
    });
    write_csv(
        &dir.join("summary.csv"),
        &meta,
        &["omega", "zeta", "horizon", "replicas", "escapes", "p_hat", "ci_lo", "ci_hi"],
        rows,
    )?;
    match fit_scaling(&points, osc.fd.decay_rate()) {
        Ok(fit) => write_json(&dir.join("scaling.json"), &meta, &fit)?,
        Err(experiments::ExperimentError::InsufficientPoints { .. } | experiments::ExperimentError::InsufficientSpan { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn benchmark(cfg: &RunConfig, args: &BenchmarkArgs) -> Result<()> {
    let BenchmarkName::Brusselator = args.name;
    let osc = oscillator(cfg)?;
    let horizon = cfg.t_end.unwrap_or(5.0 * osc.lc.period());
    let noise = if args.noise_off { BenchmarkNoise::Off } else { BenchmarkNoise::Jump };
    let b = oscillator_benchmark(&osc, cfg.omega, horizon, cfg.samples_per_period, cfg.seed, noise, &cfg.phase)?;
    let dir = dir_target(&cfg.out)?;
    let mut meta = cycle_header(Metadata::new("benchmark", cfg)?, &osc.lc)
        .with("horizon", horizon)
        .with("eta", b.eta)
        .with("events", b.events)
        .with("noise", format!("{noise:?}").to_lowercase());
    if let Some(t) = b.escaped_at {
        meta = meta.with("escaped_at", t);
    }
    let species = species_header("t", &osc.net, "");
    let species: Vec<&str> = species.iter().map(String::as_str).collect();
    let traj_rows = b
        .times
        .iter()
        .zip(&b.states)
        .map(|(&t, x)| std::iter::once(Cell::F(t)).chain(x.iter().map(|&v| Cell::F(v))).collect());
    write_csv(&dir.join("trajectory.csv"), &meta, &species, traj_rows)?;
    let phase_rows = b.phase.iter().map(|r| {
        vec![
            Cell::F(r.t),
            Cell::F(r.beta_var),
            Cell::F(r.beta_lin),
            Cell::F(r.beta_var_minus_w0t),
            Cell::F(r.beta_lin_minus_w0t),
            Cell::F(r.norm_w),
            Cell::F(r.curvature),
        ]
    });
    write_csv(
        &dir.join("phase.csv"),
        &meta,
        &["t", "beta_var", "beta_lin", "beta_var_minus_w0t", "beta_lin_minus_w0t", "norm_w", "curvature"],
        phase_rows,
    )?;
    write_csv(
        &dir.join("portrait.csv"),
        &meta,
        &species[1..],
        b.states.iter().map(|x| x.iter().map(|&v| Cell::F(v)).collect()),
    )?;
    let grid = osc.lc.grid();
    let mut cycle_header_row = vec!["theta"];
    cycle_header_row.extend(&species[1..]);
    write_csv(
        &dir.join("cycle.csv"),
        &meta,
        &cycle_header_row,
        b.cycle
            .iter()
            .enumerate()
            .map(|(g, x)| std::iter::once(Cell::F(grid.node(g))).chain(x.iter().map(|&v| Cell::F(v))).collect()),
    )
}

/// Short machine-readable tag for an error, printed before its message.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Model(_) => "model",
        Error::Parse(_) => "parse",
        Error::Ode(_) => "ode",
        Error::Stochastic(_) => "stochastic",
        Error::Cycle(_) => "limit-cycle",
        Error::Floquet(_) => "floquet",
        Error::Phase(_) => "phase",
        Error::Experiment(_) => "experiment",
        Error::Config(_) => "config",
        Error::Json(_) => "json",
        Error::Io(_) => "io",
    }
}
