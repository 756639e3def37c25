//! Subcommand orchestration: build the solver from a config, run the
//! experiment, collect records.

use std::fs;
use std::path::Path;

use modelh::attractor::{
    choose_tau0, fractal_dimension, geometric_ladder, holder_continuity, pullback_attraction, AbsorbingBall,
    DiscreteProcess, HolderMode, Tau0Options,
};
use modelh::checkpoint::{self, CheckpointMeta};
use modelh::rng::{random_direction, random_state, SeedStream};
use modelh::solver::{calibrate_stabilization, write_csv, RunOptions};
use modelh::verifier::{
    continuous_dependence, dissipative_check, h1_continuous_dependence, higher_regularity_probe, smoothing_constant,
    time_regularity, DataSet, ExperimentKind, ExperimentRecord, FittedConstant, Verdict,
};
use modelh::{Error, Grid, Integrator, SolverParams, State};

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::Output;

/// Seed-stream job of the perturbation direction in dependence runs.
const DIRECTION_JOB: u64 = 1 << 32;
/// First seed-stream job of ball samples.
const BALL_JOB: u64 = 1 << 33;
/// Seed-stream job of the time-regularity datum.
const REGULARITY_JOB: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyKind {
    Dissipative,
    HigherRegularity,
    ContinuousDependence,
    H1ContinuousDependence,
    TimeRegularity,
    Smoothing,
}

/// Why a command did not produce records.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Runtime(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.into())
    }
}

type Outcome = Result<Vec<ExperimentRecord>, Failure>;

struct Setup {
    grid: Grid,
    it: Integrator,
    seeds: SeedStream,
    data: Vec<State>,
}

impl Setup {
    /// Solver and initial data; unless fixed, `S` is calibrated on the data and `extra`.
    fn new(cfg: &ExperimentConfig, extra: &[State]) -> Result<Self, Failure> {
        let grid = cfg.grid()?;
        let seeds = SeedStream::new(cfg.seed);
        let data = random_data(cfg, &grid, &seeds, cfg.data.size, cfg.data.first_job)?.states;
        let pot = cfg.build_potential()?;
        let p = &cfg.params;
        let stabilization = match p.stabilization {
            Some(s) => s,
            None => data.iter().chain(extra).try_fold(0.0_f64, |m, z| {
                calibrate_stabilization(z, &pot, p.stabilization_margin).map(|s| m.max(s))
            })?,
        };
        let params = SolverParams {
            viscosity: p.viscosity,
            mobility: p.mobility,
            epsilon: p.epsilon,
            dt: p.dt,
            stabilization,
            max_energy_violation: p.max_energy_violation,
        };
        let it = Integrator::new(params, pot, cfg.build_forcing()?).map_err(|e| ConfigError::new("params", e))?;
        Ok(Self { grid, it, seeds, data })
    }

    fn meta(&self) -> CheckpointMeta {
        CheckpointMeta {
            params: Some(*self.it.params()),
            potential: Some(self.it.potential().coefficients().to_vec()),
        }
    }
}

fn random_data(cfg: &ExperimentConfig, grid: &Grid, seeds: &SeedStream, size: f64, first_job: u64) -> Result<DataSet, Failure> {
    let d = &cfg.data;
    let mut magnitude = d.magnitude();
    match &mut magnitude {
        modelh::rng::Magnitude::H0(a) | modelh::rng::Magnitude::Sup(a) => *a = size,
    }
    let mut set = DataSet::random(grid, magnitude, d.count, d.max_mode, seeds, first_job)?;
    for z in &mut set.states {
        z.time = d.start_time;
    }
    Ok(set)
}

pub fn simulate(cfg: &ExperimentConfig, out: &Output) -> Outcome {
    let s = &cfg.simulate;
    let initial = if s.initial == "random" {
        None
    } else {
        let (states, _) = checkpoint::load(Path::new(&s.initial))
            .map_err(|e| ConfigError::new("simulate.initial", e))?;
        let z = states.into_iter().next().ok_or_else(|| ConfigError::new("simulate.initial", "empty checkpoint"))?;
        cfg.grid()?
            .same_as(z.grid())
            .map_err(|e| ConfigError::new("simulate.initial", e))?;
        Some(z)
    };
    let setup = Setup::new(cfg, initial.as_slice())?;
    let z0 = initial.unwrap_or_else(|| setup.data[0].clone());
    let it = &setup.it;
    let dt = it.dt();
    let meta = setup.meta();
    let ckpt_dir = out.dir().join("checkpoints");
    fs::create_dir_all(&ckpt_dir)?;
    let mut io_error = None;
    let run = it.run(&z0, z0.time + s.t_end, RunOptions { observe_every: s.observe_every }, |z, r| {
        let step = ((r.t - z0.time) / dt).round() as usize;
        if s.checkpoint_every > 0 && step % s.checkpoint_every == 0 && io_error.is_none() {
            let path = ckpt_dir.join(format!("state-{step:08}.ckpt"));
            if let Err(e) = checkpoint::save(&path, std::slice::from_ref(z), &meta) {
                io_error = Some(e);
            }
        }
    });
    let tr = match run {
        Ok(tr) => tr,
        Err(Error::BlowUp { time, quantity, value, last_state }) => {
            checkpoint::save(&out.dir().join("blowup.ckpt"), std::slice::from_ref(&*last_state), &meta)?;
            return Err(Failure::Runtime(Error::BlowUp { time, quantity, value, last_state }));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let mut csv = Vec::new();
    write_csv(&mut csv, &tr.reports)?;
    out.write("trajectory.csv", &csv)?;
    checkpoint::save(&ckpt_dir.join("final.ckpt"), std::slice::from_ref(&tr.final_state), &meta)?;

    let mut rec = ExperimentRecord::new(ExperimentKind::Simulate);
    let window = (tr.reports[0].t, tr.reports.last().map_or(0.0, |r| r.t));
    let n = tr.reports.len();
    let m0 = tr.reports[0].mass;
    let drift = tr.reports.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max);
    let momentum = tr.reports.iter().map(|r| r.momentum_x.abs().max(r.momentum_y.abs())).fold(0.0, f64::max);
    let alpha = it.potential().alpha();
    let eps = it.params().epsilon;
    let slack_violation = tr
        .reports
        .iter()
        .map(|r| -r.laplacian_inequality_slack(alpha, eps) / (eps * r.lap_psi_l2.powi(2)).max(1.0))
        .fold(f64::NEG_INFINITY, f64::max);
    rec.constants.push(FittedConstant::measured("mass_drift", drift, n, window));
    rec.constants.push(FittedConstant::measured("max_momentum", momentum, n, window));
    rec.constants.push(FittedConstant::measured("max_relative_laplacian_violation", slack_violation, n, window));
    rec.verdicts.push(Verdict::at_most("mass-conservation", drift, 1e-12 * m0.abs().max(1.0)));
    rec.verdicts.push(Verdict::at_most("zero-momentum", momentum, 1e-12));
    rec.verdicts.push(Verdict::at_most("laplacian-inequality", slack_violation, 1e-10));
    if it.forcing().is_zero() {
        let rise = tr.reports.windows(2).map(|w| w[1].total - w[0].total).fold(f64::NEG_INFINITY, f64::max);
        let tol = it.params().max_energy_violation * s.observe_every as f64;
        rec.constants.push(FittedConstant::measured("max_energy_increase", rise, n, window));
        rec.verdicts.push(Verdict::at_most("energy-nonincreasing", rise, tol));
    } else {
        let r = tr.reports[1..].iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        rec.constants.push(FittedConstant::measured("max_abs_residual", r, n.saturating_sub(1), window));
    }
    rec.notes.push(format!("stabilization S = {:e}", it.params().stabilization));
    Ok(vec![rec])
}

pub fn verify(cfg: &ExperimentConfig, kind: VerifyKind) -> Outcome {
    let setup = Setup::new(cfg, &[])?;
    let k = &cfg.experiment;
    let it = &setup.it;
    match kind {
        VerifyKind::Dissipative | VerifyKind::HigherRegularity => {
            let large_job = cfg.data.first_job + cfg.data.count as u64;
            let sets = [
                random_data(cfg, &setup.grid, &setup.seeds, cfg.data.size, cfg.data.first_job)?,
                random_data(cfg, &setup.grid, &setup.seeds, cfg.data.size * k.large_factor, large_job)?,
            ];
            let s = match cfg.params.stabilization {
                Some(s) => s,
                None => calibrate_all(&sets[1].states, it, cfg.params.stabilization_margin)?.max(it.params().stabilization),
            };
            let it = it.with_stabilization(s);
            let rec = if kind == VerifyKind::Dissipative {
                dissipative_check(&it, &sets, k.horizon, k.observe_every)?
            } else {
                higher_regularity_probe(&it, &sets, k.horizon, k.observe_every)?
            };
            Ok(vec![rec])
        }
        VerifyKind::ContinuousDependence | VerifyKind::H1ContinuousDependence => {
            let z1 = &setup.data[0];
            let dir = random_direction(&setup.grid, cfg.data.max_mode, &mut setup.seeds.job(DIRECTION_JOB))?;
            let z2 = z1.perturbed(&dir, k.perturbation);
            let other = (k.symbol_perturbation > 0.0).then(|| it.forcing().scaled(1.0 + k.symbol_perturbation));
            let f = if kind == VerifyKind::ContinuousDependence { continuous_dependence } else { h1_continuous_dependence };
            Ok(vec![f(it, z1, &z2, other.as_ref(), k.dependence_horizon, k.observe_every)?])
        }
        VerifyKind::TimeRegularity => {
            let gaps = dt_gaps(it.dt(), (0..k.gap_count).map(|j| 2f64.powi(-k.gap_start - j as i32)));
            if gaps.len() < 3 {
                return Err(ConfigError::new("experiment.gap_start", "fewer than 3 distinct gaps remain at this dt").into());
            }
            let mut z0 =
                random_state(&setup.grid, cfg.data.magnitude(), k.regularity_max_mode, &mut setup.seeds.job(REGULARITY_JOB))?;
            z0.time = cfg.data.start_time;
            Ok(vec![time_regularity(it, &z0, &gaps)?])
        }
        VerifyKind::Smoothing => {
            let (ball, mut recs) = ball_and_tau0(cfg, &setup)?;
            let samples = ball.sample_states(cfg, &setup, k.ball_samples)?;
            let mut gain = dt_gaps(it.dt(), (0..6).rev().map(|j| 0.02 * 2f64.powi(j)));
            gain.reverse();
            recs.push(smoothing_constant(it, &samples, ball.tau0, k.smoothing_pairs, &gain)?);
            Ok(recs)
        }
    }
}

fn calibrate_all(states: &[State], it: &Integrator, margin: f64) -> modelh::Result<f64> {
    states
        .iter()
        .try_fold(0.0_f64, |m, z| calibrate_stabilization(z, it.potential(), margin).map(|s| m.max(s)))
}

/// Rounds each gap to a positive multiple of `dt`, keeping a strictly
/// decreasing sequence.
fn dt_gaps(dt: f64, gaps: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for g in gaps {
        let v = (g / dt).round().max(1.0) * dt;
        if out.last().is_none_or(|&l| v < l) {
            out.push(v);
        }
    }
    out
}

struct Ball {
    tau0: f64,
    ball: AbsorbingBall,
}

impl Ball {
    fn sample_states(&self, cfg: &ExperimentConfig, setup: &Setup, count: usize) -> modelh::Result<Vec<State>> {
        self.ball
            .sample(&setup.it, &setup.grid, count, cfg.data.max_mode, &setup.seeds, BALL_JOB, cfg.data.start_time)
    }
}

fn ball_and_tau0(cfg: &ExperimentConfig, setup: &Setup) -> Result<(Ball, Vec<ExperimentRecord>), Failure> {
    let k = &cfg.experiment;
    let opts = Tau0Options {
        horizon: k.tau0_horizon,
        observe_every: k.observe_every,
        max_iterations: k.tau0_iterations,
        probes: k.tau0_probes,
        delta: k.tau0_delta,
    };
    let (chosen, ball, mut rec) = choose_tau0(&setup.it, &setup.data, &setup.seeds, opts)?;
    let tau0 = match k.tau0 {
        Some(t) => {
            rec.notes.push(format!("tau0 fixed by config at {t}; chosen value {chosen} not used"));
            t
        }
        None => chosen,
    };
    Ok((Ball { tau0, ball }, vec![rec]))
}

fn process(cfg: &ExperimentConfig, setup: &Setup, tau0: f64) -> modelh::Result<DiscreteProcess> {
    DiscreteProcess::new(setup.it.clone(), tau0, cfg.data.start_time)
}

pub fn pullback(cfg: &ExperimentConfig) -> Outcome {
    let setup = Setup::new(cfg, &[])?;
    let k = &cfg.experiment;
    let (ball, mut recs) = ball_and_tau0(cfg, &setup)?;
    let p = process(cfg, &setup, ball.tau0)?;
    let samples = ball.sample_states(cfg, &setup, k.ball_samples)?;
    let ladder: Vec<usize> = (1..=k.pullback_ladder).collect();
    recs.push(pullback_attraction(&p, &samples, &ladder, k.pullback_depth)?);
    Ok(recs)
}

pub fn dimension(cfg: &ExperimentConfig, out: &Output) -> Outcome {
    let setup = Setup::new(cfg, &[])?;
    let k = &cfg.experiment;
    let (ball, mut recs) = ball_and_tau0(cfg, &setup)?;
    let p = process(cfg, &setup, ball.tau0)?;
    let samples = ball.sample_states(cfg, &setup, k.cloud_size)?;
    let pulled = p.apply_all(0, -(k.pullback_depth as i64), &samples)?;
    checkpoint::save(&out.dir().join("cloud.ckpt"), &pulled, &setup.meta())?;
    let cloud: Vec<Vec<f64>> = pulled.iter().map(|z| z.v_coordinates(k.coordinates)).collect();
    let est = fractal_dimension(&cloud, &geometric_ladder(k.eps_max, k.eps_min, k.eps_rungs))?;
    let mut rec = est.to_record();
    if k.cloud_size < 1000 {
        rec.notes.push(format!("cloud of {} points is below 1000; slopes may be unreliable", k.cloud_size));
    }
    recs.push(rec);
    Ok(recs)
}

pub fn holder(cfg: &ExperimentConfig) -> Outcome {
    let setup = Setup::new(cfg, &[])?;
    let k = &cfg.experiment;
    let (ball, mut recs) = ball_and_tau0(cfg, &setup)?;
    let dt = setup.it.dt();
    let samples = ball.sample_states(cfg, &setup, k.holder_samples)?;
    let ladder = dt_gaps(dt, (0..k.holder_rungs).map(|j| 2f64.powi(-(j as i32))));
    if ladder.len() < 3 {
        return Err(ConfigError::new("experiment.holder_rungs", "fewer than 3 distinct s values remain at this dt").into());
    }
    let r = (ball.tau0 / dt).round() * dt;
    for mode in [HolderMode::H1Prime, HolderMode::H3Prime] {
        recs.push(holder_continuity(&setup.it, &samples, &ladder, r, cfg.data.start_time, mode, k.q)?);
    }
    Ok(recs)
}

pub fn validate_potential(cfg: &ExperimentConfig, out: &Output) -> Outcome {
    let pot = cfg.build_potential()?;
    let k = &cfg.experiment;
    let report = pot.certify(k.certify_radius, k.certify_samples)?;
    out.write("certification.toml", toml::to_string(&report).expect("report serializes").as_bytes())?;
    let mut rec = ExperimentRecord::new(ExperimentKind::Potential);
    let w = (-k.certify_radius, k.certify_radius);
    let n = k.certify_samples;
    let s = &report.splitting;
    for (name, v) in [
        ("alpha", s.alpha),
        ("gamma", s.gamma),
        ("beta", s.beta),
        ("p", report.p as f64),
        ("q", report.q as f64),
        ("growth_constant", report.growth_constant),
        ("coercivity_constant", report.coercivity_constant),
    ] {
        rec.constants.push(FittedConstant::measured(name, v, n, w));
    }
    for c in &report.control {
        rec.constants.push(FittedConstant::measured(&format!("control_c{}", c.k), c.constant, n, w));
    }
    rec.verdicts.push(Verdict::at_most("hypotheses-certified", report.violations.len() as f64, 0.0));
    rec.notes.extend(report.violations.iter().cloned());
    Ok(vec![rec])
}
