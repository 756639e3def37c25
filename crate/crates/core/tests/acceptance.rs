//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach stdout.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use modelh::attractor::{
    choose_tau0, fractal_dimension, geometric_ladder, holder_continuity, holder_target, pullback_attraction,
    DiscreteProcess, HolderMode, Tau0Options,
};
use modelh::forcing::{ProfileMode, SinusoidComponent};
use modelh::rng::{random_direction, random_state, Magnitude, SeedStream};
use modelh::solver::{calibrate_stabilization, EnergyReport, RunOptions};
use modelh::state::DEFAULT_COORDINATES;
use modelh::verifier::{
    continuous_dependence, dissipative_check, h1_continuous_dependence, higher_regularity_probe, smoothing_constant,
    time_regularity, DataSet, ExperimentRecord,
};
use modelh::{
    ForcingSymbol, Grid, Integrator, PolynomialPotential, Result, Signal, SolverParams, SpectralScalar, SpectralVector,
    State,
};
use rand::Rng;

// criterion 1
const CONSERVATION_STEPS: usize = 10_000;
const MASS_DRIFT: f64 = 1e-13;
const MOMENTUM: f64 = 1e-12;
const CONSERVATION_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const LYAPUNOV_STEPS: usize = 10_000;
const ENERGY_SLACK: f64 = 1e-10;
// criterion 3
const RESIDUAL_DTS: [f64; 3] = [4e-3, 2e-3, 1e-3];
const HALVING_BAND: (f64, f64) = (0.4, 0.6);
// criterion 4
const TG_RELATIVE: f64 = 3.0; // times dt * t
const CH_GROWTH: f64 = 3.0;
const CH_RELATIVE: f64 = 0.05;
// criterion 6
const ABSORPTION_BUDGET: Duration = Duration::from_secs(300);
// criterion 9
const PULLBACK_BUDGET: Duration = Duration::from_secs(600);
const PULLBACK_R2: f64 = 0.9;
// criterion 10
const HOLDER_Q: f64 = 4.0;
const HOLDER_SLACK: f64 = 0.05;
// criterion 11
const SEGMENT_TOL: f64 = 0.15;
const TORUS_TOL: f64 = 0.25;

/// Attractor-lab regime: on the side-3 box the smallest wavenumber already
/// dominates the spinodal instability, so every datum relaxes to a unique
/// forced response.
const LAB_LENGTH: f64 = 3.0;
const LAB_VISCOSITY: f64 = 0.1;
const LAB_DT: f64 = 1.0 / 512.0;

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Default)]
struct Slack {
    checked: usize,
    violations: usize,
    worst: f64,
}

impl Slack {
    fn add(&mut self, slack: f64) {
        if self.checked == 0 || slack < self.worst {
            self.worst = slack;
        }
        self.checked += 1;
        if slack < 0.0 {
            self.violations += 1;
        }
    }

    fn add_reports(&mut self, it: &Integrator, reports: &[EnergyReport]) {
        let (a, e) = (it.potential().alpha(), it.params().epsilon);
        for r in reports {
            self.add(r.laplacian_inequality_slack(a, e));
        }
    }
}

fn quasi_periodic() -> Signal {
    Signal::QuasiPeriodic {
        components: vec![
            SinusoidComponent { amplitude: 1.0, omega: 1.0, phase: 0.0 },
            SinusoidComponent { amplitude: 0.7, omega: 2f64.sqrt(), phase: 0.5 },
        ],
    }
}

fn lab_symbol(grid: &Grid, signal: Signal) -> Result<ForcingSymbol> {
    let modes = [
        ProfileMode { jx: 1, jy: 0, amplitude: 1.0, phase: 0.0 },
        ProfileMode { jx: 0, jy: 1, amplitude: 1.0, phase: 1.0 },
        ProfileMode { jx: 1, jy: 1, amplitude: 0.5, phase: 0.3 },
    ];
    ForcingSymbol::from_stream_modes(grid, &modes, Some(1.0), signal)
}

fn calibrated(data: &[State], pot: &PolynomialPotential) -> Result<f64> {
    data.iter()
        .map(|z| calibrate_stabilization(z, pot, 1.0))
        .try_fold(0.0_f64, |m, s| s.map(|s| m.max(s)))
}

fn verdicts(r: &ExperimentRecord, names: &[&str]) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in names {
        match r.verdict(n) {
            Some(v) => {
                ok &= v.passed;
                parts.push(format!("{n}={:.4e}{}", v.measured, if v.passed { "" } else { "(fail)" }));
            }
            None => {
                ok = false;
                parts.push(format!("{n}=missing"));
            }
        }
    }
    (ok, parts.join(" "))
}

fn constant(r: &ExperimentRecord, name: &str) -> f64 {
    r.constant(name).map_or(f64::NAN, |c| c.value)
}

fn conservation(slack: &mut Slack) -> Result<(bool, String)> {
    let start = Instant::now();
    let g = Grid::new(64, 2.0 * PI)?;
    let pot = PolynomialPotential::canonical(1)?;
    let shift = State::new(SpectralVector::zeros(&g), SpectralScalar::constant(&g, 0.2), 0.0)?;
    let z0 = random_state(&g, Magnitude::H0(1.0), 6, &mut SeedStream::new(1).job(0))?.perturbed(&shift, 1.0);
    let dt = 1e-3;
    let params = SolverParams { dt, stabilization: calibrate_stabilization(&z0, &pot, 1.0)?, ..Default::default() };
    let it = Integrator::new(params, pot, lab_symbol(&g, quasi_periodic())?)?;
    let mean0 = z0.order_parameter.mean();
    let (mut drift, mut momentum) = (0.0_f64, 0.0_f64);
    let tr = it.run(&z0, CONSERVATION_STEPS as f64 * dt, RunOptions { observe_every: 10 }, |z, r| {
        drift = drift.max((z.order_parameter.mean() - mean0).abs());
        momentum = momentum.max(r.momentum_x.abs()).max(r.momentum_y.abs());
    })?;
    slack.add_reports(&it, &tr.reports);
    let elapsed = start.elapsed();
    Ok((
        drift <= MASS_DRIFT && momentum <= MOMENTUM && elapsed <= CONSERVATION_BUDGET,
        format!("mean drift {drift:.2e} momentum {momentum:.2e} runtime {:.1}s", elapsed.as_secs_f64()),
    ))
}

fn lyapunov_decay(slack: &mut Slack) -> Result<(bool, String)> {
    let g = Grid::new(32, 2.0 * PI)?;
    let pot = PolynomialPotential::canonical(1)?;
    let z0 = random_state(&g, Magnitude::Sup(1.0), 4, &mut SeedStream::new(1).job(0))?;
    let dt = 1e-3;
    let params = SolverParams {
        dt,
        stabilization: calibrate_stabilization(&z0, &pot, 1.0)?,
        // the stepper's own guard would abort; count increases here instead
        max_energy_violation: f64::INFINITY,
        ..Default::default()
    };
    let it = Integrator::new(params, pot, ForcingSymbol::zero(&g))?;
    let tr = it.run(&z0, LYAPUNOV_STEPS as f64 * dt, RunOptions::default(), |_, _| {})?;
    let worst = tr.reports.windows(2).map(|w| w[1].total - w[0].total).fold(f64::NEG_INFINITY, f64::max);
    slack.add_reports(&it, &tr.reports);
    Ok((
        worst <= ENERGY_SLACK,
        format!(
            "{} steps, max E increase {worst:.2e}, E {:.4} -> {:.4}",
            tr.reports.len() - 1,
            tr.reports[0].total,
            tr.reports.last().unwrap().total
        ),
    ))
}

fn residual_convergence(slack: &mut Slack) -> Result<(bool, String)> {
    let g = Grid::new(32, 2.0 * PI)?;
    let pot = PolynomialPotential::canonical(1)?;
    let z0 = random_state(&g, Magnitude::H0(1.0), 2, &mut SeedStream::new(2).job(0))?;
    let s = calibrate_stabilization(&z0, &pot, 1.0)?;
    let f = lab_symbol(&g, quasi_periodic())?;
    let mut maxima = Vec::new();
    for dt in RESIDUAL_DTS {
        let it = Integrator::new(SolverParams { dt, stabilization: s, ..Default::default() }, pot.clone(), f.clone())?;
        let tr = it.run(&z0, 1.0, RunOptions::default(), |_, _| {})?;
        slack.add_reports(&it, &tr.reports);
        maxima.push(tr.reports[1..].iter().map(|r| r.residual.abs()).fold(0.0, f64::max));
    }
    let ratios: Vec<f64> = maxima.windows(2).map(|w| w[1] / w[0]).collect();
    let ok = ratios.iter().all(|r| (HALVING_BAND.0..=HALVING_BAND.1).contains(r));
    Ok((ok, format!("max|r| {:?}, ratios {:?}", sci(&maxima), fixed(&ratios))))
}

fn exact_oracles(slack: &mut Slack) -> Result<(bool, String)> {
    let g = Grid::new(32, 2.0 * PI)?;
    let pot = PolynomialPotential::canonical(1)?;
    let (nu, dt) = (1.0, 1e-3);
    let ux = SpectralScalar::from_fn(&g, |x, y| x.sin() * y.cos())?;
    let uy = SpectralScalar::from_fn(&g, |x, y| -x.cos() * y.sin())?;
    let tg = State::new(SpectralVector::new(ux, uy)?, SpectralScalar::zeros(&g), 0.0)?;
    let it = Integrator::new(
        SolverParams { viscosity: nu, dt, stabilization: 2.0, ..Default::default() },
        pot.clone(),
        ForcingSymbol::zero(&g),
    )?;
    let u0 = tg.velocity.l2_sq().sqrt();
    let tr = it.run(&tg, 2.0, RunOptions { observe_every: 50 }, |_, _| {})?;
    slack.add_reports(&it, &tr.reports);
    let worst_tg = tr.reports[1..]
        .iter()
        .map(|r| {
            let exact = (-2.0 * nu * r.t).exp();
            (((2.0 * r.kinetic).sqrt() / u0 - exact) / exact).abs() / (TG_RELATIVE * dt * r.t)
        })
        .fold(0.0, f64::max);

    let a = 1e-6;
    let ch = State::new(SpectralVector::zeros(&g), SpectralScalar::from_fn(&g, |x, _| a * x.sin())?, 0.0)?;
    let s = calibrate_stabilization(&ch, &pot, 1.0)?;
    let it = Integrator::new(SolverParams { dt, stabilization: s, ..Default::default() }, pot, ForcingSymbol::zero(&g))?;
    let amp = |z: &State| z.order_parameter.coeff(1, 0).map_or(0.0, |c| c.norm());
    let sigma = (amp(&it.step(&ch)?) / amp(&ch) - 1.0) / dt;
    let ch_err = (sigma - CH_GROWTH).abs() / CH_GROWTH;
    Ok((
        worst_tg <= 1.0 && ch_err <= CH_RELATIVE,
        format!("TG error / (3 dt t) max {worst_tg:.3}; CH sigma {sigma:.4} (rel err {ch_err:.2e})"),
    ))
}

struct Lab {
    it: Integrator,
    grid: Grid,
    seeds: SeedStream,
    data: Vec<State>,
}

fn lab(n: usize, dt: f64, signal: Signal) -> Result<Lab> {
    let grid = Grid::new(n, LAB_LENGTH)?;
    let pot = PolynomialPotential::canonical(1)?;
    let seeds = SeedStream::new(5);
    let data = DataSet::random(&grid, Magnitude::H0(10.0), 2, 4, &seeds, 0)?.states;
    let s = calibrated(&data, &pot)?;
    let it = Integrator::new(
        SolverParams { viscosity: LAB_VISCOSITY, dt, stabilization: s, ..Default::default() },
        pot,
        lab_symbol(&grid, signal)?,
    )?;
    Ok(Lab { it, grid, seeds, data })
}

fn absorption(lab: &Lab, slack: &mut Slack) -> Result<(bool, String)> {
    let start = Instant::now();
    let sets = [
        DataSet::random(&lab.grid, Magnitude::H0(1.0), 2, 4, &lab.seeds, 10)?,
        DataSet::random(&lab.grid, Magnitude::H0(10.0), 2, 4, &lab.seeds, 20)?,
    ];
    let horizon = 40.0;
    let every = 16;
    let d = dissipative_check(&lab.it, &sets, horizon, every)?;
    let h = higher_regularity_probe(&lab.it, &sets, horizon, every)?;
    let (ok_d, msg_d) = verdicts(&d, &["common-ball", "kappa-positive"]);
    let (ok_h, msg_h) = verdicts(
        &h,
        &["horizon-covers-entry", "tail-sup-agreement", "tail-integrals-finite", "laplacian-inequality"],
    );
    for s in &h.series {
        if let Some(col) = s.column("laplacian_slack") {
            col.into_iter().for_each(|v| slack.add(v));
        }
    }
    let elapsed = start.elapsed();
    Ok((
        ok_d && ok_h && elapsed <= ABSORPTION_BUDGET,
        format!(
            "{msg_d} {msg_h} entry D1 {:.2} D10 {:.2} runtime {:.0}s",
            constant(&d, "entry_time[D1]"),
            constant(&d, "entry_time[D10]"),
            elapsed.as_secs_f64()
        ),
    ))
}

struct Ball {
    tau0: f64,
    samples: Vec<State>,
}

fn lab_ball(lab: &Lab, count: usize) -> Result<Ball> {
    let mut data = lab.data.clone();
    for z in &mut data {
        z.time = 0.0;
    }
    let (tau0, ball, _) = choose_tau0(&lab.it, &data, &lab.seeds, Tau0Options::default())?;
    let samples = ball.sample(&lab.it, &lab.grid, count, 4, &lab.seeds, 100, 0.0)?;
    Ok(Ball { tau0, samples })
}

fn continuous_dependence_check(lab: &Lab, ball: &Ball) -> Result<(bool, String)> {
    let z1 = &ball.samples[1];
    let dir = random_direction(&lab.grid, 4, &mut lab.seeds.job(999))?;
    let z2 = z1.perturbed(&dir, 1e-6);
    let same = continuous_dependence(&lab.it, z1, z1, None, 2.0, 64)?;
    let h0 = continuous_dependence(&lab.it, z1, &z2, None, 10.0, 64)?;
    let v = h1_continuous_dependence(&lab.it, z1, &z2, None, 10.0, 64)?;
    let (a, ma) = verdicts(&same, &["uniqueness"]);
    let (b, mb) = verdicts(&h0, &["Lambda-finite", "linear-scaling"]);
    let (c, mc) = verdicts(&v, &["Lambda-finite", "linear-scaling"]);
    Ok((a && b && c, format!("{ma} | H0 {mb} | V {mc}")))
}

fn smoothing_check(lab: &Lab, ball: &Ball) -> Result<(bool, String)> {
    let smooth = random_state(&lab.grid, Magnitude::H0(1.0), 1, &mut lab.seeds.job(77))?;
    let gaps: Vec<f64> = (0..6).map(|j| 2f64.powi(-4 - j)).collect();
    let t = time_regularity(&lab.it, &smooth, &gaps)?;
    let dt = lab.it.dt();
    let gain_gaps: Vec<f64> = (0..6).map(|j| (0.02 * 2f64.powi(j) / dt).round() * dt).collect();
    let s = smoothing_constant(&lab.it, &ball.samples, ball.tau0, 4, &gain_gaps)?;
    let (a, ma) = verdicts(&t, &["holder-exponent", "halving-reduces"]);
    let (b, mb) = verdicts(&s, &["K-finite", "K-stable-under-doubling", "gain-exponent"]);
    Ok((a && b, format!("{ma} {mb} K={:.4e}", constant(&s, "K"))))
}

fn holder_check(lab: &Lab, ball: &Ball) -> Result<(bool, String)> {
    let dt = lab.it.dt();
    let ladder: Vec<f64> = (0..7).map(|j| 2f64.powi(-j)).collect();
    let r = (ball.tau0 / dt).round() * dt;
    let target = holder_target(HOLDER_Q) - HOLDER_SLACK;
    let mut ok = true;
    let mut parts = vec![format!("target {target:.4}")];
    for mode in [HolderMode::H1Prime, HolderMode::H3Prime] {
        let rec = holder_continuity(&lab.it, &ball.samples[..4], &ladder, r, 0.0, mode, HOLDER_Q)?;
        let gamma = constant(&rec, "gamma");
        ok &= rec.passed() && gamma >= target;
        parts.push(format!("{mode:?} gamma {gamma:.4}"));
    }
    Ok((ok, parts.join(" ")))
}

fn pullback() -> Result<(bool, String)> {
    let start = Instant::now();
    let past = Signal::PastDecaying { base: Box::new(quasi_periodic()), rate: 0.5, switch_time: 0.0 };
    let lab = lab(16, 5e-3, past)?;
    let mut data = lab.data.clone();
    for z in &mut data {
        z.time = 0.0;
    }
    let opts = Tau0Options { max_iterations: 3, ..Tau0Options::default() };
    let (tau0, ball, _) = choose_tau0(&lab.it, &data, &lab.seeds, opts)?;
    let p = DiscreteProcess::new(lab.it.clone(), tau0, 0.0)?;
    let samples = ball.sample(&lab.it, &lab.grid, 6, 4, &lab.seeds, 100, 0.0)?;
    let ladder: Vec<usize> = (1..=8).collect();
    let rec = pullback_attraction(&p, &samples, &ladder, 16)?;
    let alpha = constant(&rec, "alpha");
    let r2 = rec.constant("alpha").and_then(|c| c.r_squared).unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    Ok((
        alpha > 0.0 && r2 >= PULLBACK_R2 && rec.passed() && elapsed <= PULLBACK_BUDGET,
        format!("tau0 {tau0:.3} alpha {alpha:.4} R2 {r2:.5} runtime {:.0}s", elapsed.as_secs_f64()),
    ))
}

fn dimension() -> Result<(bool, String)> {
    let mut rng = SeedStream::new(21).job(0);
    let segment: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let t: f64 = rng.random();
            (0..DEFAULT_COORDINATES).map(|j| t * ((j as f64) + 1.0).sqrt()).collect()
        })
        .collect();
    let torus: Vec<Vec<f64>> = (0..20000)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
            vec![a.cos(), a.sin(), b.cos(), b.sin()]
        })
        .collect();
    let s = fractal_dimension(&segment, &geometric_ladder(1.0, 0.01, 8))?;
    let t = fractal_dimension(&torus, &geometric_ladder(0.6, 0.12, 8))?;

    // unforced lab regime: every datum decays to the zero state
    let lab = lab(16, 5e-3, Signal::Zero)?;
    let data = DataSet::random(&lab.grid, Magnitude::H0(1.0), 12, 4, &lab.seeds, 50)?.states;
    let p = DiscreteProcess::new(lab.it.clone(), 5.0, 0.0)?;
    let cloud: Vec<Vec<f64>> = p
        .apply_all(0, -8, &data)?
        .iter()
        .map(|z| z.v_coordinates(DEFAULT_COORDINATES))
        .collect();
    let e = fractal_dimension(&cloud, &geometric_ladder(1.0, 1e-3, 6))?;
    Ok((
        (s.dimension - 1.0).abs() <= SEGMENT_TOL && (t.dimension - 2.0).abs() <= TORUS_TOL && e.dimension == 0.0,
        format!("segment {:.4} torus {:.4} collapse {} (degenerate {})", s.dimension, t.dimension, e.dimension, e.degenerate),
    ))
}

fn certification() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in [1, 2] {
        let p = PolynomialPotential::canonical(m)?;
        let r = p.certify(10.0, 10_000)?;
        let s = &r.splitting;
        let finite = r.control.iter().all(|c| c.constant.is_finite());
        ok &= r.passed() && finite;
        if m == 1 {
            ok &= (s.alpha - 2.0).abs() < 1e-12 && s.gamma == 0.0 && s.beta == 1.0 && r.p == 1;
        } else {
            ok &= r.p == 5;
        }
        parts.push(format!(
            "m={m}: p={} alpha={:.6} gamma={} beta={} c_k finite {finite}",
            r.p, s.alpha, s.gamma, s.beta
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn sci(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.3e}")).collect()
}

fn fixed(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.3}")).collect()
}

fn record(lines: &mut Vec<Line>, id: usize, title: &'static str, r: Result<(bool, String)>) {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    let l = Line { id, title, passed, detail };
    println!("criterion {:>2} [{}] {}: {}", l.id, if l.passed { "PASS" } else { "FAIL" }, l.title, l.detail);
    lines.push(l);
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut slack = Slack::default();
    record(&mut lines, 1, "exact conservation", conservation(&mut slack));
    record(&mut lines, 2, "Lyapunov decay", lyapunov_decay(&mut slack));
    record(&mut lines, 3, "energy-identity residual halving", residual_convergence(&mut slack));
    record(&mut lines, 4, "exact-solution oracles", exact_oracles(&mut slack));

    let lab32 = lab(32, LAB_DT, quasi_periodic());
    let ball = lab32.as_ref().ok().map(|l| lab_ball(l, 16));
    record(
        &mut lines,
        6,
        "dissipativity and absorption",
        lab32.as_ref().map_err(clone_err).and_then(|l| absorption(l, &mut slack)),
    );
    record(&mut lines, 5, "Laplacian inequality", {
        let ok = slack.violations == 0 && slack.checked > 0;
        Ok((ok, format!("{} states checked, {} violations, min slack {:.3e}", slack.checked, slack.violations, slack.worst)))
    });
    let with_ball = |f: fn(&Lab, &Ball) -> Result<(bool, String)>| -> Result<(bool, String)> {
        let l = lab32.as_ref().map_err(clone_err)?;
        let b = ball.as_ref().unwrap().as_ref().map_err(clone_err)?;
        f(l, b)
    };
    record(&mut lines, 7, "continuous dependence", with_ball(continuous_dependence_check));
    record(&mut lines, 8, "time regularity and smoothing", with_ball(smoothing_check));
    record(&mut lines, 9, "pullback attraction", pullback());
    record(&mut lines, 10, "Hoelder assumptions H1'/H3'", with_ball(holder_check));
    record(&mut lines, 11, "dimension estimator", dimension());
    record(&mut lines, 12, "potential certification", certification());

    lines.sort_by_key(|l| l.id);
    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!(
        "acceptance: {}/{} passed in {:.0}s{}",
        lines.len() - failed.len(),
        lines.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!(", failed {failed:?}") }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn clone_err(e: &modelh::Error) -> modelh::Error {
    modelh::Error::Experiment(e.to_string())
}
