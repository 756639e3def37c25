//! Linearly implicit, stabilized IMEX stepper for the model H system on the
//! periodic square.
//!
//! One step from `(u^n, psi^n)`:
//!
//! ```text
//! (psi' - psi)/dt + div(u psi)   = m lap(-eps lap psi' + S (psi' - psi) + f(psi)/eps)
//! (u' - u)/dt - nu lap u'  = P[-div(u (x) u) + mu' grad psi' + g(t)],  mu' = mu(psi')
//! ```
//!
//! Both implicit operators are diagonal in Fourier space. Products are
//! evaluated pseudo-spectrally with the dealias mask on both factors and on
//! the result, which keeps the state inside the retained band and makes the
//! capillary work `(mu grad psi, u)` and the transport work `(u.grad psi, mu)`
//! agree to round-off.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{leray_project_in_place, masked_from_samples, SpectralScalar, SpectralVector};
use crate::forcing::ForcingSymbol;
use crate::grid::Grid;
use crate::potential::PolynomialPotential;
use crate::state::State;

/// Any monitored norm beyond this aborts the run.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub viscosity: f64,
    #[serde(default = "one")]
    pub mobility: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    pub dt: f64,
    /// Stabilization constant `S`; see [`calibrate_stabilization`].
    #[serde(default)]
    pub stabilization: f64,
    /// Allowed per-step energy increase for unforced runs.
    #[serde(default = "default_violation")]
    pub max_energy_violation: f64,
}

fn one() -> f64 {
    1.0
}

fn default_violation() -> f64 {
    1e-10
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            viscosity: 1.0,
            mobility: 1.0,
            epsilon: 1.0,
            dt: 1e-3,
            stabilization: 0.0,
            max_energy_violation: 1e-10,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive(self.viscosity, "viscosity")?;
        positive(self.mobility, "mobility")?;
        positive(self.epsilon, "epsilon")?;
        positive(self.dt, "dt")?;
        if !(self.stabilization.is_finite() && self.stabilization >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "stabilization must be >= 0, got {}",
                self.stabilization
            )));
        }
        if self.max_energy_violation.is_nan() || self.max_energy_violation < 0.0 {
            return Err(Error::InvalidParameter("max_energy_violation must be >= 0".into()));
        }
        Ok(())
    }
}

/// Energy budget of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    /// `|u|^2 / 2`
    pub kinetic: f64,
    /// `eps |grad psi|^2 / 2`
    pub interface: f64,
    /// `(1/eps) int F(psi)`
    pub bulk: f64,
    pub total: f64,
    /// `nu |grad u|^2`
    pub viscous_dissipation: f64,
    /// `m |grad mu|^2`
    pub chemical_dissipation: f64,
    /// `(g(t), u)`
    pub power_in: f64,
    /// `(E^{n+1} - E^n)/dt + dissipation - power`; zero on the first record.
    pub residual: f64,
    /// `int psi`
    pub mass: f64,
    pub momentum_x: f64,
    pub momentum_y: f64,
    pub norm_h0: f64,
    pub norm_v: f64,
    pub mu_l2: f64,
    pub grad_psi_l2: f64,
    pub lap_psi_l2: f64,
    pub grad_mu_l2: f64,
}

pub const CSV_HEADER: &str =
    "t,E_kin,E_int,E_pot,E_total,diss_visc,diss_chem,power_in,residual,mass,mom_x,mom_y,norm_H0,norm_V,mu_L2";

impl EnergyReport {
    pub fn csv_row(&self) -> String {
        let v = [
            self.t,
            self.kinetic,
            self.interface,
            self.bulk,
            self.total,
            self.viscous_dissipation,
            self.chemical_dissipation,
            self.power_in,
            self.residual,
            self.mass,
            self.momentum_x,
            self.momentum_y,
            self.norm_h0,
            self.norm_v,
            self.mu_l2,
        ];
        v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
    }

    /// `eps |lap psi|^2 <= |grad mu| |grad psi| + (2 alpha/eps) |grad psi|^2`,
    /// returning the slack (nonnegative when it holds).
    pub fn laplacian_inequality_slack(&self, alpha: f64, epsilon: f64) -> f64 {
        let g = self.grad_psi_l2;
        self.grad_mu_l2 * g + 2.0 * alpha / epsilon * g * g - epsilon * self.lap_psi_l2.powi(2)
    }
}

pub fn write_csv<W: Write>(mut w: W, reports: &[EnergyReport]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// `mu = -eps lap psi + (1/eps) M[f(psi)]`.
pub fn compute_mu(psi: &SpectralScalar, potential: &PolynomialPotential, epsilon: f64) -> Result<SpectralScalar> {
    let samples = psi.samples();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("order parameter"));
    }
    Ok(mu_from_samples(psi, &samples, potential, epsilon))
}

fn mu_from_samples(psi: &SpectralScalar, samples: &[f64], potential: &PolynomialPotential, epsilon: f64) -> SpectralScalar {
    let g = psi.grid();
    let inv_eps = 1.0 / epsilon;
    let fpsi = masked_from_samples(g, samples.iter().map(|&y| potential.f(y)));
    let mut mu = fpsi;
    for (i, c) in mu.coeffs_mut().iter_mut().enumerate() {
        *c = epsilon * g.k_squared(i) * psi.coeffs()[i] + inv_eps * *c;
    }
    mu
}

/// `S = margin * max|f'(y)| / 2` over the sample range of `psi`, widened by 20%
/// about its midpoint.
pub fn calibrate_stabilization(state: &State, potential: &PolynomialPotential, margin: f64) -> Result<f64> {
    if !(margin >= 1.0 && margin.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "stabilization margin must be >= 1, got {margin}"
        )));
    }
    let s = state.order_parameter.samples();
    let (lo, hi) = s
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let mid = 0.5 * (lo + hi);
    let half = 0.6 * (hi - lo);
    Ok(margin * 0.5 * potential.max_abs_f_prime(mid - half, mid + half))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Emit an [`EnergyReport`] every this many steps (and at the end).
    pub observe_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { observe_every: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub reports: Vec<EnergyReport>,
    pub final_state: State,
}

/// Energies of a state that the stepper tracks every step.
#[derive(Debug, Clone, Copy)]
struct StepEnergy {
    total: f64,
}

/// A configured stepper: parameters, potential and forcing symbol.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: SolverParams,
    potential: PolynomialPotential,
    forcing: ForcingSymbol,
}

impl Integrator {
    pub fn new(params: SolverParams, potential: PolynomialPotential, forcing: ForcingSymbol) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            potential,
            forcing,
        })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    pub fn potential(&self) -> &PolynomialPotential {
        &self.potential
    }

    pub fn forcing(&self) -> &ForcingSymbol {
        &self.forcing
    }

    pub fn with_forcing(&self, forcing: ForcingSymbol) -> Self {
        Self {
            forcing,
            ..self.clone()
        }
    }

    pub fn with_params(&self, params: SolverParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            ..self.clone()
        })
    }

    pub fn with_stabilization(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.params.stabilization = s;
        out
    }

    pub fn dt(&self) -> f64 {
        self.params.dt
    }

    /// One step to `state.time + dt`.
    pub fn step(&self, state: &State) -> Result<State> {
        let t = state.time;
        self.step_between(state, t, t + self.params.dt).map(|(s, _, _)| s)
    }

    /// Advances `steps` steps whose times are `origin + i dt` for
    /// `i = start_index, ..`, so that composing runs reproduces the same
    /// sequence of forcing samples bit for bit.
    pub fn evolve(&self, state: &State, origin: f64, start_index: i64, steps: usize) -> Result<State> {
        let mut z = state.clone();
        let dt = self.params.dt;
        for i in 0..steps as i64 {
            let n = start_index + i;
            let (next, _, _) = self.step_between(&z, origin + n as f64 * dt, origin + (n + 1) as f64 * dt)?;
            z = next;
        }
        Ok(z)
    }

    /// Like [`Integrator::evolve`] but calls `visit` after every step.
    pub fn evolve_with(
        &self,
        state: &State,
        origin: f64,
        start_index: i64,
        steps: usize,
        mut visit: impl FnMut(usize, &State),
    ) -> Result<State> {
        let mut z = state.clone();
        let dt = self.params.dt;
        for i in 0..steps as i64 {
            let n = start_index + i;
            let (next, _, _) = self.step_between(&z, origin + n as f64 * dt, origin + (n + 1) as f64 * dt)?;
            z = next;
            visit(i as usize + 1, &z);
        }
        Ok(z)
    }

    /// Fixed-step integration from `initial.time` to `t_end`.
    pub fn run(
        &self,
        initial: &State,
        t_end: f64,
        options: RunOptions,
        mut observer: impl FnMut(&State, &EnergyReport),
    ) -> Result<Trajectory> {
        if !(t_end > initial.time) {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} must exceed the initial time {}",
                initial.time
            )));
        }
        let dt = self.params.dt;
        let steps = ((t_end - initial.time) / dt).round().max(1.0) as usize;
        let every = options.observe_every.max(1);
        let origin = initial.time;
        let mut z = initial.clone();
        let first = self.energy_report(&z);
        observer(&z, &first);
        let mut reports = vec![first];
        for n in 0..steps {
            let (next, e_old, e_new) =
                self.step_between(&z, origin + n as f64 * dt, origin + (n + 1) as f64 * dt)?;
            z = next;
            if (n + 1) % every == 0 || n + 1 == steps {
                let mut r = self.energy_report(&z);
                debug_assert!((r.total - e_new.total).abs() <= 1e-9 * r.total.abs().max(1.0));
                r.residual = (e_new.total - e_old.total) / dt + r.viscous_dissipation + r.chemical_dissipation
                    - r.power_in;
                observer(&z, &r);
                reports.push(r);
            }
        }
        Ok(Trajectory {
            reports,
            final_state: z,
        })
    }

    pub fn energy_report(&self, state: &State) -> EnergyReport {
        let p = &self.params;
        let psi = &state.order_parameter;
        let u = &state.velocity;
        let samples = psi.samples();
        let mu = mu_from_samples(psi, &samples, &self.potential, p.epsilon);
        let kinetic = 0.5 * u.l2_sq();
        let grad_psi_sq = psi.h1_semi_sq();
        let interface = 0.5 * p.epsilon * grad_psi_sq;
        let bulk = self.bulk_energy(psi.grid(), &samples);
        let grad_mu_sq = mu.h1_semi_sq();
        let g = self.forcing.sample(state.time);
        let (mx, my) = u.momentum();
        EnergyReport {
            t: state.time,
            kinetic,
            interface,
            bulk,
            total: kinetic + interface + bulk,
            viscous_dissipation: p.viscosity * u.h1_semi_sq(),
            chemical_dissipation: p.mobility * grad_mu_sq,
            power_in: g.inner(u),
            residual: 0.0,
            mass: psi.integral(),
            momentum_x: mx,
            momentum_y: my,
            norm_h0: state.h0_norm(),
            norm_v: state.v_norm(),
            mu_l2: mu.l2_sq().sqrt(),
            grad_psi_l2: grad_psi_sq.sqrt(),
            lap_psi_l2: psi.h2_semi_sq().sqrt(),
            grad_mu_l2: grad_mu_sq.sqrt(),
        }
    }

    /// Chemical potential of a state under this integrator's potential.
    pub fn chemical_potential(&self, state: &State) -> Result<SpectralScalar> {
        compute_mu(&state.order_parameter, &self.potential, self.params.epsilon)
    }

    fn bulk_energy(&self, grid: &Grid, samples: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &y in samples {
            acc += self.potential.value(y);
        }
        acc * grid.cell_area() / self.params.epsilon
    }

    fn total_energy(&self, state: &State, samples: &[f64]) -> StepEnergy {
        let kinetic = 0.5 * state.velocity.l2_sq();
        let interface = 0.5 * self.params.epsilon * state.order_parameter.h1_semi_sq();
        StepEnergy {
            total: kinetic + interface + self.bulk_energy(state.grid(), samples),
        }
    }

    fn step_between(&self, state: &State, t_now: f64, t_next: f64) -> Result<(State, StepEnergy, StepEnergy)> {
        let p = &self.params;
        let grid = state.grid().clone();
        let n2 = grid.len();
        let psi = &state.order_parameter;
        let u = &state.velocity;

        let psi_s = psi.samples();
        let ux = u.x.samples();
        let uy = u.y.samples();
        let e_old = self.total_energy(state, &psi_s);

        let f_hat = masked_from_samples(&grid, psi_s.iter().map(|&y| self.potential.f(y)));
        let flux_x = masked_from_samples(&grid, (0..n2).map(|i| ux[i] * psi_s[i]));
        let flux_y = masked_from_samples(&grid, (0..n2).map(|i| uy[i] * psi_s[i]));
        let uu = masked_from_samples(&grid, (0..n2).map(|i| ux[i] * ux[i]));
        let uv = masked_from_samples(&grid, (0..n2).map(|i| ux[i] * uy[i]));
        let vv = masked_from_samples(&grid, (0..n2).map(|i| uy[i] * uy[i]));

        // Cahn-Hilliard: per-mode linear solve
        let (dt, m, eps, s) = (p.dt, p.mobility, p.epsilon, p.stabilization);
        let mut psi_new = SpectralScalar::zeros(&grid);
        {
            let out = psi_new.coeffs_mut();
            for i in 0..n2 {
                if !grid.in_band(i) {
                    continue;
                }
                let (kx, ky) = grid.wavevector(i);
                let k2 = kx * kx + ky * ky;
                let transport = I * (kx * flux_x.coeffs()[i] + ky * flux_y.coeffs()[i]);
                let old = psi.coeffs()[i];
                let num = old - dt * transport + dt * m * k2 * (s * old - f_hat.coeffs()[i] / eps);
                let den = 1.0 + dt * m * k2 * (eps * k2 + s);
                out[i] = num / den;
            }
            // mean is conserved exactly
            out[0] = psi.coeffs()[0];
        }

        let psi_new_s = psi_new.samples();
        let mu_new = mu_from_samples(&psi_new, &psi_new_s, &self.potential, eps);
        let mu_s = mu_new.samples();
        let grad = psi_new.gradient();
        let gx = grad.x.samples();
        let gy = grad.y.samples();
        let cap_x = masked_from_samples(&grid, (0..n2).map(|i| mu_s[i] * gx[i]));
        let cap_y = masked_from_samples(&grid, (0..n2).map(|i| mu_s[i] * gy[i]));

        let force = self.forcing.sample(t_now);
        let mut rhs = SpectralVector::zeros(&grid);
        for i in 0..n2 {
            if !grid.in_band(i) {
                continue;
            }
            let (kx, ky) = grid.wavevector(i);
            let conv_x = I * (kx * uu.coeffs()[i] + ky * uv.coeffs()[i]);
            let conv_y = I * (kx * uv.coeffs()[i] + ky * vv.coeffs()[i]);
            rhs.x.coeffs_mut()[i] =
                u.x.coeffs()[i] + dt * (-conv_x + cap_x.coeffs()[i] + force.x.coeffs()[i]);
            rhs.y.coeffs_mut()[i] =
                u.y.coeffs()[i] + dt * (-conv_y + cap_y.coeffs()[i] + force.y.coeffs()[i]);
        }
        leray_project_in_place(&mut rhs);
        for i in 0..n2 {
            let den = 1.0 + dt * p.viscosity * grid.k_squared(i);
            rhs.x.coeffs_mut()[i] /= den;
            rhs.y.coeffs_mut()[i] /= den;
        }

        let next = State {
            velocity: rhs,
            order_parameter: psi_new,
            time: t_next,
        };
        self.guard(state, &next, &psi_new_s)?;
        let e_new = self.total_energy(&next, &psi_new_s);
        if self.forcing.is_zero() && p.max_energy_violation.is_finite() {
            let increase = e_new.total - e_old.total;
            if increase > p.max_energy_violation {
                return Err(Error::EnergyIncrease {
                    time: t_next,
                    increase,
                    tolerance: p.max_energy_violation,
                });
            }
        }
        Ok((next, e_old, e_new))
    }

    fn guard(&self, previous: &State, next: &State, psi_samples: &[f64]) -> Result<()> {
        let blow = |quantity: &'static str, value: f64| Error::BlowUp {
            time: next.time,
            quantity,
            value,
            last_state: Box::new(previous.clone()),
        };
        let psi_max = psi_samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !psi_max.is_finite() || psi_max > BLOWUP_THRESHOLD {
            return Err(blow("max|psi|", psi_max));
        }
        let u = next.velocity.l2_sq().sqrt();
        if !u.is_finite() || u > BLOWUP_THRESHOLD {
            return Err(blow("|u|", u));
        }
        let v = next.v_norm();
        if !v.is_finite() || v > BLOWUP_THRESHOLD {
            return Err(blow("||z||_V", v));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (Grid, Integrator) {
        let g = Grid::new(n, 2.0 * PI).unwrap();
        let it = Integrator::new(
            SolverParams::default(),
            PolynomialPotential::canonical(1).unwrap(),
            ForcingSymbol::zero(&g),
        )
        .unwrap();
        (g, it)
    }

    #[test]
    fn mu_vanishes_in_the_wells() {
        let (g, it) = setup(16);
        let one = SpectralScalar::constant(&g, 1.0);
        let mu = compute_mu(&one, it.potential(), 1.0).unwrap();
        assert!(mu.max_abs_coeff() < 1e-12);
        let zero = SpectralScalar::zeros(&g);
        assert_eq!(compute_mu(&zero, it.potential(), 1.0).unwrap().max_abs_coeff(), 0.0);
    }

    #[test]
    fn mu_linearizes_around_zero() {
        let (g, it) = setup(16);
        let a = 1e-6;
        let psi = SpectralScalar::from_fn(&g, |x, _| a * x.sin()).unwrap();
        let mu = compute_mu(&psi, it.potential(), 1.0).unwrap().samples();
        for (i, v) in mu.iter().enumerate() {
            let x = g.point(i).0;
            assert!((v - (-3.0 * a * x.sin())).abs() < 10.0 * a * a * a);
        }
    }

    #[test]
    fn stabilization_calibration() {
        let (g, it) = setup(16);
        let z = State::zeros(&g, 0.0);
        assert_eq!(calibrate_stabilization(&z, it.potential(), 1.0).unwrap(), 2.0);
        assert_eq!(calibrate_stabilization(&z, it.potential(), 2.0).unwrap(), 4.0);
        assert!(calibrate_stabilization(&z, it.potential(), 0.5).is_err());
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let (g, it) = setup(16);
        let z = State::new(SpectralVector::zeros(&g), SpectralScalar::constant(&g, 1.0), 0.0).unwrap();
        let next = it.with_stabilization(2.0).step(&z).unwrap();
        assert!(next.difference(&z).h0_norm() < 1e-13);
        assert!((next.order_parameter.coeffs()[0] - z.order_parameter.coeffs()[0]).norm() == 0.0);
    }

    #[test]
    fn zero_state_energy_is_beta_area() {
        let (g, it) = setup(16);
        let r = it.energy_report(&State::zeros(&g, 0.0));
        assert!((r.total - g.area()).abs() < 1e-12 * g.area());
    }

    #[test]
    fn run_rejects_empty_interval() {
        let (g, it) = setup(8);
        let z = State::zeros(&g, 1.0);
        assert!(it.run(&z, 1.0, RunOptions::default(), |_, _| {}).is_err());
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = SolverParams {
            dt: 0.0,
            ..SolverParams::default()
        };
        assert!(p.validate().is_err());
    }
}
