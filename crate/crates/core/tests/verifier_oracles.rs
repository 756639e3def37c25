use std::f64::consts::PI;

use modelh::solver::calibrate_stabilization;
use modelh::verifier::{dissipative_check, DataSet};
use modelh::{ForcingSymbol, Grid, Integrator, PolynomialPotential, SolverParams, SpectralScalar, SpectralVector, State};

const NU: f64 = 0.25;

fn kappa(z0: State) -> f64 {
    let g = z0.grid().clone();
    let pot = PolynomialPotential::canonical(1).unwrap();
    let s = calibrate_stabilization(&z0, &pot, 1.0).unwrap();
    let params = SolverParams { viscosity: NU, dt: 1e-2, stabilization: s, ..Default::default() };
    let it = Integrator::new(params, pot, ForcingSymbol::zero(&g)).unwrap();
    let set = DataSet { label: "D".into(), magnitude: z0.h0_norm(), states: vec![z0] };
    let r = dissipative_check(&it, &[set], 20.0, 10).unwrap();
    assert!(r.passed(), "{:?}", r.verdicts);
    r.constant("kappa[D:0]").expect("kappa fitted").value
}

fn velocity(grid: &Grid, ux: impl Fn(f64, f64) -> f64, uy: impl Fn(f64, f64) -> f64) -> SpectralVector {
    SpectralVector::new(SpectralScalar::from_fn(grid, ux).unwrap(), SpectralScalar::from_fn(grid, uy).unwrap()).unwrap()
}

#[test]
fn unit_shear_flow_decays_at_twice_the_viscosity() {
    // |u|^2 of a |k| = 1 mode decays like exp(-2 nu t); psi sits near the
    // stable well, where its own transient relaxes at rate 2 (1 + F''(1)) = 18
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let psi = SpectralScalar::from_fn(&g, |x, _| 1.0 + 1e-3 * x.cos()).unwrap();
    let k = kappa(State::new(velocity(&g, |_, y| y.sin(), |_, _| 0.0), psi, 0.0).unwrap());
    assert!((k - 2.0 * NU).abs() <= 0.25 * 2.0 * NU, "kappa {k}");
}

#[test]
fn taylor_green_functional_decays_at_four_times_the_viscosity() {
    // |k|^2 = 2: the amplitude decays at 2 nu, the squared functional at 4 nu
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let u = velocity(&g, |x, y| x.sin() * y.cos(), |x, y| -x.cos() * y.sin());
    let k = kappa(State::new(u, SpectralScalar::zeros(&g), 0.0).unwrap());
    assert!((k - 4.0 * NU).abs() <= 0.25 * 4.0 * NU, "kappa {k}");
}
