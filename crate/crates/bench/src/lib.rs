//! Shared fixtures for the benchmarks.

use modelh::forcing::{ProfileMode, SinusoidComponent};
use modelh::rng::{random_state, Magnitude, SeedStream};
use modelh::solver::calibrate_stabilization;
use modelh::{ForcingSymbol, Grid, Integrator, PolynomialPotential, Result, Signal, SolverParams, State};

/// Quasi-periodically forced stepper on the side-3 box and a random datum.
pub fn forced(n: usize) -> Result<(Integrator, State)> {
    let grid = Grid::new(n, 3.0)?;
    let modes = [
        ProfileMode { jx: 1, jy: 0, amplitude: 1.0, phase: 0.0 },
        ProfileMode { jx: 0, jy: 1, amplitude: 1.0, phase: 1.0 },
    ];
    let signal = Signal::QuasiPeriodic {
        components: vec![
            SinusoidComponent { amplitude: 1.0, omega: 1.0, phase: 0.0 },
            SinusoidComponent { amplitude: 0.7, omega: 2f64.sqrt(), phase: 0.5 },
        ],
    };
    let f = ForcingSymbol::from_stream_modes(&grid, &modes, Some(1.0), signal)?;
    let pot = PolynomialPotential::canonical(1)?;
    let z = random_state(&grid, Magnitude::H0(1.0), 4, &mut SeedStream::new(1).job(0))?;
    let s = calibrate_stabilization(&z, &pot, 1.0)?;
    let it = Integrator::new(SolverParams { viscosity: 0.1, dt: 1.0 / 512.0, stabilization: s, ..Default::default() }, pot, f)?;
    Ok((it, z))
}
