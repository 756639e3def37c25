//! Checkpoint files: a text header followed by raw coefficient arrays.
//!
//! ```text
//! modelh-checkpoint 1
//! n_modes = 32
//! length = 6.283185307179586
//! dealias_fraction = 0.6666666666666666
//! states = 1
//! times = 0.0
//! viscosity = 1.0          (optional physical parameters)
//! potential = 1.0,0.0,-2.0,0.0,1.0
//! end
//! ```
//!
//! After the `end` line, each state contributes `u_x`, `u_y` and `psi` in
//! that order, every array holding `n_modes^2` coefficients in storage order
//! (row-major, `y` outermost, FFT wavenumber order) as interleaved
//! little-endian `f64` real/imaginary pairs. Header floats use the shortest
//! round-trip representation, so a read-back is bit-exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::Grid;
use crate::solver::SolverParams;
use crate::state::State;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "modelh-checkpoint";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointMeta {
    pub params: Option<SolverParams>,
    pub potential: Option<Vec<f64>>,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

pub fn write_checkpoint<W: Write>(mut w: W, states: &[State], meta: &CheckpointMeta) -> Result<()> {
    let grid = states
        .first()
        .ok_or_else(|| Error::Checkpoint("no states to write".into()))?
        .grid()
        .clone();
    for s in states {
        grid.same_as(s.grid())?;
    }
    writeln!(w, "{MAGIC} {FORMAT_VERSION}")?;
    writeln!(w, "n_modes = {}", grid.n())?;
    writeln!(w, "length = {:?}", grid.length())?;
    writeln!(w, "dealias_fraction = {:?}", grid.dealias_fraction())?;
    writeln!(w, "states = {}", states.len())?;
    let times: Vec<f64> = states.iter().map(|s| s.time).collect();
    writeln!(w, "times = {}", join(&times))?;
    if let Some(p) = &meta.params {
        writeln!(w, "viscosity = {:?}", p.viscosity)?;
        writeln!(w, "mobility = {:?}", p.mobility)?;
        writeln!(w, "epsilon = {:?}", p.epsilon)?;
        writeln!(w, "dt = {:?}", p.dt)?;
        writeln!(w, "stabilization = {:?}", p.stabilization)?;
        writeln!(w, "max_energy_violation = {:?}", p.max_energy_violation)?;
    }
    if let Some(c) = &meta.potential {
        writeln!(w, "potential = {}", join(c))?;
    }
    writeln!(w, "end")?;
    let mut buf = Vec::with_capacity(states.len() * 3 * grid.len() * 16);
    for s in states {
        for f in [&s.velocity.x, &s.velocity.y, &s.order_parameter] {
            for c in f.coeffs() {
                buf.extend_from_slice(&c.re.to_le_bytes());
                buf.extend_from_slice(&c.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(mut r: R) -> Result<(Vec<State>, CheckpointMeta)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(Error::Checkpoint("missing magic line".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Checkpoint("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut fields = BTreeMap::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Checkpoint("header not terminated by `end`".into()));
        }
        let l = line.trim_end_matches(['\n', '\r']);
        if l == "end" {
            break;
        }
        let (k, v) = l
            .split_once(" = ")
            .ok_or_else(|| Error::Checkpoint(format!("malformed header line {l:?}")))?;
        fields.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| {
        fields
            .get(k)
            .ok_or_else(|| Error::Checkpoint(format!("missing header field {k}")))
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?
            .parse()
            .map_err(|_| Error::Checkpoint(format!("field {k} is not a number")))
    };
    let list = |s: &str| -> Result<Vec<f64>> {
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|x| x.parse().map_err(|_| Error::Checkpoint(format!("bad number {x:?}"))))
            .collect()
    };
    let n: usize = get("n_modes")?
        .parse()
        .map_err(|_| Error::Checkpoint("n_modes".into()))?;
    let grid = Grid::with_dealias(n, num("length")?, num("dealias_fraction")?)?;
    let count: usize = get("states")?
        .parse()
        .map_err(|_| Error::Checkpoint("states".into()))?;
    let times = list(get("times")?)?;
    if times.len() != count {
        return Err(Error::Checkpoint("times/states length mismatch".into()));
    }
    let params = if fields.contains_key("viscosity") {
        Some(SolverParams {
            viscosity: num("viscosity")?,
            mobility: num("mobility")?,
            epsilon: num("epsilon")?,
            dt: num("dt")?,
            stabilization: num("stabilization")?,
            max_energy_violation: num("max_energy_violation")?,
        })
    } else {
        None
    };
    let potential = fields.get("potential").map(|s| list(s)).transpose()?;

    let read_field = |r: &mut R| -> Result<SpectralScalar> {
        let mut bytes = vec![0u8; grid.len() * 16];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Checkpoint(format!("truncated coefficient data: {e}")))?;
        let coeffs = bytes
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        SpectralScalar::from_coeffs(&grid, coeffs)
    };
    let mut states = Vec::with_capacity(count);
    for &t in &times {
        let ux = read_field(&mut r)?;
        let uy = read_field(&mut r)?;
        let psi = read_field(&mut r)?;
        states.push(State::new(SpectralVector::new(ux, uy)?, psi, t)?);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok((states, CheckpointMeta { params, potential }))
}

pub fn save(path: &Path, states: &[State], meta: &CheckpointMeta) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, states, meta)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Vec<State>, CheckpointMeta)> {
    read_checkpoint(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_state, Magnitude, SeedStream};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), t in -1e6..1e6f64, count in 1usize..3) {
            let g = Grid::new(8, 1.7).unwrap();
            let states: Vec<State> = (0..count)
                .map(|j| {
                    let mut z = random_state(&g, Magnitude::H0(2.0), 3, &mut SeedStream::new(seed).job(j as u64)).unwrap();
                    z.time = t + j as f64;
                    z
                })
                .collect();
            let meta = CheckpointMeta {
                params: Some(SolverParams { stabilization: 2.5, ..SolverParams::default() }),
                potential: Some(vec![1.0, 0.0, -2.0, 0.0, 1.0]),
            };
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &states, &meta).unwrap();
            let (back, m) = read_checkpoint(&buf[..]).unwrap();
            prop_assert_eq!(&m, &meta);
            prop_assert_eq!(back.len(), states.len());
            for (a, b) in back.iter().zip(&states) {
                prop_assert_eq!(a.time.to_bits(), b.time.to_bits());
                for (fa, fb) in [(&a.velocity.x, &b.velocity.x), (&a.velocity.y, &b.velocity.y), (&a.order_parameter, &b.order_parameter)] {
                    for (ca, cb) in fa.coeffs().iter().zip(fb.coeffs()) {
                        prop_assert_eq!(ca.re.to_bits(), cb.re.to_bits());
                        prop_assert_eq!(ca.im.to_bits(), cb.im.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = Grid::new(8, 1.0).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[State::zeros(&g, 0.0)], &CheckpointMeta::default()).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(matches!(read_checkpoint(&buf[..]), Err(Error::Checkpoint(_))));
        assert!(read_checkpoint(&b"garbage\n"[..]).is_err());
    }
}
