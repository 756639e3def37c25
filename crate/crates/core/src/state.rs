use crate::error::{Error, Result};
use crate::field::{leray_project, NormKind, SpectralScalar, SpectralVector};
use crate::grid::Grid;

/// The pair `z = (u, psi)` at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub velocity: SpectralVector,
    pub order_parameter: SpectralScalar,
    pub time: f64,
}

impl State {
    pub fn new(velocity: SpectralVector, order_parameter: SpectralScalar, time: f64) -> Result<Self> {
        velocity.grid().same_as(order_parameter.grid())?;
        Ok(Self {
            velocity,
            order_parameter,
            time,
        })
    }

    pub fn zeros(grid: &Grid, time: f64) -> Self {
        Self {
            velocity: SpectralVector::zeros(grid),
            order_parameter: SpectralScalar::zeros(grid),
            time,
        }
    }

    /// Projects the velocity onto solenoidal zero-mean fields and applies the
    /// dealias mask to both components, mapping arbitrary data into the
    /// discrete phase space of the solver.
    pub fn admissible(mut self) -> Self {
        self.velocity = leray_project(&self.velocity.masked());
        self.order_parameter.apply_mask();
        self
    }

    pub fn grid(&self) -> &Grid {
        self.order_parameter.grid()
    }

    /// `||z||_{H0}^2 = |u|^2 + |grad psi|^2`.
    pub fn h0_norm_sq(&self) -> f64 {
        self.velocity.l2_sq() + self.order_parameter.h1_semi_sq()
    }

    /// `||z||_V^2 = |grad u|^2 + |lap psi|^2`.
    pub fn v_norm_sq(&self) -> f64 {
        self.velocity.h1_semi_sq() + self.order_parameter.h2_semi_sq()
    }

    pub fn h0_norm(&self) -> f64 {
        self.h0_norm_sq().sqrt()
    }

    pub fn v_norm(&self) -> f64 {
        self.v_norm_sq().sqrt()
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::H0Pair => Ok(self.h0_norm()),
            NormKind::VPair => Ok(self.v_norm()),
            other => Err(Error::InvalidParameter(format!(
                "norm {other:?} is defined on single fields; use the velocity or order parameter"
            ))),
        }
    }

    /// Component-wise difference; the time of `self` is kept.
    pub fn difference(&self, other: &State) -> State {
        State {
            velocity: &self.velocity - &other.velocity,
            order_parameter: &self.order_parameter - &other.order_parameter,
            time: self.time,
        }
    }

    /// `self + a * direction`.
    pub fn perturbed(&self, direction: &State, a: f64) -> State {
        State {
            velocity: &self.velocity + &direction.velocity.scaled(a),
            order_parameter: &self.order_parameter + &direction.order_parameter.scaled(a),
            time: self.time,
        }
    }

    pub fn scaled(&self, a: f64) -> State {
        State {
            velocity: self.velocity.scaled(a),
            order_parameter: self.order_parameter.scaled(a),
            time: self.time,
        }
    }

    pub fn h0_distance(&self, other: &State) -> f64 {
        self.difference(other).h0_norm()
    }

    pub fn v_distance(&self, other: &State) -> f64 {
        self.difference(other).v_norm()
    }

    pub fn is_finite(&self) -> bool {
        [&self.velocity.x, &self.velocity.y, &self.order_parameter]
            .iter()
            .all(|f| f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    /// The first `count` real coordinates of the state in which Euclidean
    /// distance equals the V-norm distance restricted to the lowest modes.
    ///
    /// Modes are ordered by `|k|^2`, then by storage offset; only one of each
    /// conjugate pair is used (doubled weight), and each mode contributes the
    /// real and imaginary parts of `|k| u_x`, `|k| u_y` and `|k|^2 psi`, in
    /// that order.
    pub fn v_coordinates(&self, count: usize) -> Vec<f64> {
        let g = self.grid();
        let scale = (2.0 / g.area()).sqrt();
        let mut out = Vec::with_capacity(count + 5);
        for &i in leading_modes(g, count.div_ceil(6)).iter() {
            let k2 = g.k_squared(i);
            let k = k2.sqrt();
            for c in [
                self.velocity.x.coeffs()[i] * k,
                self.velocity.y.coeffs()[i] * k,
                self.order_parameter.coeffs()[i] * k2,
            ] {
                out.push(scale * c.re);
                out.push(scale * c.im);
            }
        }
        out.truncate(count);
        out
    }
}

/// Default number of projected coordinates for point clouds.
pub const DEFAULT_COORDINATES: usize = 16;

/// The `count` lowest nonzero in-band modes, one per conjugate pair.
pub fn leading_modes(grid: &Grid, count: usize) -> Vec<usize> {
    let mut modes: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.in_band(i) && grid.k_squared(i) > 0.0)
        .filter(|&i| {
            let (jx, jy) = grid.integer_wavevector(i);
            jy > 0 || (jy == 0 && jx > 0)
        })
        .collect();
    modes.sort_by(|&a, &b| {
        grid.k_squared(a)
            .partial_cmp(&grid.k_squared(b))
            .unwrap()
            .then(a.cmp(&b))
    });
    modes.truncate(count);
    modes
}
