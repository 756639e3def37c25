//! Periodic square grids and their Fourier transforms.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default fraction of the resolved band kept by the dealias mask (2/3 rule).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// An `n x n` collocation grid on the periodic square `[0, L)^2`.
///
/// Coefficients are stored row-major with the `y` index outermost, and each
/// index follows FFT order: slot `i` holds wavenumber `i` for `i <= n/2` and
/// `i - n` otherwise, so every axis covers `{-n/2+1, ..., n/2}`.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    dealias_fraction: f64,
    cutoff: i64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .field("dealias_fraction", &self.dealias_fraction)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.length.to_bits() == other.length.to_bits()
            && self.dealias_fraction.to_bits() == other.dealias_fraction.to_bits()
    }
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_dealias(n, length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, length: f64, dealias_fraction: f64) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be a positive even integer, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be > 0, got {length}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias_fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let cutoff = (dealias_fraction * (n / 2) as f64 + 1e-9).floor() as i64;
        Ok(Self {
            n,
            length,
            dealias_fraction,
            cutoff,
            plans: Arc::new(plans),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Largest retained `|j|` per axis under the dealias mask.
    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    /// |Omega| = L^2.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Quadrature weight of one collocation point.
    pub fn cell_area(&self) -> f64 {
        let h = self.length / self.n as f64;
        h * h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Integer wavenumber stored in FFT slot `i`.
    pub fn index_to_wavenumber(&self, i: usize) -> i64 {
        let half = self.n / 2;
        if i <= half {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Slot holding wavenumber `j`, if representable.
    pub fn wavenumber_to_index(&self, j: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if j > half || j <= -half {
            return None;
        }
        Some(if j >= 0 { j as usize } else { (j + self.n as i64) as usize })
    }

    /// Flat storage offset of the mode `(jx, jy)`.
    pub fn mode_offset(&self, jx: i64, jy: i64) -> Option<usize> {
        Some(self.wavenumber_to_index(jy)? * self.n + self.wavenumber_to_index(jx)?)
    }

    /// Integer wavevector `(jx, jy)` of flat storage offset `idx`.
    pub fn integer_wavevector(&self, idx: usize) -> (i64, i64) {
        (
            self.index_to_wavenumber(idx % self.n),
            self.index_to_wavenumber(idx / self.n),
        )
    }

    /// Physical wavevector `2 pi / L * (jx, jy)` used by every differential
    /// operator. Nyquist components are mapped to zero so that odd
    /// derivatives keep real fields real and all operators share one symbol.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let (jx, jy) = self.integer_wavevector(idx);
        let half = (self.n / 2) as i64;
        let scale = 2.0 * PI / self.length;
        let kx = if jx == half { 0.0 } else { scale * jx as f64 };
        let ky = if jy == half { 0.0 } else { scale * jy as f64 };
        (kx, ky)
    }

    pub fn k_squared(&self, idx: usize) -> f64 {
        let (kx, ky) = self.wavevector(idx);
        kx * kx + ky * ky
    }

    pub fn in_band(&self, idx: usize) -> bool {
        let (jx, jy) = self.integer_wavevector(idx);
        jx.abs() <= self.cutoff && jy.abs() <= self.cutoff
    }

    /// Largest `|k|^2` retained by the dealias mask.
    pub fn max_band_k_squared(&self) -> f64 {
        let k = 2.0 * PI / self.length * self.cutoff as f64;
        2.0 * k * k
    }

    /// Physical coordinates of collocation point `idx`.
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.length / self.n as f64;
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    /// Forward transform, scaled so that slot 0 holds the integral of the samples.
    pub(crate) fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_2d(&mut data, &self.plans.forward);
        let w = self.cell_area();
        for c in &mut data {
            *c *= w;
        }
        data
    }

    /// Inverse transform; returns real parts of `(1/|Omega|) sum_k c_k e^{ik.x}`.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.transform_2d(&mut data, &self.plans.inverse);
        let w = 1.0 / self.area();
        data.into_iter().map(|c| c.re * w).collect()
    }

    fn transform_2d(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // rows (x direction)
        plan.process(data);
        // columns via transpose
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for iy in 0..n {
            for ix in 0..n {
                t[ix * n + iy] = data[iy * n + ix];
            }
        }
        plan.process(&mut t);
        for iy in 0..n {
            for ix in 0..n {
                data[iy * n + ix] = t[ix * n + iy];
            }
        }
    }
}
