//! Real scalar and vector fields in Fourier representation.
//!
//! Coefficients carry the integral scaling: the `k = 0` slot equals the
//! integral of the field over the square, and `int a b = (1/|Omega|) sum_k
//! a_k conj(b_k)` (Parseval).

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Norms available on fields and states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    H1Semi,
    H2Semi,
    /// `(|u|^2 + |grad psi|^2)^{1/2}` on a [`crate::State`].
    H0Pair,
    /// `(|grad u|^2 + |lap psi|^2)^{1/2}` on a [`crate::State`].
    VPair,
    Linf,
    Lp(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralScalar {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Forward transform of real physical samples (row-major, `y` outermost).
    pub fn from_samples(grid: &Grid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical samples"));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs: grid.forward(samples),
        })
    }

    /// Samples `f(x, y)` at the collocation points and transforms.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let samples: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.point(i);
                f(x, y)
            })
            .collect();
        Self::from_samples(grid, &samples)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        let mut s = Self::zeros(grid);
        s.coeffs[0] = Complex64::new(value * grid.area(), 0.0);
        s
    }

    /// Single real Fourier mode `amplitude * cos(k.x + phase)`.
    pub fn cosine_mode(grid: &Grid, jx: i64, jy: i64, amplitude: f64, phase: f64) -> Result<Self> {
        let p = grid
            .mode_offset(jx, jy)
            .ok_or_else(|| Error::InvalidParameter(format!("mode ({jx},{jy}) not representable")))?;
        let mut s = Self::zeros(grid);
        let half = 0.5 * amplitude * grid.area();
        let c = Complex64::from_polar(half, phase);
        match grid.mode_offset(-jx, -jy) {
            Some(m) if m != p => {
                s.coeffs[p] += c;
                s.coeffs[m] += c.conj();
            }
            _ => s.coeffs[p] += Complex64::new(2.0 * c.re, 0.0),
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, jx: i64, jy: i64) -> Option<Complex64> {
        self.grid.mode_offset(jx, jy).map(|i| self.coeffs[i])
    }

    /// Physical samples at the collocation points.
    pub fn samples(&self) -> Vec<f64> {
        self.grid.inverse(&self.coeffs)
    }

    /// Physical samples of the dealiased field.
    pub fn masked_samples(&self) -> Vec<f64> {
        self.masked().samples()
    }

    /// Spatial mean `<f> = c_0 / |Omega|`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.area()
    }

    /// Integral `c_0`.
    pub fn integral(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn masked(&self) -> Self {
        let mut out = self.clone();
        out.apply_mask();
        out
    }

    pub fn apply_mask(&mut self) {
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if !self.grid.in_band(i) {
                *c = ZERO;
            }
        }
    }

    pub fn is_band_limited(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.in_band(i) || *c == ZERO)
    }

    /// Largest violation of `c(-k) = conj(c(k))` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for iy in 0..n {
            for ix in 0..n {
                let c = self.coeffs[iy * n + ix];
                let m = self.coeffs[((n - iy) % n) * n + (n - ix) % n];
                worst = worst.max((c - m.conj()).norm());
                scale = scale.max(c.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(),
        }
    }

    pub fn gradient(&self) -> SpectralVector {
        let g = &self.grid;
        let x = self.map_coeffs(|i, c| I * g.wavevector(i).0 * c);
        let y = self.map_coeffs(|i, c| I * g.wavevector(i).1 * c);
        SpectralVector::new(x, y).expect("shared grid")
    }

    pub fn laplacian(&self) -> Self {
        let g = &self.grid;
        self.map_coeffs(|i, c| -g.k_squared(i) * c)
    }

    pub fn bilaplacian(&self) -> Self {
        let g = &self.grid;
        self.map_coeffs(|i, c| {
            let k2 = g.k_squared(i);
            k2 * k2 * c
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_coeffs(|_, c| a * c)
    }

    /// `int self * other`.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut acc = 0.0;
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc += a.re * b.re + a.im * b.im;
        }
        acc / self.grid.area()
    }

    fn weighted_sq(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            acc += weight(i) * c.norm_sqr();
        }
        acc / self.grid.area()
    }

    pub fn l2_sq(&self) -> f64 {
        self.weighted_sq(|_| 1.0)
    }

    /// `|grad f|^2`.
    pub fn h1_semi_sq(&self) -> f64 {
        self.weighted_sq(|i| self.grid.k_squared(i))
    }

    /// `|lap f|^2`.
    pub fn h2_semi_sq(&self) -> f64 {
        self.weighted_sq(|i| self.grid.k_squared(i).powi(2))
    }

    /// `|grad lap f|^2`.
    pub fn h3_semi_sq(&self) -> f64 {
        self.weighted_sq(|i| self.grid.k_squared(i).powi(3))
    }

    /// `|lap^2 f|^2`.
    pub fn h4_semi_sq(&self) -> f64 {
        self.weighted_sq(|i| self.grid.k_squared(i).powi(4))
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.l2_sq().sqrt()),
            NormKind::H1Semi => Ok(self.h1_semi_sq().sqrt()),
            NormKind::H2Semi => Ok(self.h2_semi_sq().sqrt()),
            NormKind::Linf => Ok(self
                .masked_samples()
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))),
            NormKind::Lp(q) => lp_norm(&self.grid, &[self.masked_samples()], q),
            NormKind::H0Pair | NormKind::VPair => Err(Error::InvalidParameter(format!(
                "norm {kind:?} is defined on states, not scalar fields"
            ))),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }
}

fn lp_norm(grid: &Grid, comps: &[Vec<f64>], q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("L^q needs q >= 1, got {q}")));
    }
    let mut acc = 0.0;
    for i in 0..grid.len() {
        let m2: f64 = comps.iter().map(|c| c[i] * c[i]).sum();
        acc += m2.sqrt().powf(q);
    }
    Ok((acc * grid.cell_area()).powf(1.0 / q))
}

impl Add for &SpectralScalar {
    type Output = SpectralScalar;
    fn add(self, rhs: Self) -> SpectralScalar {
        debug_assert_eq!(self.grid, rhs.grid);
        self.map_coeffs(|i, c| c + rhs.coeffs[i])
    }
}

impl Sub for &SpectralScalar {
    type Output = SpectralScalar;
    fn sub(self, rhs: Self) -> SpectralScalar {
        debug_assert_eq!(self.grid, rhs.grid);
        self.map_coeffs(|i, c| c - rhs.coeffs[i])
    }
}

impl Mul<f64> for &SpectralScalar {
    type Output = SpectralScalar;
    fn mul(self, rhs: f64) -> SpectralScalar {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralScalar {
    type Output = SpectralScalar;
    fn neg(self) -> SpectralScalar {
        self.scaled(-1.0)
    }
}

/// Two scalar components on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector {
    pub x: SpectralScalar,
    pub y: SpectralScalar,
}

impl SpectralVector {
    pub fn new(x: SpectralScalar, y: SpectralScalar) -> Result<Self> {
        x.grid.same_as(&y.grid)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            x: SpectralScalar::zeros(grid),
            y: SpectralScalar::zeros(grid),
        }
    }

    /// `(d_y phi, -d_x phi)`, divergence-free by construction.
    pub fn from_stream_function(phi: &SpectralScalar) -> Self {
        let g = phi.gradient();
        Self { x: g.y, y: -&g.x }
    }

    pub fn grid(&self) -> &Grid {
        &self.x.grid
    }

    pub fn divergence(&self) -> SpectralScalar {
        let g = self.grid().clone();
        self.x
            .map_coeffs(|i, c| {
                let (kx, ky) = g.wavevector(i);
                I * (kx * c + ky * self.y.coeffs[i])
            })
    }

    /// Scalar vorticity `d_x u_y - d_y u_x`.
    pub fn curl(&self) -> SpectralScalar {
        let g = self.grid().clone();
        self.x.map_coeffs(|i, c| {
            let (kx, ky) = g.wavevector(i);
            I * (kx * self.y.coeffs[i] - ky * c)
        })
    }

    pub fn laplacian(&self) -> Self {
        Self {
            x: self.x.laplacian(),
            y: self.y.laplacian(),
        }
    }

    pub fn masked(&self) -> Self {
        Self {
            x: self.x.masked(),
            y: self.y.masked(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            x: self.x.scaled(a),
            y: self.y.scaled(a),
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.x.inner(&other.x) + self.y.inner(&other.y)
    }

    pub fn l2_sq(&self) -> f64 {
        self.x.l2_sq() + self.y.l2_sq()
    }

    pub fn h1_semi_sq(&self) -> f64 {
        self.x.h1_semi_sq() + self.y.h1_semi_sq()
    }

    pub fn h2_semi_sq(&self) -> f64 {
        self.x.h2_semi_sq() + self.y.h2_semi_sq()
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.l2_sq().sqrt()),
            NormKind::H1Semi => Ok(self.h1_semi_sq().sqrt()),
            NormKind::H2Semi => Ok(self.h2_semi_sq().sqrt()),
            NormKind::Linf => {
                let (a, b) = (self.x.masked_samples(), self.y.masked_samples());
                Ok(a.iter()
                    .zip(&b)
                    .fold(0.0_f64, |m, (p, q)| m.max((p * p + q * q).sqrt())))
            }
            NormKind::Lp(q) => lp_norm(
                self.grid(),
                &[self.x.masked_samples(), self.y.masked_samples()],
                q,
            ),
            NormKind::H0Pair | NormKind::VPair => Err(Error::InvalidParameter(format!(
                "norm {kind:?} is defined on states, not vector fields"
            ))),
        }
    }

    /// Spatial mean of each component.
    pub fn mean(&self) -> (f64, f64) {
        (self.x.mean(), self.y.mean())
    }

    /// Integrated momentum `int u`.
    pub fn momentum(&self) -> (f64, f64) {
        (self.x.integral(), self.y.integral())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.x.max_abs_coeff().max(self.y.max_abs_coeff())
    }
}

impl Add for &SpectralVector {
    type Output = SpectralVector;
    fn add(self, rhs: Self) -> SpectralVector {
        SpectralVector {
            x: &self.x + &rhs.x,
            y: &self.y + &rhs.y,
        }
    }
}

impl Sub for &SpectralVector {
    type Output = SpectralVector;
    fn sub(self, rhs: Self) -> SpectralVector {
        SpectralVector {
            x: &self.x - &rhs.x,
            y: &self.y - &rhs.y,
        }
    }
}

/// Leray projection onto divergence-free, zero-mean fields:
/// `v_k <- v_k - k (k . v_k) / |k|^2`, with the `k = 0` mode removed.
pub fn leray_project(v: &SpectralVector) -> SpectralVector {
    let mut out = v.clone();
    leray_project_in_place(&mut out);
    out
}

pub fn leray_project_in_place(v: &mut SpectralVector) {
    let g = v.grid().clone();
    for i in 0..g.len() {
        let (kx, ky) = g.wavevector(i);
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            v.x.coeffs[i] = ZERO;
            v.y.coeffs[i] = ZERO;
            continue;
        }
        let (a, b) = (v.x.coeffs[i], v.y.coeffs[i]);
        let proj = (kx * a + ky * b) / k2;
        v.x.coeffs[i] = a - kx * proj;
        v.y.coeffs[i] = b - ky * proj;
    }
}

/// Pseudo-spectral product `M[M[a] * M[b]]`, where `M` is the dealias mask.
pub fn product(a: &SpectralScalar, b: &SpectralScalar) -> Result<SpectralScalar> {
    a.grid.same_as(&b.grid)?;
    let (pa, pb) = (a.masked_samples(), b.masked_samples());
    Ok(masked_from_samples(a.grid(), pa.iter().zip(&pb).map(|(x, y)| x * y)))
}

/// Pseudo-spectral `a * v` for a scalar `a` and vector `v`.
pub fn scale_vector(a: &SpectralScalar, v: &SpectralVector) -> Result<SpectralVector> {
    Ok(SpectralVector {
        x: product(a, &v.x)?,
        y: product(a, &v.y)?,
    })
}

/// Pseudo-spectral pointwise dot product `u . v`.
pub fn dot(u: &SpectralVector, v: &SpectralVector) -> Result<SpectralScalar> {
    u.grid().same_as(v.grid())?;
    let (ux, uy) = (u.x.masked_samples(), u.y.masked_samples());
    let (vx, vy) = (v.x.masked_samples(), v.y.masked_samples());
    Ok(masked_from_samples(
        u.grid(),
        (0..ux.len()).map(|i| ux[i] * vx[i] + uy[i] * vy[i]),
    ))
}

/// Transforms already-finite physical samples and applies the dealias mask.
pub(crate) fn masked_from_samples(grid: &Grid, samples: impl Iterator<Item = f64>) -> SpectralScalar {
    let s: Vec<f64> = samples.collect();
    let mut out = SpectralScalar {
        grid: grid.clone(),
        coeffs: grid.forward(&s),
    };
    out.apply_mask();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn constant_field_has_only_mean_mode() {
        let g = grid();
        let f = SpectralScalar::from_fn(&g, |_, _| 3.5).unwrap();
        assert!((f.coeffs()[0].re - 3.5 * g.area()).abs() < 1e-12 * g.area());
        for c in &f.coeffs()[1..] {
            assert!(c.norm() < 1e-12);
        }
    }

    #[test]
    fn single_harmonic_has_two_conjugate_modes() {
        let g = grid();
        let f = SpectralScalar::from_fn(&g, |x, _| x.sin()).unwrap();
        let p = f.coeff(1, 0).unwrap();
        let m = f.coeff(-1, 0).unwrap();
        assert!((p - m.conj()).norm() < 1e-12);
        assert!((p.im + 0.5 * g.area()).abs() < 1e-12);
        let rest: f64 = f
            .coeffs()
            .iter()
            .enumerate()
            .filter(|&(i, _)| {
                let w = g.integer_wavevector(i);
                w != (1, 0) && w != (-1, 0)
            })
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn laplacian_of_sine() {
        let g = grid();
        let f = SpectralScalar::from_fn(&g, |x, _| x.sin()).unwrap();
        let lap = f.laplacian().samples();
        let want = (&f * -1.0).samples();
        for (a, b) in lap.iter().zip(&want) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn sine_norms() {
        let g = grid();
        let f = SpectralScalar::from_fn(&g, |x, _| x.sin()).unwrap();
        assert!((f.l2_sq() - 2.0 * PI * PI).abs() < 1e-10);
        assert!((f.h1_semi_sq() - 2.0 * PI * PI).abs() < 1e-10);
        assert!((f.norm(NormKind::Linf).unwrap() - 1.0).abs() < 1e-12);
        assert!(f.norm(NormKind::H0Pair).is_err());
        assert!(f.norm(NormKind::Lp(0.5)).is_err());
    }

    #[test]
    fn lp_of_constant() {
        let g = grid();
        let f = SpectralScalar::constant(&g, 2.0);
        let l4 = f.norm(NormKind::Lp(4.0)).unwrap();
        assert!((l4 - 2.0 * g.area().powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn leray_orthogonal_decomposition() {
        let g = grid();
        let mut v = SpectralVector::zeros(&g);
        let i = g.mode_offset(1, 0).unwrap();
        v.x.coeffs_mut()[i] = Complex64::new(1.5, -0.5);
        v.y.coeffs_mut()[i] = Complex64::new(0.25, 2.0);
        let p = leray_project(&v);
        assert_eq!(p.x.coeffs()[i], ZERO);
        assert_eq!(p.y.coeffs()[i], Complex64::new(0.25, 2.0));
    }

    #[test]
    fn leray_annihilates_gradients() {
        let g = grid();
        let phi = SpectralScalar::from_fn(&g, |x, y| (x + 2.0 * y).cos() + (3.0 * x).sin() * y.cos()).unwrap();
        let p = leray_project(&phi.gradient());
        assert!(p.max_abs_coeff() < 1e-12 * phi.gradient().max_abs_coeff().max(1.0));
    }

    #[test]
    fn identity_factor_masks() {
        let g = grid();
        let b = SpectralScalar::from_fn(&g, |x, y| (7.0 * x).sin() + (x - y).cos()).unwrap();
        let one = SpectralScalar::constant(&g, 1.0);
        let p = product(&one, &b).unwrap();
        let want = b.masked();
        for (a, w) in p.coeffs().iter().zip(want.coeffs()) {
            assert!((a - w).norm() < 1e-11);
        }
    }

    #[test]
    fn sine_squared_product() {
        let g = grid();
        let s = SpectralScalar::from_fn(&g, |x, _| x.sin()).unwrap();
        let p = product(&s, &s).unwrap().samples();
        for (i, v) in p.iter().enumerate() {
            let (x, _) = g.point(i);
            assert!((v - (0.5 - 0.5 * (2.0 * x).cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn solenoidal_divergence_vanishes() {
        let g = grid();
        let phi = SpectralScalar::from_fn(&g, |x, y| x.sin() * (2.0 * y).cos()).unwrap();
        let u = SpectralVector::from_stream_function(&phi);
        assert!(u.divergence().max_abs_coeff() < 1e-13);
    }

    #[test]
    fn grid_mismatch_is_error() {
        let a = SpectralScalar::zeros(&Grid::new(8, 1.0).unwrap());
        let b = SpectralScalar::zeros(&Grid::new(16, 1.0).unwrap());
        assert!(matches!(product(&a, &b), Err(Error::GridMismatch(_))));
        assert!(SpectralScalar::from_samples(&Grid::new(8, 1.0).unwrap(), &[0.0; 3]).is_err());
        assert!(SpectralScalar::from_samples(&Grid::new(2, 1.0).unwrap(), &[0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
