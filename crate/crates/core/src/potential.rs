//! Polynomial double-well potentials.
//!
//! A potential is an even-degree polynomial `F` with positive leading
//! coefficient. Its convex splitting `F = F0 - alpha y^2 + gamma y + beta`
//! (with `F0` convex, `F0(0) = F0'(0) = 0`) is computed at construction, and
//! [`PolynomialPotential::certify`] estimates the growth constants on a
//! sample grid together with their exact asymptotic limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant added to `F` when checking strict positivity and coercivity; it
/// does not change `f = F'` and therefore not the dynamics.
pub const NORMALIZING_SHIFT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    /// Ascending coefficients of the convex part `F0`.
    pub convex_part: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    /// `derivs[k]` holds the ascending coefficients of `F^(k)`, `k = 0..=5`.
    derivs: Vec<Vec<f64>>,
    splitting: Splitting,
}

impl PolynomialPotential {
    /// Builds a potential from ascending coefficients of `F`.
    pub fn new(coefficients: &[f64]) -> Result<Self> {
        let mut c = coefficients.to_vec();
        while c.last() == Some(&0.0) {
            c.pop();
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential("non-finite coefficient".into()));
        }
        let degree = c.len().saturating_sub(1);
        if degree < 4 {
            return Err(Error::InvalidPotential(format!(
                "degree must be at least 4, got {degree}"
            )));
        }
        if degree % 2 != 0 {
            return Err(Error::InvalidPotential(format!(
                "degree must be even, got {degree}"
            )));
        }
        if c[degree] <= 0.0 {
            return Err(Error::InvalidPotential(
                "leading coefficient must be positive".into(),
            ));
        }
        let mut derivs = vec![c];
        for k in 0..5 {
            derivs.push(differentiate(&derivs[k]));
        }
        let splitting = compute_splitting(&derivs)?;
        Ok(Self { derivs, splitting })
    }

    /// `F(y) = (y^2 - 1)^(2m)`, degree `4m`, growth exponent `p = 4m - 3`.
    pub fn canonical(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPotential("canonical family needs m >= 1".into()));
        }
        let e = 2 * m as usize;
        let mut c = vec![0.0; 2 * e + 1];
        let mut binom = 1.0;
        for j in 0..=e {
            let sign = if (e - j) % 2 == 0 { 1.0 } else { -1.0 };
            c[2 * j] = sign * binom;
            binom = binom * (e - j) as f64 / (j + 1) as f64;
        }
        Self::new(&c)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.derivs[0]
    }

    pub fn degree(&self) -> usize {
        self.derivs[0].len() - 1
    }

    /// Growth exponent `p = degree - 3`.
    pub fn growth_exponent(&self) -> usize {
        self.degree() - 3
    }

    pub fn leading_coefficient(&self) -> f64 {
        self.derivs[0][self.degree()]
    }

    pub fn splitting(&self) -> &Splitting {
        &self.splitting
    }

    pub fn alpha(&self) -> f64 {
        self.splitting.alpha
    }

    /// `F^(order)(y)`.
    pub fn eval(&self, y: f64, order: usize) -> Result<f64> {
        if order > 5 {
            return Err(Error::OrderOutOfRange(order));
        }
        Ok(horner(&self.derivs[order], y))
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        horner(&self.derivs[0], y)
    }

    /// `f(y) = F'(y)`.
    #[inline]
    pub fn f(&self, y: f64) -> f64 {
        horner(&self.derivs[1], y)
    }

    /// `f'(y) = F''(y)`.
    #[inline]
    pub fn f_prime(&self, y: f64) -> f64 {
        horner(&self.derivs[2], y)
    }

    /// Exact maximum of `|f'|` over `[lo, hi]`.
    pub fn max_abs_f_prime(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.f_prime(lo).abs().max(self.f_prime(hi).abs());
        for r in real_roots(&self.derivs[3]) {
            if r > lo && r < hi {
                m = m.max(self.f_prime(r).abs());
            }
        }
        m
    }

    /// Sample-based certification of the growth, coercivity and control
    /// hypotheses on `[-radius, radius]` with `samples` points.
    pub fn certify(&self, radius: f64, samples: usize) -> Result<CertificationReport> {
        let roots = real_roots(&self.derivs[1]);
        let root_mag = roots.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
        if !(radius > 2.0 * root_mag) {
            return Err(Error::InvalidParameter(format!(
                "certification radius {radius} must exceed twice the largest critical point {root_mag}"
            )));
        }
        if samples < 1000 {
            return Err(Error::InvalidParameter(format!(
                "certification needs at least 1000 samples, got {samples}"
            )));
        }
        let d = self.degree();
        let p = self.growth_exponent();
        let lead = self.leading_coefficient();
        let ys: Vec<f64> = (0..samples)
            .map(|i| -radius + 2.0 * radius * i as f64 / (samples - 1) as f64)
            .collect();

        let min_value = ys.iter().map(|&y| self.value(y)).fold(f64::INFINITY, f64::min);
        // global minimum is attained at a critical point
        let min_value = roots.iter().map(|&r| self.value(r)).fold(min_value, f64::min);
        if min_value < -1e-12 * self.scale() {
            return Err(Error::HypothesisViolated(format!(
                "positivity: F attains {min_value} < 0"
            )));
        }

        let mut control = Vec::with_capacity(5);
        for k in 0..=4usize {
            // negative only when k > p + 2, where f^(k) vanishes identically
            let expo = (p as f64 + 2.0 - k as f64) / (p + 3) as f64;
            let sampled = ys
                .iter()
                .map(|&y| {
                    horner(&self.derivs[k + 1], y).abs() / (1.0 + self.value(y).max(0.0).powf(expo))
                })
                .fold(0.0_f64, f64::max);
            // f^(k) ~ lead * d!/(d-1-k)! y^(d-1-k), F^expo ~ lead^expo |y|^(d-1-k)
            let falling: f64 = ((d - k)..=d).map(|v| v as f64).product();
            let asymptotic = lead * falling / lead.powf(expo);
            control.push(ControlConstant {
                k,
                sampled,
                asymptotic,
                constant: sampled.max(asymptotic),
            });
        }

        let growth_sampled = ys
            .iter()
            .map(|&y| horner(&self.derivs[3], y).abs() / (1.0 + y.abs().powi(p as i32)))
            .fold(0.0_f64, f64::max);
        let growth_asymptotic = lead * (d * (d - 1) * (d - 2)) as f64;

        // coercivity with q = p + 1: F + shift >= c_f (|y|^(p+3) - 1)
        let coercivity_sampled = ys
            .iter()
            .filter(|y| y.abs() > 1.0)
            .map(|&y| (self.value(y) + NORMALIZING_SHIFT) / (y.abs().powi(d as i32) - 1.0))
            .fold(f64::INFINITY, f64::min);
        let c_f = coercivity_sampled.min(lead);

        let convex_ok = self.convex_part_is_convex();
        let f4_sup = ys
            .iter()
            .map(|&y| horner(&self.derivs[5], y).abs())
            .fold(0.0_f64, f64::max);
        let min_f_prime = ys.iter().map(|&y| self.f_prime(y)).fold(f64::INFINITY, f64::min);

        let mut violations = Vec::new();
        if !(c_f > 0.0) {
            violations.push("coercivity".to_string());
        }
        if !convex_ok {
            violations.push("splitting".to_string());
        }
        if min_f_prime < -2.0 * self.splitting.alpha - 1e-9 * self.scale() {
            violations.push("f' >= -2 alpha".to_string());
        }
        if control.iter().any(|c| !c.constant.is_finite()) {
            violations.push("control".to_string());
        }

        Ok(CertificationReport {
            degree: d,
            p,
            q: p + 1,
            radius,
            samples,
            splitting: self.splitting.clone(),
            min_value,
            strictly_positive_after_shift: min_value + NORMALIZING_SHIFT > 0.0,
            normalizing_shift: NORMALIZING_SHIFT,
            growth_constant: growth_sampled.max(growth_asymptotic),
            coercivity_constant: c_f,
            control,
            min_f_prime,
            f4_sup_on_range: f4_sup,
            f4_globally_bounded: d <= 5,
            violations,
        })
    }

    fn scale(&self) -> f64 {
        self.derivs[0].iter().fold(1.0_f64, |m, c| m.max(c.abs()))
    }

    fn convex_part_is_convex(&self) -> bool {
        let second = differentiate(&differentiate(&self.splitting.convex_part));
        let tol = 1e-10 * self.scale();
        let mut pts = real_roots(&differentiate(&second));
        pts.push(0.0);
        pts.iter().all(|&r| horner(&second, r) >= -tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConstant {
    pub k: usize,
    pub sampled: f64,
    pub asymptotic: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub degree: usize,
    pub p: usize,
    pub q: usize,
    pub radius: f64,
    pub samples: usize,
    pub splitting: Splitting,
    pub min_value: f64,
    pub strictly_positive_after_shift: bool,
    pub normalizing_shift: f64,
    /// `C_f` in `|f''(y)| <= C_f (1 + |y|^p)`.
    pub growth_constant: f64,
    /// `c_f` in `F(y) + shift >= c_f (|y|^(p+3) - 1)`.
    pub coercivity_constant: f64,
    pub control: Vec<ControlConstant>,
    pub min_f_prime: f64,
    pub f4_sup_on_range: f64,
    pub f4_globally_bounded: bool,
    pub violations: Vec<String>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn compute_splitting(derivs: &[Vec<f64>]) -> Result<Splitting> {
    let second = &derivs[2];
    let third = &derivs[3];
    // F'' has even degree >= 2 and positive leading term, so its global
    // minimum sits at a real root of F'''.
    let min_second = real_roots(third)
        .into_iter()
        .map(|r| horner(second, r))
        .fold(f64::INFINITY, f64::min);
    if !min_second.is_finite() {
        return Err(Error::InvalidPotential("F''' has no real root".into()));
    }
    let alpha = (-0.5 * min_second).max(0.0);
    let c = &derivs[0];
    let gamma = c[1];
    let beta = c[0];
    let mut convex_part = c.clone();
    convex_part[0] = 0.0;
    convex_part[1] = 0.0;
    convex_part[2] += alpha;
    Ok(Splitting {
        alpha,
        gamma,
        beta,
        convex_part,
    })
}

#[inline]
fn horner(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * y + a)
}

fn differentiate(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &a)| a * i as f64)
        .collect()
}

/// Sorted real roots of the polynomial with ascending coefficients `c`,
/// isolated between consecutive critical points and refined by bisection.
pub fn real_roots(c: &[f64]) -> Vec<f64> {
    let mut c = c.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-c[0] / c[1]];
    }
    let lead = c[deg];
    let bound = 1.0 + c[..deg].iter().fold(0.0_f64, |m, a| m.max((a / lead).abs()));
    let crit = real_roots(&differentiate(&c));
    let mut knots = vec![-bound];
    knots.extend(crit.iter().copied().filter(|x| x.abs() < bound));
    knots.push(bound);
    let scale = c.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let mut roots: Vec<f64> = Vec::new();
    let push = |roots: &mut Vec<f64>, r: f64| {
        if roots.last().is_none_or(|&l| (r - l).abs() > 1e-9 * (1.0 + r.abs())) {
            roots.push(r);
        }
    };
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (horner(&c, a), horner(&c, b));
        if fa.abs() <= 1e-13 * scale {
            push(&mut roots, a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        if fb == 0.0 {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if horner(&c, m).signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        push(&mut roots, 0.5 * (a + b));
    }
    if let Some(&last) = knots.last() {
        if horner(&c, last).abs() <= 1e-13 * scale {
            push(&mut roots, last);
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_well() -> PolynomialPotential {
        PolynomialPotential::canonical(1).unwrap()
    }

    #[test]
    fn canonical_coefficients() {
        assert_eq!(double_well().coefficients(), &[1.0, 0.0, -2.0, 0.0, 1.0]);
        let p5 = PolynomialPotential::canonical(2).unwrap();
        assert_eq!(p5.coefficients(), &[1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0]);
        assert_eq!(p5.growth_exponent(), 5);
    }

    #[test]
    fn double_well_values() {
        let f = double_well();
        assert_eq!(f.eval(1.0, 1).unwrap(), 0.0);
        assert!((f.eval(0.5, 1).unwrap() + 1.5).abs() < 1e-15);
        assert_eq!(f.eval(0.0, 2).unwrap(), -4.0);
        assert!(matches!(f.eval(0.0, 6), Err(Error::OrderOutOfRange(6))));
    }

    #[test]
    fn rejects_degenerate_polynomials() {
        assert!(PolynomialPotential::new(&[0.0, 0.0, 1.0]).is_err());
        assert!(PolynomialPotential::new(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(PolynomialPotential::new(&[0.0, 0.0, 0.0, 0.0, -1.0]).is_err());
    }

    #[test]
    fn splitting_of_double_well() {
        let s = double_well().splitting().clone();
        assert!((s.alpha - 2.0).abs() < 1e-12);
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.beta, 1.0);
        assert!(s.convex_part[..4].iter().all(|&c| c.abs() < 1e-12));
        assert_eq!(s.convex_part[4], 1.0);
    }

    #[test]
    fn splitting_of_convex_quartic() {
        let s = PolynomialPotential::new(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap().splitting().clone();
        assert_eq!((s.alpha, s.gamma, s.beta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_term_shifts_gamma_only() {
        let s = PolynomialPotential::new(&[1.0, 1.0, -2.0, 0.0, 1.0]).unwrap().splitting().clone();
        assert!((s.alpha - 2.0).abs() < 1e-12);
        assert_eq!(s.gamma, 1.0);
        assert_eq!(s.beta, 1.0);
    }

    #[test]
    fn negative_potential_fails_positivity() {
        let f = PolynomialPotential::new(&[-10.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(f.certify(10.0, 10_000), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn certification_preconditions() {
        let f = double_well();
        assert!(f.certify(1.5, 10_000).is_err());
        assert!(f.certify(10.0, 999).is_err());
    }

    #[test]
    fn max_abs_f_prime_on_interval() {
        let f = double_well();
        assert_eq!(f.max_abs_f_prime(0.0, 0.0), 4.0);
        assert!((f.max_abs_f_prime(-1.2, 1.2) - 13.28).abs() < 1e-12);
    }

    #[test]
    fn roots_of_known_polynomials() {
        let r = real_roots(&[0.0, -4.0, 0.0, 4.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }
}
