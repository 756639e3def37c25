//! Non-autonomous forcing symbols `g(t, x) = s(t) e(x)`.
//!
//! The profile `e` is a divergence-free, zero-mean, band-limited field built
//! from a stream function; the scalar signal `s` is defined for every real
//! time so that arbitrarily remote pullback runs are possible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::Grid;

/// Scalar time signal multiplying the forcing profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Signal {
    Zero,
    Constant,
    /// `amplitude * sin(omega t + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Sum of sinusoids with (intended) rationally independent frequencies.
    QuasiPeriodic { components: Vec<SinusoidComponent> },
    /// `base(t) * exp(rate * min(t - switch_time, 0))`: decays into the past.
    PastDecaying {
        base: Box<Signal>,
        rate: f64,
        switch_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidComponent {
    pub amplitude: f64,
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Signal {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant => 1.0,
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).sin(),
            Signal::QuasiPeriodic { components } => components
                .iter()
                .map(|c| c.amplitude * (c.omega * t + c.phase).sin())
                .sum(),
            Signal::PastDecaying {
                base,
                rate,
                switch_time,
            } => base.value(t) * (rate * (t - switch_time).min(0.0)).exp(),
        }
    }

    /// Upper bound on `|s(t)|` over all `t`.
    pub fn max_abs(&self) -> f64 {
        match self {
            Signal::Zero => 0.0,
            Signal::Constant => 1.0,
            Signal::Sinusoid { amplitude, .. } => amplitude.abs(),
            Signal::QuasiPeriodic { components } => components.iter().map(|c| c.amplitude.abs()).sum(),
            Signal::PastDecaying { base, .. } => base.max_abs(),
        }
    }

    /// Longest characteristic period, if the signal oscillates.
    pub fn period(&self) -> Option<f64> {
        match self {
            Signal::Zero | Signal::Constant => None,
            Signal::Sinusoid { omega, .. } => Some(2.0 * PI / omega.abs()),
            Signal::QuasiPeriodic { components } => components
                .iter()
                .map(|c| 2.0 * PI / c.omega.abs())
                .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p)))),
            Signal::PastDecaying { base, .. } => base.period(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Signal::Zero => true,
            Signal::Sinusoid { amplitude, .. } => *amplitude == 0.0,
            Signal::QuasiPeriodic { components } => components.iter().all(|c| c.amplitude == 0.0),
            Signal::PastDecaying { base, .. } => base.is_zero(),
            Signal::Constant => false,
        }
    }

    /// True if the signal does not depend on time.
    pub fn is_autonomous(&self) -> bool {
        match self {
            Signal::Zero | Signal::Constant => true,
            _ => self.is_zero(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidForcing(format!("{what} must be finite")))
            }
        };
        match self {
            Signal::Zero | Signal::Constant => Ok(()),
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                finite(*amplitude, "amplitude")?;
                finite(*phase, "phase")?;
                if !(omega.is_finite() && *omega != 0.0) {
                    return Err(Error::InvalidForcing("omega must be finite and nonzero".into()));
                }
                Ok(())
            }
            Signal::QuasiPeriodic { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidForcing("quasi-periodic signal needs components".into()));
                }
                for c in components {
                    Signal::Sinusoid {
                        amplitude: c.amplitude,
                        omega: c.omega,
                        phase: c.phase,
                    }
                    .validate()?;
                }
                Ok(())
            }
            Signal::PastDecaying {
                base,
                rate,
                switch_time,
            } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidForcing(format!(
                        "decay rate must be positive, got {rate}"
                    )));
                }
                finite(*switch_time, "switch_time")?;
                base.validate()
            }
        }
    }
}

/// One stream-function mode `amplitude * cos(k.x + phase)` of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileMode {
    pub jx: i64,
    pub jy: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSymbol {
    profile: SpectralVector,
    signal: Signal,
}

/// Result of a sliding-window integrability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlocReport {
    /// `sup_r int_{r-1}^r |g(s)|^q ds` over the swept window.
    pub value: f64,
    pub exponent: f64,
    pub horizon: f64,
    pub step: f64,
    /// Window end `r` attaining the sup.
    pub argmax: f64,
    /// Upper bound for windows older than the sweep (past-decaying symbols);
    /// `None` when the sweep covers a full period of a periodic signal.
    pub tail_bound: Option<f64>,
}

impl ForcingSymbol {
    pub fn zero(grid: &Grid) -> Self {
        Self {
            profile: SpectralVector::zeros(grid),
            signal: Signal::Zero,
        }
    }

    /// Builds the profile `(d_y phi, -d_x phi)` from stream-function modes,
    /// optionally rescaled to a prescribed `L^2` norm.
    pub fn from_stream_modes(
        grid: &Grid,
        modes: &[ProfileMode],
        l2_norm: Option<f64>,
        signal: Signal,
    ) -> Result<Self> {
        let mut phi = SpectralScalar::zeros(grid);
        for m in modes {
            if !(m.amplitude.is_finite() && m.phase.is_finite()) {
                return Err(Error::InvalidForcing("mode amplitude/phase must be finite".into()));
            }
            if (m.jx, m.jy) == (0, 0) {
                return Err(Error::InvalidForcing("mode (0,0) carries no velocity".into()));
            }
            if m.jx.abs() > grid.cutoff() || m.jy.abs() > grid.cutoff() {
                return Err(Error::InvalidForcing(format!(
                    "mode ({},{}) lies outside the dealiased band |j| <= {}",
                    m.jx,
                    m.jy,
                    grid.cutoff()
                )));
            }
            phi = &phi + &SpectralScalar::cosine_mode(grid, m.jx, m.jy, m.amplitude, m.phase)?;
        }
        let mut profile = SpectralVector::from_stream_function(&phi);
        if let Some(target) = l2_norm {
            let n = profile.l2_sq().sqrt();
            if n == 0.0 {
                return Err(Error::InvalidForcing("cannot normalize a zero profile".into()));
            }
            profile = profile.scaled(target / n);
        }
        Self::new(profile, signal)
    }

    /// Wraps a profile; it must already be solenoidal, zero-mean and band-limited.
    pub fn new(profile: SpectralVector, signal: Signal) -> Result<Self> {
        signal.validate()?;
        let scale = profile.max_abs_coeff().max(1.0);
        if profile.divergence().max_abs_coeff() > 1e-12 * scale {
            return Err(Error::InvalidForcing("profile is not divergence-free".into()));
        }
        let (mx, my) = profile.momentum();
        if mx.abs().max(my.abs()) > 1e-12 * scale {
            return Err(Error::InvalidForcing("profile has nonzero mean".into()));
        }
        if !(profile.x.is_band_limited() && profile.y.is_band_limited()) {
            return Err(Error::InvalidForcing("profile has modes outside the dealiased band".into()));
        }
        Ok(Self { profile, signal })
    }

    pub fn profile(&self) -> &SpectralVector {
        &self.profile
    }

    pub fn signal(&self) -> &Signal {
        &self.signal
    }

    pub fn is_zero(&self) -> bool {
        self.signal.is_zero() || self.profile.max_abs_coeff() == 0.0
    }

    pub fn is_autonomous(&self) -> bool {
        self.is_zero() || self.signal.is_autonomous()
    }

    /// Same profile, signal `s(t + shift)`.
    pub fn time_shifted(&self, shift: f64) -> Self {
        let signal = shift_signal(&self.signal, shift);
        Self {
            profile: self.profile.clone(),
            signal,
        }
    }

    /// Same signal, profile multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            profile: self.profile.scaled(a),
            signal: self.signal.clone(),
        }
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        self.signal.value(t)
    }

    pub fn sample(&self, t: f64) -> SpectralVector {
        let s = self.signal.value(t);
        if s == 0.0 {
            return SpectralVector::zeros(self.profile.grid());
        }
        if s == 1.0 {
            return self.profile.clone();
        }
        self.profile.scaled(s)
    }

    /// `|g(t)|_2`.
    pub fn l2_at(&self, t: f64) -> f64 {
        self.signal.value(t).abs() * self.profile.l2_sq().sqrt()
    }

    /// Sliding-window bound `M_{g,q}(t) = sup_{r <= t} int_{r-1}^r |g(s)|_2^q ds`,
    /// with the sup truncated to `r in [t - horizon, t]`.
    ///
    /// `horizon` defaults to 20 periods of the slowest oscillation (1 for
    /// stationary signals).
    pub fn uloc_bound(&self, t: f64, q: f64, step: f64, horizon: Option<f64>) -> Result<UlocReport> {
        if !(q >= 2.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponent q must be >= 2, got {q}")));
        }
        if !(step > 0.0 && step <= 1e-2) {
            return Err(Error::InvalidParameter(format!(
                "quadrature step must lie in (0, 1e-2], got {step}"
            )));
        }
        let horizon = horizon.unwrap_or_else(|| self.signal.period().map_or(1.0, |p| 20.0 * p));
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        let norm_q = self.profile.l2_sq().sqrt().powf(q);
        if norm_q == 0.0 || self.signal.is_zero() {
            return Ok(UlocReport {
                value: 0.0,
                exponent: q,
                horizon,
                step,
                argmax: t,
                tail_bound: Some(0.0),
            });
        }
        let integrand = |s: f64| self.signal.value(s).abs().powf(q);
        let coarse = ((1.0 / step).ceil() as usize).max(2).next_multiple_of(2);
        let window = |r: f64, n: usize| simpson(&integrand, r - 1.0, r, n);

        let count = (horizon / step).ceil() as usize;
        let mut best = (f64::NEG_INFINITY, t);
        for i in 0..=count {
            let r = t - i as f64 * step;
            let w = window(r, coarse);
            if w > best.0 {
                best = (w, r);
            }
        }
        // golden-section refinement of the best coarse window
        let fine = 4 * coarse;
        let (mut a, mut b) = (best.1 - step, (best.1 + step).min(t));
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (window(c, fine), window(d, fine));
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = window(c, fine);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = window(d, fine);
            }
        }
        let mut value = window(best.1, fine);
        let mut argmax = best.1;
        for (r, w) in [(c, fc), (d, fd)] {
            if w > value {
                value = w;
                argmax = r;
            }
        }

        let tail_bound = match &self.signal {
            Signal::PastDecaying {
                base,
                rate,
                switch_time,
            } => {
                let oldest = t - horizon;
                let factor = (q * rate * (oldest - switch_time).min(0.0)).exp();
                Some(base.max_abs().powf(q) * factor * norm_q)
            }
            Signal::Constant | Signal::Sinusoid { .. } => None,
            // quasi-periodic: sup over an unbounded past only approached
            Signal::QuasiPeriodic { .. } | Signal::Zero => None,
        };
        if let Some(tb) = tail_bound {
            if tb > value * norm_q {
                return Err(Error::InvalidParameter(format!(
                    "window sweep of length {horizon} does not dominate the decaying tail bound {tb}"
                )));
            }
        }
        Ok(UlocReport {
            value: value * norm_q,
            exponent: q,
            horizon,
            step,
            argmax,
            tail_bound,
        })
    }
}

fn shift_signal(s: &Signal, shift: f64) -> Signal {
    match s {
        Signal::Zero | Signal::Constant => s.clone(),
        Signal::Sinusoid {
            amplitude,
            omega,
            phase,
        } => Signal::Sinusoid {
            amplitude: *amplitude,
            omega: *omega,
            phase: phase + omega * shift,
        },
        Signal::QuasiPeriodic { components } => Signal::QuasiPeriodic {
            components: components
                .iter()
                .map(|c| SinusoidComponent {
                    amplitude: c.amplitude,
                    omega: c.omega,
                    phase: c.phase + c.omega * shift,
                })
                .collect(),
        },
        Signal::PastDecaying {
            base,
            rate,
            switch_time,
        } => Signal::PastDecaying {
            base: Box::new(shift_signal(base, shift)),
            rate: *rate,
            switch_time: switch_time - shift,
        },
    }
}

/// Composite Simpson rule with `n` (even) subintervals.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16, 2.0 * PI).unwrap()
    }

    fn unit(signal: Signal) -> ForcingSymbol {
        let modes = [ProfileMode {
            jx: 1,
            jy: 1,
            amplitude: 1.0,
            phase: 0.3,
        }];
        ForcingSymbol::from_stream_modes(&grid(), &modes, Some(1.0), signal).unwrap()
    }

    #[test]
    fn zero_symbol_samples_zero() {
        let g = ForcingSymbol::zero(&grid());
        for t in [-100.0, 0.0, 3.5] {
            assert_eq!(g.sample(t).max_abs_coeff(), 0.0);
        }
        assert_eq!(g.uloc_bound(0.0, 4.0, 1e-2, None).unwrap().value, 0.0);
    }

    #[test]
    fn constant_profile_returns_profile() {
        let g = unit(Signal::Constant);
        let e = g.sample(-17.0);
        assert_eq!(&e, g.profile());
        assert!((e.l2_sq() - 1.0).abs() < 1e-14);
        assert!(e.divergence().max_abs_coeff() < 1e-13);
        let m = g.uloc_bound(5.0, 2.0, 1e-2, None).unwrap();
        assert!((m.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn modulated_profile_at_quarter_period() {
        let g = unit(Signal::Sinusoid {
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        });
        let d = &g.sample(PI / 2.0) - g.profile();
        assert!(d.max_abs_coeff() < 1e-14 * g.profile().max_abs_coeff());
    }

    #[test]
    fn rejects_bad_symbols() {
        let modes = [ProfileMode {
            jx: 7,
            jy: 0,
            amplitude: 1.0,
            phase: 0.0,
        }];
        assert!(ForcingSymbol::from_stream_modes(&grid(), &modes, None, Signal::Constant).is_err());
        let bad = Signal::PastDecaying {
            base: Box::new(Signal::Constant),
            rate: -1.0,
            switch_time: 0.0,
        };
        assert!(ForcingSymbol::new(SpectralVector::zeros(&grid()), bad).is_err());
        let g = unit(Signal::Constant);
        assert!(g.uloc_bound(0.0, 2.0, 0.1, None).is_err());
        assert!(g.uloc_bound(0.0, 1.5, 1e-2, None).is_err());
    }

    #[test]
    fn time_shift_moves_signal() {
        let g = unit(Signal::QuasiPeriodic {
            components: vec![
                SinusoidComponent {
                    amplitude: 0.7,
                    omega: 1.0,
                    phase: 0.1,
                },
                SinusoidComponent {
                    amplitude: 0.3,
                    omega: 2f64.sqrt(),
                    phase: 0.0,
                },
            ],
        });
        let h = g.time_shifted(2.5);
        for t in [-3.0, 0.0, 1.7] {
            assert!((h.amplitude_at(t) - g.amplitude_at(t + 2.5)).abs() < 1e-12);
        }
    }
}
