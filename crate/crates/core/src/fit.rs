//! Least-squares fits on (log-transformed) data with automatic window selection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub samples: usize,
    /// Abscissa range of the fitted window (untransformed).
    pub window: (f64, f64),
}

/// Ordinary least squares `y ~ slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        residual: (ss_res / nf).sqrt(),
        samples: n,
        window: (lo, hi),
    })
}

/// Fits `y ~ C exp(-rate x)`; returns `(rate, C, fit)` on `ln y`.
pub fn exponential_decay_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, LinearFit)> {
    let (x, ly) = positive_log(xs, ys, false)?;
    let mut f = linear_fit(&x, &ly)?;
    f.window = (x[0], *x.last().unwrap());
    Some((-f.slope, f.intercept.exp(), f))
}

/// Fits `y ~ C x^exponent`; returns `(exponent, C, fit)` on `ln y` vs `ln x`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, LinearFit)> {
    let (lx, ly) = positive_log(xs, ys, true)?;
    let mut f = linear_fit(&lx, &ly)?;
    f.window = (lx[0].exp(), lx.last().unwrap().exp());
    Some((f.slope, f.intercept.exp(), f))
}

fn positive_log(xs: &[f64], ys: &[f64], log_x: bool) -> Option<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&a, &b) in xs.iter().zip(ys) {
        if b > 0.0 && b.is_finite() && (!log_x || a > 0.0) {
            x.push(if log_x { a.ln() } else { a });
            y.push(b.ln());
        }
    }
    if x.len() < 2 {
        None
    } else {
        Some((x, y))
    }
}

/// Index range `[start, end)` of the fit window: the first run of at least
/// `min_len` points whose local slopes stay within 10% of their mean,
/// extended forward while that holds. Without such a run, the window with
/// the smallest relative spread is used, ties going to the latest.
pub fn stable_window(xs: &[f64], ys: &[f64], min_len: usize) -> (usize, usize) {
    let n = xs.len().min(ys.len());
    let min_len = min_len.max(3);
    if n <= min_len {
        return (0, n);
    }
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
        .collect();
    let spread = |a: usize, b: usize| {
        let s = &slopes[a..b];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let dev = s.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
        if mean == 0.0 {
            f64::INFINITY
        } else {
            dev / mean.abs()
        }
    };
    let w = min_len - 1;
    for start in 0..=slopes.len() - w {
        if spread(start, start + w) <= 0.1 {
            let mut end = start + w;
            while end < slopes.len() && spread(start, end + 1) <= 0.1 {
                end += 1;
            }
            return (start, end + 1);
        }
    }
    let mut best = (f64::INFINITY, 0);
    for start in 0..=slopes.len() - w {
        let s = spread(start, start + w);
        if s <= best.0 {
            best = (s, start);
        }
    }
    (best.1, best.1 + w + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decay_and_power_fits() {
        let xs: Vec<f64> = (1..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (-0.7 * x).exp()).collect();
        let (rate, c, _) = exponential_decay_fit(&xs, &ys).unwrap();
        assert!((rate - 0.7).abs() < 1e-12 && (c - 3.0).abs() < 1e-10);
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x.powf(-0.5)).collect();
        let (e, c, _) = power_law_fit(&xs, &ys).unwrap();
        assert!((e + 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_skips_transient() {
        // curved start, then a straight segment
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x < 5.0 { -(x * x) } else { -25.0 - 3.0 * (x - 5.0) })
            .collect();
        let (a, b) = stable_window(&xs, &ys, 4);
        assert!(a >= 4, "window starts at {a}");
        assert_eq!(b, 20);
    }
}
