use modelh::forcing::{ProfileMode, SinusoidComponent};
use modelh::{ForcingSymbol, Grid, Signal};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(16, 3.0).unwrap()
}

fn modes() -> Vec<ProfileMode> {
    vec![
        ProfileMode { jx: 1, jy: 0, amplitude: 1.0, phase: 0.0 },
        ProfileMode { jx: 1, jy: 2, amplitude: 0.4, phase: 0.7 },
    ]
}

fn symbol(l2: f64, signal: Signal) -> ForcingSymbol {
    ForcingSymbol::from_stream_modes(&grid(), &modes(), Some(l2), signal).unwrap()
}

/// `sup_r int_{r-1}^r sin^2` by brute force over a window sweep with the trapezoid rule.
fn brute_sine_window() -> f64 {
    let n = 4000;
    let mut best = 0.0_f64;
    for i in 0..2000 {
        let r = i as f64 * 2e-3 * std::f64::consts::PI;
        let h = 1.0 / n as f64;
        let s: f64 = (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                w * (r - 1.0 + j as f64 * h).sin().powi(2)
            })
            .sum();
        best = best.max(s * h);
    }
    best
}

#[test]
fn sine_window_matches_closed_form() {
    let g = symbol(1.0, Signal::Sinusoid { amplitude: 1.0, omega: 1.0, phase: 0.0 });
    let closed = 0.5 + 0.5 * 1f64.sin();
    let m = g.uloc_bound(0.0, 2.0, 1e-2, None).unwrap();
    assert!((m.value - closed).abs() < 1e-8, "{} vs {closed}", m.value);
    assert!((brute_sine_window() - closed).abs() < 1e-5);
}

#[test]
fn constant_profile_window_is_norm_squared() {
    for c in [0.5, 1.0, 3.0] {
        let m = symbol(c, Signal::Constant).uloc_bound(4.0, 2.0, 1e-2, None).unwrap();
        assert!((m.value - c * c).abs() < 1e-10 * c * c);
    }
}

#[test]
fn every_shipped_kind_has_finite_window_bounds() {
    let qp = Signal::QuasiPeriodic {
        components: vec![
            SinusoidComponent { amplitude: 1.0, omega: 1.0, phase: 0.0 },
            SinusoidComponent { amplitude: 0.7, omega: 2f64.sqrt(), phase: 0.5 },
        ],
    };
    let kinds = vec![
        Signal::Zero,
        Signal::Constant,
        Signal::Sinusoid { amplitude: 2.0, omega: 3.0, phase: 0.1 },
        qp.clone(),
        Signal::PastDecaying { base: Box::new(qp), rate: 0.5, switch_time: 0.0 },
    ];
    for s in kinds {
        let g = symbol(1.0, s.clone());
        for q in [2.0, 4.0] {
            let m = g.uloc_bound(0.0, q, 1e-2, None).unwrap();
            assert!(m.value.is_finite() && m.value >= 0.0, "{s:?} q={q}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn samples_are_solenoidal_and_mean_free(t in -1e3..1e3f64, omega in 0.1..5.0f64) {
        let g = symbol(1.3, Signal::Sinusoid { amplitude: 1.0, omega, phase: 0.2 });
        let v = g.sample(t);
        prop_assert!(v.divergence().max_abs_coeff() <= 1e-12 * g.profile().max_abs_coeff());
        prop_assert_eq!(v.momentum(), (0.0, 0.0));
    }

    #[test]
    fn window_bound_grows_with_a_growing_signal(rate in 0.1..2.0f64, t in -6.0..-1.0f64) {
        let g = symbol(1.0, Signal::PastDecaying { base: Box::new(Signal::Constant), rate, switch_time: 0.0 });
        let h = Some(20.0);
        let a = g.uloc_bound(t, 2.0, 1e-2, h).unwrap().value;
        let b = g.uloc_bound(t + 0.5, 2.0, 1e-2, h).unwrap().value;
        prop_assert!(b >= a * (1.0 - 1e-9));
    }

    #[test]
    fn stationary_window_bound_is_constant_in_time(t in -50.0..50.0f64) {
        let g = symbol(1.0, Signal::Sinusoid { amplitude: 1.0, omega: 2.0, phase: 0.0 });
        let a = g.uloc_bound(0.0, 4.0, 1e-2, None).unwrap().value;
        let b = g.uloc_bound(t, 4.0, 1e-2, None).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-6 * a);
    }
}
