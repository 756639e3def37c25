use modelh::potential::PolynomialPotential;
use proptest::prelude::*;

/// Random admissible quartic/sextic: even degree, positive leading term.
fn potential_strategy() -> impl Strategy<Value = PolynomialPotential> {
    (prop::sample::select(vec![4usize, 6]), prop::collection::vec(-3.0..3.0f64, 7), 0.2..3.0f64).prop_map(
        |(d, mut c, lead)| {
            c.truncate(d);
            c.push(lead);
            PolynomialPotential::new(&c).unwrap()
        },
    )
}

fn horner(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * y + a)
}

fn second_derivative_minimum(p: &PolynomialPotential, radius: f64, n: usize) -> f64 {
    // dense sampling of F'' built from its own coefficient list
    let c = p.coefficients();
    let c2: Vec<f64> = (2..c.len()).map(|k| c[k] * (k * (k - 1)) as f64).collect();
    (0..=n)
        .map(|i| -radius + 2.0 * radius * i as f64 / n as f64)
        .map(|y| horner(&c2, y))
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_orders_agree_with_finite_differences(p in potential_strategy(), y in -5.0..5.0f64) {
        let h = 1e-4;
        for k in 0..5 {
            let fd = (p.eval(y + h, k).unwrap() - p.eval(y - h, k).unwrap()) / (2.0 * h);
            let exact = p.eval(y, k + 1).unwrap();
            let scale = (0..=100)
                .map(|i| p.eval(-5.0 + 0.1 * i as f64, k + 1).unwrap().abs())
                .fold(1.0_f64, f64::max);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "order {k} at {y}: {fd} vs {exact}");
        }
    }

    #[test]
    fn splitting_recombines_exactly(p in potential_strategy()) {
        let s = p.splitting();
        let c = p.coefficients();
        let f0 = &s.convex_part;
        for (k, &ck) in c.iter().enumerate() {
            let mut rebuilt = f0.get(k).copied().unwrap_or(0.0);
            match k {
                0 => rebuilt += s.beta,
                1 => rebuilt += s.gamma,
                2 => rebuilt -= s.alpha,
                _ => {}
            }
            prop_assert!((rebuilt - ck).abs() <= 1e-12 * (1.0 + ck.abs()));
        }
        prop_assert_eq!(f0.first().copied().unwrap_or(0.0), 0.0);
        prop_assert_eq!(f0.get(1).copied().unwrap_or(0.0), 0.0);
    }

    #[test]
    fn alpha_matches_dense_minimization(p in potential_strategy()) {
        let oracle = (-0.5 * second_derivative_minimum(&p, 10.0, 200_000)).max(0.0);
        prop_assert!((p.alpha() - oracle).abs() <= 1e-6 * (1.0 + oracle), "{} vs {oracle}", p.alpha());
    }

    #[test]
    fn f_prime_is_bounded_below_by_minus_two_alpha(p in potential_strategy(), y in -20.0..20.0f64) {
        let scale = 1.0 + p.alpha();
        prop_assert!(p.f_prime(y) >= -2.0 * p.alpha() - 1e-10 * scale);
    }
}

#[test]
fn double_well_splitting_and_certificate() {
    let p = PolynomialPotential::canonical(1).unwrap();
    let s = p.splitting();
    assert!((s.alpha - 2.0).abs() < 1e-12);
    assert_eq!((s.gamma, s.beta), (0.0, 1.0));
    assert_eq!(s.convex_part, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    let r = p.certify(10.0, 10_000).unwrap();
    assert!(r.passed(), "{:?}", r.violations);
    assert_eq!((r.p, r.q), (1, 2));
    assert_eq!(r.control.len(), 5);
    assert!(r.control.iter().all(|c| c.constant.is_finite() && c.asymptotic.is_finite()));
}

#[test]
fn tilted_well_shifts_gamma() {
    let p = PolynomialPotential::new(&[1.0, 1.0, -2.0, 0.0, 1.0]).unwrap();
    let s = p.splitting();
    assert!((s.alpha - 2.0).abs() < 1e-12);
    assert_eq!((s.gamma, s.beta), (1.0, 1.0));
}

#[test]
fn quartic_power_is_already_convex() {
    let p = PolynomialPotential::new(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
    let s = p.splitting();
    assert_eq!((s.alpha, s.gamma, s.beta), (0.0, 0.0, 0.0));
}
