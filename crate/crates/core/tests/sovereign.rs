use prodcredit::sovereign::{
    gamma, implied_forward, price_bond, BondQuote, Convention, GrowthSurface, LenderBeliefs,
    TaxProcess,
};
use prodcredit::stochastics::McConfig;
use proptest::prelude::*;

/// Largest interior error of `implied_forward ∘ price_bond` on rows `t ∈ {0, 0.5}`.
fn round_trip_error<F: Fn(f64, f64) -> f64 + Copy>(f: F, step: f64, convention: Convention) -> f64 {
    let s_max = 2.0;
    let ts = [0.0, 0.5];
    let surface = GrowthSurface::from_fn(&ts, s_max, step, f).unwrap();
    let tax = TaxProcess::Constant(120.0);
    let mut worst: f64 = 0.0;
    for &t in &ts {
        let n = ((s_max - t) / step).round() as usize;
        let quotes: Vec<BondQuote> = (0..=n)
            .map(|k| {
                price_bond(
                    &tax,
                    &surface,
                    t,
                    t + (s_max - t) * k as f64 / n as f64,
                    0.01,
                    convention,
                )
                .unwrap()
            })
            .collect();
        let fwd = implied_forward(&quotes, convention).unwrap();
        for p in &fwd[1..fwd.len() - 1] {
            worst = worst.max((p.rate - f(t, p.maturity)).abs());
        }
    }
    worst
}

#[test]
fn constant_and_linear_surfaces_round_trip() {
    for convention in [Convention::AsPrinted, Convention::Discount] {
        assert!(round_trip_error(|_, _| 0.03, 0.01, convention) <= 1e-6);
        assert!(round_trip_error(|t, s| 0.01 + 0.02 * s - 0.01 * t, 0.01, convention) <= 1e-6);
    }
}

#[test]
fn curved_surface_error_is_second_order() {
    let f = |t: f64, s: f64| 0.02 + 0.05 * (s - t) * (s - t) + 0.01 * (2.0 * s).sin();
    let coarse = round_trip_error(f, 0.02, Convention::AsPrinted);
    let fine = round_trip_error(f, 0.01, Convention::AsPrinted);
    assert!(fine <= 1e-4);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "{coarse} / {fine} = {ratio}");
}

#[test]
fn tax_path_scales_price() {
    let surface = GrowthSurface::from_fn(&[1.0], 3.0, 0.1, |_, _| 0.02).unwrap();
    let tax = TaxProcess::Path {
        times: vec![0.0, 2.0],
        values: vec![100.0, 140.0],
    };
    let q = price_bond(&tax, &surface, 1.0, 2.0, 0.05, Convention::AsPrinted).unwrap();
    assert!((q.price - 0.05 * 120.0 * 0.02f64.exp()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prices_are_positive_and_linear_in_share(
        tau in 0.1f64..1e4,
        share in 1e-4f64..0.5,
        k in 0.1f64..10.0,
        level in -0.1f64..0.1,
        slope in -0.05f64..0.05,
        maturity in 0.0f64..3.0,
    ) {
        let surface = GrowthSurface::from_fn(&[0.0], 3.0, 0.05, |_, s| level + slope * s).unwrap();
        let tax = TaxProcess::Constant(tau);
        for convention in [Convention::AsPrinted, Convention::Discount] {
            let a = price_bond(&tax, &surface, 0.0, maturity, share, convention).unwrap();
            let b = price_bond(&tax, &surface, 0.0, maturity, k * share, convention).unwrap();
            prop_assert!(a.price > 0.0);
            prop_assert!((b.price - k * a.price).abs() <= 1e-12 * b.price);
        }
    }

    #[test]
    fn gamma_falls_as_demanded_share_rises(theta in 1e-3f64..0.5, k in 1.01f64..5.0, seed in any::<u64>()) {
        let mc = McConfig { n_paths: 500, seed, ..McConfig::default() };
        for beliefs in [
            LenderBeliefs::PointMass { theta },
            LenderBeliefs::Uniform { low: theta, high: 2.0 * theta },
            LenderBeliefs::LogNormal { median: theta, sigma: 0.3 },
        ] {
            let g = gamma(&beliefs, 0.0, 1.0, &mc).unwrap();
            let g_scaled = gamma(&beliefs.scaled(k), 0.0, 1.0, &mc).unwrap();
            prop_assert!(g_scaled.gamma < g.gamma);
            prop_assert!((g_scaled.gamma * k - g.gamma).abs() <= 1e-9 * g.gamma);
        }
    }
}
