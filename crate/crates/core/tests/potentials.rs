mod common;

use common::{bisect, central_difference, scaled_error, simpson};
use proptest::prelude::*;
use tumorch::potentials::{validate_f, verify_lemma_bounds, POTENTIAL_NAMES};
use tumorch::{SplitPotential, YosidaPotential};

fn double_well_f(s: f64) -> f64 {
    0.25 * (s * s - 1.0).powi(2)
}

#[test]
fn resolvent_example_at_unit_index() {
    let y = YosidaPotential::new(SplitPotential::double_well(), 1.0).unwrap();
    // r + r³ + r = 2
    let oracle = bisect(&|r| r * r * r + 2.0 * r - 2.0, 0.0, 2.0);
    let j = y.resolvent(2.0).unwrap();
    assert!((j - oracle).abs() < 1e-12);
    assert!((j - 0.770917).abs() < 1e-6);
    let h = y.yosida_derivative(2.0).unwrap();
    assert!((h - 1.229083).abs() < 1e-6);

    // F₀₁(2) = ∫₀² H₀₁ since F₀₁(0) = 0
    let integral = simpson(&|s| y.yosida_derivative(s).unwrap(), 0.0, 2.0, 1e-12);
    let closed = y.convex(2.0).unwrap().f;
    let f0 = |r: f64| 0.25 * r.powi(4) + 0.5 * r * r;
    assert!((closed - (h * h / 2.0 + f0(oracle))).abs() < 1e-12);
    assert!((integral - closed).abs() < 1e-6, "{integral} vs {closed}");
}

#[test]
fn regularization_converges_monotonically() {
    let ms = [1.0, 10.0, 100.0, 1000.0, 1e4];
    for s in [-3.0, -1.5, -0.4, 0.3, 1.0, 1.5, 2.5, 6.0] {
        let gaps: Vec<f64> = ms
            .iter()
            .map(|&m| {
                let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
                (y.eval(s).unwrap().f - double_well_f(s)).abs()
            })
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "s = {s}: {gaps:?}");
        }
        assert!(gaps[4] < 1e-2 * (1.0 + s.powi(4)), "s = {s}: {gaps:?}");
    }
}

#[test]
fn regularized_potential_lies_below_the_original() {
    for m in [1.0, 48.0, 500.0] {
        let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
        for k in -100..=100 {
            let s = 0.07 * k as f64;
            assert!(y.eval(s).unwrap().f <= double_well_f(s) + 1e-12);
        }
    }
}

#[test]
fn lemma_bounds_hold_for_double_well() {
    for m in [10.0, 100.0, 1000.0] {
        let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
        let report = verify_lemma_bounds(&y, 10.0, 10_000).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        let coercivity = report.check("equi_coercivity").unwrap();
        assert_eq!(coercivity.skipped.is_some(), m < 48.0);
    }
}

#[test]
fn equi_coercivity_constant_is_uniform_above_threshold() {
    let base = SplitPotential::double_well();
    let threshold = YosidaPotential::new(base, 1.0)
        .unwrap()
        .coercivity_threshold();
    assert_eq!(threshold, 48.0);
    // Fₘ increases with m, so the gap constant at m = 48 serves every larger m
    let y = YosidaPotential::new(base, threshold).unwrap();
    let c = (-2000..=2000)
        .map(|k| {
            let s = 0.005 * k as f64;
            s * s - y.eval(s).unwrap().f
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(c.is_finite() && c < 10.0);
    for m in [48.0, 100.0, 1e3, 1e4] {
        let y = YosidaPotential::new(base, m).unwrap();
        for k in -2000..=2000 {
            let s = 0.005 * k as f64;
            assert!(
                y.eval(s).unwrap().f >= s * s - c - 1e-12,
                "m = {m}, s = {s}"
            );
        }
    }
}

#[test]
fn builtin_potentials_satisfy_growth_assumptions() {
    for name in POTENTIAL_NAMES {
        let pot = SplitPotential::by_name(name).unwrap();
        let bound = if name == "exponential" { 3.0 } else { 10.0 };
        let report = validate_f(&pot, bound, 10_000);
        assert!(report.passed(), "{}", report.to_text());
    }
}

#[test]
fn overstated_constants_fail() {
    let mut k = SplitPotential::double_well().constants;
    k.c1 = 5.0;
    let pot = SplitPotential::double_well().with_constants(k);
    let report = validate_f(&pot, 10.0, 10_000);
    assert!(!report.passed());
    assert!(!report.check("convex_lower_growth").unwrap().passed);
}

#[test]
fn invalid_index_is_rejected() {
    assert!(YosidaPotential::new(SplitPotential::double_well(), 0.5).is_err());
    assert!(YosidaPotential::new(SplitPotential::double_well(), f64::INFINITY).is_err());
    assert!(YosidaPotential::with_tolerance(SplitPotential::double_well(), 10.0, 1e-3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resolvent_is_nonexpansive(a in -20.0f64..20.0, b in -20.0f64..20.0, m in 1.0f64..1e3) {
        let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
        let (ja, jb) = (y.resolvent(a).unwrap(), y.resolvent(b).unwrap());
        prop_assert!((ja - jb).abs() <= (a - b).abs() + 1e-11);
        // the root sits between 0 and s
        prop_assert!(ja.abs() <= a.abs() && ja * a >= 0.0);
    }

    #[test]
    fn yosida_derivative_is_monotone_and_m_lipschitz(a in -20.0f64..20.0, b in -20.0f64..20.0, m in 1.0f64..1e3) {
        let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
        let (ha, hb) = (y.yosida_derivative(a).unwrap(), y.yosida_derivative(b).unwrap());
        prop_assert!((ha - hb) * (a - b) >= -1e-9);
        prop_assert!((ha - hb).abs() <= m * (a - b).abs() + 1e-8 * m);
    }

    #[test]
    fn regularized_derivatives_match_finite_differences(s in -5.0f64..5.0, m in prop::sample::select(vec![1.0, 10.0, 100.0, 1000.0])) {
        let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
        let d = y.eval(s).unwrap();
        let f = |x: f64| y.eval(x).unwrap().f;
        let fp = |x: f64| y.eval(x).unwrap().fp;
        prop_assert!(scaled_error(central_difference(&f, s, 1e-4), d.fp) <= 1e-5);
        prop_assert!(scaled_error(central_difference(&fp, s, 1e-4), d.fpp) <= 1e-5);
    }

    #[test]
    fn split_parts_sum_to_the_potential(s in -5.0f64..5.0) {
        for name in POTENTIAL_NAMES {
            let pot = SplitPotential::by_name(name).unwrap();
            let d = pot.eval(s).unwrap();
            let sum = pot.convex(s) + pot.perturbation(s);
            prop_assert_eq!(d, sum);
            let f = |x: f64| pot.eval(x).unwrap().f;
            prop_assert!(scaled_error(central_difference(&f, s, 1e-5), d.fp) <= 1e-5);
        }
    }
}
