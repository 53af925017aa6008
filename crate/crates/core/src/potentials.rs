//! Potentials `F = F₀ + λ` with a uniformly convex part `F₀` and a
//! perturbation with bounded second derivative, plus their Yosida
//! regularizations.
//!
//! The regularized potential replaces `H₀ = F₀'` by
//! `H₀ₘ(s) = m (s - Jₘ(s))`, where `Jₘ = (I + H₀/m)⁻¹` is the resolvent.
//! Its primitive has the closed form `F₀ₘ(s) = H₀ₘ(s)²/(2m) + F₀(Jₘ(s))`,
//! and `F₀ₘ'' = F₀''(Jₘ) / (1 + F₀''(Jₘ)/m)`, so no quadrature is needed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::report::{symmetric_samples, AssumptionReport, Check, SlackTracker};

/// Value and first two derivatives of a scalar function at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derivs {
    pub f: f64,
    pub fp: f64,
    pub fpp: f64,
}

impl std::ops::Add for Derivs {
    type Output = Derivs;
    fn add(self, rhs: Derivs) -> Derivs {
        Derivs {
            f: self.f + rhs.f,
            fp: self.fp + rhs.fp,
            fpp: self.fpp + rhs.fpp,
        }
    }
}

/// Constants of the growth assumption on `F`:
///
/// ```text
/// c1 (1 + |s|^(ρ-2)) ≤ F₀''(s) ≤ c2 (1 + |s|^(ρ-2)),   F(s) ≥ c3 |s| - c4,   |λ''| ≤ α
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub rho: f64,
    pub alpha: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

type ScalarFn = fn(f64) -> f64;

/// `F = F₀ + λ`, normalized so that `F₀(0) = F₀'(0) = 0`.
#[derive(Clone, Copy, Debug)]
pub struct SplitPotential {
    pub name: &'static str,
    pub f0: ScalarFn,
    pub f0p: ScalarFn,
    pub f0pp: ScalarFn,
    pub lam: ScalarFn,
    pub lamp: ScalarFn,
    pub lampp: ScalarFn,
    pub constants: GrowthConstants,
}

/// Names accepted by [`SplitPotential::by_name`].
pub const POTENTIAL_NAMES: [&str; 4] =
    ["double_well", "convex_quartic", "quadratic", "exponential"];

impl SplitPotential {
    /// `(1 - s²)²/4` split as `F₀ = s⁴/4 + s²/2`, `λ = 1/4 - s²`.
    pub fn double_well() -> Self {
        Self {
            name: "double_well",
            f0: |s| 0.25 * s.powi(4) + 0.5 * s * s,
            f0p: |s| s * s * s + s,
            f0pp: |s| 3.0 * s * s + 1.0,
            lam: |s| 0.25 - s * s,
            lamp: |s| -2.0 * s,
            lampp: |_| -2.0,
            constants: GrowthConstants {
                rho: 4.0,
                alpha: 2.0,
                c1: 1.0,
                c2: 3.0,
                c3: 0.5,
                c4: 1.0,
            },
        }
    }

    /// Convex part of the double well alone (`λ ≡ 0`).
    pub fn convex_quartic() -> Self {
        Self {
            name: "convex_quartic",
            lam: |_| 0.0,
            lamp: |_| 0.0,
            lampp: |_| 0.0,
            constants: GrowthConstants {
                alpha: 0.0,
                ..Self::double_well().constants
            },
            ..Self::double_well()
        }
    }

    /// `F(s) = s²` with `λ ≡ 0`.
    pub fn quadratic() -> Self {
        Self {
            name: "quadratic",
            f0: |s| s * s,
            f0p: |s| 2.0 * s,
            f0pp: |_| 2.0,
            lam: |_| 0.0,
            lamp: |_| 0.0,
            lampp: |_| 0.0,
            constants: GrowthConstants {
                rho: 2.0,
                alpha: 0.0,
                c1: 1.0,
                c2: 1.0,
                c3: 1.0,
                c4: 1.0,
            },
        }
    }

    /// `F(s) = eˢ - s - 1` split as `F₀ = eˢ - 1 - s + s²/2`, `λ = -s²/2`.
    ///
    /// `F₀'' = eˢ + 1` grows faster than any power, so the upper growth
    /// bound only holds on a bounded window; `c2 = (1 + e³)/2` covers
    /// `s ≤ 3`.
    pub fn exponential() -> Self {
        Self {
            name: "exponential",
            f0: |s| s.exp_m1() - s + 0.5 * s * s,
            f0p: |s| s.exp_m1() + s,
            f0pp: |s| s.exp() + 1.0,
            lam: |s| -0.5 * s * s,
            lamp: |s| -s,
            lampp: |_| -1.0,
            constants: GrowthConstants {
                rho: 2.0,
                alpha: 1.0,
                c1: 0.5,
                c2: 0.5 * (1.0 + 3f64.exp()),
                c3: 0.5,
                c4: 1.0,
            },
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "double_well" => Some(Self::double_well()),
            "convex_quartic" => Some(Self::convex_quartic()),
            "quadratic" => Some(Self::quadratic()),
            "exponential" => Some(Self::exponential()),
            _ => None,
        }
    }

    pub fn with_constants(mut self, constants: GrowthConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn convex(&self, s: f64) -> Derivs {
        Derivs {
            f: (self.f0)(s),
            fp: (self.f0p)(s),
            fpp: (self.f0pp)(s),
        }
    }

    pub fn perturbation(&self, s: f64) -> Derivs {
        Derivs {
            f: (self.lam)(s),
            fp: (self.lamp)(s),
            fpp: (self.lampp)(s),
        }
    }

    /// `F`, `F'`, `F''` at `s`.
    pub fn eval(&self, s: f64) -> Result<Derivs> {
        check_finite("potential", s)?;
        Ok(self.convex(s) + self.perturbation(s))
    }
}

fn check_finite(what: &'static str, s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: s })
    }
}

/// Sweeps `[-bound, bound]` and reports the worst slack of every growth
/// inequality together with `|λ''| ≤ α`.
pub fn validate_f(pot: &SplitPotential, bound: f64, nsamples: usize) -> AssumptionReport {
    let k = pot.constants;
    let mut report = AssumptionReport {
        title: format!("growth assumptions for potential '{}'", pot.name),
        checks: Vec::new(),
        fitted: Vec::new(),
    };
    if !(bound > 0.0) || nsamples < 100 {
        report.checks.push(Check {
            name: "preconditions".into(),
            worst_slack: f64::NAN,
            worst_at: f64::NAN,
            passed: false,
            skipped: None,
        });
        return report;
    }
    let mut lower = SlackTracker::new("convex_lower_growth");
    let mut upper = SlackTracker::new("convex_upper_growth");
    let mut coercive = SlackTracker::new("linear_coercivity");
    let mut curvature = SlackTracker::new("perturbation_curvature");
    let mut normalization = SlackTracker::new("normalization");
    normalization.record(0.0, -(pot.f0)(0.0).abs().max((pot.f0p)(0.0).abs()));
    for s in symmetric_samples(bound, nsamples) {
        let weight = 1.0 + s.abs().powf(k.rho - 2.0);
        let f0pp = (pot.f0pp)(s);
        lower.record(s, f0pp - k.c1 * weight);
        upper.record(s, k.c2 * weight - f0pp);
        let f = (pot.f0)(s) + (pot.lam)(s);
        coercive.record(s, f - (k.c3 * s.abs() - k.c4));
        curvature.record(s, k.alpha - (pot.lampp)(s).abs());
    }
    report.checks = vec![
        normalization.finish(),
        lower.finish(),
        upper.finish(),
        coercive.finish(),
        curvature.finish(),
    ];
    report
}

/// Default resolvent tolerance.
pub const DEFAULT_RESOLVENT_TOL: f64 = 1e-12;
const RESOLVENT_MAX_ITER: usize = 100;

/// Yosida-regularized potential `Fₘ = F₀ₘ + λ`.
#[derive(Clone, Copy, Debug)]
pub struct YosidaPotential {
    base: SplitPotential,
    m: f64,
    tol: f64,
}

impl YosidaPotential {
    pub fn new(base: SplitPotential, m: f64) -> Result<Self> {
        Self::with_tolerance(base, m, DEFAULT_RESOLVENT_TOL)
    }

    pub fn with_tolerance(base: SplitPotential, m: f64, tol: f64) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::Scheme {
                field: "potential.yosida_m",
                message: format!("must be a finite value >= 1 (got {m})"),
            });
        }
        if !(tol > 0.0 && tol <= 1e-8) {
            return Err(Error::Scheme {
                field: "potential.yosida_tol",
                message: format!("must lie in (0, 1e-8] (got {tol})"),
            });
        }
        Ok(Self { base, m, tol })
    }

    pub fn base(&self) -> &SplitPotential {
        &self.base
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Index above which `Fₘ(s) ≥ s² - C` holds uniformly: `16 (1 + α)`.
    pub fn coercivity_threshold(&self) -> f64 {
        16.0 * (1.0 + self.base.constants.alpha)
    }

    /// `Jₘ(s)`: the root of `r + F₀'(r)/m = s`.
    ///
    /// Newton from `r = s`, safeguarded by bisection on the bracket
    /// `[min(0, s), max(0, s)]`.
    pub fn resolvent(&self, s: f64) -> Result<f64> {
        check_finite("resolvent", s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        let g = |r: f64| r + (self.base.f0p)(r) / self.m - s;
        let (mut lo, mut hi) = (s.min(0.0), s.max(0.0));
        let mut r = s;
        let mut gr = g(r);
        for _ in 0..RESOLVENT_MAX_ITER {
            if gr == 0.0 {
                return Ok(r);
            }
            if gr > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let slope = 1.0 + (self.base.f0pp)(r) / self.m;
            let mut next = r - gr / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - r).abs();
            r = next;
            gr = g(r);
            if step <= self.tol || hi - lo <= self.tol {
                return Ok(r);
            }
        }
        Err(Error::Resolvent {
            s,
            iterations: RESOLVENT_MAX_ITER,
            residual: gr.abs(),
        })
    }

    /// `H₀ₘ(s) = m (s - Jₘ(s))`.
    pub fn yosida_derivative(&self, s: f64) -> Result<f64> {
        Ok(self.m * (s - self.resolvent(s)?))
    }

    /// `F₀ₘ` and its first two derivatives.
    pub fn convex(&self, s: f64) -> Result<Derivs> {
        let j = self.resolvent(s)?;
        let h = self.m * (s - j);
        let f0pp_j = (self.base.f0pp)(j);
        Ok(Derivs {
            f: h * h / (2.0 * self.m) + (self.base.f0)(j),
            fp: h,
            fpp: f0pp_j / (1.0 + f0pp_j / self.m),
        })
    }

    /// `Fₘ`, `Fₘ'`, `Fₘ''` at `s`.
    pub fn eval(&self, s: f64) -> Result<Derivs> {
        Ok(self.convex(s)? + self.base.perturbation(s))
    }
}

/// Samples the regularized bounds on `[-bound, bound]`:
///
/// * `|F₀ₘ'(s)| ≤ |F₀'(s)|`
/// * `F₀ₘ''(s) ≤ (c2/c1) F₀''(s)`
/// * `F₀ₘ''(s) ≥ c1 / (1 + c1)`
/// * for `m ≥ 16(1 + α)`: `Fₘ(s) ≥ s² - C`, with `C` the largest sampled
///   gap `s² - Fₘ(s)`. The check passes when that gap is strictly smaller
///   at `±bound` than `C`, i.e. the envelope is attained inside the window
///   and `Fₘ` outgrows `s²` at its edges.
pub fn verify_lemma_bounds(
    y: &YosidaPotential,
    bound: f64,
    nsamples: usize,
) -> Result<AssumptionReport> {
    let base = y.base;
    let k = base.constants;
    let mut report = AssumptionReport {
        title: format!(
            "regularization bounds for potential '{}' at m = {}",
            base.name, y.m
        ),
        checks: Vec::new(),
        fitted: vec![("m".into(), y.m), ("m0".into(), y.coercivity_threshold())],
    };
    if !(bound > 0.0) || nsamples < 100 {
        report.checks.push(Check {
            name: "preconditions".into(),
            worst_slack: f64::NAN,
            worst_at: f64::NAN,
            passed: false,
            skipped: None,
        });
        return Ok(report);
    }
    let mut first = SlackTracker::new("first_derivative_bound");
    let mut upper = SlackTracker::new("second_derivative_upper");
    let mut lower = SlackTracker::new("second_derivative_lower");
    let floor = k.c1 / (1.0 + k.c1);
    let mut gap_max = f64::NEG_INFINITY;
    let mut gap_at = f64::NAN;
    let mut edge_gap = f64::NEG_INFINITY;
    let mut c_hat = f64::INFINITY;
    for s in symmetric_samples(bound, nsamples) {
        let reg = y.convex(s)?;
        let f0 = base.convex(s);
        first.record(s, f0.fp.abs() - reg.fp.abs());
        upper.record(s, k.c2 / k.c1 * f0.fpp - reg.fpp);
        lower.record(s, reg.fpp - floor);
        let fm = reg.f + (base.lam)(s);
        let gap = s * s - fm;
        if gap > gap_max {
            gap_max = gap;
            gap_at = s;
        }
        if s.abs() == bound {
            edge_gap = edge_gap.max(gap);
        }
        if s != 0.0 {
            c_hat = c_hat.min(f0.f / (s.abs().powf(k.rho) + s * s));
        }
    }
    report.checks = vec![first.finish(), upper.finish(), lower.finish()];
    if y.m < y.coercivity_threshold() {
        report.checks.push(Check::skipped(
            "equi_coercivity",
            format!("below m0 = {}", y.coercivity_threshold()),
        ));
    } else {
        let margin = gap_max - edge_gap;
        report.checks.push(Check {
            name: "equi_coercivity".into(),
            worst_slack: margin,
            worst_at: gap_at,
            passed: gap_max.is_finite() && margin > 0.0,
            skipped: None,
        });
        report.fitted.push(("coercivity_C".into(), gap_max));
    }
    report.fitted.push(("fitted_c1_hat".into(), c_hat));
    Ok(report)
}

/// Potential used by the time stepper: either the split potential itself
/// or its Yosida regularization.
#[derive(Clone, Copy, Debug)]
pub enum Potential {
    Split(SplitPotential),
    Yosida(YosidaPotential),
}

impl Potential {
    pub fn split(&self) -> &SplitPotential {
        match self {
            Potential::Split(p) => p,
            Potential::Yosida(y) => &y.base,
        }
    }

    pub fn eval(&self, s: f64) -> Result<Derivs> {
        match self {
            Potential::Split(p) => p.eval(s),
            Potential::Yosida(y) => y.eval(s),
        }
    }

    /// Convex part (implicit in the time stepper).
    pub fn convex(&self, s: f64) -> Result<Derivs> {
        check_finite("potential", s)?;
        match self {
            Potential::Split(p) => Ok(p.convex(s)),
            Potential::Yosida(y) => y.convex(s),
        }
    }

    /// `λ'(s)` (explicit in the time stepper).
    pub fn perturbation_slope(&self, s: f64) -> Result<f64> {
        check_finite("potential", s)?;
        Ok((self.split().lamp)(s))
    }
}

impl From<SplitPotential> for Potential {
    fn from(p: SplitPotential) -> Self {
        Potential::Split(p)
    }
}

impl From<YosidaPotential> for Potential {
    fn from(y: YosidaPotential) -> Self {
        Potential::Yosida(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_values() {
        let p = SplitPotential::double_well();
        let d = p.eval(0.0).unwrap();
        assert_eq!((d.f, d.fp, d.fpp), (0.25, 0.0, -1.0));
        let d = p.eval(1.0).unwrap();
        assert_eq!((d.f, d.fp, d.fpp), (0.0, 0.0, 2.0));
        let d = p.eval(-1.0).unwrap();
        assert_eq!((d.f, d.fp), (0.0, 0.0));
    }

    #[test]
    fn split_matches_full_double_well() {
        let p = SplitPotential::double_well();
        for i in -20..=20 {
            let s = i as f64 * 0.17;
            let d = p.eval(s).unwrap();
            assert!((d.f - (1.0 - s * s).powi(2) / 4.0).abs() < 1e-12);
            assert!((d.fp - (s * s * s - s)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_is_domain_error() {
        let p = SplitPotential::double_well();
        assert!(matches!(p.eval(f64::NAN), Err(Error::Domain { .. })));
        let y = YosidaPotential::new(p, 10.0).unwrap();
        assert!(y.resolvent(f64::INFINITY).is_err());
    }

    #[test]
    fn builtins_are_normalized() {
        for name in POTENTIAL_NAMES {
            let p = SplitPotential::by_name(name).unwrap();
            assert_eq!((p.f0)(0.0), 0.0, "{name}");
            assert_eq!((p.f0p)(0.0), 0.0, "{name}");
        }
        assert!(SplitPotential::by_name("logarithmic").is_none());
    }

    #[test]
    fn validate_double_well_passes() {
        let report = validate_f(&SplitPotential::double_well(), 5.0, 1001);
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn validate_detects_tight_upper_constant() {
        let p = SplitPotential::double_well().with_constants(GrowthConstants {
            c2: 2.0,
            ..SplitPotential::double_well().constants
        });
        let report = validate_f(&p, 5.0, 1001);
        assert!(!report.passed());
        let upper = report.check("convex_upper_growth").unwrap();
        assert!(!upper.passed);
        assert_eq!(upper.worst_at.abs(), 5.0);
    }

    #[test]
    fn validate_quadratic() {
        let report = validate_f(&SplitPotential::quadratic(), 10.0, 1000);
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn exponential_only_holds_on_a_window() {
        let p = SplitPotential::exponential();
        assert!(validate_f(&p, 3.0, 1000).passed());
        assert!(!validate_f(&p, 10.0, 1000).passed());
    }

    #[test]
    fn validate_rejects_bad_preconditions() {
        assert!(!validate_f(&SplitPotential::double_well(), 5.0, 10).passed());
        assert!(!validate_f(&SplitPotential::double_well(), -1.0, 1000).passed());
    }

    #[test]
    fn yosida_rejects_bad_parameters() {
        let p = SplitPotential::double_well();
        assert!(YosidaPotential::new(p, 0.5).is_err());
        assert!(YosidaPotential::with_tolerance(p, 10.0, 1e-6).is_err());
        assert!(YosidaPotential::with_tolerance(p, 10.0, 0.0).is_err());
    }

    #[test]
    fn resolvent_at_origin() {
        for m in [1.0, 10.0, 1e4] {
            let y = YosidaPotential::new(SplitPotential::double_well(), m).unwrap();
            assert_eq!(y.resolvent(0.0).unwrap(), 0.0);
            let d = y.eval(0.0).unwrap();
            assert_eq!(d.f, 0.25);
            assert_eq!(d.fp, 0.0);
        }
    }

    #[test]
    fn resolvent_large_m_approaches_identity() {
        let y = YosidaPotential::new(SplitPotential::double_well(), 1e6).unwrap();
        assert!((y.resolvent(1.0).unwrap() - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn resolvent_handles_large_arguments() {
        let y = YosidaPotential::new(SplitPotential::double_well(), 10.0).unwrap();
        for s in [-1e6, -50.0, 50.0, 1e6] {
            let r = y.resolvent(s).unwrap();
            let g = r + (r * r * r + r) / 10.0 - s;
            assert!(g.abs() <= 1e-9 * s.abs(), "s={s} g={g}");
        }
    }

    #[test]
    fn lemma_bounds_below_threshold_skip_coercivity() {
        let y = YosidaPotential::new(SplitPotential::double_well(), 1.0).unwrap();
        let report = verify_lemma_bounds(&y, 5.0, 1001).unwrap();
        let c = report.check("equi_coercivity").unwrap();
        assert!(c.skipped.as_deref().unwrap().contains("below m0"));
        assert!(report.passed(), "{}", report.to_text());
    }

    #[test]
    fn lemma_bounds_pass_at_m_100() {
        let y = YosidaPotential::new(SplitPotential::double_well(), 100.0).unwrap();
        let report = verify_lemma_bounds(&y, 5.0, 1001).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        assert!(report.fitted("coercivity_C").unwrap().is_finite());
    }
}
