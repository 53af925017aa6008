//! Proliferation functions `p ≥ 0` coupling the two chemical potentials.

use crate::error::{Error, Result};
use crate::report::{symmetric_samples, AssumptionReport, Check, SlackTracker, SLACK_TOLERANCE};

type ScalarFn = fn(f64) -> f64;

#[derive(Clone, Copy, Debug)]
pub enum ProliferationLaw {
    /// `p₀ (1 - s²)` on `[-1, 1]`, zero outside. Lipschitz but not `C¹`.
    TruncatedQuadratic {
        p0: f64,
    },
    /// `p₀ (1 - s²)₊²`, a `C¹` surrogate of the truncated quadratic.
    SmoothBump {
        p0: f64,
    },
    Constant {
        p0: f64,
    },
    Custom {
        p: ScalarFn,
        dp: ScalarFn,
    },
}

/// Names accepted by [`ProliferationFn::by_name`].
pub const PROLIFERATION_NAMES: [&str; 3] = ["truncated_quadratic", "smooth_bump", "constant"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProliferationValue {
    pub p: f64,
    pub pp: f64,
}

/// A proliferation law with its claimed growth constants
/// `0 ≤ p(s) ≤ c5 (1 + |s|^q)` and, when `lipschitz` is set,
/// `|p'(s)| ≤ c5 (1 + |s|^(q-1))`.
#[derive(Clone, Copy, Debug)]
pub struct ProliferationFn {
    pub law: ProliferationLaw,
    pub c5: f64,
    pub q: f64,
    pub lipschitz: bool,
}

impl ProliferationFn {
    pub fn truncated_quadratic(p0: f64) -> Self {
        Self {
            law: ProliferationLaw::TruncatedQuadratic { p0 },
            c5: 2.0 * p0,
            q: 2.0,
            lipschitz: true,
        }
    }

    pub fn smooth_bump(p0: f64) -> Self {
        Self {
            law: ProliferationLaw::SmoothBump { p0 },
            // max |p'| = 8 p0 / (3 sqrt 3) < 2 p0
            c5: 2.0 * p0,
            q: 2.0,
            lipschitz: true,
        }
    }

    pub fn constant(p0: f64) -> Self {
        Self {
            law: ProliferationLaw::Constant { p0 },
            c5: p0.max(f64::MIN_POSITIVE),
            q: 1.0,
            lipschitz: true,
        }
    }

    /// `p ≡ 0`: the Cahn-Hilliard and diffusion equations decouple.
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn custom(p: ScalarFn, dp: ScalarFn, c5: f64, q: f64, lipschitz: bool) -> Self {
        Self {
            law: ProliferationLaw::Custom { p, dp },
            c5,
            q,
            lipschitz,
        }
    }

    pub fn by_name(name: &str, p0: f64) -> Option<Self> {
        match name {
            "truncated_quadratic" => Some(Self::truncated_quadratic(p0)),
            "smooth_bump" => Some(Self::smooth_bump(p0)),
            "constant" => Some(Self::constant(p0)),
            _ => None,
        }
    }

    /// True when `p` vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self.law {
            ProliferationLaw::TruncatedQuadratic { p0 }
            | ProliferationLaw::SmoothBump { p0 }
            | ProliferationLaw::Constant { p0 } => p0 == 0.0,
            ProliferationLaw::Custom { .. } => false,
        }
    }

    /// `p(s)` without the finiteness check; used on nodal values the
    /// solver has already validated.
    pub(crate) fn value(&self, s: f64) -> f64 {
        match self.law {
            ProliferationLaw::TruncatedQuadratic { p0 } => {
                if s.abs() <= 1.0 {
                    p0 * (1.0 - s * s)
                } else {
                    0.0
                }
            }
            ProliferationLaw::SmoothBump { p0 } => {
                let b = (1.0 - s * s).max(0.0);
                p0 * b * b
            }
            ProliferationLaw::Constant { p0 } => p0,
            ProliferationLaw::Custom { p, .. } => p(s),
        }
    }

    fn slope(&self, s: f64) -> f64 {
        match self.law {
            // one-sided from inside the support at s = ±1
            ProliferationLaw::TruncatedQuadratic { p0 } => {
                if s.abs() <= 1.0 {
                    -2.0 * p0 * s
                } else {
                    0.0
                }
            }
            ProliferationLaw::SmoothBump { p0 } => -4.0 * p0 * s * (1.0 - s * s).max(0.0),
            ProliferationLaw::Constant { .. } => 0.0,
            ProliferationLaw::Custom { dp, .. } => dp(s),
        }
    }

    pub fn eval(&self, s: f64) -> Result<ProliferationValue> {
        if !s.is_finite() {
            return Err(Error::Domain {
                what: "proliferation",
                value: s,
            });
        }
        Ok(ProliferationValue {
            p: self.value(s),
            pp: self.slope(s),
        })
    }
}

/// Tail growth exponent of `|g|` from its maxima over `[b/4, b/2]` and
/// `[b/2, b]`, measured between the abscissae where they are attained.
fn tail_exponent(samples: &[(f64, f64)], bound: f64) -> f64 {
    let band_max = |lo: f64, hi: f64| {
        samples
            .iter()
            .filter(|(s, _)| s.abs() >= lo && s.abs() <= hi)
            .map(|(s, g)| (s.abs(), g.abs()))
            .fold(
                (0.0_f64, 0.0_f64),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
    };
    let (s_in, inner) = band_max(0.25 * bound, 0.5 * bound);
    let (s_out, outer) = band_max(0.5 * bound, bound);
    if outer == 0.0 {
        return f64::NEG_INFINITY;
    }
    if inner == 0.0 {
        return f64::INFINITY;
    }
    if s_out <= s_in {
        // both maxima at the shared edge: no growth beyond it
        return 0.0;
    }
    (outer / inner).ln() / (s_out / s_in).ln()
}

/// Samples `p` on `[-bound, bound]` and checks nonnegativity, the growth
/// bound, local Lipschitz continuity via divided differences and, when
/// claimed, the derivative growth bound.
///
/// The derivative bound is certified either with the stated `c5` or, when
/// that fails, by a fitted constant whose existence is backed by a tail
/// growth exponent not exceeding `q - 1`.
pub fn validate_p(pf: &ProliferationFn, bound: f64, nsamples: usize) -> AssumptionReport {
    let mut report = AssumptionReport {
        title: format!(
            "proliferation assumptions (c5 = {}, q = {}, lipschitz claimed: {})",
            pf.c5, pf.q, pf.lipschitz
        ),
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
    let samples: Vec<f64> = symmetric_samples(bound, nsamples).collect();
    let mut nonneg = SlackTracker::new("nonnegativity");
    let mut growth = SlackTracker::new("growth");
    let mut lipschitz = SlackTracker::new("local_lipschitz");
    let mut slopes = Vec::with_capacity(samples.len());
    let mut fitted_c5 = 0.0_f64;
    for (i, &s) in samples.iter().enumerate() {
        let p = pf.value(s);
        nonneg.record(s, p);
        growth.record(s, pf.c5 * (1.0 + s.abs().powf(pf.q)) - p);
        let dp = pf.slope(s);
        slopes.push((s, dp));
        fitted_c5 = fitted_c5.max(dp.abs() / (1.0 + s.abs().powf(pf.q - 1.0)));
        if let Some(&t) = samples.get(i + 1) {
            let quotient = ((pf.value(t) - p) / (t - s)).abs();
            let reach = s.abs().max(t.abs());
            // secant slope is bounded by the derivative envelope over the pair
            let envelope = pf.c5.max(fitted_c5) * (1.0 + reach.powf(pf.q - 1.0));
            lipschitz.record(s, envelope - quotient);
        }
    }
    report.checks = vec![nonneg.finish(), growth.finish(), lipschitz.finish()];
    let exponent = tail_exponent(&slopes, bound);
    report
        .fitted
        .push(("fitted_c5_derivative".into(), fitted_c5));
    report
        .fitted
        .push(("derivative_tail_exponent".into(), exponent));
    if pf.lipschitz {
        let slack = pf.c5 - fitted_c5;
        let certified = slack >= SLACK_TOLERANCE || exponent <= pf.q - 1.0 + 1e-6;
        report.checks.push(Check {
            name: "derivative_growth".into(),
            worst_slack: slack,
            worst_at: f64::NAN,
            passed: fitted_c5.is_finite() && certified,
            skipped: None,
        });
    } else {
        report
            .checks
            .push(Check::skipped("derivative_growth", "not claimed"));
    }
    report
}
