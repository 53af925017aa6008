//! Semi-implicit spectral time stepper for the coupled system
//!
//! ```text
//! φ_t = Δμ + p(φ)(ψ - μ),   μ = -Δφ + F'(φ),   ψ_t = Δψ - p(φ)(ψ - μ)
//! ```
//!
//! with no-flux boundaries. One step of size `τ` solves
//!
//! ```text
//! (φ' - φ)/τ = Δ_h μ' + P S
//! μ'         = -Δ_h φ' + P F₀'(φ') + P λ'(φ)
//! (ψ' - ψ)/τ = Δ_h ψ' - P S,          S = p(φ)(ψ - μ(φ))
//! ```
//!
//! where `P` is nodal evaluation followed by projection. The convex part of
//! the potential is implicit, the perturbation and the exchange term are
//! explicit. The `ψ` update is diagonal in coefficient space; the `φ`
//! update is a nonlinear solve done by Newton with matrix-free
//! preconditioned conjugate gradients, falling back to a stabilized fixed
//! point iteration.
//!
//! The zero mode of `Δ_h` vanishes, so the means of `φ` and `ψ` change by
//! exactly `±τ Ŝ₀`; the solver pins the zero mode of `φ'` to that value and
//! total mass is conserved to rounding.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, SpectralField};
use crate::diagnostics::{self, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::proliferation::ProliferationFn;

/// Maximum number of times a failing step is split in half.
pub const MAX_HALVINGS: u32 = 5;

const CG_MAX_ITER: usize = 500;
const CG_REL_TOL: f64 = 1e-11;
const LINE_SEARCH_STEPS: usize = 12;

#[derive(Clone, Debug)]
pub struct SimState {
    pub phi: SpectralField,
    pub psi: SpectralField,
    pub t: f64,
}

impl SimState {
    pub fn new(phi: SpectralField, psi: SpectralField, t: f64) -> Result<Self> {
        if !phi.same_grid(&psi) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { phi, psi, t })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        self.phi.basis()
    }

    /// `mean(φ) + mean(ψ)`.
    pub fn mass(&self) -> f64 {
        self.phi.mean() + self.psi.mean()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearMethod {
    Newton,
    FixedPoint,
}

#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub nonlinear: NonlinearMethod,
    pub tol_n: f64,
    pub max_iter: usize,
    pub dealias: bool,
    pub potential: Potential,
    pub prolif: ProliferationFn,
}

impl SchemeConfig {
    /// Newton, `tol_n = 1e-10`, 50 iterations, no dealiasing.
    pub fn new(
        dt: f64,
        t_end: f64,
        potential: impl Into<Potential>,
        prolif: ProliferationFn,
    ) -> Self {
        Self {
            dt,
            t_end,
            nonlinear: NonlinearMethod::Newton,
            tol_n: 1e-10,
            max_iter: 50,
            dealias: false,
            potential: potential.into(),
            prolif,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Scheme {
                field: "dt",
                message: format!("must be positive (got {})", self.dt),
            });
        }
        if !self.t_end.is_finite() {
            return Err(Error::Scheme {
                field: "t_end",
                message: "must be finite".into(),
            });
        }
        if !(self.tol_n > 0.0 && self.tol_n <= 1e-6) {
            return Err(Error::Scheme {
                field: "tol_n",
                message: format!("must lie in (0, 1e-6] (got {})", self.tol_n),
            });
        }
        if self.max_iter < 10 {
            return Err(Error::Scheme {
                field: "max_iter",
                message: format!("must be at least 10 (got {})", self.max_iter),
            });
        }
        Ok(())
    }
}

/// Diagnostics recorded after a step.
#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub energy: EnergyBreakdown,
    /// `‖∇μ‖² + ‖∇ψ‖² + ∫ p(φ)(μ - ψ)²` at the post-step state.
    pub dissipation: f64,
    /// `∫ p(φ)(μ - ψ)²` alone.
    pub source_dissipation: f64,
    pub mass: f64,
    pub energy_identity_residual: f64,
    pub inner_iters: usize,
    pub inner_residual: f64,
    pub halvings: u32,
}

/// Nodal evaluation of `f` followed by projection (and optional 2/3 filter).
pub(crate) fn project_nodal(basis: &Arc<Basis>, nodal: &[f64], dealias: bool) -> Result<Vec<f64>> {
    let mut coeffs = basis.analyze(nodal)?;
    if dealias {
        basis.dealias(&mut coeffs);
    }
    Ok(coeffs)
}

/// `μ = -Δ_h φ + P F'(φ)`.
pub fn chemical_potential(
    phi: &SpectralField,
    pot: &Potential,
    dealias: bool,
) -> Result<SpectralField> {
    let basis = phi.basis();
    let nodal = phi
        .to_nodal()
        .into_iter()
        .map(|s| pot.eval(s).map(|d| d.fp))
        .collect::<Result<Vec<_>>>()?;
    let fp = project_nodal(basis, &nodal, dealias)?;
    let coeffs = phi
        .coeffs()
        .iter()
        .zip(fp)
        .enumerate()
        .map(|(k, (c, g))| basis.laplacian_symbol(k) * c + g)
        .collect();
    basis.field(coeffs)
}

/// Projected exchange term `P[p(φ)(ψ - μ)]` and the chemical potential it
/// was built from.
pub fn exchange_term(
    state: &SimState,
    pot: &Potential,
    prolif: &ProliferationFn,
    dealias: bool,
) -> Result<(SpectralField, SpectralField)> {
    let basis = state.basis();
    let mu = chemical_potential(&state.phi, pot, dealias)?;
    if prolif.is_zero() {
        return Ok((basis.zeros(), mu));
    }
    let phi = state.phi.to_nodal();
    let psi = state.psi.to_nodal();
    let mu_nodal = mu.to_nodal();
    let source: Vec<f64> = phi
        .iter()
        .zip(&psi)
        .zip(&mu_nodal)
        .map(|((f, p), m)| prolif.value(*f) * (p - m))
        .collect();
    let coeffs = project_nodal(basis, &source, dealias)?;
    Ok((basis.field(coeffs)?, mu))
}

/// Work counters of one nonlinear solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// The implicit `φ` equation
/// `R(c) = c + τ K (K c + Π P F₀'(c)) - b = 0` in coefficient space, with
/// `K = -Δ_h` and the zero mode pinned.
struct PhiSystem<'a> {
    basis: &'a Arc<Basis>,
    tau: f64,
    symbol: Vec<f64>,
    rhs: Vec<f64>,
    pot: &'a Potential,
    dealias: bool,
}

struct Evaluation {
    residual: Vec<f64>,
    norm: f64,
    curvature: Vec<f64>,
    convex_slope: Vec<f64>,
}

impl PhiSystem<'_> {
    fn evaluate(&self, coeffs: &[f64]) -> Result<Evaluation> {
        let nodal = self.basis.synthesize(coeffs)?;
        let mut slope = Vec::with_capacity(nodal.len());
        let mut curvature = Vec::with_capacity(nodal.len());
        for s in nodal {
            let d = self.pot.convex(s)?;
            slope.push(d.fp);
            curvature.push(d.fpp);
        }
        let g = project_nodal(self.basis, &slope, self.dealias)?;
        let residual: Vec<f64> = coeffs
            .iter()
            .zip(&g)
            .zip(&self.symbol)
            .zip(&self.rhs)
            .map(|(((c, g), k), b)| c + self.tau * k * (k * c + g) - b)
            .collect();
        let norm = l2(&residual);
        Ok(Evaluation {
            residual,
            norm,
            curvature,
            convex_slope: g,
        })
    }

    /// `(K⁻¹ + τ K + τ Π M Π) v` on the nonzero modes, `M = P diag(d) P*`.
    fn symmetric_jacobian(&self, curvature: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let mut filtered = v.to_vec();
        if self.dealias {
            self.basis.dealias(&mut filtered);
        }
        let nodal = self.basis.synthesize(&filtered)?;
        let weighted: Vec<f64> = nodal.iter().zip(curvature).map(|(a, d)| a * d).collect();
        let m = project_nodal(self.basis, &weighted, self.dealias)?;
        Ok(v.iter()
            .zip(&m)
            .zip(&self.symbol)
            .map(|((v, m), &k)| {
                if k == 0.0 {
                    0.0
                } else {
                    v / k + self.tau * k * v + self.tau * m
                }
            })
            .collect())
    }

    /// Newton correction from `J δ = -R`, solved as the symmetric system
    /// `K⁻¹ J δ = -K⁻¹ R` by diagonally preconditioned CG.
    fn newton_direction(&self, eval: &Evaluation) -> Result<Vec<f64>> {
        let n = self.symbol.len();
        let mean_curv = eval.curvature.iter().sum::<f64>() / n as f64;
        let diag: Vec<f64> = self
            .symbol
            .iter()
            .map(|&k| {
                if k == 0.0 {
                    1.0
                } else {
                    (1.0 / k + self.tau * k + self.tau * mean_curv).max(f64::MIN_POSITIVE)
                }
            })
            .collect();
        let b: Vec<f64> = eval
            .residual
            .iter()
            .zip(&self.symbol)
            .map(|(r, &k)| if k == 0.0 { 0.0 } else { -r / k })
            .collect();
        let b_norm = l2(&b);
        let mut x = vec![0.0; n];
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut r = b;
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..CG_MAX_ITER {
            let ap = self.symmetric_jacobian(&eval.curvature, &p)?;
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if l2(&r) <= CG_REL_TOL * b_norm {
                break;
            }
            z = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Ok(x)
    }

    fn newton(
        &self,
        coeffs: &mut Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(SolveStats, bool)> {
        let mut eval = self.evaluate(coeffs)?;
        for it in 0..max_iter {
            if eval.norm <= tol {
                return Ok((
                    SolveStats {
                        iterations: it,
                        residual: eval.norm,
                    },
                    true,
                ));
            }
            let delta = self.newton_direction(&eval)?;
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..LINE_SEARCH_STEPS {
                let trial: Vec<f64> = coeffs
                    .iter()
                    .zip(&delta)
                    .map(|(c, d)| c + step * d)
                    .collect();
                let trial_eval = self.evaluate(&trial)?;
                if trial_eval.norm < eval.norm {
                    accepted = Some((trial, trial_eval));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((trial, trial_eval)) => {
                    *coeffs = trial;
                    eval = trial_eval;
                }
                None => {
                    // stagnation
                    return Ok((
                        SolveStats {
                            iterations: it,
                            residual: eval.norm,
                        },
                        false,
                    ));
                }
            }
        }
        Ok((
            SolveStats {
                iterations: max_iter,
                residual: eval.norm,
            },
            eval.norm <= tol,
        ))
    }

    /// Linearly stabilized fixed point:
    /// `(1 + τK² + τσK) c' = b - τK (g(c) - σ c)` with `σ ≥ max F₀''`.
    fn fixed_point(
        &self,
        coeffs: &mut [f64],
        tol: f64,
        max_iter: usize,
    ) -> Result<(SolveStats, bool)> {
        let mut eval = self.evaluate(coeffs)?;
        let mut sigma = eval.curvature.iter().copied().fold(0.0, f64::max);
        for it in 0..max_iter {
            if eval.norm <= tol {
                return Ok((
                    SolveStats {
                        iterations: it,
                        residual: eval.norm,
                    },
                    true,
                ));
            }
            sigma = eval.curvature.iter().copied().fold(sigma, f64::max);
            for (i, c) in coeffs.iter_mut().enumerate() {
                let k = self.symbol[i];
                if k == 0.0 {
                    continue;
                }
                let t = self.tau;
                *c = (self.rhs[i] - t * k * (eval.convex_slope[i] - sigma * *c))
                    / (1.0 + t * k * k + t * sigma * k);
            }
            eval = self.evaluate(coeffs)?;
        }
        Ok((
            SolveStats {
                iterations: max_iter,
                residual: eval.norm,
            },
            eval.norm <= tol,
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Advances `state` by `dt` without computing diagnostics.
pub fn solve_step(state: &SimState, dt: f64, cfg: &SchemeConfig) -> Result<(SimState, SolveStats)> {
    let basis = state.basis();
    let n = basis.len();
    let symbol: Vec<f64> = (0..n).map(|k| basis.laplacian_symbol(k)).collect();
    let (source, _) = exchange_term(state, &cfg.potential, &cfg.prolif, cfg.dealias)?;
    let source = source.coeffs();

    let phi_nodal = state.phi.to_nodal();
    let explicit = phi_nodal
        .iter()
        .map(|s| cfg.potential.perturbation_slope(*s))
        .collect::<Result<Vec<_>>>()?;
    let explicit = project_nodal(basis, &explicit, cfg.dealias)?;

    let rhs: Vec<f64> = (0..n)
        .map(|k| state.phi.coeffs()[k] + dt * source[k] - dt * symbol[k] * explicit[k])
        .collect();
    let psi: Vec<f64> = (0..n)
        .map(|k| (state.psi.coeffs()[k] - dt * source[k]) / (1.0 + dt * symbol[k]))
        .collect();

    let system = PhiSystem {
        basis,
        tau: dt,
        symbol,
        rhs,
        pot: &cfg.potential,
        dealias: cfg.dealias,
    };
    let mut phi = state.phi.coeffs().to_vec();
    phi[0] = system.rhs[0];
    let (mut stats, mut converged) = match cfg.nonlinear {
        NonlinearMethod::Newton => system.newton(&mut phi, cfg.tol_n, cfg.max_iter)?,
        NonlinearMethod::FixedPoint => system.fixed_point(&mut phi, cfg.tol_n, cfg.max_iter)?,
    };
    if !converged && cfg.nonlinear == NonlinearMethod::Newton {
        let (fp_stats, fp_ok) = system.fixed_point(&mut phi, cfg.tol_n, 20 * cfg.max_iter)?;
        stats = SolveStats {
            iterations: stats.iterations + fp_stats.iterations,
            residual: fp_stats.residual,
        };
        converged = fp_ok;
    }
    if !converged || phi.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonlinearSolve {
            t: state.t,
            iterations: stats.iterations,
            residual: stats.residual,
        });
    }
    phi[0] = system.rhs[0];
    Ok((
        SimState {
            phi: basis.field(phi)?,
            psi: basis.field(psi)?,
            t: state.t + dt,
        },
        stats,
    ))
}

/// Builds the post-step report from the states on both ends of an interval.
pub fn step_report(
    before: &SimState,
    after: &SimState,
    cfg: &SchemeConfig,
    stats: SolveStats,
    halvings: u32,
) -> Result<StepReport> {
    let dt = after.t - before.t;
    let e_before = diagnostics::energy(before, &cfg.potential)?;
    let e_after = diagnostics::energy(after, &cfg.potential)?;
    let d = diagnostics::dissipation(after, &cfg.potential, &cfg.prolif, cfg.dealias)?;
    Ok(StepReport {
        t: after.t,
        dt,
        energy: e_after,
        dissipation: d.total(),
        source_dissipation: d.source,
        mass: after.mass(),
        energy_identity_residual: ((e_after.total - e_before.total) / dt + d.total()).abs(),
        inner_iters: stats.iterations,
        inner_residual: stats.residual,
        halvings,
    })
}

/// One step of size `cfg.dt` with diagnostics.
pub fn step(state: &SimState, cfg: &SchemeConfig) -> Result<(SimState, StepReport)> {
    cfg.validate()?;
    let (next, stats) = solve_step(state, cfg.dt, cfg)?;
    let report = step_report(state, &next, cfg, stats, 0)?;
    Ok((next, report))
}

/// Advances by `dt`, splitting the interval in half on solver failure.
pub(crate) fn advance(
    state: &SimState,
    dt: f64,
    cfg: &SchemeConfig,
    depth: u32,
) -> Result<(SimState, SolveStats, u32)> {
    match solve_step(state, dt, cfg) {
        Ok((next, stats)) => Ok((next, stats, depth)),
        Err(e) if e.is_solver_failure() && depth < MAX_HALVINGS => {
            let (mid, s1, d1) = advance(state, 0.5 * dt, cfg, depth + 1)?;
            let (end, s2, d2) = advance(&mid, 0.5 * dt, cfg, depth + 1)?;
            let stats = SolveStats {
                iterations: s1.iterations + s2.iterations,
                residual: s1.residual.max(s2.residual),
            };
            Ok((end, stats, d1.max(d2)))
        }
        Err(e) => Err(e),
    }
}

/// Receives the state after every `stride()`-th step (and the initial state).
pub trait Observer {
    fn stride(&self) -> usize {
        1
    }

    fn observe(
        &mut self,
        index: usize,
        state: &SimState,
        report: Option<&StepReport>,
    ) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(usize, &SimState, Option<&StepReport>) -> Result<()>,
{
    fn observe(
        &mut self,
        index: usize,
        state: &SimState,
        report: Option<&StepReport>,
    ) -> Result<()> {
        self(index, state, report)
    }
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub reports: Vec<StepReport>,
    pub final_state: SimState,
}

/// Number of steps needed to reach `t_end` from `t0`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> usize {
    let span = t_end - t0;
    if span <= 0.0 {
        return 0;
    }
    (span / dt - 1e-9).ceil().max(1.0) as usize
}

/// Integrates from `initial` to `cfg.t_end`.
pub fn run(
    initial: SimState,
    cfg: &SchemeConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    cfg.validate()?;
    let t0 = initial.t;
    let nsteps = step_count(t0, cfg.t_end, cfg.dt);
    for obs in observers.iter_mut() {
        obs.observe(0, &initial, None)?;
    }
    let mut reports = Vec::with_capacity(nsteps);
    let mut state = initial;
    for i in 1..=nsteps {
        let target = if i == nsteps {
            cfg.t_end
        } else {
            t0 + i as f64 * cfg.dt
        };
        let dt = target - state.t;
        let (mut next, stats, halvings) = advance(&state, dt, cfg, 0)?;
        next.t = target;
        let report = step_report(&state, &next, cfg, stats, halvings)?;
        for obs in observers.iter_mut() {
            let stride = obs.stride().max(1);
            if i % stride == 0 || i == nsteps {
                obs.observe(i, &next, Some(&report))?;
            }
        }
        reports.push(report);
        state = next;
    }
    Ok(Trajectory {
        reports,
        final_state: state,
    })
}

/// Seed offsets used to derive per-field generators from one run seed.
pub const PHI_SEED_OFFSET: u64 = 0;
pub const PSI_SEED_OFFSET: u64 = 1;

/// Constant means plus seeded uniform nodal noise in `[-noise, noise]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialData {
    pub phi_mean: f64,
    pub phi_noise: f64,
    pub psi_mean: f64,
    pub psi_noise: f64,
    pub seed: u64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            phi_mean: 0.1,
            phi_noise: 0.1,
            psi_mean: 0.5,
            psi_noise: 0.0,
            seed: 42,
        }
    }
}

/// `mean + U(-amplitude, amplitude)` at every node.
pub fn noisy_field(
    basis: &Arc<Basis>,
    mean: f64,
    amplitude: f64,
    seed: u64,
) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodal: Vec<f64> = (0..basis.len())
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            mean + amplitude * u
        })
        .collect();
    basis.to_spectral(&nodal)
}

impl InitialData {
    pub fn build(&self, basis: &Arc<Basis>) -> Result<SimState> {
        let phi = noisy_field(
            basis,
            self.phi_mean,
            self.phi_noise,
            self.seed.wrapping_add(PHI_SEED_OFFSET),
        )?;
        let psi = noisy_field(
            basis,
            self.psi_mean,
            self.psi_noise,
            self.seed.wrapping_add(PSI_SEED_OFFSET),
        )?;
        SimState::new(phi, psi, 0.0)
    }
}
