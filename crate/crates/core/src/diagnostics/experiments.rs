//! Experiment drivers: continuous dependence on initial data, the
//! absorbing-set probe and time/space refinement studies.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{energy, separation, DualDistance};
use crate::basis::{Basis, Grid, SpectralField};
use crate::dynamics::{
    advance, noisy_field, run, step_count, Observer, SchemeConfig, SimState, StepReport,
};
use crate::error::{Error, Result};

/// Random zero-mean direction supported on the lowest quarter of the modes
/// along each axis, normalized to `‖η‖_{V'} = 1`.
pub fn unit_dual_direction(basis: &Arc<Basis>, seed: u64) -> SpectralField {
    let grid = basis.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..grid.len())
        .map(|flat| {
            let idx = grid.multi_index(flat);
            let low = (0..grid.dim()).all(|a| 4 * idx[a] <= grid.modes()[a].max(4));
            let u: f64 = rng.random_range(-1.0..1.0);
            if flat != 0 && low {
                u
            } else {
                0.0
            }
        })
        .collect();
    let mut eta = basis.field(coeffs).expect("length matches basis");
    let norm = eta.norms().v_dual;
    eta.coeffs_mut().iter_mut().for_each(|c| *c /= norm);
    eta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub deltas: Vec<f64>,
    pub direction_seed: u64,
    /// Samples are recorded every `sample_stride` steps (and at the end).
    pub sample_stride: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            deltas: vec![1e-3, 5e-4, 2.5e-4],
            direction_seed: 7,
            sample_stride: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DependenceSample {
    pub t: f64,
    pub distance: DualDistance,
    /// `(‖Δφ‖_{V'} + ‖Δψ‖_{V'} + accumulated terms) / δ`
    pub ratio: f64,
    /// `(‖Δφ‖_{V'} + ‖Δψ‖_{V'}) / δ`
    pub dual_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaRun {
    pub delta: f64,
    #[serde(skip)]
    pub samples: Vec<DependenceSample>,
    pub ratio_final: f64,
    pub ratio_max: f64,
    pub dual_ratio_final: f64,
    pub dual_ratio_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub runs: Vec<DeltaRun>,
    /// Largest pairwise quotient of `R(T; δ)` over the nonzero deltas.
    pub ladder_spread: f64,
    /// Ladder quotients all within `[0.8, 1.25]`.
    pub ladder_consistent: bool,
    /// Every recorded ratio is finite.
    pub envelope_bounded: bool,
}

impl CompareReport {
    pub fn passed(&self) -> bool {
        self.ladder_consistent && self.envelope_bounded
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("delta,t,phi_dual,psi_dual,phi_v_l2t,psi_l2t,ratio,dual_ratio\n");
        for run in &self.runs {
            for s in &run.samples {
                let d = s.distance;
                let _ = writeln!(
                    out,
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    run.delta,
                    s.t,
                    d.phi_dual,
                    d.psi_dual,
                    d.phi_v_l2t,
                    d.psi_l2t,
                    s.ratio,
                    s.dual_ratio
                );
            }
        }
        out
    }
}

/// Runs the reference trajectory and a perturbed one in lockstep,
/// accumulating the time-integrated distances by the trapezoid rule.
fn dependence_run(
    initial: &SimState,
    eta: &SpectralField,
    delta: f64,
    scheme: &SchemeConfig,
    stride: usize,
) -> Result<DeltaRun> {
    let mut a = initial.clone();
    let mut b = SimState::new(
        initial.phi.axpy(delta, eta)?,
        initial.psi.clone(),
        initial.t,
    )?;
    let nsteps = step_count(initial.t, scheme.t_end, scheme.dt);
    let scale = |x: f64| if delta == 0.0 { 0.0 } else { x / delta };
    let mut sep = separation(&a, &b)?;
    let mut acc_phi = 0.0;
    let mut acc_psi = 0.0;
    let sample = |t: f64, sep: &super::Separation, acc_phi: f64, acc_psi: f64| {
        let distance = DualDistance {
            phi_v_l2t: acc_phi.sqrt(),
            psi_l2t: acc_psi.sqrt(),
            ..sep.distance
        };
        let dual = distance.phi_dual + distance.psi_dual;
        DependenceSample {
            t,
            distance,
            ratio: scale(dual + distance.phi_v_l2t + distance.psi_l2t),
            dual_ratio: scale(dual),
        }
    };
    let mut samples = vec![sample(a.t, &sep, 0.0, 0.0)];
    for i in 1..=nsteps {
        let target = if i == nsteps {
            scheme.t_end
        } else {
            initial.t + i as f64 * scheme.dt
        };
        let dt = target - a.t;
        let (mut na, _, _) = advance(&a, dt, scheme, 0)?;
        let (mut nb, _, _) = advance(&b, dt, scheme, 0)?;
        na.t = target;
        nb.t = target;
        let next = separation(&na, &nb)?;
        acc_phi += 0.5 * dt * (sep.phi_v.powi(2) + next.phi_v.powi(2));
        acc_psi += 0.5 * dt * (sep.psi_l2.powi(2) + next.psi_l2.powi(2));
        sep = next;
        a = na;
        b = nb;
        if i % stride.max(1) == 0 || i == nsteps {
            samples.push(sample(a.t, &sep, acc_phi, acc_psi));
        }
    }
    let last = samples.last().expect("initial sample is always present");
    let (ratio_final, dual_ratio_final) = (last.ratio, last.dual_ratio);
    let ratio_max = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let dual_ratio_max = samples.iter().map(|s| s.dual_ratio).fold(0.0, f64::max);
    Ok(DeltaRun {
        delta,
        samples,
        ratio_final,
        ratio_max,
        dual_ratio_final,
        dual_ratio_max,
    })
}

/// Perturbs `φ₀` by `δ η` for each `δ` and tracks the separation from the
/// unperturbed trajectory up to `scheme.t_end`. Runs execute in parallel.
pub fn continuous_dependence_experiment(
    scheme: &SchemeConfig,
    initial: &SimState,
    cfg: &CompareConfig,
) -> Result<CompareReport> {
    scheme.validate()?;
    let eta = unit_dual_direction(initial.basis(), cfg.direction_seed);
    let runs = cfg
        .deltas
        .par_iter()
        .map(|&delta| dependence_run(initial, &eta, delta, scheme, cfg.sample_stride))
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = runs
        .iter()
        .filter(|r| r.delta != 0.0)
        .map(|r| r.ratio_final)
        .collect();
    let mut ladder_spread: f64 = 1.0;
    for (i, a) in finals.iter().enumerate() {
        for b in &finals[i + 1..] {
            ladder_spread = ladder_spread.max(a / b).max(b / a);
        }
    }
    let envelope_bounded = runs
        .iter()
        .all(|r| r.samples.iter().all(|s| s.ratio.is_finite()));
    Ok(CompareReport {
        ladder_consistent: ladder_spread <= 1.25,
        ladder_spread,
        envelope_bounded,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttractorConfig {
    pub members: usize,
    pub energy_bound: f64,
    pub transient: f64,
    /// Sup windows are `[transient, horizon]` and `[transient, 2 horizon]`.
    pub horizon: f64,
    /// Upper end of the noise-amplitude bisection.
    pub max_noise: f64,
    /// Member `i` uses seed `seed + 1000 i`.
    pub seed: u64,
    pub sample_stride: usize,
}

impl Default for AttractorConfig {
    fn default() -> Self {
        Self {
            members: 8,
            energy_bound: 2.0,
            transient: 10.0,
            horizon: 50.0,
            max_noise: 1.0,
            seed: 42,
            sample_stride: 10,
        }
    }
}

/// Denominator floor for relative changes of quantities that vanish.
const RELATIVE_FLOOR: f64 = 1e-12;

/// Seed spacing between ensemble members.
pub const MEMBER_SEED_STRIDE: u64 = 1000;

/// Probed quantities, as suprema over a time window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ProbeMaxima {
    pub energy: f64,
    pub phi_v: f64,
    pub h3_proxy: f64,
    pub psi_v: f64,
    pub mass: f64,
}

impl ProbeMaxima {
    fn absorb(&mut self, other: &ProbeMaxima) {
        self.energy = self.energy.max(other.energy);
        self.phi_v = self.phi_v.max(other.phi_v);
        self.h3_proxy = self.h3_proxy.max(other.h3_proxy);
        self.psi_v = self.psi_v.max(other.psi_v);
        self.mass = self.mass.max(other.mass);
    }

    fn values(&self) -> [(&'static str, f64); 5] {
        [
            ("energy", self.energy),
            ("phi_v", self.phi_v),
            ("h3_proxy", self.h3_proxy),
            ("psi_v", self.psi_v),
            ("mass", self.mass),
        ]
    }

    fn lowest() -> Self {
        Self {
            energy: f64::NEG_INFINITY,
            phi_v: f64::NEG_INFINITY,
            h3_proxy: f64::NEG_INFINITY,
            psi_v: f64::NEG_INFINITY,
            mass: f64::NEG_INFINITY,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleMember {
    pub seed: u64,
    pub noise: f64,
    pub initial_energy: f64,
    pub energy_at_transient: f64,
    pub window: ProbeMaxima,
    pub doubled_window: ProbeMaxima,
    /// `(t, energy, phi_v, h3_proxy, psi_v, mass)` every sample stride.
    #[serde(skip)]
    pub samples: Vec<[f64; 6]>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttractorReport {
    pub members: Vec<EnsembleMember>,
    pub ensemble_max: ProbeMaxima,
    pub ensemble_max_doubled: ProbeMaxima,
    /// `|doubled - single| / |single|` per probed quantity.
    pub relative_change: Vec<(String, f64)>,
    pub energy_decreased: bool,
    pub finite: bool,
    pub stable: bool,
}

impl AttractorReport {
    pub fn passed(&self) -> bool {
        self.energy_decreased && self.finite && self.stable
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("member,t,energy,phi_v,h3_proxy,psi_v,mass\n");
        for (i, m) in self.members.iter().enumerate() {
            for s in &m.samples {
                let _ = writeln!(
                    out,
                    "{i},{:e},{:e},{:e},{:e},{:e},{:e}",
                    s[0], s[1], s[2], s[3], s[4], s[5]
                );
            }
        }
        out
    }
}

fn probe(state: &SimState, energy: f64) -> ProbeMaxima {
    ProbeMaxima {
        energy,
        phi_v: state.phi.norms().v,
        h3_proxy: state.phi.h3_moment(),
        psi_v: state.psi.norms().v,
        mass: state.mass(),
    }
}

/// Largest noise amplitude in `[0, max_noise]` (to bisection accuracy)
/// whose initial state has energy at most `bound`.
fn sample_within_energy(
    basis: &Arc<Basis>,
    scheme: &SchemeConfig,
    template: &SimState,
    seed: u64,
    max_noise: f64,
    bound: f64,
) -> Result<(SimState, f64)> {
    let phi_mean = template.phi.mean();
    let build = |amp: f64| -> Result<SimState> {
        let phi = noisy_field(basis, phi_mean, amp, seed)?;
        SimState::new(phi, template.psi.clone(), template.t)
    };
    let e = |s: &SimState| energy(s, &scheme.potential).map(|e| e.total);
    let base = build(0.0)?;
    if e(&base)? > bound {
        return Err(Error::Config(vec![format!(
            "attractor.energy_bound: the noise-free initial state already has energy {} > {}",
            e(&base)?,
            bound
        )]));
    }
    let top = build(max_noise)?;
    if e(&top)? <= bound {
        return Ok((top, max_noise));
    }
    let (mut lo, mut hi) = (0.0, max_noise);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if e(&build(mid)?)? <= bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((build(lo)?, lo))
}

struct ProbeObserver {
    stride: usize,
    transient: f64,
    horizon: f64,
    energy_at_transient: Option<f64>,
    window: ProbeMaxima,
    doubled: ProbeMaxima,
    samples: Vec<[f64; 6]>,
}

impl Observer for ProbeObserver {
    fn observe(
        &mut self,
        index: usize,
        state: &SimState,
        report: Option<&StepReport>,
    ) -> Result<()> {
        let Some(report) = report else {
            return Ok(());
        };
        let t = state.t;
        if t + 1e-9 < self.transient {
            return Ok(());
        }
        let p = probe(state, report.energy.total);
        if self.energy_at_transient.is_none() {
            self.energy_at_transient = Some(p.energy);
        }
        if t <= self.horizon + 1e-9 {
            self.window.absorb(&p);
        }
        self.doubled.absorb(&p);
        if index.is_multiple_of(self.stride) {
            self.samples
                .push([t, p.energy, p.phi_v, p.h3_proxy, p.psi_v, p.mass]);
        }
        Ok(())
    }
}

/// Integrates an ensemble of initial states with energy at most
/// `cfg.energy_bound` up to `2 cfg.horizon` and records suprema of the
/// probed norms after the transient.
///
/// `template` fixes the mean of `φ` and the whole of `ψ`; members differ in
/// seeded nodal noise on `φ`.
pub fn attractor_probe(
    scheme: &SchemeConfig,
    template: &SimState,
    cfg: &AttractorConfig,
) -> Result<AttractorReport> {
    scheme.validate()?;
    let basis = template.basis();
    let mut scheme = scheme.clone();
    scheme.t_end = template.t + 2.0 * cfg.horizon;
    let members = (0..cfg.members)
        .into_par_iter()
        .map(|i| -> Result<EnsembleMember> {
            let seed = cfg.seed.wrapping_add(MEMBER_SEED_STRIDE * i as u64);
            let (initial, noise) = sample_within_energy(
                basis,
                &scheme,
                template,
                seed,
                cfg.max_noise,
                cfg.energy_bound,
            )?;
            let initial_energy = energy(&initial, &scheme.potential)?.total;
            let mut obs = ProbeObserver {
                stride: cfg.sample_stride.max(1),
                transient: template.t + cfg.transient,
                horizon: template.t + cfg.horizon,
                energy_at_transient: None,
                window: ProbeMaxima::lowest(),
                doubled: ProbeMaxima::lowest(),
                samples: Vec::new(),
            };
            run(initial, &scheme, &mut [&mut obs])?;
            Ok(EnsembleMember {
                seed,
                noise,
                initial_energy,
                energy_at_transient: obs.energy_at_transient.unwrap_or(f64::NAN),
                window: obs.window,
                doubled_window: obs.doubled,
                samples: obs.samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ensemble_max = ProbeMaxima::lowest();
    let mut ensemble_max_doubled = ProbeMaxima::lowest();
    for m in &members {
        ensemble_max.absorb(&m.window);
        ensemble_max_doubled.absorb(&m.doubled_window);
    }
    let relative_change: Vec<(String, f64)> = ensemble_max
        .values()
        .iter()
        .zip(ensemble_max_doubled.values())
        .map(|((name, a), (_, b))| {
            (
                name.to_string(),
                (b - a).abs() / a.abs().max(RELATIVE_FLOOR),
            )
        })
        .collect();
    let finite = ensemble_max_doubled
        .values()
        .iter()
        .all(|(_, v)| v.is_finite());
    let energy_decreased = members
        .iter()
        .all(|m| m.energy_at_transient <= m.initial_energy);
    let stable = relative_change.iter().all(|(_, r)| *r <= 0.05);
    Ok(AttractorReport {
        members,
        ensemble_max,
        ensemble_max_doubled,
        relative_change,
        energy_decreased,
        finite,
        stable,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    /// Step sizes of the energy-identity residual ladder, coarsest first,
    /// each half the previous one.
    pub residual_dts: Vec<f64>,
    pub residual_t_end: f64,
    /// Step sizes of the global-error ladder, coarsest first.
    pub error_dts: Vec<f64>,
    pub error_t_end: f64,
    /// The reference solution uses the finest error step divided by this.
    pub reference_divisor: usize,
    /// Mode counts of the spatial ladder; the last one is the reference.
    pub modes: Vec<usize>,
    pub spatial_dt: f64,
    pub spatial_t_end: f64,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            residual_dts: vec![4e-4, 2e-4, 1e-4],
            residual_t_end: 0.5,
            error_dts: vec![4e-3, 2e-3, 1e-3],
            error_t_end: 0.1,
            reference_divisor: 16,
            modes: vec![16, 24, 32, 64],
            spatial_dt: 1e-3,
            spatial_t_end: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualLadder {
    pub dts: Vec<f64>,
    /// Per-step residuals for each step size.
    #[serde(skip)]
    pub residuals: Vec<Vec<f64>>,
    /// Geometric mean over matching steps of `r(τ) / r(τ/2)`.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TemporalLadder {
    pub dts: Vec<f64>,
    pub reference_dt: f64,
    /// `‖φ_τ - φ_ref‖ + ‖ψ_τ - ψ_ref‖` at the final time.
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpatialLadder {
    pub modes: Vec<usize>,
    /// Distance to the finest solution, measured on the shared modes.
    pub errors: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    pub residual: ResidualLadder,
    pub temporal: TemporalLadder,
    pub spatial: SpatialLadder,
}

impl RefinementReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("study,parameter,error,ratio\n");
        for (i, dt) in self.residual.dts.iter().enumerate() {
            let mean = geometric_mean(&self.residual.residuals[i]);
            let ratio = self.residual.ratios.get(i).copied().unwrap_or(f64::NAN);
            let _ = writeln!(out, "residual,{dt:e},{mean:e},{ratio:e}");
        }
        for (i, dt) in self.temporal.dts.iter().enumerate() {
            let ratio = self.temporal.ratios.get(i).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "temporal,{dt:e},{:e},{ratio:e}",
                self.temporal.errors[i]
            );
        }
        for (n, e) in self.spatial.modes.iter().zip(&self.spatial.errors) {
            let _ = writeln!(out, "spatial,{n},{e:e},");
        }
        out
    }
}

fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

/// Geometric mean of `coarse[n] / fine[2n + 1]`: both entries belong to
/// steps ending at the same time when `fine` uses half the step.
pub fn matched_ratio(coarse: &[f64], fine: &[f64]) -> f64 {
    let quotients: Vec<f64> = coarse
        .iter()
        .enumerate()
        .filter_map(|(n, c)| fine.get(2 * n + 1).map(|f| c / f))
        .collect();
    geometric_mean(&quotients)
}

fn final_state(initial: &SimState, scheme: &SchemeConfig, dt: f64, t_end: f64) -> Result<SimState> {
    let mut scheme = scheme.clone();
    scheme.dt = dt;
    scheme.t_end = t_end;
    Ok(run(initial.clone(), &scheme, &mut [])?.final_state)
}

fn state_distance(a: &SimState, b: &SimState) -> Result<f64> {
    Ok(b.phi.sub(&a.phi)?.norms().l2 + b.psi.sub(&a.psi)?.norms().l2)
}

/// Copies coefficients onto a grid with at least as many modes per axis.
fn prolong(field: &SpectralField, fine: &Arc<Basis>) -> Result<SpectralField> {
    let coarse_grid = field.grid();
    let mut out = fine.zeros();
    for flat in 0..coarse_grid.len() {
        let idx = coarse_grid.multi_index(flat);
        let target = fine.grid().flat_index(&idx[..coarse_grid.dim()]);
        out.coeffs_mut()[target] = field.coeffs()[flat];
    }
    Ok(out)
}

/// τ-ladders for the energy-identity residual and the global error, and an
/// `N`-ladder for the spatial error, all from `initial`.
///
/// The spatial ladder starts every resolution from the projection of
/// `initial` onto the coarsest grid so that all runs share initial data.
pub fn refinement_study(
    scheme: &SchemeConfig,
    initial: &SimState,
    cfg: &RefinementConfig,
) -> Result<RefinementReport> {
    scheme.validate()?;
    let residuals = cfg
        .residual_dts
        .par_iter()
        .map(|&dt| {
            let mut s = scheme.clone();
            s.dt = dt;
            s.t_end = initial.t + cfg.residual_t_end;
            let traj = run(initial.clone(), &s, &mut [])?;
            Ok(traj
                .reports
                .iter()
                .map(|r| r.energy_identity_residual)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios = residuals
        .windows(2)
        .map(|w| matched_ratio(&w[0], &w[1]))
        .collect();

    let finest = cfg.error_dts.iter().copied().fold(f64::INFINITY, f64::min);
    let reference_dt = finest / cfg.reference_divisor.max(1) as f64;
    let t_err = initial.t + cfg.error_t_end;
    let mut runs: Vec<f64> = cfg.error_dts.clone();
    runs.push(reference_dt);
    let finals = runs
        .par_iter()
        .map(|&dt| final_state(initial, scheme, dt, t_err))
        .collect::<Result<Vec<_>>>()?;
    let (reference, ladder) = finals.split_last().expect("reference run present");
    let errors = ladder
        .iter()
        .map(|s| state_distance(s, reference))
        .collect::<Result<Vec<_>>>()?;
    let temporal_ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();

    let spatial = if cfg.modes.len() >= 2 {
        let grid = initial.phi.grid();
        let coarse_modes = cfg.modes.iter().copied().min().expect("nonempty");
        let make = |n: usize| -> Result<Arc<Basis>> {
            let modes = vec![n; grid.dim()];
            Ok(Basis::new(Grid::new(grid.extents().to_vec(), modes)?))
        };
        let coarse_basis = make(coarse_modes)?;
        let restrict = |f: &SpectralField| -> Result<SpectralField> {
            let mut out = coarse_basis.zeros();
            for flat in 0..coarse_basis.len() {
                let idx = coarse_basis.grid().multi_index(flat);
                out.coeffs_mut()[flat] = f.coeffs()[f.grid().flat_index(&idx[..grid.dim()])];
            }
            Ok(out)
        };
        let seed_state =
            SimState::new(restrict(&initial.phi)?, restrict(&initial.psi)?, initial.t)?;
        let t_sp = initial.t + cfg.spatial_t_end;
        let finals = cfg
            .modes
            .par_iter()
            .map(|&n| -> Result<SimState> {
                let basis = make(n)?;
                let start = SimState::new(
                    prolong(&seed_state.phi, &basis)?,
                    prolong(&seed_state.psi, &basis)?,
                    initial.t,
                )?;
                final_state(&start, scheme, cfg.spatial_dt, t_sp)
            })
            .collect::<Result<Vec<_>>>()?;
        let (reference, ladder) = finals.split_last().expect("at least two resolutions");
        let errors = ladder
            .iter()
            .map(|s| {
                let phi = prolong(&s.phi, reference.basis())?;
                let psi = prolong(&s.psi, reference.basis())?;
                Ok(phi.sub(&reference.phi)?.norms().l2 + psi.sub(&reference.psi)?.norms().l2)
            })
            .collect::<Result<Vec<_>>>()?;
        SpatialLadder {
            modes: cfg.modes[..cfg.modes.len() - 1].to_vec(),
            errors,
        }
    } else {
        SpatialLadder {
            modes: Vec::new(),
            errors: Vec::new(),
        }
    };

    Ok(RefinementReport {
        residual: ResidualLadder {
            dts: cfg.residual_dts.clone(),
            residuals,
            ratios,
        },
        temporal: TemporalLadder {
            dts: cfg.error_dts.clone(),
            reference_dt,
            errors,
            ratios: temporal_ratios,
        },
        spatial,
    })
}
