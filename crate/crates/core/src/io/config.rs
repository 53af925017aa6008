use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, Grid};
use crate::diagnostics::{AttractorConfig, CompareConfig, RefinementConfig};
use crate::dynamics::{InitialData, NonlinearMethod, SchemeConfig, SimState};
use crate::error::{Error, Result};
use crate::potentials::{Potential, SplitPotential, YosidaPotential, POTENTIAL_NAMES};
use crate::proliferation::{ProliferationFn, PROLIFERATION_NAMES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub extents: Vec<f64>,
    pub modes: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            extents: vec![10.0],
            modes: vec![64],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialConfig {
    pub name: String,
    /// Replaces the convex part by its Yosida regularization with this `m`.
    pub yosida_m: Option<f64>,
    pub yosida_tol: Option<f64>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            name: "double_well".into(),
            yosida_m: None,
            yosida_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProliferationConfig {
    pub name: String,
    pub p0: f64,
    /// Overrides of the claimed growth constants of the built-in law.
    pub c5: Option<f64>,
    pub q: Option<f64>,
    pub lipschitz: Option<bool>,
}

impl Default for ProliferationConfig {
    fn default() -> Self {
        Self {
            name: "truncated_quadratic".into(),
            p0: 1.0,
            c5: None,
            q: None,
            lipschitz: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub dt: f64,
    pub t_end: f64,
    pub nonlinear: NonlinearMethod,
    pub tol_n: f64,
    pub max_iter: usize,
    pub dealias: bool,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 0.5,
            nonlinear: NonlinearMethod::Newton,
            tol_n: 1e-10,
            max_iter: 50,
            dealias: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Steps between field snapshots; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub diagnostic_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            snapshot_stride: 0,
            diagnostic_stride: 1,
        }
    }
}

/// Sampling parameters of the assumption validators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub bound: f64,
    pub nsamples: usize,
    pub yosida_m: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            bound: 10.0,
            nsamples: 10_000,
            yosida_m: vec![10.0, 100.0, 1000.0],
        }
    }
}

/// Everything needed to reproduce a run or an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub proliferation: ProliferationConfig,
    pub scheme: SchemeSection,
    pub initial: InitialData,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
    pub compare: CompareConfig,
    pub attractor: AttractorConfig,
    pub refinement: RefinementConfig,
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl RunConfig {
    /// Every violated precondition, prefixed with its field path.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |path: &str, msg: String| out.push(format!("{path}: {msg}"));

        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            bad("grid.dim", format!("must be 1, 2 or 3 (got {})", g.dim));
        }
        if g.extents.len() != g.dim {
            bad(
                "grid.extents",
                format!("expected {} entries, got {}", g.dim, g.extents.len()),
            );
        }
        if g.modes.len() != g.dim {
            bad(
                "grid.modes",
                format!("expected {} entries, got {}", g.dim, g.modes.len()),
            );
        }
        for (i, l) in g.extents.iter().enumerate() {
            if !positive(*l) {
                bad(
                    &format!("grid.extents[{i}]"),
                    format!("must be positive (got {l})"),
                );
            }
        }
        for (i, n) in g.modes.iter().enumerate() {
            if *n < 2 {
                bad(
                    &format!("grid.modes[{i}]"),
                    format!("must be at least 2 (got {n})"),
                );
            }
        }

        let p = &self.potential;
        if SplitPotential::by_name(&p.name).is_none() {
            bad(
                "potential.name",
                format!(
                    "unknown potential '{}'; available: {}",
                    p.name,
                    POTENTIAL_NAMES.join(", ")
                ),
            );
        }
        if let Some(m) = p.yosida_m {
            if !(m >= 1.0 && m.is_finite()) {
                bad(
                    "potential.yosida_m",
                    format!("must be finite and at least 1 (got {m})"),
                );
            }
        }
        if let Some(tol) = p.yosida_tol {
            if !(tol > 0.0 && tol <= 1e-8) {
                bad(
                    "potential.yosida_tol",
                    format!("must lie in (0, 1e-8] (got {tol})"),
                );
            }
        }

        let pr = &self.proliferation;
        if !PROLIFERATION_NAMES.contains(&pr.name.as_str()) {
            bad(
                "proliferation.name",
                format!(
                    "unknown proliferation law '{}'; available: {}",
                    pr.name,
                    PROLIFERATION_NAMES.join(", ")
                ),
            );
        }
        if !(pr.p0 >= 0.0 && pr.p0.is_finite()) {
            bad(
                "proliferation.p0",
                format!("must be finite and nonnegative (got {})", pr.p0),
            );
        }
        if let Some(c5) = pr.c5 {
            if !positive(c5) {
                bad("proliferation.c5", format!("must be positive (got {c5})"));
            }
        }
        if let Some(q) = pr.q {
            if !(1.0..9.0).contains(&q) {
                bad("proliferation.q", format!("must lie in [1, 9) (got {q})"));
            }
        }

        let s = &self.scheme;
        if !positive(s.dt) {
            bad("scheme.dt", format!("must be positive (got {})", s.dt));
        }
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            bad(
                "scheme.t_end",
                format!("must be finite and nonnegative (got {})", s.t_end),
            );
        }
        if !(s.tol_n > 0.0 && s.tol_n <= 1e-6) {
            bad(
                "scheme.tol_n",
                format!("must lie in (0, 1e-6] (got {})", s.tol_n),
            );
        }
        if s.max_iter < 10 {
            bad(
                "scheme.max_iter",
                format!("must be at least 10 (got {})", s.max_iter),
            );
        }

        let i = &self.initial;
        for (path, v) in [
            ("initial.phi_mean", i.phi_mean),
            ("initial.psi_mean", i.psi_mean),
        ] {
            if !v.is_finite() {
                bad(path, format!("must be finite (got {v})"));
            }
        }
        for (path, v) in [
            ("initial.phi_noise", i.phi_noise),
            ("initial.psi_noise", i.psi_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bad(path, format!("must be finite and nonnegative (got {v})"));
            }
        }

        if self.output.diagnostic_stride == 0 {
            bad("output.diagnostic_stride", "must be at least 1".into());
        }

        let v = &self.verify;
        if !positive(v.bound) {
            bad(
                "verify.bound",
                format!("must be positive (got {})", v.bound),
            );
        }
        if v.nsamples < 100 {
            bad(
                "verify.nsamples",
                format!("must be at least 100 (got {})", v.nsamples),
            );
        }
        for (k, m) in v.yosida_m.iter().enumerate() {
            if !(*m >= 1.0 && m.is_finite()) {
                bad(
                    &format!("verify.yosida_m[{k}]"),
                    format!("must be finite and at least 1 (got {m})"),
                );
            }
        }

        let c = &self.compare;
        if c.deltas.is_empty() {
            bad("compare.deltas", "must not be empty".into());
        }
        for (k, d) in c.deltas.iter().enumerate() {
            if !(*d >= 0.0 && d.is_finite()) {
                bad(
                    &format!("compare.deltas[{k}]"),
                    format!("must be finite and nonnegative (got {d})"),
                );
            }
        }

        let a = &self.attractor;
        if a.members == 0 {
            bad("attractor.members", "must be at least 1".into());
        }
        if !positive(a.energy_bound) {
            bad(
                "attractor.energy_bound",
                format!("must be positive (got {})", a.energy_bound),
            );
        }
        if !(a.transient >= 0.0 && a.transient.is_finite()) {
            bad(
                "attractor.transient",
                format!("must be finite and nonnegative (got {})", a.transient),
            );
        }
        if !(a.horizon > a.transient && a.horizon.is_finite()) {
            bad(
                "attractor.horizon",
                format!(
                    "must be finite and exceed the transient (got {})",
                    a.horizon
                ),
            );
        }
        if !(a.max_noise >= 0.0 && a.max_noise.is_finite()) {
            bad(
                "attractor.max_noise",
                format!("must be finite and nonnegative (got {})", a.max_noise),
            );
        }

        let r = &self.refinement;
        for (path, dts) in [
            ("refinement.residual_dts", &r.residual_dts),
            ("refinement.error_dts", &r.error_dts),
        ] {
            if dts.len() < 2 {
                bad(path, "needs at least two step sizes".into());
            }
            for (k, dt) in dts.iter().enumerate() {
                if !positive(*dt) {
                    bad(
                        &format!("{path}[{k}]"),
                        format!("must be positive (got {dt})"),
                    );
                }
            }
        }
        for (path, t) in [
            ("refinement.residual_t_end", r.residual_t_end),
            ("refinement.error_t_end", r.error_t_end),
            ("refinement.spatial_t_end", r.spatial_t_end),
            ("refinement.spatial_dt", r.spatial_dt),
        ] {
            if !positive(t) {
                bad(path, format!("must be positive (got {t})"));
            }
        }
        if r.reference_divisor == 0 {
            bad("refinement.reference_divisor", "must be at least 1".into());
        }
        if r.modes.windows(2).any(|w| w[0] >= w[1]) || r.modes.iter().any(|n| *n < 2) {
            bad(
                "refinement.modes",
                "must be increasing and at least 2".into(),
            );
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Replaces the seeds of the initial data and of the attractor ensemble.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.initial.seed = seed;
        self.attractor.seed = seed;
        self
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.extents.clone(), self.grid.modes.clone())
    }

    pub fn basis(&self) -> Result<Arc<Basis>> {
        Ok(Basis::new(self.grid()?))
    }

    pub fn split_potential(&self) -> Result<SplitPotential> {
        SplitPotential::by_name(&self.potential.name).ok_or_else(|| {
            Error::Config(vec![format!(
                "potential.name: unknown potential '{}'; available: {}",
                self.potential.name,
                POTENTIAL_NAMES.join(", ")
            )])
        })
    }

    pub fn potential(&self) -> Result<Potential> {
        let base = self.split_potential()?;
        Ok(match self.potential.yosida_m {
            None => base.into(),
            Some(m) => {
                let tol = self
                    .potential
                    .yosida_tol
                    .unwrap_or(crate::potentials::DEFAULT_RESOLVENT_TOL);
                YosidaPotential::with_tolerance(base, m, tol)?.into()
            }
        })
    }

    pub fn proliferation(&self) -> Result<ProliferationFn> {
        let pr = &self.proliferation;
        let mut f = ProliferationFn::by_name(&pr.name, pr.p0).ok_or_else(|| {
            Error::Config(vec![format!(
                "proliferation.name: unknown proliferation law '{}'; available: {}",
                pr.name,
                PROLIFERATION_NAMES.join(", ")
            )])
        })?;
        if let Some(c5) = pr.c5 {
            f.c5 = c5;
        }
        if let Some(q) = pr.q {
            f.q = q;
        }
        if let Some(l) = pr.lipschitz {
            f.lipschitz = l;
        }
        Ok(f)
    }

    pub fn scheme(&self) -> Result<SchemeConfig> {
        let s = &self.scheme;
        let mut cfg = SchemeConfig::new(s.dt, s.t_end, self.potential()?, self.proliferation()?);
        cfg.nonlinear = s.nonlinear;
        cfg.tol_n = s.tol_n;
        cfg.max_iter = s.max_iter;
        cfg.dealias = s.dealias;
        Ok(cfg)
    }

    pub fn initial_state(&self, basis: &Arc<Basis>) -> Result<SimState> {
        self.initial.build(basis)
    }
}

/// Reads and validates a JSON configuration. Missing fields take defaults.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_config(cfg: &RunConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(cfg).expect("configuration serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
