//! Spectral Galerkin solver for a diffuse-interface tumor growth model: a
//! Cahn-Hilliard equation for the tumor fraction `φ` coupled to a
//! reaction-diffusion equation for the nutrient-rich water fraction `ψ`
//! through a proliferation function `p(φ)`.
//!
//! The crate is organized bottom-up:
//!
//! * [`basis`]: Neumann cosine eigenbasis of `-Δ + I` on a box, transforms
//!   and the `L²`/`V`/`V'` norms.
//! * [`potentials`]: split potentials `F = F₀ + λ`, assumption validators and
//!   Yosida regularization.
//! * [`proliferation`]: proliferation laws and their validators.
//! * [`dynamics`]: the semi-implicit time stepper.
//! * [`diagnostics`]: energy balance, dual-norm metrics and experiments.
//! * [`io`]: configuration files and output writers.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod benchmark;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod potentials;
pub mod proliferation;
pub mod report;

pub use basis::{Basis, EigenvalueTable, Grid, Norms, SpectralField};
pub use diagnostics::{DualDistance, EnergyBreakdown};
pub use dynamics::{
    chemical_potential, run, step, InitialData, NonlinearMethod, SchemeConfig, SimState,
    StepReport, Trajectory,
};
pub use error::{Error, Result};
pub use io::{load_config, RunConfig};
pub use potentials::{Derivs, GrowthConstants, Potential, SplitPotential, YosidaPotential};
pub use proliferation::{ProliferationFn, ProliferationLaw};
pub use report::AssumptionReport;
