//! Energy, dissipation and dual-norm metrics, plus the experiment drivers
//! built on top of them.

mod experiments;

pub use experiments::{
    attractor_probe, continuous_dependence_experiment, matched_ratio, refinement_study,
    unit_dual_direction, AttractorConfig, AttractorReport, CompareConfig, CompareReport, DeltaRun,
    DependenceSample, EnsembleMember, ProbeMaxima, RefinementConfig, RefinementReport,
    ResidualLadder, SpatialLadder, TemporalLadder, MEMBER_SEED_STRIDE,
};

use serde::Serialize;

use crate::dynamics::{chemical_potential, SimState};
use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::proliferation::ProliferationFn;

/// `E(φ, ψ) = ½‖∇φ‖² + ½‖ψ‖² + ∫ F(φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub grad_phi_half: f64,
    pub psi_half: f64,
    pub f_integral: f64,
    pub total: f64,
}

pub fn energy(state: &SimState, pot: &Potential) -> Result<EnergyBreakdown> {
    let grad_phi_half = 0.5 * state.phi.grad_norm_sq();
    let psi_half = 0.5 * state.psi.norms().l2.powi(2);
    let cell = state.phi.grid().cell_volume();
    let mut f_integral = 0.0;
    for s in state.phi.to_nodal() {
        f_integral += pot.eval(s)?.f;
    }
    f_integral *= cell;
    Ok(EnergyBreakdown {
        grad_phi_half,
        psi_half,
        f_integral,
        total: grad_phi_half + psi_half + f_integral,
    })
}

/// The three dissipation terms of the energy balance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Dissipation {
    /// `‖∇μ‖²`
    pub grad_mu: f64,
    /// `‖∇ψ‖²`
    pub grad_psi: f64,
    /// `∫ p(φ)(μ - ψ)²`
    pub source: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.grad_mu + self.grad_psi + self.source
    }
}

pub fn dissipation(
    state: &SimState,
    pot: &Potential,
    prolif: &ProliferationFn,
    dealias: bool,
) -> Result<Dissipation> {
    let mu = chemical_potential(&state.phi, pot, dealias)?;
    let source = if prolif.is_zero() {
        0.0
    } else {
        let cell = state.phi.grid().cell_volume();
        let phi = state.phi.to_nodal();
        let psi = state.psi.to_nodal();
        let mu = mu.to_nodal();
        cell * phi
            .iter()
            .zip(&psi)
            .zip(&mu)
            .map(|((f, p), m)| prolif.value(*f) * (m - p).powi(2))
            .sum::<f64>()
    };
    Ok(Dissipation {
        grad_mu: mu.grad_norm_sq(),
        grad_psi: state.psi.grad_norm_sq(),
        source,
    })
}

/// `|[E(after) - E(before)]/τ + D(after)|`, with `τ = after.t - before.t`.
pub fn energy_identity_residual(
    before: &SimState,
    after: &SimState,
    pot: &Potential,
    prolif: &ProliferationFn,
    dealias: bool,
) -> Result<f64> {
    let dt = after.t - before.t;
    let de = energy(after, pot)?.total - energy(before, pot)?.total;
    let d = dissipation(after, pot, prolif, dealias)?;
    Ok((de / dt + d.total()).abs())
}

/// Separation of two states in the norms of the stability estimate.
///
/// The time-integrated fields are left at zero here; experiment drivers
/// accumulate them along trajectories.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DualDistance {
    pub phi_dual: f64,
    pub psi_dual: f64,
    /// `(∫₀ᵗ ‖φ₂ - φ₁‖²_V)^{1/2}`
    pub phi_v_l2t: f64,
    /// `(∫₀ᵗ ‖ψ₂ - ψ₁‖²)^{1/2}`
    pub psi_l2t: f64,
}

/// Instantaneous norms of the difference of two states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Separation {
    pub distance: DualDistance,
    pub phi_l2: f64,
    pub phi_v: f64,
    pub psi_l2: f64,
}

pub fn separation(a: &SimState, b: &SimState) -> Result<Separation> {
    if !a.phi.same_grid(&b.phi) {
        return Err(Error::GridMismatch);
    }
    let dphi = b.phi.sub(&a.phi)?.norms();
    let dpsi = b.psi.sub(&a.psi)?.norms();
    Ok(Separation {
        distance: DualDistance {
            phi_dual: dphi.v_dual,
            psi_dual: dpsi.v_dual,
            phi_v_l2t: 0.0,
            psi_l2t: 0.0,
        },
        phi_l2: dphi.l2,
        phi_v: dphi.v,
        psi_l2: dpsi.l2,
    })
}

pub fn dual_distance(a: &SimState, b: &SimState) -> Result<DualDistance> {
    Ok(separation(a, b)?.distance)
}
