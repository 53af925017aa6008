mod common;

use common::{DenseGrid, OracleModel};
use nalgebra::DVector;
use proptest::prelude::*;
use tumorch::benchmark;
use tumorch::diagnostics::{
    continuous_dependence_experiment, dissipation, dual_distance, energy, energy_identity_residual,
    CompareConfig,
};
use tumorch::dynamics::{noisy_field, step, InitialData, SimState};
use tumorch::{Basis, Grid, Potential, ProliferationFn, SchemeConfig, SplitPotential};

fn double_well() -> Potential {
    SplitPotential::double_well().into()
}

/// Energy and dissipation assembled from dense nodal operators.
fn dense_energy(grid: &DenseGrid, phi: &DVector<f64>, psi: &DVector<f64>) -> f64 {
    let h = grid.cell;
    let grad = -h * phi.dot(&(&grid.laplacian * phi));
    let f: f64 = phi.iter().map(|s| 0.25 * (s * s - 1.0).powi(2)).sum();
    0.5 * grad + 0.5 * h * psi.norm_squared() + h * f
}

fn dense_dissipation(
    grid: &DenseGrid,
    model: &OracleModel,
    phi: &DVector<f64>,
    psi: &DVector<f64>,
) -> f64 {
    let h = grid.cell;
    let lap = &grid.laplacian;
    let mu = -(lap * phi) + phi.map(|s| model.fp(s));
    let source: f64 = (0..phi.len())
        .map(|j| (model.p)(phi[j]) * (mu[j] - psi[j]).powi(2))
        .sum();
    -h * mu.dot(&(lap * &mu)) - h * psi.dot(&(lap * psi)) + h * source
}

#[test]
fn decoupled_residual_matches_dense_evaluation() {
    let model = OracleModel::double_well_decoupled();
    let basis = Basis::new(Grid::line(10.0, 16).unwrap());
    let state = InitialData::default().build(&basis).unwrap();
    let cfg = SchemeConfig::new(
        1e-3,
        1.0,
        SplitPotential::double_well(),
        ProliferationFn::zero(),
    );
    let (next, report) = step(&state, &cfg).unwrap();

    let grid = DenseGrid::new(&[10.0], &[16]);
    let nodal = |s: &SimState| {
        (
            DVector::from_vec(s.phi.to_nodal()),
            DVector::from_vec(s.psi.to_nodal()),
        )
    };
    let (p0, q0) = nodal(&state);
    let (p1, q1) = nodal(&next);
    let de = dense_energy(&grid, &p1, &q1) - dense_energy(&grid, &p0, &q0);
    let d = dense_dissipation(&grid, &model, &p1, &q1);
    let expected = (de / cfg.dt + d).abs();

    let r = energy_identity_residual(&state, &next, &cfg.potential, &cfg.prolif, false).unwrap();
    assert!(
        (r - expected).abs() < 1e-8 * (1.0 + expected),
        "{r} vs {expected}"
    );
    assert_eq!(r, report.energy_identity_residual);
}

#[test]
fn coupled_dissipation_matches_dense_evaluation() {
    let model = OracleModel::double_well_truncated();
    let basis = Basis::new(Grid::new(vec![3.0, 2.0], vec![8, 4]).unwrap());
    let state = InitialData {
        phi_noise: 0.5,
        psi_noise: 0.3,
        ..InitialData::default()
    }
    .build(&basis)
    .unwrap();
    let d = dissipation(
        &state,
        &double_well(),
        &ProliferationFn::truncated_quadratic(1.0),
        false,
    )
    .unwrap();
    let grid = DenseGrid::new(&[3.0, 2.0], &[8, 4]);
    let phi = DVector::from_vec(state.phi.to_nodal());
    let psi = DVector::from_vec(state.psi.to_nodal());
    let expected = dense_dissipation(&grid, &model, &phi, &psi);
    assert!((d.total() - expected).abs() < 1e-10 * (1.0 + expected));
    let e = energy(&state, &double_well()).unwrap();
    assert!((e.total - dense_energy(&grid, &phi, &psi)).abs() < 1e-10);
}

#[test]
fn energy_examples() {
    let basis = Basis::new(Grid::new(vec![2.0, 3.0], vec![6, 6]).unwrap());
    let zero = SimState::new(basis.zeros(), basis.zeros(), 0.0).unwrap();
    assert!((energy(&zero, &double_well()).unwrap().total - 0.25 * 6.0).abs() < 1e-13);
    let pure = SimState::new(basis.constant(1.0), basis.zeros(), 0.0).unwrap();
    assert!(energy(&pure, &double_well()).unwrap().total.abs() < 1e-13);

    // ½ ∫₀¹ π² sin²(πx) dx = π²/4
    let line = Basis::new(Grid::line(1.0, 64).unwrap());
    let nodal: Vec<f64> = (0..64)
        .map(|j| (std::f64::consts::PI * line.grid().node(0, j)).cos())
        .collect();
    let state = SimState::new(line.to_spectral(&nodal).unwrap(), line.zeros(), 0.0).unwrap();
    let e = energy(&state, &double_well()).unwrap();
    assert!((e.grad_phi_half - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-12);
    assert_eq!(e.total, e.grad_phi_half + e.psi_half + e.f_integral);
}

#[test]
fn zero_perturbation_gives_zero_distance() {
    let b = benchmark::with_modes(16, 1e-3, 0.05);
    let cfg = CompareConfig {
        deltas: vec![0.0, 1e-3],
        ..CompareConfig::default()
    };
    let report = continuous_dependence_experiment(&b.scheme, &b.initial, &cfg).unwrap();
    assert!(report.runs[0]
        .samples
        .iter()
        .all(|s| s.ratio == 0.0 && s.dual_ratio == 0.0));
    // η has unit dual norm, so the initial dual ratio is one
    let first = &report.runs[1].samples[0];
    assert!((first.dual_ratio - 1.0).abs() < 1e-12);
    assert!(report.runs[1].samples.iter().all(|s| s.ratio > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_norm_is_dominated(seed in 0u64..10_000, amp in 0.0f64..2.0) {
        let basis = Basis::new(Grid::new(vec![2.0, 5.0], vec![6, 10]).unwrap());
        let a = SimState::new(noisy_field(&basis, 0.0, amp, seed).unwrap(), basis.zeros(), 0.0).unwrap();
        let b = SimState::new(noisy_field(&basis, 0.1, amp, seed + 7).unwrap(), basis.zeros(), 0.0).unwrap();
        let d = dual_distance(&a, &b).unwrap();
        let diff = b.phi.sub(&a.phi).unwrap().norms();
        prop_assert!(d.phi_dual >= 0.0 && d.psi_dual == 0.0);
        prop_assert!(d.phi_dual <= diff.l2 * (1.0 + 1e-14));
        prop_assert!(diff.l2 <= diff.v * (1.0 + 1e-14));
    }

    #[test]
    fn dissipation_terms_are_nonnegative(seed in 0u64..10_000, mean in -1.5f64..1.5, amp in 0.0f64..1.5) {
        let basis = Basis::new(Grid::line(5.0, 24).unwrap());
        let state = SimState::new(
            noisy_field(&basis, mean, amp, seed).unwrap(),
            noisy_field(&basis, -mean, amp, seed + 1).unwrap(),
            0.0,
        )
        .unwrap();
        for p in [ProliferationFn::truncated_quadratic(1.0), ProliferationFn::smooth_bump(2.0), ProliferationFn::zero()] {
            let d = dissipation(&state, &double_well(), &p, false).unwrap();
            prop_assert!(d.grad_mu >= 0.0 && d.grad_psi >= 0.0 && d.source >= 0.0);
        }
        let e = energy(&state, &double_well()).unwrap();
        prop_assert_eq!(e.total, e.grad_phi_half + e.psi_half + e.f_integral);
    }
}
