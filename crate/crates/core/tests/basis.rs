use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use tumorch::{Basis, Grid, SpectralField};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    prop_oneof![
        (0.5f64..20.0, 2usize..40).prop_map(|(l, n)| Grid::line(l, n).unwrap()),
        (0.5f64..5.0, 0.5f64..5.0, 2usize..12, 2usize..12).prop_map(|(a, b, n, m)| Grid::new(
            vec![a, b],
            vec![n, m]
        )
        .unwrap()),
        (0.5f64..3.0, 2usize..6).prop_map(|(l, n)| Grid::new(
            vec![l, 2.0 * l, 1.0],
            vec![n, n + 1, 3]
        )
        .unwrap()),
    ]
}

fn field_pair() -> impl Strategy<Value = (Arc<Basis>, Vec<f64>, Vec<f64>)> {
    grid_strategy().prop_flat_map(|grid| {
        let n = grid.len();
        (
            Just(Basis::new(grid)),
            prop::collection::vec(-2.0f64..2.0, n),
            prop::collection::vec(-2.0f64..2.0, n),
        )
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_and_round_trip((basis, nodal, _) in field_pair()) {
        let f = basis.to_spectral(&nodal).unwrap();
        let discrete_l2 = basis.grid().cell_volume() * nodal.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(close(f.norms().l2.powi(2), discrete_l2, 1e-12));
        let back = f.to_nodal();
        for (a, b) in back.iter().zip(&nodal) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_are_ordered((basis, nodal, _) in field_pair()) {
        let n = basis.to_spectral(&nodal).unwrap().norms();
        prop_assert!(n.v_dual <= n.l2 * (1.0 + 1e-14));
        prop_assert!(n.l2 <= n.v * (1.0 + 1e-14));
    }

    #[test]
    fn operators_are_self_adjoint((basis, a, b) in field_pair()) {
        let f = basis.field(a).unwrap();
        let g = basis.field(b).unwrap();
        let ops: [fn(&SpectralField) -> SpectralField; 3] = [
            SpectralField::apply_a,
            SpectralField::apply_a_inv,
            SpectralField::apply_neg_laplacian,
        ];
        for op in ops {
            let lhs = op(&f).dot(&g).unwrap();
            let rhs = f.dot(&op(&g)).unwrap();
            // rounding in a dot product scales with the sum of |terms|, not |result|
            let scale: f64 = op(&f)
                .coeffs()
                .iter()
                .zip(g.coeffs())
                .map(|(x, y)| (x * y).abs())
                .sum();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + scale));
        }
        // -Δ is nonnegative and A⁻¹ inverts A
        prop_assert!(f.apply_neg_laplacian().dot(&f).unwrap() >= -1e-12);
        let back = f.apply_a().apply_a_inv();
        for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn laplacian_has_zero_mean((basis, a, _) in field_pair()) {
        let f = basis.field(a).unwrap();
        prop_assert!(f.apply_laplacian().mean().abs() < 1e-12);
        let mut shifted = f.clone();
        shifted.coeffs_mut()[0] += 3.0 * basis.grid().volume().sqrt();
        prop_assert!(close(shifted.mean() - f.mean(), 3.0, 1e-13));
        prop_assert!(close(shifted.grad_norm_sq(), f.grad_norm_sq(), 1e-13));
    }
}

#[test]
fn analysis_matches_direct_cosine_sums() {
    // coefficients from the closed-form eigenfunctions, evaluated independently
    let (lx, ly, nx, ny) = (2.0, 3.0, 6, 5);
    let basis = Basis::new(Grid::new(vec![lx, ly], vec![nx, ny]).unwrap());
    let w = |l: f64, k: usize, x: f64| {
        if k == 0 {
            1.0 / l.sqrt()
        } else {
            (2.0 / l).sqrt() * (k as f64 * PI * x / l).cos()
        }
    };
    let f = |x: f64, y: f64| (x * y).sin() + x * x - y;
    let mut nodal = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            nodal.push(f(
                lx * (i as f64 + 0.5) / nx as f64,
                ly * (j as f64 + 0.5) / ny as f64,
            ));
        }
    }
    let coeffs = basis.analyze(&nodal).unwrap();
    let h = lx * ly / (nx * ny) as f64;
    for kx in 0..nx {
        for ky in 0..ny {
            let mut sum = 0.0;
            for i in 0..nx {
                for j in 0..ny {
                    let x = lx * (i as f64 + 0.5) / nx as f64;
                    let y = ly * (j as f64 + 0.5) / ny as f64;
                    sum += h * f(x, y) * w(lx, kx, x) * w(ly, ky, y);
                }
            }
            let got = coeffs[basis.grid().flat_index(&[kx, ky])];
            assert!((got - sum).abs() < 1e-12, "({kx}, {ky}): {got} vs {sum}");
        }
    }
}

#[test]
fn eigenvalues_match_closed_form() {
    let basis = Basis::new(Grid::new(vec![PI, 2.0 * PI], vec![4, 4]).unwrap());
    let table = basis.eigenvalues();
    for kx in 0..4 {
        for ky in 0..4 {
            let expected = 1.0 + (kx * kx) as f64 + (ky * ky) as f64 / 4.0;
            let got = table.get(basis.grid().flat_index(&[kx, ky]));
            assert!((got - expected).abs() < 1e-13);
        }
    }
}

#[test]
fn laplacian_of_cosine_mode() {
    let l = 4.0;
    let basis = Basis::new(Grid::line(l, 32).unwrap());
    let nodal: Vec<f64> = (0..32)
        .map(|j| (3.0 * PI * basis.grid().node(0, j) / l).cos())
        .collect();
    let lap = basis
        .to_spectral(&nodal)
        .unwrap()
        .apply_laplacian()
        .to_nodal();
    let factor = (3.0 * PI / l).powi(2);
    for (a, b) in lap.iter().zip(&nodal) {
        assert!((a + factor * b).abs() < 1e-11);
    }
}
