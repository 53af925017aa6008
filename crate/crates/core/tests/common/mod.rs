//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Closed-form model functions for the oracle, written out separately from
/// the crate's potentials and proliferation laws.
#[derive(Clone, Copy)]
pub struct OracleModel {
    pub f0p: fn(f64) -> f64,
    pub f0pp: fn(f64) -> f64,
    pub lamp: fn(f64) -> f64,
    pub p: fn(f64) -> f64,
}

impl OracleModel {
    /// `F(s) = (s² - 1)² / 4` split as `s⁴/4 + s²/2` plus `1/4 - s²`, with
    /// `p(s) = 1 - s²` on `[-1, 1]`.
    pub fn double_well_truncated() -> Self {
        Self {
            f0p: |s| s * s * s + s,
            f0pp: |s| 3.0 * s * s + 1.0,
            lamp: |s| -2.0 * s,
            p: |s| if s.abs() <= 1.0 { 1.0 - s * s } else { 0.0 },
        }
    }

    pub fn double_well_decoupled() -> Self {
        Self {
            p: |_| 0.0,
            ..Self::double_well_truncated()
        }
    }

    pub fn fp(&self, s: f64) -> f64 {
        (self.f0p)(s) + (self.lamp)(s)
    }
}

/// Midpoint-node cosine collocation matrix of one axis: `C[j, k] = w_k(x_j)`.
fn axis_matrix(length: f64, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        let x = length * (j as f64 + 0.5) / n as f64;
        for k in 0..n {
            c[(j, k)] = if k == 0 {
                1.0 / length.sqrt()
            } else {
                (2.0 / length).sqrt() * (k as f64 * std::f64::consts::PI * x / length).cos()
            };
        }
    }
    let symbol = (0..n)
        .map(|k| (k as f64 * std::f64::consts::PI / length).powi(2))
        .collect();
    (c, symbol)
}

/// Dense nodal operators of the Neumann problem on a box, nodes in C order.
pub struct DenseGrid {
    pub synthesis: DMatrix<f64>,
    pub cell: f64,
    /// Spectral Laplacian acting on nodal values.
    pub laplacian: DMatrix<f64>,
}

impl DenseGrid {
    pub fn new(extents: &[f64], modes: &[usize]) -> Self {
        let mut synthesis = DMatrix::from_element(1, 1, 1.0);
        let mut symbol = vec![0.0];
        let mut cell = 1.0;
        for (&l, &n) in extents.iter().zip(modes) {
            let (c, s) = axis_matrix(l, n);
            synthesis = synthesis.kronecker(&c);
            symbol = symbol
                .iter()
                .flat_map(|a| s.iter().map(move |b| a + b))
                .collect();
            cell *= l / n as f64;
        }
        let analysis = synthesis.transpose() * cell;
        let laplacian =
            -(&synthesis * DMatrix::from_diagonal(&DVector::from_vec(symbol)) * &analysis);
        Self {
            synthesis,
            cell,
            laplacian,
        }
    }

    pub fn l2(&self, v: &DVector<f64>) -> f64 {
        (self.cell * v.norm_squared()).sqrt()
    }
}

/// One step of the convex-splitting scheme in nodal form, solved by Newton
/// with dense LU factorizations.
pub fn dense_step(
    grid: &DenseGrid,
    model: &OracleModel,
    phi: &DVector<f64>,
    psi: &DVector<f64>,
    tau: f64,
) -> (DVector<f64>, DVector<f64>) {
    let n = phi.len();
    let lap = &grid.laplacian;
    let mu = -(lap * phi) + phi.map(|s| model.fp(s));
    let source = DVector::from_fn(n, |j, _| (model.p)(phi[j]) * (psi[j] - mu[j]));
    let explicit = phi.map(model.lamp);
    let rhs = phi + &source * tau + lap * &explicit * tau;

    let mut x = phi.clone();
    for _ in 0..100 {
        let inner = -(lap * &x) + x.map(model.f0p);
        let residual = &x - lap * inner * tau - &rhs;
        let curvature = DMatrix::from_diagonal(&x.map(model.f0pp));
        let jac = DMatrix::identity(n, n) - lap * (-lap + curvature) * tau;
        let delta = jac.lu().solve(&residual).expect("nonsingular Jacobian");
        x -= &delta;
        if delta.amax() < 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    let psi_system = DMatrix::identity(n, n) - lap * tau;
    let psi_next = psi_system
        .lu()
        .solve(&(psi - &source * tau))
        .expect("nonsingular diffusion matrix");
    (x, psi_next)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rule(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = rule(fa, flm, fm, a, m);
        let right = rule(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    recurse(f, a, b, fa, fm, fb, rule(fa, fm, fb, a, b), tol, 50)
}

/// Root of an increasing function on `[lo, hi]` by bisection.
pub fn bisect(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(g(lo) <= 0.0 && g(hi) >= 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Central difference with step `h`.
pub fn central_difference(f: &dyn Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    (f(s + h) - f(s - h)) / (2.0 * h)
}

/// `|a - b| / max(|b|, 1)`: relative above unit magnitude, absolute below.
pub fn scaled_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
