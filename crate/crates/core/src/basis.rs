//! Tensor cosine eigenbasis of `A = -Δ + I` on an axis-aligned box with
//! homogeneous Neumann conditions.
//!
//! Along each axis of length `L` with `N` modes the basis functions are
//!
//! ```text
//! w_0(x) = sqrt(1/L),   w_k(x) = sqrt(2/L) cos(k π x / L),  k = 1..N-1
//! ```
//!
//! sampled at the midpoint nodes `x_j = L (j + 1/2) / N`. With the weight
//! `h = L / N` these samples are exactly orthonormal, so the analysis
//! transform (a scaled DCT-II) and the synthesis transform (DCT-III) are
//! mutual inverses on the `N`-dimensional nodal space. Multi-dimensional
//! fields are stored row-major, last axis fastest.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box domain with a per-axis mode truncation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    extents: Vec<f64>,
    modes: Vec<usize>,
}

impl Grid {
    pub fn new(extents: Vec<f64>, modes: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {})",
                extents.len()
            )));
        }
        if extents.len() != modes.len() {
            return Err(Error::InvalidGrid(format!(
                "{} extents but {} mode counts",
                extents.len(),
                modes.len()
            )));
        }
        if let Some(l) = extents.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidGrid(format!("extent {l} is not positive")));
        }
        if let Some(n) = modes.iter().find(|n| **n < 2) {
            return Err(Error::InvalidGrid(format!("mode count {n} is below 2")));
        }
        Ok(Self { extents, modes })
    }

    pub fn line(length: f64, modes: usize) -> Result<Self> {
        Self::new(vec![length], vec![modes])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// Number of basis functions, equal to the number of nodes.
    pub fn len(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Quadrature weight of a single node, `|Ω| / #nodes`.
    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    /// Coordinate of node `j` along `axis`.
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        self.extents[axis] * (j as f64 + 0.5) / self.modes[axis] as f64
    }

    /// Splits a flat index into its per-axis multi-index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.modes[axis];
            flat /= self.modes[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.modes)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Nodal coordinates of every node, flat ordering.
    pub fn node_coords(&self) -> Vec<[f64; 3]> {
        (0..self.len())
            .map(|flat| {
                let idx = self.multi_index(flat);
                let mut x = [0.0; 3];
                for axis in 0..self.dim() {
                    x[axis] = self.node(axis, idx[axis]);
                }
                x
            })
            .collect()
    }
}

/// `λ_k = 1 + Σ_i (k_i π / L_i)²` for every multi-index, flat ordering.
#[derive(Clone, Debug)]
pub struct EigenvalueTable {
    lambda: Vec<f64>,
}

impl EigenvalueTable {
    pub fn new(grid: &Grid) -> Self {
        let lambda = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                1.0 + (0..grid.dim())
                    .map(|a| (idx[a] as f64 * PI / grid.extents[a]).powi(2))
                    .sum::<f64>()
            })
            .collect();
        Self { lambda }
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    pub fn get(&self, flat: usize) -> f64 {
        self.lambda[flat]
    }
}

#[derive(Clone, Debug)]
struct AxisTable {
    n: usize,
    /// `synth[j * n + k] = w_k(x_j)`
    synth: Vec<f64>,
    /// `analysis[k * n + j] = h w_k(x_j)`
    analysis: Vec<f64>,
}

impl AxisTable {
    fn new(length: f64, n: usize) -> Self {
        let h = length / n as f64;
        let mut synth = vec![0.0; n * n];
        let mut analysis = vec![0.0; n * n];
        for j in 0..n {
            let x = length * (j as f64 + 0.5) / n as f64;
            for k in 0..n {
                let w = axis_mode(length, k, x);
                synth[j * n + k] = w;
                analysis[k * n + j] = h * w;
            }
        }
        Self { n, synth, analysis }
    }
}

/// Normalized 1-D Neumann eigenfunction `w_k(x)` on `[0, L]`.
pub fn axis_mode(length: f64, k: usize, x: f64) -> f64 {
    if k == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt() * (k as f64 * PI * x / length).cos()
    }
}

/// Precomputed transform tables for one grid.
#[derive(Debug)]
pub struct Basis {
    grid: Grid,
    axes: Vec<AxisTable>,
    eigen: EigenvalueTable,
    dealias_mask: Vec<bool>,
}

impl Basis {
    pub fn new(grid: Grid) -> Arc<Self> {
        let axes = grid
            .extents
            .iter()
            .zip(&grid.modes)
            .map(|(&l, &n)| AxisTable::new(l, n))
            .collect();
        let eigen = EigenvalueTable::new(&grid);
        let dealias_mask = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                // 2/3 rule: keep k_i < 2 N_i / 3 on every axis
                (0..grid.dim()).all(|a| 3 * idx[a] < 2 * grid.modes[a])
            })
            .collect();
        Arc::new(Self {
            grid,
            axes,
            eigen,
            dealias_mask,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn eigenvalues(&self) -> &EigenvalueTable {
        &self.eigen
    }

    /// `λ_k - 1`, the symbol of `-Δ`.
    pub fn laplacian_symbol(&self, flat: usize) -> f64 {
        self.eigen.lambda[flat] - 1.0
    }

    /// Analysis transform on a raw slice: nodal samples to coefficients.
    pub fn analyze(&self, nodal: &[f64]) -> Result<Vec<f64>> {
        self.check_len(nodal.len())?;
        let mut data = nodal.to_vec();
        for axis in 0..self.grid.dim() {
            self.apply_axis(&mut data, axis, true);
        }
        Ok(data)
    }

    /// Synthesis transform on a raw slice: coefficients to nodal samples.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut data = coeffs.to_vec();
        for axis in 0..self.grid.dim() {
            self.apply_axis(&mut data, axis, false);
        }
        Ok(data)
    }

    /// Zeroes coefficients above the 2/3 cutoff in place.
    pub fn dealias(&self, coeffs: &mut [f64]) {
        for (c, keep) in coeffs.iter_mut().zip(&self.dealias_mask) {
            if !keep {
                *c = 0.0;
            }
        }
    }

    pub fn to_spectral(self: &Arc<Self>, nodal: &[f64]) -> Result<SpectralField> {
        Ok(SpectralField {
            basis: Arc::clone(self),
            coeffs: self.analyze(nodal)?,
        })
    }

    pub fn field(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<SpectralField> {
        self.check_len(coeffs.len())?;
        Ok(SpectralField {
            basis: Arc::clone(self),
            coeffs,
        })
    }

    pub fn zeros(self: &Arc<Self>) -> SpectralField {
        SpectralField {
            basis: Arc::clone(self),
            coeffs: vec![0.0; self.len()],
        }
    }

    /// Field equal to the constant `value` everywhere.
    pub fn constant(self: &Arc<Self>, value: f64) -> SpectralField {
        let mut f = self.zeros();
        f.coeffs[0] = value * self.grid.volume().sqrt();
        f
    }

    /// A single normalized eigenfunction `w_k`.
    pub fn mode(self: &Arc<Self>, idx: &[usize]) -> SpectralField {
        let mut f = self.zeros();
        f.coeffs[self.grid.flat_index(idx)] = 1.0;
        f
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Shape {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    fn apply_axis(&self, data: &mut [f64], axis: usize, analysis: bool) {
        let table = &self.axes[axis];
        let n = table.n;
        let matrix = if analysis {
            &table.analysis
        } else {
            &table.synth
        };
        let stride: usize = self.grid.modes[axis + 1..].iter().product();
        let outer = data.len() / (n * stride);
        let mut line = vec![0.0; n];
        for o in 0..outer {
            let base = o * n * stride;
            for i in 0..stride {
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride + i];
                }
                for (r, row) in matrix.chunks_exact(n).enumerate() {
                    data[base + r * stride + i] = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

/// Norm hierarchy of a field: `‖u‖_{V'} ≤ ‖u‖ ≤ ‖u‖_V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub v: f64,
    pub v_dual: f64,
    pub mean: f64,
}

/// Coefficients of a function on the cosine eigenbasis.
#[derive(Clone, Debug)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn grid(&self) -> &Grid {
        &self.basis.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn to_nodal(&self) -> Vec<f64> {
        self.basis
            .synthesize(&self.coeffs)
            .expect("coefficient length is a field invariant")
    }

    pub fn same_grid(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis.grid == other.basis.grid
    }

    fn scaled_by(&self, symbol: impl Fn(usize) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * symbol(k))
            .collect();
        SpectralField {
            basis: Arc::clone(&self.basis),
            coeffs,
        }
    }

    pub fn apply_a(&self) -> SpectralField {
        self.scaled_by(|k| self.basis.eigen.lambda[k])
    }

    pub fn apply_a_inv(&self) -> SpectralField {
        self.scaled_by(|k| 1.0 / self.basis.eigen.lambda[k])
    }

    pub fn apply_neg_laplacian(&self) -> SpectralField {
        self.scaled_by(|k| self.basis.eigen.lambda[k] - 1.0)
    }

    /// Spectral Laplacian `Δ_h`.
    pub fn apply_laplacian(&self) -> SpectralField {
        self.scaled_by(|k| 1.0 - self.basis.eigen.lambda[k])
    }

    pub fn norms(&self) -> Norms {
        let lambda = &self.basis.eigen.lambda;
        let (mut l2, mut v, mut v_dual) = (0.0, 0.0, 0.0);
        for (c, l) in self.coeffs.iter().zip(lambda) {
            let c2 = c * c;
            l2 += c2;
            v += l * c2;
            v_dual += c2 / l;
        }
        Norms {
            l2: l2.sqrt(),
            v: v.sqrt(),
            v_dual: v_dual.sqrt(),
            mean: self.mean(),
        }
    }

    /// Spatial average `|Ω|⁻¹ ∫ u`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0] / self.basis.grid.volume().sqrt()
    }

    /// `‖∇u‖² = Σ (λ_k - 1) û_k²`.
    pub fn grad_norm_sq(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.basis.eigen.lambda)
            .map(|(c, l)| (l - 1.0) * c * c)
            .sum()
    }

    /// Spectral `H³` moment `Σ λ_k³ û_k²`.
    pub fn h3_moment(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.basis.eigen.lambda)
            .map(|(c, l)| l * l * l * c * c)
            .sum()
    }

    /// Discrete `L²` inner product.
    pub fn dot(&self, other: &SpectralField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &SpectralField) -> Result<SpectralField> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(SpectralField {
            basis: Arc::clone(&self.basis),
            coeffs,
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.axpy(-1.0, other)
    }
}
