//! Reference problem setups shared by the CLI defaults, the benchmarks and
//! the test suites.

use std::sync::Arc;

use crate::basis::{Basis, Grid};
use crate::dynamics::{InitialData, SchemeConfig, SimState};
use crate::potentials::SplitPotential;
use crate::proliferation::ProliferationFn;

/// Domain length of the 1-D benchmark. Modes with `kπ/L < 1` are
/// spinodally unstable around `φ = 0`, so `L = 10` leaves three of them.
pub const LENGTH: f64 = 10.0;
pub const MODES: usize = 64;
pub const DT: f64 = 1e-4;

/// The standard 1-D problem: `N = 64` on `[0, 10]`, `τ = 1e-4`, double-well
/// potential, truncated quadratic proliferation with `p₀ = 1`, and the
/// default seeded initial data.
pub struct Benchmark {
    pub basis: Arc<Basis>,
    pub initial: SimState,
    pub scheme: SchemeConfig,
}

pub fn standard(t_end: f64) -> Benchmark {
    with_modes(MODES, DT, t_end)
}

pub fn with_modes(modes: usize, dt: f64, t_end: f64) -> Benchmark {
    let basis = Basis::new(Grid::line(LENGTH, modes).expect("benchmark grid is valid"));
    let initial = InitialData::default()
        .build(&basis)
        .expect("benchmark initial data is valid");
    let scheme = SchemeConfig::new(
        dt,
        t_end,
        SplitPotential::double_well(),
        ProliferationFn::truncated_quadratic(1.0),
    );
    Benchmark {
        basis,
        initial,
        scheme,
    }
}
