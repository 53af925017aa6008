use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use crate::basis::{Grid, SpectralField};
use crate::diagnostics::{dissipation, energy, EnergyBreakdown};
use crate::dynamics::{run, step_count, Observer, SchemeConfig, SimState, StepReport};
use crate::error::{Error, Result};

pub const DIAGNOSTICS_HEADER: &str = "t,energy,grad_phi_half,psi_half,f_integral,dissipation,source_dissipation,mass,energy_identity_residual,inner_iters";

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "run_summary.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// One line of `diagnostics.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub dissipation: f64,
    pub source_dissipation: f64,
    pub mass: f64,
    pub energy_identity_residual: f64,
    pub inner_iters: usize,
}

impl From<&StepReport> for DiagnosticRow {
    fn from(r: &StepReport) -> Self {
        Self {
            t: r.t,
            energy: r.energy,
            dissipation: r.dissipation,
            source_dissipation: r.source_dissipation,
            mass: r.mass,
            energy_identity_residual: r.energy_identity_residual,
            inner_iters: r.inner_iters,
        }
    }
}

impl DiagnosticRow {
    /// Row for a state with no preceding step: residual and iterations are 0.
    pub fn initial(state: &SimState, scheme: &SchemeConfig) -> Result<Self> {
        let d = dissipation(state, &scheme.potential, &scheme.prolif, scheme.dealias)?;
        Ok(Self {
            t: state.t,
            energy: energy(state, &scheme.potential)?,
            dissipation: d.total(),
            source_dissipation: d.source,
            mass: state.mass(),
            energy_identity_residual: 0.0,
            inner_iters: 0,
        })
    }

    fn write_csv(&self, out: &mut String) {
        let e = &self.energy;
        // `{:e}` prints the shortest representation that round-trips
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.t,
            e.total,
            e.grad_phi_half,
            e.psi_half,
            e.f_integral,
            self.dissipation,
            self.source_dissipation,
            self.mass,
            self.energy_identity_residual,
            self.inner_iters
        );
    }
}

pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(DIAGNOSTICS_HEADER);
    out.push('\n');
    for row in rows {
        row.write_csv(&mut out);
    }
    out
}

/// Nodal values of one field at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: String,
    pub step: usize,
    pub t: f64,
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Serialize)]
struct SnapshotSidecar<'a> {
    field: &'a str,
    step: usize,
    t: f64,
    grid: &'a Grid,
    /// Array shape, last axis fastest.
    shape: &'a [usize],
    dtype: &'static str,
    nodes: &'static str,
    data: String,
}

impl Snapshot {
    pub fn of(field: &str, step: usize, t: f64, values: &SpectralField) -> Self {
        Self {
            field: field.to_string(),
            step,
            t,
            grid: values.grid().clone(),
            values: values.to_nodal(),
        }
    }

    pub fn stem(&self) -> String {
        format!("{}_{:06}", self.field, self.step)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Writes `<stem>.f64` and `<stem>.json` into `dir`; returns the data path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let stem = self.stem();
        let data = dir.join(format!("{stem}.f64"));
        fs::write(&data, self.to_bytes()).map_err(|e| Error::io(&data, e))?;
        let sidecar = SnapshotSidecar {
            field: &self.field,
            step: self.step,
            t: self.t,
            grid: &self.grid,
            shape: self.grid.modes(),
            dtype: "float64-le",
            nodes: "midpoint",
            data: format!("{stem}.f64"),
        };
        write_json(&dir.join(format!("{stem}.json")), &sidecar)?;
        Ok(data)
    }
}

/// Reads a raw little-endian float64 file.
pub fn read_f64_file(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "length is not a multiple of 8",
            ),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Collects diagnostics rows and snapshots while a run progresses.
pub struct Recorder<'a> {
    scheme: &'a SchemeConfig,
    diagnostic_stride: usize,
    snapshot_stride: usize,
    last_step: usize,
    pub rows: Vec<DiagnosticRow>,
    pub snapshots: Vec<Snapshot>,
}

impl<'a> Recorder<'a> {
    /// `snapshot_stride = 0` disables snapshots. The initial state and the
    /// final step are always recorded.
    pub fn new(
        scheme: &'a SchemeConfig,
        t0: f64,
        diagnostic_stride: usize,
        snapshot_stride: usize,
    ) -> Self {
        Self {
            scheme,
            diagnostic_stride: diagnostic_stride.max(1),
            snapshot_stride,
            last_step: step_count(t0, scheme.t_end, scheme.dt),
            rows: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

impl Observer for Recorder<'_> {
    fn observe(
        &mut self,
        index: usize,
        state: &SimState,
        report: Option<&StepReport>,
    ) -> Result<()> {
        let last = index == self.last_step;
        if index.is_multiple_of(self.diagnostic_stride) || last {
            self.rows.push(match report {
                Some(r) => r.into(),
                None => DiagnosticRow::initial(state, self.scheme)?,
            });
        }
        if self.snapshot_stride > 0 && (index.is_multiple_of(self.snapshot_stride) || last) {
            self.snapshots
                .push(Snapshot::of("phi", index, state.t, &state.phi));
            self.snapshots
                .push(Snapshot::of("psi", index, state.t, &state.psi));
        }
        Ok(())
    }
}

/// Contents of `run_summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub seed: u64,
    pub wall_time_s: f64,
    pub steps: usize,
    pub max_halvings: u32,
    pub max_mass_deviation: f64,
    pub initial: DiagnosticRow,
    #[serde(rename = "final")]
    pub final_row: DiagnosticRow,
}

/// Output of a completed run, ready to be written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub rows: Vec<DiagnosticRow>,
    pub snapshots: Vec<Snapshot>,
}

/// Integrates the configured problem without touching the file system.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let started = Instant::now();
    let basis = cfg.basis()?;
    let scheme = cfg.scheme()?;
    let initial = cfg.initial_state(&basis)?;
    let initial_row = DiagnosticRow::initial(&initial, &scheme)?;
    let mut recorder = Recorder::new(
        &scheme,
        initial.t,
        cfg.output.diagnostic_stride,
        cfg.output.snapshot_stride,
    );
    let trajectory = run(initial, &scheme, &mut [&mut recorder])?;
    let final_row = trajectory
        .reports
        .last()
        .map(DiagnosticRow::from)
        .unwrap_or(initial_row);
    let max_mass_deviation = trajectory
        .reports
        .iter()
        .map(|r| (r.mass - initial_row.mass).abs())
        .fold(0.0, f64::max);
    let Recorder {
        rows, snapshots, ..
    } = recorder;
    Ok(RunOutput {
        summary: RunSummary {
            config: cfg.clone(),
            seed: cfg.initial.seed,
            wall_time_s: started.elapsed().as_secs_f64(),
            steps: trajectory.reports.len(),
            max_halvings: trajectory
                .reports
                .iter()
                .map(|r| r.halvings)
                .max()
                .unwrap_or(0),
            max_mass_deviation,
            initial: initial_row,
            final_row,
        },
        rows,
        snapshots,
    })
}

/// Writes `diagnostics.csv`, `run_summary.json` and `snapshots/` into `dir`.
pub fn write_outputs(dir: &Path, output: &RunOutput) -> Result<()> {
    ensure_dir(dir)?;
    write_text(&dir.join(DIAGNOSTICS_FILE), &diagnostics_csv(&output.rows))?;
    if !output.snapshots.is_empty() {
        let snaps = dir.join(SNAPSHOT_DIR);
        ensure_dir(&snaps)?;
        for s in &output.snapshots {
            s.write(&snaps)?;
        }
    }
    write_json(&dir.join(SUMMARY_FILE), &output.summary)
}
