//! Batch parameter sweeps: configuration, per-point pipeline, parallel
//! execution and file output.

mod config;
mod observable;
mod output;
mod path;
mod recipes;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluctuation::{input_output, verify_signature, FluctuationError, FluctuationOptions, InputOutputMatrix};
use crate::mean_field::{solve_bvp, BvpOptions, Grid, MeanFieldError, MeanFieldSolution};
use crate::model::{check_single_description, validate, BoundaryConditions, InputState, ModelError, WaveguideParams};
use crate::quantum_stats::{input_statistics, output_coefficients, OutputStatistics};

pub use config::{from_toml, to_toml};
pub use observable::{Observable, PointValues, STANDARD_PAIRS};
pub use output::{write_outputs, OutputFiles};
pub use path::{ParamPath, Setup};
pub use recipes::{emit_figure_recipe, FIGURE_IDS};

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "PBG_WORKERS";

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("unknown parameter path `{0}`")]
    UnknownPath(String),
    #[error("unknown observable `{0}`")]
    UnknownObservable(String),
    #[error("invalid scan: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("output directory {path} is not writable: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("all {points} scan points failed; first failure: {first}")]
    AllPointsFailed { points: usize, first: String },
    #[error("unknown figure id {0} (expected 2..=12)")]
    UnknownFigure(u32),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl ScanError {
    /// Stable short tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            ScanError::Parse(_) => "parse",
            ScanError::UnknownPath(_) => "unknown_path",
            ScanError::UnknownObservable(_) => "unknown_observable",
            ScanError::Invalid(_) => "invalid_scan",
            ScanError::Model(_) => "invalid_model",
            ScanError::OutputDir { .. } => "output_dir",
            ScanError::Io { .. } => "io",
            ScanError::AllPointsFailed { .. } => "all_points_failed",
            ScanError::UnknownFigure(_) => "unknown_figure",
            ScanError::Pool(_) => "pool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Uniform mean-field grid size.
    pub grid_points: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub homotopy_steps: usize,
    /// RK4 steps per grid interval for the fluctuation basis.
    pub substeps: usize,
    /// Step-halving agreement required of the fluctuation basis; 0 disables
    /// the check.
    pub halving_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let bvp = BvpOptions::default();
        let fl = FluctuationOptions::default();
        SolverSettings {
            grid_points: 1001,
            tolerance: bvp.tolerance,
            max_iterations: bvp.max_iterations,
            homotopy_steps: bvp.homotopy_steps,
            substeps: fl.substeps,
            halving_tolerance: fl.halving_tolerance.unwrap_or(0.0),
        }
    }
}

impl SolverSettings {
    pub fn bvp(&self) -> BvpOptions {
        BvpOptions {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            homotopy_steps: self.homotopy_steps,
            ..BvpOptions::default()
        }
    }

    pub fn fluctuation(&self) -> FluctuationOptions {
        FluctuationOptions {
            substeps: self.substeps,
            halving_tolerance: (self.halving_tolerance > 0.0).then_some(self.halving_tolerance),
        }
    }
}

/// One sweep axis: every target receives the same linearly spaced value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub targets: Vec<ParamPath>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Plot label; defaults to the first target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Axis {
    pub fn new(target: &str, start: f64, stop: f64, count: usize) -> Result<Self, ScanError> {
        Ok(Axis {
            targets: vec![target.parse()?],
            start,
            stop,
            count,
            label: None,
        })
    }

    pub fn labelled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.start
        } else if i + 1 == self.count {
            self.stop
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn column_name(&self) -> String {
        self.targets[0].name()
    }

    pub fn plot_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.column_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    /// `all` in a config file expands to [`Observable::all`].
    #[serde(deserialize_with = "config::observable_list")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub axis: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub stem: String,
    /// Plot title.
    pub title: String,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: PathBuf::from("out"),
            stem: "scan".to_string(),
            title: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub device: WaveguideParams,
    #[serde(default)]
    pub boundary: BoundaryConditions,
    #[serde(default)]
    pub input_state: InputState,
    #[serde(default)]
    pub solver: SolverSettings,
    pub scan: ScanSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl ScanSpec {
    pub fn base(&self) -> Setup {
        Setup {
            params: self.device,
            bc: self.boundary,
            state: self.input_state,
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.scan.axis
    }

    pub fn point_count(&self) -> usize {
        self.scan.axis.iter().map(|a| a.count).product()
    }

    /// Axis indices of every point, row-major (last axis fastest).
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for axis in &self.scan.axis {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..axis.count).map(move |i| {
                        let mut p = prefix.clone();
                        p.push(i);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn setup_at(&self, index: &[usize]) -> (Vec<f64>, Setup) {
        let mut setup = self.base();
        let mut coords = Vec::with_capacity(index.len());
        for (axis, &i) in self.scan.axis.iter().zip(index) {
            let v = axis.value(i);
            coords.push(v);
            for t in &axis.targets {
                t.apply(&mut setup, v);
            }
        }
        (coords, setup)
    }

    /// Structural checks plus validation of the base point and of every axis
    /// corner.
    pub fn validate(&self) -> Result<(), ScanError> {
        if self.scan.axis.len() > 2 {
            return Err(ScanError::Invalid(format!(
                "at most 2 axes are supported (got {})",
                self.scan.axis.len()
            )));
        }
        if self.scan.observables.is_empty() {
            return Err(ScanError::Invalid("no observables requested".into()));
        }
        for (k, axis) in self.scan.axis.iter().enumerate() {
            if axis.count == 0 {
                return Err(ScanError::Invalid(format!("axis {k} has count 0")));
            }
            if axis.targets.is_empty() {
                return Err(ScanError::Invalid(format!("axis {k} has no targets")));
            }
            if !(axis.start.is_finite() && axis.stop.is_finite()) {
                return Err(ScanError::Invalid(format!("axis {k} has a non-finite bound")));
            }
        }
        if self.solver.grid_points < 2 {
            return Err(ScanError::Invalid("solver.grid_points must be at least 2".into()));
        }
        if self.solver.substeps == 0 {
            return Err(ScanError::Invalid("solver.substeps must be at least 1".into()));
        }
        if self.output.stem.is_empty() || self.output.stem.contains(['/', '\\']) {
            return Err(ScanError::Invalid("output.stem must be a plain file name".into()));
        }
        let corners: Vec<Vec<usize>> = {
            let mut c = vec![Vec::new()];
            for axis in &self.scan.axis {
                c = c
                    .into_iter()
                    .flat_map(|p| {
                        [0, axis.count - 1].into_iter().map(move |i| {
                            let mut q = p.clone();
                            q.push(i);
                            q
                        })
                    })
                    .collect();
            }
            c
        };
        for idx in corners {
            let (_, s) = self.setup_at(&idx);
            check_setup(&s)?;
        }
        Ok(())
    }
}

fn check_setup(s: &Setup) -> Result<(), ModelError> {
    validate(&s.params, &s.bc)?;
    s.state.validate()?;
    check_single_description(&s.bc, &s.state)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("invalid point: {0}")]
    Invalid(#[from] ModelError),
    #[error("mean field: {0}")]
    MeanField(#[from] MeanFieldError),
    #[error("fluctuations: {0}")]
    Fluctuation(#[from] FluctuationError),
}

impl PointError {
    /// Status column value.
    pub fn status(&self) -> u8 {
        match self {
            PointError::MeanField(_) => 1,
            PointError::Fluctuation(_) => 2,
            PointError::Invalid(_) => 3,
        }
    }
}

/// Full intermediate results of one point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub mean_field: MeanFieldSolution,
    pub u: InputOutputMatrix,
    pub output: OutputStatistics,
    pub input: OutputStatistics,
    pub signature_deviation: f64,
}

impl PointData {
    pub fn values(&self) -> PointValues<'_> {
        PointValues {
            output: &self.output,
            input: &self.input,
            flux_drift: self.mean_field.flux_drift(),
            signature_deviation: self.signature_deviation,
        }
    }

    pub fn evaluate(&self, observables: &[Observable]) -> Vec<Option<f64>> {
        let v = self.values();
        observables.iter().map(|o| o.evaluate(&v)).collect()
    }
}

/// Mean field, input–output matrix and statistics of one configuration.
pub fn solve_point(setup: &Setup, solver: &SolverSettings) -> Result<PointData, PointError> {
    check_setup(setup)?;
    let grid = Grid::uniform(setup.params.length, solver.grid_points)?;
    let mean_field = solve_bvp(&setup.params, &setup.bc, &grid, &solver.bvp())?;
    let u = input_output(&setup.params, &mean_field, &solver.fluctuation())?;
    Ok(PointData {
        output: output_coefficients(&u, &setup.state),
        input: input_statistics(&setup.state),
        signature_deviation: verify_signature(&u),
        mean_field,
        u,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coords: Vec<f64>,
    /// 0 on success; see [`PointError::status`].
    pub status: u8,
    pub message: Option<String>,
    /// Empty when the point failed.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub axes: Vec<String>,
    pub observables: Vec<Observable>,
    pub rows: Vec<Row>,
}

impl ScanTable {
    /// Values of one observable at converged points, with coordinates.
    pub fn column(&self, observable: &Observable) -> Vec<(Vec<f64>, Option<f64>)> {
        let k = self
            .observables
            .iter()
            .position(|o| o == observable)
            .expect("observable not in table");
        self.rows
            .iter()
            .filter(|r| r.status == 0)
            .map(|r| (r.coords.clone(), r.values[k]))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != 0).count()
    }
}

/// Worker count: explicit request, else the environment override, else all cores.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Result of [`compute_table`]; keeps the full point data of single-point scans.
pub struct Computed {
    pub table: ScanTable,
    pub single: Option<PointData>,
}

/// Evaluates every grid point on a bounded pool. Rows come back in row-major
/// order regardless of scheduling.
pub fn compute_table(spec: &ScanSpec, workers: Option<usize>) -> Result<Computed, ScanError> {
    spec.validate()?;
    let indices = spec.indices();
    let eval = |idx: &Vec<usize>| {
        let (coords, setup) = spec.setup_at(idx);
        match solve_point(&setup, &spec.solver) {
            Ok(data) => {
                let row = Row {
                    coords,
                    status: 0,
                    message: None,
                    values: data.evaluate(&spec.scan.observables),
                };
                (row, Some(data))
            }
            Err(e) => (
                Row {
                    coords,
                    status: e.status(),
                    message: Some(e.to_string()),
                    values: Vec::new(),
                },
                None,
            ),
        }
    };
    let n = resolve_workers(workers);
    let results: Vec<(Row, Option<PointData>)> = if n == 1 {
        indices.iter().map(eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ScanError::Pool(e.to_string()))?;
        pool.install(|| indices.par_iter().map(eval).collect())
    };
    let single_point = results.len() == 1;
    let mut rows = Vec::with_capacity(results.len());
    let mut single = None;
    for (row, data) in results {
        rows.push(row);
        if single_point {
            single = data;
        }
    }
    if rows.iter().all(|r| r.status != 0) {
        return Err(ScanError::AllPointsFailed {
            points: rows.len(),
            first: rows[0].message.clone().unwrap_or_default(),
        });
    }
    Ok(Computed {
        table: ScanTable {
            axes: spec.scan.axis.iter().map(Axis::column_name).collect(),
            observables: spec.scan.observables.clone(),
            rows,
        },
        single,
    })
}

pub struct ScanOutcome {
    pub table: ScanTable,
    pub files: OutputFiles,
}

/// Checks the output directory, computes the table and writes the CSV, plot
/// script and metadata (plus mean-field and input–output dumps for
/// single-point scans).
pub fn run_scan(spec: &ScanSpec, workers: Option<usize>) -> Result<ScanOutcome, ScanError> {
    spec.validate()?;
    output::ensure_writable(&spec.output.dir)?;
    let computed = compute_table(spec, workers)?;
    let files = write_outputs(spec, &computed)?;
    Ok(ScanOutcome {
        table: computed.table,
        files,
    })
}
