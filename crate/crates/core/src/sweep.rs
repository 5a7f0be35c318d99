//! Deterministic parallel grids over initial conditions and drive parameters.
//!
//! Cells sit on the lattice `min + i·step`. Rows (first axis) are distributed
//! across a worker pool and results are assembled by position, so the raster
//! does not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::State;
use crate::error::{ensure_finite, Error, Result};
use crate::orbit::{classify_orbit, ClassifyOptions, OrbitClass, OrbitSummary};
use crate::parallel::pool;
use crate::params::ReducedParams;

pub const DEFAULT_PERIOD_BUDGET: u32 = 500;
const MAX_CELLS_PER_AXIS: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, step: f64) -> Self {
        Axis {
            name: name.to_string(),
            min,
            max,
            step,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        lattice(self.min, self.max, self.step)
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Result<usize> {
        Ok(self.values()?.len())
    }
}

/// Lattice points `min + i·step` not exceeding `max` (up to round-off).
pub fn lattice(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    ensure_finite("axis.min", min)?;
    ensure_finite("axis.max", max)?;
    ensure_finite("axis.step", step)?;
    if step <= 0.0 {
        return Err(Error::Grid(format!("axis step must be > 0, got {step}")));
    }
    let spans = (max - min) / step;
    if !(1.0 - 1e-9..=MAX_CELLS_PER_AXIS).contains(&spans) {
        return Err(Error::Grid(format!(
            "(max - min)/step must lie in [1, 1e4], got {spans}"
        )));
    }
    let count = (spans + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Axes `u0`, `v0`; parameters fixed.
    Basin,
    /// Axes `y_s`, `omega_s`; initial state fixed.
    DriveMap,
}

impl GridKind {
    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            GridKind::Basin => ("u0", "v0"),
            GridKind::DriveMap => ("y_s", "omega_s"),
        }
    }
}

/// Which classifications count as a hit. `sign = None` accepts both directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetFilter {
    pub m: u32,
    pub n: u32,
    pub sign: Option<i8>,
}

impl Default for TargetFilter {
    fn default() -> Self {
        TargetFilter {
            m: 1,
            n: 1,
            sign: Some(1),
        }
    }
}

impl TargetFilter {
    pub fn matches(&self, class: &OrbitClass) -> bool {
        match *class {
            OrbitClass::Rotating { m, n, sign } => {
                m == self.m && n == self.n && self.sign.is_none_or(|s| s == sign)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub x: Axis,
    pub y: Axis,
    /// Fixed parameters. For drive maps `drive_amplitude` and
    /// `drive_frequency` are replaced per cell.
    pub params: ReducedParams,
    /// Initial state for drive maps; basin cells use `(u0, v0, tau)`.
    pub initial_state: State,
    pub target: TargetFilter,
}

impl GridSpec {
    pub fn basin(params: ReducedParams, u: (f64, f64), v: (f64, f64), step: f64) -> Self {
        GridSpec {
            kind: GridKind::Basin,
            x: Axis::new("u0", u.0, u.1, step),
            y: Axis::new("v0", v.0, v.1, step),
            params,
            initial_state: State::origin(),
            target: TargetFilter::default(),
        }
    }

    pub fn drive_map(
        epsilon: f64,
        load: f64,
        s0: State,
        y_s: (f64, f64),
        omega_s: (f64, f64),
        step: f64,
    ) -> Result<Self> {
        Ok(GridSpec {
            kind: GridKind::DriveMap,
            x: Axis::new("y_s", y_s.0, y_s.1, step),
            y: Axis::new("omega_s", omega_s.0, omega_s.1, step),
            params: ReducedParams::new(epsilon, load, 0.0, 1.0, 0.0)?,
            initial_state: s0,
            target: TargetFilter::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (xn, yn) = self.kind.axis_names();
        if self.x.name != xn || self.y.name != yn {
            return Err(Error::Grid(format!(
                "{:?} grid needs axes ({xn}, {yn}), got ({}, {})",
                self.kind, self.x.name, self.y.name
            )));
        }
        self.x.values()?;
        self.y.values()?;
        self.params.validate()?;
        self.initial_state.validate()
    }

    pub fn dims(&self) -> Result<(usize, usize)> {
        Ok((self.x.len()?, self.y.len()?))
    }

    /// Parameters and initial state of cell `(x, y)` given its axis values.
    pub fn cell_problem(&self, x: f64, y: f64) -> Result<(ReducedParams, State)> {
        match self.kind {
            GridKind::Basin => Ok((self.params, State::new(x, y, self.initial_state.tau))),
            GridKind::DriveMap => {
                let mut p = self.params;
                p.drive_amplitude = x;
                p.drive_frequency = y;
                p.validate()?;
                Ok((p, self.initial_state))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub class: OrbitClass,
    pub residual: f64,
    pub period: u32,
    pub mean_velocity: f64,
    pub delta: f64,
    pub identity_residual: f64,
    pub lyapunov: Option<f64>,
    /// The cell failed numerically (divergence or invalid parameters).
    pub failed: bool,
}

impl CellResult {
    fn from_summary(s: OrbitSummary) -> Self {
        CellResult {
            class: s.class,
            residual: s.residual,
            period: s.period,
            mean_velocity: s.mean_velocity,
            delta: s.delta,
            identity_residual: s.identity_residual,
            lyapunov: s.lyapunov,
            failed: false,
        }
    }

    fn failure() -> Self {
        CellResult {
            class: OrbitClass::Unclassified,
            residual: f64::MAX,
            period: 0,
            mean_velocity: 0.0,
            delta: 0.0,
            identity_residual: 0.0,
            lyapunov: None,
            failed: true,
        }
    }

    /// Converged rotating or locked orbit.
    pub fn is_converged(&self) -> bool {
        matches!(self.class, OrbitClass::Rotating { .. } | OrbitClass::Locked)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub classify: ClassifyOptions,
    /// Integrator step when it is the same for every cell.
    pub step: Option<f64>,
    pub version: String,
    /// Fully resolved run configuration supplied by the caller, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub spec: GridSpec,
    /// Row-major: index `i * ny + j` for first-axis index `i`.
    pub cells: Vec<CellResult>,
    pub metadata: RunMetadata,
}

impl GridResult {
    pub fn dims(&self) -> (usize, usize) {
        self.spec.dims().expect("validated spec")
    }

    pub fn cell(&self, i: usize, j: usize) -> &CellResult {
        let (_, ny) = self.dims();
        &self.cells[i * ny + j]
    }

    pub fn matches(&self) -> impl Iterator<Item = &CellResult> {
        let target = self.spec.target;
        self.cells.iter().filter(move |c| target.matches(&c.class))
    }

    pub fn match_count(&self) -> usize {
        self.matches().count()
    }

    /// Axis values of every cell, row-major.
    pub fn coordinates(&self) -> Vec<(f64, f64)> {
        let xs = self.spec.x.values().expect("validated spec");
        let ys = self.spec.y.values().expect("validated spec");
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub classify: ClassifyOptions,
    pub workers: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            classify: ClassifyOptions {
                period_budget: Some(DEFAULT_PERIOD_BUDGET),
                ..ClassifyOptions::default()
            },
            workers: None,
        }
    }
}

/// Classifies every cell of `spec`.
pub fn run_grid(spec: &GridSpec, opts: &SweepOptions) -> Result<GridResult> {
    spec.validate()?;
    opts.classify.validate()?;
    let xs = spec.x.values()?;
    let ys = spec.y.values()?;
    let pool = pool(opts.workers)?;

    let rows: Vec<Vec<CellResult>> = pool.install(|| {
        xs.par_iter()
            .map(|&x| {
                ys.iter()
                    .map(|&y| {
                        spec.cell_problem(x, y)
                            .and_then(|(p, s0)| classify_orbit(&p, &s0, &opts.classify))
                            .map(CellResult::from_summary)
                            .unwrap_or_else(|_| CellResult::failure())
                    })
                    .collect()
            })
            .collect()
    });

    let step = match spec.kind {
        GridKind::Basin => Some(crate::dynamics::step_size(
            &spec.params,
            opts.classify.integrator.steps_per_period,
        )),
        GridKind::DriveMap => None,
    };
    Ok(GridResult {
        spec: spec.clone(),
        cells: rows.into_iter().flatten().collect(),
        metadata: RunMetadata {
            classify: opts.classify,
            step,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: None,
        },
    })
}

/// Basin of attraction over `(u0, v0)` at fixed parameters.
pub fn basin_map(p: &ReducedParams, spec: &GridSpec, opts: &SweepOptions) -> Result<GridResult> {
    if spec.kind != GridKind::Basin {
        return Err(Error::Grid("basin_map needs a basin grid".into()));
    }
    let mut spec = spec.clone();
    spec.params = *p;
    run_grid(&spec, opts)
}

/// Classification map over `(y_s, omega_s)` from a fixed initial state.
pub fn drive_map(
    epsilon: f64,
    load: f64,
    s0: &State,
    spec: &GridSpec,
    target: TargetFilter,
    opts: &SweepOptions,
) -> Result<GridResult> {
    if spec.kind != GridKind::DriveMap {
        return Err(Error::Grid("drive_map needs a drive-map grid".into()));
    }
    let mut spec = spec.clone();
    spec.params.epsilon = epsilon;
    spec.params.load = load;
    spec.initial_state = *s0;
    spec.target = target;
    run_grid(&spec, opts)
}
