//! Run configuration: a JSON document, optionally patched by `--set key=value`.

use std::path::{Path, PathBuf};

use rackpinion_core::casimir::{parse_length, RackPinionGeometry};
use rackpinion_core::io::GridFormat;
use rackpinion_core::load::IcPolicy;
use rackpinion_core::stability::LyapunovOptions;
use rackpinion_core::{
    reduce_parameters, ClassifyOptions, DriveParams, IntegratorOptions, PhysicalParams,
    ReducedParams, State, TargetFilter,
};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Classify,
    Basin,
    DriveMap,
    Lyapunov,
    CriticalLoad,
    Force,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Simulate,
        Mode::Classify,
        Mode::Basin,
        Mode::DriveMap,
        Mode::Lyapunov,
        Mode::CriticalLoad,
        Mode::Force,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Classify => "classify",
            Mode::Basin => "basin",
            Mode::DriveMap => "drive-map",
            Mode::Lyapunov => "lyapunov",
            Mode::CriticalLoad => "critical-load",
            Mode::Force => "force",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// A length given as metres or as a string with a unit suffix (`"10 nm"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Length(pub f64);

impl<'de> Deserialize<'de> for Length {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Length(x)),
            Raw::Text(s) => parse_length(&s)
                .map(Length)
                .map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalBlock {
    pub moment_of_inertia: f64,
    pub pinion_radius: Length,
    pub rotational_friction: f64,
    pub corrugation_wavelength: Length,
    pub force_amplitude: f64,
    #[serde(default = "zero_length")]
    pub load_arm: Length,
    #[serde(default)]
    pub load: f64,
    pub drive: DriveBlock,
}

fn zero_length() -> Length {
    Length(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    pub amplitude: Length,
    pub angular_frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl PhysicalBlock {
    pub fn params(&self) -> (PhysicalParams, DriveParams) {
        (
            PhysicalParams {
                moment_of_inertia: self.moment_of_inertia,
                pinion_radius: self.pinion_radius.0,
                rotational_friction: self.rotational_friction,
                corrugation_wavelength: self.corrugation_wavelength.0,
                force_amplitude: self.force_amplitude,
                load_arm: self.load_arm.0,
                load: self.load,
            },
            DriveParams {
                amplitude: self.drive.amplitude.0,
                angular_frequency: self.drive.angular_frequency,
                phase: self.drive.phase,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedBlock {
    pub epsilon: f64,
    #[serde(default)]
    pub load: f64,
    #[serde(default)]
    pub drive_amplitude: f64,
    #[serde(default = "one")]
    pub drive_frequency: f64,
    #[serde(default)]
    pub drive_phase: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub steps_per_period: usize,
    pub divergence_guard: f64,
    pub transient_periods: u32,
    pub early_settle: bool,
    pub min_transient_periods: u32,
    pub settle_factor: f64,
    pub test_periods: u32,
    pub n_max: u32,
    pub m_max: u32,
    pub tolerance: f64,
    /// Screen unmatched orbits with a Lyapunov exponent.
    pub lyapunov_screening: bool,
    pub lyapunov_horizon: f64,
    pub chaos_threshold: f64,
    /// Cap on drive periods per classification; grids default to 500.
    pub period_budget: Option<u32>,
}

impl Default for Numerics {
    fn default() -> Self {
        let c = ClassifyOptions::default();
        let l = LyapunovOptions::default();
        Numerics {
            steps_per_period: c.integrator.steps_per_period,
            divergence_guard: c.integrator.divergence_guard,
            transient_periods: c.transient_periods,
            early_settle: c.early_settle,
            min_transient_periods: c.min_transient_periods,
            settle_factor: c.settle_factor,
            test_periods: c.test_periods,
            n_max: c.n_max,
            m_max: c.m_max,
            tolerance: c.tolerance,
            lyapunov_screening: true,
            lyapunov_horizon: l.horizon,
            chaos_threshold: l.chaos_threshold,
            period_budget: None,
        }
    }
}

impl Numerics {
    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            steps_per_period: self.steps_per_period,
            divergence_guard: self.divergence_guard,
        }
    }

    pub fn classify(&self) -> ClassifyOptions {
        ClassifyOptions {
            integrator: self.integrator(),
            transient_periods: self.transient_periods,
            early_settle: self.early_settle,
            min_transient_periods: self.min_transient_periods,
            settle_factor: self.settle_factor,
            test_periods: self.test_periods,
            n_max: self.n_max,
            m_max: self.m_max,
            tolerance: self.tolerance,
            lyapunov: self.lyapunov_screening.then_some(LyapunovOptions {
                horizon: self.lyapunov_horizon,
                renorm_interval: None,
                chaos_threshold: self.chaos_threshold,
            }),
            period_budget: self.period_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub tau_end: f64,
    /// Keep every `stride`-th sample in the output.
    pub stride: usize,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        SimulateBlock {
            tau_end: 100.0,
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisBlock {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    #[serde(default = "one_u32")]
    pub m: u32,
    #[serde(default = "one_u32")]
    pub n: u32,
    /// +1 (default), -1, or null for either direction.
    #[serde(default = "plus_one")]
    pub sign: Option<i8>,
}

fn one_u32() -> u32 {
    1
}

fn plus_one() -> Option<i8> {
    Some(1)
}

impl From<TargetBlock> for TargetFilter {
    fn from(t: TargetBlock) -> Self {
        TargetFilter {
            m: t.m,
            n: t.n,
            sign: t.sign,
        }
    }
}

/// Axes are `(u0, v0)` for basins and `(y_s, omega_s)` for drive maps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x: AxisBlock,
    pub y: AxisBlock,
    #[serde(default)]
    pub target: Option<TargetBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovBlock {
    pub horizon: f64,
    pub renorm_interval: Option<f64>,
    pub direction: (f64, f64),
}

impl Default for LyapunovBlock {
    fn default() -> Self {
        LyapunovBlock {
            horizon: LyapunovOptions::default().horizon,
            renorm_interval: None,
            direction: (1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalLoadBlock {
    pub m: u32,
    pub n: u32,
    pub bracket: Option<(f64, f64)>,
    pub tolerance: f64,
    pub initial_conditions: IcPolicy,
    pub verify_offsets: Vec<f64>,
}

impl Default for CriticalLoadBlock {
    fn default() -> Self {
        let d = rackpinion_core::CriticalLoadOptions::default();
        CriticalLoadBlock {
            m: 1,
            n: 1,
            bracket: None,
            tolerance: d.tolerance,
            initial_conditions: d.ic_policy,
            verify_offsets: d.verify_offsets,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub pinion_length: Length,
    pub pinion_radius: Length,
    pub pinion_amplitude: Length,
    pub rack_amplitude: Length,
    pub wavelength: Length,
    pub gap: Length,
}

impl GeometryBlock {
    pub fn geometry(&self) -> RackPinionGeometry {
        RackPinionGeometry {
            pinion_length: self.pinion_length.0,
            pinion_radius: self.pinion_radius.0,
            pinion_amplitude: self.pinion_amplitude.0,
            rack_amplitude: self.rack_amplitude.0,
            wavelength: self.wavelength.0,
            gap: self.gap.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapSweep {
    pub min: Length,
    pub max: Length,
    /// Logarithmically spaced points, endpoints included.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceBlock {
    pub geometry: GeometryBlock,
    /// Builtin kernel name (`unit`, `toy`, `exponential`).
    #[serde(default = "toy_name")]
    pub kernel: String,
    /// Tabulated kernel file; takes precedence over `kernel`.
    #[serde(default)]
    pub kernel_file: Option<PathBuf>,
    #[serde(default)]
    pub gap_sweep: Option<GapSweep>,
}

fn toy_name() -> String {
    "toy".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub path: Option<PathBuf>,
    pub format: Option<GridFormat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedBlock>,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub lyapunov: LyapunovBlock,
    #[serde(default)]
    pub critical_load: CriticalLoadBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<ForceBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Parameters after validation and, for a physical block, reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub reduced: ReducedParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical: Option<(PhysicalParams, DriveParams)>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            CliError::Config(format!(
                "{}: key `{}`: {}",
                path.display(),
                e.path(),
                e.inner()
            ))
        })
    }

    pub fn initial_state(&self) -> State {
        State::new(
            self.initial_state.u,
            self.initial_state.v,
            self.initial_state.tau,
        )
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        match (&self.physical, &self.reduced) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "config has both `physical` and `reduced` blocks; give exactly one".into(),
            )),
            (None, None) => Err(CliError::Config(
                "config needs a `physical` or a `reduced` block".into(),
            )),
            (Some(ph), None) => {
                let (phys, drive) = ph.params();
                let reduced = reduce_parameters(&phys, &drive).map_err(CliError::from_core)?;
                Ok(Resolved {
                    reduced,
                    physical: Some((phys, drive)),
                })
            }
            (None, Some(r)) => {
                let reduced = ReducedParams::new(
                    r.epsilon,
                    r.load,
                    r.drive_amplitude,
                    r.drive_frequency,
                    r.drive_phase,
                )
                .map_err(CliError::from_core)?;
                Ok(Resolved {
                    reduced,
                    physical: None,
                })
            }
        }
    }
}

/// Applies `a.b.c=value`; the value is JSON when it parses as JSON, a string otherwise.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        CliError::Config(format!("override `{spec}` is not of the form key=value"))
    })?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{path}` is malformed"
        )));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().expect("just set")
            }
            _ => {
                return Err(CliError::Config(format!(
                    "override key `{}` is not an object",
                    keys[..i].join(".")
                )))
            }
        };
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last key")
}
