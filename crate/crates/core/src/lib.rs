//! Dynamics of a cylindrical pinion coupled to a laterally vibrating rack
//! through the lateral Casimir force.
//!
//! The reduced equation of motion is the driven, damped, tilted pendulum
//!
//! ```text
//! u'' = -sin u - ε u' - w + y_s cos(ω_s τ + φ_s)
//! ```
//!
//! This crate reduces physical parameters to `(ε, w, y_s, ω_s, φ_s)`,
//! integrates trajectories, classifies steady states as rotating, locked or
//! chaotic, sweeps basins and drive-parameter maps, bounds and bisects the
//! critical load, and evaluates the force amplitude in the proximity force
//! approximation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod casimir;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod load;
pub mod orbit;
pub mod parallel;
pub mod params;
pub mod quadrature;
pub mod stability;
pub mod sweep;

pub use casimir::{force_amplitude, ForceKernel, ForceResult, RackPinionGeometry};
pub use dynamics::{
    integrate, integrate_physical, reduced_rhs, IntegratorOptions, State, Trajectory,
};
pub use error::{Error, Result};
pub use load::{
    critical_load, CriticalLoadOptions, CriticalLoadResult, DeltaMode, IcPolicy, LoadBounds,
};
pub use orbit::{classify_orbit, ClassifyOptions, OrbitClass, OrbitSummary};
pub use params::{reduce_parameters, DriveParams, PhysicalParams, ReducedParams};
pub use stability::{largest_lyapunov, LyapunovOptions, LyapunovResult};
pub use sweep::{basin_map, drive_map, GridKind, GridResult, GridSpec, SweepOptions, TargetFilter};
