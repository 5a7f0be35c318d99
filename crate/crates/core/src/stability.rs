//! Largest Lyapunov exponent of the reduced flow.
//!
//! The state is integrated jointly with the tangent system
//! `δu' = δv`, `δv' = -cos(u) δu - ε δv`, and the tangent vector is
//! renormalized every `renorm_interval` (Benettin's method).

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorOptions, State, Stepper};
use crate::error::{ensure_finite, Error, Result};
use crate::params::ReducedParams;

pub const DEFAULT_HORIZON: f64 = 1.0e4;
pub const MIN_HORIZON: f64 = 1.0e3;
pub const DEFAULT_CHAOS_THRESHOLD: f64 = 1.0e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    pub lambda_max: f64,
    pub horizon: f64,
    pub renorm_interval: f64,
    pub convergence_history: Vec<f64>,
}

impl LyapunovResult {
    pub fn is_chaotic(&self, threshold: f64) -> bool {
        self.lambda_max > threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub horizon: f64,
    /// Reduced time between renormalizations; `None` means one drive period.
    pub renorm_interval: Option<f64>,
    pub chaos_threshold: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            horizon: DEFAULT_HORIZON,
            renorm_interval: None,
            chaos_threshold: DEFAULT_CHAOS_THRESHOLD,
        }
    }
}

/// Largest Lyapunov exponent from `s0` with the default integrator resolution
/// and initial tangent direction `(1, 0)`.
pub fn largest_lyapunov(
    p: &ReducedParams,
    s0: &State,
    horizon: f64,
    renorm_interval: Option<f64>,
) -> Result<LyapunovResult> {
    largest_lyapunov_with(
        p,
        s0,
        horizon,
        renorm_interval,
        (1.0, 0.0),
        &IntegratorOptions::default(),
    )
}

pub fn largest_lyapunov_with(
    p: &ReducedParams,
    s0: &State,
    horizon: f64,
    renorm_interval: Option<f64>,
    direction: (f64, f64),
    integrator: &IntegratorOptions,
) -> Result<LyapunovResult> {
    ensure_finite("horizon", horizon)?;
    if horizon < MIN_HORIZON {
        return Err(Error::invalid(
            "horizon",
            format!("must be >= {MIN_HORIZON}, got {horizon}"),
        ));
    }
    let mut stepper = Stepper::new(s0, p, integrator)?;
    lyapunov_from(&mut stepper, p, horizon, renorm_interval, direction)
}

/// Continues an existing integration with the tangent system attached.
pub(crate) fn lyapunov_from(
    stepper: &mut Stepper,
    p: &ReducedParams,
    horizon: f64,
    renorm_interval: Option<f64>,
    direction: (f64, f64),
) -> Result<LyapunovResult> {
    let h = stepper.step_size();
    let interval = renorm_interval.unwrap_or_else(|| p.reference_period());
    ensure_finite("renorm_interval", interval)?;
    if interval <= 0.0 {
        return Err(Error::invalid("renorm_interval", "must be > 0"));
    }
    let norm0 = direction.0.hypot(direction.1);
    if !(norm0 > 0.0) || !norm0.is_finite() {
        return Err(Error::invalid(
            "direction",
            "must be a finite nonzero vector",
        ));
    }
    let steps_per_renorm = ((interval / h).round() as u64).max(1);
    let interval = steps_per_renorm as f64 * h;
    let renorms = ((horizon / interval).ceil() as u64).max(1);

    let (mut du, mut dv) = (direction.0 / norm0, direction.1 / norm0);
    let mut log_sum = 0.0;
    let mut history = Vec::with_capacity(renorms as usize);
    for r in 1..=renorms {
        for _ in 0..steps_per_renorm {
            tangent_step(stepper, &mut du, &mut dv)?;
        }
        let norm = du.hypot(dv);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(
                "tangent",
                "tangent vector collapsed or overflowed",
            ));
        }
        log_sum += norm.ln();
        du /= norm;
        dv /= norm;
        history.push(log_sum / (r as f64 * interval));
    }
    Ok(LyapunovResult {
        lambda_max: *history.last().expect("at least one renormalization"),
        horizon: renorms as f64 * interval,
        renorm_interval: interval,
        convergence_history: history,
    })
}

/// One RK4 step of the state and its tangent vector.
#[inline]
fn tangent_step(s: &mut Stepper, du: &mut f64, dv: &mut f64) -> Result<()> {
    let h = s.step_size();
    let eps = s.epsilon();
    let (d0, dm, d1) = s.stage_drive();
    let (u, v, a, b) = (s.u, s.v, *du, *dv);

    let k1u = v;
    let k1v = s.accel(u, v, d0);
    let k1a = b;
    let k1b = -u.cos() * a - eps * b;

    let u2 = u + 0.5 * h * k1u;
    let v2 = v + 0.5 * h * k1v;
    let a2 = a + 0.5 * h * k1a;
    let b2 = b + 0.5 * h * k1b;
    let k2u = v2;
    let k2v = s.accel(u2, v2, dm);
    let k2a = b2;
    let k2b = -u2.cos() * a2 - eps * b2;

    let u3 = u + 0.5 * h * k2u;
    let v3 = v + 0.5 * h * k2v;
    let a3 = a + 0.5 * h * k2a;
    let b3 = b + 0.5 * h * k2b;
    let k3u = v3;
    let k3v = s.accel(u3, v3, dm);
    let k3a = b3;
    let k3b = -u3.cos() * a3 - eps * b3;

    let u4 = u + h * k3u;
    let v4 = v + h * k3v;
    let a4 = a + h * k3a;
    let b4 = b + h * k3b;
    let k4u = v4;
    let k4v = s.accel(u4, v4, d1);
    let k4a = b4;
    let k4b = -u4.cos() * a4 - eps * b4;

    s.u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    s.v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    *du = a + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    *dv = b + h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
    s.advance_clock();
    s.check_guard()
}
