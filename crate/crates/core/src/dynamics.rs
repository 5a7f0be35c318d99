//! Reduced and physical equations of motion, and the fixed-step RK4 integrator.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::params::{DriveParams, PhysicalParams, ReducedParams};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 1000;
pub const MIN_STEPS_PER_PERIOD: usize = 16;
pub const DEFAULT_DIVERGENCE_GUARD: f64 = 1.0e3;

/// A point of the reduced phase plane at reduced time `tau`.
///
/// `u` is never wrapped modulo 2π: its winding is the observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: f64,
    pub v: f64,
    pub tau: f64,
}

impl State {
    pub fn new(u: f64, v: f64, tau: f64) -> Self {
        State { u, v, tau }
    }

    pub fn origin() -> Self {
        State::new(0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("u", self.u)?;
        ensure_finite("v", self.v)?;
        ensure_finite("tau", self.tau)
    }

    /// `u` folded into (-π, π], for presentation only.
    pub fn wrapped_u(&self) -> f64 {
        crate::params::wrap_phase(self.u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub steps_per_period: usize,
    pub divergence_guard: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
            divergence_guard: DEFAULT_DIVERGENCE_GUARD,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::invalid(
                "steps_per_period",
                format!(
                    "must be >= {MIN_STEPS_PER_PERIOD}, got {}",
                    self.steps_per_period
                ),
            ));
        }
        if !(self.divergence_guard > 0.0) {
            return Err(Error::invalid("divergence_guard", "must be > 0"));
        }
        Ok(())
    }
}

/// Integrator step `h`: the reference period divided by `steps_per_period`.
pub fn step_size(p: &ReducedParams, steps_per_period: usize) -> f64 {
    p.reference_period() / steps_per_period as f64
}

/// Right-hand side `(du/dτ, dv/dτ)` of the reduced equation.
pub fn reduced_rhs(s: &State, p: &ReducedParams) -> Result<(f64, f64)> {
    s.validate()?;
    p.validate()?;
    Ok((s.v, -s.u.sin() - p.epsilon * s.v - p.load + p.drive(s.tau)))
}

/// Uniformly sampled orbit of the reduced equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<State>,
    pub step: f64,
    pub params: ReducedParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&State> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.samples.last()
    }

    /// Reduced-time span covered by the samples.
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.tau - a.tau,
            _ => 0.0,
        }
    }

    /// Sub-trajectory of samples `start..=end`.
    pub fn window(&self, start: usize, end: usize) -> Trajectory {
        Trajectory {
            samples: self.samples[start..=end].to_vec(),
            step: self.step,
            params: self.params,
        }
    }
}

/// Stateful RK4 stepper for the reduced equation.
///
/// The drive is tabulated at half-step resolution over one period so the
/// forcing seen by the discrete map is exactly periodic in the step index.
#[derive(Debug, Clone)]
pub(crate) struct Stepper {
    epsilon: f64,
    load: f64,
    h: f64,
    tau0: f64,
    drive_table: Vec<f64>,
    phase_index: usize,
    steps_taken: u64,
    guard: f64,
    pub u: f64,
    pub v: f64,
}

impl Stepper {
    pub fn new(s0: &State, p: &ReducedParams, opts: &IntegratorOptions) -> Result<Self> {
        s0.validate()?;
        p.validate()?;
        opts.validate()?;
        let h = step_size(p, opts.steps_per_period);
        let drive_table = if p.drive_amplitude > 0.0 {
            (0..2 * opts.steps_per_period)
                .map(|j| p.drive(s0.tau + j as f64 * 0.5 * h))
                .collect()
        } else {
            vec![0.0; 2]
        };
        Ok(Stepper {
            epsilon: p.epsilon,
            load: p.load,
            h,
            tau0: s0.tau,
            drive_table,
            phase_index: 0,
            steps_taken: 0,
            guard: opts.divergence_guard,
            u: s0.u,
            v: s0.v,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau0 + self.steps_taken as f64 * self.h
    }

    pub fn state(&self) -> State {
        State::new(self.u, self.v, self.tau())
    }

    /// Drive values at the start, midpoint and end of the current step.
    #[inline]
    pub fn stage_drive(&self) -> (f64, f64, f64) {
        let j = self.phase_index;
        let n = self.drive_table.len();
        let next = if j + 2 == n { 0 } else { j + 2 };
        (
            self.drive_table[j],
            self.drive_table[j + 1],
            self.drive_table[next],
        )
    }

    #[inline]
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    #[inline]
    pub fn accel(&self, u: f64, v: f64, drive: f64) -> f64 {
        -u.sin() - self.epsilon * v - self.load + drive
    }

    #[inline]
    pub fn advance_clock(&mut self) {
        self.phase_index += 2;
        if self.phase_index == self.drive_table.len() {
            self.phase_index = 0;
        }
        self.steps_taken += 1;
    }

    #[inline]
    pub fn check_guard(&self) -> Result<()> {
        if !(self.v.abs() <= self.guard) {
            return Err(Error::Divergence {
                tau: self.tau(),
                velocity: self.v,
                guard: self.guard,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn step(&mut self) -> Result<()> {
        let h = self.h;
        let (d0, dm, d1) = self.stage_drive();
        let (u, v) = (self.u, self.v);

        let k1u = v;
        let k1v = self.accel(u, v, d0);
        let k2u = v + 0.5 * h * k1v;
        let k2v = self.accel(u + 0.5 * h * k1u, k2u, dm);
        let k3u = v + 0.5 * h * k2v;
        let k3v = self.accel(u + 0.5 * h * k2u, k3u, dm);
        let k4u = v + h * k3v;
        let k4v = self.accel(u + h * k3u, k4u, d1);

        self.u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        self.v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        self.advance_clock();
        self.check_guard()
    }

    pub fn run(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Integrates the reduced equation from `s0` to (at least) `tau_end`
/// with the default divergence guard.
pub fn integrate(
    s0: &State,
    p: &ReducedParams,
    tau_end: f64,
    steps_per_period: usize,
) -> Result<Trajectory> {
    integrate_with(
        s0,
        p,
        tau_end,
        &IntegratorOptions {
            steps_per_period,
            ..IntegratorOptions::default()
        },
    )
}

/// Integrates the reduced equation with explicit options.
///
/// The step is `h = period / steps_per_period` and the number of steps is
/// `ceil((tau_end - tau0) / h)`, so the last sample may overshoot `tau_end`
/// by less than one step.
pub fn integrate_with(
    s0: &State,
    p: &ReducedParams,
    tau_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    ensure_finite("tau_end", tau_end)?;
    if tau_end <= s0.tau {
        return Err(Error::invalid("tau_end", "must exceed the initial time"));
    }
    let mut stepper = Stepper::new(s0, p, opts)?;
    let h = stepper.step_size();
    let steps = ((tau_end - s0.tau) / h - 1e-9).ceil().max(1.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(*s0);
    for _ in 0..steps {
        stepper.step()?;
        samples.push(stepper.state());
    }
    Ok(Trajectory {
        samples,
        step: h,
        params: *p,
    })
}

/// Sample of the physical system: pinion coordinate `x` and its velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalState {
    pub x: f64,
    pub x_dot: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalTrajectory {
    pub samples: Vec<PhysicalState>,
    pub step: f64,
    pub phys: PhysicalParams,
    pub drive: DriveParams,
}

impl PhysicalTrajectory {
    /// Maps each sample onto the reduced phase plane:
    /// `u = 2π(x - y)/λ`, `v = T·2π(ẋ - ẏ)/λ`, `τ = t/T`.
    pub fn to_reduced(&self) -> Vec<State> {
        let k = self.phys.wavenumber();
        let t_scale = self.phys.time_scale();
        self.samples
            .iter()
            .map(|s| {
                let y = self.drive.position(s.t);
                let y_dot = self.drive.velocity(s.t);
                State::new(
                    k * (s.x - y),
                    t_scale * k * (s.x_dot - y_dot),
                    s.t / t_scale,
                )
            })
            .collect()
    }
}

/// Integrates the physical equation of motion of the pinion directly, with
/// `steps` uniform RK4 steps over `[0, t_end]`.
pub fn integrate_physical(
    phys: &PhysicalParams,
    drive: &DriveParams,
    x0: f64,
    x_dot0: f64,
    t_end: f64,
    steps: usize,
) -> Result<PhysicalTrajectory> {
    phys.validate()?;
    drive.validate()?;
    ensure_finite("x0", x0)?;
    ensure_finite("x_dot0", x_dot0)?;
    ensure_finite("t_end", t_end)?;
    if t_end <= 0.0 {
        return Err(Error::invalid("t_end", "must be > 0"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps", "must be > 0"));
    }
    let k = phys.wavenumber();
    let r_over_i = phys.pinion_radius / phys.moment_of_inertia;
    let coupling = phys.pinion_radius * phys.force_amplitude;
    let drag = phys.rotational_friction / phys.pinion_radius;
    let torque = phys.load_arm * phys.load;
    let accel = |x: f64, xd: f64, t: f64| {
        let y = drive.position(t);
        r_over_i * (-coupling * (k * (x - y)).sin() - drag * xd - torque)
    };
    // guard expressed on the reduced velocity
    let velocity_scale = phys.time_scale() * k;
    let guard = DEFAULT_DIVERGENCE_GUARD;

    let dt = t_end / steps as f64;
    let mut samples = Vec::with_capacity(steps + 1);
    let (mut x, mut xd) = (x0, x_dot0);
    samples.push(PhysicalState {
        x,
        x_dot: xd,
        t: 0.0,
    });
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1x = xd;
        let k1v = accel(x, xd, t);
        let k2x = xd + 0.5 * dt * k1v;
        let k2v = accel(x + 0.5 * dt * k1x, k2x, t + 0.5 * dt);
        let k3x = xd + 0.5 * dt * k2v;
        let k3v = accel(x + 0.5 * dt * k2x, k3x, t + 0.5 * dt);
        let k4x = xd + dt * k3v;
        let k4v = accel(x + dt * k3x, k4x, t + dt);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        xd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        let t_next = (i + 1) as f64 * dt;
        let v_reduced = velocity_scale * (xd - drive.velocity(t_next));
        if !(v_reduced.abs() <= guard) {
            return Err(Error::Divergence {
                tau: t_next / phys.time_scale(),
                velocity: v_reduced,
                guard,
            });
        }
        samples.push(PhysicalState {
            x,
            x_dot: xd,
            t: t_next,
        });
    }
    Ok(PhysicalTrajectory {
        samples,
        step: dt,
        phys: *phys,
        drive: *drive,
    })
}

/// Energy `v²/2 - cos u` of the undriven, undamped pendulum.
pub fn pendulum_energy(s: &State) -> f64 {
    0.5 * s.v * s.v - s.u.cos()
}

/// Convenience: `2π` over the default resolution, the step used when there is no drive.
pub fn undriven_default_step() -> f64 {
    TAU / DEFAULT_STEPS_PER_PERIOD as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn params(eps: f64, w: f64, ys: f64, ws: f64, phi: f64) -> ReducedParams {
        ReducedParams::new(eps, w, ys, ws, phi).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let p = params(0.3, 0.0, 0.0, 1.0, 0.0);
        assert_eq!(reduced_rhs(&State::origin(), &p).unwrap(), (0.0, 0.0));

        let p = params(0.0, 0.0, 0.0, 1.0, 0.0);
        let (du, dv) = reduced_rhs(&State::new(FRAC_PI_2, 0.0, 0.0), &p).unwrap();
        assert_eq!(du, 0.0);
        assert!((dv + 1.0).abs() < 1e-15);

        let p = params(0.5, 0.185, 1.4, 2.0 / 3.0, 0.0);
        let (du, dv) = reduced_rhs(&State::origin(), &p).unwrap();
        assert_eq!(du, 0.0);
        assert!((dv - 1.215).abs() < 1e-14);
    }

    #[test]
    fn rhs_rejects_non_finite() {
        let p = params(0.0, 0.0, 0.0, 1.0, 0.0);
        assert!(reduced_rhs(&State::new(f64::NAN, 0.0, 0.0), &p).is_err());
    }

    #[test]
    fn undriven_step_defaults_to_pendulum_period() {
        let p = params(0.5, 0.0, 0.0, 2.0 / 3.0, 0.0);
        assert!((step_size(&p, DEFAULT_STEPS_PER_PERIOD) - undriven_default_step()).abs() < 1e-18);
    }

    #[test]
    fn damped_pendulum_settles() {
        let p = params(0.5, 0.0, 0.0, 1.0, 0.0);
        let traj = integrate(&State::new(0.1, 0.0, 0.0), &p, 200.0, 1000).unwrap();
        let end = traj.last().unwrap();
        assert!(end.u.abs() < 1e-6 && end.v.abs() < 1e-6);
    }

    #[test]
    fn samples_are_uniform() {
        let p = params(0.5, 0.185, 1.4, 2.0 / 3.0, 0.0);
        let traj = integrate(&State::new(0.0, 0.0, 2.0), &p, 30.0, 64).unwrap();
        for (i, s) in traj.samples.iter().enumerate() {
            assert!((s.tau - (2.0 + i as f64 * traj.step)).abs() < 1e-12);
        }
        assert!(traj.last().unwrap().tau >= 30.0 - 1e-9);
    }

    #[test]
    fn rejects_coarse_resolution_and_bad_end() {
        let p = params(0.5, 0.0, 1.0, 1.0, 0.0);
        assert!(integrate(&State::origin(), &p, 10.0, 8).is_err());
        assert!(integrate(&State::origin(), &p, 0.0, 100).is_err());
    }

    #[test]
    fn load_beyond_unity_diverges() {
        let p = params(0.0, 2.0, 0.0, 1.0, 0.0);
        match integrate(&State::origin(), &p, 5000.0, 100) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn physical_equilibrium_is_stationary() {
        let phys = PhysicalParams {
            moment_of_inertia: 2.0,
            pinion_radius: 0.5,
            rotational_friction: 0.3,
            corrugation_wavelength: 1.5,
            force_amplitude: 3.0,
            load_arm: 1.0,
            load: 0.0,
        };
        let drive = DriveParams::new(0.0, 1.0, 0.0).unwrap();
        let traj = integrate_physical(&phys, &drive, 3.0, 0.0, 50.0, 5000).unwrap();
        for s in &traj.samples {
            assert!((s.x - 3.0).abs() < 1e-12 && s.x_dot.abs() < 1e-12);
        }
    }
}
