//! Independent oracles and fixtures shared by the integration tests. Apart
//! from `reduction_sup_norm`, which compares the library's two integrators,
//! nothing here calls into the library's integrator.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rackpinion_core::dynamics::integrate_physical;
use rackpinion_core::{
    integrate, reduce_parameters, DriveParams, PhysicalParams, ReducedParams, State,
};
use rand::Rng;

/// One textbook RK4 step of the reduced equation with the drive evaluated directly.
pub fn rk4_step(p: &ReducedParams, u: f64, v: f64, t: f64, h: f64) -> (f64, f64) {
    let f = |u: f64, v: f64, t: f64| {
        (
            v,
            -u.sin() - p.epsilon * v - p.load
                + p.drive_amplitude * (p.drive_frequency * t + p.drive_phase).cos(),
        )
    };
    let k1 = f(u, v, t);
    let k2 = f(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1, t + 0.5 * h);
    let k3 = f(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1, t + 0.5 * h);
    let k4 = f(u + h * k3.0, v + h * k3.1, t + h);
    (
        u + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

pub fn rk4_trajectory(
    p: &ReducedParams,
    u0: f64,
    v0: f64,
    t0: f64,
    h: f64,
    steps: usize,
) -> Vec<(f64, f64)> {
    let (mut u, mut v) = (u0, v0);
    let mut out = Vec::with_capacity(steps + 1);
    out.push((u, v));
    for i in 0..steps {
        (u, v) = rk4_step(p, u, v, t0 + i as f64 * h, h);
        out.push((u, v));
    }
    out
}

/// Largest exponent from two nearby trajectories: separation `d0` along `u`,
/// rescaled to `d0` after every drive period, `spp` steps per period.
pub fn two_trajectory_exponent(
    p: &ReducedParams,
    u0: f64,
    v0: f64,
    periods: usize,
    spp: usize,
    d0: f64,
) -> f64 {
    let period = std::f64::consts::TAU / p.drive_frequency;
    let h = period / spp as f64;
    let (mut a, mut b) = ((u0, v0), (u0 + d0, v0));
    let mut log_sum = 0.0;
    for k in 0..periods {
        for i in 0..spp {
            let t = k as f64 * period + i as f64 * h;
            a = rk4_step(p, a.0, a.1, t, h);
            b = rk4_step(p, b.0, b.1, t, h);
        }
        let (du, dv) = (b.0 - a.0, b.1 - a.1);
        let d = du.hypot(dv);
        log_sum += (d / d0).ln();
        b = (a.0 + du * d0 / d, a.1 + dv * d0 / d);
    }
    log_sum / (periods as f64 * period)
}

/// `B(1/2, a - 1/2) = π (2a-2)! / (4^(a-1) ((a-1)!)²)` for integer `a ≥ 1`.
pub fn beta_half(a: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    std::f64::consts::PI * fact(2 * a - 2) / (4f64.powi(a as i32 - 1) * fact(a - 1).powi(2))
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Physical parameters drawn so that the reduced ones land in
/// ε ∈ [0.05, 1], w ∈ [0, 0.9], ω_s ∈ [0.3, 2], y_s ∈ [0, 2],
/// plus an initial position and velocity.
pub fn random_physical_case(rng: &mut impl Rng) -> (PhysicalParams, DriveParams, f64, f64) {
    let inertia = log_uniform(rng, 1e-24, 1e-20);
    let radius = log_uniform(rng, 1e-6, 1e-4);
    let wavelength = log_uniform(rng, 1e-7, 1e-5);
    let force = log_uniform(rng, 1e-13, 1e-10);
    let t = (inertia * wavelength / (TAU * force * radius * radius)).sqrt();

    let friction = rng.gen_range(0.05..1.0) * inertia / t;
    let arm = log_uniform(rng, 1e-6, 1e-4);
    let load = rng.gen_range(0.0..0.9) * radius * force / arm;
    let omega_p = rng.gen_range(0.3..2.0) / t;
    let y_s = rng.gen_range(0.0..2.0);
    let y_p = y_s * force * radius * radius
        / (omega_p * inertia * (omega_p * omega_p + (friction / inertia).powi(2)).sqrt());
    let phase = rng.gen_range(-PI..PI);
    let phys = PhysicalParams {
        moment_of_inertia: inertia,
        pinion_radius: radius,
        rotational_friction: friction,
        corrugation_wavelength: wavelength,
        force_amplitude: force,
        load_arm: arm,
        load,
    };
    let drive = DriveParams::new(y_p, omega_p, phase).unwrap();
    let x0 = rng.gen_range(-1.0..1.0) * wavelength;
    let xd0 = rng.gen_range(-1.0..1.0) * wavelength / t;
    (phys, drive, x0, xd0)
}

/// Sup-norm distance over `tau_end` reduced time units between reduced
/// integration and physical integration mapped by hand into (u, v).
pub fn reduction_sup_norm(
    phys: &PhysicalParams,
    drive: &DriveParams,
    x0: f64,
    xd0: f64,
    tau_end: f64,
    spp: usize,
) -> (f64, ReducedParams) {
    let p = reduce_parameters(phys, drive).unwrap();
    let t = p.time_scale;
    let k = TAU / phys.corrugation_wavelength;
    // u = k (x - y), v = T k (ẋ - ẏ)
    let y = |t: f64| drive.amplitude * (drive.angular_frequency * t + drive.phase).cos();
    let yd = |t: f64| {
        -drive.amplitude
            * drive.angular_frequency
            * (drive.angular_frequency * t + drive.phase).sin()
    };
    let s0 = State::new(k * (x0 - y(0.0)), t * k * (xd0 - yd(0.0)), 0.0);

    let reduced = integrate(&s0, &p, tau_end, spp).unwrap();
    let steps = reduced.len() - 1;
    let t_end = steps as f64 * reduced.step * t;
    let physical = integrate_physical(phys, drive, x0, xd0, t_end, steps).unwrap();

    let mut sup: f64 = 0.0;
    for (r, q) in reduced.samples.iter().zip(&physical.samples) {
        let u = k * (q.x - y(q.t));
        let v = t * k * (q.x_dot - yd(q.t));
        sup = sup.max((u - r.u).abs()).max((v - r.v).abs());
    }
    (sup, p)
}
