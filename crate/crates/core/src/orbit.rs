//! Steady-state orbit classification.
//!
//! A rotating orbit advances `u` by `2πm` every `n` drive periods while `v`
//! returns to itself:
//!
//! ```text
//! u(τ + 2πn/ω_s) = u(τ) ± 2πm,    v(τ + 2πn/ω_s) = v(τ)
//! ```
//!
//! Its mean velocity is quantized at `m ω_s / n`. Orbits with `m = 0` are
//! locked. Anything else is screened with the largest Lyapunov exponent.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorOptions, State, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::params::{DriveParams, ReducedParams};
use crate::stability::{lyapunov_from, LyapunovOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OrbitClass {
    Rotating { m: u32, n: u32, sign: i8 },
    Locked,
    Chaotic,
    Unclassified,
}

impl OrbitClass {
    pub fn rotating(m: u32, n: u32, sign: i8) -> Self {
        OrbitClass::Rotating { m, n, sign }
    }

    pub fn is_rotating(&self) -> bool {
        matches!(self, OrbitClass::Rotating { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrbitClass::Rotating { .. } => "rotating",
            OrbitClass::Locked => "locked",
            OrbitClass::Chaotic => "chaotic",
            OrbitClass::Unclassified => "unclassified",
        }
    }

    /// `(m, n, sign)`; zeros for non-rotating classes.
    pub fn triple(&self) -> (u32, u32, i8) {
        match *self {
            OrbitClass::Rotating { m, n, sign } => (m, n, sign),
            _ => (0, 0, 0),
        }
    }

    pub fn from_parts(name: &str, m: u32, n: u32, sign: i8) -> Result<Self> {
        match name {
            "rotating" => {
                if m == 0 || n == 0 || !(sign == 1 || sign == -1) {
                    return Err(Error::Format(format!(
                        "invalid rotating triple m={m} n={n} sign={sign}"
                    )));
                }
                Ok(OrbitClass::Rotating { m, n, sign })
            }
            "locked" => Ok(OrbitClass::Locked),
            "chaotic" => Ok(OrbitClass::Chaotic),
            "unclassified" => Ok(OrbitClass::Unclassified),
            other => Err(Error::Format(format!("unknown orbit class `{other}`"))),
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrbitClass::Rotating { m, n, sign } => {
                write!(
                    f,
                    "Rotating m={m} n={n} sign={}",
                    if *sign > 0 { "+1" } else { "-1" }
                )
            }
            OrbitClass::Locked => write!(f, "Locked"),
            OrbitClass::Chaotic => write!(f, "Chaotic"),
            OrbitClass::Unclassified => write!(f, "Unclassified"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub class: OrbitClass,
    /// Periodicity mismatch of the accepted `(n, m)`, or the best mismatch found.
    pub residual: f64,
    /// Number of drive periods after which the orbit repeats (0 if none found).
    pub period: u32,
    /// Time-averaged `v` over a whole number of orbit periods of the test window.
    pub mean_velocity: f64,
    /// Half peak-to-peak of `v` over one orbit period.
    pub delta: f64,
    /// `|-w - ε mean(v) - mean(sin u)|` over one orbit period.
    pub identity_residual: f64,
    /// Largest Lyapunov exponent, when the screening ran.
    pub lyapunov: Option<f64>,
    /// Drive periods integrated before the test window.
    pub transient_used: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub integrator: IntegratorOptions,
    /// Maximum number of transient drive periods discarded.
    pub transient_periods: u32,
    /// End the transient early once the stroboscopic samples repeat to
    /// `settle_factor * tolerance`. The first `min_transient_periods` are
    /// always discarded.
    pub early_settle: bool,
    pub min_transient_periods: u32,
    pub settle_factor: f64,
    pub test_periods: u32,
    pub n_max: u32,
    pub m_max: u32,
    pub tolerance: f64,
    /// Lyapunov screening for orbits that match no `(n, m)`; `None` skips it.
    pub lyapunov: Option<LyapunovOptions>,
    /// Cap on total drive periods (transient + test + screening).
    pub period_budget: Option<u32>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            integrator: IntegratorOptions::default(),
            transient_periods: 200,
            early_settle: true,
            min_transient_periods: 20,
            settle_factor: 0.01,
            test_periods: 10,
            n_max: 4,
            m_max: 8,
            tolerance: 1.0e-3,
            lyapunov: Some(LyapunovOptions::default()),
            period_budget: None,
        }
    }
}

impl ClassifyOptions {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        if self.test_periods == 0 {
            return Err(Error::invalid("test_periods", "must be >= 1"));
        }
        if self.n_max == 0 {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::invalid(
                "tolerance",
                "must be a finite positive number",
            ));
        }
        if !(self.settle_factor > 0.0 && self.settle_factor <= 1.0) {
            return Err(Error::invalid("settle_factor", "must lie in (0, 1]"));
        }
        if let Some(budget) = self.period_budget {
            if budget < self.test_periods + self.n_max {
                return Err(Error::invalid(
                    "period_budget",
                    "must cover at least the test window",
                ));
            }
        }
        Ok(())
    }
}

/// Best periodicity match among the stroboscopic samples.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PeriodMatch {
    n: u32,
    /// Signed winding over `n` periods.
    winding: i64,
    residual: f64,
}

/// Tests `u_{k+n} - u_k = 2πm`, `v_{k+n} = v_k` for `k` in `0..test`, scanning
/// `n = 1..=n_max`. Returns the first match and otherwise the smallest mismatch.
fn match_period(
    strobes: &[(f64, f64)],
    test: usize,
    n_max: u32,
    m_max: u32,
    tolerance: f64,
) -> std::result::Result<PeriodMatch, f64> {
    let mut best = f64::INFINITY;
    for n in 1..=n_max as usize {
        if test + n > strobes.len() {
            break;
        }
        let winding = ((strobes[n].0 - strobes[0].0) / TAU).round();
        if winding.abs() > m_max as f64 {
            continue;
        }
        let shift = winding * TAU;
        let mut residual: f64 = 0.0;
        for k in 0..test {
            let (u0, v0) = strobes[k];
            let (u1, v1) = strobes[k + n];
            residual = residual.max((u1 - u0 - shift).abs()).max((v1 - v0).abs());
            if residual >= tolerance && residual >= best {
                break;
            }
        }
        if residual < tolerance {
            return Ok(PeriodMatch {
                n: n as u32,
                winding: winding as i64,
                residual,
            });
        }
        best = best.min(residual);
    }
    Err(best)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn class_from_match(m: &PeriodMatch) -> OrbitClass {
    if m.winding == 0 {
        return OrbitClass::Locked;
    }
    let abs = m.winding.unsigned_abs();
    let g = gcd(abs, m.n as u64);
    OrbitClass::Rotating {
        m: (abs / g) as u32,
        n: m.n / g as u32,
        sign: if m.winding > 0 { 1 } else { -1 },
    }
}

/// Integrates past the transient, tests for rotating or locked orbits and
/// falls back to Lyapunov screening.
pub fn classify_orbit(
    p: &ReducedParams,
    s0: &State,
    opts: &ClassifyOptions,
) -> Result<OrbitSummary> {
    opts.validate()?;
    let mut stepper = Stepper::new(s0, p, &opts.integrator)?;
    let spp = opts.integrator.steps_per_period as u64;
    let test = opts.test_periods as usize;
    let window = test + opts.n_max as usize;

    let budget = opts.period_budget.unwrap_or(u32::MAX);
    let max_transient = opts
        .transient_periods
        .min(budget.saturating_sub(window as u32));

    // transient, with a rolling buffer of stroboscopic samples
    let mut ring: std::collections::VecDeque<(f64, f64)> =
        std::collections::VecDeque::with_capacity(window + 1);
    ring.push_back((stepper.u, stepper.v));
    let settle_tol = opts.tolerance * opts.settle_factor;
    let mut transient_used = 0;
    while transient_used < max_transient {
        stepper.run(spp)?;
        transient_used += 1;
        if ring.len() == window + 1 {
            ring.pop_front();
        }
        ring.push_back((stepper.u, stepper.v));
        if opts.early_settle
            && transient_used >= opts.min_transient_periods
            && ring.len() == window + 1
        {
            let strobes: Vec<_> = ring.iter().copied().collect();
            if match_period(&strobes, test, opts.n_max, opts.m_max, settle_tol).is_ok() {
                break;
            }
        }
    }

    // test window, densely sampled
    let total_steps = window as u64 * spp;
    let mut samples = Vec::with_capacity(total_steps as usize + 1);
    samples.push(stepper.state());
    for _ in 0..total_steps {
        stepper.step()?;
        samples.push(stepper.state());
    }
    let strobes: Vec<(f64, f64)> = samples
        .iter()
        .step_by(spp as usize)
        .map(|s| (s.u, s.v))
        .collect();
    let traj = Trajectory {
        samples,
        step: stepper.step_size(),
        params: *p,
    };
    // displacement over the longest span that is a whole number of `periods`
    let mean_over = |periods: usize| {
        let span = (window / periods) * periods;
        (strobes[span].0 - strobes[0].0) / (span as f64 * p.reference_period())
    };

    match match_period(&strobes, test, opts.n_max, opts.m_max, opts.tolerance) {
        Ok(found) => {
            let one_orbit = traj.window(0, found.n as usize * spp as usize);
            let mean_velocity = mean_over(found.n as usize);
            Ok(OrbitSummary {
                class: class_from_match(&found),
                residual: found.residual,
                period: found.n,
                mean_velocity,
                delta: half_peak_to_peak(&one_orbit),
                identity_residual: averaging_residual(&one_orbit, p),
                lyapunov: None,
                transient_used,
            })
        }
        Err(best) => {
            let mean_velocity = mean_over(1);
            let one_period = traj.window(0, spp as usize);
            let mut summary = OrbitSummary {
                class: OrbitClass::Unclassified,
                residual: best,
                period: 0,
                mean_velocity,
                delta: half_peak_to_peak(&one_period),
                identity_residual: averaging_residual(&one_period, p),
                lyapunov: None,
                transient_used,
            };
            if let Some(lyap) = &opts.lyapunov {
                let used = transient_used as u64 + window as u64;
                let left = (budget as u64).saturating_sub(used);
                let horizon = lyap.horizon.min(left as f64 * p.reference_period());
                if horizon > 0.0 {
                    let r =
                        lyapunov_from(&mut stepper, p, horizon, lyap.renorm_interval, (1.0, 0.0))?;
                    summary.lyapunov = Some(r.lambda_max);
                    if r.is_chaotic(lyap.chaos_threshold) {
                        summary.class = OrbitClass::Chaotic;
                    }
                }
            }
            Ok(summary)
        }
    }
}

/// Quantized mean velocity of a rotating orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVelocity {
    /// Reduced units: `sign · m ω_s / n`.
    pub reduced: f64,
    /// Physical pinion velocity `sign · (m/n) · λ ω_p / 2π`, when the physical
    /// wavelength and drive are known.
    pub physical: Option<f64>,
}

pub fn mean_velocity(
    summary: &OrbitSummary,
    p: &ReducedParams,
    physical: Option<(f64, &DriveParams)>,
) -> Result<MeanVelocity> {
    match summary.class {
        OrbitClass::Rotating { m, n, sign } => {
            let ratio = sign as f64 * m as f64 / n as f64;
            Ok(MeanVelocity {
                reduced: ratio * p.drive_frequency,
                physical: physical
                    .map(|(wavelength, drive)| ratio * wavelength * drive.angular_frequency / TAU),
            })
        }
        other => Err(Error::NotRotating(format!("classification is {other}"))),
    }
}

/// Trapezoid-rule mean of `f` over the samples.
fn trapezoid_mean(traj: &Trajectory, f: impl Fn(&State) -> f64) -> f64 {
    let s = &traj.samples;
    let n = s.len() - 1;
    let mut acc = 0.5 * (f(&s[0]) + f(&s[n]));
    for x in &s[1..n] {
        acc += f(x);
    }
    acc / n as f64
}

fn averaging_residual(traj: &Trajectory, p: &ReducedParams) -> f64 {
    let mean_v = trapezoid_mean(traj, |s| s.v);
    let mean_sin = trapezoid_mean(traj, |s| s.u.sin());
    (-p.load - p.epsilon * mean_v - mean_sin).abs()
}

fn half_peak_to_peak(traj: &Trajectory) -> f64 {
    let (lo, hi) = traj
        .samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.v), hi.max(s.v))
        });
    0.5 * (hi - lo)
}

fn periods_spanned(traj: &Trajectory, p: &ReducedParams) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort(
            "need at least two samples".into(),
        ));
    }
    let periods = traj.duration() / p.reference_period();
    if periods < 1.0 - 1e-9 {
        return Err(Error::TrajectoryTooShort(format!(
            "spans {periods:.6} periods, need at least one"
        )));
    }
    Ok(periods)
}

/// Residual of the period-averaged equation of motion,
/// `|-w - ε mean(v) - mean(sin u)|`, by the trapezoid rule.
///
/// The trajectory must span a whole number of reference periods.
pub fn check_averaging_identity(traj: &Trajectory, p: &ReducedParams) -> Result<f64> {
    let periods = periods_spanned(traj, p)?;
    if (periods - periods.round()).abs() > 1e-6 * periods.max(1.0) {
        return Err(Error::invalid(
            "trajectory",
            format!("must span a whole number of periods, spans {periods:.6}"),
        ));
    }
    Ok(averaging_residual(traj, p))
}

/// Velocity-oscillation amplitude `Δ`: half the peak-to-peak range of `v`.
pub fn measure_delta(traj: &Trajectory, p: &ReducedParams) -> Result<f64> {
    periods_spanned(traj, p)?;
    let advance = traj.last().unwrap().u - traj.first().unwrap().u;
    if advance.abs() < std::f64::consts::PI {
        return Err(Error::NotRotating(format!(
            "u advances by only {advance:.6} over the trajectory"
        )));
    }
    Ok(half_peak_to_peak(traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;

    fn p(eps: f64, w: f64, ys: f64) -> ReducedParams {
        ReducedParams::new(eps, w, ys, 2.0 / 3.0, 0.0).unwrap()
    }

    #[test]
    fn damped_pendulum_is_locked() {
        let s = classify_orbit(
            &p(0.5, 0.0, 0.0),
            &State::new(0.1, 0.0, 0.0),
            &ClassifyOptions::default(),
        )
        .unwrap();
        assert_eq!(s.class, OrbitClass::Locked);
        assert_eq!(s.period, 1);
        assert!(s.mean_velocity.abs() < 1e-9);
    }

    #[test]
    fn tilted_pendulum_locks_at_arcsine_branch() {
        let params = p(0.5, 0.1, 0.0);
        let s = classify_orbit(&params, &State::origin(), &ClassifyOptions::default()).unwrap();
        assert_eq!(s.class, OrbitClass::Locked);
        assert!(s.identity_residual < 1e-6);
        assert!(s.mean_velocity.abs() < 1e-9);
    }

    #[test]
    fn minimal_period_is_reported() {
        // strobes of a period-2 rotation with one winding per period on average
        let strobes: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let wobble = if k % 2 == 0 { 0.0 } else { 0.3 };
                (k as f64 * TAU + wobble, 1.0 + wobble)
            })
            .collect();
        let m = match_period(&strobes, 10, 4, 8, 1e-3).unwrap();
        assert_eq!((m.n, m.winding), (2, 2));
        assert_eq!(class_from_match(&m), OrbitClass::rotating(1, 1, 1));
    }

    #[test]
    fn negative_rotation_keeps_sign() {
        let strobes: Vec<(f64, f64)> = (0..20).map(|k| (-(k as f64) * TAU, -0.7)).collect();
        let m = match_period(&strobes, 10, 4, 8, 1e-3).unwrap();
        assert_eq!(class_from_match(&m), OrbitClass::rotating(1, 1, -1));
    }

    #[test]
    fn winding_beyond_search_bound_is_skipped() {
        let strobes: Vec<(f64, f64)> = (0..20).map(|k| (9.0 * k as f64 * TAU, 5.0)).collect();
        assert!(match_period(&strobes, 10, 4, 8, 1e-3).is_err());
    }

    #[test]
    fn mean_velocity_examples() {
        let mut summary = OrbitSummary {
            class: OrbitClass::rotating(1, 3, 1),
            residual: 0.0,
            period: 3,
            mean_velocity: 0.0,
            delta: 0.0,
            identity_residual: 0.0,
            lyapunov: None,
            transient_used: 0,
        };
        let v = mean_velocity(&summary, &p(0.5, 0.0, 1.0), None).unwrap();
        assert!((v.reduced - 2.0 / 9.0).abs() < 1e-15);

        summary.class = OrbitClass::rotating(2, 1, 1);
        let drive = DriveParams::new(1.0, 1.0, 0.0).unwrap();
        let v = mean_velocity(&summary, &p(0.5, 0.0, 1.0), Some((TAU, &drive))).unwrap();
        assert!((v.physical.unwrap() - 2.0).abs() < 1e-15);

        summary.class = OrbitClass::Locked;
        assert!(mean_velocity(&summary, &p(0.5, 0.0, 1.0), None).is_err());
    }

    #[test]
    fn identity_rejects_short_trajectory() {
        let params = p(0.5, 0.1, 1.0);
        let traj = integrate(&State::origin(), &params, 1.0, 100).unwrap();
        assert!(matches!(
            check_averaging_identity(&traj, &params),
            Err(Error::TrajectoryTooShort(_))
        ));
    }

    #[test]
    fn identity_vanishes_for_symmetric_oscillation() {
        let params = ReducedParams::new(0.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let n = 1000;
        let h = TAU / n as f64;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                State::new(0.8 * t.cos(), -0.8 * t.sin(), t)
            })
            .collect();
        let traj = Trajectory {
            samples,
            step: h,
            params,
        };
        assert!(check_averaging_identity(&traj, &params).unwrap() < 1e-6);
    }

    #[test]
    fn delta_of_ansatz_signal() {
        let params = p(0.5, 0.1, 1.0);
        let omega = params.drive_frequency;
        let (vbar, d0) = (omega, 0.37);
        let n = 2000;
        let h = params.reference_period() / n as f64;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                State::new(
                    vbar * t + d0 / omega * (omega * t).sin(),
                    vbar + d0 * (omega * t).cos(),
                    t,
                )
            })
            .collect();
        let traj = Trajectory {
            samples,
            step: h,
            params,
        };
        assert!((measure_delta(&traj, &params).unwrap() - d0).abs() < 1e-6);
    }

    #[test]
    fn delta_of_constant_running_state() {
        let params = p(0.0, 0.0, 0.0);
        let h = 0.01;
        let n = (TAU / h).ceil() as usize;
        let samples = (0..=n)
            .map(|i| State::new(1.5 * i as f64 * h, 1.5, i as f64 * h))
            .collect();
        let traj = Trajectory {
            samples,
            step: h,
            params,
        };
        assert!(measure_delta(&traj, &params).unwrap().abs() < 1e-15);
    }

    #[test]
    fn delta_rejects_locked_motion() {
        let params = p(0.5, 0.0, 0.0);
        let traj = integrate(&State::new(0.1, 0.0, 0.0), &params, 20.0, 100).unwrap();
        assert!(matches!(
            measure_delta(&traj, &params),
            Err(Error::NotRotating(_))
        ));
    }
}
