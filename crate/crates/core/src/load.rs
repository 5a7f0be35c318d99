//! Load bounds and the empirical critical load.
//!
//! Averaging the reduced equation over one orbit gives
//! `-w - ε mean(v) = mean(sin u)`, hence `w < 1 - ε ω_s m/n`. Expanding
//! `sin u` for the ansatz `u ≈ u0 + mean(v) τ + (Δ n/ω_s) sin(ω_s τ/n)` in
//! Bessel functions sharpens this to `w < |J_n(nΔ/ω_s)| - ε ω_s m/n`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_jn, bessel_jn_sup};
use crate::dynamics::State;
use crate::error::{ensure_finite, Error, Result};
use crate::orbit::{classify_orbit, ClassifyOptions, OrbitClass};
use crate::parallel::pool;
use crate::params::ReducedParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DeltaMode {
    /// Use a measured velocity-oscillation amplitude.
    Measured(f64),
    /// Use `sup |J_n|` over the argument.
    Supremum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadBounds {
    pub simple_bound: f64,
    pub bessel_bound: f64,
    pub delta_used: Option<f64>,
    pub supremum_mode: bool,
}

impl LoadBounds {
    /// A non-positive bound means no load can be lifted at this `(m, n)`.
    pub fn rotation_possible(&self) -> bool {
        self.bessel_bound > 0.0
    }
}

fn check_orders(m: u32, n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "rotating orbits require n >= 1"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "rotating orbits require m >= 1"));
    }
    Ok(())
}

/// `1 - ε ω_s m/n`. A non-positive value signals that rotation is impossible
/// at any load.
pub fn load_bound_simple(p: &ReducedParams, m: u32, n: u32) -> Result<f64> {
    check_orders(m, n)?;
    p.validate()?;
    Ok(1.0 - p.epsilon * p.drive_frequency * m as f64 / n as f64)
}

/// `|J_n(nΔ/ω_s)| - ε ω_s m/n`, or with `sup |J_n|` in supremum mode.
pub fn load_bound_bessel(p: &ReducedParams, m: u32, n: u32, delta: DeltaMode) -> Result<f64> {
    check_orders(m, n)?;
    p.validate()?;
    let coupling = match delta {
        DeltaMode::Supremum => bessel_jn_sup(n),
        DeltaMode::Measured(d) => {
            ensure_finite("delta", d)?;
            if d < 0.0 {
                return Err(Error::invalid("delta", "must be >= 0"));
            }
            bessel_jn(n, n as f64 * d / p.drive_frequency)?.abs()
        }
    };
    Ok(coupling - p.epsilon * p.drive_frequency * m as f64 / n as f64)
}

pub fn load_bounds(p: &ReducedParams, m: u32, n: u32, delta: DeltaMode) -> Result<LoadBounds> {
    Ok(LoadBounds {
        simple_bound: load_bound_simple(p, m, n)?,
        bessel_bound: load_bound_bessel(p, m, n, delta)?,
        delta_used: match delta {
            DeltaMode::Measured(d) => Some(d),
            DeltaMode::Supremum => None,
        },
        supremum_mode: matches!(delta, DeltaMode::Supremum),
    })
}

/// Set of initial conditions probed at each load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IcPolicy {
    /// Lattice `min + i·step` over both axes, endpoints included when reached.
    Grid {
        u_min: f64,
        u_max: f64,
        v_min: f64,
        v_max: f64,
        step: f64,
    },
    List {
        states: Vec<State>,
    },
}

impl Default for IcPolicy {
    fn default() -> Self {
        IcPolicy::Grid {
            u_min: -PI,
            u_max: PI,
            v_min: -3.0,
            v_max: 3.0,
            step: 0.2,
        }
    }
}

impl IcPolicy {
    pub fn states(&self) -> Result<Vec<State>> {
        match self {
            IcPolicy::List { states } => {
                if states.is_empty() {
                    return Err(Error::invalid("ic_policy", "empty initial-condition list"));
                }
                for s in states {
                    s.validate()?;
                }
                Ok(states.clone())
            }
            IcPolicy::Grid {
                u_min,
                u_max,
                v_min,
                v_max,
                step,
            } => {
                let us = crate::sweep::lattice(*u_min, *u_max, *step)?;
                let vs = crate::sweep::lattice(*v_min, *v_max, *step)?;
                Ok(us
                    .iter()
                    .flat_map(|&u| vs.iter().map(move |&v| State::new(u, v, 0.0)))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoadOptions {
    pub ic_policy: IcPolicy,
    /// Initial `(sustaining, non-sustaining)` loads; defaults to `(0, w₁)`.
    pub bracket: Option<(f64, f64)>,
    pub tolerance: f64,
    /// Extra probes above the final bracket, as offsets from its upper end.
    pub verify_offsets: Vec<f64>,
    pub classify: ClassifyOptions,
    pub workers: Option<usize>,
}

impl Default for CriticalLoadOptions {
    fn default() -> Self {
        CriticalLoadOptions {
            ic_policy: IcPolicy::default(),
            bracket: None,
            tolerance: 1.0e-3,
            verify_offsets: vec![0.005, 0.01, 0.02],
            classify: ClassifyOptions {
                lyapunov: None,
                ..ClassifyOptions::default()
            },
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadProbe {
    pub load: f64,
    pub sustained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoadResult {
    pub w_c: f64,
    pub bracket: (f64, f64),
    pub initial_condition_policy: IcPolicy,
    pub samples_per_probe: usize,
    pub probes: Vec<LoadProbe>,
    /// Loads that sustained rotation above a load that did not.
    pub monotone_violations: Vec<f64>,
}

/// True if any initial condition reaches `Rotating(m, n, +1)` at this load.
pub fn rotation_sustained(
    p: &ReducedParams,
    m: u32,
    n: u32,
    ics: &[State],
    opts: &ClassifyOptions,
) -> bool {
    let target = OrbitClass::rotating(m, n, 1);
    ics.par_iter().any(|s0| {
        classify_orbit(p, s0, opts)
            .map(|summary| summary.class == target)
            .unwrap_or(false)
    })
}

/// Bisects the load between a sustaining and a non-sustaining value.
pub fn critical_load(
    p_base: &ReducedParams,
    m: u32,
    n: u32,
    opts: &CriticalLoadOptions,
) -> Result<CriticalLoadResult> {
    check_orders(m, n)?;
    p_base.validate()?;
    opts.classify.validate()?;
    if !(opts.tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be > 0"));
    }
    let (mut lo, mut hi) = match opts.bracket {
        Some(b) => b,
        None => {
            let w1 = load_bound_simple(p_base, m, n)?;
            if w1 <= 0.0 {
                return Err(Error::BracketNotStraddling {
                    lo: 0.0,
                    hi: w1,
                    detail: "simple load bound is non-positive: rotation impossible".into(),
                });
            }
            (0.0, w1)
        }
    };
    ensure_finite("bracket.lo", lo)?;
    ensure_finite("bracket.hi", hi)?;
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::invalid("bracket", "need 0 <= lo < hi"));
    }
    let ics = opts.ic_policy.states()?;
    let pool = pool(opts.workers)?;
    let mut probes = Vec::new();
    let mut probe = |w: f64| -> bool {
        let p = p_base.with_load(w);
        let sustained = pool.install(|| rotation_sustained(&p, m, n, &ics, &opts.classify));
        log::debug!("critical load probe w = {w}: sustained = {sustained}");
        probes.push(LoadProbe { load: w, sustained });
        sustained
    };

    let lo_ok = probe(lo);
    let hi_ok = probe(hi);
    if !lo_ok || hi_ok {
        return Err(Error::BracketNotStraddling {
            lo,
            hi,
            detail: format!("sustained at lo: {lo_ok}, sustained at hi: {hi_ok}"),
        });
    }
    while hi - lo >= opts.tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for offset in &opts.verify_offsets {
        probe(hi + offset);
    }

    // outermost consistent bracket over everything probed
    let highest_sustained = probes
        .iter()
        .filter(|pr| pr.sustained)
        .map(|pr| pr.load)
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone_violations: Vec<f64> = probes
        .iter()
        .filter(|pr| pr.sustained && pr.load > hi)
        .map(|pr| pr.load)
        .collect();
    if !monotone_violations.is_empty() {
        log::warn!(
            "rotation sustained above a failing load at w = {monotone_violations:?}; reporting the outermost bracket"
        );
        lo = highest_sustained;
        hi = probes
            .iter()
            .filter(|pr| !pr.sustained && pr.load > lo)
            .map(|pr| pr.load)
            .fold(f64::INFINITY, f64::min);
        if !hi.is_finite() {
            return Err(Error::BracketNotStraddling {
                lo,
                hi,
                detail: "no failing load above the highest sustaining probe".into(),
            });
        }
    }
    Ok(CriticalLoadResult {
        w_c: 0.5 * (lo + hi),
        bracket: (lo, hi),
        initial_condition_policy: opts.ic_policy.clone(),
        samples_per_probe: ics.len(),
        probes,
        monotone_violations,
    })
}
