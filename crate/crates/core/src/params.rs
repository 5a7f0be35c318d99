//! Physical and dimensionless parameter blocks, and the reduction between them.
//!
//! The pinion coordinate `x = R θ` obeys
//!
//! ```text
//! (I/R) x'' = -R F sin(2π(x - y)/λ) - (ζ/R) x' - r W,    y = y_p cos(ω_p t + φ_p)
//! ```
//!
//! With `u = 2π(x - y)/λ` and `t = T τ`, `T = sqrt(I λ / (2π F R²))`, this becomes
//!
//! ```text
//! u'' = -sin u - ε u' - w + y_s cos(ω_s τ + φ_s)
//! ```

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Gear and load quantities in SI (or any consistent) units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub moment_of_inertia: f64,
    pub pinion_radius: f64,
    pub rotational_friction: f64,
    pub corrugation_wavelength: f64,
    pub force_amplitude: f64,
    pub load_arm: f64,
    pub load: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("moment_of_inertia", self.moment_of_inertia),
            ("pinion_radius", self.pinion_radius),
            ("corrugation_wavelength", self.corrugation_wavelength),
            ("force_amplitude", self.force_amplitude),
        ];
        for (name, value) in positive {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        let non_negative = [
            ("rotational_friction", self.rotational_friction),
            ("load_arm", self.load_arm),
            ("load", self.load),
        ];
        for (name, value) in non_negative {
            ensure_finite(name, value)?;
            if value < 0.0 {
                return Err(Error::invalid(name, format!("must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Reduced time unit `T = sqrt(I λ / (2π F R²))`.
    pub fn time_scale(&self) -> f64 {
        (self.moment_of_inertia * self.corrugation_wavelength
            / (TAU * self.force_amplitude * self.pinion_radius * self.pinion_radius))
            .sqrt()
    }

    /// Wavenumber `2π/λ` of the corrugation.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.corrugation_wavelength
    }
}

/// Harmonic rack motion `y(t) = y_p cos(ω_p t + φ_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub amplitude: f64,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl DriveParams {
    /// Builds a drive, wrapping the phase into (-π, π].
    pub fn new(amplitude: f64, angular_frequency: f64, phase: f64) -> Result<Self> {
        let drive = DriveParams {
            amplitude,
            angular_frequency,
            phase: wrap_phase(phase),
        };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("amplitude", self.amplitude)?;
        ensure_finite("angular_frequency", self.angular_frequency)?;
        ensure_finite("phase", self.phase)?;
        if self.amplitude < 0.0 {
            return Err(Error::invalid("amplitude", "must be >= 0"));
        }
        if self.angular_frequency <= 0.0 {
            return Err(Error::invalid(
                "angular_frequency",
                format!("must be > 0, got {}", self.angular_frequency),
            ));
        }
        Ok(())
    }

    pub fn position(&self, t: f64) -> f64 {
        self.amplitude * (self.angular_frequency * t + self.phase).cos()
    }

    pub fn velocity(&self, t: f64) -> f64 {
        -self.amplitude * self.angular_frequency * (self.angular_frequency * t + self.phase).sin()
    }
}

/// The five dimensionless parameters of the reduced equation plus the time unit `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub epsilon: f64,
    pub load: f64,
    pub drive_amplitude: f64,
    pub drive_frequency: f64,
    pub drive_phase: f64,
    #[serde(default = "unit_time")]
    pub time_scale: f64,
}

fn unit_time() -> f64 {
    1.0
}

impl ReducedParams {
    /// Reduced parameters with `T = 1`. The phase is wrapped into (-π, π].
    pub fn new(
        epsilon: f64,
        load: f64,
        drive_amplitude: f64,
        drive_frequency: f64,
        drive_phase: f64,
    ) -> Result<Self> {
        let p = ReducedParams {
            epsilon,
            load,
            drive_amplitude,
            drive_frequency,
            drive_phase: wrap_phase(drive_phase),
            time_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("epsilon", self.epsilon),
            ("load", self.load),
            ("drive_amplitude", self.drive_amplitude),
            ("drive_frequency", self.drive_frequency),
            ("drive_phase", self.drive_phase),
            ("time_scale", self.time_scale),
        ] {
            ensure_finite(name, value)?;
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid("epsilon", "must be >= 0"));
        }
        if self.load < 0.0 {
            return Err(Error::invalid("load", "must be >= 0"));
        }
        if self.drive_amplitude < 0.0 {
            return Err(Error::invalid("drive_amplitude", "must be >= 0"));
        }
        if self.drive_frequency <= 0.0 {
            return Err(Error::invalid("drive_frequency", "must be > 0"));
        }
        if self.time_scale <= 0.0 {
            return Err(Error::invalid("time_scale", "must be > 0"));
        }
        if !(self.drive_phase > -PI && self.drive_phase <= PI) {
            return Err(Error::invalid("drive_phase", "must lie in (-pi, pi]"));
        }
        Ok(())
    }

    pub fn with_load(mut self, load: f64) -> Self {
        self.load = load;
        self
    }

    /// Reduced time between stroboscopic samples: the drive period, or `2π`
    /// (small-oscillation period of the pendulum) when there is no drive.
    pub fn reference_period(&self) -> f64 {
        if self.drive_amplitude > 0.0 {
            TAU / self.drive_frequency
        } else {
            TAU
        }
    }

    pub fn drive(&self, tau: f64) -> f64 {
        self.drive_amplitude * (self.drive_frequency * tau + self.drive_phase).cos()
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_phase(phase: f64) -> f64 {
    if !phase.is_finite() {
        return phase;
    }
    let mut r = phase.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Maps the physical problem onto the five dimensionless parameters.
pub fn reduce_parameters(phys: &PhysicalParams, drive: &DriveParams) -> Result<ReducedParams> {
    phys.validate()?;
    drive.validate()?;
    let i = phys.moment_of_inertia;
    let r_p = phys.pinion_radius;
    let f = phys.force_amplitude;
    let zeta = phys.rotational_friction;
    let omega_p = drive.angular_frequency;

    let t = phys.time_scale();
    let damping_rate = zeta / i;
    let epsilon = t * damping_rate;
    let load = phys.load_arm * phys.load / (r_p * f);
    let drive_frequency = omega_p * t;
    let drive_amplitude = (drive.amplitude * omega_p * i / (f * r_p * r_p))
        * (omega_p * omega_p + damping_rate * damping_rate).sqrt();
    let drive_phase = wrap_phase(drive.phase - (zeta / (i * omega_p)).atan());

    let reduced = ReducedParams {
        epsilon,
        load,
        drive_amplitude,
        drive_frequency,
        drive_phase,
        time_scale: t,
    };
    reduced.validate()?;
    Ok(reduced)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_phys(zeta: f64, load: f64) -> PhysicalParams {
        PhysicalParams {
            moment_of_inertia: 1.0,
            pinion_radius: 1.0,
            rotational_friction: zeta,
            corrugation_wavelength: TAU,
            force_amplitude: 1.0,
            load_arm: 1.0,
            load,
        }
    }

    #[test]
    fn frictionless_phase_passes_through() {
        let drive = DriveParams::new(0.3, 1.7, 0.9).unwrap();
        let p = reduce_parameters(&unit_phys(0.0, 0.1), &drive).unwrap();
        assert_eq!(p.drive_phase, 0.9);
    }

    #[test]
    fn unit_rescaling_collapses() {
        let drive = DriveParams::new(0.5, 0.75, 0.0).unwrap();
        let p = reduce_parameters(&unit_phys(0.4, 0.2), &drive).unwrap();
        assert!((p.time_scale - 1.0).abs() < 1e-15);
        assert!((p.epsilon - 0.4).abs() < 1e-15);
        assert!((p.load - 0.2).abs() < 1e-15);
        assert!((p.drive_frequency - 0.75).abs() < 1e-15);
    }

    #[test]
    fn drive_amplitude_example() {
        let mut phys = unit_phys(1.0, 0.0);
        phys.corrugation_wavelength = 3.0;
        let drive = DriveParams::new(1.0, 2.0, 0.0).unwrap();
        let p = reduce_parameters(&phys, &drive).unwrap();
        assert!((p.drive_amplitude - 4.472_135_954_999_579).abs() < 1e-12);
    }

    #[test]
    fn doubling_force_halves_time_scale_squared() {
        let mut phys = unit_phys(0.2, 0.0);
        let t1 = phys.time_scale();
        phys.force_amplitude *= 2.0;
        let t2 = phys.time_scale();
        assert!((t2 * t2 / (t1 * t1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_drive_frequency() {
        assert!(DriveParams::new(1.0, 0.0, 0.0).is_err());
        let bad = DriveParams {
            amplitude: 1.0,
            angular_frequency: -1.0,
            phase: 0.0,
        };
        assert!(reduce_parameters(&unit_phys(0.0, 0.0), &bad).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut phys = unit_phys(0.0, 0.0);
        phys.load = f64::NAN;
        let drive = DriveParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(reduce_parameters(&phys, &drive).is_err());
    }

    #[test]
    fn wrap_phase_edges() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5 + 4.0 * TAU) - 0.5).abs() < 1e-12);
    }
}
