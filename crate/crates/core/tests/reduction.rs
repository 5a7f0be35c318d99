//! Physical-variable integration against the reduced equation.

mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rackpinion_core::{reduce_parameters, DriveParams, PhysicalParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn physical_and_reduced_trajectories_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let (phys, drive, x0, xd0) = common::random_physical_case(&mut rng);
        let (sup, p) = common::reduction_sup_norm(&phys, &drive, x0, xd0, 100.0, 2000);
        worst = worst.max(sup);
        assert!(sup < 1e-6, "case {case}: sup-norm {sup:e} ({p:?})");
    }
    println!("worst sup-norm over 20 cases: {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn drive_phase_is_2pi_periodic(
        phase in -10.0f64..10.0,
        omega in 0.1f64..5.0,
        friction in 0.0f64..2.0,
    ) {
        let phys = PhysicalParams {
            moment_of_inertia: 1.0,
            pinion_radius: 1.0,
            rotational_friction: friction,
            corrugation_wavelength: TAU,
            force_amplitude: 1.0,
            load_arm: 1.0,
            load: 0.1,
        };
        let a = reduce_parameters(&phys, &DriveParams::new(0.3, omega, phase).unwrap()).unwrap();
        let b = reduce_parameters(&phys, &DriveParams::new(0.3, omega, phase + TAU).unwrap()).unwrap();
        let d = (a.drive_phase - b.drive_phase).abs();
        prop_assert!(d < 1e-9 || (TAU - d).abs() < 1e-9, "{} vs {}", a.drive_phase, b.drive_phase);
        prop_assert!(a.drive_phase > -PI && a.drive_phase <= PI);
        prop_assert_eq!(a.drive_amplitude, b.drive_amplitude);
        prop_assert_eq!(a.epsilon, b.epsilon);
    }

    #[test]
    fn unit_rescaling_leaves_reduced_parameters_unchanged(
        scale in 1e-3f64..1e3,
        epsilon_like in 0.0f64..2.0,
    ) {
        // lengths scaled by s and force by s² keeps every reduced group fixed
        let base = PhysicalParams {
            moment_of_inertia: 2.0,
            pinion_radius: 1.5,
            rotational_friction: epsilon_like,
            corrugation_wavelength: 0.7,
            force_amplitude: 3.0,
            load_arm: 0.4,
            load: 0.5,
        };
        let drive = DriveParams::new(0.1, 1.3, 0.2).unwrap();
        let scaled = PhysicalParams {
            moment_of_inertia: base.moment_of_inertia * scale * scale,
            pinion_radius: base.pinion_radius * scale,
            rotational_friction: base.rotational_friction * scale * scale,
            corrugation_wavelength: base.corrugation_wavelength * scale,
            force_amplitude: base.force_amplitude * scale,
            load_arm: base.load_arm * scale,
            load: base.load * scale,
        };
        let sdrive = DriveParams::new(drive.amplitude * scale, drive.angular_frequency, drive.phase).unwrap();
        let a = reduce_parameters(&base, &drive).unwrap();
        let b = reduce_parameters(&scaled, &sdrive).unwrap();
        for (x, y) in [
            (a.epsilon, b.epsilon),
            (a.load, b.load),
            (a.drive_amplitude, b.drive_amplitude),
            (a.drive_frequency, b.drive_frequency),
            (a.drive_phase, b.drive_phase),
        ] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
