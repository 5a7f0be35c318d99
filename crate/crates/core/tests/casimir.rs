mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rackpinion_core::casimir::{load_tabulated_kernel, pfa_integral};
use rackpinion_core::{force_amplitude, ForceKernel, RackPinionGeometry};

fn geometry(gap: f64) -> RackPinionGeometry {
    RackPinionGeometry {
        pinion_length: 10e-6,
        pinion_radius: 100e-6,
        pinion_amplitude: 10e-9,
        rack_amplitude: 10e-9,
        wavelength: 1e-6,
        gap,
    }
}

#[test]
fn unit_kernel_reproduces_beta_family() {
    assert!((common::beta_half(5) - 35.0 * PI / 128.0).abs() < 1e-15);
    for a in 3..=6u32 {
        for scale in [0.0, 0.3, 7.0] {
            let got = pfa_integral(&ForceKernel::unit(), scale, a as f64).unwrap();
            let want = common::beta_half(a);
            assert!(((got - want) / want).abs() < 1e-8, "a={a}: {got} vs {want}");
        }
    }
}

#[test]
fn unit_kernel_force_falls_as_gap_to_minus_nine_halves() {
    let k = ForceKernel::unit();
    for h in [50e-9, 200e-9, 1e-6] {
        let f1 = force_amplitude(&geometry(h), &k).unwrap().force;
        let f2 = force_amplitude(&geometry(1.01 * h), &k).unwrap().force;
        let slope = (f2 / f1).ln() / 1.01f64.ln();
        assert!((slope + 4.5).abs() < 1e-3, "{slope}");
    }
}

#[test]
fn exponential_kernel_against_closed_form() {
    // ∫₁^∞ s^{-1}(s-1)^{-1/2} e^{-c s} ds = π erfc(√c), checked at c = 2π·0.25
    // through the series erfc(x) = 1 - 2/√π Σ (-1)^k x^{2k+1}/(k!(2k+1))
    let c = TAU * 0.25;
    let x: f64 = c.sqrt();
    let mut erf = 0.0;
    let mut term = x;
    for k in 0..60 {
        erf += term / (2 * k + 1) as f64;
        term *= -x * x / (k + 1) as f64;
    }
    let erfc = 1.0 - 2.0 / PI.sqrt() * erf;
    let got = pfa_integral(&ForceKernel::exponential(), 0.25, 1.0).unwrap();
    assert!(
        ((got - PI * erfc) / (PI * erfc)).abs() < 1e-9,
        "{got} vs {}",
        PI * erfc
    );
}

#[test]
fn toy_kernel_curve_is_monotone_with_a_crossover() {
    let k = ForceKernel::toy();
    let gaps: Vec<f64> = (0..60)
        .map(|i| 1e-9 * 10f64.powf(i as f64 / 20.0))
        .collect();
    let forces: Vec<f64> = gaps
        .iter()
        .map(|&h| force_amplitude(&geometry(h), &k).unwrap().force)
        .collect();
    assert!(forces.windows(2).all(|w| w[1] < w[0]));

    let slope = |h: f64| {
        let f1 = force_amplitude(&geometry(h), &k).unwrap().force;
        let f2 = force_amplitude(&geometry(1.01 * h), &k).unwrap().force;
        (f2 / f1).ln() / 1.01f64.ln()
    };
    // power law for H << λ, exponential (ever steeper) for H >> λ
    assert!((slope(1e-9) + 4.5).abs() < 0.01);
    let far: Vec<f64> = [1e-6, 2e-6, 4e-6].iter().map(|&h| slope(h)).collect();
    assert!(
        far[0] < -8.0 && far[1] < far[0] && far[2] < far[1],
        "{far:?}"
    );
    // in the exponential regime d ln F / dH tends to -2π/λ
    let h = 4e-6;
    let f1 = force_amplitude(&geometry(h), &k).unwrap().force;
    let f2 = force_amplitude(&geometry(h + 1e-9), &k).unwrap().force;
    let rate = (f2 / f1).ln() / 1e-9;
    assert!(((rate + TAU / 1e-6) / (TAU / 1e-6)).abs() < 0.2, "{rate}");
}

#[test]
fn tabulated_kernels_match_builtins() {
    let unit: Vec<(f64, f64)> = (0..=500).map(|i| (i as f64 * 0.1, 1.0)).collect();
    let exp: Vec<(f64, f64)> = (0..=2000)
        .map(|i| {
            let u = i as f64 * 0.005;
            (u, (-TAU * u).exp())
        })
        .collect();
    for (table, builtin) in [
        (unit, ForceKernel::unit()),
        (exp, ForceKernel::exponential()),
    ] {
        let tab = load_tabulated_kernel(&table).unwrap();
        assert!(tab.provenance.contains("sha256:"));
        for scale in [0.01, 0.1, 0.5, 2.0] {
            let a = pfa_integral(&tab, scale, 5.0).unwrap();
            let b = pfa_integral(&builtin, scale, 5.0).unwrap();
            assert!(
                ((a - b) / b).abs() < 1e-6,
                "{} at {scale}: {a} vs {b}",
                builtin.name
            );
        }
    }
}

#[test]
fn kernel_digest_tracks_content() {
    let t1: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.5f64.powi(i))).collect();
    let mut t2 = t1.clone();
    t2[1].1 = 0.5000001;
    let a = load_tabulated_kernel(&t1).unwrap();
    let b = load_tabulated_kernel(&t2).unwrap();
    assert_ne!(a.provenance, b.provenance);
    assert_eq!(a.provenance, load_tabulated_kernel(&t1).unwrap().provenance);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn force_scales_linearly_in_length_and_amplitudes_and_as_root_radius(
        sl in 0.1f64..10.0, s1 in 0.1f64..10.0, s2 in 0.1f64..10.0, sr in 0.5f64..10.0,
    ) {
        let k = ForceKernel::toy();
        let g = geometry(150e-9);
        let base = force_amplitude(&g, &k).unwrap().force;
        let scaled = |g2: RackPinionGeometry| force_amplitude(&g2, &k).unwrap().force;
        let checks = [
            (scaled(RackPinionGeometry { pinion_length: g.pinion_length * sl, ..g }), base * sl),
            (scaled(RackPinionGeometry { pinion_amplitude: g.pinion_amplitude * s1, ..g }), base * s1),
            (scaled(RackPinionGeometry { rack_amplitude: g.rack_amplitude * s2, ..g }), base * s2),
            (scaled(RackPinionGeometry { pinion_radius: g.pinion_radius * sr, ..g }), base * sr.sqrt()),
        ];
        for (got, want) in checks {
            prop_assert!(((got - want) / want).abs() < 1e-10, "{got} vs {want}");
        }
    }
}
