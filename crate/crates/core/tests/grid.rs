use std::f64::consts::PI;

use proptest::prelude::*;
use rackpinion_core::io::{read_grid, read_grid_file, write_grid, write_grid_file, GridFormat};
use rackpinion_core::sweep::{CellResult, RunMetadata};
use rackpinion_core::{
    basin_map, classify_orbit, drive_map, GridResult, GridSpec, OrbitClass, ReducedParams, State,
    SweepOptions, TargetFilter,
};

fn fast() -> SweepOptions {
    let mut o = SweepOptions::default();
    o.classify.integrator.steps_per_period = 200;
    o
}

fn basin_params() -> ReducedParams {
    ReducedParams::new(0.5, 0.185, 1.4, 2.0 / 3.0, 0.0).unwrap()
}

fn bytes(r: &GridResult, f: GridFormat) -> Vec<u8> {
    let mut buf = Vec::new();
    write_grid(r, f, &mut buf).unwrap();
    buf
}

#[test]
fn drive_map_cell_equals_direct_classification() {
    let s0 = State::origin();
    let spec = GridSpec::drive_map(0.5, 0.1, s0, (1.9, 2.0), (0.8, 0.9), 0.1).unwrap();
    let opts = fast();
    let grid = drive_map(0.5, 0.1, &s0, &spec, TargetFilter::default(), &opts).unwrap();
    assert_eq!(grid.dims(), (2, 2));
    let p = ReducedParams::new(0.5, 0.1, 1.9, 0.8, 0.0).unwrap();
    let direct = classify_orbit(&p, &s0, &opts.classify).unwrap();
    let cell = grid.cell(0, 0);
    assert_eq!(cell.class, direct.class);
    assert_eq!(cell.mean_velocity, direct.mean_velocity);
    assert_eq!(cell.class, OrbitClass::rotating(1, 1, 1));
    assert!(grid.match_count() >= 1);
}

#[test]
fn basin_is_complete_and_worker_independent() {
    let spec = GridSpec::basin(basin_params(), (-PI, PI), (-3.0, 3.0), 0.5);
    let mut opts = fast();
    let mut outputs = Vec::new();
    for w in [1, 4, 8] {
        opts.workers = Some(w);
        let r = basin_map(&basin_params(), &spec, &opts).unwrap();
        let (nx, ny) = r.dims();
        assert_eq!(r.cells.len(), nx * ny);
        assert_eq!(r.coordinates().len(), nx * ny);
        outputs.push(bytes(&r, GridFormat::Csv));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn heavy_load_has_no_forward_rotation() {
    // with w >= 1 the tilt exceeds the corrugation: no upward orbit can exist
    let s0 = State::origin();
    let spec = GridSpec::drive_map(0.5, 1.05, s0, (0.0, 3.0), (0.2, 2.0), 0.4).unwrap();
    let r = drive_map(0.5, 1.05, &s0, &spec, TargetFilter::default(), &fast()).unwrap();
    assert_eq!(r.match_count(), 0);
    assert!(r
        .cells
        .iter()
        .all(|c| !matches!(c.class, OrbitClass::Rotating { sign: 1, .. })));
}

#[test]
fn forward_rotation_respects_the_simple_bound() {
    let s0 = State::origin();
    let spec = GridSpec::drive_map(0.5, 0.1, s0, (1.0, 2.2), (0.3, 1.1), 0.1).unwrap();
    let r = drive_map(0.5, 0.1, &s0, &spec, TargetFilter::default(), &fast()).unwrap();
    for ((ys, ws), c) in r.coordinates().into_iter().zip(&r.cells) {
        if let OrbitClass::Rotating { m, n, sign: 1 } = c.class {
            let bound = 1.0 - 0.5 * ws * m as f64 / n as f64;
            assert!(0.1 < bound, "({ys}, {ws}) rotates with bound {bound}");
        }
    }
}

#[test]
fn failed_cells_do_not_abort_the_grid() {
    // undamped and heavily tilted: every trajectory runs away
    let p = ReducedParams::new(0.0, 2.0, 0.0, 1.0, 0.0).unwrap();
    let spec = GridSpec::basin(p, (-1.0, 1.0), (-1.0, 1.0), 1.0);
    let r = basin_map(&p, &spec, &fast()).unwrap();
    assert_eq!(r.cells.len(), 9);
    assert!(r
        .cells
        .iter()
        .all(|c| c.failed && c.class == OrbitClass::Unclassified));
    let back = read_grid(&bytes(&r, GridFormat::Csv)[..], GridFormat::Csv).unwrap();
    assert_eq!(back, r);
}

#[test]
fn files_round_trip() {
    let spec = GridSpec::basin(basin_params(), (-1.0, 1.0), (1.0, 3.0), 0.5);
    let r = basin_map(&basin_params(), &spec, &fast()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for f in [GridFormat::Csv, GridFormat::Json] {
        let path = dir.path().join(format!("grid.{f:?}"));
        write_grid_file(&r, &path, f).unwrap();
        assert_eq!(read_grid_file(&path, f).unwrap(), r);
    }
}

fn class_strategy() -> impl Strategy<Value = OrbitClass> {
    prop_oneof![
        (1u32..=8, 1u32..=4, prop::bool::ANY).prop_map(|(m, n, up)| OrbitClass::rotating(
            m,
            n,
            if up { 1 } else { -1 }
        )),
        Just(OrbitClass::Locked),
        Just(OrbitClass::Chaotic),
        Just(OrbitClass::Unclassified),
    ]
}

fn cell_strategy() -> impl Strategy<Value = CellResult> {
    (
        class_strategy(),
        0.0f64..1.0,
        0u32..40,
        -5.0f64..5.0,
        0.0f64..3.0,
        0.0f64..1e-2,
        prop::option::of(-1.0f64..1.0),
        prop::bool::ANY,
    )
        .prop_map(
            |(
                class,
                residual,
                period,
                mean_velocity,
                delta,
                identity_residual,
                lyapunov,
                failed,
            )| CellResult {
                class,
                residual,
                period,
                mean_velocity,
                delta,
                identity_residual,
                lyapunov,
                failed,
            },
        )
}

fn grid_strategy() -> impl Strategy<Value = GridResult> {
    (
        2usize..5,
        2usize..5,
        -2.0f64..2.0,
        0.01f64..0.5,
        prop::bool::ANY,
    )
        .prop_flat_map(|(nx, ny, x0, step, basin)| {
            prop::collection::vec(cell_strategy(), nx * ny).prop_map(move |cells| {
                let x1 = x0 + (nx - 1) as f64 * step;
                let spec = if basin {
                    GridSpec::basin(basin_params(), (x0, x1), (0.0, (ny - 1) as f64 * step), step)
                } else {
                    GridSpec::drive_map(
                        0.5,
                        0.1,
                        State::new(0.3, -0.2, 0.0),
                        (x0.abs(), x0.abs() + x1 - x0),
                        (0.5, 0.5 + (ny - 1) as f64 * step),
                        step,
                    )
                    .unwrap()
                };
                GridResult {
                    spec,
                    cells,
                    metadata: RunMetadata {
                        classify: SweepOptions::default().classify,
                        step: basin.then_some(step / 7.0),
                        version: "0.0.0".into(),
                        config: None,
                    },
                }
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn grids_round_trip_exactly(r in grid_strategy()) {
        prop_assume!(r.spec.dims().map(|(a, b)| a * b == r.cells.len()).unwrap_or(false));
        for f in [GridFormat::Csv, GridFormat::Json] {
            let back = read_grid(&bytes(&r, f)[..], f).unwrap();
            prop_assert_eq!(&back, &r);
        }
    }
}
