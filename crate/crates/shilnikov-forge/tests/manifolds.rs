use shilnikov_forge::integrator::{integrate, IntegrateOptions};
use shilnikov_forge::manifolds::{
    canard_bisection, canard_height_map, canard_spiral, log_offsets, parameter_sweep,
    sheet_distance, CanardOptions, HeightGrid, HeightStops, ManifoldOptions, Model, SweepOptions,
};
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::singular::{critical_height, FOLD_MINUS_HEIGHT};

fn beta() -> Model {
    Model::from_eq(&ShnfParamsByEq::beta()).unwrap()
}

#[test]
fn attracting_sheet_trajectories_stay_close() {
    let m = beta();
    let eps = m.params.eps;
    for (x0, z0) in [(0.6, 0.3), (0.5, 0.0), (0.8, 0.6)] {
        let tr = integrate(
            &m.params,
            0.0,
            [x0, critical_height(x0), z0],
            &IntegrateOptions::forward(3.0),
            &[],
        );
        let d = sheet_distance(&tr, 0.1, 10.0 * eps);
        assert!(d < 5.0 * eps, "start ({x0}, {z0}): distance {d}");
    }
}

#[test]
fn canard_bracket_keeps_opposite_sides() {
    let m = beta();
    let c = canard_bisection(&m, &CanardOptions::default(), &ManifoldOptions::default()).unwrap();
    assert!(!c.history.is_empty());
    for s in &c.history {
        assert!(s.side_lo != 0 && s.side_hi != 0);
        assert_ne!(s.side_lo, s.side_hi, "bracket [{}, {}]", s.lo, s.hi);
    }
    let last = c.history.last().unwrap();
    assert!((last.hi - last.lo).abs() <= 1e-11);
}

#[test]
fn repelling_sheet_spirals() {
    let m = beta();
    let opts = ManifoldOptions::default();
    let c = canard_bisection(&m, &CanardOptions::default(), &opts).unwrap();
    let s = canard_spiral(&m, &c, &log_offsets(1e-2, 11.0, 600), &opts).unwrap();
    assert!(s.turns >= 6.0, "{} turns", s.turns);
}

#[test]
fn stable_manifold_crosses_the_sheet_in_a() {
    let r = parameter_sweep(
        &ShnfParamsByEq::beta(),
        &SweepOptions::default(),
        &ManifoldOptions::default(),
    )
    .unwrap();
    assert_eq!(r.a_values.len(), r.witness.len());
    assert!(r.sign_changes >= 1, "witness {:?}", r.witness);
}

#[test]
fn heights_respect_the_fold() {
    let m = beta();
    let opts = ManifoldOptions::default();
    let thetas: Vec<f64> = (0..64).map(|i| std::f64::consts::TAU * i as f64 / 64.0).collect();
    let stops = HeightStops::default();
    let cells = canard_height_map(&m, &HeightGrid::Angles { thetas, x_section: -0.05 }, &stops, &opts);
    assert!(!cells.is_empty());
    for c in cells {
        assert!(c.height <= FOLD_MINUS_HEIGHT + stops.band + 1e-6, "{c:?}");
    }
    let one = HeightGrid::Plane { z_section: -0.025, x: (-0.0254, -0.0254, 1), y: (5.6e-4, 5.6e-4, 1) };
    assert_eq!(canard_height_map(&m, &one, &stops, &opts).len(), 1);
}
