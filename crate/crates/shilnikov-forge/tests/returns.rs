use approx::assert_relative_eq;
use nalgebra::Matrix2;
use shilnikov_forge::integrator::{integrate, EventSpec, IntegrateOptions};
use shilnikov_forge::manifolds::{ManifoldOptions, Model};
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::returns::{
    composed_jacobian, fixed_points_of, local_map, local_map_det, map_jacobian, return_map_1d,
    strip_at_stable_point, LocalMapData, ReturnOptions,
};
use std::f64::consts::TAU;

#[test]
fn fixed_points_at_beta() {
    let m = Model::from_eq(&ShnfParamsByEq::beta()).unwrap();
    let opts = ManifoldOptions::default();
    let ropts = ReturnOptions::default();
    let strip = strip_at_stable_point(&m, ropts.half_width, &opts).unwrap();
    let rm = return_map_1d(&m, strip, &ropts, &opts);
    let fps: Vec<_> = rm.validated().collect();
    assert!(fps.len() >= 3, "{} validated", fps.len());
    assert!(fps.iter().any(|f| (f.x + 5.18996e-4).abs() <= 2e-4));
    // Each periodic orbit meets z = 0 with decreasing z exactly once per period.
    let io = IntegrateOptions::forward(1e3).tol(opts.tol).max_step(0.02);
    let ev = [EventSpec::plane(2, 0.0).falling()];
    for f in fps.iter().take(5) {
        let tr = integrate(&m.params, 0.0, strip.point(f.x), &IntegrateOptions { t_span: f.period * 1.01, ..io }, &ev);
        let hits = tr.events.iter().filter(|e| e.t > 1e-9 * f.period).count();
        assert_eq!(hits, 1, "fixed point {}", f.x);
    }
}

#[test]
fn harness_fixed_point() {
    let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let roots = fixed_points_of(|x| 0.5 * x, &xs, 1e-14);
    assert_eq!(roots.len(), 1);
    assert!(roots[0].abs() < 1e-13);
}

#[test]
fn local_map_oracles() {
    let m = Model::from_eq(&ShnfParamsByEq::beta()).unwrap();
    let eig = m.saddle.eig;
    let d0 = LocalMapData { d: 1e-3, m: 0 };
    let (img, _) = local_map(2e-4, 0.0, &d0, &eig).unwrap();
    assert_relative_eq!(img[0], 2e-4, max_relative = 1e-15);
    assert_relative_eq!(img[1], 1e-3, max_relative = 1e-15);

    let (a, _) = local_map(2e-4, 1e-4, &d0, &eig).unwrap();
    let (b, _) = local_map(2e-4, 1e-4, &LocalMapData { m: 1, ..d0 }, &eig).unwrap();
    assert_relative_eq!(b[0] / a[0], (TAU * eig.rho / eig.omega).exp(), max_relative = 1e-12);
    assert_relative_eq!(b[1] / a[1], (-TAU * eig.lambda / eig.omega).exp(), max_relative = 1e-12);

    let data = LocalMapData { d: 1e-3, m: 2 };
    let (xp, yp) = (-3e-4, 2e-4);
    let (_, j) = local_map(xp, yp, &data, &eig).unwrap();
    let theta = yp.atan2(xp) + TAU * 2.0;
    assert_relative_eq!(j.determinant(), local_map_det(xp.hypot(yp), theta, &data, &eig), max_relative = 1e-10);
    assert!(local_map(0.0, 0.0, &data, &eig).is_err());
}

#[test]
fn identity_maps() {
    let r = map_jacobian(Ok, [0.3, -0.2], 1e-6).unwrap();
    assert_relative_eq!(r.singular_values[0], 1.0, epsilon = 1e-9);
    assert_relative_eq!(r.singular_values[1], 1.0, epsilon = 1e-9);
    let c = composed_jacobian(&Matrix2::identity(), &Matrix2::identity());
    assert_relative_eq!(c.eigen_magnitudes[0], 1.0);
    assert_relative_eq!(c.eigen_magnitudes[1], 1.0);
}
