use shilnikov_forge::homoclinic::{
    continue_curve, epsilon_path, homoclinic_angle, hull_contains, koper_intersection,
    residual_grid, shooting_residual, solve_homoclinic, ContinuationOptions, NewtonOptions,
    ShootOptions,
};
use shilnikov_forge::manifolds::{AngleParam, Model};
use shilnikov_forge::models::ShnfParamsByEq;

fn angle(q: &ShnfParamsByEq, opts: &ShootOptions) -> AngleParam {
    let (t, _) = homoclinic_angle(&Model::from_eq(q).unwrap(), 720, opts).unwrap();
    AngleParam::raw(t)
}

#[test]
fn grid_image_surrounds_the_origin() {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let theta = angle(&q, &opts);
    let r = shooting_residual(&q, theta, &opts).unwrap();
    assert!(r.norm() <= 2e-6, "{}", r.norm());
    let grid = residual_grid(&q, theta, 2e-6, 3, &opts).unwrap();
    let image: Vec<[f64; 2]> = grid.iter().map(|g| g.1).collect();
    assert!(hull_contains(&image, [0.0, 0.0]));
}

#[test]
fn newton_from_a_displaced_start() {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let theta = angle(&q, &opts);
    let sol = solve_homoclinic(&q, theta, &NewtonOptions::default(), &opts).unwrap();
    assert!(sol.residual.norm() <= 1e-7);
    let far = q.with_abc(q.a + 0.05, q.b, q.c);
    let sol = solve_homoclinic(&far, theta, &NewtonOptions::default(), &opts).unwrap();
    assert!(sol.residual.norm() <= 1e-7);
    assert!(sol.iterations >= 1);
}

#[test]
fn eps_path_keeps_the_ratio() {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let nopts = NewtonOptions { tol: 1e-11, ..NewtonOptions::default() };
    let start = solve_homoclinic(&q, angle(&q, &opts), &nopts, &opts).unwrap();
    let path = epsilon_path(&start, &[0.009, 0.008, 0.007], &nopts, &opts);
    assert!(path.points.len() >= 3, "{:?}", path.failure);
    for p in &path.points {
        assert!((p.nu / p.eps - path.nu_bar).abs() <= 1e-12 * path.nu_bar.abs());
        assert!(p.solution.residual.norm() <= 1e-11);
    }
}

#[test]
fn continuation_from_beta_meets_the_koper_surface() {
    let q = ShnfParamsByEq::beta();
    let opts = ShootOptions::default();
    let theta = angle(&q, &opts);
    let away = ContinuationOptions {
        direction: -1.0,
        stop_on_koper: false,
        c_limit: Some(5.65),
        ..ContinuationOptions::default()
    };
    let out = continue_curve(&q, theta, &away, &opts).map_err(|(_, e)| e).unwrap();
    let end = out.points.last().unwrap().abc;
    let back = continue_curve(&q.with_abc(end[0], end[1], end[2]), theta, &ContinuationOptions::default(), &opts)
        .map_err(|(_, e)| e)
        .unwrap();
    let k = koper_intersection(&back, &NewtonOptions::default(), &opts, 1e-10).unwrap();
    assert!(k.slope.abs() > 1e-3);
    for (got, want) in k.abc.iter().zip(q.abc()) {
        assert!((got - want).abs() <= 1e-3 * want.abs(), "{:?}", k.abc);
    }
}
