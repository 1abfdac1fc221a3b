use shilnikov_forge::models::{
    eval_koper, eval_shnf, inverse_transform, koper_constraint, koper_to_shnf_params,
    nu_from_xeq, push_forward, shnf_to_koper_params, transform, KoperParams, ShnfParams,
    ShnfParamsByEq, State3,
};
use shilnikov_forge::ForgeError;

fn koper() -> KoperParams {
    KoperParams::new(0.1, 0.5930, -18.0 / 4.416165, 2.3).unwrap()
}

#[test]
fn parameter_round_trip() {
    let k = koper();
    let s = koper_to_shnf_params(&k).unwrap();
    let back = shnf_to_koper_params(&s).unwrap();
    for (x, y) in [
        (k.eps1, back.eps1),
        (k.eps2, back.eps2),
        (k.k, back.k),
        (k.lambda_k, back.lambda_k),
    ] {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
    }
    assert!(s.koper_residual().abs() <= 1e-12);
}

#[test]
fn state_round_trip_and_chart_check() {
    let k = koper();
    let u = State3::koper(-0.7, 0.2, 0.4);
    let (s, p) = transform(&u, &k).unwrap();
    let (u2, _) = inverse_transform(&s, &p).unwrap();
    for i in 0..3 {
        assert!((u.coords[i] - u2.coords[i]).abs() <= 1e-12);
    }
    assert!(transform(&s, &k).is_err());
    assert!(inverse_transform(&u, &p).is_err());
}

#[test]
fn field_commutes_with_transform() {
    let k = koper();
    let u = State3::koper(0.3, -0.1, 0.9);
    let (s, p) = transform(&u, &k).unwrap();
    let lhs = push_forward(&eval_koper(&u, &k).unwrap().coords, &k);
    let rhs = eval_shnf(&s, &p).unwrap().coords;
    for i in 0..3 {
        let want = k.time_factor() * rhs[i];
        assert!((lhs[i] - want).abs() <= 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn beta_is_near_the_koper_surface() {
    let b = ShnfParamsByEq::beta();
    // Seven significant digits leave a residual of order 1e-4.
    assert!(koper_constraint(b.a, b.b, b.c).abs() < 1e-3);
    let a = ShnfParamsByEq::alpha_tilde();
    assert!(koper_constraint(a.a, a.b, a.c).abs() > 1.0);
}

#[test]
fn equilibrium_parameterization() {
    let q = ShnfParamsByEq::beta();
    let p = q.to_params().unwrap();
    let f = p.field(&[q.x_eq, q.x_eq * q.x_eq * (1.0 + q.x_eq), q.x_eq]);
    assert!(f.iter().all(|v| v.abs() < 1e-14), "{f:?}");
    assert_eq!(q.nu(), nu_from_xeq(q.x_eq, q.a, q.b, q.c));
}

#[test]
fn invalid_parameters_are_typed() {
    assert!(matches!(
        ShnfParams::new(0.0, 0.0, 1.0, 1.0, 1.0),
        Err(ForgeError::InvalidArgument(_))
    ));
    assert!(matches!(
        ShnfParams::new(0.01, f64::NAN, 1.0, 1.0, 1.0),
        Err(ForgeError::InvalidArgument(_))
    ));
    assert!(KoperParams::new(-0.1, 0.5, -4.0, 2.0).is_err());
    let p = ShnfParams::new(0.01, 0.0, 0.0, 1.0, 1.0).unwrap();
    assert!(matches!(shnf_to_koper_params(&p), Err(ForgeError::SingularTransform(_))));
    let k = KoperParams::new(0.1, 0.5, 0.0, 2.0).unwrap();
    assert!(matches!(koper_to_shnf_params(&k), Err(ForgeError::SingularTransform(_))));
}
