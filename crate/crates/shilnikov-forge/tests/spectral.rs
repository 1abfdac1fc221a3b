use nalgebra::Matrix3;
use shilnikov_forge::manifolds::Model;
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::spectral::{
    eigen_decompose, find_equilibria, jacobian_at, shilnikov_condition, summary,
};

#[test]
fn beta_spectrum() {
    let m = Model::from_eq(&ShnfParamsByEq::beta()).unwrap();
    let s = summary(&m.saddle.eig).unwrap();
    assert!((s.rho - 0.790204).abs() < 1e-5, "rho {}", s.rho);
    assert!((s.omega - 8.482321).abs() < 1e-5, "omega {}", s.omega);
    assert!((s.lambda + 1.576071).abs() < 1e-5, "lambda {}", s.lambda);
    assert!((s.ratio - 0.5014).abs() < 1e-3);
    assert!(s.shilnikov);
}

#[test]
fn alpha_tilde_is_a_saddle_focus() {
    let m = Model::from_eq(&ShnfParamsByEq::alpha_tilde()).unwrap();
    let e = m.saddle.eig;
    assert!(e.omega > 0.0);
    assert!(e.rho * e.lambda < 0.0);
}

#[test]
fn real_jordan_form() {
    let q = ShnfParamsByEq::beta();
    let p = q.to_params().unwrap();
    let m = Model::from_eq(&q).unwrap();
    let j = jacobian_at(&m.saddle.point, &p);
    let e = eigen_decompose(&j).unwrap();
    let d = e.p_inv * j * e.p;
    let want = Matrix3::new(e.rho, e.omega, 0.0, -e.omega, e.rho, 0.0, 0.0, 0.0, e.lambda);
    assert!((d - want).abs().max() < 1e-8, "{d}");
    let r = j * e.real_vector - e.real_vector * e.lambda;
    assert!(r.norm() < 1e-8);
    assert!((e.real_vector.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn equilibria_are_zeros() {
    for q in [ShnfParamsByEq::beta(), ShnfParamsByEq::alpha_tilde()] {
        let p = q.to_params().unwrap();
        let eqs = find_equilibria(&p);
        assert!(!eqs.is_empty());
        assert!(eqs.iter().any(|e| (e[0] - q.x_eq).abs() < 1e-12));
        for e in eqs {
            assert!(p.field(&e).iter().all(|v| v.abs() <= 1e-12));
        }
    }
}

#[test]
fn condition_edge_cases() {
    assert!(shilnikov_condition(1.0, 0.0).is_err());
    assert!(!shilnikov_condition(1.0, 0.5).unwrap().0);
    assert!(!shilnikov_condition(0.5, 1.0).unwrap().0);
    assert!(shilnikov_condition(0.5, -1.0).unwrap().0);
}
