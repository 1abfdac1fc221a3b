//! Following a homoclinic orbit toward smaller eps with nu / eps held fixed.

use shilnikov_forge::homoclinic::{
    epsilon_path, homoclinic_angle, solve_homoclinic, NewtonOptions, ShootOptions,
};
use shilnikov_forge::manifolds::{AngleParam, Model};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    // The residual changes by only ~1e-4 per unit of (a, b), so a tight
    // target is needed for the parameters to actually move.
    let nopts = NewtonOptions { tol: 1e-11, ..NewtonOptions::default() };
    let (theta, _) = homoclinic_angle(&Model::from_eq(&q)?, 720, &opts)?;
    let start = solve_homoclinic(&q, AngleParam::raw(theta), &nopts, &opts)?;
    let path = epsilon_path(&start, &[0.009, 0.008, 0.007, 0.006, 0.005], &nopts, &opts);
    println!("nu / eps = {:.12}", path.nu_bar);
    for p in &path.points {
        println!(
            "eps {:.4}: x_eq {:+.6}, (a, b) = ({:.7}, {:.7}), |psi| {:.1e}",
            p.eps,
            p.x_eq,
            p.solution.params.a,
            p.solution.params.b,
            p.solution.residual.norm()
        );
    }
    if let Some((eps, why)) = &path.failure {
        println!("stopped at eps {eps}: {why}");
    }
    Ok(())
}
