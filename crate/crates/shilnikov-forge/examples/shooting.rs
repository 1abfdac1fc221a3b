//! The shooting residual near the alpha-tilde preset: the grid
//! image around it, its convex hull, and Newton refinement.

use shilnikov_forge::homoclinic::{
    affine_fit, homoclinic_angle, hull_contains, residual_grid, solve_homoclinic, NewtonOptions,
    ShootOptions,
};
use shilnikov_forge::manifolds::{AngleParam, Model};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let m = Model::from_eq(&q)?;
    let (theta, r) = homoclinic_angle(&m, 720, &opts)?;
    println!("closest approach at raw theta {theta:.10}: |psi| = {:.3e}", r.norm());

    let grid = residual_grid(&q, AngleParam::raw(theta), 2e-6, 3, &opts)?;
    let image: Vec<[f64; 2]> = grid.iter().map(|g| g.1).collect();
    for (ab, psi) in &grid {
        println!("  (a, b) = ({:.7}, {:.7})  psi = ({:+.3e}, {:+.3e})", ab[0], ab[1], psi[0], psi[1]);
    }
    println!("hull contains the origin: {}", hull_contains(&image, [0.0, 0.0]));
    let fit = affine_fit(&grid)?;
    println!("affine root {:?} (fit residual {:.1e})", fit.root, fit.max_residual);

    // Newton from a raw angle that is not the homoclinic one moves (a, b).
    let sol = solve_homoclinic(&q, AngleParam::raw(0.0), &NewtonOptions::default(), &opts)?;
    println!(
        "theta = 0: (a, b) -> ({:.9}, {:.9}) in {} step(s), |psi| {:.2e}, half-r0 check {:?}",
        sol.params.a,
        sol.params.b,
        sol.iterations,
        sol.residual.norm(),
        sol.richardson
    );
    Ok(())
}
