//! The linear fast-slow toy flow whose exit point is known in closed form,
//! and the analytic local map near the saddle-focus.

use shilnikov_forge::manifolds::Model;
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::returns::{exchange_toy_flow_map, local_map, local_map_det, LocalMapData};

fn main() -> shilnikov_forge::Result<()> {
    for lambda in [1.0, 2.0] {
        for y0 in [1e-6, 1e-3, 1e-1] {
            let x = exchange_toy_flow_map(1.0, lambda, y0)?;
            let exact = -y0.ln() / lambda;
            println!("lambda {lambda}, y0 {y0:e}: x = {x:.12} (error {:.1e})", (x - exact).abs());
        }
    }

    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let eig = m.saddle.eig;
    let data = LocalMapData { d: 1e-3, m: 3 };
    let (xp, yp) = (2e-4, 1e-4);
    let (img, jac) = local_map(xp, yp, &data, &eig)?;
    let r = xp.hypot(yp);
    let theta = yp.atan2(xp) + std::f64::consts::TAU * data.m as f64;
    println!("local map image {img:?}");
    println!("det {:.6e} vs closed form {:.6e}", jac.determinant(), local_map_det(r, theta, &data, &eig));
    Ok(())
}
