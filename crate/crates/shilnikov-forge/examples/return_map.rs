//! The return map on a strip through the stable manifold, its fixed points,
//! and the Jacobian of the return along the homoclinic orbit.

use shilnikov_forge::homoclinic::{homoclinic_angle, ShootOptions};
use shilnikov_forge::manifolds::{AngleParam, ManifoldOptions, Model};
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::returns::{
    return_jacobian, return_map_1d, strip_at_stable_point, GlobalMapOptions, ReturnOptions,
};

fn main() -> shilnikov_forge::Result<()> {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let opts = ManifoldOptions::default();
    let ropts = ReturnOptions::default();
    let strip = strip_at_stable_point(&m, ropts.half_width, &opts)?;
    let rm = return_map_1d(&m, strip, &ropts, &opts);
    let back = rm.samples.iter().filter(|s| s.returned).count();
    println!("{back} of {} samples return", rm.samples.len());
    for f in rm.validated() {
        println!(
            "  fixed point x = {:.9e}, period {:.3}, {} turns, canard {}",
            f.x, f.period, f.turns, f.canard
        );
    }

    let sopts = ShootOptions::default();
    let (theta, _) = homoclinic_angle(&m, 720, &sopts)?;
    let j = return_jacobian(&m, AngleParam::raw(theta), &GlobalMapOptions::default(), &sopts.manifold)?;
    println!("global map singular values {:?}", j.global.singular_values);
    println!("turns near the equilibrium {}", j.local_data.m);
    println!("composed eigenvalue magnitudes {:?}", j.composed.eigen_magnitudes);
    Ok(())
}
