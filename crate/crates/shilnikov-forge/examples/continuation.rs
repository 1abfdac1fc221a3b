//! Pseudo-arclength continuation of the homoclinic curve from the beta
//! preset, then a refined crossing of the Koper surface.

use shilnikov_forge::homoclinic::{
    continue_curve, homoclinic_angle, koper_intersection, ContinuationOptions, NewtonOptions,
    ShootOptions,
};
use shilnikov_forge::manifolds::{AngleParam, Model};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let q = ShnfParamsByEq::beta();
    let opts = ShootOptions::default();
    let (theta, _) = homoclinic_angle(&Model::from_eq(&q)?, 720, &opts)?;
    let theta = AngleParam::raw(theta);

    // Walk away from the Koper surface first.
    let away = ContinuationOptions {
        direction: -1.0,
        stop_on_koper: false,
        c_limit: Some(5.65),
        ..ContinuationOptions::default()
    };
    let curve = continue_curve(&q, theta, &away, &opts).map_err(|(_, e)| e)?;
    let end = curve.points.last().expect("at least the start point");
    println!("{} points, end (a, b, c) = {:?}, g = {:.4}", curve.points.len(), end.abc, end.g);

    // Then come back and stop at the sign change of g.
    let back = ContinuationOptions::default();
    let start = q.with_abc(end.abc[0], end.abc[1], end.abc[2]);
    let curve = continue_curve(&start, theta, &back, &opts).map_err(|(_, e)| e)?;
    let k = koper_intersection(&curve, &NewtonOptions::default(), &opts, 1e-10)?;
    println!(
        "crossing at (a, b, c) = ({:.7}, {:.7}, {:.7}), g = {:.1e}, slope {:.3}",
        k.abc[0], k.abc[1], k.abc[2], k.g, k.slope
    );
    println!("koper image {:?}", k.koper);
    Ok(())
}
