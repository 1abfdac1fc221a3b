//! Locating the canard in the unstable manifold by bisection on the side of
//! the repelling sheet where trajectories leave.

use shilnikov_forge::manifolds::{canard_bisection, side_scan, CanardOptions, ManifoldOptions, Model};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let opts = ManifoldOptions::default();
    let scan = side_scan(&m, 720, &opts);
    let flips = scan.windows(2).filter(|w| w[0].side != w[1].side).count();
    println!("{flips} side changes over 720 angles");
    let c = canard_bisection(&m, &CanardOptions::default(), &opts)?;
    println!("canard at raw theta {:.12}, exit height {:.5}", c.theta, c.exit_height);
    for s in c.history.iter().step_by(8) {
        println!(
            "  [{:.12}, {:.12}] sides ({}, {}) heights ({:.5}, {:.5})",
            s.lo, s.hi, s.side_lo, s.side_hi, s.height_lo, s.height_hi
        );
    }
    Ok(())
}
