//! Transversality in `a`: the stable-manifold section point against the
//! surface traced by the attracting sheet, and the repelling-sheet spiral.

use shilnikov_forge::manifolds::{
    canard_bisection, canard_spiral, log_offsets, parameter_sweep, CanardOptions, ManifoldOptions,
    Model, SweepOptions,
};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let q = ShnfParamsByEq::beta();
    let opts = ManifoldOptions::default();
    let r = parameter_sweep(&q, &SweepOptions::default(), &opts)?;
    println!("plane normal {:?}, offset {:.6e}", r.eta, r.n);
    for (a, w) in r.a_values.iter().zip(&r.witness) {
        println!("  a = {a:.6}: signed distance {w:+.3e}");
    }
    println!("sign changes: {}", r.sign_changes);

    let m = Model::from_eq(&q)?;
    let canard = canard_bisection(&m, &CanardOptions::default(), &opts)?;
    let spiral = canard_spiral(&m, &canard, &log_offsets(1e-2, 11.0, 600), &opts)?;
    println!(
        "spiral: {} points winding {:.2} turns about {:?}",
        spiral.points.len(),
        spiral.turns,
        spiral.center
    );
    Ok(())
}
