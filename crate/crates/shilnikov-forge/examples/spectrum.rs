//! Saddle-focus spectrum and folded-singularity data for both presets.

use shilnikov_forge::manifolds::Model;
use shilnikov_forge::models::ShnfParamsByEq;
use shilnikov_forge::singular::folded_singularities;
use shilnikov_forge::spectral::summary;

fn main() -> shilnikov_forge::Result<()> {
    for (name, q) in [
        ("alpha-tilde", ShnfParamsByEq::alpha_tilde()),
        ("beta", ShnfParamsByEq::beta()),
    ] {
        let m = Model::from_eq(&q)?;
        let s = summary(&m.saddle.eig)?;
        println!("{name}: equilibrium {:?}, nu = {:.9}", m.saddle.point, q.nu());
        println!(
            "  rho {:.6}  omega {:.6}  lambda {:.6}  |rho/lambda| {:.4}  shilnikov {}",
            s.rho, s.omega, s.lambda, s.ratio, s.shilnikov
        );
        for f in folded_singularities(&m.params) {
            println!(
                "  folded {:?} at {:?}: w = ({:.7}, {:.7}{:+.4}i), mu {:?}, twist {:?}",
                f.kind, f.location, f.w1, f.w2, f.w_imag, f.mu, f.twist
            );
        }
    }
    Ok(())
}
