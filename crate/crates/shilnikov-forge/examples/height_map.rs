//! Canard heights: an angle scan around the canard and a small planar grid.

use shilnikov_forge::manifolds::{
    canard_bisection, canard_height_map, CanardOptions, HeightGrid, HeightStops, ManifoldOptions,
    Model,
};
use shilnikov_forge::models::ShnfParamsByEq;

fn main() -> shilnikov_forge::Result<()> {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let opts = ManifoldOptions::default();
    let gamma = canard_bisection(&m, &CanardOptions::default(), &opts)?.theta;
    let thetas: Vec<f64> = (0..41).map(|i| gamma - 0.2 + 0.01 * i as f64).collect();
    let stops = HeightStops::default();
    let cells = canard_height_map(
        &m,
        &HeightGrid::Angles { thetas, x_section: -0.05 },
        &stops,
        &opts,
    );
    for c in cells.iter().step_by(4) {
        println!("theta - gamma {:+.3}: height {:.5}", c.x - gamma, c.height);
    }
    let grid = HeightGrid::Plane {
        z_section: -0.025,
        x: (-0.025453, -0.025452, 5),
        y: (5.6083e-4, 5.6088e-4, 5),
    };
    for c in canard_height_map(&m, &grid, &stops, &opts) {
        print!("{:.4} ", c.height);
        if c.col == 4 {
            println!();
        }
    }
    Ok(())
}
