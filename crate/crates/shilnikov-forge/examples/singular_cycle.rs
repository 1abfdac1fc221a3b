//! Singular cycles at nu = 0 for a few jump points, written as segmented CSV.

use shilnikov_forge::models::{ShnfParams, ShnfParamsByEq};
use shilnikov_forge::singular::{jump_target, singular_cycles, CycleOptions, Segment};

fn main() -> shilnikov_forge::Result<()> {
    let b = ShnfParamsByEq::beta();
    let p = ShnfParams::new(b.eps, 0.0, b.a, b.b, b.c)?;
    println!("jump from the lower fold lands at {:?}", jump_target(-2.0 / 3.0)?.plus);
    let dir = std::env::temp_dir().join("shilnikov-singular");
    std::fs::create_dir_all(&dir)?;
    let jumps = [-0.1, -0.3, -0.5];
    for (x, c) in jumps.iter().zip(singular_cycles(&p, &jumps, &CycleOptions::default())) {
        let c = c?;
        let kinds: Vec<&str> = c
            .segments
            .iter()
            .map(|s| match s {
                Segment::Slow { .. } => "slow",
                Segment::Jump { .. } => "jump",
            })
            .collect();
        let path = dir.join(format!("cycle_{}.csv", (-x * 10.0).round()));
        c.write_csv(&path)?;
        println!("jump at x = {x}: {kinds:?}, closed = {}, -> {}", c.closed, path.display());
    }
    Ok(())
}
