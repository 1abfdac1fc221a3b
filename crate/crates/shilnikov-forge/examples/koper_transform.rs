//! Moving states, tangent vectors and parameters between the Koper model and
//! the normal form.

use shilnikov_forge::models::{
    eval_koper, eval_shnf, inverse_transform, push_forward, shnf_to_koper_params, transform,
    ShnfParamsByEq, State3,
};

fn main() -> shilnikov_forge::Result<()> {
    let p = ShnfParamsByEq::beta().to_params()?;
    let k = shnf_to_koper_params(&p)?;
    println!("normal form {p:?}");
    println!("koper       {k:?}");
    println!("constraint residual {:.3e}", p.koper_residual());

    let u = State3::koper(-0.8, 0.1, 0.3);
    let (s, back) = transform(&u, &k)?;
    println!("state {:?} -> {:?}", u.coords, s.coords);
    println!("parameter round trip error {:.3e}", (back.b - p.b).abs());

    // The Koper field pushed forward equals the normal-form field after
    // rescaling time.
    let fk = eval_koper(&u, &k)?;
    let pushed = push_forward(&fk.coords, &k);
    let fs = eval_shnf(&s, &back)?;
    let tf = k.time_factor();
    for i in 0..3 {
        println!("  component {i}: pushed {:.9e}  factor*field {:.9e}", pushed[i], tf * fs.coords[i]);
    }
    let (again, _) = inverse_transform(&s, &back)?;
    println!("inverse {:?}", again.coords);
    Ok(())
}
