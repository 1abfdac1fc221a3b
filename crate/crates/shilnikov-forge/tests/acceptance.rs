//! Acceptance report: one PASS/FAIL line per criterion. Failures are
//! reported, not panicked on, so the full report always prints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shilnikov_forge::homoclinic::{
    continue_curve, epsilon_path, homoclinic_angle, hull_contains, koper_intersection,
    residual_grid, solve_homoclinic, ContinuationOptions, NewtonOptions, ShootOptions,
};
use shilnikov_forge::integrator::{integrate, IntegrateOptions};
use shilnikov_forge::manifolds::{
    canard_bisection, canard_spiral, log_offsets, parameter_sweep, sheet_distance, AngleParam,
    CanardOptions, ManifoldOptions, Model, SweepOptions,
};
use shilnikov_forge::models::{
    eval_koper, eval_shnf, inverse_transform, koper_to_shnf_params, push_forward,
    shnf_to_koper_params, transform, KoperParams, ShnfParamsByEq, State3,
};
use shilnikov_forge::returns::{
    exchange_toy_flow_map, return_jacobian, return_map_1d, strip_at_stable_point,
    GlobalMapOptions, ReturnOptions,
};
use shilnikov_forge::singular::{critical_height, folded_singularities, jump_target, FOLD_MINUS};
use shilnikov_forge::spectral::summary;
use shilnikov_forge::Result;
use std::time::Instant;

type Check = Result<(bool, String)>;

fn report(n: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    println!(
        "{} {n:>2} {name}: {detail} [{:.1}s]",
        if ok { "PASS" } else { "FAIL" },
        t.elapsed().as_secs_f64()
    );
    ok
}

fn within(x: f64, want: f64, tol: f64) -> bool {
    (x - want).abs() <= tol
}

fn eigenvalues() -> Check {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let s = summary(&m.saddle.eig)?;
    let ok = within(s.rho, 0.790204, 1e-5)
        && within(s.omega, 8.482321, 1e-5)
        && within(s.lambda, -1.576071, 1e-5)
        && within(s.ratio, 0.5014, 1e-3)
        && s.shilnikov;
    Ok((
        ok,
        format!(
            "rho {:.7} omega {:.7} lambda {:.7} ratio {:.5} condition {}",
            s.rho, s.omega, s.lambda, s.ratio, s.shilnikov
        ),
    ))
}

fn folded_node() -> Check {
    let p = ShnfParamsByEq::beta().to_params()?;
    let f = folded_singularities(&p)[0];
    let mu = f.mu.unwrap_or(f64::NAN);
    let (sum, prod) = (f.w1 + f.w2 + 1.0, f.w1 * f.w2 - 2.0 * p.nu);
    let ok = within(f.w1, -0.920102, 1e-5)
        && within(f.w2, -0.0798982, 1e-5)
        && within(mu, 11.5159, 1e-2)
        && f.twist == Some(6)
        && sum.abs() <= 1e-12
        && prod.abs() <= 1e-12;
    Ok((
        ok,
        format!(
            "w = ({:.7}, {:.7}) mu {mu:.4} j {:?}; identity residuals {sum:.1e}, {prod:.1e}",
            f.w1, f.w2, f.twist
        ),
    ))
}

fn jumps() -> Check {
    let a = jump_target(FOLD_MINUS)?.plus.unwrap_or(f64::NAN);
    let b = jump_target(0.0)?.minus.unwrap_or(f64::NAN);
    let ok = within(a, 1.0 / 3.0, 1e-12) && within(b, -1.0, 1e-12);
    Ok((ok, format!("from -2/3 -> {a:.15}, from 0 -> {b:.15}")))
}

fn transforms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let (mut round, mut push, mut cons) = (0f64, 0f64, 0f64);
    for _ in 0..100 {
        let k = KoperParams::new(
            rng.gen_range(1e-3..1.0),
            rng.gen_range(1e-2..2.0),
            rng.gen_range(-30.0..-1.0),
            rng.gen_range(-5.0..5.0),
        )?;
        let u = State3::koper(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        );
        let (s, p) = transform(&u, &k)?;
        let (back, k2) = inverse_transform(&s, &p)?;
        for i in 0..3 {
            round = round.max((back.coords[i] - u.coords[i]).abs());
        }
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1.0);
        round = round
            .max(rel(k.eps1, k2.eps1))
            .max(rel(k.eps2, k2.eps2))
            .max(rel(k.k, k2.k))
            .max(rel(k.lambda_k, k2.lambda_k));
        let lhs = push_forward(&eval_koper(&u, &k)?.coords, &k);
        let rhs = eval_shnf(&s, &p)?.coords;
        for i in 0..3 {
            push = push.max(rel(lhs[i], k.time_factor() * rhs[i]));
        }
        let q = koper_to_shnf_params(&k)?;
        cons = cons.max(q.koper_residual().abs());
    }
    let p = ShnfParamsByEq::beta().to_params()?;
    let q = koper_to_shnf_params(&shnf_to_koper_params(&p)?)?;
    let ok = round <= 1e-12 && push <= 1e-10 && cons <= 1e-12;
    Ok((
        ok,
        format!(
            "round trip {round:.1e}, pushforward {push:.1e}, constraint {cons:.1e} (beta maps back with c = {:.7})",
            q.c
        ),
    ))
}

fn toy_flow() -> Check {
    let lambda = 1.0;
    let mut worst = 0f64;
    for k in 1..=6 {
        let y0 = 10f64.powi(-k);
        let x = exchange_toy_flow_map(1.0, lambda, y0)?;
        worst = worst.max((x + y0.ln() / lambda).abs());
    }
    Ok((worst <= 1e-8, format!("max error {worst:.1e} over y0 = 1e-6 .. 1e-1")))
}

fn alpha_angle(opts: &ShootOptions) -> Result<f64> {
    let m = Model::from_eq(&ShnfParamsByEq::alpha_tilde())?;
    Ok(homoclinic_angle(&m, 720, opts)?.0)
}

fn shooting() -> Check {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let theta = AngleParam::raw(alpha_angle(&opts)?);
    let grid = residual_grid(&q, theta, 2e-6, 3, &opts)?;
    let image: Vec<[f64; 2]> = grid.iter().map(|g| g.1).collect();
    let hull = hull_contains(&image, [0.0, 0.0]);
    let sol = solve_homoclinic(&q, theta, &NewtonOptions::default(), &opts)?;
    let ok = hull && sol.residual.norm() <= 1e-7;

    // The angle origin of the eigenbasis is a convention; report the literal
    // zero of ours alongside the calibrated one.
    let raw0 = AngleParam::raw(0.0);
    let grid0 = residual_grid(&q, raw0, 2e-6, 3, &opts)?;
    let hull0 = hull_contains(&grid0.iter().map(|g| g.1).collect::<Vec<_>>(), [0.0, 0.0]);
    let note = match solve_homoclinic(&q, raw0, &NewtonOptions::default(), &opts) {
        Ok(s) => format!("newton {:.1e} in {} step(s)", s.residual.norm(), s.iterations),
        Err(e) => format!("newton failed: {e}"),
    };
    Ok((
        ok,
        format!(
            "theta origin at raw {:.10}: hull contains 0 {hull}, newton |psi| {:.1e}; literal raw 0: hull {hull0}, {note}",
            theta.raw_angle(),
            sol.residual.norm()
        ),
    ))
}

fn continuation() -> Check {
    let q = ShnfParamsByEq::alpha_tilde();
    let opts = ShootOptions::default();
    let nopts = NewtonOptions::default();
    let theta = AngleParam::raw(alpha_angle(&opts)?);
    let start = solve_homoclinic(&q, theta, &nopts, &opts)?;
    let q = q.with_abc(start.params.a, start.params.b, start.params.c);
    let beta = ShnfParamsByEq::beta().abc();
    let mut notes = Vec::new();
    for direction in [1.0, -1.0] {
        let copts = ContinuationOptions { direction, ..ContinuationOptions::default() };
        let (curve, stop) = match continue_curve(&q, theta, &copts, &opts) {
            Ok(c) => (c, None),
            Err((c, e)) => (c, Some(e)),
        };
        let end = curve.points.last().map_or([f64::NAN; 3], |p| p.abc);
        let g_range = curve.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |r, p| {
            (r.0.min(p.g), r.1.max(p.g))
        });
        match koper_intersection(&curve, &nopts, &opts, 1e-10) {
            Ok(k) => {
                let rel = (0..3)
                    .map(|i| ((k.abc[i] - beta[i]) / beta[i]).abs())
                    .fold(0.0, f64::max);
                let msg = format!("crossing {:?}, max relative deviation {rel:.1e}", k.abc);
                if rel <= 1e-3 {
                    return Ok((true, msg));
                }
                notes.push(msg);
            }
            Err(e) => notes.push(format!(
                "direction {direction:+}: {} points ending at ({:.4}, {:.4}, {:.4}), g in [{:.3}, {:.3}], {}; {e}",
                curve.points.len(),
                end[0],
                end[1],
                end[2],
                g_range.0,
                g_range.1,
                stop.map_or("completed".into(), |s| s.to_string())
            )),
        }
    }
    Ok((false, notes.join(" | ")))
}

fn return_map() -> Check {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let opts = ManifoldOptions::default();
    let ropts = ReturnOptions::default();
    let strip = strip_at_stable_point(&m, ropts.half_width, &opts)?;
    let rm = return_map_1d(&m, strip, &ropts, &opts);
    let fps: Vec<_> = rm.validated().collect();
    let nearest = fps
        .iter()
        .map(|f| (f.x + 5.18996e-4).abs())
        .fold(f64::INFINITY, f64::min);
    let ok = fps.len() >= 3 && nearest <= 2e-4;
    Ok((ok, format!("{} validated fixed points, nearest to -5.18996e-4 at distance {nearest:.2e}", fps.len())))
}

fn jacobians() -> Check {
    let m = Model::from_eq(&ShnfParamsByEq::beta())?;
    let sopts = ShootOptions::default();
    let (theta, _) = homoclinic_angle(&m, 720, &sopts)?;
    let j = return_jacobian(&m, AngleParam::raw(theta), &GlobalMapOptions::default(), &sopts.manifold)?;
    let [s1, s2] = j.global.singular_values;
    let l1 = j.composed.eigen_magnitudes[0];
    let ok = (1.0..=2.0).contains(&s1) && s2 / s1 < 1e-5 && (8.0e4 / 3.0..=8.0e4 * 3.0).contains(&l1);
    Ok((
        ok,
        format!(
            "sigma ({s1:.4e}, {s2:.4e}), ratio {:.1e}, {} turns, composed |lambda1| {l1:.3e}",
            s2 / s1,
            j.local_data.m
        ),
    ))
}

fn properties() -> Check {
    let q = ShnfParamsByEq::beta();
    let m = Model::from_eq(&q)?;
    let opts = ManifoldOptions::default();
    let eps = m.params.eps;
    let mut parts = Vec::new();
    let mut ok = true;

    let mut dist = 0f64;
    for (x0, z0) in [(0.6, 0.3), (0.5, 0.0), (0.8, 0.6)] {
        let tr = integrate(&m.params, 0.0, [x0, critical_height(x0), z0], &IntegrateOptions::forward(3.0), &[]);
        dist = dist.max(sheet_distance(&tr, 0.1, 10.0 * eps));
    }
    ok &= dist < 5.0 * eps;
    parts.push(format!("sheet distance {dist:.1e}"));

    let canard = canard_bisection(&m, &CanardOptions::default(), &opts)?;
    let bracket = canard
        .history
        .iter()
        .all(|s| s.side_lo != 0 && s.side_hi != 0 && s.side_lo != s.side_hi);
    ok &= bracket && !canard.history.is_empty();
    parts.push(format!("bracket invariant {bracket} over {} steps", canard.history.len()));

    let spiral = canard_spiral(&m, &canard, &log_offsets(1e-2, 11.0, 600), &opts)?;
    ok &= spiral.turns >= 6.0;
    parts.push(format!("spiral {:.2} turns", spiral.turns));

    let sweep = parameter_sweep(&q, &SweepOptions::default(), &opts)?;
    ok &= sweep.sign_changes >= 1;
    parts.push(format!("sweep sign changes {}", sweep.sign_changes));

    let sopts = ShootOptions::default();
    let nopts = NewtonOptions { tol: 1e-11, ..NewtonOptions::default() };
    let a = ShnfParamsByEq::alpha_tilde();
    let start = solve_homoclinic(&a, AngleParam::raw(alpha_angle(&sopts)?), &nopts, &sopts)?;
    let path = epsilon_path(&start, &[0.009, 0.008, 0.007], &nopts, &sopts);
    let drift = path
        .points
        .iter()
        .map(|p| (p.nu / p.eps - path.nu_bar).abs() / path.nu_bar.abs())
        .fold(0.0, f64::max);
    ok &= path.points.len() >= 3 && drift <= 1e-12;
    parts.push(format!("eps path {} steps, nu/eps drift {drift:.1e}", path.points.len()));
    Ok((ok, parts.join(", ")))
}

fn main() {
    let results = [
        report(1, "saddle-focus spectrum", eigenvalues),
        report(2, "folded node", folded_node),
        report(3, "jump map", jumps),
        report(4, "coordinate transforms", transforms),
        report(5, "toy flow exit", toy_flow),
        report(6, "shooting grid and newton", shooting),
        report(7, "continuation to the koper surface", continuation),
        report(8, "return-map fixed points", return_map),
        report(9, "jacobian structure", jacobians),
        report(10, "property suites", properties),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} criteria pass", results.len());
}
