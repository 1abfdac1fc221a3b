//! Homoclinic orbits by shooting: the residual between the stable and
//! unstable manifolds on `z = 0`, Newton solving in `(a, b)`, pseudo-arclength
//! continuation in `(a, b, c)`, the crossing with the Koper constraint and
//! the `eps -> 0` path.

use crate::error::{ForgeError, Leg, Result};
use crate::integrator::{EventSpec, Termination, Tolerances};
use crate::manifolds::{
    first_stable_branch, unstable_trajectory, AngleParam, ManifoldOptions, Model, StableBranch,
};
use crate::models::{shnf_to_koper_params, KoperParams, ShnfParams, ShnfParamsByEq};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug)]
pub struct ShootOptions {
    pub manifold: ManifoldOptions,
    pub fd_step: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            manifold: ManifoldOptions {
                tol: Tolerances::new(1e-12, 1e-14),
                t_max: 100.0,
                ..ManifoldOptions::default()
            },
            fd_step: 1e-6,
        }
    }
}

impl ShootOptions {
    pub fn with_r0(mut self, r0: f64) -> Self {
        self.manifold.r0 = r0;
        self
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootResidual {
    /// `s_point - u_point` in `(x, y)`.
    pub psi: [f64; 2],
    pub s_point: [f64; 3],
    pub u_point: [f64; 3],
    pub branch: StableBranch,
    pub t_s: f64,
    pub t_u: f64,
    /// Largest `y` reached by the unstable leg before `u_point`.
    pub u_height: f64,
}

impl ShootResidual {
    pub fn norm(&self) -> f64 {
        self.psi[0].hypot(self.psi[1])
    }
}

fn leg(leg: Leg, e: ForgeError) -> ForgeError {
    ForgeError::Shooting {
        leg,
        source: Box::new(e),
    }
}

/// Shooting residual for a model: the first backward crossing of `z = 0` by
/// the stable manifold against the first forward crossing with decreasing
/// `z` by the unstable trajectory at angle `theta`.
pub fn residual_for(m: &Model, theta: AngleParam, opts: &ShootOptions) -> Result<ShootResidual> {
    let (branch, s_point, t_s) =
        first_stable_branch(m, &opts.manifold).map_err(|e| leg(Leg::Stable, e))?;
    let ev = EventSpec::plane(2, 0.0).falling().terminal();
    let tr = unstable_trajectory(m, theta, &opts.manifold, std::slice::from_ref(&ev))
        .checked()
        .map_err(|e| leg(Leg::Unstable, e))?;
    if !matches!(tr.termination, Termination::Event { .. }) {
        return Err(leg(Leg::Unstable, ForgeError::NoCrossing { t: tr.last_time() }));
    }
    let u_point = tr.last_state();
    let u_height = tr.y.iter().map(|s| s[1]).fold(f64::NEG_INFINITY, f64::max);
    Ok(ShootResidual {
        psi: [s_point[0] - u_point[0], s_point[1] - u_point[1]],
        s_point,
        u_point,
        branch,
        t_s,
        t_u: tr.last_time(),
        u_height,
    })
}

/// Shooting residual at parameters given through the equilibrium position.
pub fn shooting_residual(
    q: &ShnfParamsByEq,
    theta: AngleParam,
    opts: &ShootOptions,
) -> Result<ShootResidual> {
    residual_for(&Model::from_eq(q)?, theta, opts)
}

/// Raw unstable-manifold angle whose trajectory comes closest to the stable
/// manifold on `z = 0`: a scan over `[0, 2 pi)` followed by golden-section
/// refinement of `|psi|` around the best sample.
pub fn homoclinic_angle(m: &Model, scan: usize, opts: &ShootOptions) -> Result<(f64, ShootResidual)> {
    use std::f64::consts::TAU;
    let n = scan.max(8);
    let norms: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            residual_for(m, AngleParam::raw(TAU * i as f64 / n as f64), opts)
                .ok()
                .map(|r| r.norm())
        })
        .collect();
    let (best, _) = norms
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| ForgeError::NoBracket("no unstable trajectory reaches z = 0".into()))?;
    let f = |t: f64| {
        residual_for(m, AngleParam::raw(t), opts)
            .map(|r| r.norm())
            .unwrap_or(f64::INFINITY)
    };
    let step = TAU / n as f64;
    let (mut lo, mut hi) = ((best as f64 - 1.0) * step, (best as f64 + 1.0) * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-14 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let theta = (0.5 * (lo + hi)).rem_euclid(TAU);
    Ok((theta, residual_for(m, AngleParam::raw(theta), opts)?))
}

/// Central-difference Jacobian of `f` at `x`, one column per coordinate.
pub fn fd_jacobian<F>(f: F, x: &[f64], steps: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if steps.len() != x.len() {
        return Err(ForgeError::InvalidArgument(
            "one step per coordinate is required".into(),
        ));
    }
    let cols: Vec<Result<Vec<f64>>> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            let h = steps[j];
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let wrap = |e| ForgeError::Column {
                column: j,
                source: Box::new(e),
            };
            let fp = f(&xp).map_err(wrap)?;
            let fm = f(&xm).map_err(wrap)?;
            // The representable spacing, not 2h, so rounding in x +- h cancels.
            let d = xp[j] - xm[j];
            Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / d).collect())
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<Vec<f64>>>>()?;
    let rows = cols.first().map_or(0, Vec::len);
    Ok((0..rows)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 25,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomoclinicSolution {
    pub params: ShnfParams,
    pub x_eq: f64,
    pub theta: AngleParam,
    pub residual: ShootResidual,
    pub iterations: usize,
    /// Residual norm per iterate, starting guess first.
    pub history: Vec<f64>,
    /// Residual norm with half the eigenvector offset.
    pub richardson: Option<f64>,
}

/// Damped Newton in `(a, b)` for a residual `psi(a, b)`.
fn newton_ab<F>(f: F, ab0: [f64; 2], h: f64, nopts: &NewtonOptions) -> Result<([f64; 2], Vec<f64>)>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]> + Sync,
{
    let mut ab = ab0;
    let mut r = f(ab)?;
    let mut norm = r[0].hypot(r[1]);
    let mut history = vec![norm];
    for _ in 0..nopts.max_iter {
        if norm <= nopts.tol {
            return Ok((ab, history));
        }
        let j = fd_jacobian(|x| f([x[0], x[1]]).map(|v| v.to_vec()), &ab, &[h, h])?;
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(ForgeError::RankDeficient);
        }
        let step = [
            (j[1][1] * r[0] - j[0][1] * r[1]) / det,
            (-j[1][0] * r[0] + j[0][0] * r[1]) / det,
        ];
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 64.0 {
            let trial = [ab[0] - lambda * step[0], ab[1] - lambda * step[1]];
            if let Ok(rt) = f(trial) {
                let nt = rt[0].hypot(rt[1]);
                if nt < norm {
                    ab = trial;
                    r = rt;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        history.push(norm);
        if !accepted {
            break;
        }
    }
    if norm <= nopts.tol {
        Ok((ab, history))
    } else {
        Err(ForgeError::NoConvergence {
            iterations: history.len() - 1,
            residual: norm,
        })
    }
}

/// Refines `(a, b)` so that the shooting residual vanishes, with
/// `eps`, `x_eq`, `c` and `theta` frozen.
pub fn solve_homoclinic(
    q0: &ShnfParamsByEq,
    theta: AngleParam,
    nopts: &NewtonOptions,
    opts: &ShootOptions,
) -> Result<HomoclinicSolution> {
    let f = |ab: [f64; 2]| -> Result<[f64; 2]> {
        shooting_residual(&q0.with_abc(ab[0], ab[1], q0.c), theta, opts).map(|r| r.psi)
    };
    let (ab, history) = newton_ab(f, [q0.a, q0.b], opts.fd_step, nopts)?;
    let q = q0.with_abc(ab[0], ab[1], q0.c);
    finish(Model::from_eq(&q)?, q.x_eq, theta, history, opts)
}

fn finish(
    m: Model,
    x_eq: f64,
    theta: AngleParam,
    history: Vec<f64>,
    opts: &ShootOptions,
) -> Result<HomoclinicSolution> {
    let residual = residual_for(&m, theta, opts)?;
    let half = opts.with_r0(0.5 * opts.manifold.r0);
    let richardson = residual_for(&m, theta, &half).ok().map(|r| r.norm());
    Ok(HomoclinicSolution {
        params: m.params,
        x_eq,
        theta,
        residual,
        iterations: history.len() - 1,
        history,
        richardson,
    })
}

/// Residuals on an `n x n` grid of `(a, b)` around `q` with half-width `half`.
pub fn residual_grid(
    q: &ShnfParamsByEq,
    theta: AngleParam,
    half: f64,
    n: usize,
    opts: &ShootOptions,
) -> Result<Vec<([f64; 2], [f64; 2])>> {
    let n = n.max(2);
    let pts: Vec<[f64; 2]> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let s = |t: usize| -half + 2.0 * half * t as f64 / (n - 1) as f64;
            [q.a + s(i), q.b + s(j)]
        })
        .collect();
    pts.par_iter()
        .map(|ab| {
            shooting_residual(&q.with_abc(ab[0], ab[1], q.c), theta, opts).map(|r| (*ab, r.psi))
        })
        .collect()
}

/// Convex hull by monotone chain, counter-clockwise.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0
            {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Whether `target` lies strictly inside the convex hull of `points`.
pub fn hull_contains(points: &[[f64; 2]], target: [f64; 2]) -> bool {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b[0] - a[0]) * (target[1] - a[1]) - (b[1] - a[1]) * (target[0] - a[0]) > 0.0
    })
}

/// Best affine fit `psi ~ c + M (ab - ab_mean)` over grid samples.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AffineFit {
    pub offset: [f64; 2],
    pub matrix: [[f64; 2]; 2],
    pub max_residual: f64,
    pub image_diameter: f64,
    /// Zero of the fitted map in `(a, b)`.
    pub root: Option<[f64; 2]>,
}

pub fn affine_fit(samples: &[([f64; 2], [f64; 2])]) -> Result<AffineFit> {
    if samples.len() < 3 {
        return Err(ForgeError::RankDeficient);
    }
    let k = samples.len() as f64;
    let ma = samples.iter().map(|s| s.0[0]).sum::<f64>() / k;
    let mb = samples.iter().map(|s| s.0[1]).sum::<f64>() / k;
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for (ab, _) in samples {
        let (da, db) = (ab[0] - ma, ab[1] - mb);
        saa += da * da;
        sab += da * db;
        sbb += db * db;
    }
    let det = saa * sbb - sab * sab;
    if det <= 1e-14 * saa * sbb || det == 0.0 {
        return Err(ForgeError::RankDeficient);
    }
    let mut offset = [0.0; 2];
    let mut matrix = [[0.0; 2]; 2];
    for i in 0..2 {
        let mean = samples.iter().map(|s| s.1[i]).sum::<f64>() / k;
        let (mut sa, mut sb) = (0.0, 0.0);
        for (ab, psi) in samples {
            sa += (ab[0] - ma) * (psi[i] - mean);
            sb += (ab[1] - mb) * (psi[i] - mean);
        }
        offset[i] = mean;
        matrix[i] = [(sbb * sa - sab * sb) / det, (saa * sb - sab * sa) / det];
    }
    let predict = |ab: [f64; 2], i: usize| {
        offset[i] + matrix[i][0] * (ab[0] - ma) + matrix[i][1] * (ab[1] - mb)
    };
    let max_residual = samples
        .iter()
        .map(|(ab, psi)| (psi[0] - predict(*ab, 0)).hypot(psi[1] - predict(*ab, 1)))
        .fold(0.0, f64::max);
    let mut image_diameter: f64 = 0.0;
    for (_, p) in samples {
        for (_, q) in samples {
            image_diameter = image_diameter.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    let mdet = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0];
    let root = (mdet != 0.0).then(|| {
        let da = -(matrix[1][1] * offset[0] - matrix[0][1] * offset[1]) / mdet;
        let db = -(-matrix[1][0] * offset[0] + matrix[0][0] * offset[1]) / mdet;
        [ma + da, mb + db]
    });
    Ok(AffineFit {
        offset,
        matrix,
        max_residual,
        image_diameter,
        root,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ContinuationOptions {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Corrector stopping tolerance on both the update and the residual.
    pub delta: f64,
    pub max_corr: usize,
    pub max_steps: usize,
    /// Initial direction: `+1` moves toward increasing `c`.
    pub direction: f64,
    /// Stop once `g = 2b + a(a + c)` changes sign.
    pub stop_on_koper: bool,
    /// Stop once `c` passes this value.
    pub c_limit: Option<f64>,
    pub max_cond: f64,
    /// Successes in a row needed before the step grows.
    pub easy_runs: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            h0: 1e-3,
            h_min: 1e-6,
            h_max: 1e-2,
            delta: 1e-7,
            max_corr: 20,
            max_steps: 5000,
            direction: 1.0,
            stop_on_koper: true,
            c_limit: None,
            max_cond: 1e10,
            easy_runs: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub abc: [f64; 3],
    pub tangent: [f64; 3],
    pub psi_norm: f64,
    pub step: f64,
    pub g: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuationCurve {
    pub eps: f64,
    pub x_eq: f64,
    pub theta: AngleParam,
    pub points: Vec<CurvePoint>,
}

impl ContinuationCurve {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["j", "a", "b", "c", "psi_norm", "g"])?;
        for (j, p) in self.points.iter().enumerate() {
            wr.write_record(&[
                j.to_string(),
                format!("{:.12e}", p.abc[0]),
                format!("{:.12e}", p.abc[1]),
                format!("{:.12e}", p.abc[2]),
                format!("{:.6e}", p.psi_norm),
                format!("{:.12e}", p.g),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    fn params(&self, abc: [f64; 3]) -> ShnfParamsByEq {
        ShnfParamsByEq {
            eps: self.eps,
            x_eq: self.x_eq,
            a: abc[0],
            b: abc[1],
            c: abc[2],
        }
    }
}

pub fn g_of(abc: [f64; 3]) -> f64 {
    2.0 * abc[1] + abc[0] * (abc[0] + abc[2])
}

fn cross(u: [f64; 3], v: [f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

struct Linearization {
    j: [[f64; 3]; 2],
    /// `(J J^T)^{-1}`.
    inv: [[f64; 2]; 2],
    cond: f64,
}

fn linearize(j: [[f64; 3]; 2]) -> Option<Linearization> {
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let (p, q, r) = (dot(j[0], j[0]), dot(j[0], j[1]), dot(j[1], j[1]));
    let det = p * r - q * q;
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    let tr = p + r;
    let disc = ((p - r).powi(2) + 4.0 * q * q).sqrt();
    let (l1, l2) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    let cond = if l2 > 0.0 { l1 / l2 } else { f64::INFINITY };
    Some(Linearization {
        j,
        inv: [[r / det, -q / det], [-q / det, p / det]],
        cond,
    })
}

impl Linearization {
    /// `J^+ v = J^T (J J^T)^{-1} v`.
    fn pinv_apply(&self, v: [f64; 2]) -> [f64; 3] {
        let w = [
            self.inv[0][0] * v[0] + self.inv[0][1] * v[1],
            self.inv[1][0] * v[0] + self.inv[1][1] * v[1],
        ];
        [0, 1, 2].map(|k| self.j[0][k] * w[0] + self.j[1][k] * w[1])
    }

    fn null(&self) -> [f64; 3] {
        let t = cross(self.j[0], self.j[1]);
        let n = norm3(t);
        t.map(|v| v / n)
    }
}

fn jac3(
    curve: &ContinuationCurve,
    abc: [f64; 3],
    opts: &ShootOptions,
) -> Result<[[f64; 3]; 2]> {
    let h = opts.fd_step;
    let j = fd_jacobian(
        |x| {
            shooting_residual(&curve.params([x[0], x[1], x[2]]), curve.theta, opts)
                .map(|r| r.psi.to_vec())
        },
        &abc,
        &[h, h, h],
    )?;
    Ok([
        [j[0][0], j[0][1], j[0][2]],
        [j[1][0], j[1][1], j[1][2]],
    ])
}

/// Pseudo-arclength continuation of the homoclinic curve in `(a, b, c)` at
/// fixed `eps`, `x_eq` and `theta`. Returns the partial curve inside a
/// stall error when the step underflows.
pub fn continue_curve(
    start: &ShnfParamsByEq,
    theta: AngleParam,
    copts: &ContinuationOptions,
    opts: &ShootOptions,
) -> std::result::Result<ContinuationCurve, (ContinuationCurve, ForgeError)> {
    let mut curve = ContinuationCurve {
        eps: start.eps,
        x_eq: start.x_eq,
        theta,
        points: Vec::new(),
    };
    let mut x = start.abc();
    let r0 = match shooting_residual(start, theta, opts) {
        Ok(r) => r,
        Err(e) => return Err((curve, e)),
    };
    if r0.norm() > copts.delta {
        return Err((
            curve,
            ForgeError::InvalidArgument(format!(
                "start residual {:.3e} exceeds {:.1e}",
                r0.norm(),
                copts.delta
            )),
        ));
    }
    let lin = match jac3(&curve, x, opts).map(linearize) {
        Ok(Some(l)) => l,
        Ok(None) => return Err((curve, ForgeError::RankDeficient)),
        Err(e) => return Err((curve, e)),
    };
    let mut t = lin.null();
    if t[2] * copts.direction < 0.0 {
        t = t.map(|v| -v);
    }
    curve.points.push(CurvePoint {
        abc: x,
        tangent: t,
        psi_norm: r0.norm(),
        step: 0.0,
        g: g_of(x),
    });
    let mut h = copts.h0.clamp(copts.h_min, copts.h_max);
    let mut easy = 0usize;
    for _ in 0..copts.max_steps {
        match corrector(&curve, x, t, h, copts, opts) {
            Some((xn, psi_norm, iters)) => {
                let tn = match jac3(&curve, xn, opts).map(linearize) {
                    Ok(Some(l)) if l.cond <= copts.max_cond => {
                        let mut v = l.null();
                        if v[0] * t[0] + v[1] * t[1] + v[2] * t[2] < 0.0 {
                            v = v.map(|c| -c);
                        }
                        v
                    }
                    _ => {
                        h *= 0.5;
                        easy = 0;
                        if h < copts.h_min {
                            let n = curve.points.len();
                            return Err((curve, ForgeError::Stalled { h, accepted: n }));
                        }
                        continue;
                    }
                };
                let g_prev = g_of(x);
                x = xn;
                t = tn;
                let g = g_of(x);
                curve.points.push(CurvePoint {
                    abc: x,
                    tangent: t,
                    psi_norm,
                    step: h,
                    g,
                });
                if copts.stop_on_koper && g_prev.signum() != g.signum() {
                    return Ok(curve);
                }
                if let Some(cl) = copts.c_limit {
                    if (x[2] - cl) * copts.direction >= 0.0 {
                        return Ok(curve);
                    }
                }
                if iters <= 3 {
                    easy += 1;
                    if easy >= copts.easy_runs {
                        h = (2.0 * h).min(copts.h_max);
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
            }
            None => {
                h *= 0.5;
                easy = 0;
                if h < copts.h_min {
                    let n = curve.points.len();
                    return Err((curve, ForgeError::Stalled { h, accepted: n }));
                }
            }
        }
    }
    Ok(curve)
}

/// Moore-Penrose corrector from the predictor `x + h t`.
fn corrector(
    curve: &ContinuationCurve,
    x: [f64; 3],
    t: [f64; 3],
    h: f64,
    copts: &ContinuationOptions,
    opts: &ShootOptions,
) -> Option<([f64; 3], f64, usize)> {
    let eval = |w: [f64; 3]| {
        shooting_residual(&curve.params(w), curve.theta, opts)
            .ok()
            .map(|r| (r.psi, r.norm()))
    };
    let mut w = [0, 1, 2].map(|k| x[k] + h * t[k]);
    let (mut psi, mut norm) = eval(w)?;
    for k in 0..copts.max_corr {
        let lin = linearize(jac3(curve, w, opts).ok()?)?;
        if lin.cond > copts.max_cond {
            return None;
        }
        let d = lin.pinv_apply(psi);
        let wn = [0, 1, 2].map(|i| w[i] - d[i]);
        let (psin, normn) = eval(wn)?;
        if k == 0 && normn >= norm {
            return None;
        }
        let moved = norm3(d);
        w = wn;
        psi = psin;
        norm = normn;
        if moved < copts.delta && norm <= copts.delta {
            return Some((w, norm, k + 1));
        }
    }
    None
}

#[derive(Clone, Debug, Serialize)]
pub struct KoperCrossing {
    pub solution: HomoclinicSolution,
    pub abc: [f64; 3],
    pub g: f64,
    pub koper: KoperParams,
    pub iterations: usize,
    /// Finite-difference slope of `g` along the curve at the crossing.
    pub slope: f64,
}

/// Locates where the continued curve meets `g = 0` by a secant iteration in
/// `c`, re-solving `(a, b)` at each trial value.
pub fn koper_intersection(
    curve: &ContinuationCurve,
    nopts: &NewtonOptions,
    opts: &ShootOptions,
    g_tol: f64,
) -> Result<KoperCrossing> {
    let pts = &curve.points;
    let first = pts
        .first()
        .ok_or_else(|| ForgeError::NoBracket("empty curve".into()))?;
    let solve_at = |abc: [f64; 3]| -> Result<HomoclinicSolution> {
        solve_homoclinic(&curve.params(abc), curve.theta, nopts, opts)
    };
    let package = |sol: HomoclinicSolution, iterations: usize, slope: f64| -> Result<KoperCrossing> {
        let abc = [sol.params.a, sol.params.b, sol.params.c];
        let koper = shnf_to_koper_params(&sol.params)?;
        Ok(KoperCrossing {
            g: g_of(abc),
            abc,
            koper,
            solution: sol,
            iterations,
            slope,
        })
    };
    if first.g.abs() <= g_tol {
        let sol = solve_at(first.abc)?;
        return package(sol, 0, f64::NAN);
    }
    let k = pts
        .windows(2)
        .position(|w| w[0].g.signum() != w[1].g.signum())
        .ok_or_else(|| ForgeError::NoBracket("g keeps one sign along the curve".into()))?;
    let (p0, p1) = (&pts[k], &pts[k + 1]);
    let ds = norm3([0, 1, 2].map(|i| p1.abc[i] - p0.abc[i]));
    let slope = (p1.g - p0.g) / ds;
    // Interpolate a warm start linearly in c between the bracket points.
    let guess = |c: f64| {
        let s = ((c - p0.abc[2]) / (p1.abc[2] - p0.abc[2])).clamp(-1.0, 2.0);
        [0, 1, 2].map(|i| p0.abc[i] + s * (p1.abc[i] - p0.abc[i]))
    };
    let mut lo = (p0.abc[2], p0.g);
    let mut hi = (p1.abc[2], p1.g);
    let mut best: Option<HomoclinicSolution> = None;
    let mut last_side = 0i8;
    for it in 1..=60 {
        // Regula falsi with the Illinois modification.
        let c = (lo.0 * hi.1 - hi.0 * lo.1) / (hi.1 - lo.1);
        let sol = solve_at(guess(c))?;
        let g = g_of([sol.params.a, sol.params.b, sol.params.c]);
        if g.abs() <= g_tol {
            return package(sol, it, slope);
        }
        if g.signum() == lo.1.signum() {
            lo = (c, g);
            if last_side == -1 {
                hi.1 *= 0.5;
            }
            last_side = -1;
        } else {
            hi = (c, g);
            if last_side == 1 {
                lo.1 *= 0.5;
            }
            last_side = 1;
        }
        best = Some(sol);
        if (hi.0 - lo.0).abs() <= 1e-15 * hi.0.abs().max(1.0) {
            break;
        }
    }
    let residual = best.map_or(f64::NAN, |s| g_of([s.params.a, s.params.b, s.params.c]));
    Err(ForgeError::NoConvergence {
        iterations: 60,
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsPathPoint {
    pub eps: f64,
    pub nu: f64,
    pub nu_bar: f64,
    pub x_eq: f64,
    pub solution: HomoclinicSolution,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsPath {
    pub nu_bar: f64,
    pub points: Vec<EpsPathPoint>,
    /// First schedule value that failed, with the reason.
    pub failure: Option<(f64, String)>,
}

/// Re-solves the homoclinic along a schedule of `eps` with `nu = eps * nu_bar`
/// held on the ray through the start. `c` and `theta` stay frozen; the
/// equilibrium moves with the parameters.
pub fn epsilon_path(
    start: &HomoclinicSolution,
    schedule: &[f64],
    nopts: &NewtonOptions,
    opts: &ShootOptions,
) -> EpsPath {
    let nu_bar = start.params.nu / start.params.eps;
    let mut path = EpsPath {
        nu_bar,
        points: Vec::new(),
        failure: None,
    };
    let mut prev = start.params;
    let mut x_center = start.x_eq;
    for &eps in schedule {
        let nu = eps * nu_bar;
        let attempt = (|| -> Result<EpsPathPoint> {
            let make = |ab: [f64; 2]| ShnfParams::new(eps, nu, ab[0], ab[1], prev.c);
            let center = x_center;
            let f = |ab: [f64; 2]| -> Result<[f64; 2]> {
                let m = Model::new(make(ab)?, center)?;
                residual_for(&m, start.theta, opts).map(|r| r.psi)
            };
            let (ab, history) = newton_ab(f, [prev.a, prev.b], opts.fd_step, nopts)?;
            let m = Model::new(make(ab)?, center)?;
            let x_eq = m.saddle.point[0];
            let solution = finish(m, x_eq, start.theta, history, opts)?;
            Ok(EpsPathPoint {
                eps,
                nu,
                nu_bar,
                x_eq,
                solution,
            })
        })();
        match attempt {
            Ok(p) => {
                prev = p.solution.params;
                x_center = p.x_eq;
                path.points.push(p);
            }
            Err(e) => {
                path.failure = Some((eps, e.to_string()));
                break;
            }
        }
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_identity_and_quadratic() {
        let j = fd_jacobian(|x| Ok(x.to_vec()), &[0.3, -2.0], &[1e-6, 1e-6]).unwrap();
        assert_eq!(j, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let j = fd_jacobian(|x| Ok(vec![x[0] * x[0], x[0] * x[1]]), &[1.0, 2.0], &[1e-6, 1e-6])
            .unwrap();
        let want = [[2.0, 0.0], [2.0, 1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[i][k] - want[i][k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fd_error_names_column() {
        let err = fd_jacobian(
            |x| {
                if x[1] > 1.0 {
                    Err(ForgeError::RankDeficient)
                } else {
                    Ok(x.to_vec())
                }
            },
            &[0.0, 1.0],
            &[0.1, 0.1],
        )
        .unwrap_err();
        assert!(matches!(err, ForgeError::Column { column: 1, .. }));
    }

    #[test]
    fn hull_of_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        assert_eq!(convex_hull(&sq).len(), 4);
        assert!(hull_contains(&sq, [0.5, 0.2]));
        assert!(!hull_contains(&sq, [1.5, 0.2]));
        assert!(!hull_contains(&sq, [1.0, 0.5]));
    }

    #[test]
    fn affine_fit_exact() {
        let mut s = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                let ab = [i as f64, j as f64];
                s.push((ab, [1.0 + 2.0 * ab[0] - ab[1], -0.5 + ab[0] + 3.0 * ab[1]]));
            }
        }
        let f = affine_fit(&s).unwrap();
        assert!(f.max_residual < 1e-12);
        let r = f.root.unwrap();
        assert!((1.0 + 2.0 * r[0] - r[1]).abs() < 1e-12);
        assert!((-0.5 + r[0] + 3.0 * r[1]).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_is_right_inverse() {
        let lin = linearize([[1.0, 2.0, 0.5], [-0.3, 0.7, 2.0]]).unwrap();
        let v = [0.4, -1.1];
        let x = lin.pinv_apply(v);
        for i in 0..2 {
            let jx: f64 = (0..3).map(|k| lin.j[i][k] * x[k]).sum();
            assert!((jx - v[i]).abs() < 1e-14);
        }
        let n = lin.null();
        for i in 0..2 {
            let jn: f64 = (0..3).map(|k| lin.j[i][k] * n[k]).sum();
            assert!(jn.abs() < 1e-14);
        }
    }
}
