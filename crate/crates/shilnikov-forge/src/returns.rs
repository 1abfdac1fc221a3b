//! Return maps near the homoclinic orbit: the one-dimensional return map on
//! a strip of `z = 0`, the local map past the saddle-focus, the global map
//! Jacobian and their composition.

use crate::error::{ForgeError, Result};
use crate::integrator::{integrate, EventSpec, IntegrateOptions, Termination};
use crate::manifolds::{
    first_stable_branch, repelling_x, sheet_trace_near, unstable_trajectory, AngleParam,
    ManifoldOptions, Model, SweepOptions,
};
use crate::spectral::EigenData;
use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// A segment `I` of `z = 0` through `center` along `direction`, parameterized by `x`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Strip {
    pub center: [f64; 2],
    pub direction: [f64; 2],
    pub half_width: f64,
}

impl Strip {
    /// Point of the strip with first coordinate `x`.
    pub fn point(&self, x: f64) -> [f64; 3] {
        let slope = self.direction[1] / self.direction[0];
        [x, self.center[1] + slope * (x - self.center[0]), 0.0]
    }

    /// Distance of `(x, y)` from the strip line.
    pub fn offset(&self, q: [f64; 2]) -> f64 {
        let (dx, dy) = (q[0] - self.center[0], q[1] - self.center[1]);
        (dx * self.direction[1] - dy * self.direction[0]).abs()
    }
}

/// Strip through the first stable-manifold crossing, tangent to the trace of
/// the upper attracting sheet there.
pub fn strip_at_stable_point(m: &Model, half_width: f64, opts: &ManifoldOptions) -> Result<Strip> {
    let (_, s, _) = first_stable_branch(m, opts)?;
    let (_, trace) = sheet_trace_near(m, [s[0], s[1]], &SweepOptions::default(), opts)?;
    let (a, b) = match (trace.points.first(), trace.points.last()) {
        (Some(a), Some(b)) if trace.points.len() >= 2 => (*a, *b),
        _ => return Err(ForgeError::Degenerate("sheet trace too short".into())),
    };
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let n = dx.hypot(dy);
    if n == 0.0 || dx == 0.0 {
        return Err(ForgeError::Degenerate("sheet trace has no x extent".into()));
    }
    let sgn = dx.signum();
    Ok(Strip {
        center: [s[0], s[1]],
        direction: [sgn * dx / n, sgn * dy / n],
        half_width,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReturnSample {
    pub x_in: f64,
    pub x_out: f64,
    pub y_out: f64,
    pub time: f64,
    /// Small oscillations near the equilibrium before leaving it.
    pub turns: u32,
    /// Whether the orbit follows the repelling sheet above `CANARD_HEIGHT`.
    pub canard: bool,
    pub returned: bool,
}

/// Height above which a visit to the repelling sheet counts as a canard segment.
pub const CANARD_HEIGHT: f64 = 0.01;
/// Tube around the repelling sheet for the canard flag.
const CANARD_TUBE: f64 = 0.01;
/// Radius around the equilibrium within which turns are counted.
const LOCAL_RADIUS: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub struct ReturnOptions {
    pub half_width: f64,
    /// Smallest distance from the strip centre that is sampled.
    pub min_offset: f64,
    pub samples_per_side: usize,
    /// Largest distance from the strip line for a return to count.
    pub capture: f64,
    pub closure_tol: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        Self {
            half_width: 1e-6,
            min_offset: 1e-10,
            samples_per_side: 400,
            capture: 1e-4,
            closure_tol: 1e-6,
        }
    }
}

/// Sign changes of `y'` over the states within `radius` of the equilibrium.
fn sign_changes(m: &Model, states: &[[f64; 3]], radius: f64) -> u32 {
    let p = m.saddle.point;
    let mut changes = 0u32;
    let mut last: Option<f64> = None;
    for s in states {
        let r = ((s[0] - p[0]).powi(2) + (s[1] - p[1]).powi(2) + (s[2] - p[2]).powi(2)).sqrt();
        if r > radius {
            continue;
        }
        let y = m.saddle.to_jordan(s)[1];
        if let Some(l) = last {
            if l != 0.0 && y != 0.0 && l.signum() != y.signum() {
                changes += 1;
            }
        }
        last = Some(y);
    }
    changes
}

/// Turns near the equilibrium: half the sign changes of `y'` there.
pub fn count_turns(m: &Model, states: &[[f64; 3]]) -> u32 {
    sign_changes(m, states, LOCAL_RADIUS) / 2
}

fn has_canard(states: &[[f64; 3]]) -> bool {
    states
        .iter()
        .any(|s| s[1] > CANARD_HEIGHT && (s[0] - repelling_x(s[1])).abs() < CANARD_TUBE)
}

/// Follows the strip point at `x` to its next crossing of `z = 0` with decreasing `z`.
pub fn return_sample(
    m: &Model,
    strip: &Strip,
    x: f64,
    ropts: &ReturnOptions,
    opts: &ManifoldOptions,
) -> ReturnSample {
    let start = strip.point(x);
    let ev = EventSpec::plane(2, 0.0).falling().terminal();
    let io = IntegrateOptions::forward(opts.t_max)
        .tol(opts.tol)
        .bound(opts.bound)
        .max_step(0.02);
    let tr = integrate(&m.params, 0.0, start, &io, std::slice::from_ref(&ev));
    let end = tr.last_state();
    let returned = matches!(tr.termination, Termination::Event { .. })
        && strip.offset([end[0], end[1]]) <= ropts.capture;
    ReturnSample {
        x_in: x,
        x_out: end[0],
        y_out: end[1],
        time: tr.last_time(),
        turns: count_turns(m, &tr.y),
        canard: has_canard(&tr.y),
        returned,
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    /// Distance between the start and its return in `(x, y)`.
    pub closure: f64,
    pub period: f64,
    pub turns: u32,
    pub canard: bool,
    pub validated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReturnMap {
    pub strip: Strip,
    pub samples: Vec<ReturnSample>,
    pub fixed_points: Vec<FixedPoint>,
}

impl ReturnMap {
    pub fn validated(&self) -> impl Iterator<Item = &FixedPoint> {
        self.fixed_points.iter().filter(|f| f.validated)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "R(x)", "time", "turns", "canard_flag"])?;
        for s in self.samples.iter().filter(|s| s.returned) {
            wr.write_record(&[
                format!("{:.15e}", s.x_in),
                format!("{:.15e}", s.x_out),
                format!("{:.9}", s.time),
                s.turns.to_string(),
                (s.canard as u8).to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Sample abscissae: log-spaced distances from the centre on both sides.
pub fn strip_abscissae(strip: &Strip, ropts: &ReturnOptions) -> Vec<f64> {
    let n = ropts.samples_per_side.max(2);
    let (l0, l1) = (ropts.min_offset.ln(), ropts.half_width.ln());
    let mut xs: Vec<f64> = (0..n)
        .flat_map(|i| {
            let d = (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp();
            [strip.center[0] - d, strip.center[0] + d]
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Zeros of `f` bracketed by sign changes between consecutive samples,
/// refined by the Illinois method.
pub fn bracketed_roots<F>(xs: &[f64], fs: &[Option<f64>], f: F, xtol: f64) -> Vec<f64>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let brackets: Vec<(f64, f64, f64, f64)> = xs
        .windows(2)
        .zip(fs.windows(2))
        .filter_map(|(x, v)| match (v[0], v[1]) {
            (Some(a), Some(_)) if a == 0.0 => Some((x[0], x[0], a, a)),
            (Some(a), Some(b)) if a.signum() != b.signum() && b != 0.0 => Some((x[0], x[1], a, b)),
            _ => None,
        })
        .collect();
    brackets
        .par_iter()
        .filter_map(|&(mut lo, mut hi, mut flo, mut fhi)| {
            if lo == hi {
                return Some(lo);
            }
            let mut side = 0i8;
            for _ in 0..200 {
                if (hi - lo).abs() <= xtol {
                    break;
                }
                let mut x = (lo * fhi - hi * flo) / (fhi - flo);
                if !(x > lo.min(hi) && x < lo.max(hi)) {
                    x = 0.5 * (lo + hi);
                }
                let fx = f(x)?;
                if fx == 0.0 {
                    return Some(x);
                }
                if fx.signum() == flo.signum() {
                    lo = x;
                    flo = fx;
                    if side == -1 {
                        fhi *= 0.5;
                    }
                    side = -1;
                } else {
                    hi = x;
                    fhi = fx;
                    if side == 1 {
                        flo *= 0.5;
                    }
                    side = 1;
                }
            }
            Some(if flo.abs() < fhi.abs() { lo } else { hi })
        })
        .collect()
}

/// Samples the one-dimensional return map on `strip` and locates its fixed
/// points. A fixed point is kept as validated only if the orbit from it
/// closes in the plane to within `closure_tol`.
pub fn return_map_1d(
    m: &Model,
    strip: Strip,
    ropts: &ReturnOptions,
    opts: &ManifoldOptions,
) -> ReturnMap {
    let xs = strip_abscissae(&strip, ropts);
    let samples: Vec<ReturnSample> = xs
        .par_iter()
        .map(|&x| return_sample(m, &strip, x, ropts, opts))
        .collect();
    let fs: Vec<Option<f64>> = samples
        .iter()
        .map(|s| s.returned.then_some(s.x_out - s.x_in))
        .collect();
    let f = |x: f64| {
        let s = return_sample(m, &strip, x, ropts, opts);
        s.returned.then_some(s.x_out - s.x_in)
    };
    let xtol = 1e-15 * strip.center[0].abs().max(1e-300);
    let roots = bracketed_roots(&xs, &fs, f, xtol);
    let mut fixed_points: Vec<FixedPoint> = roots
        .par_iter()
        .map(|&x| {
            let s = return_sample(m, &strip, x, ropts, opts);
            let start = strip.point(x);
            let closure = (s.x_out - start[0]).hypot(s.y_out - start[1]);
            FixedPoint {
                x,
                closure,
                period: s.time,
                turns: s.turns,
                canard: s.canard,
                validated: s.returned && closure <= ropts.closure_tol,
            }
        })
        .collect();
    fixed_points.sort_by(|a, b| a.x.total_cmp(&b.x));
    ReturnMap {
        strip,
        samples,
        fixed_points,
    }
}

/// Fixed points of a scalar map sampled on `xs`, for harness checks.
pub fn fixed_points_of<F>(g: F, xs: &[f64], xtol: f64) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let fs: Vec<Option<f64>> = xs.iter().map(|&x| Some(g(x) - x)).collect();
    bracketed_roots(xs, &fs, |x| Some(g(x) - x), xtol)
}

/// Section height and turn count for the local map.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LocalMapData {
    pub d: f64,
    pub m: u32,
}

/// Local map past the saddle-focus in Jordan coordinates,
/// `(x', y') -> (r e^{rho theta / omega}, d e^{-lambda theta / omega})` with
/// `theta = atan2(y', x') + 2 pi m`, and its Jacobian.
pub fn local_map(
    xp: f64,
    yp: f64,
    data: &LocalMapData,
    eig: &EigenData,
) -> Result<([f64; 2], Matrix2<f64>)> {
    if data.d <= 0.0 {
        return Err(ForgeError::InvalidArgument("section height must be positive".into()));
    }
    let r = xp.hypot(yp);
    if r == 0.0 {
        return Err(ForgeError::OnStableManifold);
    }
    let theta = yp.atan2(xp) + TAU * data.m as f64;
    let k = eig.rho / eig.omega;
    let q = -eig.lambda / eig.omega;
    let e1 = (k * theta).exp();
    let e2 = (q * theta).exp();
    let image = [r * e1, data.d * e2];
    let jac = Matrix2::new(
        e1 * (xp - k * yp) / r,
        e1 * (yp + k * xp) / r,
        -data.d * q * e2 * yp / (r * r),
        data.d * q * e2 * xp / (r * r),
    );
    Ok((image, jac))
}

/// Closed-form determinant of the local-map Jacobian.
pub fn local_map_det(r: f64, theta: f64, data: &LocalMapData, eig: &EigenData) -> f64 {
    let q = -eig.lambda / eig.omega;
    data.d * q * ((eig.rho - eig.lambda) * theta / eig.omega).exp() / r
}

/// Singular values of a 2x2 matrix, largest first.
pub fn singular_values_2x2(m: &Matrix2<f64>) -> [f64; 2] {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s = (a + d).hypot(c - b);
    let t = (a - d).hypot(b + c);
    [0.5 * (s + t), 0.5 * (s - t).abs()]
}

/// Central-difference Jacobian of a planar map.
pub fn planar_jacobian<F>(map: F, base: [f64; 2], step: f64) -> Result<Matrix2<f64>>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]> + Sync,
{
    let cols: Vec<Result<[f64; 2]>> = (0..2)
        .into_par_iter()
        .map(|j| {
            let mut p = base;
            let mut q = base;
            p[j] += step;
            q[j] -= step;
            let wrap = |e| ForgeError::Column {
                column: j,
                source: Box::new(e),
            };
            let fp = map(p).map_err(wrap)?;
            let fq = map(q).map_err(wrap)?;
            let h = p[j] - q[j];
            Ok([(fp[0] - fq[0]) / h, (fp[1] - fq[1]) / h])
        })
        .collect();
    let c0 = cols[0].as_ref().map_err(clone_err)?;
    let c1 = cols[1].as_ref().map_err(clone_err)?;
    Ok(Matrix2::new(c0[0], c1[0], c0[1], c1[1]))
}

fn clone_err(e: &ForgeError) -> ForgeError {
    ForgeError::Degenerate(e.to_string())
}

#[derive(Clone, Copy, Debug)]
pub struct GlobalMapOptions {
    /// Height of the entry section above the equilibrium along the stable direction.
    pub d: f64,
    /// Offset of the base point from the homoclinic intersection.
    pub perturbation: f64,
    pub step: f64,
}

impl Default for GlobalMapOptions {
    fn default() -> Self {
        Self {
            d: 1e-3,
            perturbation: 1e-10,
            step: 1e-9,
        }
    }
}

/// The rising crossing of `z = 0` by the unstable trajectory at `theta` that
/// precedes its first falling crossing: where the homoclinic orbit leaves
/// the twist region for the last time.
pub fn exit_point(m: &Model, theta: AngleParam, opts: &ManifoldOptions) -> Result<[f64; 3]> {
    let evs = [
        EventSpec::plane(2, 0.0).falling().terminal(),
        EventSpec::plane(2, 0.0).rising(),
    ];
    let tr = unstable_trajectory(m, theta, opts, &evs).checked()?;
    if !tr.stopped_on_event() {
        return Err(ForgeError::NoCrossing { t: tr.last_time() });
    }
    tr.events_of(1)
        .last()
        .map(|e| e.state)
        .ok_or_else(|| ForgeError::NoCrossing { t: tr.last_time() })
}

/// Signed height of the entry section, on the stable branch that reaches `z = 0`.
pub fn entry_height(m: &Model, d: f64, opts: &ManifoldOptions) -> Result<f64> {
    let (_, s, _) = first_stable_branch(m, opts)?;
    Ok(d * m.saddle.to_jordan(&s)[2].signum())
}

/// Global map from `z = 0` to the section `z' = d_signed` near the equilibrium,
/// both parameterized by the original `(x, y)`. Also returns the trajectory states.
pub fn global_map(
    m: &Model,
    q: [f64; 2],
    d_signed: f64,
    opts: &ManifoldOptions,
) -> Result<([f64; 2], Vec<[f64; 3]>)> {
    let sf = m.saddle;
    let ev = EventSpec::new(move |s: &[f64; 3]| sf.to_jordan(s)[2] - d_signed).terminal();
    let io = IntegrateOptions::forward(opts.t_max)
        .tol(opts.tol)
        .bound(opts.bound);
    let tr = integrate(&m.params, 0.0, [q[0], q[1], 0.0], &io, std::slice::from_ref(&ev)).checked()?;
    if !tr.stopped_on_event() {
        return Err(ForgeError::NoCrossing { t: tr.last_time() });
    }
    let e = tr.last_state();
    Ok(([e[0], e[1]], tr.y))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JacobianReport {
    pub base: [f64; 2],
    pub image: [f64; 2],
    pub matrix: [[f64; 2]; 2],
    pub singular_values: [f64; 2],
}

fn to_rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Jacobian of the global map at the homoclinic exit point shifted by the
/// configured perturbation in `x`.
pub fn global_jacobian(
    m: &Model,
    theta: AngleParam,
    gopts: &GlobalMapOptions,
    opts: &ManifoldOptions,
) -> Result<JacobianReport> {
    let p = exit_point(m, theta, opts)?;
    let base = [p[0] + gopts.perturbation, p[1]];
    let d_signed = entry_height(m, gopts.d, opts)?;
    let (image, _) = global_map(m, base, d_signed, opts)?;
    let jac = planar_jacobian(|q| global_map(m, q, d_signed, opts).map(|r| r.0), base, gopts.step)?;
    Ok(JacobianReport {
        base,
        image,
        matrix: to_rows(&jac),
        singular_values: singular_values_2x2(&jac),
    })
}

/// Jacobian and singular values of an arbitrary planar map, e.g. the identity.
pub fn map_jacobian<F>(map: F, base: [f64; 2], step: f64) -> Result<JacobianReport>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]> + Sync,
{
    let image = map(base)?;
    let jac = planar_jacobian(map, base, step)?;
    Ok(JacobianReport {
        base,
        image,
        matrix: to_rows(&jac),
        singular_values: singular_values_2x2(&jac),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComposedReport {
    pub matrix: [[f64; 2]; 2],
    /// Eigenvalue magnitudes, largest first.
    pub eigen_magnitudes: [f64; 2],
    /// `|lambda_2| / |lambda_1|`.
    pub rank_one: f64,
}

/// `D psi . D phi` and its eigenvalue magnitudes.
pub fn composed_jacobian(dphi: &Matrix2<f64>, dpsi: &Matrix2<f64>) -> ComposedReport {
    let m = dpsi * dphi;
    let tr = m.trace();
    let det = m.determinant();
    let disc = tr * tr - 4.0 * det;
    let mags = if disc >= 0.0 {
        let s = disc.sqrt();
        // Stable root pair: the larger by the sum, the smaller via the product.
        let big = 0.5 * (tr + tr.signum() * s);
        let small = if big != 0.0 { det / big } else { 0.5 * (tr - s) };
        [big.abs(), small.abs()]
    } else {
        let r = det.abs().sqrt();
        [r, r]
    };
    let (l1, l2) = if mags[0] >= mags[1] {
        (mags[0], mags[1])
    } else {
        (mags[1], mags[0])
    };
    ComposedReport {
        matrix: to_rows(&m),
        eigen_magnitudes: [l1, l2],
        rank_one: if l1 > 0.0 { l2 / l1 } else { 0.0 },
    }
}

/// Local-map Jacobian moved to the original coordinates: inputs are `(x, y)`
/// on the entry section `z' = d`, outputs `(x, y)` on the half-plane `y' = 0`.
pub fn local_jacobian_original(eig: &EigenData, jordan_jac: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let p = &eig.p;
    let m_in = Matrix2::new(p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
    let m_out = Matrix2::new(p[(0, 0)], p[(0, 2)], p[(1, 0)], p[(1, 2)]);
    let inv = m_in
        .try_inverse()
        .ok_or_else(|| ForgeError::SingularTransform("entry section chart".into()))?;
    Ok(m_out * jordan_jac * inv)
}

/// Full return-Jacobian report at a homoclinic parameter set.
#[derive(Clone, Debug, Serialize)]
pub struct ReturnJacobian {
    pub global: JacobianReport,
    pub local_data: LocalMapData,
    pub entry_jordan: [f64; 3],
    pub local: [[f64; 2]; 2],
    pub composed: ComposedReport,
}

/// Composes the global map Jacobian with the analytic local map at the
/// image of the perturbed exit point. The turn count comes from the orbit
/// continuing from that image back to the exit section.
pub fn return_jacobian(
    m: &Model,
    theta: AngleParam,
    gopts: &GlobalMapOptions,
    opts: &ManifoldOptions,
) -> Result<ReturnJacobian> {
    let global = global_jacobian(m, theta, gopts, opts)?;
    let d_signed = entry_height(m, gopts.d, opts)?;
    let entry = entry_state(m, global.image, d_signed);
    let jq = m.saddle.to_jordan(&entry);
    let evs = [EventSpec::plane(2, 0.0).rising().terminal()];
    let io = IntegrateOptions::forward(opts.t_max)
        .tol(opts.tol)
        .bound(opts.bound)
        .max_step(0.02);
    let tr = integrate(&m.params, 0.0, entry, &io, &evs);
    let turns = sign_changes(m, &tr.y, f64::INFINITY) / 2;
    let data = LocalMapData {
        d: gopts.d,
        m: turns,
    };
    let (_, jj) = local_map(jq[0], jq[1], &data, &m.saddle.eig)?;
    let local = local_jacobian_original(&m.saddle.eig, &jj)?;
    let dphi = Matrix2::new(
        global.matrix[0][0],
        global.matrix[0][1],
        global.matrix[1][0],
        global.matrix[1][1],
    );
    let composed = composed_jacobian(&dphi, &local);
    Ok(ReturnJacobian {
        global,
        local_data: data,
        entry_jordan: jq,
        local: to_rows(&local),
        composed,
    })
}

/// State with original `(x, y)` on the affine plane `z' = d_signed`.
fn entry_state(m: &Model, xy: [f64; 2], d_signed: f64) -> [f64; 3] {
    // z' is affine in z: z' = z'(x, y, 0) + z * dz'/dz.
    let z0 = m.saddle.to_jordan(&[xy[0], xy[1], 0.0])[2];
    let z1 = m.saddle.to_jordan(&[xy[0], xy[1], 1.0])[2];
    [xy[0], xy[1], (d_signed - z0) / (z1 - z0)]
}

/// Angle in `(-pi, pi]` of `(x, y)` plus `m` turns.
pub fn lifted_angle(x: f64, y: f64, m: u32) -> f64 {
    let a = y.atan2(x);
    debug_assert!(a > -PI - 1e-15 && a <= PI + 1e-15);
    a + TAU * m as f64
}

/// Toy fast-slow flow `eps x' = 1, y' = lambda y` used to check the integrator
/// against its closed-form flow map from `x = 0` to `y = 1`.
pub fn exchange_toy_flow_map(eps: f64, lambda: f64, y0: f64) -> Result<f64> {
    let field = move |s: &[f64; 3]| [1.0 / eps, lambda * s[1], 0.0];
    let io = IntegrateOptions::forward(1e3).bound(1e6).tol(crate::integrator::Tolerances::new(1e-13, 1e-15));
    let ev = EventSpec::plane(1, 1.0).rising().terminal();
    let tr = integrate(&field, 0.0, [0.0, y0, 0.0], &io, std::slice::from_ref(&ev)).checked()?;
    if !tr.stopped_on_event() {
        return Err(ForgeError::NoCrossing { t: tr.last_time() });
    }
    Ok(tr.last_state()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    fn eig() -> EigenData {
        EigenData {
            rho: 0.790204,
            omega: 8.482321,
            lambda: -1.576071,
            complex_vector: Default::default(),
            real_vector: Vector3::z(),
            p: Matrix3::identity(),
            p_inv: Matrix3::identity(),
        }
    }

    #[test]
    fn local_map_on_axis() {
        let (img, _) = local_map(0.3, 0.0, &LocalMapData { d: 1e-3, m: 0 }, &eig()).unwrap();
        assert!((img[0] - 0.3).abs() < 1e-15 && (img[1] - 1e-3).abs() < 1e-18);
        assert!(matches!(
            local_map(0.0, 0.0, &LocalMapData { d: 1e-3, m: 0 }, &eig()),
            Err(ForgeError::OnStableManifold)
        ));
    }

    #[test]
    fn svd_closed_form() {
        let m = Matrix2::new(3.0, 1.0, -2.0, 0.5);
        let s = singular_values_2x2(&m);
        let n = m.svd(false, false).singular_values;
        assert!((s[0] - n[0]).abs() < 1e-12 && (s[1] - n[1]).abs() < 1e-12);
    }

    #[test]
    fn halving_map_has_zero_fixed_point() {
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let r = fixed_points_of(|x| 0.5 * x, &xs, 1e-14);
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-14);
    }

    #[test]
    fn composed_identity() {
        let c = composed_jacobian(&Matrix2::identity(), &Matrix2::identity());
        assert_eq!(c.eigen_magnitudes, [1.0, 1.0]);
    }
}
