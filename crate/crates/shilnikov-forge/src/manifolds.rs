//! Invariant manifolds for `eps > 0`: the unstable and stable manifolds of the
//! saddle-focus, slow-sheet traces on sections, canard location by bisection,
//! canard heights, and transversality witnesses for parameter sweeps.

use crate::error::{ForgeError, Result};
use crate::integrator::{
    integrate, Crossing, EventSpec, IntegrateOptions, Plane, Termination, Tolerances, Trajectory,
};
use crate::models::{ShnfParams, ShnfParamsByEq};
use crate::singular::{critical_height, FOLD_MINUS, FOLD_MINUS_HEIGHT};
use crate::spectral::{real_cubic_roots, SaddleFocus, EQ_WINDOW};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

/// Parameters together with the saddle-focus they define.
#[derive(Clone, Copy, Debug)]
pub struct Model {
    pub params: ShnfParams,
    pub saddle: SaddleFocus,
}

impl Model {
    pub fn new(params: ShnfParams, x_center: f64) -> Result<Self> {
        let saddle = SaddleFocus::new(&params, x_center, EQ_WINDOW)?;
        Ok(Self { params, saddle })
    }

    pub fn from_eq(q: &ShnfParamsByEq) -> Result<Self> {
        Self::new(q.to_params()?, q.x_eq)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ManifoldOptions {
    /// Offset of initial points from the equilibrium along eigendirections.
    pub r0: f64,
    pub tol: Tolerances,
    pub t_max: f64,
    pub bound: f64,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            r0: 1e-6,
            tol: Tolerances::default(),
            t_max: 200.0,
            bound: 10.0,
        }
    }
}

impl ManifoldOptions {
    fn forward(&self) -> IntegrateOptions {
        IntegrateOptions::forward(self.t_max)
            .tol(self.tol)
            .bound(self.bound)
    }

    fn backward(&self) -> IntegrateOptions {
        IntegrateOptions::backward(self.t_max)
            .tol(self.tol)
            .bound(self.bound)
    }
}

/// How `theta = 0` is placed in the unstable eigenplane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Anchor {
    /// Measured from the first Jordan basis vector.
    Raw,
    /// Measured from the canard trajectory, located at raw angle `gamma`.
    Gamma { gamma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AngleParam {
    pub theta: f64,
    pub anchor: Anchor,
}

impl AngleParam {
    pub fn raw(theta: f64) -> Self {
        Self {
            theta,
            anchor: Anchor::Raw,
        }
    }

    pub fn anchored(theta: f64, gamma: f64) -> Self {
        Self {
            theta,
            anchor: Anchor::Gamma { gamma },
        }
    }

    /// Raw angle in `[0, 2 pi)`.
    pub fn raw_angle(&self) -> f64 {
        let t = match self.anchor {
            Anchor::Raw => self.theta,
            Anchor::Gamma { gamma } => self.theta + gamma,
        };
        t.rem_euclid(TAU)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StableBranch {
    Plus,
    Minus,
}

impl StableBranch {
    pub fn sign(self) -> f64 {
        match self {
            StableBranch::Plus => 1.0,
            StableBranch::Minus => -1.0,
        }
    }
}

/// Forward trajectory in the unstable manifold at angle `theta`.
pub fn unstable_trajectory(
    m: &Model,
    theta: AngleParam,
    opts: &ManifoldOptions,
    events: &[EventSpec<'_, 3>],
) -> Trajectory {
    let s0 = m.saddle.unstable_seed(theta.raw_angle(), opts.r0);
    integrate(&m.params, 0.0, s0, &opts.forward(), events)
}

/// Backward trajectory in one branch of the stable manifold.
pub fn stable_backward(
    m: &Model,
    branch: StableBranch,
    opts: &ManifoldOptions,
    events: &[EventSpec<'_, 3>],
) -> Trajectory {
    let s0 = m.saddle.stable_seed(branch.sign() * opts.r0);
    integrate(&m.params, 0.0, s0, &opts.backward(), events)
}

/// Points of a sheet or manifold trace on a section.
#[derive(Clone, Debug, Serialize)]
pub struct SectionCurve {
    pub plane: (usize, f64),
    pub points: Vec<[f64; 3]>,
    pub kind: CurveKind,
    /// Sweep parameter per point, when the curve belongs to a sweep.
    pub param: Option<f64>,
    pub dropped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    StableManifold,
    AttractingSheet,
    RepellingSheet,
}

/// Images of `seeds` on `plane`: forward time for attracting sheets,
/// backward time for the repelling sheet.
pub fn slow_sheet_section(
    p: &ShnfParams,
    kind: CurveKind,
    plane: Plane,
    crossing: Crossing,
    seeds: &[[f64; 3]],
    opts: &ManifoldOptions,
) -> SectionCurve {
    let io = match kind {
        CurveKind::RepellingSheet => opts.backward(),
        _ => opts.forward(),
    };
    let hits: Vec<Option<[f64; 3]>> = seeds
        .par_iter()
        .map(|s| {
            if (s[plane.coordinate] - plane.value).abs() <= 1e-15 {
                return Some(*s);
            }
            let ev = EventSpec::plane(plane.coordinate, plane.value)
                .crossing(crossing)
                .terminal();
            let tr = integrate(p, 0.0, *s, &io, std::slice::from_ref(&ev));
            tr.stopped_on_event().then(|| tr.last_state())
        })
        .collect();
    let dropped = hits.iter().filter(|h| h.is_none()).count();
    SectionCurve {
        plane: (plane.coordinate, plane.value),
        points: hits.into_iter().flatten().collect(),
        kind,
        param: None,
        dropped,
    }
}

/// `x` on the repelling sheet at height `y`, clamped to the folds outside `(0, 4/27)`.
pub fn repelling_x(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= FOLD_MINUS_HEIGHT {
        return FOLD_MINUS;
    }
    real_cubic_roots(1.0, 1.0, 0.0, -y)
        .into_iter()
        .find(|r| *r > FOLD_MINUS && *r < 0.0)
        .unwrap_or(if y < 0.5 * FOLD_MINUS_HEIGHT { 0.0 } else { FOLD_MINUS })
}

/// Radius of the tube around the repelling sheet used by the side oracle.
pub const TUBE_RADIUS: f64 = 0.05;

/// Side on which an unstable-manifold trajectory leaves the repelling sheet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SideSample {
    pub theta: f64,
    /// `+1` toward the upper attracting sheet, `-1` toward the lower one, `0` if it never left.
    pub side: i8,
    pub exit_height: f64,
}

/// Exits the tube `|x - x_r(y)| < TUBE_RADIUS` and reports the side.
pub fn exit_side(m: &Model, theta_raw: f64, opts: &ManifoldOptions) -> SideSample {
    let ev = EventSpec::new(|s: &[f64; 3]| (s[0] - repelling_x(s[1])).abs() - TUBE_RADIUS)
        .rising()
        .terminal();
    let tr = unstable_trajectory(m, AngleParam::raw(theta_raw), opts, std::slice::from_ref(&ev));
    if !tr.stopped_on_event() {
        return SideSample {
            theta: theta_raw,
            side: 0,
            exit_height: f64::NAN,
        };
    }
    let s = tr.last_state();
    SideSample {
        theta: theta_raw,
        side: if s[0] > repelling_x(s[1]) { 1 } else { -1 },
        exit_height: s[1],
    }
}

/// Scans the exit side over `n` raw angles in `[0, 2 pi)`.
pub fn side_scan(m: &Model, n: usize, opts: &ManifoldOptions) -> Vec<SideSample> {
    (0..n)
        .into_par_iter()
        .map(|i| exit_side(m, TAU * i as f64 / n as f64, opts))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BracketStep {
    pub lo: f64,
    pub hi: f64,
    pub side_lo: i8,
    pub side_hi: i8,
    pub height_lo: f64,
    pub height_hi: f64,
}

#[derive(Clone, Debug)]
pub struct CanardResult {
    /// Raw angle of the canard trajectory.
    pub theta: f64,
    pub exit_height: f64,
    pub gamma: Trajectory,
    pub history: Vec<BracketStep>,
}

#[derive(Clone, Copy, Debug)]
pub struct CanardOptions {
    pub scan: usize,
    pub tol: f64,
    /// Stop once a bracket end reaches this exit height.
    pub height_target: Option<f64>,
    pub max_iter: usize,
}

impl Default for CanardOptions {
    fn default() -> Self {
        Self {
            scan: 720,
            tol: 1e-12,
            height_target: None,
            max_iter: 200,
        }
    }
}

/// Bisection in the unstable-manifold angle for the trajectory that follows
/// the repelling sheet. Brackets come from a side scan; among the sign
/// changes the one with the highest exit heights is refined.
pub fn canard_bisection(
    m: &Model,
    copts: &CanardOptions,
    opts: &ManifoldOptions,
) -> Result<CanardResult> {
    let scan = side_scan(m, copts.scan, opts);
    let n = scan.len();
    let mut best: Option<(f64, SideSample, SideSample)> = None;
    for i in 0..n {
        let a = scan[i];
        let mut b = scan[(i + 1) % n];
        if i + 1 == n {
            b.theta += TAU;
        }
        if a.side != 0 && b.side != 0 && a.side != b.side {
            let score = a.exit_height + b.exit_height;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, a, b));
            }
        }
    }
    let (_, mut lo, mut hi) =
        best.ok_or_else(|| ForgeError::NoBracket("no side change in the angle scan".into()))?;
    let mut history = Vec::new();
    for _ in 0..copts.max_iter {
        assert!(
            lo.side * hi.side < 0,
            "bracket invariant violated at [{}, {}]",
            lo.theta,
            hi.theta
        );
        history.push(BracketStep {
            lo: lo.theta,
            hi: hi.theta,
            side_lo: lo.side,
            side_hi: hi.side,
            height_lo: lo.exit_height,
            height_hi: hi.exit_height,
        });
        if let Some(target) = copts.height_target {
            if lo.exit_height >= target || hi.exit_height >= target {
                break;
            }
        }
        if hi.theta - lo.theta <= copts.tol {
            break;
        }
        let mid = exit_side(m, 0.5 * (lo.theta + hi.theta), opts);
        if mid.side == 0 {
            return Err(ForgeError::NoBracket(format!(
                "trajectory at {} stays in the tube",
                mid.theta
            )));
        }
        if mid.side == lo.side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pick = match copts.height_target {
        Some(t) if hi.exit_height >= t && lo.exit_height < t => hi,
        Some(t) if lo.exit_height >= t && hi.exit_height < t => lo,
        _ => {
            if hi.exit_height >= lo.exit_height {
                hi
            } else {
                lo
            }
        }
    };
    let theta = pick.theta.rem_euclid(TAU);
    let gamma = unstable_trajectory(m, AngleParam::raw(theta), opts, &[]);
    Ok(CanardResult {
        theta,
        exit_height: pick.exit_height,
        gamma,
        history,
    })
}

/// Stopping rules for canard heights: the lower fold and a band around the
/// critical manifold.
#[derive(Clone, Copy, Debug)]
pub struct HeightStops {
    pub band: f64,
}

impl Default for HeightStops {
    fn default() -> Self {
        Self { band: 0.004 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HeightSample {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub height: f64,
    pub terminated: bool,
}

/// Integrates each start point to the first stop and reports the height `y`
/// there. Fast fibres are lines of constant `y`, so projecting the stop point
/// onto the critical manifold keeps its height.
pub fn canard_heights(
    p: &ShnfParams,
    starts: &[[f64; 3]],
    stops: &HeightStops,
    opts: &ManifoldOptions,
) -> Vec<HeightSample> {
    let band = stops.band;
    starts
        .par_iter()
        .map(|s0| {
            if (s0[1] - critical_height(s0[0])).abs() >= band || s0[0] <= FOLD_MINUS {
                return HeightSample {
                    start: *s0,
                    end: *s0,
                    height: s0[1],
                    terminated: true,
                };
            }
            let evs = [
                EventSpec::plane(0, FOLD_MINUS).terminal(),
                EventSpec::new(move |s: &[f64; 3]| s[1] - critical_height(s[0]) - band).terminal(),
                EventSpec::new(move |s: &[f64; 3]| s[1] - critical_height(s[0]) + band).terminal(),
            ];
            let tr = integrate(p, 0.0, *s0, &opts.forward(), &evs);
            let end = tr.last_state();
            HeightSample {
                start: *s0,
                end,
                height: end[1],
                terminated: tr.stopped_on_event(),
            }
        })
        .collect()
}

/// Grid of start points for a height map.
#[derive(Clone, Debug)]
pub enum HeightGrid {
    /// Unstable-manifold angles (raw), first carried to the section `x = x_section`.
    Angles { thetas: Vec<f64>, x_section: f64 },
    /// Rectangular grid on the plane `z = z_section`.
    Plane {
        z_section: f64,
        x: (f64, f64, usize),
        y: (f64, f64, usize),
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightCell {
    pub row: usize,
    pub col: usize,
    pub x: f64,
    pub y: f64,
    pub height: f64,
    pub terminated: bool,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Canard heights over a grid.
pub fn canard_height_map(
    m: &Model,
    grid: &HeightGrid,
    stops: &HeightStops,
    opts: &ManifoldOptions,
) -> Vec<HeightCell> {
    match grid {
        HeightGrid::Plane { z_section, x, y } => {
            let xs = linspace(x.0, x.1, x.2);
            let ys = linspace(y.0, y.1, y.2);
            let mut starts = Vec::with_capacity(xs.len() * ys.len());
            let mut idx = Vec::with_capacity(starts.capacity());
            for (r, yv) in ys.iter().enumerate() {
                for (c, xv) in xs.iter().enumerate() {
                    starts.push([*xv, *yv, *z_section]);
                    idx.push((r, c));
                }
            }
            canard_heights(&m.params, &starts, stops, opts)
                .into_iter()
                .zip(idx)
                .map(|(h, (row, col))| HeightCell {
                    row,
                    col,
                    x: h.start[0],
                    y: h.start[1],
                    height: h.height,
                    terminated: h.terminated,
                })
                .collect()
        }
        HeightGrid::Angles { thetas, x_section } => {
            let xs = *x_section;
            thetas
                .par_iter()
                .enumerate()
                .map(|(i, th)| {
                    let ev = EventSpec::plane(0, xs).terminal();
                    let tr =
                        unstable_trajectory(m, AngleParam::raw(*th), opts, std::slice::from_ref(&ev));
                    let start = tr.last_state();
                    let h = canard_heights(&m.params, &[start], stops, opts)[0];
                    HeightCell {
                        row: 0,
                        col: i,
                        x: *th,
                        y: start[1],
                        height: h.height,
                        terminated: tr.stopped_on_event() && h.terminated,
                    }
                })
                .collect()
        }
    }
}

/// First backward crossing of `z = 0` on a stable branch.
pub fn stable_section_point(
    m: &Model,
    branch: StableBranch,
    opts: &ManifoldOptions,
) -> Result<([f64; 3], f64)> {
    let ev = EventSpec::plane(2, 0.0).terminal();
    let tr = stable_backward(m, branch, opts, std::slice::from_ref(&ev)).checked()?;
    match tr.termination {
        Termination::Event { .. } => Ok((tr.last_state(), tr.last_time())),
        _ => Err(ForgeError::NoCrossing { t: tr.last_time() }),
    }
}

/// The stable branch whose backward trajectory reaches `z = 0` first.
pub fn first_stable_branch(
    m: &Model,
    opts: &ManifoldOptions,
) -> Result<(StableBranch, [f64; 3], f64)> {
    let plus = stable_section_point(m, StableBranch::Plus, opts);
    let minus = stable_section_point(m, StableBranch::Minus, opts);
    match (plus, minus) {
        (Ok((sp, tp)), Ok((sm, tm))) => {
            if tp.abs() <= tm.abs() {
                Ok((StableBranch::Plus, sp, tp))
            } else {
                Ok((StableBranch::Minus, sm, tm))
            }
        }
        (Ok((s, t)), Err(_)) => Ok((StableBranch::Plus, s, t)),
        (Err(_), Ok((s, t))) => Ok((StableBranch::Minus, s, t)),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Accumulated winding, in turns, of a polyline about `center`.
pub fn winding_turns(points: &[[f64; 2]], center: [f64; 2]) -> f64 {
    let mut total = 0.0;
    for w in points.windows(2) {
        let a = (w[0][1] - center[1]).atan2(w[0][0] - center[0]);
        let b = (w[1][1] - center[1]).atan2(w[1][0] - center[0]);
        let mut d = b - a;
        while d > std::f64::consts::PI {
            d -= TAU;
        }
        while d < -std::f64::consts::PI {
            d += TAU;
        }
        total += d;
    }
    total.abs() / TAU
}

/// Repelling-sheet trace on `z = 0` near the stable-manifold point.
#[derive(Clone, Debug, Serialize)]
pub struct SpiralTrace {
    pub center: [f64; 2],
    pub offsets: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub turns: f64,
}

/// Last point of `traj` before it first leaves the repelling-sheet tube,
/// restricted to heights at most `max_height`.
pub fn canard_point(traj: &Trajectory, max_height: f64) -> Option<[f64; 3]> {
    traj.y
        .iter()
        .take_while(|s| (s[0] - repelling_x(s[1])).abs() < TUBE_RADIUS)
        .filter(|s| s[1] <= max_height)
        .max_by(|a, b| a[1].total_cmp(&b[1]))
        .copied()
}

/// Seeds the repelling sheet across the canard `gamma` at `seed` (a point of
/// the canard), offsets them in `z` by log-spaced amounts, and follows each
/// backward to its first falling crossing of `z = 0`. Close to `gamma` the
/// backward orbits pass near the equilibrium and leave along the stable
/// manifold, so their hits wind around its section point.
pub fn repelling_spiral(
    m: &Model,
    seed: [f64; 3],
    offsets: &[f64],
    opts: &ManifoldOptions,
) -> Result<SpiralTrace> {
    let (_, s_point, _) = first_stable_branch(m, opts)?;
    let seeds: Vec<[f64; 3]> = offsets
        .iter()
        .map(|d| [seed[0], seed[1], seed[2] + d])
        .collect();
    let curve = slow_sheet_section(
        &m.params,
        CurveKind::RepellingSheet,
        Plane::new(2, 0.0),
        Crossing::Falling,
        &seeds,
        opts,
    );
    let points: Vec<[f64; 2]> = curve.points.iter().map(|p| [p[0], p[1]]).collect();
    let center = [s_point[0], s_point[1]];
    let turns = winding_turns(&points, center);
    Ok(SpiralTrace {
        center,
        offsets: offsets.to_vec(),
        points,
        turns,
    })
}

/// `n` offsets from `largest` down through `decades` powers of ten, log-spaced.
pub fn log_offsets(largest: f64, decades: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| largest * 10f64.powf(-decades * i as f64 / (n - 1) as f64))
        .collect()
}

/// Spiral of the repelling sheet seeded halfway up the canard `gamma`.
pub fn canard_spiral(
    m: &Model,
    canard: &CanardResult,
    offsets: &[f64],
    opts: &ManifoldOptions,
) -> Result<SpiralTrace> {
    let seed = canard_point(&canard.gamma, 0.5 * canard.exit_height)
        .ok_or_else(|| ForgeError::NoBracket("canard never enters the repelling tube".into()))?;
    repelling_spiral(m, seed, offsets, opts)
}

/// Least-squares fit `y = y0 + e_x (x - x_mean) + e_a (a - a_mean)` over
/// points `(x, y, a)`; returns the unit normal `eta` and offset `n` with
/// `(x, y, a) . eta = n` on the fitted plane.
pub fn fit_surface(points: &[[f64; 3]]) -> Result<([f64; 3], f64)> {
    if points.len() < 3 {
        return Err(ForgeError::RankDeficient);
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / k;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / k;
    let ma = points.iter().map(|p| p[2]).sum::<f64>() / k;
    let (mut sxx, mut sxa, mut saa, mut sxy, mut say) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy, da) = (p[0] - mx, p[1] - my, p[2] - ma);
        sxx += dx * dx;
        sxa += dx * da;
        saa += da * da;
        sxy += dx * dy;
        say += da * dy;
    }
    let det = sxx * saa - sxa * sxa;
    let scale = sxx * saa;
    if scale == 0.0 || det.abs() <= 1e-12 * scale {
        return Err(ForgeError::RankDeficient);
    }
    let ex = (saa * sxy - sxa * say) / det;
    let ea = (sxx * say - sxa * sxy) / det;
    // y - ex x - ea a = my - ex mx - ea ma
    let raw = [-ex, 1.0, -ea];
    let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
    let eta = raw.map(|v| v / norm);
    let n = (my - ex * mx - ea * ma) / norm;
    Ok((eta, n))
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub half_width: f64,
    pub samples: usize,
    /// Seeds per refinement level on the attracting-sheet seed line.
    pub seeds: usize,
    /// Height of the seed line on the upper attracting sheet.
    pub seed_height: f64,
    /// Initial `z` range of the seed line.
    pub z_range: (f64, f64),
    /// Refinement stops once the sheet trace near `C` is shorter than this.
    pub patch: f64,
    pub max_levels: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            half_width: 3e-5,
            samples: 7,
            seeds: 21,
            seed_height: 0.06,
            z_range: (-0.3, 0.3),
            patch: 1e-7,
            max_levels: 12,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub a_values: Vec<f64>,
    /// Stable-manifold section point per sweep value.
    pub c_points: Vec<[f64; 3]>,
    pub sheet_curves: Vec<SectionCurve>,
    pub eta: [f64; 3],
    pub n: f64,
    /// Signed distance of each stable-manifold point to the fitted surface.
    pub witness: Vec<f64>,
    pub sign_changes: usize,
}

/// `x` on the upper attracting sheet at height `y > 0`.
pub fn attracting_plus_x(y: f64) -> f64 {
    real_cubic_roots(1.0, 1.0, 0.0, -y)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn segment_distance(c: [f64; 2], a: [f64; 3], b: [f64; 3]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((c[0] - a[0]) * dx + (c[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((c[0] - a[0] - t * dx).powi(2) + (c[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Short arc of the upper attracting sheet's trace on `z = 0` passing next
/// to `c`, with the seeds that produce it. Forward contraction along the sheet
/// squeezes most of a seed line onto a tiny arc, so the search zooms in on the
/// seed interval level by level.
pub fn sheet_trace_near(
    m: &Model,
    c: [f64; 2],
    sopts: &SweepOptions,
    opts: &ManifoldOptions,
) -> Result<(Vec<[f64; 3]>, SectionCurve)> {
    let y = sopts.seed_height;
    let x = attracting_plus_x(y);
    let n = sopts.seeds.max(3);
    let (mut lo, mut hi) = sopts.z_range;
    for _ in 0..sopts.max_levels {
        let zs = linspace(lo, hi, n);
        let seeds: Vec<[f64; 3]> = zs.iter().map(|z| [x, y, *z]).collect();
        let hits: Vec<Option<[f64; 3]>> = seeds
            .par_iter()
            .map(|s| {
                let ev = EventSpec::plane(2, 0.0).falling().terminal();
                let tr = integrate(&m.params, 0.0, *s, &opts.forward(), std::slice::from_ref(&ev));
                tr.stopped_on_event().then(|| tr.last_state())
            })
            .collect();
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n - 1 {
            if let (Some(a), Some(b)) = (hits[i], hits[i + 1]) {
                let d = segment_distance(c, a, b);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
        }
        let (_, i) = best.ok_or_else(|| {
            ForgeError::NoBracket("attracting-sheet seeds never reach the section".into())
        })?;
        let j0 = i.saturating_sub(1);
        let j1 = (i + 2).min(n - 1);
        let span = match (hits[j0], hits[j1]) {
            (Some(a), Some(b)) => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
            _ => f64::INFINITY,
        };
        if span <= sopts.patch {
            let fine: Vec<[f64; 3]> = linspace(zs[j0], zs[j1], n)
                .into_iter()
                .map(|z| [x, y, z])
                .collect();
            let curve = slow_sheet_section(
                &m.params,
                CurveKind::AttractingSheet,
                Plane::new(2, 0.0),
                Crossing::Falling,
                &fine,
                opts,
            );
            return Ok((fine, curve));
        }
        lo = zs[j0];
        hi = zs[j1];
    }
    Err(ForgeError::NoConvergence {
        iterations: sopts.max_levels,
        residual: hi - lo,
    })
}

/// Sweeps `a` around `base` and measures how the stable-manifold section
/// point `C` moves relative to the surface `S` traced on `z = 0` by the upper
/// attracting sheet. The seed line is located once at the central value and
/// reused for every sample.
pub fn parameter_sweep(
    base: &ShnfParamsByEq,
    sopts: &SweepOptions,
    opts: &ManifoldOptions,
) -> Result<SweepResult> {
    let a_values = if sopts.samples <= 1 || sopts.half_width == 0.0 {
        vec![base.a]
    } else {
        linspace(base.a - sopts.half_width, base.a + sopts.half_width, sopts.samples)
    };
    let m0 = Model::from_eq(base)?;
    let (_, c0, _) = first_stable_branch(&m0, opts)?;
    let (seeds, _) = sheet_trace_near(&m0, [c0[0], c0[1]], sopts, opts)?;
    let per_a: Vec<Result<([f64; 3], SectionCurve)>> = a_values
        .par_iter()
        .map(|&a| {
            let m = Model::from_eq(&ShnfParamsByEq { a, ..*base })?;
            let (_, c_point, _) = first_stable_branch(&m, opts)?;
            let mut curve = slow_sheet_section(
                &m.params,
                CurveKind::AttractingSheet,
                Plane::new(2, 0.0),
                Crossing::Falling,
                &seeds,
                opts,
            );
            curve.param = Some(a);
            Ok((c_point, curve))
        })
        .collect();
    let mut c_points = Vec::new();
    let mut sheet_curves = Vec::new();
    for r in per_a {
        let (c, s) = r?;
        c_points.push(c);
        sheet_curves.push(s);
    }
    if a_values.len() < 2 {
        return Ok(SweepResult {
            a_values,
            c_points,
            sheet_curves,
            eta: [0.0; 3],
            n: 0.0,
            witness: Vec::new(),
            sign_changes: 0,
        });
    }
    // Centre the data before fitting so the tiny patch is well conditioned.
    let (ox, oy) = (c0[0], c0[1]);
    let mut cloud = Vec::new();
    for (a, curve) in a_values.iter().zip(&sheet_curves) {
        cloud.extend(curve.points.iter().map(|p| [p[0] - ox, p[1] - oy, a - base.a]));
    }
    let (eta, n_local) = fit_surface(&cloud)?;
    let witness: Vec<f64> = c_points
        .iter()
        .zip(&a_values)
        .map(|(c, a)| (c[0] - ox) * eta[0] + (c[1] - oy) * eta[1] + (a - base.a) * eta[2] - n_local)
        .collect();
    let sign_changes = witness
        .windows(2)
        .filter(|w| w[0].signum() != w[1].signum())
        .count();
    let n = n_local + ox * eta[0] + oy * eta[1] + base.a * eta[2];
    Ok(SweepResult {
        a_values,
        c_points,
        sheet_curves,
        eta,
        n,
        witness,
        sign_changes,
    })
}

/// Largest distance to the critical manifold, in `y`, over samples with `x > x_min`.
pub fn sheet_distance(traj: &Trajectory, x_min: f64, skip_time: f64) -> f64 {
    let t0 = traj.t[0];
    traj.t
        .iter()
        .zip(&traj.y)
        .filter(|(t, s)| (*t - t0).abs() >= skip_time && s[0] > x_min)
        .map(|(_, s)| (s[1] - critical_height(s[0])).abs())
        .fold(0.0, f64::max)
}
