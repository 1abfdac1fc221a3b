//! Adaptive Dormand-Prince 8(5,3) integration with dense output and event location.
//!
//! Works on fixed-size states `[f64; N]` so the same stepper drives the full
//! three-dimensional fields and the two-dimensional reduced flows. Integration
//! runs forward or backward in time; events are located by sign-change
//! bracketing on the dense interpolant of each accepted step.

#[rustfmt::skip]
mod tableau;

use crate::error::{ForgeError, Result};
use std::io::Write;
use std::path::Path;
use tableau::{A, B, D, E3, E5, INTERPOLATOR_POWER, N_STAGES, N_STAGES_EXTENDED};

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// An autonomous vector field on `R^N`.
pub trait VectorField<const N: usize>: Sync {
    fn eval(&self, y: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F> VectorField<N> for F
where
    F: Fn(&[f64; N]) -> [f64; N] + Sync,
{
    fn eval(&self, y: &[f64; N]) -> [f64; N] {
        self(y)
    }
}

/// Relative and absolute local error tolerances.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            abs: 1e-12,
        }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            rel: self.rel * factor,
            abs: self.abs * factor,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

impl TimeDirection {
    pub fn sign(self) -> f64 {
        match self {
            TimeDirection::Forward => 1.0,
            TimeDirection::Backward => -1.0,
        }
    }
}

/// Crossing direction, always expressed through the sign of `dg/dt` in
/// physical time, whichever way the integration runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

impl Crossing {
    fn admits(self, rising: bool) -> bool {
        match self {
            Crossing::Any => true,
            Crossing::Rising => rising,
            Crossing::Falling => !rising,
        }
    }
}

/// A scalar event function with a direction filter.
///
/// Terminal events stop the integration at occurrence number `max_count`;
/// non-terminal events are recorded up to `max_count` times.
pub struct EventSpec<'a, const N: usize> {
    pub g: Box<dyn Fn(&[f64; N]) -> f64 + Sync + 'a>,
    pub crossing: Crossing,
    pub terminal: bool,
    pub max_count: usize,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(g: impl Fn(&[f64; N]) -> f64 + Sync + 'a) -> Self {
        Self {
            g: Box::new(g),
            crossing: Crossing::Any,
            terminal: false,
            max_count: usize::MAX,
        }
    }

    /// Event `coordinate == value`.
    pub fn plane(coordinate: usize, value: f64) -> Self {
        Self::new(move |y: &[f64; N]| y[coordinate] - value)
    }

    pub fn crossing(mut self, crossing: Crossing) -> Self {
        self.crossing = crossing;
        self
    }

    pub fn rising(self) -> Self {
        self.crossing(Crossing::Rising)
    }

    pub fn falling(self) -> Self {
        self.crossing(Crossing::Falling)
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        if self.max_count == usize::MAX {
            self.max_count = 1;
        }
        self
    }

    pub fn max_count(mut self, n: usize) -> Self {
        self.max_count = n.max(1);
        self
    }
}

/// A located event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventRecord<const N: usize> {
    pub id: usize,
    pub t: f64,
    pub state: [f64; N],
    /// `true` when `g` increases in physical time through the crossing.
    pub rising: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Event { id: usize },
    TimeLimit,
    BlowUp { t: f64 },
    StepUnderflow { t: f64 },
    MaxSteps { t: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub direction: TimeDirection,
    /// Length of the time interval, always positive.
    pub t_span: f64,
    pub tol: Tolerances,
    /// Blow-up bound on the infinity norm of the state.
    pub bound: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Keep per-step interpolants in the trajectory.
    pub dense: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            direction: TimeDirection::Forward,
            t_span: 100.0,
            tol: Tolerances::default(),
            bound: 10.0,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
            dense: false,
        }
    }
}

impl IntegrateOptions {
    pub fn forward(t_span: f64) -> Self {
        Self {
            t_span,
            ..Self::default()
        }
    }

    pub fn backward(t_span: f64) -> Self {
        Self {
            direction: TimeDirection::Backward,
            t_span,
            ..Self::default()
        }
    }

    pub fn tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn dense(mut self, dense: bool) -> Self {
        self.dense = dense;
        self
    }

    pub fn bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }
}

/// Dense interpolant over one accepted step.
#[derive(Clone, Copy, Debug)]
pub struct DenseSegment<const N: usize> {
    pub t_old: f64,
    pub h: f64,
    y_old: [f64; N],
    f: [[f64; N]; INTERPOLATOR_POWER],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        self.eval_unit((t - self.t_old) / self.h)
    }

    fn eval_unit(&self, x: f64) -> [f64; N] {
        let mut y = [0.0; N];
        for (i, fi) in self.f.iter().rev().enumerate() {
            let w = if i % 2 == 0 { x } else { 1.0 - x };
            for k in 0..N {
                y[k] = (y[k] + fi[k]) * w;
            }
        }
        for k in 0..N {
            y[k] += self.y_old[k];
        }
        y
    }
}

/// Time-ordered solution with optional dense output and located events.
#[derive(Clone, Debug)]
pub struct Trajectory<const N: usize = 3> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub segments: Vec<DenseSegment<N>>,
    pub events: Vec<EventRecord<N>>,
    pub termination: Termination,
    pub direction: TimeDirection,
}

impl<const N: usize> Trajectory<N> {
    pub fn last_state(&self) -> [f64; N] {
        *self.y.last().expect("trajectory has at least the initial sample")
    }

    pub fn last_time(&self) -> f64 {
        *self.t.last().expect("trajectory has at least the initial sample")
    }

    pub fn first_event(&self, id: usize) -> Option<&EventRecord<N>> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn events_of(&self, id: usize) -> impl Iterator<Item = &EventRecord<N>> {
        self.events.iter().filter(move |e| e.id == id)
    }

    pub fn stopped_on_event(&self) -> bool {
        matches!(self.termination, Termination::Event { .. })
    }

    /// Converts blow-up and step underflow into typed errors.
    pub fn checked(self) -> Result<Self> {
        match self.termination {
            Termination::BlowUp { t } => Err(ForgeError::BlowUp { t }),
            Termination::StepUnderflow { t } | Termination::MaxSteps { t } => {
                Err(ForgeError::Stiffness { t })
            }
            _ => Ok(self),
        }
    }

    /// Interpolated state; requires a dense trajectory.
    pub fn state_at(&self, t: f64) -> Option<[f64; N]> {
        let s = self.direction.sign();
        let (t0, t1) = (self.t[0], self.last_time());
        if s * (t - t0) < 0.0 || s * (t - t1) > 0.0 || self.segments.is_empty() {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|seg| s * (seg.t_new() - t) < 0.0)
            .min(self.segments.len() - 1);
        Some(self.segments[idx].eval(t))
    }

    /// Writes `t,x,y,z` (or `t,y0..` for other dimensions) with a header row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend(coordinate_names::<N>());
        w.write_record(&header)?;
        for (t, y) in self.t.iter().zip(&self.y) {
            let mut rec = vec![t.to_string()];
            rec.extend(y.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Events sidecar as a JSON array.
    pub fn write_events_json(&self, path: &Path) -> Result<()> {
        let events: Vec<_> = self
            .events
            .iter()
            .map(|e| {
                serde_json::json!({
                    "id": e.id,
                    "t": e.t,
                    "state": e.state.to_vec(),
                    "direction": if e.rising { "rising" } else { "falling" },
                })
            })
            .collect();
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &events)?;
        writeln!(f)?;
        Ok(())
    }
}

fn coordinate_names<const N: usize>() -> Vec<String> {
    if N == 3 {
        vec!["x".into(), "y".into(), "z".into()]
    } else {
        (0..N).map(|i| format!("y{i}")).collect()
    }
}

fn rms<const N: usize>(v: &[f64; N]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / N as f64).sqrt()
}

fn ulp(t: f64) -> f64 {
    let next = f64::from_bits(t.abs().to_bits() + 1);
    next - t.abs()
}

fn initial_step<const N: usize, F: VectorField<N>>(
    field: &F,
    y0: &[f64; N],
    f0: &[f64; N],
    sign: f64,
    tol: &Tolerances,
    span: f64,
) -> f64 {
    let mut scale = [0.0; N];
    for k in 0..N {
        scale[k] = tol.abs + y0[k].abs() * tol.rel;
    }
    let d0 = rms::<N>(&std::array::from_fn(|k| y0[k] / scale[k]));
    let d1 = rms::<N>(&std::array::from_fn(|k| f0[k] / scale[k]));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1: [f64; N] = std::array::from_fn(|k| y0[k] + h0 * sign * f0[k]);
    let f1 = field.eval(&y1);
    let d2 = rms::<N>(&std::array::from_fn(|k| (f1[k] - f0[k]) / scale[k])) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(span)
}

struct Stepper<'f, const N: usize, F: VectorField<N>> {
    field: &'f F,
    k: [[f64; N]; N_STAGES_EXTENDED],
}

impl<'f, const N: usize, F: VectorField<N>> Stepper<'f, N, F> {
    fn step(&mut self, y: &[f64; N], f: &[f64; N], h: f64) -> [f64; N] {
        self.k[0] = *f;
        for s in 1..N_STAGES {
            let yi = self.combine(y, h, s);
            self.k[s] = self.field.eval(&yi);
        }
        let mut y_new = *y;
        for (s, b) in B.iter().enumerate() {
            for k in 0..N {
                y_new[k] += h * b * self.k[s][k];
            }
        }
        self.k[N_STAGES] = self.field.eval(&y_new);
        y_new
    }

    fn combine(&self, y: &[f64; N], h: f64, s: usize) -> [f64; N] {
        let mut out = *y;
        for j in 0..s {
            let a = A[s][j];
            if a != 0.0 {
                for k in 0..N {
                    out[k] += h * a * self.k[j][k];
                }
            }
        }
        out
    }

    fn error_norm(&self, h: f64, scale: &[f64; N]) -> f64 {
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for k in 0..N {
            let mut s5 = 0.0;
            let mut s3 = 0.0;
            for s in 0..=N_STAGES {
                s5 += self.k[s][k] * E5[s];
                s3 += self.k[s][k] * E3[s];
            }
            e5 += (s5 / scale[k]).powi(2);
            e3 += (s3 / scale[k]).powi(2);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt()
    }

    fn dense(&mut self, t_old: f64, h: f64, y_old: &[f64; N], y_new: &[f64; N]) -> DenseSegment<N> {
        for s in (N_STAGES + 1)..N_STAGES_EXTENDED {
            let yi = self.combine(y_old, h, s);
            self.k[s] = self.field.eval(&yi);
        }
        let f_old = self.k[0];
        let f_new = self.k[N_STAGES];
        let mut fm = [[0.0; N]; INTERPOLATOR_POWER];
        for k in 0..N {
            let dy = y_new[k] - y_old[k];
            fm[0][k] = dy;
            fm[1][k] = h * f_old[k] - dy;
            fm[2][k] = 2.0 * dy - h * (f_new[k] + f_old[k]);
        }
        for (row, d) in D.iter().enumerate() {
            for k in 0..N {
                let mut acc = 0.0;
                for s in 0..N_STAGES_EXTENDED {
                    acc += d[s] * self.k[s][k];
                }
                fm[3 + row][k] = h * acc;
            }
        }
        DenseSegment {
            t_old,
            h,
            y_old: *y_old,
            f: fm,
        }
    }
}

/// Root of `g` along a dense segment between unit parameters `lo` and `hi`
/// where `g(lo)` and `g(hi)` have opposite signs (or `g(hi) == 0`).
fn refine_root<const N: usize>(
    seg: &DenseSegment<N>,
    g: &dyn Fn(&[f64; N]) -> f64,
    mut lo: f64,
    mut g_lo: f64,
    mut hi: f64,
    mut g_hi: f64,
) -> f64 {
    if g_hi == 0.0 {
        return hi;
    }
    let tol_of = |u: f64| {
        let t = seg.t_old + u * seg.h;
        (1e-13 * t.abs() + 1e-14) / seg.h.abs()
    };
    let mut side = 0i8;
    for _ in 0..200 {
        if (hi - lo).abs() <= tol_of(hi) {
            break;
        }
        // Illinois-modified regula falsi, falling back to bisection when the
        // secant point leaves the interior.
        let mut u = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        if !(u > lo && u < hi) || !u.is_finite() {
            u = 0.5 * (lo + hi);
        }
        let gu = g(&seg.eval_unit(u));
        if gu == 0.0 {
            return u;
        }
        if (gu > 0.0) == (g_hi > 0.0) {
            hi = u;
            g_hi = gu;
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = u;
            g_lo = gu;
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        }
    }
    // The earlier endpoint of the final bracket keeps ties at the earlier time.
    if g_lo.abs() < g_hi.abs() && (hi - lo).abs() <= tol_of(hi) {
        lo
    } else {
        hi
    }
}

/// Integrates `field` from `(t0, y0)` with adaptive step control and events.
pub fn integrate<const N: usize, F: VectorField<N>>(
    field: &F,
    t0: f64,
    y0: [f64; N],
    opts: &IntegrateOptions,
    events: &[EventSpec<'_, N>],
) -> Trajectory<N> {
    let sign = opts.direction.sign();
    let t_end = t0 + sign * opts.t_span;
    let tol = opts.tol;
    let want_dense = opts.dense || !events.is_empty();

    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        segments: Vec::new(),
        events: Vec::new(),
        termination: Termination::TimeLimit,
        direction: opts.direction,
    };
    if opts.t_span <= 0.0 {
        return traj;
    }

    let mut t = t0;
    let mut y = y0;
    let mut f = field.eval(&y);
    let mut stepper = Stepper {
        field,
        k: [[0.0; N]; N_STAGES_EXTENDED],
    };
    let mut h_abs = initial_step(field, &y, &f, sign, &tol, opts.t_span);

    let mut prev_sign: Vec<f64> = events.iter().map(|e| signum0((e.g)(&y))).collect();
    let mut counts = vec![0usize; events.len()];
    let mut steps = 0usize;

    loop {
        if steps >= opts.max_steps {
            traj.termination = Termination::MaxSteps { t };
            break;
        }
        steps += 1;
        let min_step = 10.0 * ulp(t).max(f64::MIN_POSITIVE);
        h_abs = h_abs.min(opts.max_step).max(min_step);

        let mut rejected = false;
        let (t_new, y_new, h) = loop {
            if h_abs < min_step {
                traj.termination = Termination::StepUnderflow { t };
                return traj;
            }
            let mut t_new = t + sign * h_abs;
            if sign * (t_new - t_end) > 0.0 {
                t_new = t_end;
            }
            let h = t_new - t;
            let y_new = stepper.step(&y, &f, h);
            let scale: [f64; N] =
                std::array::from_fn(|k| tol.abs + y[k].abs().max(y_new[k].abs()) * tol.rel);
            let err = stepper.error_norm(h, &scale);
            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                h_abs = h.abs() * factor;
                break (t_new, y_new, h);
            }
            if !err.is_finite() {
                h_abs = h.abs() * MIN_FACTOR;
            } else {
                h_abs = h.abs() * MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
            }
            rejected = true;
        };

        let seg = if want_dense {
            Some(stepper.dense(t, h, &y, &y_new))
        } else {
            None
        };
        let f_new = stepper.k[N_STAGES];

        if y_new.iter().any(|v| !v.is_finite() || v.abs() > opts.bound) {
            traj.t.push(t_new);
            traj.y.push(y_new);
            if let Some(seg) = seg {
                traj.segments.push(seg);
            }
            traj.termination = Termination::BlowUp { t: t_new };
            break;
        }

        let mut stop: Option<(f64, [f64; N], usize)> = None;
        if let Some(seg) = &seg {
            let mut found: Vec<(f64, usize, bool)> = Vec::new();
            for (id, ev) in events.iter().enumerate() {
                if counts[id] >= ev.max_count {
                    continue;
                }
                let g_new = (ev.g)(&y_new);
                let s_new = signum0(g_new);
                let s_old = prev_sign[id];
                if s_old != 0.0 && s_new != s_old {
                    let g_old = (ev.g)(&y);
                    let rising_in_order = s_old < 0.0;
                    let rising = if sign > 0.0 {
                        rising_in_order
                    } else {
                        !rising_in_order
                    };
                    if ev.crossing.admits(rising) {
                        let g_old = if signum0(g_old) == s_old { g_old } else { s_old * f64::MIN_POSITIVE };
                        let u = refine_root(seg, ev.g.as_ref(), 0.0, g_old, 1.0, g_new);
                        found.push((u, id, rising));
                    }
                }
                if s_new != 0.0 || s_old != 0.0 {
                    prev_sign[id] = s_new;
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (u, id, rising) in found {
                let te = seg.t_old + u * seg.h;
                let ye = seg.eval_unit(u);
                traj.events.push(EventRecord {
                    id,
                    t: te,
                    state: ye,
                    rising,
                });
                counts[id] += 1;
                if events[id].terminal && counts[id] >= events[id].max_count {
                    stop = Some((te, ye, id));
                    break;
                }
            }
        }

        if let Some(seg) = seg {
            if opts.dense {
                traj.segments.push(seg);
            }
        }
        if let Some((te, ye, id)) = stop {
            traj.t.push(te);
            traj.y.push(ye);
            traj.termination = Termination::Event { id };
            break;
        }
        traj.t.push(t_new);
        traj.y.push(y_new);
        t = t_new;
        y = y_new;
        f = f_new;
        if t == t_end {
            traj.termination = Termination::TimeLimit;
            break;
        }
    }
    traj
}

fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Coordinate plane `y[coordinate] == value`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub coordinate: usize,
    pub value: f64,
}

impl Plane {
    pub fn new(coordinate: usize, value: f64) -> Self {
        Self { coordinate, value }
    }
}

/// First crossing of `plane` matching the direction filter.
pub fn flow_to_section<const N: usize, F: VectorField<N>>(
    field: &F,
    s0: [f64; N],
    plane: Plane,
    crossing: Crossing,
    opts: &IntegrateOptions,
) -> Result<([f64; N], f64)> {
    let ev = EventSpec::plane(plane.coordinate, plane.value)
        .crossing(crossing)
        .terminal();
    let traj = integrate(field, 0.0, s0, opts, std::slice::from_ref(&ev));
    match traj.termination {
        Termination::Event { .. } => {
            let e = traj.events[0];
            Ok((e.state, e.t))
        }
        Termination::StepUnderflow { t } | Termination::MaxSteps { t } => {
            Err(ForgeError::Stiffness { t })
        }
        Termination::BlowUp { t } => Err(ForgeError::NoCrossing { t }),
        Termination::TimeLimit => Err(ForgeError::NoCrossing {
            t: traj.last_time(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_closes_after_one_period() {
        let opts = IntegrateOptions::forward(2.0 * std::f64::consts::PI);
        let traj = integrate(&harmonic, 0.0, [1.0, 0.0], &opts, &[]);
        let y = traj.last_state();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
        assert_eq!(traj.termination, Termination::TimeLimit);
    }

    #[test]
    fn backward_run_retraces_forward_run() {
        let field = |y: &[f64; 3]| [y[1], -y[0] + 0.1 * y[2], -0.5 * y[2]];
        let y0 = [0.3, -0.2, 0.7];
        let fwd = integrate(&field, 0.0, y0, &IntegrateOptions::forward(3.0), &[]);
        let back = integrate(
            &field,
            3.0,
            fwd.last_state(),
            &IntegrateOptions::backward(3.0),
            &[],
        );
        let y = back.last_state();
        for k in 0..3 {
            assert!((y[k] - y0[k]).abs() < 1e-6);
        }
        assert!(back.t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn constant_field_reaches_plane_at_unit_time() {
        let field = |_: &[f64; 3]| [0.0, 0.0, -1.0];
        let (s, t) = flow_to_section(
            &field,
            [0.0, 0.0, 1.0],
            Plane::new(2, 0.0),
            Crossing::Any,
            &IntegrateOptions::forward(5.0),
        )
        .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(s[2].abs() < 1e-12);
    }

    #[test]
    fn direction_filter_rejects_wrong_crossing() {
        let field = |_: &[f64; 3]| [0.0, 0.0, -1.0];
        let r = flow_to_section(
            &field,
            [0.0, 0.0, 1.0],
            Plane::new(2, 0.0),
            Crossing::Rising,
            &IntegrateOptions::forward(5.0),
        );
        assert!(matches!(r, Err(ForgeError::NoCrossing { .. })));
    }

    #[test]
    fn backward_crossing_direction_uses_physical_time() {
        // z decreases in forward time, so the backward crossing of z = 0 is falling.
        let field = |_: &[f64; 3]| [0.0, 0.0, -1.0];
        let ev = EventSpec::plane(2, 0.0).terminal();
        let traj = integrate(
            &field,
            0.0,
            [0.0, 0.0, -1.0],
            &IntegrateOptions::backward(5.0),
            std::slice::from_ref(&ev),
        );
        let e = traj.events[0];
        assert!(!e.rising);
        assert!((e.t + 1.0).abs() < 1e-12);
    }

    #[test]
    fn start_on_surface_is_not_a_crossing() {
        let field = |y: &[f64; 2]| [y[1], -y[0]];
        let ev = EventSpec::plane(1, 0.0).terminal();
        let traj = integrate(
            &field,
            0.0,
            [1.0, 0.0],
            &IntegrateOptions::forward(10.0),
            std::slice::from_ref(&ev),
        );
        let e = traj.events[0];
        assert!((e.t - std::f64::consts::PI).abs() < 1e-10, "{}", e.t);
    }

    #[test]
    fn non_terminal_events_are_counted() {
        let ev = EventSpec::plane(1, 0.0).falling().max_count(3);
        let traj = integrate(
            &harmonic,
            0.0,
            [0.0, 1.0],
            &IntegrateOptions::forward(30.0),
            std::slice::from_ref(&ev),
        );
        assert_eq!(traj.events.len(), 3);
        for (i, e) in traj.events.iter().enumerate() {
            let expect = std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * i as f64;
            assert!((e.t - expect).abs() < 1e-9);
            assert!(!e.rising);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let field = |y: &[f64; 1]| [y[0] * y[0]];
        let traj = integrate(&field, 0.0, [1.0], &IntegrateOptions::forward(2.0), &[]);
        assert!(matches!(traj.termination, Termination::BlowUp { .. }));
        assert!(traj.checked().is_err());
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let opts = IntegrateOptions::forward(6.0).dense(true);
        let traj = integrate(&harmonic, 0.0, [1.0, 0.0], &opts, &[]);
        for i in 0..60 {
            let t = 0.1 * i as f64 + 0.037;
            let y = traj.state_at(t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-9);
            assert!((y[1] + t.sin()).abs() < 1e-9);
        }
    }
}
