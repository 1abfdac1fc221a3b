//! The `eps = 0` skeleton: critical manifold sheets, fold lines, fast jumps,
//! the desingularized reduced flow, folded singularities and singular cycles.
//!
//! On the critical manifold `y = x^2 + x^3` the reduced flow is written in the
//! `(x, z)` chart and multiplied by the fold factor `2x + 3x^2`, which reverses
//! time on the repelling sheet `-2/3 < x < 0`.

use crate::error::{ForgeError, Result};
use crate::integrator::{integrate, EventSpec, IntegrateOptions, Termination, Tolerances};
use crate::models::ShnfParams;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

pub const FOLD_MINUS: f64 = -2.0 / 3.0;
pub const FOLD_ZERO: f64 = 0.0;
/// Height of the critical manifold at the lower fold, `h(-2/3) = 4/27`.
pub const FOLD_MINUS_HEIGHT: f64 = 4.0 / 27.0;
const FOLD_TOL: f64 = 1e-12;

/// Height `y` of the critical manifold above `x`.
#[inline]
pub fn critical_height(x: f64) -> f64 {
    x * x * (1.0 + x)
}

/// Fold factor `2x + 3x^2 = dh/dx`.
#[inline]
pub fn fold_factor(x: f64) -> f64 {
    x * (2.0 + 3.0 * x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SheetId {
    AMinus,
    R,
    APlus,
    FoldMinus,
    FoldZero,
}

impl SheetId {
    pub fn is_attracting(self) -> bool {
        matches!(self, SheetId::AMinus | SheetId::APlus)
    }
}

pub fn sheet_classify(x: f64) -> SheetId {
    if x == FOLD_MINUS {
        SheetId::FoldMinus
    } else if x == FOLD_ZERO {
        SheetId::FoldZero
    } else if x < FOLD_MINUS {
        SheetId::AMinus
    } else if x < 0.0 {
        SheetId::R
    } else {
        SheetId::APlus
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JumpBranch {
    /// Increasing `x`, landing on the upper attracting sheet.
    Plus,
    /// Decreasing `x`, landing on the lower attracting sheet.
    Minus,
}

/// Landing points of a fast jump from `x0`. A branch is `None` where it
/// degenerates onto the fold itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JumpTargets {
    pub x0: f64,
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

impl JumpTargets {
    /// The branch selected by the layer dynamics. Only at a fold is the
    /// direction forced; from the interior of the repelling sheet both exist.
    pub fn dictated(&self) -> Option<(JumpBranch, f64)> {
        match (self.plus, self.minus) {
            (Some(x), None) => Some((JumpBranch::Plus, x)),
            (None, Some(x)) => Some((JumpBranch::Minus, x)),
            _ => None,
        }
    }

    pub fn branch(&self, b: JumpBranch) -> Option<f64> {
        match b {
            JumpBranch::Plus => self.plus,
            JumpBranch::Minus => self.minus,
        }
    }
}

/// Fast jump targets from the repelling sheet or its folds at constant height.
pub fn jump_target(x0: f64) -> Result<JumpTargets> {
    if !(x0.is_finite() && (FOLD_MINUS - FOLD_TOL..=FOLD_TOL).contains(&x0)) {
        return Err(ForgeError::Domain(format!("jump origin x0 = {x0}")));
    }
    let x0 = x0.clamp(FOLD_MINUS, 0.0);
    // x^3 + x^2 - h(x0) = (x - x0)(x^2 + (1 + x0) x + x0 (1 + x0)).
    let bq = 1.0 + x0;
    let cq = x0 * (1.0 + x0);
    let disc = (bq * (1.0 - 3.0 * x0)).max(0.0);
    let q = -0.5 * (bq + disc.sqrt());
    let (lo, hi) = (q, cq / q);
    Ok(JumpTargets {
        x0,
        plus: (hi > FOLD_TOL).then_some(hi),
        minus: (lo < FOLD_MINUS - FOLD_TOL).then_some(lo),
    })
}

/// Desingularized reduced field `(x', z')` in the `(x, z)` chart.
pub fn desing_reduced_field(x: f64, z: f64, p: &ShnfParams) -> [f64; 2] {
    let y = critical_height(x);
    [
        z - x,
        -fold_factor(x) * (p.nu + p.a * x + p.b * y + p.c * z),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldedKind {
    Node,
    Saddle,
    SaddleNode,
    Focus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FoldedSingularity {
    /// `(x, z)` on a fold line, with `z = x`.
    pub location: [f64; 2],
    pub fold: SheetId,
    /// Real parts of the reduced eigenvalues, `w1 <= w2`.
    pub w1: f64,
    pub w2: f64,
    /// Imaginary part magnitude; nonzero only for a focus.
    pub w_imag: f64,
    pub kind: FoldedKind,
    pub mu: Option<f64>,
    /// Twist estimate `1 + floor((mu - 1) / 2)` for a node.
    pub twist: Option<u32>,
}

fn classify_2x2(location: [f64; 2], fold: SheetId, k: f64) -> FoldedSingularity {
    // Jacobian [[-1, 1], [k, 0]]: w^2 + w - k = 0.
    let disc = 1.0 + 4.0 * k;
    let (w1, w2, w_imag) = if disc < 0.0 {
        (-0.5, -0.5, 0.5 * (-disc).sqrt())
    } else {
        let s = disc.sqrt();
        // Stable pairing: the larger-magnitude root first, the other from the product.
        let big = -0.5 * (1.0 + s);
        let small = if big != 0.0 { -k / big } else { 0.0 };
        (big.min(small), big.max(small), 0.0)
    };
    let kind = if w_imag > 0.0 {
        FoldedKind::Focus
    } else if w1 == 0.0 || w2 == 0.0 || (w1 * w2).abs() <= 1e-14 {
        FoldedKind::SaddleNode
    } else if w1 * w2 > 0.0 {
        FoldedKind::Node
    } else {
        FoldedKind::Saddle
    };
    let mu = (w_imag == 0.0 && w2 != 0.0).then(|| w1 / w2);
    let twist = match (kind, mu) {
        (FoldedKind::Node, Some(m)) => Some(twist_estimate(m)),
        _ => None,
    };
    FoldedSingularity {
        location,
        fold,
        w1,
        w2,
        w_imag,
        kind,
        mu,
        twist,
    }
}

/// `j = 1 + floor((mu - 1) / 2)`.
pub fn twist_estimate(mu: f64) -> u32 {
    1 + ((mu - 1.0) / 2.0).floor().max(0.0) as u32
}

/// Folded singularities at `(0, 0)` and `(-2/3, -2/3)`.
pub fn folded_singularities(p: &ShnfParams) -> Vec<FoldedSingularity> {
    let g = p.nu - 2.0 * (p.a + p.c) / 3.0 + 4.0 * p.b / 27.0;
    vec![
        classify_2x2([0.0, 0.0], SheetId::FoldZero, -2.0 * p.nu),
        classify_2x2([FOLD_MINUS, FOLD_MINUS], SheetId::FoldMinus, 2.0 * g),
    ]
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    /// Reduced-flow samples `(t, [x, y, z])` on one sheet, `t` in desingularized time.
    Slow {
        sheet: SheetId,
        samples: Vec<(f64, [f64; 3])>,
    },
    Jump { from: [f64; 3], to: [f64; 3] },
}

impl Segment {
    pub fn start(&self) -> [f64; 3] {
        match self {
            Segment::Slow { samples, .. } => samples[0].1,
            Segment::Jump { from, .. } => *from,
        }
    }

    pub fn end(&self) -> [f64; 3] {
        match self {
            Segment::Slow { samples, .. } => samples[samples.len() - 1].1,
            Segment::Jump { to, .. } => *to,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateOrbit {
    pub segments: Vec<Segment>,
    pub closed: bool,
}

impl CandidateOrbit {
    /// Segmented CSV: `segment,kind,t,x,y,z`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["segment", "kind", "t", "x", "y", "z"])?;
        for (i, seg) in self.segments.iter().enumerate() {
            match seg {
                Segment::Slow { samples, .. } => {
                    for (t, s) in samples {
                        w.write_record(&[
                            i.to_string(),
                            "slow".into(),
                            t.to_string(),
                            s[0].to_string(),
                            s[1].to_string(),
                            s[2].to_string(),
                        ])?;
                    }
                }
                Segment::Jump { from, to } => {
                    for (t, s) in [(0.0, from), (1.0, to)] {
                        w.write_record(&[
                            i.to_string(),
                            "jump".into(),
                            f64::to_string(&t),
                            s[0].to_string(),
                            s[1].to_string(),
                            s[2].to_string(),
                        ])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// All sample points in order.
    pub fn points(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for seg in &self.segments {
            match seg {
                Segment::Slow { samples, .. } => out.extend(samples.iter().map(|s| s.1)),
                Segment::Jump { from, to } => {
                    out.push(*from);
                    out.push(*to);
                }
            }
        }
        out
    }
}

/// Settings for building singular cycles.
#[derive(Clone, Copy, Debug)]
pub struct CycleOptions {
    /// Offset from the folded singularity where the repelling segment starts.
    pub seed_offset: f64,
    /// Radius of the closure disk around `(0, 0)`.
    pub closure_radius: f64,
    /// Desingularized time allowed for each slow segment.
    pub t_max: f64,
    pub tol: Tolerances,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            seed_offset: 1e-7,
            closure_radius: 1e-4,
            t_max: 1e5,
            tol: Tolerances::default(),
        }
    }
}

fn lift(xz: &[f64; 2]) -> [f64; 3] {
    [xz[0], critical_height(xz[0]), xz[1]]
}

fn slow_samples(traj: &crate::integrator::Trajectory<2>) -> Vec<(f64, [f64; 3])> {
    traj.t
        .iter()
        .zip(&traj.y)
        .map(|(t, y)| (t.abs(), lift(y)))
        .collect()
}

/// The repelling-sheet segment leaving the folded singularity at `(0, 0)`
/// along the eigendirection of `w = -1`, traced until the lower fold or the
/// time limit. Requires `nu = 0`.
pub fn repelling_segment(p: &ShnfParams, opts: &CycleOptions) -> Result<Vec<(f64, [f64; 3])>> {
    let field = |s: &[f64; 2]| desing_reduced_field(s[0], s[1], p);
    let fold = EventSpec::plane(0, FOLD_MINUS).terminal();
    let io = IntegrateOptions::backward(opts.t_max).tol(opts.tol).bound(1e3);
    let traj = integrate(&field, 0.0, [-opts.seed_offset, 0.0], &io, std::slice::from_ref(&fold))
        .checked()?;
    let mut samples = vec![(0.0, [0.0, 0.0, 0.0])];
    samples.extend(slow_samples(&traj));
    Ok(samples)
}

/// The five-part candidate: repelling segment, jump to the lower attracting
/// sheet, slow flow to the lower fold, jump to `x = 1/3`, slow flow back
/// toward the folded singularity. `jump_x` selects the jump point by its
/// `x`-coordinate on the repelling segment.
pub fn singular_cycle(p: &ShnfParams, jump_x: f64, opts: &CycleOptions) -> Result<CandidateOrbit> {
    if p.nu != 0.0 {
        return Err(ForgeError::InvalidArgument(
            "singular cycles are built at nu = 0".into(),
        ));
    }
    let rep = repelling_segment(p, opts)?;
    let x_end = rep[rep.len() - 1].1[0];
    if !(jump_x <= 0.0 && jump_x >= x_end) {
        return Err(ForgeError::Domain(format!(
            "jump choice x = {jump_x} (segment spans [{x_end}, 0])"
        )));
    }
    // Cut the repelling segment where it first reaches x = jump_x.
    let mut first = Vec::new();
    let mut jump_from = rep[0].1;
    for (i, (t, s)) in rep.iter().enumerate() {
        if s[0] > jump_x {
            first.push((*t, *s));
            continue;
        }
        if i == 0 {
            first.push((*t, *s));
            jump_from = *s;
        } else {
            let (t0, s0) = rep[i - 1];
            let w = (s0[0] - jump_x) / (s0[0] - s[0]);
            let z = s0[2] + w * (s[2] - s0[2]);
            let tt = t0 + w * (t - t0);
            jump_from = [jump_x, critical_height(jump_x), z];
            first.push((tt, jump_from));
        }
        break;
    }
    if jump_x >= 0.0 {
        first.truncate(1);
        jump_from = [0.0, 0.0, 0.0];
    }
    let mut segments = vec![Segment::Slow {
        sheet: SheetId::R,
        samples: first,
    }];

    let targets = jump_target(jump_from[0])?;
    let x1 = targets
        .minus
        .ok_or_else(|| ForgeError::Domain("jump from the lower fold".into()))?;
    let land = [x1, jump_from[1], jump_from[2]];
    segments.push(Segment::Jump {
        from: jump_from,
        to: land,
    });

    let field = |s: &[f64; 2]| desing_reduced_field(s[0], s[1], p);
    let io = IntegrateOptions::forward(opts.t_max).tol(opts.tol).bound(1e3);
    let fold = EventSpec::plane(0, FOLD_MINUS).rising().terminal();
    let lower = integrate(&field, 0.0, [x1, land[2]], &io, std::slice::from_ref(&fold)).checked()?;
    if !lower.stopped_on_event() {
        segments.push(Segment::Slow {
            sheet: SheetId::AMinus,
            samples: slow_samples(&lower),
        });
        return Ok(CandidateOrbit {
            segments,
            closed: false,
        });
    }
    let z_f = lower.last_state()[1];
    segments.push(Segment::Slow {
        sheet: SheetId::AMinus,
        samples: slow_samples(&lower),
    });
    let top = jump_target(FOLD_MINUS)?
        .plus
        .expect("the lower fold always has an upper landing point");
    let from = [FOLD_MINUS, FOLD_MINUS_HEIGHT, z_f];
    let to = [top, FOLD_MINUS_HEIGHT, z_f];
    segments.push(Segment::Jump { from, to });

    let r2 = opts.closure_radius * opts.closure_radius;
    let events = [
        EventSpec::new(move |s: &[f64; 2]| s[0] * s[0] + s[1] * s[1] - r2)
            .falling()
            .terminal(),
        EventSpec::plane(0, 0.0).falling().terminal(),
    ];
    let upper = integrate(&field, 0.0, [top, z_f], &io, &events).checked()?;
    let closed = upper.termination == Termination::Event { id: 0 };
    segments.push(Segment::Slow {
        sheet: SheetId::APlus,
        samples: slow_samples(&upper),
    });
    Ok(CandidateOrbit { segments, closed })
}

/// Singular cycles for several jump choices, computed in parallel.
pub fn singular_cycles(
    p: &ShnfParams,
    jump_xs: &[f64],
    opts: &CycleOptions,
) -> Vec<Result<CandidateOrbit>> {
    jump_xs
        .par_iter()
        .map(|&x| singular_cycle(p, x, opts))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(sheet_classify(0.0), SheetId::FoldZero);
        assert_eq!(sheet_classify(-1.0 / 3.0), SheetId::R);
        assert_eq!(sheet_classify(0.244), SheetId::APlus);
        assert_eq!(sheet_classify(-0.9), SheetId::AMinus);
        assert_eq!(sheet_classify(FOLD_MINUS), SheetId::FoldMinus);
    }

    #[test]
    fn jump_examples() {
        let t = jump_target(FOLD_MINUS).unwrap();
        assert!((t.plus.unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.minus, None);
        assert_eq!(t.dictated().unwrap().0, JumpBranch::Plus);
        let t = jump_target(0.0).unwrap();
        assert!((t.minus.unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(t.plus, None);
        let t = jump_target(-1.0 / 3.0).unwrap();
        assert!((t.plus.unwrap() - (3.0f64.sqrt() - 1.0) / 3.0).abs() < 1e-12);
        assert!(t.dictated().is_none());
        assert!(jump_target(0.1).is_err());
        assert!(jump_target(-0.7).is_err());
    }

    #[test]
    fn desingularized_examples() {
        let p = ShnfParams::new(0.01, 0.0, 0.4, -0.3, 1.1).unwrap();
        assert_eq!(desing_reduced_field(0.0, 0.0, &p), [0.0, 0.0]);
        let q = ShnfParams::new(0.01, 0.7, 0.4, -0.3, 1.1).unwrap();
        assert_eq!(desing_reduced_field(0.0, 1.0, &q), [1.0, 0.0]);
        let v = desing_reduced_field(FOLD_MINUS, FOLD_MINUS, &q);
        assert!(v[0].abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn folded_saddle_node_at_zero_nu() {
        let p = ShnfParams::new(0.01, 0.0, 0.4, -0.3, 1.1).unwrap();
        let f = folded_singularities(&p)[0];
        assert_eq!(f.kind, FoldedKind::SaddleNode);
        assert_eq!((f.w1, f.w2), (-1.0, 0.0));
    }

    #[test]
    fn focus_beyond_discriminant() {
        let p = ShnfParams::new(0.01, 0.2, 0.4, -0.3, 1.1).unwrap();
        assert_eq!(folded_singularities(&p)[0].kind, FoldedKind::Focus);
    }

    #[test]
    fn twist_values() {
        assert_eq!(twist_estimate(11.5159), 6);
        assert_eq!(twist_estimate(1.0), 1);
        assert_eq!(twist_estimate(3.0), 2);
    }
}
