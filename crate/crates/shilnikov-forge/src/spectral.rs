//! Equilibria, their Jacobians, the saddle-focus spectrum and the real Jordan basis.

use crate::error::{ForgeError, Result};
use crate::models::ShnfParams;
use nalgebra::{Complex, Matrix3, Vector3};
use serde::Serialize;

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, ascending, each polished by Newton steps.
pub fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let mut roots = if c3 == 0.0 {
        if c2 == 0.0 {
            if c1 == 0.0 {
                Vec::new()
            } else {
                vec![-c0 / c1]
            }
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc < 0.0 {
                Vec::new()
            } else {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
                if q == 0.0 {
                    vec![0.0, 0.0]
                } else {
                    vec![q / c2, c0 / q]
                }
            }
        }
    } else {
        match monic_cubic(c2 / c3, c1 / c3, c0 / c3) {
            CubicRoots::Three(r) => r.to_vec(),
            CubicRoots::OneReal(r, _) => vec![r],
        }
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((c3 * *r + c2) * *r + c1) * *r + c0;
            let df = (3.0 * c3 * *r + 2.0 * c2) * *r + c1;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

enum CubicRoots {
    Three([f64; 3]),
    OneReal(f64, Complex<f64>),
}

/// Roots of `x^3 + c2 x^2 + c1 x + c0` by the discriminant-branch closed form.
fn monic_cubic(c2: f64, c1: f64, c0: f64) -> CubicRoots {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        let r = t - shift;
        let re = -t / 2.0 - shift;
        let im = if u == 0.0 {
            0.0
        } else {
            (3.0f64.sqrt() / 2.0) * (u + p / (3.0 * u)).abs()
        };
        CubicRoots::OneReal(r, Complex::new(re, im))
    } else {
        let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
        let arg = if m == 0.0 {
            0.0
        } else {
            (3.0 * q / (p * m)).clamp(-1.0, 1.0)
        };
        let theta = arg.acos() / 3.0;
        let tau = 2.0 * std::f64::consts::PI / 3.0;
        CubicRoots::Three([
            m * theta.cos() - shift,
            m * (theta - tau).cos() - shift,
            m * (theta - 2.0 * tau).cos() - shift,
        ])
    }
}

/// All equilibria `(x, x^2 + x^3, x)`, sorted by `x`.
pub fn find_equilibria(p: &ShnfParams) -> Vec<[f64; 3]> {
    real_cubic_roots(p.b, p.b, p.a + p.c, p.nu)
        .into_iter()
        .map(|x| [x, x * x + x * x * x, x])
        .collect()
}

/// The unique equilibrium with `|x - center| <= half_width`.
pub fn equilibrium_in_window(p: &ShnfParams, center: f64, half_width: f64) -> Result<[f64; 3]> {
    let inside: Vec<_> = find_equilibria(p)
        .into_iter()
        .filter(|e| (e[0] - center).abs() <= half_width)
        .collect();
    if inside.len() == 1 {
        Ok(inside[0])
    } else {
        Err(ForgeError::EquilibriumWindow {
            found: inside.len(),
        })
    }
}

/// Analytic Jacobian of the normal form.
pub fn jacobian_at(s: &[f64; 3], p: &ShnfParams) -> Matrix3<f64> {
    p.jacobian(s)
}

/// Spectrum of a saddle-focus: `rho ± i omega` and the real eigenvalue `lambda`.
///
/// The complex eigenvector has unit Hermitian norm with its largest component
/// real and positive. The real Jordan basis is `P = [Re v, Im v, v_s]` with
/// `v_s` a unit vector whose first nonzero entry is positive, so that
/// `P^-1 J P = [[rho, omega, 0], [-omega, rho, 0], [0, 0, lambda]]`.
#[derive(Clone, Copy, Debug)]
pub struct EigenData {
    pub rho: f64,
    pub omega: f64,
    pub lambda: f64,
    pub complex_vector: [Complex<f64>; 3],
    pub real_vector: Vector3<f64>,
    pub p: Matrix3<f64>,
    pub p_inv: Matrix3<f64>,
}

impl EigenData {
    pub fn u1(&self) -> Vector3<f64> {
        self.p.column(0).into()
    }

    pub fn u2(&self) -> Vector3<f64> {
        self.p.column(1).into()
    }

    pub fn vs(&self) -> Vector3<f64> {
        self.real_vector
    }

    /// Coordinates of `x - origin` in the Jordan basis.
    pub fn to_jordan(&self, x: &[f64; 3], origin: &[f64; 3]) -> [f64; 3] {
        let d = Vector3::new(x[0] - origin[0], x[1] - origin[1], x[2] - origin[2]);
        let q = self.p_inv * d;
        [q[0], q[1], q[2]]
    }

    pub fn from_jordan(&self, q: &[f64; 3], origin: &[f64; 3]) -> [f64; 3] {
        let d = self.p * Vector3::new(q[0], q[1], q[2]);
        [origin[0] + d[0], origin[1] + d[1], origin[2] + d[2]]
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EigenSummary {
    pub rho: f64,
    pub omega: f64,
    pub lambda: f64,
    pub ratio: f64,
    pub shilnikov: bool,
}

fn char_poly(j: &Matrix3<f64>) -> (f64, f64, f64) {
    let tr = j.trace();
    let m2 = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)] + j[(0, 0)] * j[(2, 2)]
        - j[(0, 2)] * j[(2, 0)]
        + j[(1, 1)] * j[(2, 2)]
        - j[(1, 2)] * j[(2, 1)];
    (tr, m2, j.determinant())
}

fn cross<T>(a: [T; 3], b: [T; 3]) -> [T; 3]
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Sub<Output = T>,
{
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn null_vector_complex(j: &Matrix3<f64>, mu: Complex<f64>) -> [Complex<f64>; 3] {
    let row = |i: usize| -> [Complex<f64>; 3] {
        std::array::from_fn(|k| {
            let d = if i == k { mu } else { Complex::new(0.0, 0.0) };
            Complex::new(j[(i, k)], 0.0) - d
        })
    };
    let rows = [row(0), row(1), row(2)];
    let cands = [
        cross(rows[0], rows[1]),
        cross(rows[0], rows[2]),
        cross(rows[1], rows[2]),
    ];
    let norm = |v: &[Complex<f64>; 3]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let best = cands
        .iter()
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .copied()
        .expect("three candidates");
    let n = norm(&best).sqrt();
    let (imax, _) = best
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("three entries");
    let phase = best[imax].conj() / best[imax].norm();
    best.map(|c| c * phase / n)
}

fn null_vector_real(j: &Matrix3<f64>, mu: f64) -> Vector3<f64> {
    let m = j - Matrix3::identity() * mu;
    let rows: [[f64; 3]; 3] = std::array::from_fn(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]);
    let cands = [
        cross(rows[0], rows[1]),
        cross(rows[0], rows[2]),
        cross(rows[1], rows[2]),
    ];
    let best = cands
        .iter()
        .map(|c| Vector3::new(c[0], c[1], c[2]))
        .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
        .expect("three candidates");
    let mut v = best.normalize();
    if let Some(first) = v.iter().find(|c| **c != 0.0) {
        if *first < 0.0 {
            v = -v;
        }
    }
    v
}

/// Spectrum and real Jordan basis of a 3x3 matrix with one real eigenvalue
/// and one complex-conjugate pair.
pub fn eigen_decompose(j: &Matrix3<f64>) -> Result<EigenData> {
    let (tr, m2, det) = char_poly(j);
    let (mut lambda, mut mu) = match monic_cubic(-tr, m2, -det) {
        CubicRoots::Three(_) => return Err(ForgeError::NotSaddleFocus),
        CubicRoots::OneReal(r, c) => (r, c),
    };
    let poly = |x: Complex<f64>| ((x - tr) * x + m2) * x - det;
    let dpoly = |x: Complex<f64>| (x * 3.0 - 2.0 * tr) * x + m2;
    let lr = Complex::new(lambda, 0.0);
    let d = dpoly(lr);
    if d.norm() > 0.0 {
        lambda -= (poly(lr) / d).re;
    }
    let d = dpoly(mu);
    if d.norm() > 0.0 {
        mu -= poly(mu) / d;
    }
    if mu.im < 0.0 {
        mu = mu.conj();
    }
    if mu.im <= 0.0 {
        return Err(ForgeError::NotSaddleFocus);
    }
    let v = null_vector_complex(j, mu);
    let vs = null_vector_real(j, lambda);
    let p = Matrix3::from_columns(&[
        Vector3::new(v[0].re, v[1].re, v[2].re),
        Vector3::new(v[0].im, v[1].im, v[2].im),
        vs,
    ]);
    let p_inv = p
        .try_inverse()
        .ok_or_else(|| ForgeError::Degenerate("Jordan basis is singular".into()))?;
    Ok(EigenData {
        rho: mu.re,
        omega: mu.im,
        lambda,
        complex_vector: v,
        real_vector: vs,
        p,
        p_inv,
    })
}

/// `(holds, |rho / lambda|)`; holds iff `rho lambda < 0` and the ratio is below one.
pub fn shilnikov_check(e: &EigenData) -> Result<(bool, f64)> {
    shilnikov_condition(e.rho, e.lambda)
}

pub fn shilnikov_condition(rho: f64, lambda: f64) -> Result<(bool, f64)> {
    if lambda == 0.0 {
        return Err(ForgeError::Degenerate("lambda = 0".into()));
    }
    let ratio = (rho / lambda).abs();
    Ok((rho * lambda < 0.0 && ratio < 1.0, ratio))
}

pub fn summary(e: &EigenData) -> Result<EigenSummary> {
    let (shilnikov, ratio) = shilnikov_check(e)?;
    Ok(EigenSummary {
        rho: e.rho,
        omega: e.omega,
        lambda: e.lambda,
        ratio,
        shilnikov,
    })
}

/// The saddle-focus equilibrium together with its spectrum.
#[derive(Clone, Copy, Debug)]
pub struct SaddleFocus {
    pub point: [f64; 3],
    pub eig: EigenData,
}

/// Default half-width of the equilibrium window.
pub const EQ_WINDOW: f64 = 0.2;

impl SaddleFocus {
    pub fn new(p: &ShnfParams, center: f64, half_width: f64) -> Result<Self> {
        let point = equilibrium_in_window(p, center, half_width)?;
        let eig = eigen_decompose(&p.jacobian(&point))?;
        Ok(Self { point, eig })
    }

    /// Point at offset `r0` along angle `theta` in the unstable eigenplane.
    pub fn unstable_seed(&self, theta: f64, r0: f64) -> [f64; 3] {
        let d = self.eig.u1() * theta.cos() + self.eig.u2() * theta.sin();
        std::array::from_fn(|k| self.point[k] + r0 * d[k])
    }

    /// Point at signed offset `r0` along the stable eigenvector.
    pub fn stable_seed(&self, r0: f64) -> [f64; 3] {
        let v = self.eig.vs();
        std::array::from_fn(|k| self.point[k] + r0 * v[k])
    }

    pub fn to_jordan(&self, x: &[f64; 3]) -> [f64; 3] {
        self.eig.to_jordan(x, &self.point)
    }

    pub fn from_jordan(&self, q: &[f64; 3]) -> [f64; 3] {
        self.eig.from_jordan(q, &self.point)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ShnfParamsByEq;

    #[test]
    fn rotation_plus_contraction() {
        let j = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0);
        let e = eigen_decompose(&j).unwrap();
        assert!(e.rho.abs() < 1e-14);
        assert!((e.omega - 1.0).abs() < 1e-14);
        assert!((e.lambda + 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_real_eigenvalues_rejected() {
        let j = Matrix3::from_diagonal(&Vector3::new(1.0, 2.0, 3.0));
        assert!(matches!(eigen_decompose(&j), Err(ForgeError::NotSaddleFocus)));
    }

    #[test]
    fn beta_spectrum() {
        let p = ShnfParamsByEq::beta().to_params().unwrap();
        let sf = SaddleFocus::new(&p, -0.03, EQ_WINDOW).unwrap();
        let e = sf.eig;
        assert!((e.rho - 0.790204).abs() < 1e-5, "{}", e.rho);
        assert!((e.omega - 8.482321).abs() < 1e-5, "{}", e.omega);
        assert!((e.lambda + 1.576071).abs() < 1e-5, "{}", e.lambda);
        let (ok, ratio) = shilnikov_check(&e).unwrap();
        assert!(ok);
        assert!((ratio - 0.50137).abs() < 1e-4);
    }

    #[test]
    fn jordan_form_is_block_diagonal() {
        let p = ShnfParamsByEq::alpha_tilde().to_params().unwrap();
        let sf = SaddleFocus::new(&p, -0.03, EQ_WINDOW).unwrap();
        let e = sf.eig;
        let jp = e.p_inv * p.jacobian(&sf.point) * e.p;
        let expect = Matrix3::new(e.rho, e.omega, 0.0, -e.omega, e.rho, 0.0, 0.0, 0.0, e.lambda);
        assert!((jp - expect).abs().max() < 1e-8, "{jp}");
    }

    #[test]
    fn equilibrium_examples() {
        let p = ShnfParams::new(0.01, 0.0, 0.3, -0.2, 0.4).unwrap();
        assert!(find_equilibria(&p).iter().any(|e| e[0] == 0.0));
        let q = ShnfParams::new(0.01, 0.0, 0.0, 1.0, 0.0).unwrap();
        let xs: Vec<f64> = find_equilibria(&q).iter().map(|e| e[0]).collect();
        assert_eq!(xs.len(), 3);
        assert!((xs[0] + 1.0).abs() < 1e-12 && xs[1].abs() < 1e-12 && xs[2].abs() < 1e-12);
        let b = ShnfParamsByEq::beta().to_params().unwrap();
        let e = equilibrium_in_window(&b, -0.03, EQ_WINDOW).unwrap();
        assert!((e[0] + 0.03).abs() < 1e-10);
    }

    #[test]
    fn shilnikov_boundaries() {
        assert_eq!(shilnikov_condition(1.0, -1.0).unwrap(), (false, 1.0));
        assert!(!shilnikov_condition(1.0, 2.0).unwrap().0);
        assert!(shilnikov_condition(1.0, 0.0).is_err());
    }
}
