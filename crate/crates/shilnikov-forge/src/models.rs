//! Vector fields of the singular Hopf normal form and the Koper model, their
//! parameter sets, and the exact coordinate and parameter transforms between them.
//!
//! Normal form, with `y - x^3 - x^2` as the fast nullcline:
//!
//! ```text
//! eps x' = y - x^3 - x^2
//!     y' = z - x
//!     z' = -nu - a x - b y - c z
//! ```
//!
//! Koper model:
//!
//! ```text
//! eps1 u' = k v - u^3 + 3 u - lambda_k
//!      v' = u - 2 v + w
//!      w' = eps2 (v - w)
//! ```

use crate::error::{ForgeError, Result};
use crate::integrator::VectorField;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Parameters `(eps, nu, a, b, c)` of the normal form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShnfParams {
    pub eps: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ShnfParams {
    pub fn new(eps: f64, nu: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self { eps, nu, a, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps, self.nu, self.a, self.b, self.c];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ForgeError::InvalidArgument("non-finite parameter".into()));
        }
        if self.eps <= 0.0 {
            return Err(ForgeError::InvalidArgument("eps must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn field(&self, s: &[f64; 3]) -> [f64; 3] {
        let [x, y, z] = *s;
        [
            (y - x * x * x - x * x) / self.eps,
            z - x,
            -self.nu - self.a * x - self.b * y - self.c * z,
        ]
    }

    pub fn jacobian(&self, s: &[f64; 3]) -> Matrix3<f64> {
        let x = s[0];
        Matrix3::new(
            (-3.0 * x * x - 2.0 * x) / self.eps,
            1.0 / self.eps,
            0.0,
            -1.0,
            0.0,
            1.0,
            -self.a,
            -self.b,
            -self.c,
        )
    }

    /// Residual of the Koper constraint at these `(a, b, c)`.
    pub fn koper_residual(&self) -> f64 {
        koper_constraint(self.a, self.b, self.c)
    }
}

impl VectorField<3> for ShnfParams {
    #[inline]
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        self.field(y)
    }
}

/// The normal form parameterized by the equilibrium position `x_eq` in place of `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShnfParamsByEq {
    pub eps: f64,
    pub x_eq: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ShnfParamsByEq {
    pub fn new(eps: f64, x_eq: f64, a: f64, b: f64, c: f64) -> Self {
        Self { eps, x_eq, a, b, c }
    }

    /// The grid centre used for the first homoclinic search.
    pub fn alpha_tilde() -> Self {
        Self::new(0.01, -0.03, -0.2515348, -1.6508230, 1.0)
    }

    /// The homoclinic point on the Koper constraint surface.
    pub fn beta() -> Self {
        Self::new(0.01, -0.03, -4.416165, 2.891404, 5.725663)
    }

    pub fn nu(&self) -> f64 {
        nu_from_xeq(self.x_eq, self.a, self.b, self.c)
    }

    pub fn to_params(&self) -> Result<ShnfParams> {
        ShnfParams::new(self.eps, self.nu(), self.a, self.b, self.c)
    }

    pub fn with_abc(&self, a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c, ..*self }
    }

    pub fn abc(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }
}

/// `nu` placing an equilibrium at `x = x_eq`.
pub fn nu_from_xeq(x_eq: f64, a: f64, b: f64, c: f64) -> f64 {
    -x_eq * (a + b * x_eq * (x_eq + 1.0) + c)
}

/// `2b + a(a + c)`, zero exactly on the image of the Koper parameter map.
pub fn koper_constraint(a: f64, b: f64, c: f64) -> f64 {
    2.0 * b + a * (a + c)
}

/// Parameters `(eps1, eps2, k, lambda_k)` of the Koper model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KoperParams {
    pub eps1: f64,
    pub eps2: f64,
    pub k: f64,
    pub lambda_k: f64,
}

impl KoperParams {
    pub fn new(eps1: f64, eps2: f64, k: f64, lambda_k: f64) -> Result<Self> {
        let p = Self {
            eps1,
            eps2,
            k,
            lambda_k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.eps1, self.eps2, self.k, self.lambda_k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ForgeError::InvalidArgument("non-finite parameter".into()));
        }
        if self.eps1 <= 0.0 || self.eps2 <= 0.0 {
            return Err(ForgeError::InvalidArgument(
                "eps1 and eps2 must be positive".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn field(&self, s: &[f64; 3]) -> [f64; 3] {
        let [u, v, w] = *s;
        [
            (self.k * v - u * u * u + 3.0 * u - self.lambda_k) / self.eps1,
            u - 2.0 * v + w,
            self.eps2 * (v - w),
        ]
    }

    /// Factor relating Koper time to normal-form time.
    pub fn time_factor(&self) -> f64 {
        -self.k / 9.0
    }
}

impl VectorField<3> for KoperParams {
    #[inline]
    fn eval(&self, y: &[f64; 3]) -> [f64; 3] {
        self.field(y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Shnf,
    Koper,
}

/// A point tagged with its chart: `(x, y, z)` or `(u, v, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub chart: Chart,
    pub coords: [f64; 3],
}

impl State3 {
    pub fn shnf(x: f64, y: f64, z: f64) -> Self {
        Self {
            chart: Chart::Shnf,
            coords: [x, y, z],
        }
    }

    pub fn koper(u: f64, v: f64, w: f64) -> Self {
        Self {
            chart: Chart::Koper,
            coords: [u, v, w],
        }
    }

    fn expect(&self, chart: Chart) -> Result<()> {
        if self.chart != chart {
            return Err(ForgeError::InvalidArgument(format!(
                "state is in the {:?} chart, expected {:?}",
                self.chart, chart
            )));
        }
        if self.coords.iter().any(|v| !v.is_finite()) {
            return Err(ForgeError::InvalidArgument("non-finite state".into()));
        }
        Ok(())
    }
}

/// Normal-form derivative at `s`.
pub fn eval_shnf(s: &State3, p: &ShnfParams) -> Result<State3> {
    s.expect(Chart::Shnf)?;
    p.validate()?;
    let d = p.field(&s.coords);
    Ok(State3 {
        chart: Chart::Shnf,
        coords: d,
    })
}

/// Koper derivative at `s`.
pub fn eval_koper(s: &State3, p: &KoperParams) -> Result<State3> {
    s.expect(Chart::Koper)?;
    p.validate()?;
    let d = p.field(&s.coords);
    Ok(State3 {
        chart: Chart::Koper,
        coords: d,
    })
}

/// Koper parameters to normal-form parameters.
pub fn koper_to_shnf_params(p: &KoperParams) -> Result<ShnfParams> {
    p.validate()?;
    if p.k == 0.0 {
        return Err(ForgeError::SingularTransform("k = 0".into()));
    }
    let k = p.k;
    let k2 = k * k;
    ShnfParams::new(
        -k * p.eps1 / 81.0,
        (3.0 * p.lambda_k - 6.0 - 3.0 * k) * p.eps2 / k2,
        18.0 / k,
        81.0 * p.eps2 / k2,
        -9.0 * (p.eps2 + 2.0) / k,
    )
}

/// Normal-form parameters back to Koper parameters; `c` is not used because
/// it is fixed by `eps2` and `k` on the image of the forward map.
pub fn shnf_to_koper_params(p: &ShnfParams) -> Result<KoperParams> {
    if p.a == 0.0 {
        return Err(ForgeError::SingularTransform("a = 0".into()));
    }
    let k = 18.0 / p.a;
    let eps2 = p.b * k * k / 81.0;
    if eps2 == 0.0 {
        return Err(ForgeError::SingularTransform("b = 0".into()));
    }
    let eps1 = -81.0 * p.eps / k;
    let lambda_k = p.nu * k * k / (3.0 * eps2) + 2.0 + k;
    KoperParams::new(eps1, eps2, k, lambda_k)
        .map_err(|_| ForgeError::Domain(format!("Koper image ({eps1}, {eps2}, {k}, {lambda_k})")))
}

/// Koper state to normal-form state under parameters `p`.
pub fn koper_to_shnf_state(s: &[f64; 3], p: &KoperParams) -> [f64; 3] {
    let [u, v, w] = *s;
    [
        (u - 1.0) / 3.0,
        (p.k * v - p.lambda_k + 2.0) / 27.0,
        (2.0 * v - w - 1.0) / 3.0,
    ]
}

/// Normal-form state back to the Koper chart under parameters `p`.
pub fn shnf_to_koper_state(s: &[f64; 3], p: &KoperParams) -> [f64; 3] {
    let [x, y, z] = *s;
    let u = 3.0 * x + 1.0;
    let v = (27.0 * y + p.lambda_k - 2.0) / p.k;
    let w = 2.0 * v - 1.0 - 3.0 * z;
    [u, v, w]
}

/// Derivative of the state map, applied to a Koper tangent vector.
pub fn push_forward(d: &[f64; 3], p: &KoperParams) -> [f64; 3] {
    [d[0] / 3.0, p.k * d[1] / 27.0, (2.0 * d[1] - d[2]) / 3.0]
}

/// Maps a Koper state and parameters into the normal form.
pub fn transform(s: &State3, p: &KoperParams) -> Result<(State3, ShnfParams)> {
    s.expect(Chart::Koper)?;
    let q = koper_to_shnf_params(p)?;
    let c = koper_to_shnf_state(&s.coords, p);
    Ok((
        State3 {
            chart: Chart::Shnf,
            coords: c,
        },
        q,
    ))
}

/// Inverse of [`transform`].
pub fn inverse_transform(s: &State3, p: &ShnfParams) -> Result<(State3, KoperParams)> {
    s.expect(Chart::Shnf)?;
    let q = shnf_to_koper_params(p)?;
    let c = shnf_to_koper_state(&s.coords, &q);
    Ok((
        State3 {
            chart: Chart::Koper,
            coords: c,
        },
        q,
    ))
}

/// Parameter document with a `model` tag, as echoed in run manifests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ParamsDoc {
    Shnf {
        eps: f64,
        nu: f64,
        a: f64,
        b: f64,
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_eq: Option<f64>,
    },
    Koper {
        eps1: f64,
        eps2: f64,
        k: f64,
        lambda_k: f64,
    },
}

impl From<&ShnfParams> for ParamsDoc {
    fn from(p: &ShnfParams) -> Self {
        ParamsDoc::Shnf {
            eps: p.eps,
            nu: p.nu,
            a: p.a,
            b: p.b,
            c: p.c,
            x_eq: None,
        }
    }
}

impl From<&ShnfParamsByEq> for ParamsDoc {
    fn from(p: &ShnfParamsByEq) -> Self {
        ParamsDoc::Shnf {
            eps: p.eps,
            nu: p.nu(),
            a: p.a,
            b: p.b,
            c: p.c,
            x_eq: Some(p.x_eq),
        }
    }
}

impl From<&KoperParams> for ParamsDoc {
    fn from(p: &KoperParams) -> Self {
        ParamsDoc::Koper {
            eps1: p.eps1,
            eps2: p.eps2,
            k: p.k,
            lambda_k: p.lambda_k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shnf_field_by_hand() {
        let p = ShnfParams::new(0.01, 0.0, 1.0, 1.0, 1.0).unwrap();
        let d = eval_shnf(&State3::shnf(1.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(d.coords, [-200.0, -1.0, -1.0]);
        let origin = eval_shnf(&State3::shnf(0.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(origin.coords, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn equilibrium_from_xeq_is_stationary() {
        let q = ShnfParamsByEq::beta();
        let p = q.to_params().unwrap();
        let x = q.x_eq;
        let d = p.field(&[x, x * x + x * x * x, x]);
        assert!(d.iter().all(|v| v.abs() < 1e-15), "{d:?}");
    }

    #[test]
    fn koper_field_by_hand() {
        let p = KoperParams::new(0.1, 1.0, 1.0, 2.0).unwrap();
        let d = eval_koper(&State3::koper(0.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(d.coords, [-20.0, 0.0, 0.0]);
        let q = KoperParams::new(0.1, 0.7, -3.0, 0.0).unwrap();
        assert_eq!(q.field(&[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        // u = 1, w = v and k v + 2 = lambda_k with w = 2v - 1, so v = w = 1.
        let r = KoperParams::new(0.1, 0.7, -3.0, -1.0).unwrap();
        let d = r.field(&[1.0, 1.0, 1.0]);
        assert!(d.iter().all(|v| v.abs() < 1e-14), "{d:?}");
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_from_xeq(0.0, 1.0, 2.0, 3.0), 0.0);
        assert_eq!(nu_from_xeq(-0.03, 0.0, 0.0, 0.0), 0.0);
        let q = ShnfParamsByEq::beta();
        assert!((q.nu() - 0.0367607).abs() < 1e-6, "{}", q.nu());
    }

    #[test]
    fn koper_constraint_examples() {
        assert_eq!(koper_constraint(0.0, 0.0, 0.0), 0.0);
        assert_eq!(koper_constraint(2.0, -3.0, 1.0), 0.0);
        let q = ShnfParamsByEq::beta();
        assert!(koper_constraint(q.a, q.b, q.c).abs() <= 5e-4);
    }

    #[test]
    fn beta_inverse_map() {
        let p = ShnfParamsByEq::beta().to_params().unwrap();
        let k = shnf_to_koper_params(&p).unwrap();
        assert!((k.k + 4.07594).abs() < 1e-5);
        assert!((k.eps2 - 0.59301).abs() < 5e-5);
        assert!((k.eps1 - 0.19873).abs() < 1e-5);
        assert!((k.lambda_k + 1.7326).abs() < 1e-4);
    }

    #[test]
    fn fold_state_maps_to_zero() {
        let p = KoperParams::new(0.2, 0.6, -4.0, -1.7).unwrap();
        assert_eq!(koper_to_shnf_state(&[1.0, 0.3, 0.1], &p)[0], 0.0);
    }

    #[test]
    fn inverse_rejects_zero_a() {
        let p = ShnfParams::new(0.01, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            shnf_to_koper_params(&p),
            Err(ForgeError::SingularTransform(_))
        ));
    }

    #[test]
    fn chart_mismatch_is_rejected() {
        let p = ShnfParams::new(0.01, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(eval_shnf(&State3::koper(0.0, 0.0, 0.0), &p).is_err());
        assert!(eval_shnf(&State3::shnf(f64::NAN, 0.0, 0.0), &p).is_err());
    }

    #[test]
    fn params_doc_round_trip() {
        let doc = ParamsDoc::from(&ShnfParamsByEq::beta());
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"model\":\"shnf\""));
        let back: ParamsDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);
    }
}
