use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::coefficient::CoefficientField;
use crate::error::{Error, Result};

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn identity() -> [[f64; 3]; 3] {
    IDENTITY
}

/// One summand `(Gamma(x) / p) |M u|^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub gamma: CoefficientField,
    /// Row-major 3x3 matrix applied to the field before taking the norm.
    #[serde(default = "identity")]
    pub matrix: [[f64; 3]; 3],
    pub p: f64,
}

impl PowerTerm {
    pub fn isotropic(gamma: CoefficientField, p: f64) -> Self {
        PowerTerm {
            gamma,
            matrix: IDENTITY,
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gamma.validate()?;
        if !(self.p > 2.0 && self.p < 6.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent p = {} must satisfy 2 < p < 6",
                self.p
            )));
        }
        let det = self.nalgebra_matrix().determinant();
        if !(det.abs() > 1e-14) || !det.is_finite() {
            return Err(Error::InvalidParameter("matrix M must be invertible".into()));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.matrix == IDENTITY
    }

    fn nalgebra_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.matrix[i][j])
    }

    /// `(sigma_min, sigma_max)` of `M`.
    pub fn singular_values(&self) -> (f64, f64) {
        let s = self.nalgebra_matrix().singular_values();
        (s.min(), s.max())
    }

    /// `M` orthogonal, so the term depends on `|u|` only.
    pub fn is_radial(&self) -> bool {
        let m = self.nalgebra_matrix();
        (m.transpose() * m - Matrix3::identity()).abs().max() <= 1e-12
    }

    #[inline]
    fn apply(&self, u: [f64; 3]) -> [f64; 3] {
        if self.is_identity() {
            return u;
        }
        let m = &self.matrix;
        [
            m[0][0] * u[0] + m[0][1] * u[1] + m[0][2] * u[2],
            m[1][0] * u[0] + m[1][1] * u[1] + m[1][2] * u[2],
            m[2][0] * u[0] + m[2][1] * u[1] + m[2][2] * u[2],
        ]
    }

    #[inline]
    fn apply_transpose(&self, y: [f64; 3]) -> [f64; 3] {
        if self.is_identity() {
            return y;
        }
        let m = &self.matrix;
        [
            m[0][0] * y[0] + m[1][0] * y[1] + m[2][0] * y[2],
            m[0][1] * y[0] + m[1][1] * y[1] + m[2][1] * y[2],
            m[0][2] * y[0] + m[1][2] * y[1] + m[2][2] * y[2],
        ]
    }

    /// Value and u-gradient for a given coefficient value `gamma`.
    #[inline]
    pub fn eval_with(&self, gamma: f64, u: [f64; 3]) -> (f64, [f64; 3]) {
        let mu = self.apply(u);
        let r2 = mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2];
        if r2 == 0.0 {
            return (0.0, [0.0; 3]);
        }
        let pow_m2 = power_minus_two(r2, self.p);
        let value = gamma * pow_m2 * r2 / self.p;
        let s = gamma * pow_m2;
        let g = self.apply_transpose([s * mu[0], s * mu[1], s * mu[2]]);
        (value, g)
    }
}

/// `|y|^(p-2)` from `|y|^2`, with the common integer cases kept cheap.
#[inline]
fn power_minus_two(r2: f64, p: f64) -> f64 {
    if p == 4.0 {
        r2
    } else if p == 3.0 {
        r2.sqrt()
    } else {
        r2.powf(0.5 * (p - 2.0))
    }
}

/// Explicit constants for the growth, lower-bound and superquadraticity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Largest exponent.
    pub p: f64,
    /// `|f(x,u)| <= c (1 + |u|^(p-1))`.
    pub c: f64,
    /// `F(x,u) >= d |u|^p`.
    pub d: f64,
    /// `<f(x,u),u> >= theta F(x,u)`.
    pub theta: f64,
}

/// A sum of power terms `sum_i (Gamma_i(x)/p_i) |M_i u|^(p_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub terms: Vec<PowerTerm>,
}

impl NonlinearitySpec {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self> {
        let spec = NonlinearitySpec { terms };
        spec.validate()?;
        Ok(spec)
    }

    /// `(gamma/p) |u|^p` with constant `gamma`.
    pub fn power(gamma: f64, p: f64) -> Result<Self> {
        Self::new(vec![PowerTerm::isotropic(CoefficientField::constant(gamma), p)])
    }

    /// The degenerate zero nonlinearity. It fails the growth conditions and
    /// is only meant for linear fixtures.
    pub fn zero() -> Self {
        NonlinearitySpec { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidParameter("nonlinearity needs at least one term".into()));
        }
        self.terms.iter().try_for_each(PowerTerm::validate)
    }

    /// Built-in families are covered by the structural argument for power sums.
    pub fn certified(&self) -> bool {
        !self.is_zero()
    }

    pub fn is_radial(&self) -> bool {
        self.terms.iter().all(PowerTerm::is_radial)
    }

    pub fn max_exponent(&self) -> f64 {
        self.terms.iter().map(|t| t.p).fold(2.0, f64::max)
    }

    pub fn constants(&self) -> Constants {
        let p = self.max_exponent();
        let mut c = 0.0;
        let mut d = 0.0;
        let mut theta = f64::INFINITY;
        for t in &self.terms {
            let (smin, smax) = t.singular_values();
            c += t.gamma.max_value() * smax.powf(t.p);
            if t.p == p {
                d += t.gamma.min_value() * smin.powf(t.p) / t.p;
            }
            theta = theta.min(t.p);
        }
        Constants { p, c, d, theta }
    }

    pub fn eval(&self, x: [f64; 3], u: [f64; 3]) -> (f64, [f64; 3]) {
        let mut value = 0.0;
        let mut g = [0.0; 3];
        for t in &self.terms {
            let (v, gt) = t.eval_with(t.gamma.eval(x), u);
            value += v;
            for a in 0..3 {
                g[a] += gt[a];
            }
        }
        (value, g)
    }

    /// Coefficient values at the given points, one vector per term.
    pub fn tabulate(&self, points: &[[f64; 3]]) -> TabulatedNonlinearity {
        let gammas = self
            .terms
            .iter()
            .map(|t| match t.gamma {
                CoefficientField::Constant { value } => GammaTable::Constant(value),
                _ => GammaTable::Nodes(points.iter().map(|&x| t.gamma.eval(x)).collect()),
            })
            .collect();
        TabulatedNonlinearity {
            terms: self.terms.clone(),
            gammas,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        NonlinearitySpec {
            terms: self
                .terms
                .iter()
                .map(|t| PowerTerm {
                    gamma: t.gamma.scaled(s),
                    ..t.clone()
                })
                .collect(),
        }
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.terms.iter().all(|t| t.is_radial() && t.gamma.is_axisymmetric())
    }

    pub fn is_reflection_symmetric(&self, height: f64) -> bool {
        self.terms.iter().all(|t| {
            let m = &t.matrix;
            // M commutes with diag(1,1,-1)
            let z_ok = m[0][2] == 0.0 && m[1][2] == 0.0 && m[2][0] == 0.0 && m[2][1] == 0.0;
            z_ok && t.gamma.is_reflection_symmetric(height)
        })
    }
}

#[derive(Debug, Clone)]
enum GammaTable {
    Constant(f64),
    Nodes(Vec<f64>),
}

/// A spec with its coefficients sampled on a fixed set of quadrature nodes.
#[derive(Debug, Clone)]
pub struct TabulatedNonlinearity {
    terms: Vec<PowerTerm>,
    gammas: Vec<GammaTable>,
}

impl TabulatedNonlinearity {
    /// `(F, f)` at node `node` for field value `u`.
    #[inline]
    pub fn eval(&self, node: usize, u: [f64; 3]) -> (f64, [f64; 3]) {
        let mut value = 0.0;
        let mut g = [0.0; 3];
        for (t, table) in self.terms.iter().zip(&self.gammas) {
            let gamma = match table {
                GammaTable::Constant(c) => *c,
                GammaTable::Nodes(v) => v[node],
            };
            let (v, gt) = t.eval_with(gamma, u);
            value += v;
            g[0] += gt[0];
            g[1] += gt[1];
            g[2] += gt[2];
        }
        (value, g)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Anything providing `F(x,u)` and its u-gradient `f(x,u)`.
pub trait Potential: Send + Sync {
    fn value(&self, x: [f64; 3], u: [f64; 3]) -> f64;
    fn gradient(&self, x: [f64; 3], u: [f64; 3]) -> [f64; 3];

    fn name(&self) -> String {
        "potential".into()
    }

    /// Explicit constants when the family is covered structurally.
    fn certificate(&self) -> Option<Constants> {
        None
    }

    /// Exponent the caller claims for the growth condition, if any.
    fn declared_exponent(&self) -> Option<f64> {
        None
    }
}

impl Potential for NonlinearitySpec {
    fn value(&self, x: [f64; 3], u: [f64; 3]) -> f64 {
        self.eval(x, u).0
    }

    fn gradient(&self, x: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        self.eval(x, u).1
    }

    fn name(&self) -> String {
        format!("power sum with {} term(s)", self.terms.len())
    }

    fn certificate(&self) -> Option<Constants> {
        self.certified().then(|| self.constants())
    }

    fn declared_exponent(&self) -> Option<f64> {
        Some(self.max_exponent())
    }
}

/// Uncertified radial potential `sum_k c_k |u|^(e_k)`, the config-level
/// stand-in for an arbitrary user-supplied `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSeries {
    /// `(exponent, coefficient)` pairs, exponents >= 2.
    pub terms: Vec<(f64, f64)>,
    #[serde(default)]
    pub declared_p: Option<f64>,
}

impl RadialSeries {
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        RadialSeries {
            terms,
            declared_p: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() || self.terms.iter().any(|(e, c)| !(*e >= 2.0) || !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "radial series needs exponents >= 2 and finite coefficients".into(),
            ));
        }
        Ok(())
    }
}

impl Potential for RadialSeries {
    fn value(&self, _x: [f64; 3], u: [f64; 3]) -> f64 {
        let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        self.terms.iter().map(|(e, c)| c * r.powf(*e)).sum()
    }

    fn gradient(&self, _x: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if r == 0.0 {
            return [0.0; 3];
        }
        let s: f64 = self.terms.iter().map(|(e, c)| c * e * r.powf(e - 2.0)).sum();
        [s * u[0], s * u[1], s * u[2]]
    }

    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(e, c)| format!("{c}|u|^{e}")).collect();
        parts.join(" + ")
    }

    fn declared_exponent(&self) -> Option<f64> {
        self.declared_p
    }
}

/// Arbitrary closure-backed potential. When no gradient is supplied it is
/// taken by central differences.
pub struct BlackBox {
    pub label: String,
    pub value_fn: Box<dyn Fn([f64; 3], [f64; 3]) -> f64 + Send + Sync>,
    pub gradient_fn: Option<Box<dyn Fn([f64; 3], [f64; 3]) -> [f64; 3] + Send + Sync>>,
    pub declared_p: Option<f64>,
}

impl BlackBox {
    pub fn new(label: &str, value_fn: impl Fn([f64; 3], [f64; 3]) -> f64 + Send + Sync + 'static) -> Self {
        BlackBox {
            label: label.into(),
            value_fn: Box::new(value_fn),
            gradient_fn: None,
            declared_p: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn([f64; 3], [f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.gradient_fn = Some(Box::new(g));
        self
    }
}

impl Potential for BlackBox {
    fn value(&self, x: [f64; 3], u: [f64; 3]) -> f64 {
        (self.value_fn)(x, u)
    }

    fn gradient(&self, x: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        if let Some(g) = &self.gradient_fn {
            return g(x, u);
        }
        central_difference(|v| (self.value_fn)(x, v), u)
    }

    fn name(&self) -> String {
        self.label.clone()
    }

    fn declared_exponent(&self) -> Option<f64> {
        self.declared_p
    }
}

pub(crate) fn central_difference(f: impl Fn([f64; 3]) -> f64, u: [f64; 3]) -> [f64; 3] {
    let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let h = 1e-5 * (1.0 + norm);
    let mut g = [0.0; 3];
    for a in 0..3 {
        let mut up = u;
        let mut dn = u;
        up[a] += h;
        dn[a] -= h;
        g[a] = (f(up) - f(dn)) / (2.0 * h);
    }
    g
}

/// Result of translating material parameters into a cubic Kerr nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub struct KerrModel {
    pub spec: NonlinearitySpec,
    pub lambda: f64,
    /// Zero frequency: no nonlinearity and `lambda = 0`.
    pub degenerate: bool,
}

/// Kerr medium: `f = mu omega^2 alpha(x) |E|^2 E` and `lambda = -mu omega^2 eps`.
pub fn kerr_from_physics(eps: f64, mu: f64, omega: f64, alpha: &CoefficientField) -> Result<KerrModel> {
    if !(eps > 0.0 && eps.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "permittivity and permeability must be positive, got eps = {eps}, mu = {mu}"
        )));
    }
    if !omega.is_finite() {
        return Err(Error::InvalidParameter("frequency must be finite".into()));
    }
    alpha.validate()?;
    let scale = mu * omega * omega;
    if scale == 0.0 {
        return Ok(KerrModel {
            spec: NonlinearitySpec::zero(),
            lambda: 0.0,
            degenerate: true,
        });
    }
    let spec = NonlinearitySpec::new(vec![PowerTerm::isotropic(alpha.scaled(scale), 4.0)])?;
    Ok(KerrModel {
        spec,
        lambda: -scale * eps,
        degenerate: false,
    })
}
