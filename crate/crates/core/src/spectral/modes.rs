//! Closed-form cavity modes of the curl-curl operator on a box.
//!
//! Every mode field shares one separable template: component `i` carries
//! `cos(k_i x_i)` along its own axis and `sin(k_j x_j)` along the other two,
//!
//! ```text
//! E(x) = (a1 C1 S2 S3, a2 S1 C2 S3, a3 S1 S2 C3),   Ci = cos(k_i x_i), Si = sin(k_i x_i).
//! ```
//!
//! The sine factors vanish on the faces normal to the other axes, so the
//! tangential components vanish on every face. Divergence-free modes take
//! `a . k = 0`; gradient modes are `grad(N S1 S2 S3)`, i.e. `a = N k`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::domain::BoxDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    #[serde(rename = "divfree")]
    DivFree,
    Gradient,
}

impl ModeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeKind::DivFree => "divfree",
            ModeKind::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub k: [u32; 3],
    pub kind: ModeKind,
    pub polarization: u8,
}

impl ModeIndex {
    pub fn new(k: [u32; 3], kind: ModeKind, polarization: u8) -> Result<Self> {
        let nonzero = k.iter().filter(|&&ki| ki >= 1).count();
        let ok = match kind {
            ModeKind::Gradient => nonzero == 3 && polarization == 0,
            ModeKind::DivFree => match nonzero {
                3 => polarization <= 1,
                2 => polarization == 0,
                _ => false,
            },
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "no {} mode with k = {k:?}, polarization {polarization}",
                kind.as_str()
            )));
        }
        Ok(Self {
            k,
            kind,
            polarization,
        })
    }

    pub fn divfree(k: [u32; 3], polarization: u8) -> Result<Self> {
        Self::new(k, ModeKind::DivFree, polarization)
    }

    pub fn gradient(k: [u32; 3]) -> Result<Self> {
        Self::new(k, ModeKind::Gradient, 0)
    }
}

/// One L2-normalized basis field.
///
/// For gradient modes the field is `grad phi` with `phi` the L2-normalized
/// Dirichlet eigenfunction, so `|grad phi|_2^2 = eigenvalue`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub index: ModeIndex,
    pub eigenvalue: f64,
    wavevector: [f64; 3],
    amplitude: [f64; 3],
}

impl Mode {
    fn build(domain: &BoxDomain, index: ModeIndex) -> Self {
        let kv = [
            domain.wavenumber(0, index.k[0]),
            domain.wavenumber(1, index.k[1]),
            domain.wavenumber(2, index.k[2]),
        ];
        let eigenvalue = kv.iter().map(|k| k * k).sum();
        let l = domain.edges();
        let amplitude = match index.kind {
            ModeKind::Gradient => {
                let n = (8.0 / domain.volume()).sqrt();
                [n * kv[0], n * kv[1], n * kv[2]]
            }
            ModeKind::DivFree => {
                let c = polarization_vector(kv, index.k, index.polarization);
                // int E_i^2 = c_i^2 prod_j I_ij
                let mut norm2 = 0.0;
                for i in 0..3 {
                    let mut prod = c[i] * c[i];
                    for j in 0..3 {
                        prod *= if index.k[j] >= 1 {
                            0.5 * l[j]
                        } else if i == j {
                            l[j]
                        } else {
                            0.0
                        };
                    }
                    norm2 += prod;
                }
                let s = 1.0 / norm2.sqrt();
                [s * c[0], s * c[1], s * c[2]]
            }
        };
        Self {
            index,
            eigenvalue,
            wavevector: kv,
            amplitude,
        }
    }

    pub fn wavevector(&self) -> [f64; 3] {
        self.wavevector
    }

    pub fn amplitude(&self) -> [f64; 3] {
        self.amplitude
    }

    /// Unit polarization direction `a / |a|`.
    pub fn polarization(&self) -> [f64; 3] {
        let n = norm3(self.amplitude);
        [
            self.amplitude[0] / n,
            self.amplitude[1] / n,
            self.amplitude[2] / n,
        ]
    }

    /// Field value at `x`.
    pub fn field_at(&self, x: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.trig(x);
        let a = self.amplitude;
        [
            a[0] * c[0] * s[1] * s[2],
            a[1] * s[0] * c[1] * s[2],
            a[2] * s[0] * s[1] * c[2],
        ]
    }

    /// `curl E = (k x a)` on the complementary template (one sine, two cosines).
    pub fn curl_at(&self, x: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.trig(x);
        let b = cross(self.wavevector, self.amplitude);
        [
            b[0] * s[0] * c[1] * c[2],
            b[1] * c[0] * s[1] * c[2],
            b[2] * c[0] * c[1] * s[2],
        ]
    }

    /// The scalar potential `phi` of a gradient mode; zero for div-free modes.
    pub fn potential_at(&self, x: [f64; 3]) -> f64 {
        match self.index.kind {
            ModeKind::DivFree => 0.0,
            ModeKind::Gradient => {
                let (s, _) = self.trig(x);
                (8.0 / self.volume_from_amplitude()).sqrt() * s[0] * s[1] * s[2]
            }
        }
    }

    fn volume_from_amplitude(&self) -> f64 {
        // a = sqrt(8/V) k  =>  V = 8 |k|^2 / |a|^2
        8.0 * self.eigenvalue / dot3(self.amplitude, self.amplitude)
    }

    fn trig(&self, x: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let mut s = [0.0; 3];
        let mut c = [0.0; 3];
        for a in 0..3 {
            let (sa, ca) = (self.wavevector[a] * x[a]).sin_cos();
            s[a] = sa;
            c[a] = ca;
        }
        (s, c)
    }

    /// Symbolic form of the field, for analytic differentiation.
    pub fn separable(&self) -> SeparableField {
        let kv = self.wavevector;
        let mut terms = Vec::with_capacity(3);
        for i in 0..3 {
            let mut factors = [Factor::sin(0.0); 3];
            for j in 0..3 {
                factors[j] = if i == j {
                    Factor::cos(kv[j])
                } else {
                    Factor::sin(kv[j])
                };
            }
            terms.push(SeparableTerm {
                component: i,
                coeff: self.amplitude[i],
                factors,
            });
        }
        SeparableField { terms }
    }
}

fn polarization_vector(kv: [f64; 3], k: [u32; 3], pol: u8) -> [f64; 3] {
    if let Some(j) = k.iter().position(|&ki| ki == 0) {
        let mut c = [0.0; 3];
        c[j] = 1.0;
        return c;
    }
    let c0 = normalize3(cross(kv, [0.0, 0.0, 1.0]));
    if pol == 0 {
        c0
    } else {
        normalize3(cross(kv, c0))
    }
}

/// Cavity-mode basis truncated at `|k|^2 <= cutoff`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeBasis {
    pub domain: BoxDomain,
    pub cutoff: f64,
    pub divfree: Vec<Mode>,
    pub gradient: Vec<Mode>,
    /// Set when no div-free mode lies below the cutoff.
    pub degenerate: bool,
}

/// Enumerate every div-free and gradient mode with `|k|^2 <= cutoff`,
/// sorted by (eigenvalue, k, polarization).
pub fn enumerate_modes(domain: &BoxDomain, cutoff: f64) -> Result<ModeBasis> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    let tol = 1e-12 * cutoff.max(1.0);
    let l = domain.edges();
    let kmax: Vec<u32> = (0..3)
        .map(|a| (cutoff.sqrt() * l[a] / std::f64::consts::PI).floor() as u32 + 1)
        .collect();
    let mut divfree = Vec::new();
    let mut gradient = Vec::new();
    for k1 in 0..=kmax[0] {
        for k2 in 0..=kmax[1] {
            for k3 in 0..=kmax[2] {
                let k = [k1, k2, k3];
                let ev: f64 = (0..3).map(|a| domain.wavenumber(a, k[a]).powi(2)).sum();
                if ev > cutoff + tol {
                    continue;
                }
                let nonzero = k.iter().filter(|&&ki| ki >= 1).count();
                if nonzero < 2 {
                    continue;
                }
                let npol = if nonzero == 3 { 2 } else { 1 };
                for pol in 0..npol {
                    let idx = ModeIndex::divfree(k, pol)?;
                    divfree.push(Mode::build(domain, idx));
                }
                if nonzero == 3 {
                    gradient.push(Mode::build(domain, ModeIndex::gradient(k)?));
                }
            }
        }
    }
    sort_modes(&mut divfree);
    sort_modes(&mut gradient);
    let degenerate = divfree.is_empty();
    Ok(ModeBasis {
        domain: *domain,
        cutoff,
        divfree,
        gradient,
        degenerate,
    })
}

fn sort_modes(modes: &mut [Mode]) {
    modes.sort_by(|a, b| {
        a.eigenvalue
            .total_cmp(&b.eigenvalue)
            .then(a.index.k.cmp(&b.index.k))
            .then(a.index.polarization.cmp(&b.index.polarization))
    });
}

impl ModeBasis {
    pub fn n_divfree(&self) -> usize {
        self.divfree.len()
    }

    pub fn n_gradient(&self) -> usize {
        self.gradient.len()
    }

    pub fn dim(&self) -> usize {
        self.divfree.len() + self.gradient.len()
    }

    pub fn ensure_usable(&self) -> Result<()> {
        if self.degenerate || self.divfree.is_empty() {
            Err(Error::DegenerateBasis)
        } else {
            Ok(())
        }
    }

    /// Position of a mode in its family list.
    pub fn position(&self, index: &ModeIndex) -> Option<usize> {
        let list = match index.kind {
            ModeKind::DivFree => &self.divfree,
            ModeKind::Gradient => &self.gradient,
        };
        list.iter().position(|m| m.index == *index)
    }

    /// Sub-basis keeping the listed modes (in basis order).
    pub fn restrict(&self, divfree: &[usize], gradient: &[usize]) -> Result<ModeBasis> {
        let pick = |list: &[Mode], idx: &[usize]| -> Result<Vec<Mode>> {
            let mut idx = idx.to_vec();
            idx.sort_unstable();
            idx.dedup();
            idx.iter()
                .map(|&i| {
                    list.get(i).cloned().ok_or_else(|| {
                        Error::Incompatible(format!("mode position {i} out of range"))
                    })
                })
                .collect()
        };
        let divfree = pick(&self.divfree, divfree)?;
        let gradient = pick(&self.gradient, gradient)?;
        Ok(ModeBasis {
            domain: self.domain,
            cutoff: self.cutoff,
            degenerate: divfree.is_empty(),
            divfree,
            gradient,
        })
    }

    /// Sub-basis selected by mode indices.
    pub fn select(&self, modes: &[ModeIndex]) -> Result<ModeBasis> {
        let mut df = Vec::new();
        let mut gr = Vec::new();
        for m in modes {
            let pos = self.position(m).ok_or_else(|| {
                Error::Incompatible(format!("mode {m:?} is not in the basis"))
            })?;
            match m.kind {
                ModeKind::DivFree => df.push(pos),
                ModeKind::Gradient => gr.push(pos),
            }
        }
        self.restrict(&df, &gr)
    }

    /// Largest integer index per axis over all modes.
    pub fn kmax(&self) -> [u32; 3] {
        let mut k = [0u32; 3];
        for m in self.divfree.iter().chain(&self.gradient) {
            for a in 0..3 {
                k[a] = k[a].max(m.index.k[a]);
            }
        }
        k
    }

    pub fn smallest_eigenvalue(&self) -> Option<f64> {
        self.divfree.first().map(|m| m.eigenvalue)
    }

    /// SHA-256 over the domain and the ordered mode list.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in self.domain.edges() {
            h.update(e.to_le_bytes());
        }
        for m in self.divfree.iter().chain(&self.gradient) {
            h.update([m.index.kind as u8, m.index.polarization]);
            for k in m.index.k {
                h.update(k.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trig {
    Sin,
    Cos,
}

/// `sin(k x)` or `cos(k x)` along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub trig: Trig,
    pub k: f64,
}

impl Factor {
    pub fn sin(k: f64) -> Self {
        Self { trig: Trig::Sin, k }
    }

    pub fn cos(k: f64) -> Self {
        Self { trig: Trig::Cos, k }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.trig {
            Trig::Sin => (self.k * x).sin(),
            Trig::Cos => (self.k * x).cos(),
        }
    }

    /// Derivative as `(scale, factor)`.
    fn derivative(&self) -> (f64, Factor) {
        match self.trig {
            Trig::Sin => (self.k, Factor::cos(self.k)),
            Trig::Cos => (-self.k, Factor::sin(self.k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm {
    pub component: usize,
    pub coeff: f64,
    pub factors: [Factor; 3],
}

impl SeparableTerm {
    fn eval(&self, x: [f64; 3]) -> f64 {
        self.coeff * self.factors[0].eval(x[0]) * self.factors[1].eval(x[1]) * self.factors[2].eval(x[2])
    }

    fn partial(&self, axis: usize, component: usize, sign: f64) -> SeparableTerm {
        let (s, f) = self.factors[axis].derivative();
        let mut factors = self.factors;
        factors[axis] = f;
        SeparableTerm {
            component,
            coeff: sign * s * self.coeff,
            factors,
        }
    }
}

/// Vector field written as a sum of separable trigonometric products.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeparableField {
    pub terms: Vec<SeparableTerm>,
}

impl SeparableField {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for t in &self.terms {
            out[t.component] += t.eval(x);
        }
        out
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self
    }

    pub fn add(mut self, other: SeparableField) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn curl(&self) -> SeparableField {
        // component c feeds +d_{c+2} into curl_{c+1} and -d_{c+1} into curl_{c+2}
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            let c = t.component;
            terms.push(t.partial((c + 2) % 3, (c + 1) % 3, 1.0));
            terms.push(t.partial((c + 1) % 3, (c + 2) % 3, -1.0));
        }
        SeparableField { terms }
    }

    /// Divergence, returned in component slot 0.
    pub fn divergence(&self) -> SeparableField {
        let terms = self
            .terms
            .iter()
            .map(|t| t.partial(t.component, 0, 1.0))
            .collect();
        SeparableField { terms }
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

fn normalize3(a: [f64; 3]) -> [f64; 3] {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_by_eigenvalue(b: &ModeBasis) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for m in &b.divfree {
            let ev: u32 = m.index.k.iter().map(|k| k * k).sum();
            match out.last_mut() {
                Some((e, n)) if *e == ev => *n += 1,
                _ => out.push((ev, 1)),
            }
        }
        out
    }

    #[test]
    fn cube_cutoff_2_5_has_three_modes() {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 2.5).unwrap();
        assert_eq!(count_by_eigenvalue(&b), vec![(2, 3)]);
        assert!(b.gradient.is_empty());
        assert!(!b.degenerate);
    }

    #[test]
    fn cube_cutoff_3_5_adds_two_polarizations_and_a_gradient() {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 3.5).unwrap();
        assert_eq!(count_by_eigenvalue(&b), vec![(2, 3), (3, 2)]);
        assert_eq!(b.gradient.len(), 1);
        assert_eq!(b.gradient[0].index.k, [1, 1, 1]);
        assert_eq!(b.gradient[0].eigenvalue, 3.0);
    }

    #[test]
    fn cutoff_below_first_eigenvalue_is_degenerate() {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 0.5).unwrap();
        assert!(b.divfree.is_empty());
        assert!(b.degenerate);
        assert!(matches!(b.ensure_usable(), Err(Error::DegenerateBasis)));
    }

    #[test]
    fn nonpositive_cutoff_rejected() {
        assert!(enumerate_modes(&BoxDomain::pi_cube(), 0.0).is_err());
        assert!(enumerate_modes(&BoxDomain::pi_cube(), -1.0).is_err());
    }

    #[test]
    fn mode_index_invariants() {
        assert!(ModeIndex::gradient([1, 1, 0]).is_err());
        assert!(ModeIndex::divfree([1, 0, 0], 0).is_err());
        assert!(ModeIndex::divfree([1, 1, 0], 1).is_err());
        assert!(ModeIndex::divfree([1, 1, 1], 1).is_ok());
        assert!(ModeIndex::divfree([1, 1, 1], 2).is_err());
    }

    #[test]
    fn polarizations_are_transverse() {
        let b = enumerate_modes(&BoxDomain::new([1.0, 1.3, 0.7]).unwrap(), 200.0).unwrap();
        for m in &b.divfree {
            let kv = m.wavevector();
            assert!(dot3(kv, m.amplitude()).abs() <= 1e-12 * norm3(kv) * norm3(m.amplitude()));
        }
    }

    #[test]
    fn tm_like_mode_matches_closed_form() {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 2.5).unwrap();
        let i = b.position(&ModeIndex::divfree([1, 1, 0], 0).unwrap()).unwrap();
        let m = &b.divfree[i];
        let scale = 2.0 / std::f64::consts::PI.powf(1.5);
        for x in [[0.3, 1.1, 2.0], [2.9, 0.2, 0.1]] {
            let e = m.field_at(x);
            assert_eq!(e[0], 0.0);
            assert_eq!(e[1], 0.0);
            assert!((e[2] - scale * x[0].sin() * x[1].sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn separable_curl_matches_closed_form_curl() {
        let b = enumerate_modes(&BoxDomain::new([1.0, 2.0, 1.5]).unwrap(), 40.0).unwrap();
        for m in b.divfree.iter().chain(&b.gradient) {
            let curl = m.separable().curl();
            for x in [[0.1, 0.5, 0.9], [0.77, 1.3, 0.2]] {
                let a = curl.eval(x);
                let e = m.curl_at(x);
                for c in 0..3 {
                    assert!((a[c] - e[c]).abs() < 1e-12 * (1.0 + m.eigenvalue));
                }
            }
        }
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let d = BoxDomain::pi_cube();
        let a = enumerate_modes(&d, 3.5).unwrap();
        let b = enumerate_modes(&d, 3.5).unwrap();
        let c = enumerate_modes(&d, 2.5).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
