//! Coefficient space <-> grid samples.

use serde::{Deserialize, Serialize};

use super::domain::BoxDomain;
use super::grid::{GridField, GridSpec};
use super::modes::{cross, ModeBasis};
use super::split::SpaceSplit;
use crate::error::{Error, Result};

/// Coefficients of `E = v + grad w`.
///
/// `v` holds one coefficient per div-free mode in basis order; the `V+` and
/// `V~` blocks are views selected through a [`SpaceSplit`]. `w` holds the
/// coefficients of the L2-normalized Dirichlet potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl StateVector {
    pub fn zeros(basis: &ModeBasis) -> Self {
        Self {
            v: vec![0.0; basis.n_divfree()],
            w: vec![0.0; basis.n_gradient()],
        }
    }

    pub fn check(&self, basis: &ModeBasis) -> Result<()> {
        if self.v.len() != basis.n_divfree() || self.w.len() != basis.n_gradient() {
            return Err(Error::Incompatible(format!(
                "state has ({}, {}) coefficients, basis has ({}, {})",
                self.v.len(),
                self.w.len(),
                basis.n_divfree(),
                basis.n_gradient()
            )));
        }
        Ok(())
    }

    /// Concatenated `[v, w]`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.v.clone();
        out.extend_from_slice(&self.w);
        out
    }

    pub fn from_flat(flat: &[f64], n_divfree: usize) -> Self {
        Self {
            v: flat[..n_divfree].to_vec(),
            w: flat[n_divfree..].to_vec(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            v: self.v.iter().map(|x| s * x).collect(),
            w: self.w.iter().map(|x| s * x).collect(),
        }
    }

    /// `a self + b other`.
    pub fn combine(&self, a: f64, other: &StateVector, b: f64) -> Self {
        Self {
            v: self.v.iter().zip(&other.v).map(|(x, y)| a * x + b * y).collect(),
            w: self.w.iter().zip(&other.w).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.v.iter().zip(&other.v).map(|(a, b)| a * b).sum::<f64>()
            + self.w.iter().zip(&other.w).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn plus_block(&self, split: &SpaceSplit) -> Vec<f64> {
        split.plus.iter().map(|&i| self.v[i]).collect()
    }

    pub fn tilde_block(&self, split: &SpaceSplit) -> Vec<f64> {
        split.nonpositive().iter().map(|&i| self.v[i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().chain(&self.w).fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Mode fields tabulated at every grid node.
///
/// Layout is mode-major: `divfree[(m * npts + node) * 3 + c]`.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub npts: usize,
    pub weights: Vec<f64>,
    pub nodes: Vec<[f64; 3]>,
    pub n_divfree: usize,
    pub n_gradient: usize,
    divfree: Vec<f64>,
    gradient: Vec<f64>,
}

impl ModeTable {
    pub fn new(basis: &ModeBasis, grid: &GridSpec) -> Self {
        let shape = grid.shape();
        let kmax = basis.kmax();
        // per-axis sin/cos tables: trig[a][k][i] = (sin, cos)(k_hat x_i)
        let trig: Vec<Vec<Vec<(f64, f64)>>> = (0..3)
            .map(|a| {
                (0..=kmax[a])
                    .map(|k| {
                        let kh = basis.domain.wavenumber(a, k);
                        grid.axes[a].nodes.iter().map(|&x| (kh * x).sin_cos()).collect()
                    })
                    .collect()
            })
            .collect();
        let npts = grid.len();
        let fill = |modes: &[super::modes::Mode]| {
            let mut out = vec![0.0; modes.len() * npts * 3];
            for (m, mode) in modes.iter().enumerate() {
                let a = mode.amplitude();
                let k = mode.index.k;
                let (t0, t1, t2) = (&trig[0][k[0] as usize], &trig[1][k[1] as usize], &trig[2][k[2] as usize]);
                let base = m * npts * 3;
                for kz in 0..shape[2] {
                    let (s2, c2) = t2[kz];
                    for jy in 0..shape[1] {
                        let (s1, c1) = t1[jy];
                        for ix in 0..shape[0] {
                            let (s0, c0) = t0[ix];
                            let idx = ix + shape[0] * (jy + shape[1] * kz);
                            let o = base + idx * 3;
                            out[o] = a[0] * c0 * s1 * s2;
                            out[o + 1] = a[1] * s0 * c1 * s2;
                            out[o + 2] = a[2] * s0 * s1 * c2;
                        }
                    }
                }
            }
            out
        };
        Self {
            npts,
            weights: grid.weights(),
            nodes: grid.nodes(),
            n_divfree: basis.n_divfree(),
            n_gradient: basis.n_gradient(),
            divfree: fill(&basis.divfree),
            gradient: fill(&basis.gradient),
        }
    }

    pub fn divfree_field(&self, m: usize) -> &[f64] {
        &self.divfree[m * self.npts * 3..(m + 1) * self.npts * 3]
    }

    pub fn gradient_field(&self, m: usize) -> &[f64] {
        &self.gradient[m * self.npts * 3..(m + 1) * self.npts * 3]
    }

    /// Sum of coefficients times mode fields, written into `out` (`3 npts`).
    pub fn synthesize_into(&self, v: &[f64], w: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (m, &c) in v.iter().enumerate() {
            if c != 0.0 {
                axpy(c, self.divfree_field(m), out);
            }
        }
        for (m, &c) in w.iter().enumerate() {
            if c != 0.0 {
                axpy(c, self.gradient_field(m), out);
            }
        }
    }

    /// Quadrature inner products `<g, e_m>` for every div-free and gradient
    /// field; `g` must already carry the quadrature weights.
    pub fn pair_weighted(&self, weighted: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = (0..self.n_divfree).map(|m| dot(self.divfree_field(m), weighted)).collect();
        let w = (0..self.n_gradient).map(|m| dot(self.gradient_field(m), weighted)).collect();
        (v, w)
    }

    /// Quadrature inner products `<g, e_m>` for an unweighted sample array.
    pub fn pair(&self, samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let weighted: Vec<f64> = samples
            .chunks_exact(3)
            .zip(&self.weights)
            .flat_map(|(s, &w)| [w * s[0], w * s[1], w * s[2]])
            .collect();
        self.pair_weighted(&weighted)
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample the field of `state` at the nodes of `grid`.
pub fn synthesize(state: &StateVector, basis: &ModeBasis, grid: &GridSpec) -> Result<GridField> {
    state.check(basis)?;
    let table = ModeTable::new(basis, grid);
    let mut flat = vec![0.0; table.npts * 3];
    table.synthesize_into(&state.v, &state.w, &mut flat);
    Ok(GridField {
        grid: grid.clone(),
        values: flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        mask: None,
    })
}

/// Quadrature projection of a sampled field onto the basis.
///
/// Div-free coefficients are `<E, e_k>`; gradient coefficients are
/// `<E, grad phi_j> / |k_j|^2`.
pub fn project(field: &GridField, basis: &ModeBasis) -> Result<StateVector> {
    field.grid.check_resolution(basis, 2.0)?;
    let table = ModeTable::new(basis, &field.grid);
    let flat: Vec<f64> = field
        .values
        .iter()
        .enumerate()
        .flat_map(|(i, v)| if field.inside(i) { *v } else { [0.0; 3] })
        .collect();
    let (v, mut w) = table.pair(&flat);
    for (wj, m) in w.iter_mut().zip(&basis.gradient) {
        *wj /= m.eigenvalue;
    }
    Ok(StateVector { v, w })
}

/// Resolvent `K = (curl curl + 1)^{-1}` on div-free coefficients.
pub fn resolvent(f: &[f64], basis: &ModeBasis) -> Result<Vec<f64>> {
    if f.len() != basis.n_divfree() {
        return Err(Error::Incompatible(format!(
            "expected {} div-free coefficients, got {}",
            basis.n_divfree(),
            f.len()
        )));
    }
    Ok(f.iter()
        .zip(&basis.divfree)
        .map(|(fk, m)| fk / (m.eigenvalue + 1.0))
        .collect())
}

/// Operator norm of the truncated resolvent, `1 / (lambda_1 + 1)`.
pub fn resolvent_norm(basis: &ModeBasis) -> Result<f64> {
    basis.ensure_usable()?;
    Ok(1.0 / (basis.divfree[0].eigenvalue + 1.0))
}

/// Pointwise field of a state, evaluated from the closed-form mode formulas.
pub fn field_at(state: &StateVector, basis: &ModeBasis, x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, m) in state.v.iter().zip(&basis.divfree).chain(state.w.iter().zip(&basis.gradient)) {
        let e = m.field_at(x);
        for i in 0..3 {
            out[i] += c * e[i];
        }
    }
    out
}

/// Pointwise curl of a state (gradient modes contribute nothing).
pub fn curl_at(state: &StateVector, basis: &ModeBasis, x: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (c, m) in state.v.iter().zip(&basis.divfree) {
        let e = m.curl_at(x);
        for i in 0..3 {
            out[i] += c * e[i];
        }
    }
    out
}

/// Sample points on the six faces with their outward normals.
pub fn face_samples(domain: &BoxDomain, samples_per_face: usize) -> Vec<([f64; 3], [f64; 3])> {
    let l = domain.edges();
    let s = samples_per_face;
    let mut out = Vec::with_capacity(6 * s * s);
    for axis in 0..3 {
        let (a1, a2) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0.0, 1.0] {
            let mut normal = [0.0; 3];
            normal[axis] = if side == 0.0 { -1.0 } else { 1.0 };
            for i in 0..s {
                for j in 0..s {
                    let mut x = [0.0; 3];
                    x[axis] = side * l[axis];
                    x[a1] = l[a1] * i as f64 / (s - 1) as f64;
                    x[a2] = l[a2] * j as f64 / (s - 1) as f64;
                    out.push((x, normal));
                }
            }
        }
    }
    out
}

/// `max |nu x E|` over face samples for an arbitrary field evaluator.
pub fn trace_residual_of<F>(domain: &BoxDomain, samples_per_face: usize, field: F) -> Result<f64>
where
    F: Fn([f64; 3]) -> [f64; 3],
{
    if samples_per_face < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 samples per face, got {samples_per_face}"
        )));
    }
    Ok(face_samples(domain, samples_per_face)
        .into_iter()
        .map(|(x, n)| {
            let t = cross(n, field(x));
            (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt()
        })
        .fold(0.0, f64::max))
}

/// Tangential trace residual `max |nu x E|` of a state on the box faces.
pub fn boundary_trace_residual(state: &StateVector, basis: &ModeBasis, samples_per_face: usize) -> Result<f64> {
    state.check(basis)?;
    trace_residual_of(&basis.domain, samples_per_face, |x| field_at(state, basis, x))
}

/// Weak divergence of the div-free block: `max_j |<v, grad psi_j>| / |grad psi_j|`
/// over the Dirichlet potentials with eigenvalue up to `test_cutoff`.
pub fn weak_divergence(state: &StateVector, basis: &ModeBasis, test_cutoff: f64) -> Result<f64> {
    state.check(basis)?;
    let tests = super::modes::enumerate_modes(&basis.domain, test_cutoff.max(basis.cutoff))?;
    let grid = GridSpec::dealiased(&tests, 2.0)?;
    let own = ModeTable::new(basis, &grid);
    let mut field = vec![0.0; own.npts * 3];
    let zeros = vec![0.0; basis.n_gradient()];
    own.synthesize_into(&state.v, &zeros, &mut field);
    let table = ModeTable::new(&tests, &grid);
    let (_, pairs) = table.pair(&field);
    Ok(pairs
        .iter()
        .zip(&tests.gradient)
        .filter(|(_, m)| m.eigenvalue <= test_cutoff)
        .map(|(p, m)| p.abs() / m.eigenvalue.sqrt())
        .fold(0.0, f64::max))
}
