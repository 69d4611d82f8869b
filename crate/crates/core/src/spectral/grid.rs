//! Tensor-product quadrature grids and sampled vector fields.

use serde::{Deserialize, Serialize};

use super::domain::BoxDomain;
use super::modes::ModeBasis;
use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[n - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    GaussLegendre,
    /// Cell-centered uniform nodes with midpoint weights.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Tensor quadrature on a box. Flat node index is `i + n0 * (j + n1 * k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    pub axes: [Axis; 3],
}

/// Points per axis needed to integrate a degree-`p` nonlinearity of modes
/// whose largest index on this axis is `kmax`.
///
/// Two bounds apply: the de-aliasing bound `(ceil(p/2) + 1) kmax`, and a
/// Gauss-Legendre accuracy bound for trigonometric integrands of frequency
/// `q kmax` (q = p rounded up to even) that keeps the quadrature error
/// near machine precision.
pub fn required_points(kmax: u32, p: f64) -> usize {
    let half = (p / 2.0).ceil().max(1.0);
    let dealias = ((half + 1.0) * kmax as f64).ceil() as usize;
    let q = 2.0 * half;
    let accuracy = (1.6 * q * kmax as f64).ceil() as usize + 10;
    dealias.max(accuracy)
}

impl GridSpec {
    pub fn gauss_legendre(domain: &BoxDomain, n: [usize; 3]) -> Result<Self> {
        Self::gauss_legendre_on([0.0; 3], domain.edges(), n)
    }

    pub fn gauss_legendre_on(origin: [f64; 3], extent: [f64; 3], n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        let axes = [0, 1, 2].map(|a| {
            let (nodes, weights) = gauss_legendre(n[a], origin[a], origin[a] + extent[a]);
            Axis { nodes, weights }
        });
        Ok(Self {
            kind: GridKind::GaussLegendre,
            origin,
            extent,
            axes,
        })
    }

    /// Cell-centered uniform grid on `origin + [0, extent]`.
    pub fn uniform_on(origin: [f64; 3], extent: [f64; 3], n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&k| k == 0) {
            return Err(Error::InvalidParameter("grid needs at least one point per axis".into()));
        }
        let axes = [0, 1, 2].map(|a| {
            let h = extent[a] / n[a] as f64;
            Axis {
                nodes: (0..n[a]).map(|i| origin[a] + (i as f64 + 0.5) * h).collect(),
                weights: vec![h; n[a]],
            }
        });
        Ok(Self {
            kind: GridKind::Uniform,
            origin,
            extent,
            axes,
        })
    }

    pub fn uniform(domain: &BoxDomain, n: [usize; 3]) -> Result<Self> {
        Self::uniform_on([0.0; 3], domain.edges(), n)
    }

    /// Gauss-Legendre grid meeting [`required_points`] for every axis.
    pub fn dealiased(basis: &ModeBasis, p_max: f64) -> Result<Self> {
        let k = basis.kmax();
        let n = [0, 1, 2].map(|a| required_points(k[a], p_max));
        Self::gauss_legendre(&basis.domain, n)
    }

    pub fn shape(&self) -> [usize; 3] {
        [0, 1, 2].map(|a| self.axes[a].nodes.len())
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unflatten(idx);
        [self.axes[0].nodes[i], self.axes[1].nodes[j], self.axes[2].nodes[k]]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let [i, j, k] = self.unflatten(idx);
        self.axes[0].weights[i] * self.axes[1].weights[j] * self.axes[2].weights[k]
    }

    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let [n0, n1, _] = self.shape();
        [idx % n0, (idx / n0) % n1, idx / (n0 * n1)]
    }

    /// All nodes in flat order.
    pub fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// All weights in flat order.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Fail unless every axis meets [`required_points`] for `basis` and `p`.
    pub fn check_resolution(&self, basis: &ModeBasis, p: f64) -> Result<()> {
        let k = basis.kmax();
        let shape = self.shape();
        for a in 0..3 {
            let required = required_points(k[a], p);
            if shape[a] < required {
                return Err(Error::UnderResolved {
                    axis: a,
                    required,
                    actual: shape[a],
                });
            }
        }
        Ok(())
    }

    /// Uniform node spacing (uniform grids only).
    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.extent[a] / self.axes[a].nodes.len() as f64)
    }
}

/// Vector field sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<[f64; 3]>,
    /// Nodes outside the physical domain (box-embedded grids) are `false`.
    pub mask: Option<Vec<bool>>,
}

impl GridField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![[0.0; 3]; n],
            mask: None,
        }
    }

    pub fn inside(&self, idx: usize) -> bool {
        self.mask.as_ref().map_or(true, |m| m[idx])
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Quadrature L2 inner product with another field on the same grid.
    pub fn inner(&self, other: &GridField) -> f64 {
        let mut s = 0.0;
        for (i, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            if self.inside(i) {
                s += self.grid.weight(i) * (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6, 0.0, 2.0);
        for deg in 0..=11 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = 2f64.powi(deg + 1) / (deg as f64 + 1.0);
            assert!((s - exact).abs() < 1e-12 * exact, "deg {deg}");
        }
    }

    #[test]
    fn gauss_legendre_nodes_sorted_and_symmetric() {
        let (x, w) = gauss_legendre(7, -1.0, 1.0);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        for i in 0..7 {
            assert!((x[i] + x[6 - i]).abs() < 1e-15);
            assert!((w[i] - w[6 - i]).abs() < 1e-15);
        }
        assert!(x[3].abs() < 1e-15);
    }

    #[test]
    fn sine_products_integrate_to_machine_precision() {
        let pi = std::f64::consts::PI;
        let n = required_points(2, 4.0);
        let (x, w) = gauss_legendre(n, 0.0, pi);
        // int_0^pi sin^4(2x) dx = 3 pi / 8
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (2.0 * x).sin().powi(4)).sum();
        assert!((s - 3.0 * pi / 8.0).abs() < 1e-14);
    }

    #[test]
    fn required_points_respects_dealias_bound() {
        for k in 0..6 {
            for p in [2.0, 3.0, 4.0, 5.5] {
                let half = (p / 2.0_f64).ceil();
                assert!(required_points(k, p) >= ((half + 1.0) * k as f64) as usize);
            }
        }
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = GridSpec::uniform(&BoxDomain::pi_cube(), [3, 4, 5]).unwrap();
        for idx in 0..g.len() {
            let [i, j, k] = g.unflatten(idx);
            assert_eq!(i + 3 * (j + 4 * k), idx);
        }
        let total: f64 = g.weights().iter().sum();
        assert!((total - BoxDomain::pi_cube().volume()).abs() < 1e-12);
    }
}
