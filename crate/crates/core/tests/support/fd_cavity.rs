//! Independent curl-curl eigensolver for the cube `(0, pi)^3`: Yee-grid
//! finite differences with a grad-div penalty, lowest eigenpairs by LOBPCG
//! with dense Rayleigh-Ritz.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Edge unknowns on an `n^3` Yee grid. Tangential components on the walls
/// are stored but pinned to zero.
pub struct YeeCavity {
    n: usize,
    h: f64,
    penalty: f64,
    mask: Vec<bool>,
}

impl YeeCavity {
    pub fn new(n: usize, penalty: f64) -> Self {
        let mut c = YeeCavity {
            n,
            h: PI / n as f64,
            penalty,
            mask: Vec::new(),
        };
        let len = c.len();
        let mut mask = vec![false; len];
        for block in mask.chunks_mut(len / 3) {
            for (idx, m) in block.iter_mut().enumerate() {
                // both transverse indices must be interior
                let (_, u, v) = c.edge_coords(idx);
                *m = u > 0 && u < n && v > 0 && v < n;
            }
        }
        c.mask = mask;
        c
    }

    /// Component blocks are `n x (n+1) x (n+1)` with the staggered axis first.
    fn block(&self) -> usize {
        self.n * (self.n + 1) * (self.n + 1)
    }

    pub fn len(&self) -> usize {
        3 * self.block()
    }

    /// `(staggered, transverse, transverse)` indices inside a component block.
    fn edge_coords(&self, idx: usize) -> (usize, usize, usize) {
        let (n, m) = (self.n, self.n + 1);
        let s = idx % n;
        let t1 = (idx / n) % m;
        let t2 = idx / (n * m);
        (s, t1, t2)
    }

    /// Index into component `comp` with physical integer coordinates `p`,
    /// where `p[comp]` is the staggered one.
    #[inline]
    fn at(&self, comp: usize, p: [usize; 3]) -> usize {
        let (n, m) = (self.n, self.n + 1);
        let (s, t1, t2) = match comp {
            0 => (p[0], p[1], p[2]),
            1 => (p[1], p[0], p[2]),
            _ => (p[2], p[0], p[1]),
        };
        comp * self.block() + s + n * (t1 + m * t2)
    }

    fn get(&self, e: &[f64], comp: usize, p: [usize; 3]) -> f64 {
        e[self.at(comp, p)]
    }

    /// `C^T C e + penalty D^T D e`, scaled by `1/h^2`.
    pub fn apply(&self, e: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ih = 1.0 / self.h;
        let mut out = vec![0.0; e.len()];
        // face fluxes: B_c on the face normal to axis c, cells indexed by the
        // two other axes (0..n) and the normal axis (0..=n)
        for c in 0..3 {
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            for p0 in 0..=n {
                for p1 in 0..n {
                    for p2 in 0..n {
                        let mut p = [0; 3];
                        p[c] = p0;
                        p[a] = p1;
                        p[b] = p2;
                        // B_c = d_a E_b - d_b E_a
                        let mut pa = p;
                        pa[a] += 1;
                        let mut pb = p;
                        pb[b] += 1;
                        let flux = (self.get(e, b, pa) - self.get(e, b, p)) * ih - (self.get(e, a, pb) - self.get(e, a, p)) * ih;
                        out[self.at(b, pa)] += flux * ih;
                        out[self.at(b, p)] -= flux * ih;
                        out[self.at(a, pb)] -= flux * ih;
                        out[self.at(a, p)] += flux * ih;
                    }
                }
            }
        }
        // nodal divergence on interior nodes
        for i in 1..n {
            for j in 1..n {
                for k in 1..n {
                    let p = [i, j, k];
                    let mut div = 0.0;
                    for c in 0..3 {
                        let mut q = p;
                        q[c] -= 1;
                        div += (self.get(e, c, p) - self.get(e, c, q)) * ih;
                    }
                    let s = self.penalty * div * ih;
                    for c in 0..3 {
                        let mut q = p;
                        q[c] -= 1;
                        out[self.at(c, p)] += s;
                        out[self.at(c, q)] -= s;
                    }
                }
            }
        }
        for (o, &m) in out.iter_mut().zip(&self.mask) {
            if !m {
                *o = 0.0;
            }
        }
        out
    }

    fn masked(&self, mut v: Vec<f64>) -> Vec<f64> {
        for (x, &m) in v.iter_mut().zip(&self.mask) {
            if !m {
                *x = 0.0;
            }
        }
        v
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalize `vs` in place (two passes of modified Gram-Schmidt),
/// dropping columns that collapse.
fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for mut v in vs.drain(..) {
        let n0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let r = dot(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= r * y;
                }
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv > 1e-10 * n0 && nv > 0.0 {
            for x in v.iter_mut() {
                *x /= nv;
            }
            out.push(v);
        }
    }
    *vs = out;
}

/// Lowest `count` eigenvalues of the penalized Yee operator.
pub fn lowest_eigenvalues(n: usize, count: usize, penalty: f64, seed: u64) -> Vec<f64> {
    let op = YeeCavity::new(n, penalty);
    let len = op.len();
    let m = count + 4;
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut rand = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let mut x: Vec<Vec<f64>> = (0..m).map(|_| op.masked((0..len).map(|_| rand()).collect())).collect();
    orthonormalize(&mut x);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut theta = vec![0.0; m];
    for _ in 0..5000 {
        let ax: Vec<Vec<f64>> = x.par_iter().map(|v| op.apply(v)).collect();
        for (t, (v, av)) in theta.iter_mut().zip(x.iter().zip(&ax)) {
            *t = dot(v, av);
        }
        let resid: Vec<Vec<f64>> = x
            .iter()
            .zip(&ax)
            .zip(&theta)
            .map(|((v, av), t)| av.iter().zip(v).map(|(a, b)| a - t * b).collect())
            .collect();
        let worst = resid[..count]
            .iter()
            .zip(&theta)
            .map(|(r, t)| dot(r, r).sqrt() / t.abs().max(1.0))
            .fold(0.0, f64::max);
        if worst < 1e-4 {
            break;
        }
        let mut basis: Vec<Vec<f64>> = x.clone();
        basis.extend(resid);
        basis.extend(p.iter().cloned());
        orthonormalize(&mut basis);
        let abasis: Vec<Vec<f64>> = basis.par_iter().map(|v| op.apply(v)).collect();
        let k = basis.len();
        let entries: Vec<f64> = (0..k * k)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / k, ij % k);
                0.5 * (dot(&basis[i], &abasis[j]) + dot(&basis[j], &abasis[i]))
            })
            .collect();
        let t = DMatrix::from_fn(k, k, |i, j| entries[i * k + j]);
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut new_x = Vec::with_capacity(m);
        let mut new_p = Vec::with_capacity(m);
        for &c in order.iter().take(m) {
            let mut v = vec![0.0; len];
            let mut w = vec![0.0; len];
            for (r, b) in basis.iter().enumerate() {
                let y = eig.eigenvectors[(r, c)];
                for (acc, bi) in v.iter_mut().zip(b) {
                    *acc += y * bi;
                }
                if r >= m {
                    for (acc, bi) in w.iter_mut().zip(b) {
                        *acc += y * bi;
                    }
                }
            }
            new_x.push(v);
            new_p.push(w);
        }
        x = new_x;
        p = new_p;
    }
    let mut out = theta;
    out.sort_by(f64::total_cmp);
    out.truncate(count);
    out
}
