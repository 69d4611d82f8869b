//! Symmetric positive definite band matrices: storage, Cholesky, solves.

/// Lower band of a symmetric matrix: `lower[i][d] = K[i][i - d]`.
#[derive(Debug, Clone)]
pub(crate) struct Band {
    pub n: usize,
    pub width: usize,
    pub lower: Vec<Vec<f64>>,
}

impl Band {
    pub fn zeros(n: usize, width: usize) -> Self {
        Band {
            n,
            width,
            lower: vec![vec![0.0; width + 1]; n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        if d > self.width {
            0.0
        } else {
            self.lower[i][d]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let d = i - j;
        assert!(d <= self.width, "entry outside the band");
        self.lower[i][d] = v;
    }

    pub fn add_diagonal(&mut self, diag: &[f64], scale: f64) {
        for (row, d) in self.lower.iter_mut().zip(diag) {
            row[0] += scale * d;
        }
    }

    /// `K = L L^T`; `None` when `K` is not positive definite.
    pub fn cholesky(&self) -> Option<Band> {
        let (n, w) = (self.n, self.width);
        let mut l = Band::zeros(n, w);
        for j in 0..n {
            let lo = j.saturating_sub(w);
            let mut s = self.get(j, j);
            for k in lo..j {
                let v = l.get(j, k);
                s -= v * v;
            }
            if !(s > 0.0) {
                return None;
            }
            let djj = s.sqrt();
            l.set(j, j, djj);
            for i in (j + 1)..(j + w + 1).min(n) {
                let lo = i.saturating_sub(w);
                let mut s = self.get(i, j);
                for k in lo..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / djj);
            }
        }
        Some(l)
    }

    /// Solve `L y = b` for a Cholesky factor.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.width);
            let mut s = y[i];
            for k in lo..i {
                s -= self.lower[i][i - k] * y[k];
            }
            y[i] = s / self.lower[i][0];
        }
        y
    }

    /// Solve `L^T x = y` for a Cholesky factor.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let mut x = y.to_vec();
        for i in (0..self.n).rev() {
            let hi = (i + self.width + 1).min(self.n);
            let mut s = x[i];
            for k in (i + 1)..hi {
                s -= self.lower[k][k - i] * x[k];
            }
            x[i] = s / self.lower[i][0];
        }
        x
    }

    /// `L^T x` for a Cholesky factor.
    pub fn transpose_mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let hi = (i + self.width + 1).min(self.n);
                (i..hi).map(|k| self.lower[k][k - i] * x[k]).sum()
            })
            .collect()
    }

    /// `K x` for the stored symmetric matrix.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for d in 0..=self.width.min(i) {
                let v = self.lower[i][d];
                y[i] += v * x[i - d];
                if d > 0 {
                    y[i - d] += v * x[i];
                }
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_solve_tridiagonal() {
        let n = 6;
        let mut k = Band::zeros(n, 2);
        for i in 0..n {
            k.set(i, i, 4.0);
            if i > 0 {
                k.set(i, i - 1, -1.0);
            }
            if i > 1 {
                k.set(i, i - 2, 0.5);
            }
        }
        let l = k.cholesky().unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let x = l.backward(&l.forward(&b));
        let kx = k.mul(&x);
        for i in 0..n {
            assert!((kx[i] - b[i]).abs() < 1e-13);
        }
        // |L^T x|^2 = x^T K x
        let lt = l.transpose_mul(&x);
        let q1: f64 = lt.iter().map(|v| v * v).sum();
        let q2: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
        assert!((q1 - q2).abs() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_has_no_factor() {
        let mut k = Band::zeros(2, 1);
        k.set(0, 0, 1.0);
        k.set(1, 1, 1.0);
        k.set(1, 0, 2.0);
        assert!(k.cholesky().is_none());
    }
}
