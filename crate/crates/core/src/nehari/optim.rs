//! Small unconstrained optimization kernels shared by the solvers.

use crate::error::Result;

/// Relative band within which two energy values are indistinguishable.
pub(crate) const NOISE: f64 = 1e-13;

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) struct LbfgsOptions {
    pub memory: usize,
    pub armijo: f64,
    pub shrink: f64,
    pub max_iter: usize,
}

pub(crate) struct MinResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Limited-memory BFGS with backtracking. A trial point is accepted on
/// sufficient decrease, or, once values agree to rounding, on a decrease
/// of the gradient norm. Steps leaving `feasible` are shortened first.
pub(crate) fn lbfgs<E, S, P>(x0: Vec<f64>, mut eval: E, stop: S, feasible: P, opts: &LbfgsOptions) -> Result<MinResult>
where
    E: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    S: Fn(&[f64], f64, &[f64]) -> bool,
    P: Fn(&[f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = eval(&x)?;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    for iter in 0..opts.max_iter {
        if stop(&x, f, &g) {
            return Ok(MinResult {
                x,
                iterations: iter,
                converged: true,
            });
        }
        // two-loop recursion
        let mut q = g.clone();
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &q);
            for k in 0..n {
                q[k] -= alpha[i] * y_hist[i][k];
            }
        }
        let gamma = if m > 0 {
            dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1])
        } else {
            1.0 / norm(&g).max(1.0)
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for i in 0..m {
            let beta = rho[i] * dot(&y_hist[i], &q);
            for k in 0..n {
                q[k] += (alpha[i] - beta) * s_hist[i][k];
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            d = g.iter().map(|v| -v / norm(&g).max(1.0)).collect();
            slope = dot(&g, &d);
        }
        let gnorm = norm(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if !feasible(&trial) {
                step *= opts.shrink;
                continue;
            }
            let (ft, gt) = eval(&trial)?;
            let sufficient = ft <= f + opts.armijo * step * slope;
            let flat = (ft - f).abs() <= NOISE * (1.0 + f.abs()) && norm(&gt) < gnorm;
            if ft.is_finite() && (sufficient || flat) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= opts.shrink;
        }
        let Some((xn, fnew, gn)) = accepted else {
            return Ok(MinResult {
                x,
                iterations: iter,
                converged: false,
            });
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * norm(&s) * norm(&y) && sy > 0.0 {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        x = xn;
        f = fnew;
        g = gn;
    }
    let converged = stop(&x, f, &g);
    Ok(MinResult {
        x,
        iterations: opts.max_iter,
        converged,
    })
}

/// Brent's method for a sign-changing bracket `[a, b]`.
pub(crate) fn brent_root<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(b)
}
