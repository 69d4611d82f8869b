use std::collections::VecDeque;

use super::optim::{dot, norm, NOISE};
use super::SolverConfig;
use crate::error::{Error, Result};

/// A functional on the Euclidean unit sphere, evaluated together with its
/// ambient gradient and a solver-specific point used for warm starts.
pub trait SphereProblem: Sync {
    type Point: Clone + Send;

    fn evaluate(&self, a: &[f64], warm: Option<&Self::Point>) -> Result<(f64, Vec<f64>, Self::Point)>;

    /// Size of the underlying iterate, watched for blow-up.
    fn magnitude(&self, point: &Self::Point) -> f64;
}

#[derive(Debug, Clone)]
pub struct DescentRun<P> {
    pub a: Vec<f64>,
    pub point: P,
    pub value: f64,
    pub grad_norm: f64,
    /// `(value, tangential gradient norm)` per iteration.
    pub history: Vec<[f64; 2]>,
    pub iterations: usize,
    pub converged: bool,
}

fn tangent(grad: &[f64], a: &[f64]) -> Vec<f64> {
    let r = dot(grad, a);
    grad.iter().zip(a).map(|(g, x)| g - r * x).collect()
}

fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

const NONMONOTONE_WINDOW: usize = 8;
const BLOWUP: f64 = 1e6;

/// Riemannian gradient descent with Barzilai-Borwein steps, a nonmonotone
/// Armijo test and retraction by normalization.
pub fn sphere_descent<P: SphereProblem>(problem: &P, start: &[f64], cfg: &SolverConfig) -> Result<DescentRun<P::Point>> {
    let n0 = norm(start);
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidParameter("start direction must be nonzero".into()));
    }
    let mut a = normalized(start);
    let (mut value, grad, mut point) = problem.evaluate(&a, None)?;
    let mut g = tangent(&grad, &a);
    let initial = problem.magnitude(&point).max(1e-300);
    let mut history = Vec::new();
    let mut recent: VecDeque<f64> = VecDeque::new();
    let mut eta = 0.1 / norm(&g).max(1e-300);
    let ls = cfg.linesearch;

    for iter in 0..cfg.max_outer_iters {
        let gn = norm(&g);
        history.push([value, gn]);
        if gn <= cfg.tol_outer * (1.0 + value.abs()) {
            return Ok(DescentRun {
                a,
                point,
                value,
                grad_norm: gn,
                history,
                iterations: iter,
                converged: true,
            });
        }
        recent.push_back(value);
        if recent.len() > NONMONOTONE_WINDOW {
            recent.pop_front();
        }
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        eta = eta.min(0.5 / gn);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = normalized(&a.iter().zip(&g).map(|(x, d)| x - eta * d).collect::<Vec<_>>());
            let (tv, tg, tp) = problem.evaluate(&trial, Some(&point))?;
            let tgt = tangent(&tg, &trial);
            let sufficient = tv <= reference - ls.armijo * eta * gn * gn;
            let flat = (tv - value).abs() <= NOISE * (1.0 + value.abs()) && norm(&tgt) < gn;
            if tv.is_finite() && (sufficient || flat) {
                accepted = Some((trial, tv, tgt, tp));
                break;
            }
            eta *= ls.shrink;
        }
        let Some((an, vn, gnew, pn)) = accepted else {
            return Ok(DescentRun {
                a,
                point,
                value,
                grad_norm: gn,
                history,
                iterations: iter,
                converged: false,
            });
        };
        let mag = problem.magnitude(&pn);
        if mag > BLOWUP * initial {
            return Err(Error::UnboundedIterates { norm: mag, initial });
        }
        let s: Vec<f64> = an.iter().zip(&a).map(|(x, y)| x - y).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(x, y)| x - y).collect();
        let sy = dot(&s, &y);
        eta = if sy > 0.0 { dot(&s, &s) / sy } else { 2.0 * eta };
        a = an;
        value = vn;
        g = gnew;
        point = pn;
    }
    let gn = norm(&g);
    history.push([value, gn]);
    Ok(DescentRun {
        a,
        point,
        value,
        grad_norm: gn,
        history,
        iterations: cfg.max_outer_iters,
        converged: gn <= cfg.tol_outer * (1.0 + value.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rayleigh quotient of a diagonal matrix: minimum is the smallest entry.
    struct Rayleigh(Vec<f64>);

    impl SphereProblem for Rayleigh {
        type Point = ();
        fn evaluate(&self, a: &[f64], _: Option<&()>) -> Result<(f64, Vec<f64>, ())> {
            let v = a.iter().zip(&self.0).map(|(x, d)| d * x * x).sum();
            let g = a.iter().zip(&self.0).map(|(x, d)| 2.0 * d * x).collect();
            Ok((v, g, ()))
        }
        fn magnitude(&self, _: &()) -> f64 {
            1.0
        }
    }

    #[test]
    fn finds_smallest_eigenvalue() {
        let p = Rayleigh(vec![3.0, 1.5, 7.0, 2.0]);
        let cfg = SolverConfig {
            tol_outer: 1e-10,
            ..SolverConfig::default()
        };
        let r = sphere_descent(&p, &[1.0, 1.0, 1.0, 1.0], &cfg).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.5).abs() < 1e-12);
        assert!((r.a[1].abs() - 1.0).abs() < 1e-9);
    }
}
