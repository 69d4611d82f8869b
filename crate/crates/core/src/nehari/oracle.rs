use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inner::ensure_nonlinear;
use super::optim::{dot, norm, NOISE};
use super::{Layout, SolverConfig};
use crate::energy::{value_and_grad, EnergyContext};
use crate::error::{Error, Result};
use crate::spectral::StateVector;

/// Largest total coefficient dimension the brute-force oracle accepts.
pub const ORACLE_DIM_LIMIT: usize = 12;

const RANDOM_DIRECTIONS: usize = 240;
const POLISHED: usize = 3;
const CLUSTER_DIRECTIONS: usize = 50;
const CLUSTER_STARTS: usize = 4;
const SPG_BUDGET: usize = 40_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub c0_oracle: f64,
    pub state: StateVector,
    /// Sphere coordinates of the best direction.
    pub direction: Vec<f64>,
    pub directions_sampled: usize,
    pub polished: usize,
    pub cluster_directions: usize,
    pub cluster_starts: usize,
    /// Largest coefficient-wise disagreement between inner solves of one ray.
    pub cluster_spread: f64,
}

struct Ray<'a> {
    ctx: &'a EnergyContext,
    layout: &'a Layout,
    u: Vec<f64>,
}

impl Ray<'_> {
    /// Unknowns are `[t, tilde..., w...]` in raw coefficients.
    fn state(&self, x: &[f64]) -> StateVector {
        let nn = self.layout.nonpos.len();
        self.layout.assemble(self.ctx, x[0], &self.u, &x[1..1 + nn], &x[1 + nn..])
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (b, g) = value_and_grad(&self.state(x), self.ctx)?;
        let mut out = vec![self.layout.plus.iter().zip(&self.u).map(|(&k, u)| g.v[k] * u).sum()];
        out.extend(self.layout.nonpos.iter().map(|&k| g.v[k]));
        out.extend_from_slice(&g.w);
        Ok((b.total, out))
    }

    fn project(x: &mut [f64]) {
        x[0] = x[0].max(0.0);
    }

    /// Nonmonotone spectral projected gradient ascent on `{t >= 0}`.
    fn maximize(&self, mut x: Vec<f64>, tol: f64) -> Result<(f64, Vec<f64>)> {
        Self::project(&mut x);
        let (mut f, mut g) = self.value_grad(&x)?;
        let mut alpha = 1.0 / norm(&g).max(1.0);
        let mut recent: VecDeque<f64> = VecDeque::new();
        for _ in 0..SPG_BUDGET {
            let mut probe: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + b).collect();
            Self::project(&mut probe);
            let pg = probe.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if pg <= tol * (1.0 + f.abs()) {
                return Ok((f, x));
            }
            recent.push_back(f);
            if recent.len() > 10 {
                recent.pop_front();
            }
            let floor = recent.iter().copied().fold(f64::INFINITY, f64::min);
            let mut target: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + alpha * b).collect();
            Self::project(&mut target);
            let d: Vec<f64> = target.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slope = dot(&g, &d);
            let mut lam = 1.0;
            let mut next = None;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + lam * b).collect();
                let (ft, gt) = self.value_grad(&trial)?;
                let flat = (ft - f).abs() <= NOISE * (1.0 + f.abs()) && norm(&gt) < norm(&g);
                if ft >= floor + 1e-4 * lam * slope || flat {
                    next = Some((trial, ft, gt));
                    break;
                }
                lam *= 0.5;
            }
            let Some((xn, fnew, gn)) = next else {
                return Ok((f, x));
            };
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            alpha = if sy < 0.0 { (dot(&s, &s) / -sy).clamp(1e-10, 1e10) } else { (2.0 * alpha).min(1e10) };
            x = xn;
            f = fnew;
            g = gn;
        }
        Err(Error::NonConvergence {
            stage: "oracle inner ascent",
            iterations: SPG_BUDGET,
            residual: norm(&g),
        })
    }
}

struct Oracle<'a> {
    ctx: &'a EnergyContext,
    layout: Layout,
    tol: f64,
}

impl Oracle<'_> {
    fn ray(&self, a: &[f64]) -> Ray<'_> {
        let n = norm(a);
        let a: Vec<f64> = a.iter().map(|x| x / n).collect();
        Ray {
            ctx: self.ctx,
            layout: &self.layout,
            u: self.layout.from_sphere(&a),
        }
    }

    fn unknowns(&self) -> usize {
        1 + self.layout.nonpos.len() + self.ctx.n_gradient()
    }

    fn value(&self, a: &[f64], start: Option<&[f64]>) -> Result<(f64, Vec<f64>)> {
        let x0 = match start {
            Some(x) => x.to_vec(),
            None => {
                let mut x = vec![0.0; self.unknowns()];
                x[0] = 1.0;
                x
            }
        };
        self.ray(a).maximize(x0, self.tol)
    }

    /// Opportunistic coordinate polling on the sphere with step halving.
    fn compass(&self, mut a: Vec<f64>, mut best: (f64, Vec<f64>)) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let n = a.len();
        let mut step = 0.2;
        while step > 1e-6 {
            let mut improved = false;
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let mut trial = a.clone();
                    trial[i] += sign * step;
                    let nt = norm(&trial);
                    trial.iter_mut().for_each(|x| *x /= nt);
                    let (v, x) = self.value(&trial, Some(&best.1))?;
                    if v < best.0 - 1e-15 * best.0.abs() {
                        a = trial;
                        best = (v, x);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((best.0, best.1, a))
    }
}

fn random_sphere(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let a: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let na = norm(&a);
        if na > 1e-8 {
            return a.iter().map(|x| x / na).collect();
        }
    }
}

/// Brute-force ground state for small truncations, independent of the main
/// inner and outer solvers.
pub fn oracle_dense(ctx: &EnergyContext, cfg: &SolverConfig) -> Result<OracleReport> {
    ensure_nonlinear(ctx)?;
    if ctx.dim() > ORACLE_DIM_LIMIT {
        return Err(Error::DimensionTooLarge {
            dim: ctx.dim(),
            limit: ORACLE_DIM_LIMIT,
        });
    }
    let oracle = Oracle {
        ctx,
        layout: Layout::new(ctx),
        tol: 1e-12,
    };
    let n = oracle.layout.plus.len();

    let sampled: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = (0..RANDOM_DIRECTIONS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6f72_6163_6c65 ^ (i as u64) << 20);
            let a = random_sphere(&mut rng, n);
            let (v, x) = oracle.value(&a, None)?;
            Ok((v, x, a))
        })
        .collect();
    let mut sampled: Vec<(f64, Vec<f64>, Vec<f64>)> = sampled.into_iter().collect::<Result<_>>()?;
    sampled.sort_by(|p, q| p.0.total_cmp(&q.0));

    let polished: Vec<Result<(f64, Vec<f64>, Vec<f64>)>> = sampled
        .iter()
        .take(POLISHED)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(v, x, a)| oracle.compass(a.clone(), (*v, x.clone())))
        .collect();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for p in polished {
        let p = p?;
        if best.as_ref().map_or(true, |b| p.0 < b.0) {
            best = Some(p);
        }
    }
    let (c0, x, a) = best.expect("at least one polished direction");
    let state = oracle.ray(&a).state(&x);

    let spreads: Vec<Result<f64>> = (0..CLUSTER_DIRECTIONS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x636c_7573 ^ (i as u64) << 24);
            let a = random_sphere(&mut rng, n);
            let (_, base) = oracle.value(&a, None)?;
            let ray = oracle.ray(&a);
            let reference = ray.state(&base);
            let mut spread: f64 = 0.0;
            for _ in 0..CLUSTER_STARTS {
                let mut x0: Vec<f64> = base.iter().map(|_| rng.gen_range(-1.0..1.0) * (1.0 + base[0])).collect();
                x0[0] = base[0] * rng.gen_range(0.2..3.0);
                let (_, x) = ray.maximize(x0, oracle.tol)?;
                spread = spread.max(ray.state(&x).combine(1.0, &reference, -1.0).max_abs());
            }
            Ok(spread)
        })
        .collect();
    let cluster_spread = spreads.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);

    Ok(OracleReport {
        c0_oracle: c0,
        state,
        direction: a,
        directions_sampled: RANDOM_DIRECTIONS,
        polished: POLISHED,
        cluster_directions: CLUSTER_DIRECTIONS,
        cluster_starts: CLUSTER_STARTS,
        cluster_spread,
    })
}
