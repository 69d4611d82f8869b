use super::optim::{brent_root, lbfgs, LbfgsOptions};
use super::{residual_from_gradient, Layout, NehariPoint, SolverConfig};
use crate::energy::{j_grad, value_and_grad, EnergyContext};
use crate::error::{Error, Result};

pub(crate) fn ensure_nonlinear(ctx: &EnergyContext) -> Result<()> {
    if ctx.nonlinearity.is_zero() {
        return Err(Error::Refusal(
            "the Nehari-Pankov manifold needs a superquadratic nonlinearity; got F = 0".into(),
        ));
    }
    Ok(())
}

/// Root of `t -> J'(t u)[u]` for a unit direction `u`, the classical
/// Nehari scaling without the nonpositive block.
pub fn scalar_nehari_scale(direction: &[f64], ctx: &EnergyContext) -> Result<f64> {
    ensure_nonlinear(ctx)?;
    let layout = Layout::new(ctx);
    let u = layout.normalize(direction)?;
    let zeros_n = vec![0.0; layout.nonpos.len()];
    let zeros_w = vec![0.0; ctx.n_gradient()];
    let slope = |t: f64| -> Result<f64> {
        let s = layout.assemble(ctx, t, &u, &zeros_n, &zeros_w);
        let g = j_grad(&s, ctx)?;
        Ok(layout.plus.iter().zip(&u).map(|(&k, ui)| g.v[k] * ui).sum())
    };
    let mut hi = 1.0;
    let mut g_hi = slope(hi)?;
    let mut lo = hi;
    let mut g_lo = g_hi;
    let mut n = 0;
    while g_hi > 0.0 {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = slope(hi)?;
        n += 1;
        if n > 200 {
            return Err(Error::NonConvergence {
                stage: "nehari scale bracket",
                iterations: n,
                residual: g_hi,
            });
        }
    }
    if lo == hi {
        while g_lo <= 0.0 {
            hi = lo;
            g_hi = g_lo;
            lo *= 0.5;
            if lo < 1e-200 {
                return Err(Error::AdmissibleCone { t: lo });
            }
            g_lo = slope(lo)?;
        }
    }
    brent_root(slope, lo, hi, g_lo, g_hi, 1e-15 * hi, 200)
}

/// `m(u)` from a cold start.
pub fn inner_maximize(direction: &[f64], ctx: &EnergyContext, cfg: &SolverConfig) -> Result<NehariPoint> {
    inner_maximize_from(direction, None, ctx, cfg)
}

/// `m(u)`, optionally warm-started from a nearby manifold point.
///
/// For a fixed ray the map `(t, b) -> J(t u + b)` is maximized jointly by
/// L-BFGS in coordinates where every block is L2-normalized. Its only
/// critical point with `t > 0` is the global maximizer.
pub fn inner_maximize_from(
    direction: &[f64],
    guess: Option<&NehariPoint>,
    ctx: &EnergyContext,
    cfg: &SolverConfig,
) -> Result<NehariPoint> {
    ensure_nonlinear(ctx)?;
    let layout = Layout::new(ctx);
    let u = layout.normalize(direction)?;
    let nn = layout.nonpos.len();
    let nw = ctx.n_gradient();
    let ell = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = cfg.tol_inner;

    let (t0, tilde0, w0) = match guess {
        Some(p) if p.tilde.len() == nn && p.w.len() == nw && p.t > 0.0 => (p.t, p.tilde.clone(), p.w.clone()),
        _ => (scalar_nehari_scale(&u, ctx)?, vec![0.0; nn], vec![0.0; nw]),
    };

    let finish = |t: f64, tilde: Vec<f64>, w: Vec<f64>, iterations: usize| -> Result<NehariPoint> {
        if !(t > 1e-12 * t0.max(1e-300)) {
            return Err(Error::AdmissibleCone { t });
        }
        let s = layout.assemble(ctx, t, &u, &tilde, &w);
        let (b, g) = value_and_grad(&s, ctx)?;
        let r = residual_from_gradient(&s, &g, ctx);
        Ok(NehariPoint {
            direction: u.clone(),
            t,
            tilde,
            w,
            value: b.total,
            inner_residual: r.self_pairing.abs().max(r.tilde_residual),
            iterations,
        })
    };

    if nn + nw == 0 {
        let t = if guess.is_some() { scalar_nehari_scale(&u, ctx)? } else { t0 };
        return finish(t, Vec::new(), Vec::new(), 0);
    }

    let split = |x: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        let t = x[0] / ell;
        let tilde = x[1..1 + nn].to_vec();
        let w = x[1 + nn..].iter().zip(&layout.grad_scale).map(|(y, s)| y / s).collect();
        (t, tilde, w)
    };
    let mut x0 = vec![t0 * ell];
    x0.extend_from_slice(&tilde0);
    x0.extend(w0.iter().zip(&layout.grad_scale).map(|(w, s)| w * s));

    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (t, tilde, w) = split(x);
        let s = layout.assemble(ctx, t, &u, &tilde, &w);
        let (b, g) = value_and_grad(&s, ctx)?;
        let gu: f64 = layout.plus.iter().zip(&u).map(|(&k, ui)| g.v[k] * ui).sum();
        let mut out = Vec::with_capacity(x.len());
        out.push(-gu / ell);
        out.extend(layout.nonpos.iter().map(|&k| -g.v[k]));
        out.extend(g.w.iter().zip(&layout.grad_scale).map(|(gw, s)| -gw / s));
        Ok((-b.total, out))
    };
    let stop = |x: &[f64], f: f64, gphi: &[f64]| -> bool {
        let (t, tilde, w) = split(x);
        let gu = -gphi[0] * ell;
        let gn = &gphi[1..1 + nn];
        let gw: Vec<f64> = gphi[1 + nn..].iter().zip(&layout.grad_scale).map(|(g, s)| -g * s).collect();
        let self_pairing = t * gu - tilde.iter().zip(gn).map(|(b, g)| b * g).sum::<f64>()
            + w.iter().zip(&gw).map(|(a, b)| a * b).sum::<f64>();
        let tilde_res = gn.iter().map(|g| g.abs()).chain(gw.iter().map(|g| g.abs())).fold(0.0, f64::max);
        let bound = tol * (1.0 + f.abs());
        self_pairing.abs() <= bound && tilde_res <= bound
    };
    let opts = LbfgsOptions {
        memory: 10,
        armijo: cfg.linesearch.armijo,
        shrink: cfg.linesearch.shrink,
        max_iter: cfg.max_inner_iters,
    };
    let r = lbfgs(x0, eval, stop, |x| x[0] > 0.0, &opts)?;
    let (t, tilde, w) = split(&r.x);
    let point = finish(t, tilde, w, r.iterations)?;
    if !r.converged {
        return Err(Error::NonConvergence {
            stage: "inner maximization",
            iterations: r.iterations,
            residual: point.inner_residual,
        });
    }
    Ok(point)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::nehari_residual;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_closed_form() {
        let ctx = single_mode();
        let p = inner_maximize(&[1.0], &ctx, &SolverConfig::default()).unwrap();
        // unnormalized amplitude: t u = (t / sqrt 2)(2 / pi^1.5) E0
        let t_e0 = p.t * 2f64.sqrt() / PI.powf(1.5);
        assert!((t_e0 - (32.0f64 / 9.0).sqrt()).abs() <= 1e-12 * t_e0);
        let c0 = 4.0 * PI.powi(3) / 9.0;
        assert!((p.value - c0).abs() <= 1e-12 * c0);
    }

    #[test]
    fn ray_invariance() {
        let ctx = small(-1.0, quartic());
        let cfg = SolverConfig::default();
        let n = ctx.split.plus.len();
        let dir: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let base = inner_maximize(&dir, &ctx, &cfg).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = dir.iter().map(|x| c * x).collect();
            let p = inner_maximize(&scaled, &ctx, &cfg).unwrap();
            let (s0, s1) = (base.state(&ctx), p.state(&ctx));
            assert!(s0.combine(1.0, &s1, -1.0).max_abs() <= 1e-10);
        }
    }

    #[test]
    fn empty_tilde_matches_scalar_root() {
        let ctx = small(0.0, quartic());
        let b = ctx.basis.restrict(&(0..ctx.n_divfree()).collect::<Vec<_>>(), &[]).unwrap();
        let ctx = crate::energy::EnergyContext::new(b, 0.0, quartic()).unwrap();
        let dir = vec![1.0, -0.5, 0.25, 0.7, 0.1];
        let p = inner_maximize(&dir, &ctx, &SolverConfig::default()).unwrap();
        assert!(p.tilde.is_empty() && p.w.is_empty());
        // independent bisection on g(t) = J'(t u)[u]
        let u = p.direction.clone();
        let g = |t: f64| {
            let s = p.state(&ctx).scaled(t / p.t);
            let gr = j_grad(&s, &ctx).unwrap();
            gr.v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
        };
        let (mut lo, mut hi) = (1e-3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((p.t - lo).abs() <= 1e-10 * p.t);
    }

    #[test]
    fn scaling_off_the_manifold_changes_the_sign_of_the_self_pairing() {
        let ctx = single_mode();
        let p = inner_maximize(&[1.0], &ctx, &SolverConfig::default()).unwrap();
        let s = p.state(&ctx);
        assert!(nehari_residual(&s.scaled(2.0), &ctx).unwrap().self_pairing < 0.0);
        assert!(nehari_residual(&s.scaled(0.5), &ctx).unwrap().self_pairing > 0.0);
    }

    #[test]
    fn manifold_membership_over_random_directions() {
        let cfg = SolverConfig::default();
        for lambda in [0.0, -1.0, -2.5] {
            for nl in [quartic(), anisotropic_step()] {
                let ctx = small(lambda, nl);
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                for _ in 0..20 {
                    let dir: Vec<f64> = (0..ctx.split.plus.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let p = inner_maximize(&dir, &ctx, &cfg).unwrap();
                    let r = nehari_residual(&p.state(&ctx), &ctx).unwrap();
                    let bound = cfg.tol_inner * (1.0 + p.value.abs());
                    assert!(r.self_pairing.abs() <= bound && r.tilde_residual <= bound, "{lambda}: {r:?}");
                    assert!(p.t > 0.0 && p.value > 0.0);
                }
            }
        }
    }

    #[test]
    fn zero_nonlinearity_is_refused() {
        let ctx = small(0.0, crate::nonlinearity::NonlinearitySpec::zero());
        let n = ctx.split.plus.len();
        assert!(matches!(
            inner_maximize(&vec![1.0; n], &ctx, &SolverConfig::default()),
            Err(Error::Refusal(_))
        ));
    }
}
