//! Classical Nehari minimization of the reduced energy in a parity sector.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::banded::Band;
use super::reduced::{ReducedBreakdown, ReducedFunctional};
use super::{AxisymState, CylinderDomain, MeridianGrid, Sector, SectorMap};
use crate::error::{Error, Result};
use crate::nehari::optim::{brent_root, dot, norm};
use crate::nehari::{sphere_descent, DescentRun, RunSummary, SolverConfig, SphereProblem};
use crate::nonlinearity::NonlinearitySpec;

/// Relative margin below which the reduced quadratic form counts as singular.
const DEFINITE_MARGIN: f64 = 1e-10;

/// `P^T K P` in band form, assembled by probing with columns spaced
/// beyond the bandwidth.
fn sector_band(f: &ReducedFunctional, map: &SectorMap) -> Band {
    let n = map.dim();
    let width = f.grid.nr;
    let stride = 2 * width + 1;
    let mut band = Band::zeros(n, width);
    for group in 0..stride.min(n) {
        let mut beta = vec![0.0; n];
        for c in (group..n).step_by(stride) {
            beta[c] = 1.0;
        }
        let col = map.restrict(&f.apply_curl(&map.expand(&beta)));
        for c in (group..n).step_by(stride) {
            for r in c..(c + width + 1).min(n) {
                band.set(r, c, col[r]);
            }
        }
    }
    band
}

fn sector_mass(f: &ReducedFunctional, map: &SectorMap) -> Vec<f64> {
    let m = f.mass();
    map.columns
        .iter()
        .map(|col| col.iter().map(|&(k, s)| s * s * m[k]).sum())
        .collect()
}

fn require_sector(nl: &NonlinearitySpec, domain: &CylinderDomain, sector: Sector) -> Result<()> {
    if sector != Sector::All && !nl.is_reflection_symmetric(domain.height) {
        return Err(Error::NotSymmetric(format!(
            "the {} sector needs a coefficient even about the mid-plane x3 = H/2",
            sector.name()
        )));
    }
    Ok(())
}

/// Smallest eigenvalue of the curl form relative to the `|E|^2` mass on a
/// sector, by inverse iteration.
fn smallest_ratio(k: &Band, mass: &[f64]) -> Result<f64> {
    let l = k
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("curl form is not positive definite".into()))?;
    let n = k.n;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i as f64) * 0.7).sin()).collect();
    let mut mu = f64::INFINITY;
    for iter in 0..1000 {
        let mx: Vec<f64> = x.iter().zip(mass).map(|(a, m)| a * m).collect();
        let y = l.backward(&l.forward(&mx));
        let ky = k.mul(&y);
        let my: Vec<f64> = y.iter().zip(mass).map(|(a, m)| a * m).collect();
        let next = dot(&y, &ky) / dot(&y, &my);
        let scale = dot(&y, &my).sqrt();
        x = y.iter().map(|v| v / scale).collect();
        if (mu - next).abs() <= 1e-14 * next {
            return Ok(next);
        }
        mu = next;
        if iter == 999 {
            break;
        }
    }
    Err(Error::NonConvergence {
        stage: "reduced spectrum inverse iteration",
        iterations: 1000,
        residual: mu,
    })
}

/// Smallest eigenvalue `mu` of `curl curl E = mu E` restricted to azimuthal
/// fields of the sector; the reduced quadratic form is definite iff
/// `mu + lambda > 0`.
pub fn reduced_spectrum_min(domain: &CylinderDomain, grid: &MeridianGrid, sector: Sector) -> Result<f64> {
    let f = ReducedFunctional::new(*domain, *grid, 0.0, NonlinearitySpec::zero())?;
    let map = SectorMap::new(grid, sector);
    smallest_ratio(&sector_band(&f, &map), &sector_mass(&f, &map))
}

#[derive(Debug, Clone)]
pub(crate) struct RayPoint {
    pub t: f64,
    /// Full profile on the ray, `t P beta`.
    pub alpha: Vec<f64>,
}

/// `a -> max_t J_Y(t P L^{-T} a)` on the unit sphere, where `L L^T` is the
/// sector quadratic form.
pub(crate) struct SectorProblem {
    pub f: ReducedFunctional,
    pub map: SectorMap,
    pub factor: Band,
    pub mu_min: f64,
    exponents: Vec<f64>,
}

impl SectorProblem {
    pub fn new(f: ReducedFunctional, sector: Sector) -> Result<Self> {
        if f.nonlinearity.is_zero() {
            return Err(Error::Refusal(
                "the Nehari manifold needs a superquadratic nonlinearity; got F = 0".into(),
            ));
        }
        require_sector(&f.nonlinearity, &f.domain, sector)?;
        let map = SectorMap::new(&f.grid, sector);
        let mut k = sector_band(&f, &map);
        let mass = sector_mass(&f, &map);
        let mu_min = smallest_ratio(&k, &mass)?;
        if mu_min + f.lambda <= DEFINITE_MARGIN * mu_min {
            return Err(Error::IndefiniteReduced {
                mu_min,
                lambda: f.lambda,
            });
        }
        k.add_diagonal(&mass, f.lambda);
        let factor = k.cholesky().ok_or(Error::IndefiniteReduced {
            mu_min,
            lambda: f.lambda,
        })?;
        let exponents = f.nonlinearity.terms.iter().map(|t| t.p).collect();
        Ok(SectorProblem {
            f,
            map,
            factor,
            mu_min,
            exponents,
        })
    }

    pub fn to_sphere(&self, beta: &[f64]) -> Vec<f64> {
        self.factor.transpose_mul(beta)
    }

    pub fn profile(&self, a: &[f64]) -> Vec<f64> {
        self.map.expand(&self.factor.backward(a))
    }

    /// Root of `sum p_i Phi_i t^(p_i - 2) = 1`.
    fn ray_scale(&self, phis: &[f64]) -> Result<f64> {
        if phis.iter().all(|&p| !(p > 0.0)) {
            return Err(Error::AdmissibleCone { t: f64::INFINITY });
        }
        if phis.len() == 1 {
            let p = self.exponents[0];
            return Ok((1.0 / (p * phis[0])).powf(1.0 / (p - 2.0)));
        }
        let g = |t: f64| -> Result<f64> {
            Ok(phis
                .iter()
                .zip(&self.exponents)
                .map(|(f, p)| p * f * t.powf(p - 2.0))
                .sum::<f64>()
                - 1.0)
        };
        let (mut lo, mut hi) = (1.0, 1.0);
        let (mut glo, mut ghi) = (g(lo)?, g(hi)?);
        let mut n = 0;
        while glo > 0.0 {
            lo *= 0.5;
            glo = g(lo)?;
            n += 1;
            if n > 2000 {
                return Err(Error::AdmissibleCone { t: lo });
            }
        }
        while ghi < 0.0 {
            hi *= 2.0;
            ghi = g(hi)?;
            n += 1;
            if n > 2000 {
                return Err(Error::AdmissibleCone { t: hi });
            }
        }
        brent_root(g, lo, hi, glo, ghi, 1e-15 * hi, 200)
    }
}

impl SphereProblem for SectorProblem {
    type Point = RayPoint;

    fn evaluate(&self, a: &[f64], _warm: Option<&RayPoint>) -> Result<(f64, Vec<f64>, RayPoint)> {
        let unit = self.profile(a);
        let phis = self.f.term_potentials(&unit);
        let t = self.ray_scale(&phis)?;
        let value = 0.5 * t * t
            - phis
                .iter()
                .zip(&self.exponents)
                .map(|(f, p)| f * t.powf(*p))
                .sum::<f64>();
        let alpha: Vec<f64> = unit.iter().map(|x| t * x).collect();
        let g_beta: Vec<f64> = self.map.restrict(&self.f.gradient(&alpha)).iter().map(|g| t * g).collect();
        Ok((value, self.factor.forward(&g_beta), RayPoint { t, alpha }))
    }

    fn magnitude(&self, p: &RayPoint) -> f64 {
        p.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricReport {
    pub sector: Sector,
    pub domain: CylinderDomain,
    pub grid: MeridianGrid,
    pub lambda: f64,
    /// Lowest converged value of `J_Y` on the sector's Nehari manifold.
    pub value: f64,
    pub state: AxisymState,
    /// Reduced quadratic norm of the minimizer.
    pub t: f64,
    /// Smallest sector eigenvalue of the curl form relative to `|E|^2`.
    pub mu_min: f64,
    pub outer_residual: f64,
    pub outer_iterations: usize,
    pub ps_history: Vec<[f64; 2]>,
    pub multistart_spread: f64,
    /// `J_Y'(alpha)[alpha] / |alpha|^2`.
    pub nehari_residual: f64,
    /// Sector dual norm of `J_Y'(alpha)` over `|alpha|`.
    pub el_residual: f64,
    /// Largest entry of the full discrete gradient.
    pub gradient_max: f64,
    pub energy: ReducedBreakdown,
    pub runs: Vec<RunSummary>,
    pub warnings: Vec<String>,
}

/// Start for restart `i`: restart 0 is the lowest smooth mode of the
/// sector, even restarts are smooth random combinations, odd restarts are
/// nodal noise.
fn start_beta(problem: &SectorProblem, seed: u64, i: usize) -> Vec<f64> {
    let (d, g) = (&problem.f.domain, &problem.f.grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
    let full = if i == 0 {
        let n = if problem.map.sector == Sector::OddZ { 2.0 } else { 1.0 };
        AxisymState::sample(d, g, |r, z| (0.5 * PI * r / d.radius).cos() * (n * PI * z / d.height).sin()).alpha
    } else if i % 2 == 0 {
        let mut c = [[0.0; 4]; 4];
        for (m, row) in c.iter_mut().enumerate() {
            for (n, x) in row.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x = z / (((m + 1) * (m + 1) + (n + 1) * (n + 1)) as f64);
            }
        }
        AxisymState::sample(d, g, |r, z| {
            let mut s = 0.0;
            for (m, row) in c.iter().enumerate() {
                for (n, x) in row.iter().enumerate() {
                    s += x
                        * ((m as f64 + 0.5) * PI * r / d.radius).cos()
                        * ((n as f64 + 1.0) * PI * z / d.height).sin();
                }
            }
            s
        })
        .alpha
    } else {
        (0..g.n_unknowns()).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    // own-node values; the map symmetrizes on expansion
    problem.map.columns.iter().map(|col| full[col[0].0]).collect()
}

fn summarize(outcomes: &[Result<DescentRun<RayPoint>>]) -> Vec<RunSummary> {
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| match o {
            Ok(r) => RunSummary {
                restart: i,
                value: r.value,
                grad_norm: r.grad_norm,
                iterations: r.iterations,
                converged: r.converged,
                error: None,
            },
            Err(e) => RunSummary {
                restart: i,
                value: f64::NAN,
                grad_norm: f64::NAN,
                iterations: 0,
                converged: false,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn solve_with_starts(problem: &SectorProblem, cfg: &SolverConfig, extra: &[Vec<f64>]) -> Result<SymmetricReport> {
    cfg.validate()?;
    let mut starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|i| problem.to_sphere(&start_beta(problem, cfg.seed, i)))
        .collect();
    starts.extend(extra.iter().map(|b| problem.to_sphere(b)));
    let outcomes: Vec<Result<DescentRun<RayPoint>>> = starts
        .par_iter()
        .map(|a| sphere_descent(problem, a, cfg))
        .collect();
    let runs = summarize(&outcomes);
    let mut best: Option<&DescentRun<RayPoint>> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in outcomes.iter().flatten().filter(|r| r.converged) {
        lo = lo.min(r.value);
        hi = hi.max(r.value);
        if best.map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let Some(best) = best else {
        if let Some(r) = outcomes.iter().flatten().min_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm)) {
            return Err(Error::NonConvergence {
                stage: "symmetric descent",
                iterations: r.iterations,
                residual: r.grad_norm,
            });
        }
        return Err(outcomes.into_iter().find_map(|o| o.err()).expect("at least one start"));
    };
    let f = &problem.f;
    let alpha = best.point.alpha.clone();
    let grad = f.gradient(&alpha);
    let t = best.point.t;
    let g_sector = problem.factor.forward(&problem.map.restrict(&grad));
    let spread = hi - lo;
    let mut warnings = Vec::new();
    if spread > 10.0 * cfg.tol_outer * (1.0 + lo.abs()) {
        warnings.push(format!(
            "possible multiple local minimizers on the {} sector: converged values spread by {spread:e}",
            problem.map.sector.name()
        ));
    }
    for r in &runs {
        if let Some(e) = &r.error {
            warnings.push(format!("restart {} failed: {e}", r.restart));
        }
    }
    Ok(SymmetricReport {
        sector: problem.map.sector,
        domain: f.domain,
        grid: f.grid,
        lambda: f.lambda,
        value: best.value,
        t,
        mu_min: problem.mu_min,
        outer_residual: best.grad_norm,
        outer_iterations: best.iterations,
        ps_history: best.history.clone(),
        multistart_spread: spread,
        nehari_residual: dot(&grad, &alpha) / (t * t),
        el_residual: norm(&g_sector) / t,
        gradient_max: grad.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
        energy: f.breakdown(&alpha),
        state: AxisymState { alpha },
        runs,
        warnings,
    })
}

/// Sector ground state of the reduced energy.
pub fn solve_symmetric(
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
    sector: Sector,
    cfg: &SolverConfig,
) -> Result<SymmetricReport> {
    let f = ReducedFunctional::new(*domain, *grid, lambda, nonlinearity.clone())?;
    let problem = SectorProblem::new(f, sector)?;
    solve_with_starts(&problem, cfg, &[])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRow {
    pub sector: Sector,
    pub value: f64,
    pub t: f64,
    pub mu_min: f64,
    pub outer_residual: f64,
    pub outer_iterations: usize,
}

/// Critical values per sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorTable {
    pub domain: CylinderDomain,
    pub grid: MeridianGrid,
    pub lambda: f64,
    pub rows: Vec<SectorRow>,
    /// `c_all <= min(c_even, c_odd)` up to the outer tolerance; `None` with
    /// a single sector.
    pub nesting_holds: Option<bool>,
    pub notes: Vec<String>,
}

/// Solve every admissible sector. The parity sectors run first and their
/// minimizers seed extra starts of the unrestricted solve.
pub fn solve_sectors(
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
    cfg: &SolverConfig,
) -> Result<(SectorTable, Vec<SymmetricReport>)> {
    let mut notes = Vec::new();
    let parity = if nonlinearity.is_reflection_symmetric(domain.height) {
        let out: Vec<Result<SymmetricReport>> = [Sector::EvenZ, Sector::OddZ]
            .par_iter()
            .map(|&s| solve_symmetric(domain, grid, lambda, nonlinearity, s, cfg))
            .collect();
        out.into_iter().collect::<Result<Vec<_>>>()?
    } else {
        notes.push("coefficient is not even about the mid-plane; only the unrestricted sector is solved".into());
        Vec::new()
    };
    let f = ReducedFunctional::new(*domain, *grid, lambda, nonlinearity.clone())?;
    let problem = SectorProblem::new(f, Sector::All)?;
    let extra: Vec<Vec<f64>> = parity.iter().map(|r| r.state.alpha.clone()).collect();
    let all = solve_with_starts(&problem, cfg, &extra)?;
    let mut reports = vec![all];
    reports.extend(parity);
    let rows: Vec<SectorRow> = reports
        .iter()
        .map(|r| SectorRow {
            sector: r.sector,
            value: r.value,
            t: r.t,
            mu_min: r.mu_min,
            outer_residual: r.outer_residual,
            outer_iterations: r.outer_iterations,
        })
        .collect();
    let nesting_holds = (rows.len() == 3).then(|| {
        let c_all = rows[0].value;
        let floor = rows[1].value.min(rows[2].value);
        c_all <= floor + 10.0 * cfg.tol_outer * (1.0 + floor.abs())
    });
    Ok((
        SectorTable {
            domain: *domain,
            grid: *grid,
            lambda,
            rows,
            nesting_holds,
            notes,
        },
        reports,
    ))
}
