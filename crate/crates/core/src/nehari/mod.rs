//! Nehari-Pankov machinery: projection of a ray onto the manifold, descent
//! of the reduced functional over the unit sphere of `X+`, residual
//! diagnostics, and a brute-force oracle for small truncations.
//!
//! A point of the sphere is stored as div-free coefficients over the `plus`
//! block with `sum lambda_k u_k^2 = 1`. The descent itself runs in the
//! isometric coordinates `a_k = sqrt(lambda_k) u_k`, where the sphere is the
//! Euclidean one.

mod inner;
pub(crate) mod optim;
mod oracle;
mod outer;
mod sphere;

use serde::{Deserialize, Serialize};

use crate::energy::{j_grad, EnergyContext};
use crate::error::{Error, Result};
use crate::spectral::StateVector;

pub use inner::{inner_maximize, inner_maximize_from, scalar_nehari_scale};
pub use oracle::{oracle_dense, OracleReport, ORACLE_DIM_LIMIT};
pub use outer::{ground_state, outer_gradient, reduced_value, start_direction, RunSummary, SolverReport};
pub use sphere::{sphere_descent, DescentRun, SphereProblem};


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearch {
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    /// Sufficient-decrease constant in (0, 1).
    pub armijo: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            shrink: 0.5,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Inner stationarity, relative to `1 + |J|`.
    pub tol_inner: f64,
    /// Tangential gradient norm, relative to `1 + |J|`.
    pub tol_outer: f64,
    pub max_inner_iters: usize,
    pub max_outer_iters: usize,
    pub linesearch: LineSearch,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_inner: 1e-10,
            tol_outer: 1e-7,
            max_inner_iters: 500,
            max_outer_iters: 2000,
            linesearch: LineSearch::default(),
            restarts: 4,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ls = &self.linesearch;
        if !(self.tol_inner > 0.0 && self.tol_outer > 0.0) {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) || !(ls.armijo > 0.0 && ls.armijo < 1.0) {
            return Err(Error::InvalidParameter(
                "line search shrink and armijo constants must lie in (0, 1)".into(),
            ));
        }
        if self.restarts == 0 || self.max_inner_iters == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("iteration budgets and restarts must be positive".into()));
        }
        Ok(())
    }
}

/// `m(u)`: the maximizer of `J` over `R+ u + X~`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NehariPoint {
    /// Plus-block coefficients with unit `V`-norm.
    pub direction: Vec<f64>,
    pub t: f64,
    /// Coefficients over the nonpositive div-free modes, in basis order.
    pub tilde: Vec<f64>,
    /// Gradient-block coefficients.
    pub w: Vec<f64>,
    pub value: f64,
    pub inner_residual: f64,
    pub iterations: usize,
}

impl NehariPoint {
    pub fn state(&self, ctx: &EnergyContext) -> StateVector {
        Layout::new(ctx).assemble(ctx, self.t, &self.direction, &self.tilde, &self.w)
    }
}

/// Index bookkeeping for the plus / nonpositive / gradient blocks.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub plus: Vec<usize>,
    pub nonpos: Vec<usize>,
    pub sqrt_eig_plus: Vec<f64>,
    /// `|k_j|`, the L2 norm of gradient mode `j`.
    pub grad_scale: Vec<f64>,
}

impl Layout {
    pub fn new(ctx: &EnergyContext) -> Self {
        let plus = ctx.split.plus.clone();
        let sqrt_eig_plus = plus.iter().map(|&k| ctx.divfree_eigenvalue(k).sqrt()).collect();
        Layout {
            nonpos: ctx.split.nonpositive(),
            grad_scale: (0..ctx.n_gradient()).map(|j| ctx.gradient_eigenvalue(j).sqrt()).collect(),
            plus,
            sqrt_eig_plus,
        }
    }

    pub fn assemble(&self, ctx: &EnergyContext, t: f64, dir: &[f64], tilde: &[f64], w: &[f64]) -> StateVector {
        let mut s = StateVector::zeros(&ctx.basis);
        for (&k, &u) in self.plus.iter().zip(dir) {
            s.v[k] = t * u;
        }
        for (&k, &b) in self.nonpos.iter().zip(tilde) {
            s.v[k] = b;
        }
        s.w.copy_from_slice(w);
        s
    }

    /// Unit `V`-norm copy of a plus-block vector.
    pub fn normalize(&self, dir: &[f64]) -> Result<Vec<f64>> {
        if dir.len() != self.plus.len() {
            return Err(Error::Incompatible(format!(
                "direction has {} entries, the plus block has {}",
                dir.len(),
                self.plus.len()
            )));
        }
        let n = dir
            .iter()
            .zip(&self.sqrt_eig_plus)
            .map(|(u, s)| (s * u) * (s * u))
            .sum::<f64>()
            .sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter("direction must have a nonzero, finite plus part".into()));
        }
        Ok(dir.iter().map(|u| u / n).collect())
    }

    pub fn from_sphere(&self, a: &[f64]) -> Vec<f64> {
        a.iter().zip(&self.sqrt_eig_plus).map(|(a, s)| a / s).collect()
    }
}

/// Components of the manifold condition at a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariResidual {
    /// `J'(s)[s]`.
    pub self_pairing: f64,
    /// `max |J'(s)[phi]|` over the nonpositive div-free and gradient modes.
    pub tilde_residual: f64,
}

pub fn nehari_residual(state: &StateVector, ctx: &EnergyContext) -> Result<NehariResidual> {
    let g = j_grad(state, ctx)?;
    Ok(residual_from_gradient(state, &g, ctx))
}

pub(crate) fn residual_from_gradient(state: &StateVector, g: &StateVector, ctx: &EnergyContext) -> NehariResidual {
    let tilde_residual = ctx
        .split
        .nonpositive()
        .iter()
        .map(|&k| g.v[k].abs())
        .chain(g.w.iter().map(|x| x.abs()))
        .fold(0.0, f64::max);
    NehariResidual {
        self_pairing: g.dot(state),
        tilde_residual,
    }
}

/// `|grad phi_j|_p` for every gradient mode, by quadrature.
pub fn gradient_mode_norms(ctx: &EnergyContext) -> Vec<f64> {
    let table = ctx.table();
    let p = ctx.p_norm;
    (0..ctx.n_gradient())
        .map(|j| {
            table
                .gradient_field(j)
                .chunks_exact(3)
                .zip(&table.weights)
                .map(|(u, wq)| wq * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).powf(0.5 * p))
                .sum::<f64>()
                .powf(1.0 / p)
        })
        .collect()
}

/// Weak Euler-Lagrange residual: `max |J'(s)[phi]| / |phi|` over all basis
/// test fields, measured in the norm `(|curl v|_2^2 + |grad w|_p^2)^(1/2)`.
pub fn el_residual(state: &StateVector, ctx: &EnergyContext) -> Result<f64> {
    let g = j_grad(state, ctx)?;
    let gnorms = gradient_mode_norms(ctx);
    let v = g
        .v
        .iter()
        .enumerate()
        .map(|(k, x)| x.abs() / ctx.divfree_eigenvalue(k).sqrt());
    let w = g.w.iter().zip(&gnorms).map(|(x, n)| x.abs() / n);
    Ok(v.chain(w).fold(0.0, f64::max))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::energy::EnergyContext;
    use crate::nonlinearity::{CoefficientField, NonlinearitySpec, PowerTerm};
    use crate::spectral::{enumerate_modes, BoxDomain, ModeIndex};

    pub fn quartic() -> NonlinearitySpec {
        NonlinearitySpec::power(1.0, 4.0).unwrap()
    }

    pub fn anisotropic_step() -> NonlinearitySpec {
        NonlinearitySpec::new(vec![PowerTerm {
            gamma: CoefficientField::Step {
                axis: 2,
                threshold: 1.5,
                below: 1.0,
                above: 2.0,
            },
            matrix: [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            p: 3.0,
        }])
        .unwrap()
    }

    /// The lone `(1,1,0)` mode.
    pub fn single_mode() -> EnergyContext {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 2.5).unwrap();
        let b = b.select(&[ModeIndex::divfree([1, 1, 0], 0).unwrap()]).unwrap();
        EnergyContext::new(b, 0.0, quartic()).unwrap()
    }

    pub fn small(lambda: f64, nl: NonlinearitySpec) -> EnergyContext {
        let b = enumerate_modes(&BoxDomain::pi_cube(), 3.5).unwrap();
        EnergyContext::new(b, lambda, nl).unwrap()
    }
}
