//! The reduced energy of azimuthal fields `E = alpha(r, z) (-x2, x1, 0)`.
//!
//! With `E = r alpha e_theta`, `curl E = -r alpha_z e_r + (2 alpha + r alpha_r) e_z`
//! and `dx = 2 pi r dr dz`, so
//!
//! `J_Y = pi int [r^2 alpha_z^2 + (2 alpha + r alpha_r)^2 + lambda r^2 alpha^2] r dr dz
//!        - 2 pi int F(x, r alpha) r dr dz`.
//!
//! The radial curl term is `(q_r / r)^2 r` with `q = r^2 alpha`, differenced
//! between neighbouring nodes (the last neighbour being the wall node
//! `r = R`) and over the half cell next to the axis, where `q` vanishes like
//! `r^2`. These intervals tile `[0, R]`.

use serde::{Deserialize, Serialize};

use super::{AxisymState, CylinderDomain, MeridianGrid};
use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use std::f64::consts::PI;

/// Reduced functional on a fixed grid with tabulated coefficients.
#[derive(Debug, Clone)]
pub struct ReducedFunctional {
    pub domain: CylinderDomain,
    pub grid: MeridianGrid,
    pub lambda: f64,
    pub nonlinearity: NonlinearitySpec,
    /// `Gamma_term(node)`, per term.
    gamma: Vec<Vec<f64>>,
}

/// Parts of the reduced energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedBreakdown {
    /// `pi int r^2 alpha_z^2 r`.
    pub axial: f64,
    /// `pi int (2 alpha + r alpha_r)^2 r`.
    pub radial: f64,
    /// `pi lambda int r^2 alpha^2 r`.
    pub lambda_part: f64,
    /// `2 pi int F r`.
    pub potential: f64,
    pub total: f64,
}

impl ReducedFunctional {
    pub fn new(domain: CylinderDomain, grid: MeridianGrid, lambda: f64, nonlinearity: NonlinearitySpec) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        if !nonlinearity.is_zero() {
            nonlinearity.validate()?;
            if !nonlinearity.is_axisymmetric() {
                return Err(Error::NotSymmetric(
                    "the azimuthal ansatz requires F radial in u and invariant under rotations about the axis".into(),
                ));
            }
        }
        let gamma = nonlinearity
            .terms
            .iter()
            .map(|t| {
                (0..grid.n_unknowns())
                    .map(|m| {
                        let (i, j) = grid.unflatten(m);
                        t.gamma.eval([grid.r(&domain, i), 0.0, grid.z(&domain, j)])
                    })
                    .collect()
            })
            .collect();
        Ok(ReducedFunctional {
            domain,
            grid,
            lambda,
            nonlinearity,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n_unknowns()
    }

    fn steps(&self) -> (f64, f64) {
        (self.grid.dr(&self.domain), self.grid.dz(&self.domain))
    }

    /// `alpha` at `(i, j)` including the Dirichlet rows and column.
    #[inline]
    fn at(&self, alpha: &[f64], i: usize, j: usize) -> f64 {
        if i >= self.grid.nr || j == 0 || j >= self.grid.nz {
            0.0
        } else {
            alpha[self.grid.index(i, j)]
        }
    }

    /// Quadratic curl parts `(axial, radial)`.
    fn curl_parts(&self, alpha: &[f64]) -> (f64, f64) {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let (dr, dz) = self.steps();
        let mut axial = 0.0;
        let mut radial = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            let wa = PI * r * r * r * dr / dz;
            for j in 0..nz {
                let d = self.at(alpha, i, j + 1) - self.at(alpha, i, j);
                axial += wa * d * d;
            }
        }
        for j in 1..nz {
            let q0 = self.q(alpha, 0, j);
            radial += PI * dz * 8.0 * q0 * q0 / (dr * dr);
            for i in 0..nr {
                let dq = self.q(alpha, i + 1, j) - self.q(alpha, i, j);
                radial += PI * dz * dq * dq / ((i + 1) as f64 * dr * dr);
            }
        }
        (axial, radial)
    }

    #[inline]
    fn q(&self, alpha: &[f64], i: usize, j: usize) -> f64 {
        let r = (i as f64 + 0.5) * self.grid.dr(&self.domain);
        r * r * self.at(alpha, i, j)
    }

    /// Diagonal mass `2 pi r^3 dr dz`, so that the lambda part is `lambda/2 alpha^T M alpha`.
    pub fn mass(&self) -> Vec<f64> {
        let (dr, dz) = self.steps();
        (0..self.n())
            .map(|m| {
                let r = self.grid.r(&self.domain, self.grid.unflatten(m).0);
                2.0 * PI * r * r * r * dr * dz
            })
            .collect()
    }

    /// Quadrature weight `2 pi r dr dz` of the potential term.
    fn weight(&self, m: usize) -> f64 {
        let (dr, dz) = self.steps();
        2.0 * PI * self.grid.r(&self.domain, self.grid.unflatten(m).0) * dr * dz
    }

    /// Per-term potentials `2 pi sum r F_i(x, r alpha)`, so that
    /// `Phi(t alpha) = sum_i t^(p_i) Phi_i(alpha)`.
    pub fn term_potentials(&self, alpha: &[f64]) -> Vec<f64> {
        self.nonlinearity
            .terms
            .iter()
            .zip(&self.gamma)
            .map(|(t, g)| {
                (0..self.n())
                    .map(|m| {
                        let r = self.grid.r(&self.domain, self.grid.unflatten(m).0);
                        self.weight(m) * t.eval_with(g[m], [0.0, r * alpha[m], 0.0]).0
                    })
                    .sum()
            })
            .collect()
    }

    pub fn breakdown(&self, alpha: &[f64]) -> ReducedBreakdown {
        let (axial, radial) = self.curl_parts(alpha);
        let mass = self.mass();
        let lambda_part = 0.5 * self.lambda * alpha.iter().zip(&mass).map(|(a, m)| m * a * a).sum::<f64>();
        let potential: f64 = self.term_potentials(alpha).iter().sum();
        ReducedBreakdown {
            axial,
            radial,
            lambda_part,
            potential,
            total: axial + radial + lambda_part - potential,
        }
    }

    pub fn energy(&self, alpha: &[f64]) -> f64 {
        self.breakdown(alpha).total
    }

    /// `K_curl alpha`, the gradient of the curl parts.
    pub fn apply_curl(&self, alpha: &[f64]) -> Vec<f64> {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let (dr, dz) = self.steps();
        let mut g = vec![0.0; self.n()];
        for i in 0..nr {
            let r = (i as f64 + 0.5) * dr;
            let wa = 2.0 * PI * r * r * r * dr / dz;
            for j in 1..nz {
                let c = self.at(alpha, i, j);
                g[self.grid.index(i, j)] += wa * (2.0 * c - self.at(alpha, i, j - 1) - self.at(alpha, i, j + 1));
            }
        }
        for j in 1..nz {
            let r0 = 0.5 * dr;
            let q0 = self.q(alpha, 0, j);
            g[self.grid.index(0, j)] += 16.0 * PI * dz * q0 / (dr * dr) * r0 * r0;
            for i in 0..nr {
                let dq = self.q(alpha, i + 1, j) - self.q(alpha, i, j);
                let s = 2.0 * PI * dz * dq / ((i + 1) as f64 * dr * dr);
                let ri = (i as f64 + 0.5) * dr;
                g[self.grid.index(i, j)] -= s * ri * ri;
                if i + 1 < nr {
                    let rn = (i as f64 + 1.5) * dr;
                    g[self.grid.index(i + 1, j)] += s * rn * rn;
                }
            }
        }
        g
    }

    /// Gradient of the potential term.
    pub fn potential_gradient(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|m| {
                let r = self.grid.r(&self.domain, self.grid.unflatten(m).0);
                let u = [0.0, r * alpha[m], 0.0];
                let fy: f64 = self
                    .nonlinearity
                    .terms
                    .iter()
                    .zip(&self.gamma)
                    .map(|(t, g)| t.eval_with(g[m], u).1[1])
                    .sum();
                self.weight(m) * fy * r
            })
            .collect()
    }

    pub fn gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let curl = self.apply_curl(alpha);
        let pot = self.potential_gradient(alpha);
        let mass = self.mass();
        (0..self.n())
            .map(|m| curl[m] + self.lambda * mass[m] * alpha[m] - pot[m])
            .collect()
    }
}

fn checked<'a>(state: &'a AxisymState, f: &ReducedFunctional) -> Result<&'a [f64]> {
    if state.alpha.len() != f.n() {
        return Err(Error::Incompatible(format!(
            "profile has {} values, the grid has {} unknowns",
            state.alpha.len(),
            f.n()
        )));
    }
    Ok(&state.alpha)
}

/// `J_Y(alpha)`.
pub fn reduced_energy(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
) -> Result<f64> {
    let f = ReducedFunctional::new(*domain, *grid, lambda, nonlinearity.clone())?;
    Ok(f.energy(checked(state, &f)?))
}

/// Gradient of `J_Y` with respect to the interior nodal values.
pub fn reduced_gradient(
    state: &AxisymState,
    domain: &CylinderDomain,
    grid: &MeridianGrid,
    lambda: f64,
    nonlinearity: &NonlinearitySpec,
) -> Result<AxisymState> {
    let f = ReducedFunctional::new(*domain, *grid, lambda, nonlinearity.clone())?;
    Ok(AxisymState {
        alpha: f.gradient(checked(state, &f)?),
    })
}
