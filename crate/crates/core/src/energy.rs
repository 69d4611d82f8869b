//! The functional `J(v, w)`, its coefficient gradient, and the norms used by
//! the solvers.
//!
//! Quadratic parts are diagonal in the cavity basis. The potential term is
//! integrated by synthesizing the field on a de-aliased Gauss grid,
//! evaluating `F` pointwise and summing with the quadrature weights; its
//! gradient pairs the sampled `f` back against every mode field, which makes
//! it the exact adjoint of the discrete energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{NonlinearitySpec, TabulatedNonlinearity};
use crate::spectral::{split_spaces, GridSpec, ModeBasis, ModeTable, SpaceSplit, StateVector};

#[derive(Debug, Clone)]
pub struct EnergyContext {
    pub basis: ModeBasis,
    pub split: SpaceSplit,
    pub lambda: f64,
    pub nonlinearity: NonlinearitySpec,
    pub grid: GridSpec,
    /// Exponent of the reported `|grad w|_p`.
    pub p_norm: f64,
    table: ModeTable,
    tabulated: TabulatedNonlinearity,
}

impl EnergyContext {
    /// Context on the de-aliased grid for the largest exponent.
    pub fn new(basis: ModeBasis, lambda: f64, nonlinearity: NonlinearitySpec) -> Result<Self> {
        let p = if nonlinearity.is_zero() { 2.0 } else { nonlinearity.max_exponent() };
        let grid = GridSpec::dealiased(&basis, p)?;
        Self::with_grid(basis, lambda, nonlinearity, grid)
    }

    pub fn with_grid(basis: ModeBasis, lambda: f64, nonlinearity: NonlinearitySpec, grid: GridSpec) -> Result<Self> {
        let p = if nonlinearity.is_zero() { 2.0 } else { nonlinearity.max_exponent() };
        grid.check_resolution(&basis, p)?;
        if !nonlinearity.is_zero() {
            nonlinearity.validate()?;
        }
        let split = split_spaces(&basis, lambda)?;
        let table = ModeTable::new(&basis, &grid);
        let tabulated = nonlinearity.tabulate(&table.nodes);
        Ok(Self {
            basis,
            split,
            lambda,
            nonlinearity,
            grid,
            p_norm: p,
            table,
            tabulated,
        })
    }

    pub fn n_divfree(&self) -> usize {
        self.basis.n_divfree()
    }

    pub fn n_gradient(&self) -> usize {
        self.basis.n_gradient()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn table(&self) -> &ModeTable {
        &self.table
    }

    /// Eigenvalue `lambda_k` of div-free mode `k`.
    pub fn divfree_eigenvalue(&self, k: usize) -> f64 {
        self.basis.divfree[k].eigenvalue
    }

    /// `|k_j|^2 = int |grad phi_j|^2` of gradient mode `j`.
    pub fn gradient_eigenvalue(&self, j: usize) -> f64 {
        self.basis.gradient[j].eigenvalue
    }

    /// Same basis and grid with a different nonlinearity.
    pub fn with_nonlinearity(&self, nonlinearity: NonlinearitySpec) -> Result<Self> {
        Self::with_grid(self.basis.clone(), self.lambda, nonlinearity, self.grid.clone())
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        state.check(&self.basis)?;
        if state.v.iter().chain(&state.w).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("state has non-finite coefficients".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `1/2 int |curl v|^2`.
    pub quad_curl: f64,
    /// `lambda/2 int |v + grad w|^2`.
    pub quad_lambda: f64,
    /// `int F(x, v + grad w)`.
    pub potential: f64,
    /// `J = 1/2 |v+|^2 - I`.
    pub i_value: f64,
}

fn evaluate(state: &StateVector, ctx: &EnergyContext, want_grad: bool) -> Result<(EnergyBreakdown, Option<StateVector>)> {
    ctx.check(state)?;
    let basis = &ctx.basis;
    let lambda = ctx.lambda;

    let quad_curl: f64 = 0.5 * basis.divfree.iter().zip(&state.v).map(|(m, c)| m.eigenvalue * c * c).sum::<f64>();
    let l2: f64 = state.v.iter().map(|c| c * c).sum::<f64>()
        + basis.gradient.iter().zip(&state.w).map(|(m, c)| m.eigenvalue * c * c).sum::<f64>();
    let quad_lambda = 0.5 * lambda * l2;
    let nonpos_curl: f64 = ctx.split.nonpositive().iter().map(|&k| basis.divfree[k].eigenvalue * state.v[k] * state.v[k]).sum();

    let mut potential = 0.0;
    let mut pairs: Option<(Vec<f64>, Vec<f64>)> = None;
    if !ctx.tabulated.is_zero() {
        let table = &ctx.table;
        let mut field = vec![0.0; table.npts * 3];
        table.synthesize_into(&state.v, &state.w, &mut field);
        for (node, (u, &wq)) in field.chunks_exact_mut(3).zip(&table.weights).enumerate() {
            let (f_val, f_grad) = ctx.tabulated.eval(node, [u[0], u[1], u[2]]);
            potential += wq * f_val;
            // reuse the buffer for the weighted gradient samples
            u[0] = wq * f_grad[0];
            u[1] = wq * f_grad[1];
            u[2] = wq * f_grad[2];
        }
        if want_grad {
            pairs = Some(table.pair_weighted(&field));
        }
    }

    let total = quad_curl + quad_lambda - potential;
    let breakdown = EnergyBreakdown {
        total,
        quad_curl,
        quad_lambda,
        potential,
        i_value: -0.5 * nonpos_curl - quad_lambda + potential,
    };
    if !want_grad {
        return Ok((breakdown, None));
    }
    let (pv, pw) = pairs.unwrap_or_else(|| (vec![0.0; basis.n_divfree()], vec![0.0; basis.n_gradient()]));
    let v = basis
        .divfree
        .iter()
        .zip(&state.v)
        .zip(&pv)
        .map(|((m, c), p)| (m.eigenvalue + lambda) * c - p)
        .collect();
    let w = basis
        .gradient
        .iter()
        .zip(&state.w)
        .zip(&pw)
        .map(|((m, c), p)| lambda * m.eigenvalue * c - p)
        .collect();
    Ok((breakdown, Some(StateVector { v, w })))
}

/// Energy and its parts at `state`.
pub fn j_eval(state: &StateVector, ctx: &EnergyContext) -> Result<EnergyBreakdown> {
    Ok(evaluate(state, ctx, false)?.0)
}

/// Partial derivatives of `J` with respect to every coefficient, so that
/// `J'(state)[phi] = sum_c grad_c phi_c`.
pub fn j_grad(state: &StateVector, ctx: &EnergyContext) -> Result<StateVector> {
    Ok(evaluate(state, ctx, true)?.1.expect("gradient requested"))
}

pub fn value_and_grad(state: &StateVector, ctx: &EnergyContext) -> Result<(EnergyBreakdown, StateVector)> {
    let (b, g) = evaluate(state, ctx, true)?;
    Ok((b, g.expect("gradient requested")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `|curl v|_2`.
    pub v_curl: f64,
    /// `|v|_2`.
    pub v_l2: f64,
    /// `|grad w|_p` by quadrature.
    pub grad_w_p: f64,
    /// `(|curl v|_2^2 + |grad w|_p^2)^(1/2)`.
    pub total: f64,
}

pub fn norms(state: &StateVector, ctx: &EnergyContext) -> Result<Norms> {
    ctx.check(state)?;
    let v_curl = ctx
        .basis
        .divfree
        .iter()
        .zip(&state.v)
        .map(|(m, c)| m.eigenvalue * c * c)
        .sum::<f64>()
        .sqrt();
    let v_l2 = state.v.iter().map(|c| c * c).sum::<f64>().sqrt();
    let grad_w_p = if state.w.iter().all(|&c| c == 0.0) {
        0.0
    } else {
        let table = &ctx.table;
        let mut field = vec![0.0; table.npts * 3];
        let zeros = vec![0.0; ctx.n_divfree()];
        table.synthesize_into(&zeros, &state.w, &mut field);
        let p = ctx.p_norm;
        field
            .chunks_exact(3)
            .zip(&table.weights)
            .map(|(u, wq)| wq * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).powf(0.5 * p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    Ok(Norms {
        v_curl,
        v_l2,
        grad_w_p,
        total: (v_curl * v_curl + grad_w_p * grad_w_p).sqrt(),
    })
}

/// Energy parts of an arbitrary field given by its value and curl on a
/// weighted point set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldEnergy {
    pub curl_sq: f64,
    pub l2_sq: f64,
    pub potential: f64,
    pub total: f64,
}

pub fn field_energy<E>(points: &[([f64; 3], f64)], eval: E, lambda: f64, nonlinearity: &NonlinearitySpec) -> FieldEnergy
where
    E: Fn([f64; 3]) -> ([f64; 3], [f64; 3]),
{
    let mut curl_sq = 0.0;
    let mut l2_sq = 0.0;
    let mut potential = 0.0;
    for &(x, wq) in points {
        let (e, c) = eval(x);
        curl_sq += wq * (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
        l2_sq += wq * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
        if !nonlinearity.is_zero() {
            potential += wq * nonlinearity.eval(x, e).0;
        }
    }
    FieldEnergy {
        curl_sq,
        l2_sq,
        potential,
        total: 0.5 * curl_sq + 0.5 * lambda * l2_sq - potential,
    }
}
