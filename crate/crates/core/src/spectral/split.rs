use serde::{Deserialize, Serialize};

use super::modes::ModeBasis;
use crate::error::{Error, Result};

/// Relative tolerance deciding `lambda_k + lambda == 0`.
pub const KERNEL_TOL: f64 = 1e-12;

/// Partition of the div-free modes by the sign of `lambda_k + lambda`.
///
/// `plus` spans the subspace where `Q(v) = |curl v|^2 + lambda |v|^2` is
/// positive definite; `tilde` and `kernel` together span the negative
/// semidefinite part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSplit {
    pub lambda: f64,
    pub plus: Vec<usize>,
    pub tilde: Vec<usize>,
    pub kernel: Vec<usize>,
    /// Coercivity margin `min_{plus} (lambda_k + lambda) / lambda_k`.
    pub delta: f64,
    /// Margin on the negative part, `min_{tilde} -(lambda_k + lambda) / lambda_k`;
    /// `None` when `tilde` is empty.
    pub tilde_margin: Option<f64>,
}

impl SpaceSplit {
    /// Number of modes on which `Q` is nonpositive.
    pub fn n(&self) -> usize {
        self.tilde.len() + self.kernel.len()
    }

    /// `-lambda` is an eigenvalue: downstream needs a strictly convex `F`.
    pub fn needs_strict_convexity(&self) -> bool {
        !self.kernel.is_empty()
    }

    /// Indices of `tilde` and `kernel` together, in basis order.
    pub fn nonpositive(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.tilde.iter().chain(&self.kernel).copied().collect();
        v.sort_unstable();
        v
    }
}

/// Split the div-free modes for `lambda <= 0`.
pub fn split_spaces(basis: &ModeBasis, lambda: f64) -> Result<SpaceSplit> {
    if !lambda.is_finite() || lambda > 0.0 {
        return Err(Error::Refusal(format!(
            "the Nehari-Pankov splitting is built for lambda <= 0, got {lambda}"
        )));
    }
    basis.ensure_usable()?;
    let mut plus = Vec::new();
    let mut tilde = Vec::new();
    let mut kernel = Vec::new();
    let mut delta = f64::INFINITY;
    let mut tilde_margin: Option<f64> = None;
    for (i, m) in basis.divfree.iter().enumerate() {
        let shifted = m.eigenvalue + lambda;
        if shifted.abs() <= KERNEL_TOL * m.eigenvalue.max(1.0) {
            kernel.push(i);
        } else if shifted > 0.0 {
            plus.push(i);
            delta = delta.min(shifted / m.eigenvalue);
        } else {
            tilde.push(i);
            let margin = -shifted / m.eigenvalue;
            tilde_margin = Some(tilde_margin.map_or(margin, |t: f64| t.min(margin)));
        }
    }
    if plus.is_empty() {
        return Err(Error::NoPositiveSubspace { lambda });
    }
    Ok(SpaceSplit {
        lambda,
        plus,
        tilde,
        kernel,
        delta,
        tilde_margin,
    })
}
