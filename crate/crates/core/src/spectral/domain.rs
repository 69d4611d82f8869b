use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular cavity `(0, L1) x (0, L2) x (0, L3)` with perfectly
/// conducting walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    edges: [f64; 3],
}

impl BoxDomain {
    pub fn new(edges: [f64; 3]) -> Result<Self> {
        if edges.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::InvalidDomain(format!(
                "box edges must be positive and finite, got {edges:?}"
            )));
        }
        Ok(Self { edges })
    }

    /// The cube `(0, pi)^3`, used throughout the test fixtures.
    pub fn pi_cube() -> Self {
        Self {
            edges: [std::f64::consts::PI; 3],
        }
    }

    pub fn edges(&self) -> [f64; 3] {
        self.edges
    }

    pub fn volume(&self) -> f64 {
        self.edges.iter().product()
    }

    /// Wavenumber `k pi / L` along `axis`.
    pub fn wavenumber(&self, axis: usize, k: u32) -> f64 {
        k as f64 * std::f64::consts::PI / self.edges[axis]
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        (0..3).all(|a| x[a] >= 0.0 && x[a] <= self.edges[a])
    }
}
