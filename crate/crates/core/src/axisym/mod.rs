//! Azimuthal fields `E = alpha(r, x3) (-x2, x1, 0)` on a solid cylinder,
//! reduced to the meridian rectangle.

mod banded;
pub mod lift;
pub mod reduced;
pub mod solve;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lift::{
    lift_to_3d, lifted_energy, lifted_trace_residual, lifted_weak_divergence, lifted_weak_residual, CylinderQuadrature,
    ProfileInterpolant,
};
pub use reduced::{reduced_energy, reduced_gradient, ReducedBreakdown, ReducedFunctional};
pub use solve::{
    reduced_spectrum_min, solve_sectors, solve_symmetric, SectorRow, SectorTable, SymmetricReport,
};

/// `{r < R, 0 < x3 < H}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderDomain {
    pub radius: f64,
    pub height: f64,
}

impl CylinderDomain {
    pub fn new(radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cylinder needs R, H > 0, got R = {radius}, H = {height}"
            )));
        }
        Ok(CylinderDomain { radius, height })
    }
}

/// Cell-centred radial nodes `r_i = (i + 1/2) dr`, `i < nr`, with the wall
/// `r = R` at the ghost index `nr`; vertex-centred axial nodes `z_j = j dz`,
/// `j <= nz`. Unknowns are the nodes with `i < nr` and `0 < j < nz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeridianGrid {
    pub nr: usize,
    pub nz: usize,
}

impl MeridianGrid {
    pub fn new(nr: usize, nz: usize) -> Result<Self> {
        if nr < 1 || nz < 2 {
            return Err(Error::InvalidParameter(format!(
                "meridian grid needs nr >= 1 and nz >= 2, got ({nr}, {nz})"
            )));
        }
        Ok(MeridianGrid { nr, nz })
    }

    pub fn n_unknowns(&self) -> usize {
        self.nr * (self.nz - 1)
    }

    pub fn dr(&self, domain: &CylinderDomain) -> f64 {
        domain.radius / (self.nr as f64 + 0.5)
    }

    pub fn dz(&self, domain: &CylinderDomain) -> f64 {
        domain.height / self.nz as f64
    }

    pub fn r(&self, domain: &CylinderDomain, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr(domain)
    }

    pub fn z(&self, domain: &CylinderDomain, j: usize) -> f64 {
        j as f64 * self.dz(domain)
    }

    /// Flat index of the interior node `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nr && j >= 1 && j < self.nz);
        i + self.nr * (j - 1)
    }

    #[inline]
    pub fn unflatten(&self, m: usize) -> (usize, usize) {
        (m % self.nr, m / self.nr + 1)
    }

    /// Grid with both cell counts multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        MeridianGrid {
            nr: self.nr * factor,
            nz: self.nz * factor,
        }
    }
}

/// Profile values at the interior nodes, in [`MeridianGrid::index`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisymState {
    pub alpha: Vec<f64>,
}

impl AxisymState {
    pub fn zeros(grid: &MeridianGrid) -> Self {
        AxisymState {
            alpha: vec![0.0; grid.n_unknowns()],
        }
    }

    /// Sample a profile `alpha(r, z)` at the interior nodes.
    pub fn sample<F: Fn(f64, f64) -> f64>(domain: &CylinderDomain, grid: &MeridianGrid, profile: F) -> Self {
        AxisymState {
            alpha: (0..grid.n_unknowns())
                .map(|m| {
                    let (i, j) = grid.unflatten(m);
                    profile(grid.r(domain, i), grid.z(domain, j))
                })
                .collect(),
        }
    }

    pub fn check(&self, grid: &MeridianGrid) -> Result<()> {
        if self.alpha.len() != grid.n_unknowns() {
            return Err(Error::Incompatible(format!(
                "profile has {} values, the grid has {} unknowns",
                self.alpha.len(),
                grid.n_unknowns()
            )));
        }
        if self.alpha.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("profile has non-finite entries".into()));
        }
        Ok(())
    }

    /// Rows `(r, z, alpha)` over all nodes, Dirichlet nodes included.
    pub fn profile_rows(&self, domain: &CylinderDomain, grid: &MeridianGrid) -> Vec<[f64; 3]> {
        let mut rows = Vec::with_capacity((grid.nr + 1) * (grid.nz + 1));
        for j in 0..=grid.nz {
            for i in 0..=grid.nr {
                let a = if i < grid.nr && j > 0 && j < grid.nz {
                    self.alpha[grid.index(i, j)]
                } else {
                    0.0
                };
                let r = if i == grid.nr { domain.radius } else { grid.r(domain, i) };
                rows.push([r, grid.z(domain, j), a]);
            }
        }
        rows
    }
}

/// Symmetry class in `x3` about the mid-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    All,
    EvenZ,
    OddZ,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::All, Sector::EvenZ, Sector::OddZ];

    pub fn name(&self) -> &'static str {
        match self {
            Sector::All => "all",
            Sector::EvenZ => "even-z",
            Sector::OddZ => "odd-z",
        }
    }
}

/// Linear map from sector coordinates to full profiles. Column `c` places
/// `1` at its own node and `+-1` at the mirror node `nz - j`.
#[derive(Debug, Clone)]
pub(crate) struct SectorMap {
    pub sector: Sector,
    pub n_full: usize,
    /// Per sector coordinate: `(node, sign)` entries.
    pub columns: Vec<Vec<(usize, f64)>>,
}

impl SectorMap {
    pub fn new(grid: &MeridianGrid, sector: Sector) -> Self {
        let nz = grid.nz;
        let mut columns = Vec::new();
        for j in 1..nz {
            let mirror = nz - j;
            let keep = match sector {
                Sector::All => true,
                Sector::EvenZ => j <= mirror,
                Sector::OddZ => j < mirror,
            };
            if !keep {
                continue;
            }
            for i in 0..grid.nr {
                let mut col = vec![(grid.index(i, j), 1.0)];
                match sector {
                    Sector::EvenZ if mirror != j => col.push((grid.index(i, mirror), 1.0)),
                    Sector::OddZ => col.push((grid.index(i, mirror), -1.0)),
                    _ => {}
                }
                columns.push(col);
            }
        }
        SectorMap {
            sector,
            n_full: grid.n_unknowns(),
            columns,
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn expand(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (col, b) in self.columns.iter().zip(beta) {
            for &(m, s) in col {
                out[m] += s * b;
            }
        }
        out
    }

    /// Transpose of [`SectorMap::expand`].
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(m, s)| s * full[m]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let d = CylinderDomain::new(2.0, 3.0).unwrap();
        let g = MeridianGrid::new(4, 6).unwrap();
        assert_eq!(g.n_unknowns(), 20);
        assert!((g.r(&d, 0) - 0.5 * g.dr(&d)).abs() < 1e-15);
        assert!((g.r(&d, 4) - 2.0).abs() < 1e-14);
        assert!((g.z(&d, 6) - 3.0).abs() < 1e-15);
        for m in 0..g.n_unknowns() {
            let (i, j) = g.unflatten(m);
            assert_eq!(g.index(i, j), m);
        }
        assert!(CylinderDomain::new(0.0, 1.0).is_err());
        assert!(MeridianGrid::new(3, 1).is_err());
    }

    #[test]
    fn sector_maps_are_adjoint_and_symmetric() {
        for nz in [6, 7] {
            let g = MeridianGrid::new(3, nz).unwrap();
            for s in Sector::ALL {
                let p = SectorMap::new(&g, s);
                let beta: Vec<f64> = (0..p.dim()).map(|k| (k as f64 * 0.37).sin() + 0.1).collect();
                let full = p.expand(&beta);
                for i in 0..3 {
                    for j in 1..nz {
                        let (a, b) = (full[g.index(i, j)], full[g.index(i, nz - j)]);
                        match s {
                            Sector::EvenZ => assert_eq!(a, b),
                            Sector::OddZ => assert_eq!(a, -b),
                            Sector::All => {}
                        }
                    }
                }
                let y: Vec<f64> = (0..g.n_unknowns()).map(|k| (k as f64 * 1.3).cos()).collect();
                let lhs: f64 = full.iter().zip(&y).map(|(a, b)| a * b).sum();
                let rhs: f64 = beta.iter().zip(p.restrict(&y)).map(|(a, b)| a * b).sum();
                assert!((lhs - rhs).abs() < 1e-12);
            }
            assert_eq!(SectorMap::new(&g, Sector::All).dim(), g.n_unknowns());
            let even = SectorMap::new(&g, Sector::EvenZ).dim();
            let odd = SectorMap::new(&g, Sector::OddZ).dim();
            assert_eq!(even + odd, g.n_unknowns());
        }
    }

    #[test]
    fn profile_rows_include_dirichlet_nodes() {
        let d = CylinderDomain::new(1.0, 1.0).unwrap();
        let g = MeridianGrid::new(2, 3).unwrap();
        let s = AxisymState::sample(&d, &g, |r, z| r + z);
        let rows = s.profile_rows(&d, &g);
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().filter(|r| r[0] == 1.0).all(|r| r[2] == 0.0));
        assert!(rows.iter().filter(|r| r[1] == 0.0).all(|r| r[2] == 0.0));
    }
}
