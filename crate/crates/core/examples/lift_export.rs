//! Lift a cylinder ground state to 3D, compare energies and write VTK.

use std::f64::consts::PI;

use maxwell_nehari::axisym::{
    lift_to_3d, lifted_energy, lifted_trace_residual, solve_symmetric, CylinderDomain, CylinderQuadrature,
    MeridianGrid, Sector,
};
use maxwell_nehari::io::vtk_structured_points;
use maxwell_nehari::nehari::SolverConfig;
use maxwell_nehari::nonlinearity::NonlinearitySpec;
use maxwell_nehari::spectral::GridSpec;

fn main() -> maxwell_nehari::Result<()> {
    let domain = CylinderDomain::new(PI, PI)?;
    let grid = MeridianGrid::new(16, 16)?;
    let nl = NonlinearitySpec::power(1.0, 4.0)?;
    let report = solve_symmetric(&domain, &grid, 0.0, &nl, Sector::All, &SolverConfig::default())?;
    let lifted = lifted_energy(&report.state, &domain, &grid, 0.0, &nl, &CylinderQuadrature::default())?;
    println!("reduced {:.8}, lifted {:.8}", report.value, lifted.total);

    let target = GridSpec::uniform_on([-PI, -PI, 0.0], [2.0 * PI, 2.0 * PI, PI], [24, 24, 12])?;
    let field = lift_to_3d(&report.state, &domain, &grid, &target)?;
    println!("trace residual {:.3e}", lifted_trace_residual(&field, &domain, 200)?);
    let path = std::env::temp_dir().join("lifted.vtk");
    std::fs::write(&path, vtk_structured_points(&field, None, "lifted ground state")?)?;
    println!("wrote {}", path.display());
    Ok(())
}
