//! Critical values of the reduced cylinder problem per parity sector.

use maxwell_nehari::axisym::{solve_sectors, CylinderDomain, MeridianGrid};
use maxwell_nehari::nehari::SolverConfig;
use maxwell_nehari::nonlinearity::NonlinearitySpec;

fn main() -> maxwell_nehari::Result<()> {
    let domain = CylinderDomain::new(1.0, 2.0)?;
    let grid = MeridianGrid::new(16, 24)?;
    let nl = NonlinearitySpec::power(1.0, 4.0)?;
    let (table, _) = solve_sectors(&domain, &grid, -1.0, &nl, &SolverConfig::default())?;
    for row in &table.rows {
        println!("{:>6}: value {:.10} (mu_min {:.4})", row.sector.name(), row.value, row.mu_min);
    }
    println!("nesting holds: {:?}", table.nesting_holds);
    Ok(())
}
