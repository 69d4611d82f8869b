//! Translate Kerr material parameters into a model and solve it.

use maxwell_nehari::energy::EnergyContext;
use maxwell_nehari::nehari::{ground_state, SolverConfig};
use maxwell_nehari::nonlinearity::{kerr_from_physics, CoefficientField};
use maxwell_nehari::spectral::{enumerate_modes, BoxDomain};

fn main() -> maxwell_nehari::Result<()> {
    let alpha = CoefficientField::Gaussian {
        base: 0.5,
        amplitude: 1.0,
        center: [1.5, 1.5, 1.5],
        width: [0.8, 0.8, 0.8],
    };
    let kerr = kerr_from_physics(1.0, 1.0, 1.2, &alpha)?;
    println!("lambda = {:.4}", kerr.lambda);
    let basis = enumerate_modes(&BoxDomain::pi_cube(), 5.5)?;
    let ctx = EnergyContext::new(basis, kerr.lambda, kerr.spec)?;
    let report = ground_state(&ctx, &SolverConfig::default())?;
    println!("c0 = {:.10}", report.c0);
    Ok(())
}
