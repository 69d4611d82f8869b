//! Least-energy solution of the truncated problem with a quartic potential.

use maxwell_nehari::energy::EnergyContext;
use maxwell_nehari::nehari::{ground_state, SolverConfig};
use maxwell_nehari::nonlinearity::NonlinearitySpec;
use maxwell_nehari::spectral::{enumerate_modes, BoxDomain};

fn main() -> maxwell_nehari::Result<()> {
    let basis = enumerate_modes(&BoxDomain::pi_cube(), 5.5)?;
    let ctx = EnergyContext::new(basis, -1.0, NonlinearitySpec::power(1.0, 4.0)?)?;
    let report = ground_state(&ctx, &SolverConfig::default())?;
    println!("c0 = {:.12}", report.c0);
    println!("outer residual {:.2e} after {} iterations", report.outer_residual, report.outer_iterations);
    println!("Nehari residuals: {:.2e} {:.2e}", report.self_pairing, report.tilde_residual);
    println!("|curl v|_2 = {:.6}, |grad w|_p = {:.6}", report.norms.v_curl, report.norms.grad_w_p);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
