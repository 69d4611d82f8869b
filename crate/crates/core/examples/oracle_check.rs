//! Compare the descent solver against the brute-force oracle on a small
//! truncation.

use maxwell_nehari::energy::EnergyContext;
use maxwell_nehari::nehari::{ground_state, oracle_dense, SolverConfig};
use maxwell_nehari::nonlinearity::NonlinearitySpec;
use maxwell_nehari::spectral::{enumerate_modes, BoxDomain};

fn main() -> maxwell_nehari::Result<()> {
    let basis = enumerate_modes(&BoxDomain::pi_cube(), 3.5)?;
    let ctx = EnergyContext::new(basis, -2.5, NonlinearitySpec::power(1.0, 4.0)?)?;
    let cfg = SolverConfig::default();
    let descent = ground_state(&ctx, &cfg)?;
    let oracle = oracle_dense(&ctx, &cfg)?;
    println!("dimension {}", ctx.dim());
    println!("descent {:.12}", descent.c0);
    println!("oracle  {:.12}", oracle.c0_oracle);
    println!("relative gap {:.2e}", (descent.c0 - oracle.c0_oracle).abs() / descent.c0);
    println!("inner cluster spread {:.2e}", oracle.cluster_spread);
    Ok(())
}
