//! Curl-curl eigenvalues of a rectangular cavity below a cutoff.

use maxwell_nehari::spectral::{enumerate_modes, BoxDomain};

fn main() -> maxwell_nehari::Result<()> {
    let domain = BoxDomain::new([std::f64::consts::PI, 2.0, 1.5])?;
    let basis = enumerate_modes(&domain, 12.0)?;
    println!("{} div-free modes, {} gradient modes", basis.n_divfree(), basis.n_gradient());
    for m in &basis.divfree {
        println!("{:?} pol {} -> {:.6}", m.index.k, m.index.polarization, m.eigenvalue);
    }
    Ok(())
}
