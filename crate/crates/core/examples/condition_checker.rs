//! Structural conditions for a built-in family and a black-box potential.

use maxwell_nehari::nonlinearity::{check_conditions, BlackBox, NonlinearitySpec, SamplerConfig};

fn main() -> maxwell_nehari::Result<()> {
    let cfg = SamplerConfig::new(4000, 10.0, 3);
    let builtin = check_conditions(&NonlinearitySpec::power(1.0, 3.5)?, &cfg)?;
    println!("{}: certified {}", builtin.target, builtin.certified);

    // quartic minus cubic: negative near the origin
    let bad = BlackBox::new("quartic minus cubic", |_, u| {
        let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        0.25 * r.powi(4) - r.powi(3)
    });
    let report = check_conditions(&bad, &cfg)?;
    for entry in &report.conditions {
        println!("{} {:?}", entry.condition, entry.status);
    }
    for (condition, margin) in report.reverify(&bad) {
        println!("witness for {condition} re-evaluates with margin {margin:.3e}");
    }
    Ok(())
}
