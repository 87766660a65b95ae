//! Pick α for a fixed sample budget.

use squid::tuning::{conditioned_pivot_expectation, full_objective, optimize_alpha};

fn main() -> squid::Result<()> {
    for (z, gamma) in [(760.0, 1.0), (300.0, 1.0), (1000.0, 2.0), (2000.0, 0.25)] {
        let t = optimize_alpha(z, gamma, 1e-6)?;
        println!(
            "Z={z:5} γ={gamma:4}: α*={:.4}  clears {:.3}·qγ (lower bound), {:.3}·qγ without the k/Z shortcut",
            t.alpha_star,
            t.objective_value,
            full_objective(t.alpha_star, z, gamma, 1e6)?
        );
    }
    let k = 304;
    println!(
        "E[k-th of 760 | below 1/2] for k={k}: {:.7} (k/(Z+1) = {:.7})",
        conditioned_pivot_expectation(k, 760, 1.0)?,
        k as f64 / 761.0
    );
    Ok(())
}
