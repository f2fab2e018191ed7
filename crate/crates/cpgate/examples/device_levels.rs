//! Solve an rf SQUID's low-lying levels from a device config file.
//!
//! Reads the shipped configs, diagonalizes the flux Hamiltonian on a
//! finite-difference grid, and prints level spacings plus convergence
//! diagnostics from the automatic grid-doubling check.
//!
//! Run with: cargo run --example device_levels

use cpgate::device::{eigenlevels, parse_device_config};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    for name in ["squid_a.conf", "squid_b.conf", "harmonic.conf"] {
        let text = std::fs::read_to_string(format!("{dir}/{name}"))?;
        let (squid, grid) = parse_device_config(&text)?;
        let levels = eigenlevels(&squid, &grid, 4)?;
        println!("--- {name} (beta_L = {:.3}) ---", squid.beta_l());
        for (k, e) in levels.energies.iter().enumerate() {
            println!("  E{k} - E0 = {:12.4e} rad/s", e);
        }
        for w in levels.energies.windows(2) {
            println!("  spacing  = {:12.4e} rad/s", w[1] - w[0]);
        }
        println!(
            "  grid {} -> {}: max level shift {:.2e} (relative)",
            levels.convergence.points,
            levels.convergence.doubled_points,
            levels.convergence.max_rel_shift
        );
    }
    Ok(())
}
