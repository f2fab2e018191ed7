//! Monte-Carlo gate fidelity of the full model against the ideal gate.
//!
//! Draws Haar-random computational inputs, runs them through the full
//! (matrix-exponential) model, and compares to the closed-form target.
//! Faster drives suppress the leakage the closed forms ignore.
//!
//! Run with: cargo run --release --example full_vs_ideal

use cpgate::analysis::mc_average_fidelity;
use cpgate::dynamics::GateParams;

fn main() {
    println!("omega/gb   MC avg fidelity   std err   (200 samples, seed 1)");
    for omega in [10.0, 20.0, 30.0, 50.0] {
        let mut p = GateParams::default();
        p.omega_13 = omega;
        p.omega_02 = omega;
        p.omega_12 = omega;
        let est = mc_average_fidelity(&p, 200, 1).expect("valid parameters");
        println!(
            "  {omega:5.1}    {:.6}          {:.1e}",
            est.mean, est.std_err
        );
    }
}
