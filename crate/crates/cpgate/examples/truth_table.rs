//! Print the gate's truth table in both models.
//!
//! The ideal model composes closed-form maps and lands exactly on
//! diag(1, 1, 1, -1); the full model exponentiates the segment
//! Hamiltonians and shows the residual leakage.
//!
//! Run with: cargo run --example truth_table

use cpgate::dynamics::{GateParams, ModelKind};
use cpgate::protocol::run_truth_table;

fn main() {
    let mut p = GateParams::default();
    p.omega_13 = 50.0;
    p.omega_02 = 50.0;
    p.omega_12 = 50.0;

    for model in [ModelKind::Ideal, ModelKind::Full] {
        let table = run_truth_table(&p, model).expect("valid parameters");
        println!("--- {model:?} model ---");
        for row in &table.rows {
            print!("|{}> ->", row.input);
            for a in &row.amplitudes {
                print!("  {:+.4}{:+.4}i", a.re, a.im);
            }
            println!("   leakage {:.2e}", row.leakage);
        }
        println!(
            "max deviation from diag(1, 1, 1, -1): {:.3e}\n",
            table.max_deviation()
        );
    }
}
