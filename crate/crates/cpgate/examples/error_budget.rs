//! Break the gate error into its pieces.
//!
//! p3 is the photon-loss-prone population the dispersive wait parks in
//! SQUID b's |3>; the analytic infidelity is the detuned-drive penalty;
//! the full residual is everything the closed forms miss (leakage,
//! counter-terms); the relaxation exposure scores time spent in |3>_a
//! against its lifetime.
//!
//! Run with: cargo run --release --example error_budget

use cpgate::analysis::error_budget;
use cpgate::dynamics::GateParams;

fn main() {
    let mut p = GateParams::default();
    p.omega_13 = 50.0;
    p.omega_02 = 50.0;
    p.omega_12 = 50.0;

    // gamma3^-1 = 1000/g_b, e.g. 333 ns when g_b = 2 pi x 477 MHz
    let budget = error_budget(&p, Some(1000.0), 200, 1, None).expect("valid parameters");
    println!("{}", serde_json::to_string_pretty(&budget).unwrap());

    // the s-override isolates the detuning contribution: s = 0 is the
    // error-free limit of the analytic terms
    let clean = error_budget(&p, Some(1000.0), 200, 1, Some(0.0)).expect("valid parameters");
    println!(
        "\nanalytic infidelity: {:.3e} (derived s)  ->  {:.3e} (s = 0)",
        budget.analytic_infidelity, clean.analytic_infidelity
    );
}
