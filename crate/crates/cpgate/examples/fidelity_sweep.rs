//! Sweep the (1,2) Rabi frequency and tabulate the analytic average
//! fidelity of the conditional-phase step.
//!
//! The fidelity penalty comes from the dispersive shift s = gb^2/delta_c
//! detuning SQUID b's (1,2) drive; pushing omega12 up buries it.
//!
//! Run with: cargo run --example fidelity_sweep

use cpgate::analysis::{fidelity_f, linspace, sweep_average_fidelity, FidelityTerms};

fn main() {
    let (g_b, delta_c) = (1.0, 10.0);
    let grid = linspace(0.3, 1.0, 15).unwrap();
    println!("omega12/gb   avg fidelity   infidelity");
    for (omega12, f) in sweep_average_fidelity(&grid, g_b, delta_c).unwrap() {
        println!("  {omega12:.3}       {f:.9}    {:.3e}", 1.0 - f);
    }

    // the same machinery gives the input-resolved fidelity F(x), where x
    // is the population weight on the |1>_b branch
    let terms = FidelityTerms::new(0.6, g_b, delta_c).unwrap();
    println!("\ninput-resolved F(x) at omega12 = 0.6 gb:");
    for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  F({x:.2}) = {:.9}", fidelity_f(x, &terms).unwrap());
    }
}
