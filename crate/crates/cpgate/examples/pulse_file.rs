//! Compile the shipped pulse-sequence file and round-trip a schedule
//! through the text format.
//!
//! The .pseq grammar supports arithmetic over implicit gate-parameter
//! bindings; adjacent equal-duration pulses on different SQUIDs merge
//! into a single two-drive segment, exactly like the built-in schedule.
//!
//! Run with: cargo run --example pulse_file

use cpgate::dynamics::GateParams;
use cpgate::protocol::build_schedule;
use cpgate::pulseseq::{compile_source, serialize, DEFAULT_GB_SI};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/cpgate.pseq");
    let text = std::fs::read_to_string(path)?;
    let p = GateParams::default();

    let compiled = compile_source(&text, &p, DEFAULT_GB_SI)?;
    let built = build_schedule(&p)?;
    println!(
        "shipped file compiles to the built-in schedule: {}",
        compiled == built
    );
    println!("segments: {}", compiled.segments.len());
    println!("total duration: {:.4} / g_b", compiled.total_duration());

    // serialize the builder's schedule and read it straight back
    let round = compile_source(&serialize(&built), &p, DEFAULT_GB_SI)?;
    println!("serialize -> parse -> compile is lossless: {}", round == built);

    println!("\n{}", serialize(&built));
    Ok(())
}
