//! Simulator for a two-qubit controlled-phase (CP) gate between two
//! four-level rf-SQUID qubits coupled through a single-mode superconducting
//! resonator.
//!
//! The crate is organized bottom-up:
//!
//! - [`hilbert`] — complex states, operators, tensor products, Fock-space
//!   ladder operators, and Hermitian matrix exponentials.
//! - [`device`] — rf-SQUID spectra from a finite-difference flux-space
//!   Schrödinger solve (four lowest levels and transition frequencies).
//! - [`dynamics`] — Hamiltonian builders (resonant Jaynes–Cummings,
//!   dispersive, detuned JC, classical drives), closed-form evolutions, and
//!   piecewise-constant propagation.
//! - [`protocol`] — the five-step CP-gate pulse schedule, gate time, and
//!   truth-table verification.
//! - [`analysis`] — closed-form fidelity/error formulas, sweeps, a full-model
//!   Monte-Carlo fidelity, and an error budget.
//! - [`pulseseq`] — a small text format (`.pseq`) for pulse schedules with a
//!   parser, compiler, and serializer.
//! - [`cli`] — the `cpgate` command-line front end (`levels`, `truth-table`,
//!   `run`, `sweep`, `budget`).
//!
//! Internally ħ = 1 and every frequency is an angular frequency expressed in
//! units of the SQUID-b/resonator coupling `g_b`; durations are in units of
//! `1/g_b`. The CLI converts reported times to seconds through `--gb-si`.
//!
//! The `examples/` directory contains one runnable example per capability;
//! start with `cargo run --example truth_table`.

pub mod analysis;
pub mod cli;
pub mod device;
pub mod dynamics;
pub mod hilbert;
pub mod protocol;
pub mod pulseseq;

pub use dynamics::{GateParams, ModelKind};
pub use hilbert::{OperatorMatrix, StateVector, C64};
pub use protocol::{build_schedule, gate_time, run_truth_table, Schedule};
