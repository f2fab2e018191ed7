//! The five-step controlled-phase protocol: schedule compilation, gate time,
//! gate application, and the computational truth table.
//!
//! The schedule drives SQUID a's (1,3) and (0,2) transitions and SQUID b's
//! (1,2) transition, interleaved with waits during which SQUID a exchanges
//! an excitation with the resonator and SQUID b accumulates a
//! photon-conditional phase. Inputs are two-qubit states on the lowest two
//! levels of each SQUID with the resonator in vacuum; the ideal gate is
//! diag(1, 1, 1, -1) on {|00⟩, |01⟩, |10⟩, |11⟩}.

use crate::dynamics::{
    evolve_closed_dispersive, evolve_closed_drive, evolve_closed_resonant, DynamicsError,
    GateParams, HamiltonianSpec, ModelFlags, ModelKind, Squid,
};
use crate::hilbert::{
    flat_index, matexp_hermitian, HilbertError, OperatorMatrix, StateVector, C64,
};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("omega_02 = {0} and omega_12 = {1} must be equal (shared pulse duration)")]
    OmegaMismatch(f64, f64),
    #[error("input state norm {0} is not 1 within 1e-6")]
    NotNormalized(f64),
    #[error("resonator must start in vacuum; initial photon population {0:.3e}")]
    PhotonOccupied(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// One classical drive inside a segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    pub squid: Squid,
    pub pair: (usize, usize),
    pub omega: f64,
    pub phase: f64,
}

/// A piecewise-constant schedule segment: zero drives is a wait, one is a
/// single pulse, two (on different SQUIDs) is a simultaneous pulse pair.
#[derive(Debug, Clone)]
pub struct Segment {
    /// Human-readable step tag; ignored by equality comparisons.
    pub label: Option<String>,
    pub drives: Vec<DriveTerm>,
    pub duration: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.drives == other.drives && self.duration == other.duration
    }
}

impl Segment {
    pub fn is_wait(&self) -> bool {
        self.drives.is_empty()
    }

    /// The segment Hamiltonian: active drives plus whichever always-on
    /// couplings the flags keep (SQUID a resonant, SQUID b detuned).
    pub fn hamiltonian(&self, flags: ModelFlags) -> HamiltonianSpec {
        let mut terms: Vec<HamiltonianSpec> = self
            .drives
            .iter()
            .map(|d| HamiltonianSpec::Drive {
                squid: d.squid,
                pair: d.pair,
                omega: d.omega,
                phase: d.phase,
            })
            .collect();
        if flags.a_resonant {
            terms.push(HamiltonianSpec::JcResonant { squid: Squid::A });
        }
        if flags.b_detuned {
            terms.push(HamiltonianSpec::JcDetuned { squid: Squid::B });
        }
        HamiltonianSpec::Sum(terms)
    }
}

/// Ordered list of segments. Equality ignores labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

fn seg(label: &str, drives: Vec<DriveTerm>, duration: f64) -> Segment {
    Segment {
        label: Some(label.to_string()),
        drives,
        duration,
    }
}

/// Compiles the five-step schedule:
/// `[i: (1,3)_a pulse t₁] [i: wait t₁′] [ii: (0,2)_a + (1,2)_b pulses t₂]
/// [iii: wait t₃] [iv: inverse pulse pair t₂] [v: wait t₁′] [v: (1,3)_a
/// pulse t₁]` with t₁ = π/(2Ω₁₃), t₁′ = π/(2g_a), t₂ = π/(2Ω₀₂),
/// t₃ = πΔ_c/g_b². Requires Ω₀₂ = Ω₁₂ so the step-(ii)/(iv) pulse pairs
/// share one duration.
pub fn build_schedule(p: &GateParams) -> Result<Schedule, ProtocolError> {
    use std::f64::consts::{FRAC_PI_2, PI};
    p.validate()?;
    if p.omega_02 != p.omega_12 {
        return Err(ProtocolError::OmegaMismatch(p.omega_02, p.omega_12));
    }
    let t1 = PI / (2.0 * p.omega_13);
    let t1p = PI / (2.0 * p.g_a);
    let t2 = PI / (2.0 * p.omega_02);
    let t3 = PI * p.delta_c / (p.g_b * p.g_b);
    let a13 = |phase: f64| DriveTerm {
        squid: Squid::A,
        pair: (1, 3),
        omega: p.omega_13,
        phase,
    };
    let a02 = |phase: f64| DriveTerm {
        squid: Squid::A,
        pair: (0, 2),
        omega: p.omega_02,
        phase,
    };
    let b12 = |phase: f64| DriveTerm {
        squid: Squid::B,
        pair: (1, 2),
        omega: p.omega_12,
        phase,
    };
    Ok(Schedule {
        segments: vec![
            seg("i", vec![a13(PI)], t1),
            seg("i", vec![], t1p),
            seg("ii", vec![a02(FRAC_PI_2), b12(-FRAC_PI_2)], t2),
            seg("iii", vec![], t3),
            seg("iv", vec![a02(-FRAC_PI_2), b12(FRAC_PI_2)], t2),
            seg("v", vec![], t1p),
            seg("v", vec![a13(PI)], t1),
        ],
    })
}

/// Total operation time τ = π/g_a + πΔ_c/g_b² + π/Ω₁₃ + π/Ω₀₂.
pub fn gate_time(p: &GateParams) -> f64 {
    use std::f64::consts::PI;
    PI / p.g_a + PI * p.delta_c / (p.g_b * p.g_b) + PI / p.omega_13 + PI / p.omega_02
}

/// Propagates through the schedule at the given model level with default
/// flags (every coupling active).
pub fn run_schedule(
    state: &StateVector,
    schedule: &Schedule,
    p: &GateParams,
    model: ModelKind,
) -> Result<StateVector, ProtocolError> {
    run_schedule_flagged(state, schedule, p, model, ModelFlags::default())
}

/// Propagation with explicit coupling flags. The flags gate the coupling
/// *mechanism* consistently in both models: a disabled coupling drops the
/// corresponding Hamiltonian term in full mode and the corresponding
/// closed-form wait map in ideal mode, so full mode with everything
/// disabled degenerates to bare pulse rotations in either model.
pub fn run_schedule_flagged(
    state: &StateVector,
    schedule: &Schedule,
    p: &GateParams,
    model: ModelKind,
    flags: ModelFlags,
) -> Result<StateVector, ProtocolError> {
    let mut s = state.clone();
    for segment in &schedule.segments {
        s = match model {
            ModelKind::Ideal => ideal_segment(&s, segment, p, flags)?,
            ModelKind::Full => {
                let h = segment.hamiltonian(flags).realize(p)?;
                matexp_hermitian(&h, segment.duration)?.apply(&s)?
            }
        };
    }
    Ok(s)
}

/// Ideal-mode action of one segment: pulses act through the closed drive
/// rotation on their level pair only; waits act through the closed resonant
/// exchange on SQUID a followed by the closed dispersive phase on SQUID b
/// (these commute on every state the protocol reaches, since the protocol
/// never holds SQUID b in {2,3} while SQUID a exchanges a photon).
fn ideal_segment(
    state: &StateVector,
    segment: &Segment,
    p: &GateParams,
    flags: ModelFlags,
) -> Result<StateVector, ProtocolError> {
    if segment.duration < 0.0 {
        return Err(DynamicsError::NegativeDuration(segment.duration).into());
    }
    if segment.is_wait() {
        let mut s = state.clone();
        if flags.a_resonant {
            s = evolve_closed_resonant(&s, p.g_a, segment.duration)?;
        }
        if flags.b_detuned {
            s = evolve_closed_dispersive(&s, p.g_b, p.delta_c, segment.duration)?;
        }
        Ok(s)
    } else {
        let mut s = state.clone();
        for d in &segment.drives {
            s = evolve_closed_drive(&s, d.omega, d.phase, d.pair, d.squid, segment.duration)?;
        }
        Ok(s)
    }
}

/// Full-model propagator of the whole schedule (product of segment
/// exponentials, later segments leftmost).
pub fn schedule_unitary(
    schedule: &Schedule,
    p: &GateParams,
    flags: ModelFlags,
) -> Result<OperatorMatrix, ProtocolError> {
    let mut u = OperatorMatrix::identity(p.dims());
    for segment in &schedule.segments {
        if segment.duration < 0.0 {
            return Err(DynamicsError::NegativeDuration(segment.duration).into());
        }
        let h = segment.hamiltonian(flags).realize(p)?;
        u = matexp_hermitian(&h, segment.duration)?.compose(&u)?;
    }
    Ok(u)
}

/// Flat index of computational basis state |k⟩_a|l⟩_b|0⟩_c.
fn comp_flat(dims: &[usize], k: usize, l: usize) -> usize {
    flat_index(dims, &[k, l, 0]).expect("computational index in range")
}

/// Embeds two-qubit amplitudes (order |00⟩, |01⟩, |10⟩, |11⟩) on the lowest
/// two levels of each SQUID with the resonator in vacuum.
pub fn embed_computational(amps: &[C64; 4], n_max: usize) -> StateVector {
    let dims = vec![4, 4, n_max + 1];
    let mut s = StateVector::zero(dims.clone());
    for k in 0..2 {
        for l in 0..2 {
            s.amplitudes_mut()[comp_flat(&dims, k, l)] = amps[2 * k + l];
        }
    }
    s
}

/// Projects onto the computational subspace ⊗ |0⟩_c: returns the four
/// amplitudes (order |00⟩, |01⟩, |10⟩, |11⟩) and the leakage
/// 1 − Σ|amplitude|².
pub fn computational_block(state: &StateVector) -> ([C64; 4], f64) {
    let dims = state.dims();
    let mut amps = [C64::new(0.0, 0.0); 4];
    let mut pop = 0.0;
    for k in 0..2 {
        for l in 0..2 {
            let a = state.amplitudes()[comp_flat(dims, k, l)];
            amps[2 * k + l] = a;
            pop += a.norm_sqr();
        }
    }
    (amps, state.norm().powi(2) - pop)
}

/// The ideal gate on the qubit subspace: diag(1, 1, 1, −1) in
/// {|00⟩, |01⟩, |10⟩, |11⟩}.
pub fn ideal_gate_unitary() -> OperatorMatrix {
    let mut m = DMatrix::<C64>::identity(4, 4);
    m[(3, 3)] = C64::new(-1.0, 0.0);
    OperatorMatrix::new(vec![4], m).expect("4x4")
}

/// Result of [`apply_gate`]: the full system state plus its computational
/// projection.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub state: StateVector,
    /// Amplitudes on the computational subspace ⊗ |0⟩_c.
    pub computational: [C64; 4],
    /// Population outside the computational subspace ⊗ |0⟩_c.
    pub leakage: f64,
}

/// Runs the built-in schedule on a normalized two-qubit input (amplitudes
/// for |00⟩, |01⟩, |10⟩, |11⟩), starting from resonator vacuum.
pub fn apply_gate(
    amps: &[C64; 4],
    p: &GateParams,
    model: ModelKind,
) -> Result<GateOutcome, ProtocolError> {
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(ProtocolError::NotNormalized(norm));
    }
    let normalized: [C64; 4] = std::array::from_fn(|i| amps[i] / norm);
    let schedule = build_schedule(p)?;
    let input = embed_computational(&normalized, p.n_max);
    let output = run_schedule(&input, &schedule, p, model)?;
    let (computational, leakage) = computational_block(&output);
    Ok(GateOutcome {
        state: output,
        computational,
        leakage,
    })
}

/// 4×4 computational block of the schedule's action: column j is the
/// projected output for basis input j (inputs ordered |00⟩, |01⟩, |10⟩,
/// |11⟩). Full mode builds the schedule unitary once and reads out its
/// columns.
pub fn computational_block_matrix(
    schedule: &Schedule,
    p: &GateParams,
    model: ModelKind,
    flags: ModelFlags,
) -> Result<DMatrix<C64>, ProtocolError> {
    let dims = p.dims();
    let mut block = DMatrix::<C64>::zeros(4, 4);
    match model {
        ModelKind::Full => {
            let u = schedule_unitary(schedule, p, flags)?;
            for (j, (k, l)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                let col = u.matrix().column(comp_flat(&dims, k, l)).into_owned();
                for (i, (m, n)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                    block[(i, j)] = col[comp_flat(&dims, m, n)];
                }
            }
        }
        ModelKind::Ideal => {
            for (j, (k, l)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                let input = StateVector::basis(dims.clone(), &[k, l, 0])?;
                let out = run_schedule_flagged(&input, schedule, p, model, flags)?;
                let (amps, _) = computational_block(&out);
                for i in 0..4 {
                    block[(i, j)] = amps[i];
                }
            }
        }
    }
    Ok(block)
}

/// One truth-table row: a computational basis input and its projected
/// output.
#[derive(Debug, Clone)]
pub struct TruthTableRow {
    /// Input label `00`, `01`, `10`, or `11`.
    pub input: String,
    /// Output amplitudes on {|00⟩, |01⟩, |10⟩, |11⟩} ⊗ |0⟩_c.
    pub amplitudes: [C64; 4],
    /// Phase of the dominant output amplitude relative to the |00⟩ row's
    /// dominant amplitude, wrapped to (−π, π].
    pub relative_phase: f64,
    /// Population outside the computational subspace ⊗ |0⟩_c.
    pub leakage: f64,
}

/// The gate's action on all four computational basis inputs.
#[derive(Debug, Clone)]
pub struct TruthTable {
    pub model: ModelKind,
    pub rows: Vec<TruthTableRow>,
}

impl TruthTable {
    /// The 4×4 computational block (columns = inputs).
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(4, 4);
        for (j, row) in self.rows.iter().enumerate() {
            for i in 0..4 {
                m[(i, j)] = row.amplitudes[i];
            }
        }
        m
    }

    /// Largest entrywise deviation from diag(1, 1, 1, −1).
    pub fn max_deviation(&self) -> f64 {
        let m = self.matrix();
        let target = ideal_gate_unitary();
        (m - target.matrix())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Whether every amplitude matches the ideal gate within `tol`.
    pub fn matches_ideal(&self, tol: f64) -> bool {
        self.max_deviation() < tol
    }
}

fn dominant_phase(amps: &[C64; 4]) -> f64 {
    let mut best = 0;
    for i in 1..4 {
        if amps[i].norm() > amps[best].norm() {
            best = i;
        }
    }
    amps[best].arg()
}

fn wrap_phase(mut x: f64) -> f64 {
    use std::f64::consts::PI;
    while x > PI {
        x -= 2.0 * PI;
    }
    while x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Runs each computational basis input through the schedule and reports
/// output amplitudes, phases relative to the |00⟩ row, and leakage.
pub fn run_truth_table(p: &GateParams, model: ModelKind) -> Result<TruthTable, ProtocolError> {
    let schedule = build_schedule(p)?;
    let dims = p.dims();
    // Full mode: one unitary, outputs read off its columns. Ideal mode:
    // closed-form propagation per input.
    let full_u = match model {
        ModelKind::Full => Some(schedule_unitary(&schedule, p, ModelFlags::default())?),
        ModelKind::Ideal => None,
    };
    let mut rows = Vec::with_capacity(4);
    let mut ref_phase = 0.0;
    for (j, (k, l)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .enumerate()
    {
        let out = match &full_u {
            Some(u) => StateVector::new(
                dims.clone(),
                u.matrix().column(comp_flat(&dims, k, l)).into_owned(),
            )?,
            None => {
                let input = StateVector::basis(dims.clone(), &[k, l, 0])?;
                run_schedule(&input, &schedule, p, model)?
            }
        };
        let (amps, leakage) = computational_block(&out);
        let phase = dominant_phase(&amps);
        if j == 0 {
            ref_phase = phase;
        }
        rows.push(TruthTableRow {
            input: format!("{k}{l}"),
            amplitudes: amps,
            relative_phase: wrap_phase(phase - ref_phase),
            leakage,
        });
    }
    Ok(TruthTable { model, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> GateParams {
        GateParams::default()
    }

    #[test]
    fn schedule_shape_and_durations() {
        let p = params();
        let s = build_schedule(&p).unwrap();
        assert_eq!(s.segments.len(), 7);
        let labels: Vec<_> = s
            .segments
            .iter()
            .map(|x| x.label.clone().unwrap())
            .collect();
        assert_eq!(labels, ["i", "i", "ii", "iii", "iv", "v", "v"]);
        let counts: Vec<_> = s.segments.iter().map(|x| x.drives.len()).collect();
        assert_eq!(counts, [1, 0, 2, 0, 2, 0, 1]);
        let t1 = PI / (2.0 * p.omega_13);
        let t1p = PI / (2.0 * p.g_a);
        let t2 = PI / (2.0 * p.omega_02);
        let t3 = PI * p.delta_c / (p.g_b * p.g_b);
        let durs: Vec<_> = s.segments.iter().map(|x| x.duration).collect();
        assert_eq!(durs, [t1, t1p, t2, t3, t2, t1p, t1]);
        assert!((t3 - 10.0 * PI).abs() < 1e-14);
        // step (v) mirrors step (i): wait-then-pulse vs pulse-then-wait
        assert!(s.segments[0] == s.segments[6] && s.segments[1] == s.segments[5]);
    }

    #[test]
    fn schedule_rejects_omega_mismatch() {
        let mut p = params();
        p.omega_12 = 9.0;
        assert!(matches!(
            build_schedule(&p),
            Err(ProtocolError::OmegaMismatch(_, _))
        ));
    }

    #[test]
    fn gate_time_matches_total_duration() {
        for (o, dc) in [(10.0, 10.0), (25.0, 7.5), (3.0, 20.0)] {
            let p = GateParams {
                omega_13: o,
                omega_02: o,
                omega_12: o,
                delta_c: dc,
                ..params()
            };
            let s = build_schedule(&p).unwrap();
            let tau = gate_time(&p);
            assert!((s.total_duration() - tau).abs() / tau < 1e-12);
        }
        assert!((gate_time(&params()) - 11.2 * PI).abs() < 1e-12);
    }

    #[test]
    fn gate_time_linearity() {
        let p = params();
        let mut fast = p;
        fast.omega_13 *= 2.0;
        fast.omega_02 *= 2.0;
        fast.omega_12 *= 2.0;
        let expected_drop = PI / (2.0 * p.omega_13) + PI / (2.0 * p.omega_02);
        assert!((gate_time(&p) - gate_time(&fast) - expected_drop).abs() < 1e-12);

        let mut far = p;
        far.delta_c *= 2.0;
        assert!((gate_time(&far) - gate_time(&p) - PI * p.delta_c / (p.g_b * p.g_b)).abs() < 1e-12);
    }

    #[test]
    fn ideal_truth_table_is_cp() {
        let table = run_truth_table(&params(), ModelKind::Ideal).unwrap();
        assert!(table.matches_ideal(1e-10));
        for row in &table.rows {
            assert!(row.leakage.abs() < 1e-10);
        }
        assert!((table.rows[3].relative_phase.abs() - PI).abs() < 1e-10);
        assert!(table.rows[1].relative_phase.abs() < 1e-10);
    }

    #[test]
    fn ideal_intermediate_after_step_ii() {
        // Input |10⟩|0⟩_c sits in |00⟩|1⟩_c after step (ii): the photon is
        // parked in the resonator while both SQUIDs idle in their ground
        // pair.
        let p = params();
        let s = build_schedule(&p).unwrap();
        let prefix = Schedule {
            segments: s.segments[..3].to_vec(),
        };
        let input = StateVector::basis(p.dims(), &[1, 0, 0]).unwrap();
        let out = run_schedule(&input, &prefix, &p, ModelKind::Ideal).unwrap();
        assert!((out.amp(&[0, 0, 1]).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn apply_gate_examples() {
        let p = params();
        let half = C64::new(0.5, 0.0);
        let out = apply_gate(&[half, half, half, half], &p, ModelKind::Ideal).unwrap();
        let expect = [half, half, half, -half];
        for i in 0..4 {
            assert!((out.computational[i] - expect[i]).norm() < 1e-10);
        }

        // θ = 0 inputs are fixed points
        let a = C64::new(0.6, 0.0);
        let b = C64::new(0.0, 0.8);
        let out = apply_gate(&[a, b, C64::new(0.0, 0.0), C64::new(0.0, 0.0)], &p, ModelKind::Ideal)
            .unwrap();
        assert!((out.computational[0] - a).norm() < 1e-10);
        assert!((out.computational[1] - b).norm() < 1e-10);
        assert!(out.leakage < 1e-10);
    }

    #[test]
    fn apply_gate_rejects_unnormalized() {
        let p = params();
        let one = C64::new(1.0, 0.0);
        assert!(matches!(
            apply_gate(&[one, one, one, one], &p, ModelKind::Ideal),
            Err(ProtocolError::NotNormalized(_))
        ));
    }

    #[test]
    fn apply_gate_is_linear() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let raw: [C64; 4] =
                std::array::from_fn(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let amps: [C64; 4] = std::array::from_fn(|i| raw[i] / norm);
            let combined = apply_gate(&amps, &p, ModelKind::Ideal).unwrap();
            // superpose single-basis outcomes with the same coefficients
            let mut superposed = [C64::new(0.0, 0.0); 4];
            for j in 0..4 {
                let mut e = [C64::new(0.0, 0.0); 4];
                e[j] = C64::new(1.0, 0.0);
                let out = apply_gate(&e, &p, ModelKind::Ideal).unwrap();
                for i in 0..4 {
                    superposed[i] += amps[j] * out.computational[i];
                }
            }
            for i in 0..4 {
                assert!((combined.computational[i] - superposed[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn double_application_is_identity() {
        let p = params();
        let s = build_schedule(&p).unwrap();
        let amps = [
            C64::new(0.5, 0.1),
            C64::new(-0.3, 0.4),
            C64::new(0.2, -0.6),
            C64::new(0.1, 0.25),
        ];
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: [C64; 4] = std::array::from_fn(|i| amps[i] / norm);
        let input = embed_computational(&amps, p.n_max);
        let once = run_schedule(&input, &s, &p, ModelKind::Ideal).unwrap();
        let twice = run_schedule(&once, &s, &p, ModelKind::Ideal).unwrap();
        let diff: f64 = (twice.amplitudes() - input.amplitudes())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn ideal_gate_unitary_properties() {
        let u = ideal_gate_unitary();
        let trace: C64 = (0..4).map(|i| u.matrix()[(i, i)]).sum();
        assert!((trace - C64::new(2.0, 0.0)).norm() < 1e-15);
        let sq = u.compose(&u).unwrap();
        let eye = DMatrix::<C64>::identity(4, 4);
        assert!((sq.matrix() - eye).iter().all(|c| c.norm() < 1e-15));
        let table = run_truth_table(&params(), ModelKind::Ideal).unwrap();
        let dev = (table.matrix() - u.matrix())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-10);
    }

    #[test]
    fn full_model_unitary_and_leakage_trend() {
        let p10 = params();
        let mut p50 = params();
        p50.omega_13 = 50.0;
        p50.omega_02 = 50.0;
        p50.omega_12 = 50.0;
        let t10 = run_truth_table(&p10, ModelKind::Full).unwrap();
        let t50 = run_truth_table(&p50, ModelKind::Full).unwrap();
        let worst = |t: &TruthTable| t.rows.iter().map(|r| r.leakage).fold(0.0, f64::max);
        assert!(worst(&t50) < worst(&t10));
        // the schedule propagator stays unitary
        let s = build_schedule(&p10).unwrap();
        let u = schedule_unitary(&s, &p10, ModelFlags::default()).unwrap();
        assert!(u.unitarity_defect() < 1e-9);
    }

    #[test]
    fn zeroed_couplings_collapse_models_together() {
        // With both couplings disabled, full-mode matrix exponentials reduce
        // to the bare pulse rotations of the (equally degraded) ideal mode.
        let p = params();
        let s = build_schedule(&p).unwrap();
        let off = ModelFlags {
            a_resonant: false,
            b_detuned: false,
        };
        let full = computational_block_matrix(&s, &p, ModelKind::Full, off).unwrap();
        let ideal = computational_block_matrix(&s, &p, ModelKind::Ideal, off).unwrap();
        let diff = (full - ideal).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn schedule_equality_ignores_labels() {
        let p = params();
        let a = build_schedule(&p).unwrap();
        let mut b = build_schedule(&p).unwrap();
        for seg in &mut b.segments {
            seg.label = None;
        }
        assert_eq!(a, b);
        let mut c = build_schedule(&p).unwrap();
        c.segments[0].duration *= 1.0 + 1e-15;
        assert_ne!(a, c);
    }
}
