//! Hamiltonian builders and propagation for the coupled SQUID–resonator
//! system.
//!
//! Everything lives in the interaction/rotating frame with time-independent
//! segment Hamiltonians, ħ = 1, and frequencies in units of `g_b`. The
//! subsystem layout is `[SQUID a (4), SQUID b (4), resonator (n_max + 1)]`.
//!
//! Two model levels are supported:
//!
//! - **ideal** — each protocol step acts through its closed form: the drive
//!   rotation on the addressed level pair, the resonant exchange on SQUID a,
//!   and the dispersive phase on SQUID b. Nothing else is active.
//! - **full** — every segment Hamiltonian additionally carries SQUID a's
//!   resonant exchange and SQUID b's detuned exchange with the resonator,
//!   always on, and is exponentiated numerically. This is the error model
//!   behind the requirements Ω ≫ g_a and Ω₁₂ ≫ g_b²/Δ_c.

use crate::hilbert::{
    flat_index, matexp_hermitian, tensor, HilbertError, OperatorMatrix, StateVector, C64,
};
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid gate parameters: {0}")]
    BadParams(String),
    #[error("drive level pair ({0}, {1}) invalid: need l < h, both in 0..=3")]
    BadPair(usize, usize),
    #[error("detuning must be positive, got {0}")]
    BadDetuning(f64),
    #[error("segment duration {0} is negative")]
    NegativeDuration(f64),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Which SQUID an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Squid {
    A,
    B,
}

impl std::fmt::Display for Squid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Squid::A => write!(f, "a"),
            Squid::B => write!(f, "b"),
        }
    }
}

/// Couplings, detuning, Rabi frequencies, and Fock truncation for the gate.
/// Angular frequencies in units of `g_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateParams {
    /// SQUID a |2⟩↔|3⟩ ↔ resonator coupling.
    pub g_a: f64,
    /// SQUID b |2⟩↔|3⟩ ↔ resonator coupling (the frequency unit).
    pub g_b: f64,
    /// Detuning Δ_c between SQUID b's |2⟩↔|3⟩ transition and the resonator.
    pub delta_c: f64,
    /// Rabi frequency of the (1,3) pulse on SQUID a.
    pub omega_13: f64,
    /// Rabi frequency of the (0,2) pulse on SQUID a.
    pub omega_02: f64,
    /// Rabi frequency of the (1,2) pulse on SQUID b.
    pub omega_12: f64,
    /// Highest retained photon number.
    pub n_max: usize,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            g_a: 1.0,
            g_b: 1.0,
            delta_c: 10.0,
            omega_13: 10.0,
            omega_02: 10.0,
            omega_12: 10.0,
            n_max: 2,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            ("g_a", self.g_a),
            ("g_b", self.g_b),
            ("delta_c", self.delta_c),
            ("omega_13", self.omega_13),
            ("omega_02", self.omega_02),
            ("omega_12", self.omega_12),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(DynamicsError::BadParams(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.n_max < 1 {
            return Err(DynamicsError::BadParams(
                "n_max must be at least 1 (the protocol stores one photon)".into(),
            ));
        }
        Ok(())
    }

    /// The dispersive treatment of SQUID b assumes Δ_c well above g_b;
    /// callers should warn when this returns false.
    pub fn dispersive_valid(&self) -> bool {
        self.delta_c >= 5.0 * self.g_b
    }

    /// Subsystem dimensions `[4, 4, n_max + 1]`.
    pub fn dims(&self) -> Vec<usize> {
        vec![4, 4, self.n_max + 1]
    }
}

/// Simulation fidelity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    /// Closed-form step maps only (resonant exchange, dispersive phase,
    /// drive rotations).
    Ideal,
    /// All simultaneous couplings active in every segment.
    Full,
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ideal" => Ok(ModelKind::Ideal),
            "full" => Ok(ModelKind::Full),
            other => Err(format!("unknown model `{other}` (expected ideal|full)")),
        }
    }
}

/// Which coupling mechanisms are active, independent of [`ModelKind`]: a
/// disabled coupling drops both its full-model Hamiltonian term and its
/// ideal-model closed-form wait map. Exists so tests can switch mechanisms
/// off one at a time; everything is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelFlags {
    /// SQUID a's resonant exchange with the resonator.
    pub a_resonant: bool,
    /// SQUID b's detuned exchange with the resonator.
    pub b_detuned: bool,
}

impl Default for ModelFlags {
    fn default() -> Self {
        Self {
            a_resonant: true,
            b_detuned: true,
        }
    }
}

/// Symbolic Hamiltonian, resolved against [`GateParams`] when realized.
#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianSpec {
    /// Resonant exchange g (c⁺|2⟩⟨3| + h.c.) on the chosen SQUID.
    JcResonant { squid: Squid },
    /// Dispersive shift (g²/Δ)(|3⟩⟨3| - |2⟩⟨2|) c⁺c on the chosen SQUID.
    Dispersive { squid: Squid },
    /// Detuned exchange Δ|3⟩⟨3| + g (c⁺|2⟩⟨3| + h.c.) on the chosen SQUID.
    JcDetuned { squid: Squid },
    /// Classical drive Ω (e^{iφ}|l⟩⟨h| + e^{-iφ}|h⟩⟨l|).
    Drive {
        squid: Squid,
        pair: (usize, usize),
        omega: f64,
        phase: f64,
    },
    /// Sum of sub-terms; an empty sum is the zero operator.
    Sum(Vec<HamiltonianSpec>),
}

impl HamiltonianSpec {
    /// Builds the matrix on `p.dims()`, taking couplings from `p` (SQUID a
    /// uses `g_a`, SQUID b uses `g_b`; both detuned forms use `delta_c`).
    pub fn realize(&self, p: &GateParams) -> Result<OperatorMatrix, DynamicsError> {
        let g_of = |squid: Squid| match squid {
            Squid::A => p.g_a,
            Squid::B => p.g_b,
        };
        match self {
            HamiltonianSpec::JcResonant { squid } => {
                Ok(jc_resonant(g_of(*squid), *squid, p.n_max)?)
            }
            HamiltonianSpec::Dispersive { squid } => {
                dispersive(g_of(*squid), p.delta_c, *squid, p.n_max)
            }
            HamiltonianSpec::JcDetuned { squid } => {
                Ok(jc_detuned(g_of(*squid), p.delta_c, *squid, p.n_max)?)
            }
            HamiltonianSpec::Drive {
                squid,
                pair,
                omega,
                phase,
            } => drive(*omega, *phase, *pair, *squid, p.n_max),
            HamiltonianSpec::Sum(terms) => {
                let mut acc = OperatorMatrix::zeros(p.dims());
                for term in terms {
                    acc = acc.add(&term.realize(p)?)?;
                }
                Ok(acc)
            }
        }
    }
}

/// 4x4 matrix |i⟩⟨j| on a single SQUID.
fn proj(i: usize, j: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// Embeds (squid operator ⊗ resonator operator) into the full space, with
/// identity on the other SQUID.
fn embed(squid: Squid, squid_op: DMatrix<C64>, res_op: DMatrix<C64>, n_max: usize) -> OperatorMatrix {
    let s = OperatorMatrix::new(vec![4], squid_op).expect("4x4 squid operator");
    let r = OperatorMatrix::new(vec![n_max + 1], res_op).expect("resonator operator");
    let eye4 = OperatorMatrix::identity(vec![4]);
    match squid {
        Squid::A => tensor(&tensor(&s, &eye4), &r),
        Squid::B => tensor(&tensor(&eye4, &s), &r),
    }
}

/// Resonant Jaynes–Cummings exchange `g (c⁺ |2⟩⟨3| + c |3⟩⟨2|)` on the
/// chosen SQUID.
pub fn jc_resonant(g: f64, squid: Squid, n_max: usize) -> Result<OperatorMatrix, HilbertError> {
    let (create, ann) = fock_pair(n_max)?;
    let term = embed(squid, proj(2, 3), create, n_max)
        .add(&embed(squid, proj(3, 2), ann, n_max))
        .expect("matching dims");
    Ok(term.scaled(g))
}

/// Dispersive shift `(g²/Δ)(|3⟩⟨3| - |2⟩⟨2|) ⊗ c⁺c` on the chosen SQUID.
pub fn dispersive(
    g: f64,
    delta: f64,
    squid: Squid,
    n_max: usize,
) -> Result<OperatorMatrix, DynamicsError> {
    if !(delta > 0.0) {
        return Err(DynamicsError::BadDetuning(delta));
    }
    let (create, ann) = fock_pair(n_max)?;
    let number = &create * &ann;
    let shift = proj(3, 3) - proj(2, 2);
    Ok(embed(squid, shift, number, n_max).scaled(g * g / delta))
}

/// Detuned exchange `Δ |3⟩⟨3| + g (c⁺|2⟩⟨3| + c|3⟩⟨2|)` on the chosen
/// SQUID — the rotating-frame form whose second-order reduction is the
/// dispersive shift (up to a state-independent offset).
pub fn jc_detuned(
    g: f64,
    delta: f64,
    squid: Squid,
    n_max: usize,
) -> Result<OperatorMatrix, HilbertError> {
    let (create, ann) = fock_pair(n_max)?;
    let eye_res = DMatrix::<C64>::identity(n_max + 1, n_max + 1);
    let diag = embed(squid, proj(3, 3), eye_res, n_max).scaled(delta);
    let exch = embed(squid, proj(2, 3), create, n_max)
        .add(&embed(squid, proj(3, 2), ann, n_max))
        .expect("matching dims")
        .scaled(g);
    Ok(diag.add(&exch).expect("matching dims"))
}

/// Classical drive `Ω (e^{iφ}|l⟩⟨h| + e^{-iφ}|h⟩⟨l|)` on the chosen SQUID;
/// identity on the resonator (ideally selective pulse).
pub fn drive(
    omega: f64,
    phi: f64,
    pair: (usize, usize),
    squid: Squid,
    n_max: usize,
) -> Result<OperatorMatrix, DynamicsError> {
    let (l, h) = pair;
    if l >= h || h > 3 {
        return Err(DynamicsError::BadPair(l, h));
    }
    let phase = C64::from_polar(1.0, phi);
    let mut sq = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
    sq[(l, h)] = phase * omega;
    sq[(h, l)] = phase.conj() * omega;
    let eye_res = DMatrix::<C64>::identity(n_max + 1, n_max + 1);
    Ok(embed(squid, sq, eye_res, n_max))
}

fn fock_pair(n_max: usize) -> Result<(DMatrix<C64>, DMatrix<C64>), HilbertError> {
    let (create, ann) = crate::hilbert::fock_ops(n_max)?;
    Ok((create.matrix().clone(), ann.matrix().clone()))
}

fn res_dim(state: &StateVector) -> Result<usize, DynamicsError> {
    let dims = state.dims();
    if dims.len() != 3 || dims[0] != 4 || dims[1] != 4 || dims[2] < 2 {
        return Err(DynamicsError::BadParams(format!(
            "state dims {dims:?} do not match the [4, 4, n_max + 1] layout"
        )));
    }
    Ok(dims[2])
}

/// Closed-form resonant exchange on SQUID a: each pair
/// `|3⟩_a|n⟩_c ↔ |2⟩_a|n+1⟩_c` rotates by `θ_n = g √(n+1) t`
/// (`cos θ`, `-i sin θ`); everything else — including the dark states
/// `|2⟩_a|0⟩_c` and all SQUID-b factors — is untouched.
pub fn evolve_closed_resonant(
    state: &StateVector,
    g: f64,
    t: f64,
) -> Result<StateVector, DynamicsError> {
    let nres = res_dim(state)?;
    let dims = state.dims().to_vec();
    let mut out = state.clone();
    for l in 0..4 {
        for n in 0..nres - 1 {
            let i3 = flat_index(&dims, &[3, l, n])?;
            let i2 = flat_index(&dims, &[2, l, n + 1])?;
            let theta = g * ((n + 1) as f64).sqrt() * t;
            let (c, s) = (theta.cos(), theta.sin());
            let a3 = state.amplitudes()[i3];
            let a2 = state.amplitudes()[i2];
            out.amplitudes_mut()[i3] = a3 * c - C64::i() * s * a2;
            out.amplitudes_mut()[i2] = -C64::i() * s * a3 + a2 * c;
        }
    }
    Ok(out)
}

/// Closed-form dispersive phase on SQUID b: amplitudes on `|2⟩_b ⊗ |n⟩_c`
/// gain `e^{+i (g²/Δ) t n}` and on `|3⟩_b ⊗ |n⟩_c` gain `e^{-i (g²/Δ) t n}`;
/// vacuum components are unchanged.
pub fn evolve_closed_dispersive(
    state: &StateVector,
    g: f64,
    delta: f64,
    t: f64,
) -> Result<StateVector, DynamicsError> {
    if !(delta > 0.0) {
        return Err(DynamicsError::BadDetuning(delta));
    }
    let nres = res_dim(state)?;
    let dims = state.dims().to_vec();
    let mut out = state.clone();
    let rate = g * g / delta;
    for k in 0..4 {
        for n in 1..nres {
            let phase = C64::from_polar(1.0, rate * t * n as f64);
            let i2 = flat_index(&dims, &[k, 2, n])?;
            let i3 = flat_index(&dims, &[k, 3, n])?;
            out.amplitudes_mut()[i2] *= phase;
            out.amplitudes_mut()[i3] *= phase.conj();
        }
    }
    Ok(out)
}

/// Closed-form drive rotation on the addressed pair of the chosen SQUID:
/// restricted to `{|l⟩, |h⟩}` the propagator is
/// `cos(Ωt) I - i sin(Ωt)(e^{iφ}|l⟩⟨h| + e^{-iφ}|h⟩⟨l|)`; all other levels
/// are exactly invariant.
pub fn evolve_closed_drive(
    state: &StateVector,
    omega: f64,
    phi: f64,
    pair: (usize, usize),
    squid: Squid,
    t: f64,
) -> Result<StateVector, DynamicsError> {
    let (l, h) = pair;
    if l >= h || h > 3 {
        return Err(DynamicsError::BadPair(l, h));
    }
    let nres = res_dim(state)?;
    let dims = state.dims().to_vec();
    let mut out = state.clone();
    let (c, s) = ((omega * t).cos(), (omega * t).sin());
    let f = C64::from_polar(1.0, phi);
    for other in 0..4 {
        for n in 0..nres {
            let (il, ih) = match squid {
                Squid::A => (
                    flat_index(&dims, &[l, other, n])?,
                    flat_index(&dims, &[h, other, n])?,
                ),
                Squid::B => (
                    flat_index(&dims, &[other, l, n])?,
                    flat_index(&dims, &[other, h, n])?,
                ),
            };
            let al = state.amplitudes()[il];
            let ah = state.amplitudes()[ih];
            out.amplitudes_mut()[il] = al * c - C64::i() * s * f * ah;
            out.amplitudes_mut()[ih] = -C64::i() * s * f.conj() * al + ah * c;
        }
    }
    Ok(out)
}

/// Applies `exp(-i H_k t_k)` for each `(spec, duration)` segment in order.
pub fn propagate(
    state: &StateVector,
    segments: &[(HamiltonianSpec, f64)],
    p: &GateParams,
) -> Result<StateVector, DynamicsError> {
    let mut s = state.clone();
    for (spec, t) in segments {
        if *t < 0.0 {
            return Err(DynamicsError::NegativeDuration(*t));
        }
        let h = spec.realize(p)?;
        let u = matexp_hermitian(&h, *t)?;
        s = u.apply(&s)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::overlap;

    fn params() -> GateParams {
        GateParams::default()
    }

    fn basis(k: usize, l: usize, n: usize) -> StateVector {
        StateVector::basis(vec![4, 4, 3], &[k, l, n]).unwrap()
    }

    /// Excitation operator |3⟩⟨3| + c⁺c on the chosen SQUID.
    fn excitation(squid: Squid, n_max: usize) -> OperatorMatrix {
        let (create, ann) = fock_pair(n_max).unwrap();
        let number = &create * &ann;
        let eye_res = DMatrix::<C64>::identity(n_max + 1, n_max + 1);
        embed(squid, proj(3, 3), eye_res, n_max)
            .add(&embed(
                squid,
                DMatrix::identity(4, 4),
                number,
                n_max,
            ))
            .unwrap()
    }

    fn commutator_norm(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
        let ab = a.matrix() * b.matrix();
        let ba = b.matrix() * a.matrix();
        (ab - ba).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn jc_resonant_dark_state() {
        let h = jc_resonant(1.3, Squid::A, 2).unwrap();
        let dark = basis(2, 0, 0);
        assert!(h.apply(&dark).unwrap().norm() < 1e-15);
    }

    #[test]
    fn jc_resonant_single_element() {
        let g = 0.7;
        let h = jc_resonant(g, Squid::A, 2).unwrap();
        let out = h.apply(&basis(3, 1, 0)).unwrap();
        assert!((out.amp(&[2, 1, 1]) - C64::new(g, 0.0)).norm() < 1e-15);
        assert!((out.norm() - g).abs() < 1e-15);
    }

    #[test]
    fn jc_resonant_conserves_excitation() {
        for squid in [Squid::A, Squid::B] {
            let h = jc_resonant(1.0, squid, 2).unwrap();
            let n = excitation(squid, 2);
            assert!(commutator_norm(&h, &n) < 1e-12);
        }
    }

    #[test]
    fn jc_detuned_conserves_excitation() {
        let h = jc_detuned(1.0, 10.0, Squid::B, 2).unwrap();
        let n = excitation(Squid::B, 2);
        assert!(commutator_norm(&h, &n) < 1e-12);
    }

    #[test]
    fn dispersive_matrix_elements() {
        let (g, delta) = (1.0, 10.0);
        let h = dispersive(g, delta, Squid::B, 2).unwrap();
        let at = |k: usize, l: usize, n: usize| {
            let s = basis(k, l, n);
            overlap(&s, &h.apply(&s).unwrap()).unwrap().re
        };
        assert!((at(0, 2, 1) - (-g * g / delta)).abs() < 1e-15);
        assert!(at(0, 3, 0).abs() < 1e-15);
        assert!((at(0, 2, 2) - (-2.0 * g * g / delta)).abs() < 1e-15);
        assert!((at(1, 3, 1) - g * g / delta).abs() < 1e-15);
    }

    #[test]
    fn dispersive_rejects_zero_detuning() {
        assert!(dispersive(1.0, 0.0, Squid::B, 2).is_err());
    }

    #[test]
    fn jc_detuned_zero_coupling_is_diagonal_shift() {
        let h = jc_detuned(0.0, 7.0, Squid::B, 2).unwrap();
        for k in 0..4 {
            for n in 0..3 {
                let s = basis(k, 3, n);
                let e = overlap(&s, &h.apply(&s).unwrap()).unwrap();
                assert!((e - C64::new(7.0, 0.0)).norm() < 1e-15);
            }
        }
        let s = basis(0, 2, 1);
        assert!(h.apply(&s).unwrap().norm() < 1e-15);
    }

    #[test]
    fn jc_detuned_block_eigenvalues() {
        // On {|3⟩|0⟩, |2⟩|1⟩} the block is [[Δ, g], [g, 0]] with
        // eigenvalues (Δ ± √(Δ² + 4g²))/2.
        let (g, delta) = (1.0, 10.0);
        let h = jc_detuned(g, delta, Squid::B, 2).unwrap();
        let i30 = flat_index(&[4, 4, 3], &[0, 3, 0]).unwrap();
        let i21 = flat_index(&[4, 4, 3], &[0, 2, 1]).unwrap();
        let block = nalgebra::Matrix2::new(
            h.matrix()[(i30, i30)].re,
            h.matrix()[(i30, i21)].re,
            h.matrix()[(i21, i30)].re,
            h.matrix()[(i21, i21)].re,
        );
        let eig = block.symmetric_eigenvalues();
        let mut got = [eig[0], eig[1]];
        got.sort_by(f64::total_cmp);
        let root = (delta * delta + 4.0 * g * g).sqrt();
        assert!((got[0] - (delta - root) / 2.0).abs() < 1e-12);
        assert!((got[1] - (delta + root) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn drive_stated_maps() {
        use std::f64::consts::{FRAC_PI_2, PI};
        let p = params();
        let quarter = FRAC_PI_2 / 10.0; // Ω t = π/2 at Ω = 10

        // (1,3), φ = π: |1⟩_a → i|3⟩_a
        let u = matexp_hermitian(&drive(10.0, PI, (1, 3), Squid::A, p.n_max).unwrap(), quarter)
            .unwrap();
        let out = u.apply(&basis(1, 0, 0)).unwrap();
        assert!((out.amp(&[3, 0, 0]) - C64::i()).norm() < 1e-12);

        // (0,2), φ = π/2: |2⟩ → |0⟩ and |0⟩ → -|2⟩
        let u = matexp_hermitian(
            &drive(10.0, FRAC_PI_2, (0, 2), Squid::A, p.n_max).unwrap(),
            quarter,
        )
        .unwrap();
        let out2 = u.apply(&basis(2, 0, 0)).unwrap();
        assert!((out2.amp(&[0, 0, 0]) - C64::new(1.0, 0.0)).norm() < 1e-12);
        let out0 = u.apply(&basis(0, 0, 0)).unwrap();
        assert!((out0.amp(&[2, 0, 0]) - C64::new(-1.0, 0.0)).norm() < 1e-12);

        // (1,2), φ = -π/2 on SQUID b: |1⟩_b → |2⟩_b
        let u = matexp_hermitian(
            &drive(10.0, -FRAC_PI_2, (1, 2), Squid::B, p.n_max).unwrap(),
            quarter,
        )
        .unwrap();
        let out = u.apply(&basis(0, 1, 0)).unwrap();
        assert!((out.amp(&[0, 2, 0]) - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn drive_rejects_degenerate_pair() {
        assert!(drive(1.0, 0.0, (2, 2), Squid::A, 2).is_err());
        assert!(drive(1.0, 0.0, (3, 1), Squid::A, 2).is_err());
        assert!(drive(1.0, 0.0, (1, 4), Squid::A, 2).is_err());
    }

    #[test]
    fn drive_leaves_unaddressed_levels_invariant() {
        let u = matexp_hermitian(
            &drive(3.0, 1.1, (1, 3), Squid::A, 2).unwrap(),
            0.77,
        )
        .unwrap();
        for k in [0usize, 2] {
            let s = basis(k, 1, 1);
            let out = u.apply(&s).unwrap();
            assert!((overlap(&s, &out).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_resonant_quarter_period() {
        let g = 1.0;
        let t = std::f64::consts::FRAC_PI_2 / g;
        let out = evolve_closed_resonant(&basis(3, 0, 0), g, t).unwrap();
        assert!((out.amp(&[2, 0, 1]) - C64::new(0.0, -1.0)).norm() < 1e-15);
        let back = evolve_closed_resonant(&basis(2, 0, 1), g, t).unwrap();
        assert!((back.amp(&[3, 0, 0]) - C64::new(0.0, -1.0)).norm() < 1e-15);
        // t = 0 is the identity
        let idle = evolve_closed_resonant(&basis(3, 2, 0), g, 0.0).unwrap();
        assert_eq!(idle.amp(&[3, 2, 0]), C64::new(1.0, 0.0));
    }

    #[test]
    fn closed_dispersive_phases() {
        let (g, delta) = (1.0, 10.0);
        let t = std::f64::consts::PI * delta / (g * g);
        let out = evolve_closed_dispersive(&basis(0, 2, 1), g, delta, t).unwrap();
        assert!((out.amp(&[0, 2, 1]) - C64::new(-1.0, 0.0)).norm() < 1e-12);
        let idle = evolve_closed_dispersive(&basis(0, 0, 1), g, delta, t).unwrap();
        assert_eq!(idle.amp(&[0, 0, 1]), C64::new(1.0, 0.0));
        let vac = evolve_closed_dispersive(&basis(0, 3, 0), g, delta, t).unwrap();
        assert_eq!(vac.amp(&[0, 3, 0]), C64::new(1.0, 0.0));
    }

    #[test]
    fn closed_drive_matches_matexp() {
        let (omega, phi, t) = (2.3, 0.9, 0.41);
        let closed =
            evolve_closed_drive(&basis(1, 1, 1), omega, phi, (1, 2), Squid::B, t).unwrap();
        let u = matexp_hermitian(&drive(omega, phi, (1, 2), Squid::B, 2).unwrap(), t).unwrap();
        let numeric = u.apply(&basis(1, 1, 1)).unwrap();
        let diff: f64 = (closed.amplitudes() - numeric.amplitudes())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn propagate_empty_is_identity() {
        let s = basis(1, 1, 0);
        let out = propagate(&s, &[], &params()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn propagate_matches_closed_resonant() {
        let p = params();
        let t = std::f64::consts::FRAC_PI_2 / p.g_a;
        let seg = [(HamiltonianSpec::JcResonant { squid: Squid::A }, t)];
        let numeric = propagate(&basis(3, 0, 0), &seg, &p).unwrap();
        let closed = evolve_closed_resonant(&basis(3, 0, 0), p.g_a, t).unwrap();
        let diff: f64 = (numeric.amplitudes() - closed.amplitudes())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn propagate_rejects_negative_duration() {
        let seg = [(HamiltonianSpec::JcResonant { squid: Squid::A }, -1.0)];
        assert!(matches!(
            propagate(&basis(0, 0, 0), &seg, &params()),
            Err(DynamicsError::NegativeDuration(_))
        ));
    }

    #[test]
    fn builders_are_hermitian() {
        let p = params();
        let specs = [
            HamiltonianSpec::JcResonant { squid: Squid::A },
            HamiltonianSpec::Dispersive { squid: Squid::B },
            HamiltonianSpec::JcDetuned { squid: Squid::B },
            HamiltonianSpec::Drive {
                squid: Squid::A,
                pair: (1, 3),
                omega: 10.0,
                phase: 2.1,
            },
            HamiltonianSpec::Sum(vec![
                HamiltonianSpec::JcResonant { squid: Squid::A },
                HamiltonianSpec::JcDetuned { squid: Squid::B },
            ]),
        ];
        for spec in specs {
            assert!(spec.realize(&p).unwrap().asymmetry() < 1e-12);
        }
    }

    #[test]
    fn gate_params_validation() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.omega_12 = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.delta_c = -1.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.n_max = 0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.delta_c = 3.0;
        assert!(p.validate().is_ok());
        assert!(!p.dispersive_valid());
        assert!(params().dispersive_valid());
    }
}
