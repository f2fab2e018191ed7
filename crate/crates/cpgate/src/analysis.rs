//! Fidelity analysis: the closed-form error formulas, the Ω₁₂ sweep, a
//! quadrature oracle, a full-model Monte-Carlo estimator, and the error
//! budget.
//!
//! The analytic model captures one error mechanism: while the photon sits
//! in the resonator during the two simultaneous-pulse steps, SQUID b's
//! (1,2) drive runs against a constant detuning s = g_b²/Δ_c. The resulting
//! single-input fidelity F(x) depends on the input only through x = |θ|²,
//! the |11⟩ weight. The Monte-Carlo estimator instead propagates the full
//! model (all simultaneous couplings) and averages over random normalized
//! inputs, so the two columns quantify different supersets of the error.

use crate::dynamics::{GateParams, ModelFlags, ModelKind};
use crate::hilbert::C64;
use crate::protocol::{
    build_schedule, computational_block_matrix, ideal_gate_unitary, ProtocolError,
};
use nalgebra::{DMatrix, Vector4};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("detuning must be positive, got {0}")]
    BadDetuning(f64),
    #[error("omega12 must be positive, got {0} (the pulse angle diverges)")]
    BadOmega(f64),
    #[error("s must be nonnegative and finite, got {0}")]
    BadS(f64),
    #[error("x = {0} outside [0, 1]")]
    BadX(f64),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("samples must be at least 1")]
    NoSamples,
    #[error("relaxation time must be positive, got {0}")]
    BadRelaxation(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Occupation probability of the intermediate level during the resonant
/// half-swap when the transition is detuned by Δ: p₃ = 4g²/(4g² + Δ²).
pub fn occupation_p3(g: f64, delta: f64) -> Result<f64, AnalysisError> {
    if !(delta > 0.0) {
        return Err(AnalysisError::BadDetuning(delta));
    }
    let four_g2 = 4.0 * g * g;
    Ok(four_g2 / (four_g2 + delta * delta))
}

/// The quantities entering the closed-form fidelity: detuning s = g_b²/Δ_c,
/// pulse angle φ = π√(Ω₁₂² + s²/4)/(2Ω₁₂), and the rotation components
/// p = cos φ, q = (s/2)/√(Ω₁₂² + s²/4)·sin φ, r = Ω₁₂/√(Ω₁₂² + s²/4)·sin φ
/// (so p² + q² + r² = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityTerms {
    pub s: f64,
    pub phi: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl FidelityTerms {
    /// Terms at a given drive strength and dispersive parameters.
    pub fn new(omega12: f64, g_b: f64, delta_c: f64) -> Result<Self, AnalysisError> {
        if !(delta_c > 0.0) {
            return Err(AnalysisError::BadDetuning(delta_c));
        }
        Self::from_s(omega12, g_b * g_b / delta_c)
    }

    /// Terms at an explicit detuning s (s = 0 reproduces the error-free
    /// limit p = q = 0, r = 1).
    pub fn from_s(omega12: f64, s: f64) -> Result<Self, AnalysisError> {
        if !(omega12 > 0.0) || !omega12.is_finite() {
            return Err(AnalysisError::BadOmega(omega12));
        }
        if s < 0.0 || !s.is_finite() {
            return Err(AnalysisError::BadS(s));
        }
        let root = (omega12 * omega12 + 0.25 * s * s).sqrt();
        let phi = std::f64::consts::PI * root / (2.0 * omega12);
        Ok(Self {
            s,
            phi,
            p: phi.cos(),
            q: (0.5 * s / root) * phi.sin(),
            r: (omega12 / root) * phi.sin(),
        })
    }

    /// |p² + q² + r² − 1|, zero up to rounding by construction.
    pub fn identity_defect(&self) -> f64 {
        (self.p * self.p + self.q * self.q + self.r * self.r - 1.0).abs()
    }
}

/// Single-input gate fidelity as a function of the |11⟩ weight x = |θ|²:
/// F = 1 − 2x(1 + p² − q² − r²) + x²[(1 − q² − r²)² + 2p²(1 + q² − r²) + p⁴].
pub fn fidelity_f(x: f64, t: &FidelityTerms) -> Result<f64, AnalysisError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(AnalysisError::BadX(x));
    }
    let (p2, q2, r2) = (t.p * t.p, t.q * t.q, t.r * t.r);
    let linear = 1.0 + p2 - q2 - r2;
    let quad = (1.0 - q2 - r2).powi(2) + 2.0 * p2 * (1.0 + q2 - r2) + p2 * p2;
    Ok(1.0 - 2.0 * x * linear + x * x * quad)
}

/// Average of F(x) over x ∈ [0, 1]:
/// F̄ = (1/3)[1 + p⁴ + q⁴ + r² + r⁴ + p²(−1 + 2q² − 2r²) + q²(1 + 2r²)].
pub fn average_fidelity(t: &FidelityTerms) -> f64 {
    let (p2, q2, r2) = (t.p * t.p, t.q * t.q, t.r * t.r);
    (1.0 + p2 * p2 + q2 * q2 + r2 + r2 * r2 + p2 * (-1.0 + 2.0 * q2 - 2.0 * r2)
        + q2 * (1.0 + 2.0 * r2))
        / 3.0
}

/// Composite-Simpson average of F(x) over [0, 1]; the quadrature oracle for
/// [`average_fidelity`]. `intervals` is rounded up to even.
pub fn average_fidelity_quadrature(
    t: &FidelityTerms,
    intervals: usize,
) -> Result<f64, AnalysisError> {
    let n = intervals.max(2) + intervals % 2;
    let h = 1.0 / n as f64;
    let mut acc = fidelity_f(0.0, t)? + fidelity_f(1.0, t)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * fidelity_f((i as f64 * h).min(1.0), t)?;
    }
    Ok(acc * h / 3.0)
}

/// Per-point analytic sweep of F̄ over drive strengths. The grid must be
/// positive and strictly ascending.
pub fn sweep_average_fidelity(
    grid: &[f64],
    g_b: f64,
    delta_c: f64,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    validate_grid(grid)?;
    grid.iter()
        .map(|&omega12| {
            let t = FidelityTerms::new(omega12, g_b, delta_c)?;
            Ok((omega12, average_fidelity(&t)))
        })
        .collect()
}

fn validate_grid(grid: &[f64]) -> Result<(), AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::BadGrid("empty grid".into()));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(AnalysisError::BadGrid(format!(
                "grid must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if grid[0] <= 0.0 {
        return Err(AnalysisError::BadGrid(format!(
            "grid values must be positive (first is {})",
            grid[0]
        )));
    }
    Ok(())
}

/// Monte-Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

/// Draws a Haar-like random two-qubit state: eight standard normals form
/// the real/imaginary parts, normalized to the 7-sphere.
fn random_amps(rng: &mut ChaCha8Rng) -> Vector4<C64> {
    loop {
        let mut v = Vector4::from_fn(|_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v /= C64::new(norm, 0.0);
            return v;
        }
    }
}

/// Full-model average gate fidelity by Monte Carlo: propagates random
/// normalized inputs through the full model and averages the squared
/// overlap with the ideal-model output. Deterministic for a fixed seed;
/// samples are summed in index order.
pub fn mc_average_fidelity(
    p: &GateParams,
    samples: usize,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    mc_average_fidelity_flagged(p, samples, seed, ModelFlags::default())
}

/// Monte-Carlo estimator with explicit coupling flags (diagnostics hook):
/// both the full propagation and the ideal reference honor the same flags,
/// so disabling every coupling yields fidelity 1.
pub fn mc_average_fidelity_flagged(
    p: &GateParams,
    samples: usize,
    seed: u64,
    flags: ModelFlags,
) -> Result<McEstimate, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::NoSamples);
    }
    let schedule = build_schedule(p)?;
    let full = computational_block_matrix(&schedule, p, ModelKind::Full, flags)?;
    let ideal = computational_block_matrix(&schedule, p, ModelKind::Ideal, flags)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fids: Vec<f64> = (0..samples)
        .map(|_| {
            let amps = random_amps(&mut rng);
            let target = &ideal * amps;
            let got = &full * amps;
            target.dotc(&got).norm_sqr()
        })
        .collect();
    let mean = fids.iter().sum::<f64>() / samples as f64;
    let std_err = if samples > 1 {
        let var = fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err,
        samples,
    })
}

/// One sweep point carrying the analytic value and, optionally, the
/// Monte-Carlo full-model estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub omega12: f64,
    pub analytic: f64,
    pub full: Option<McEstimate>,
}

/// Analytic + full-model sweep: each grid point moves Ω₁₂ and Ω₀₂ together
/// (their equality is a schedule invariant). Points run in parallel on the
/// current thread pool; point i uses seed `seed + i` so results do not
/// depend on scheduling.
pub fn sweep_with_full_model(
    base: &GateParams,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, AnalysisError> {
    use rayon::prelude::*;
    validate_grid(grid)?;
    if samples == 0 {
        return Err(AnalysisError::NoSamples);
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, &omega12)| {
            let mut p = *base;
            p.omega_12 = omega12;
            p.omega_02 = omega12;
            let t = FidelityTerms::new(omega12, p.g_b, p.delta_c)?;
            let mc = mc_average_fidelity(&p, samples, seed.wrapping_add(i as u64))?;
            Ok(SweepPoint {
                omega12,
                analytic: average_fidelity(&t),
                full: Some(mc),
            })
        })
        .collect()
}

/// Labeled error contributions. Serialization key order is fixed:
/// `p3`, `analytic_infidelity`, `full_residual`, `relaxation_exposure`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorBudget {
    /// Intermediate-level occupation during the detuned exchange.
    pub p3: f64,
    /// 1 − F̄ from the closed-form average fidelity.
    pub analytic_infidelity: f64,
    /// Analytic F̄ minus the Monte-Carlo full-model mean: the part of the
    /// error attributable to couplings the closed form does not model
    /// (chiefly SQUID a's always-on resonant exchange).
    pub full_residual: f64,
    /// (t₁ + t₁′)/γ₃⁻¹ when a relaxation time is supplied, else null.
    pub relaxation_exposure: Option<f64>,
}

/// Assembles the error budget at the given parameters. `gamma3_inv` is the
/// intermediate-level relaxation time in the same units as durations
/// (1/g_b); it must be positive when provided. `s_override` replaces the
/// derived detuning s = g_b²/Δ_c in the analytic terms (s = 0 probes the
/// error-free limit) without touching the full-model propagation.
pub fn error_budget(
    p: &GateParams,
    gamma3_inv: Option<f64>,
    samples: usize,
    seed: u64,
    s_override: Option<f64>,
) -> Result<ErrorBudget, AnalysisError> {
    if let Some(t) = gamma3_inv {
        if !(t > 0.0) {
            return Err(AnalysisError::BadRelaxation(t));
        }
    }
    let terms = match s_override {
        Some(s) => FidelityTerms::from_s(p.omega_12, s)?,
        None => FidelityTerms::new(p.omega_12, p.g_b, p.delta_c)?,
    };
    let analytic = average_fidelity(&terms);
    let mc = mc_average_fidelity(p, samples, seed)?;
    let t1 = std::f64::consts::PI / (2.0 * p.omega_13);
    let t1p = std::f64::consts::PI / (2.0 * p.g_a);
    Ok(ErrorBudget {
        p3: occupation_p3(p.g_b, p.delta_c)?,
        analytic_infidelity: 1.0 - analytic,
        full_residual: analytic - mc.mean,
        relaxation_exposure: gamma3_inv.map(|g| (t1 + t1p) / g),
    })
}

/// Evenly spaced grid of `steps` points from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, steps: usize) -> Result<Vec<f64>, AnalysisError> {
    if steps < 2 {
        return Err(AnalysisError::BadGrid(format!(
            "need at least 2 steps, got {steps}"
        )));
    }
    if !(from < to) {
        return Err(AnalysisError::BadGrid(format!(
            "need from < to, got {from} and {to}"
        )));
    }
    let h = (to - from) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == steps - 1 {
                to
            } else {
                from + h * i as f64
            }
        })
        .collect())
}

/// The exact CP block as a dense 4×4 (convenience for fidelity targets).
pub fn cp_block() -> DMatrix<C64> {
    ideal_gate_unitary().matrix().clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p3_reference_points() {
        assert!((occupation_p3(1.0, 10.0).unwrap() - 1.0 / 26.0).abs() < 1e-15);
        assert_eq!(occupation_p3(1.0, 2.0).unwrap(), 0.5);
        assert!((occupation_p3(1.0, 20.0).unwrap() - 4.0 / 404.0).abs() < 1e-15);
        let mut prev = 1.0;
        for ratio in [2.0, 5.0, 10.0, 20.0, 40.0] {
            let v = occupation_p3(1.0, ratio).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(occupation_p3(1.0, 0.0).is_err());
    }

    #[test]
    fn terms_error_free_limit() {
        let t = FidelityTerms::from_s(0.7, 0.0).unwrap();
        assert!((t.phi - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(t.p.abs() < 1e-15);
        assert_eq!(t.q, 0.0);
        assert!((t.r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn terms_regression_point() {
        // Ω₁₂ = 0.6, Δ_c = 10, g_b = 1 (s = 0.1)
        let t = FidelityTerms::new(0.6, 1.0, 10.0).unwrap();
        assert!((t.s - 0.1).abs() < 1e-15);
        assert!((t.phi - 1.576_241_044_426_689_9).abs() < 1e-12);
        assert!((t.p - (-0.005_444_690_730_436_066)).abs() < 1e-12);
        assert!((t.q - 0.083_044_248_917_228_17).abs() < 1e-12);
        assert!((t.r - 0.996_530_987_006_737_8).abs() < 1e-12);
    }

    #[test]
    fn terms_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let omega = 0.05 + 2.0 * rng.gen::<f64>();
            let s = 0.5 * rng.gen::<f64>();
            let t = FidelityTerms::from_s(omega, s).unwrap();
            assert!(t.identity_defect() < 1e-12);
        }
        assert!(FidelityTerms::from_s(0.0, 0.1).is_err());
        assert!(FidelityTerms::new(0.6, 1.0, 0.0).is_err());
    }

    #[test]
    fn fidelity_f_limits() {
        let t = FidelityTerms::new(0.6, 1.0, 10.0).unwrap();
        assert_eq!(fidelity_f(0.0, &t).unwrap(), 1.0);
        let clean = FidelityTerms::from_s(0.6, 0.0).unwrap();
        for x in [0.0, 0.3, 0.7, 1.0] {
            assert!((fidelity_f(x, &clean).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(fidelity_f(-0.1, &t).is_err());
        assert!(fidelity_f(1.1, &t).is_err());
    }

    #[test]
    fn fidelity_f_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let t = FidelityTerms::from_s(0.05 + 2.0 * rng.gen::<f64>(), 0.5 * rng.gen::<f64>())
                .unwrap();
            let x = rng.gen::<f64>();
            let f = fidelity_f(x, &t).unwrap();
            assert!((-1e-12..=1.0 + 1e-12).contains(&f), "F({x}) = {f}");
        }
    }

    #[test]
    fn average_fidelity_regression_points() {
        let t = FidelityTerms::new(0.6, 1.0, 10.0).unwrap();
        let f = average_fidelity(&t);
        assert!((f - 0.999_940_984_443_907_9).abs() < 1e-12);
        assert!(f > 0.9999);
        let t3 = FidelityTerms::new(0.3, 1.0, 10.0).unwrap();
        assert!((average_fidelity(&t3) - 0.999_078_414_469_921_1).abs() < 1e-12);
        let clean = FidelityTerms::from_s(0.8, 0.0).unwrap();
        assert!((average_fidelity(&clean) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t = FidelityTerms::from_s(0.05 + 2.0 * rng.gen::<f64>(), 0.5 * rng.gen::<f64>())
                .unwrap();
            let closed = average_fidelity(&t);
            let numeric = average_fidelity_quadrature(&t, 10_000).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-9,
                "closed {closed} vs simpson {numeric}"
            );
        }
    }

    #[test]
    fn sweep_values_and_monotonicity() {
        let single = sweep_average_fidelity(&[0.6], 1.0, 10.0).unwrap();
        assert!((single[0].1 - 0.999_940_984_443_907_9).abs() < 1e-12);

        let grid = linspace(0.3, 1.0, 15).unwrap();
        let rows = sweep_average_fidelity(&grid, 1.0, 10.0).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-15, "dip at {}", w[1].0);
        }

        assert!(sweep_average_fidelity(&[0.5, 0.4], 1.0, 10.0).is_err());
        assert!(sweep_average_fidelity(&[-0.1, 0.4], 1.0, 10.0).is_err());
        assert!(sweep_average_fidelity(&[], 1.0, 10.0).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.3, 1.0, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.3);
        assert_eq!(g[7], 1.0);
        assert!(linspace(1.0, 0.3, 8).is_err());
        assert!(linspace(0.3, 1.0, 1).is_err());
    }

    #[test]
    fn mc_zeroed_couplings_is_unity() {
        let p = GateParams::default();
        let off = ModelFlags {
            a_resonant: false,
            b_detuned: false,
        };
        let est = mc_average_fidelity_flagged(&p, 32, 0, off).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-9, "mean {}", est.mean);
    }

    #[test]
    fn mc_is_deterministic() {
        let p = GateParams::default();
        let a = mc_average_fidelity(&p, 24, 42).unwrap();
        let b = mc_average_fidelity(&p, 24, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.std_err.to_bits(), b.std_err.to_bits());
        let c = mc_average_fidelity(&p, 24, 43).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn budget_shape() {
        let p = GateParams::default();
        let b = error_budget(&p, Some(1000.0), 16, 0, None).unwrap();
        assert!((b.p3 - 1.0 / 26.0).abs() < 1e-15);
        assert!(b.analytic_infidelity >= 0.0);
        let t_exposed = std::f64::consts::PI / 20.0 + std::f64::consts::PI / 2.0;
        assert!((b.relaxation_exposure.unwrap() - t_exposed / 1000.0).abs() < 1e-15);
        let none = error_budget(&p, None, 16, 0, None).unwrap();
        assert!(none.relaxation_exposure.is_none());
        assert!(error_budget(&p, Some(-1.0), 16, 0, None).is_err());
        let clean = error_budget(&p, None, 16, 0, Some(0.0)).unwrap();
        assert!(clean.analytic_infidelity.abs() < 1e-12);
        let json = serde_json::to_string(&none).unwrap();
        assert!(json.contains("\"relaxation_exposure\":null"));
        let order = ["p3", "analytic_infidelity", "full_residual", "relaxation_exposure"];
        let mut last = 0;
        for key in order {
            let pos = json.find(key).unwrap();
            assert!(pos > last || last == 0);
            last = pos;
        }
    }
}
