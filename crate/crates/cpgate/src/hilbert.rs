//! Complex linear algebra and Hilbert-space plumbing.
//!
//! States and operators carry their subsystem dimensions so tensor-product
//! bookkeeping stays explicit. The canonical layout for the gate simulation
//! is `[SQUID a (4), SQUID b (4), resonator (n_max + 1)]` with flat index
//! `(k*4 + l)*(n_max + 1) + n`; that convention is fixed here once and reused
//! by every higher layer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Shorthand used throughout the crate.
pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("subsystem dimensions mismatch: {0:?} vs {1:?}")]
    DimsMismatch(Vec<usize>, Vec<usize>),
    #[error("amplitude vector has length {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("matrix is {rows}x{cols}, expected square of side {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("operator is not Hermitian: max|H - H^dagger| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },
    #[error("Fock truncation must retain at least the one-photon state (n_max >= 1)")]
    FockTooSmall,
    #[error("basis index {index} out of range for subsystem dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// A pure state on a tensor product of finite-dimensional subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: DVector<C64>,
}

impl StateVector {
    /// Wraps an amplitude vector, checking the length against `dims`.
    pub fn new(dims: Vec<usize>, amps: DVector<C64>) -> Result<Self, HilbertError> {
        let expected: usize = dims.iter().product();
        if amps.len() != expected {
            return Err(HilbertError::LengthMismatch {
                got: amps.len(),
                expected,
            });
        }
        Ok(Self { dims, amps })
    }

    /// The all-zero vector (not normalized; fill it before use).
    pub fn zero(dims: Vec<usize>) -> Self {
        let len: usize = dims.iter().product();
        Self {
            dims,
            amps: DVector::from_element(len, C64::new(0.0, 0.0)),
        }
    }

    /// Product basis state |i_0⟩|i_1⟩…, one index per subsystem.
    pub fn basis(dims: Vec<usize>, indices: &[usize]) -> Result<Self, HilbertError> {
        let flat = flat_index(&dims, indices)?;
        let mut s = Self::zero(dims);
        s.amps[flat] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amps
    }

    /// Amplitude at a multi-index.
    pub fn amp(&self, indices: &[usize]) -> C64 {
        let flat = flat_index(&self.dims, indices).expect("multi-index within dims");
        self.amps[flat]
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            dims: self.dims.clone(),
            amps: self.amps.map(|a| a / n),
        }
    }
}

/// Flat index of a multi-index under row-major subsystem ordering (first
/// subsystem varies slowest), matching the Kronecker-product convention of
/// [`tensor`].
pub fn flat_index(dims: &[usize], indices: &[usize]) -> Result<usize, HilbertError> {
    if dims.len() != indices.len() {
        return Err(HilbertError::DimsMismatch(
            dims.to_vec(),
            indices.to_vec(),
        ));
    }
    let mut flat = 0usize;
    for (&d, &i) in dims.iter().zip(indices) {
        if i >= d {
            return Err(HilbertError::IndexOutOfRange { index: i, dim: d });
        }
        flat = flat * d + i;
    }
    Ok(flat)
}

/// Inner product ⟨x|y⟩, conjugate-linear in the first argument.
pub fn overlap(x: &StateVector, y: &StateVector) -> Result<C64, HilbertError> {
    if x.dims != y.dims {
        return Err(HilbertError::DimsMismatch(x.dims.clone(), y.dims.clone()));
    }
    Ok(x.amps.dotc(&y.amps))
}

/// A square operator on a tensor product of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dims: Vec<usize>,
    mat: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn new(dims: Vec<usize>, mat: DMatrix<C64>) -> Result<Self, HilbertError> {
        let expected: usize = dims.iter().product();
        if mat.nrows() != expected || mat.ncols() != expected {
            return Err(HilbertError::ShapeMismatch {
                rows: mat.nrows(),
                cols: mat.ncols(),
                expected,
            });
        }
        Ok(Self { dims, mat })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            dims,
            mat: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            dims,
            mat: DMatrix::from_element(n, n, C64::new(0.0, 0.0)),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.mat
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    /// Largest entry magnitude (unused entries of sparse physical operators
    /// are exact zeros, so this is a cheap scale estimate).
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max |H - H^dagger| over entries.
    pub fn asymmetry(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Applies the operator to a state of identical dims.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector, HilbertError> {
        if self.dims != s.dims {
            return Err(HilbertError::DimsMismatch(self.dims.clone(), s.dims.clone()));
        }
        Ok(StateVector {
            dims: s.dims.clone(),
            amps: &self.mat * &s.amps,
        })
    }

    /// Entrywise sum; the operands must live on identical dims.
    pub fn add(&self, other: &Self) -> Result<Self, HilbertError> {
        if self.dims != other.dims {
            return Err(HilbertError::DimsMismatch(
                self.dims.clone(),
                other.dims.clone(),
            ));
        }
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dims: self.dims.clone(),
            mat: self.mat.map(|c| c * factor),
        }
    }

    /// Composition `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self, HilbertError> {
        if self.dims != other.dims {
            return Err(HilbertError::DimsMismatch(
                self.dims.clone(),
                other.dims.clone(),
            ));
        }
        Ok(Self {
            dims: self.dims.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    /// max |U^dagger U - I|, i.e. distance from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.side();
        let prod = self.mat.adjoint() * &self.mat;
        let eye = DMatrix::<C64>::identity(n, n);
        (prod - eye).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Kronecker product with concatenated dims: `(A ⊗ B)(x ⊗ y) = (Ax) ⊗ (By)`.
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    OperatorMatrix {
        dims,
        mat: a.mat.kronecker(&b.mat),
    }
}

/// Truncated Fock-space ladder operators `(create, annihilate)` on the
/// `n_max + 1` dimensional photon space: `a|n⟩ = √n |n-1⟩`,
/// `a⁺|n⟩ = √(n+1) |n+1⟩` for `n < n_max`, and `a⁺|n_max⟩ = 0`.
pub fn fock_ops(n_max: usize) -> Result<(OperatorMatrix, OperatorMatrix), HilbertError> {
    if n_max == 0 {
        return Err(HilbertError::FockTooSmall);
    }
    let d = n_max + 1;
    let mut ann = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for n in 1..d {
        ann[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let create = ann.adjoint();
    Ok((
        OperatorMatrix {
            dims: vec![d],
            mat: create,
        },
        OperatorMatrix {
            dims: vec![d],
            mat: ann,
        },
    ))
}

/// Unitary `exp(-i H t)` of a Hermitian generator, computed by Padé
/// scaling-and-squaring of `-i t (H + H^dagger)/2`; inputs whose asymmetry
/// exceeds the tolerance are rejected with the measured asymmetry norm.
pub fn matexp_hermitian(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix, HilbertError> {
    let asymmetry = h.asymmetry();
    let tol = 1e-12 * h.max_abs().max(1.0);
    if asymmetry > tol {
        return Err(HilbertError::NotHermitian { asymmetry });
    }
    // Symmetrize to scrub rounding noise before exponentiating.
    let sym = (&h.mat + h.mat.adjoint()).map(|c| c * 0.5);
    let generator = sym.map(|c| c * C64::new(0.0, -t));
    Ok(OperatorMatrix {
        dims: h.dims.clone(),
        mat: generator.exp(),
    })
}
