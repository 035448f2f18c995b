use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Basis, BasisState};
use crate::operator::Operator;

pub const NORM_TOLERANCE: f64 = 1e-8;
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

/// Largest entry modulus of a dense matrix.
pub fn max_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct StateVector {
    basis: Arc<Basis>,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(basis: Arc<Basis>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::param(
                "amplitudes",
                format!("length {} does not match basis dimension {}", amplitudes.len(), basis.dimension()),
            ));
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn zeros(basis: Arc<Basis>) -> Self {
        let n = basis.dimension();
        StateVector { basis, amplitudes: DVector::zeros(n) }
    }

    /// The basis vector labelled `state`.
    pub fn basis_state(basis: Arc<Basis>, state: &BasisState) -> Result<Self> {
        let idx = basis
            .lookup(state)
            .ok_or_else(|| Error::InvalidBasis(format!("configuration {state} is not in the basis")))?;
        let mut psi = Self::zeros(basis);
        psi.amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(psi)
    }

    /// Normalized superposition of labelled configurations.
    pub fn superposition<'a>(
        basis: Arc<Basis>,
        terms: impl IntoIterator<Item = (&'a BasisState, C64)>,
    ) -> Result<Self> {
        let mut psi = Self::zeros(basis);
        for (state, amp) in terms {
            let idx = psi
                .basis
                .lookup(state)
                .ok_or_else(|| Error::InvalidBasis(format!("configuration {state} is not in the basis")))?;
            psi.amplitudes[idx] += amp;
        }
        psi.normalize()?;
        Ok(psi)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        self.amplitudes.as_mut_slice()
    }

    pub fn amplitude(&self, state: &BasisState) -> Option<C64> {
        self.basis.lookup(state).map(|i| self.amplitudes[i])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::UnphysicalState(format!("cannot normalize a vector of norm {n}")));
        }
        self.amplitudes /= C64::new(n, 0.0);
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if !self.basis.is_compatible(&other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Real part of `⟨ψ|O|ψ⟩` (unnormalized).
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if !self.basis.is_compatible(op.basis()) {
            return Err(Error::BasisMismatch);
        }
        let o_psi = op.apply(self.as_slice());
        Ok(self.amplitudes.iter().zip(&o_psi).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// Probability weight on basis index `index`.
    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// Apply `op` and return the resulting (unnormalized) vector.
    pub fn apply(&self, op: &Operator) -> Result<StateVector> {
        if !self.basis.is_compatible(op.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(StateVector { basis: self.basis.clone(), amplitudes: DVector::from_vec(op.apply(self.as_slice())) })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { basis: self.basis.clone(), matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    basis: Arc<Basis>,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(basis: Arc<Basis>, matrix: DMatrix<C64>) -> Result<Self> {
        let n = basis.dimension();
        if matrix.shape() != (n, n) {
            return Err(Error::param("matrix", format!("shape {:?} does not match dimension {n}", matrix.shape())));
        }
        Ok(DensityMatrix { basis, matrix })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [C64] {
        self.matrix.as_mut_slice()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        max_norm(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Replace `ρ` by `(ρ + ρ†)/2`, returning the defect that was removed.
    pub fn symmetrize(&mut self) -> f64 {
        let defect = self.hermiticity_defect();
        self.matrix = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        defect
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace, and positive semidefinite within tolerances.
    pub fn check_physical(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > HERMITICITY_TOLERANCE {
            return Err(Error::UnphysicalState(format!("hermiticity defect {defect:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOLERANCE || tr.im.abs() > TRACE_TOLERANCE {
            return Err(Error::UnphysicalState(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -POSITIVITY_TOLERANCE {
            return Err(Error::UnphysicalState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }

    /// `⟨ψ|ρ|ψ⟩` (real part).
    pub fn expectation_in(&self, psi: &StateVector) -> Result<f64> {
        if !self.basis.is_compatible(psi.basis()) {
            return Err(Error::BasisMismatch);
        }
        let v = psi.amplitudes();
        Ok(v.dotc(&(&self.matrix * v)).re)
    }

    /// `Re tr(O ρ)`.
    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if !self.basis.is_compatible(op.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(op.entries().iter().map(|&(r, c, v)| (v * self.matrix[(c, r)]).re).sum())
    }
}
