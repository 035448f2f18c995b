//! Sparse complex operators tagged with the basis they act on.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::Basis;

/// Sparse matrix in triplet form, sorted row-major with duplicates merged.
#[derive(Clone, Debug)]
pub struct Operator {
    basis: Arc<Basis>,
    entries: Vec<(usize, usize, C64)>,
}

impl Operator {
    /// Entries with equal `(row, col)` are summed; exact zeros are dropped.
    ///
    /// Panics if an index is outside the basis dimension.
    pub fn from_triplets(basis: Arc<Basis>, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let dim = basis.dimension();
        let mut acc: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "operator entry ({r}, {c}) outside dimension {dim}");
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc.into_iter().filter(|(_, v)| *v != C64::default()).map(|((r, c), v)| (r, c, v)).collect();
        Operator { basis, entries }
    }

    pub fn zero(basis: Arc<Basis>) -> Self {
        Operator { basis, entries: Vec::new() }
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let n = basis.dimension();
        Operator { basis, entries: (0..n).map(|i| (i, i, C64::new(1.0, 0.0))).collect() }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    fn check(&self, other: &Operator) -> Result<()> {
        if self.basis.is_compatible(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn adjoint(&self) -> Operator {
        Operator::from_triplets(self.basis.clone(), self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator::from_triplets(self.basis.clone(), self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)))
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        Ok(Operator::from_triplets(self.basis.clone(), self.entries.iter().chain(&other.entries).copied()))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.check(other)?;
        let rows = other.row_ranges();
        let mut out = Vec::new();
        for &(r, k, a) in &self.entries {
            let (lo, hi) = rows[k];
            for &(_, c, b) in &other.entries[lo..hi] {
                out.push((r, c, a * b));
            }
        }
        Ok(Operator::from_triplets(self.basis.clone(), out))
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    /// Half-open index range of each row in `entries`.
    fn row_ranges(&self) -> Vec<(usize, usize)> {
        let n = self.dimension();
        let mut ranges = vec![(0, 0); n];
        let mut i = 0;
        for (row, range) in ranges.iter_mut().enumerate() {
            let lo = i;
            while i < self.entries.len() && self.entries[i].0 == row {
                i += 1;
            }
            *range = (lo, i);
        }
        ranges
    }

    /// Largest entry magnitude (0 for the empty operator).
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm()).fold(0.0, f64::max)
    }

    /// `max |A − A†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `y += coeff · A x`.
    pub fn apply_add(&self, coeff: C64, x: &[C64], y: &mut [C64]) {
        for &(r, c, v) in &self.entries {
            y[r] += coeff * v * x[c];
        }
    }

    /// `A x` as a new vector.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::default(); x.len()];
        self.apply_add(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// `out += coeff · A M` for a column-major `n × n` matrix `m`.
    pub(crate) fn left_mul_add(&self, coeff: C64, m: &[C64], out: &mut [C64]) {
        let n = self.dimension();
        for &(r, c, v) in &self.entries {
            let cv = coeff * v;
            for j in 0..n {
                out[r + j * n] += cv * m[c + j * n];
            }
        }
    }

    /// `out += coeff · M A†` for a column-major `n × n` matrix `m`.
    pub(crate) fn right_mul_adjoint_add(&self, coeff: C64, m: &[C64], out: &mut [C64]) {
        let n = self.dimension();
        for &(j, l, v) in &self.entries {
            let cv = coeff * v.conj();
            let (dst, src) = (j * n, l * n);
            for i in 0..n {
                out[dst + i] += cv * m[src + i];
            }
        }
    }
}
