//! Numerical kernels shared by every solver in the crate.
//!
//! Dense Hermitian problems go through Householder tridiagonalisation and
//! implicit-shift QL ([`hermitian_eigenvalues`]). The large structured
//! matrices that show up in practice (open chains, Bloch chains, banded
//! plane-wave systems) are solved by spectrum slicing: an inertia count of
//! `A - sigma I` from an `LDL^H` factorisation, driven by bisection.

mod banded;
mod cyclic;
mod dense;
mod fit;
mod hausdorff;
mod poly;
mod slicing;
mod tridiag;

pub use banded::BandedHermitian;
pub use cyclic::CyclicTridiagonal;
pub use dense::{
    cholesky_reduce, generalized_hermitian_eigenvalues, hermitian_eigenvalues, HermitianMatrix, HERMITIAN_TOL,
};
pub use fit::{fit_exponential_envelope, ExpFit};
pub use hausdorff::{hausdorff_distance, hausdorff_intervals};
pub use poly::{characteristic_polynomial, polynomial_roots};
pub use slicing::{eigenvalues_in_range, eigenvalues_in_range_tol, lowest_eigenvalues, Inertia};
pub use tridiag::SymTridiagonal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use num_complex::Complex64;

/// Closed real interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidWindow { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Sorted real eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    pub eigenvalues: Vec<f64>,
}

impl SpectrumSample {
    /// Sorts the input ascending; NaNs are placed last.
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        Self { eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Union of several samples, e.g. the spectra at a sweep of quasi-momenta.
    pub fn union<'a>(parts: impl IntoIterator<Item = &'a SpectrumSample>) -> Self {
        let all = parts.into_iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        Self::new(all)
    }

    /// Eigenvalues strictly between `lo` and `hi`.
    pub fn count_between(&self, lo: f64, hi: f64) -> usize {
        self.eigenvalues.iter().filter(|&&x| x > lo && x < hi).count()
    }

    /// Distance from `x` to the nearest eigenvalue, `inf` when empty.
    pub fn distance_to(&self, x: f64) -> f64 {
        let ev = &self.eigenvalues;
        let idx = ev.partition_point(|&v| v < x);
        let mut best = f64::INFINITY;
        if idx < ev.len() {
            best = best.min((ev[idx] - x).abs());
        }
        if idx > 0 {
            best = best.min((ev[idx - 1] - x).abs());
        }
        best
    }
}
