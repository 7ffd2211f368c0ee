//! Self-adjoint matrix algebra: spectral decomposition, fractional powers and
//! operator norms for `1 ≤ d ≤ 8`.

mod dense;
mod hermitian;
pub(crate) mod jacobi;

pub use dense::CMatrix;
pub use hermitian::{herm, HermitianMatrix, SpectralDecomposition, MAX_DIM, TOL_HERM, TOL_PSD};
pub(crate) use hermitian::pow_nonneg;

use crate::error::Result;
use crate::scalar::Scalar;

/// Eigen-decomposition of a Hermitian matrix.
pub fn spectral_decompose<T: Scalar>(a: &HermitianMatrix<T>) -> SpectralDecomposition<T> {
    a.spectral_decompose()
}

/// `A^s` for PSD `A` (positive-definite when `s < 0`).
pub fn mat_power<T: Scalar>(a: &HermitianMatrix<T>, s: T) -> Result<HermitianMatrix<T>> {
    a.power(s)
}

/// Operator norm of a PSD matrix.
pub fn op_norm<T: Scalar>(a: &HermitianMatrix<T>) -> Result<T> {
    a.op_norm()
}
