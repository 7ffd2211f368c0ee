use num_traits::Zero;

use super::dense::CMatrix;
use super::jacobi::hermitian_eigen;
use crate::error::{Error, Result};
use crate::scalar::{Scalar, C};

/// Relative conjugate-symmetry tolerance.
pub const TOL_HERM: f64 = 1e-12;
/// Relative tolerance below which eigenvalues count as zero (`tol_psd`), also
/// used as the invertibility threshold `tol_pd`.
pub const TOL_PSD: f64 = 1e-10;
/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 8;

/// A self-adjoint `d×d` complex matrix, `1 ≤ d ≤ 8`.
///
/// Construction checks conjugate symmetry to `TOL_HERM` (relative to the
/// largest entry) and then stores the exactly symmetrized matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: CMatrix<T>,
}

/// `A = U diag(λ) U^H` with ascending eigenvalues.
///
/// Eigenvector columns are normalized so their first component with modulus
/// above `sqrt(eps)` is real and positive. The convention is deterministic
/// but arbitrary; callers should not rely on `U` beyond unitarity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Scalar> HermitianMatrix<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        let d = m.dim();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(format!("matrix dimension {d} outside 1..={MAX_DIM}")));
        }
        if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidField("non-finite matrix entry".into()));
        }
        let scale = m.max_abs();
        let tolerance = T::tol(TOL_HERM) * scale;
        let mut asym = T::zero();
        for i in 0..d {
            for j in i..d {
                asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if asym > tolerance {
            return Err(Error::NotHermitian { asymmetry: asym.as_f64(), tolerance: tolerance.as_f64() });
        }
        let half = T::lit(0.5);
        let sym = CMatrix::from_fn(d, |i, j| {
            if i == j {
                C::new(m[(i, i)].re, T::zero())
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * half
            }
        });
        Ok(Self { inner: sym })
    }

    /// Real symmetric input given as rows.
    pub fn from_real_rows(rows: &[&[T]]) -> Result<Self> {
        Self::new(CMatrix::from_real_rows(rows))
    }

    pub fn diagonal(values: &[T]) -> Result<Self> {
        Self::new(CMatrix::diagonal(values))
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: CMatrix::identity(dim) }
    }

    pub fn scalar(dim: usize, c: T) -> Self {
        Self { inner: CMatrix::identity(dim).scale(c) }
    }

    /// Wraps a matrix that is Hermitian by construction (e.g. `U D U^H`),
    /// symmetrizing away round-off.
    pub(crate) fn from_trusted(m: CMatrix<T>) -> Self {
        let d = m.dim();
        let half = T::lit(0.5);
        Self {
            inner: CMatrix::from_fn(d, |i, j| {
                if i == j {
                    C::new(m[(i, i)].re, T::zero())
                } else {
                    (m[(i, j)] + m[(j, i)].conj()) * half
                }
            }),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.inner
    }

    pub fn scale(&self, c: T) -> Self {
        Self { inner: self.inner.scale(c) }
    }

    /// Conjugation `R A R^H` by a unitary `R`.
    pub fn conjugate_by(&self, r: &CMatrix<T>) -> Self {
        Self::from_trusted(r.matmul(&self.inner).matmul(&r.adjoint()))
    }

    pub fn spectral_decompose(&self) -> SpectralDecomposition<T> {
        let d = self.dim();
        if d == 1 {
            return SpectralDecomposition {
                eigenvalues: vec![self.inner[(0, 0)].re],
                vectors: CMatrix::identity(1),
            };
        }
        let (values, vectors) = hermitian_eigen(&self.inner, true);
        let vectors = vectors.expect("vectors requested");
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

        let threshold = T::epsilon().sqrt();
        let mut u = CMatrix::zeros(d);
        for (col, &src) in order.iter().enumerate() {
            let lead = (0..d).map(|k| vectors[(k, src)]).find(|z| z.norm() > threshold);
            let rot = match lead {
                Some(z) => z.conj() / z.norm(),
                None => C::new(T::one(), T::zero()),
            };
            for k in 0..d {
                u[(k, col)] = vectors[(k, src)] * rot;
            }
        }
        SpectralDecomposition { eigenvalues: order.iter().map(|&i| values[i]).collect(), vectors: u }
    }

    /// Eigenvalues (ascending) after the PSD check; values in `[-tol_psd, 0)`
    /// are clamped to zero.
    pub fn psd_eigenvalues(&self) -> Result<Vec<T>> {
        let dec = self.spectral_decompose();
        clamp_psd(&dec.eigenvalues)
    }

    /// `‖A‖_op`, the largest eigenvalue of a PSD matrix.
    pub fn op_norm(&self) -> Result<T> {
        let vals = self.psd_eigenvalues()?;
        Ok(vals.last().copied().unwrap_or_else(T::zero))
    }

    /// Fractional power `A^s = U diag(λ^s) U^H`.
    pub fn power(&self, s: T) -> Result<Self> {
        self.spectral_decompose().power(s)
    }
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(g(λ)) U^H`.
    pub fn map(&self, g: impl Fn(T) -> T) -> HermitianMatrix<T> {
        let d = self.dim();
        if d == 1 {
            return HermitianMatrix { inner: CMatrix::diagonal(&[g(self.eigenvalues[0])]) };
        }
        let u = &self.vectors;
        let mapped: Vec<T> = self.eigenvalues.iter().map(|&l| g(l)).collect();
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mut acc = C::zero();
                for k in 0..d {
                    acc = acc + u[(i, k)] * u[(j, k)].conj() * mapped[k];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)] = C::new(out[(i, i)].re, T::zero());
        }
        HermitianMatrix { inner: out }
    }

    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        self.map(|l| l)
    }

    /// Clamped eigenvalues, or `NotPsd`.
    pub fn psd_eigenvalues(&self) -> Result<Vec<T>> {
        clamp_psd(&self.eigenvalues)
    }

    /// Smallest eigenvalue if the matrix is positive-definite, else `SingularMatrix`.
    pub fn check_invertible(&self) -> Result<T> {
        let vals = clamp_psd(&self.eigenvalues)?;
        let scale = vals.last().copied().unwrap_or_else(T::zero);
        let tol = T::tol(TOL_PSD) * scale;
        let min = vals[0];
        if min <= tol || min.is_zero() {
            return Err(Error::SingularMatrix { min_eigenvalue: min.as_f64(), tolerance: tol.as_f64() });
        }
        Ok(min)
    }

    pub fn power(&self, s: T) -> Result<HermitianMatrix<T>> {
        let vals = clamp_psd(&self.eigenvalues)?;
        if s < T::zero() {
            self.check_invertible()?;
        }
        let d = self.dim();
        if d == 1 {
            return Ok(HermitianMatrix { inner: CMatrix::diagonal(&[pow_nonneg(vals[0], s)]) });
        }
        let clamped = SpectralDecomposition { eigenvalues: vals, vectors: self.vectors.clone() };
        Ok(clamped.map(|l| pow_nonneg(l, s)))
    }
}

/// `λ^s` with `0^s = 0` for `s > 0` and `0^0 = 1`.
#[inline]
pub(crate) fn pow_nonneg<T: Scalar>(l: T, s: T) -> T {
    if s == T::one() {
        l
    } else if l.is_zero() {
        if s.is_zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        l.powf(s)
    }
}

pub(crate) fn clamp_psd<T: Scalar>(values: &[T]) -> Result<Vec<T>> {
    let scale = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = T::tol(TOL_PSD) * scale;
    values
        .iter()
        .map(|&v| {
            if v >= T::zero() {
                Ok(v)
            } else if v >= -tol {
                Ok(T::zero())
            } else {
                Err(Error::NotPsd { eigenvalue: v.as_f64(), tolerance: tol.as_f64() })
            }
        })
        .collect()
}

/// Wraps a slice of real symmetric rows into a `HermitianMatrix<f64>`; panics
/// on invalid input. Intended for literals in tests and examples.
pub fn herm<T: Scalar>(rows: &[&[T]]) -> HermitianMatrix<T> {
    HermitianMatrix::from_real_rows(rows).expect("literal Hermitian matrix")
}
