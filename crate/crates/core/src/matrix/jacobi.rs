//! Cyclic complex Jacobi iteration for small Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use super::dense::CMatrix;
use crate::scalar::{Scalar, C};

const MAX_SWEEPS: usize = 64;

/// Diagonalizes a Hermitian matrix. Returns the (unsorted) eigenvalues and,
/// if requested, the unitary `V` with `V^H A V = diag(values)`.
///
/// Each rotation `G = P R` combines a phase `P` that makes `a_pq` real with a
/// real Givens rotation `R` that zeroes it; only rows/columns `p, q` change.
pub(crate) fn hermitian_eigen<T: Scalar>(a: &CMatrix<T>, want_vectors: bool) -> (Vec<T>, Option<CMatrix<T>>) {
    let d = a.dim();
    let mut m = a.clone();
    let mut v = if want_vectors { Some(CMatrix::identity(d)) } else { None };
    let two = T::lit(2.0);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..d {
            diag += m[(i, i)].norm_sqr();
            for j in (i + 1)..d {
                off += m[(i, j)].norm_sqr();
            }
        }
        if off.is_zero() || off <= T::epsilon() * T::epsilon() * (diag + off) {
            break;
        }

        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[(p, q)];
                let abs = apq.norm();
                if abs <= T::min_positive_value() {
                    continue;
                }
                // e^{-iφ} with a_pq = |a_pq| e^{iφ}
                let phase_conj = apq.conj() / abs;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (two * abs);
                let t = if theta.abs() > T::max_value().sqrt() {
                    T::one() / (two * theta)
                } else {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                // columns: A ← A G
                for k in 0..d {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - phase_conj * akq * s;
                    m[(k, q)] = akp * s + phase_conj * akq * c;
                }
                // rows: A ← G^H A
                let phase = phase_conj.conj();
                for k in 0..d {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - phase * aqk * s;
                    m[(q, k)] = apk * s + phase * aqk * c;
                }
                m[(p, q)] = Complex::zero();
                m[(q, p)] = Complex::zero();
                m[(p, p)] = C::new(m[(p, p)].re, T::zero());
                m[(q, q)] = C::new(m[(q, q)].re, T::zero());

                if let Some(v) = v.as_mut() {
                    for k in 0..d {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * c - phase_conj * vkq * s;
                        v[(k, q)] = vkp * s + phase_conj * vkq * c;
                    }
                }
            }
        }
    }

    let values = (0..d).map(|i| m[(i, i)].re).collect();
    (values, v)
}
