use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::scalar::{Scalar, C};

/// Small dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds from row-major entries. Panics if `data.len() != dim²`.
    pub fn from_row_major(dim: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "expected {} entries", dim * dim);
        Self { dim, data }
    }

    pub fn from_real_rows(rows: &[&[T]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| C::new(rows[i][j], T::zero()))
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C::new(v, T::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] = out.data[i * d + j] + a * rhs.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::zero(); self.dim];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[C<T>], out: &mut [C<T>]) {
        let d = self.dim;
        debug_assert_eq!(v.len(), d);
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            out[i] = row.iter().zip(v).fold(C::zero(), |acc, (a, b)| acc + *a * *b);
        }
    }

    /// `|M v|` without allocating.
    pub fn apply_norm(&self, v: &[C<T>]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let z = row.iter().zip(v).fold(C::zero(), |acc, (a, b)| acc + *a * *b);
            acc += z.norm_sqr();
        }
        acc.sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
    }

    /// Largest singular value of an arbitrary (not necessarily Hermitian) matrix.
    pub fn spectral_norm(&self) -> T {
        match self.dim {
            0 => T::zero(),
            1 => self.data[0].norm(),
            2 => {
                // σ_max² = (‖M‖_F² + sqrt(‖M‖_F⁴ − 4|det M|²)) / 2
                let fro2 = self.data.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
                let det = self.data[0] * self.data[3] - self.data[1] * self.data[2];
                let disc = (fro2 * fro2 - T::lit(4.0) * det.norm_sqr()).max(T::zero());
                ((fro2 + disc.sqrt()) / T::lit(2.0)).max(T::zero()).sqrt()
            }
            _ => {
                let gram = self.adjoint().matmul(self);
                let (vals, _) = super::jacobi::hermitian_eigen(&gram, false);
                vals.iter().fold(T::zero(), |m, &v| m.max(v)).max(T::zero()).sqrt()
            }
        }
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.dim + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_closed_form_matches_gram_route() {
        let m = CMatrix::<f64>::from_fn(2, |i, j| C::new((i + 2 * j) as f64 - 1.0, (i as f64) * 0.5));
        let gram = m.adjoint().matmul(&m);
        let (vals, _) = crate::matrix::jacobi::hermitian_eigen(&gram, false);
        let expect = vals.iter().cloned().fold(0.0, f64::max).sqrt();
        assert!((m.spectral_norm() - expect).abs() < 1e-12);
    }

    #[test]
    fn identity_products() {
        let a = CMatrix::<f64>::from_fn(3, |i, j| C::new(i as f64, j as f64));
        assert_eq!(a.matmul(&CMatrix::identity(3)), a);
        assert_eq!(a.adjoint().adjoint(), a);
    }
}
