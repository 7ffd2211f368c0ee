use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Scalar, C};

/// A `C^d`-valued function sampled at cell centers, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledVectorField<T> {
    grid: Grid<T>,
    dim: usize,
    values: Vec<C<T>>,
}

impl<T: Scalar> SampledVectorField<T> {
    pub fn new(grid: Grid<T>, dim: usize, values: Vec<C<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("vector dimension 0".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} points of dimension {dim}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: Grid<T>, dim: usize) -> Self {
        Self { grid, dim, values: vec![C::new(T::zero(), T::zero()); grid.len() * dim] }
    }

    /// `f(x) = g(x)` at every cell center; `g` writes the `d` components.
    pub fn from_fn(grid: Grid<T>, dim: usize, mut g: impl FnMut([T; 2], &mut [C<T>])) -> Result<Self> {
        let mut values = vec![C::new(T::zero(), T::zero()); grid.len() * dim];
        for (i, chunk) in values.chunks_mut(dim).enumerate() {
            g(grid.center(i), chunk);
        }
        Self::new(grid, dim, values)
    }

    /// Real scalar field, `d = 1`.
    pub fn from_real(grid: Grid<T>, values: &[T]) -> Result<Self> {
        Self::new(grid, 1, values.iter().map(|&v| C::new(v, T::zero())).collect())
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[C<T>] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn point_mut(&mut self, i: usize) -> &mut [C<T>] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn scale(&self, c: T) -> Self {
        Self { grid: self.grid, dim: self.dim, values: self.values.iter().map(|&z| z * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self { grid: self.grid, dim: self.dim, values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self { grid: self.grid, dim: self.dim, values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect() })
    }

    /// Zero outside the cells where `keep` holds.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut out = self.clone();
        let zero = C::new(T::zero(), T::zero());
        for i in 0..self.grid.len() {
            if !keep(i) {
                out.point_mut(i).fill(zero);
            }
        }
        out
    }

    /// Pointwise `v ↦ M(x) v`.
    pub fn apply_matrices(&self, mats: &[crate::matrix::CMatrix<T>]) -> Result<Self> {
        if mats.len() != self.grid.len() || mats.iter().any(|m| m.dim() != self.dim) {
            return Err(Error::ShapeMismatch("matrix field does not match vector field".into()));
        }
        let mut out = self.clone();
        for (i, m) in mats.iter().enumerate() {
            m.mul_vec_into(self.point(i), out.point_mut(i));
        }
        Ok(out)
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::ShapeMismatch("fields live on different grids or dimensions".into()));
        }
        Ok(())
    }
}

/// A variable exponent `p(x) ∈ [1, p_+]` sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentField<T> {
    grid: Grid<T>,
    values: Vec<T>,
    p_minus: T,
    p_plus: T,
}

impl<T: Scalar> ExponentField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} exponents for {} points", values.len(), grid.len())));
        }
        if values.iter().any(|&p| !(p >= T::one()) || !p.is_finite()) {
            return Err(Error::InvalidExponent("exponents must lie in [1, inf)".into()));
        }
        let p_minus = values.iter().fold(T::infinity(), |a, &b| a.min(b));
        let p_plus = values.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        Ok(Self { grid, values, p_minus, p_plus })
    }

    pub fn constant(grid: Grid<T>, p: T) -> Result<Self> {
        Self::new(grid, vec![p; grid.len()])
    }

    pub fn from_fn(grid: Grid<T>, p: impl Fn([T; 2]) -> T) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| p(grid.center(i))).collect())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn p_minus(&self) -> T {
        self.p_minus
    }

    pub fn p_plus(&self) -> T {
        self.p_plus
    }

    /// `Some(p)` when the field is constant.
    pub fn as_constant(&self) -> Option<T> {
        (self.p_minus == self.p_plus).then_some(self.p_plus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_bounds_are_cached() {
        let g = Grid::<f64>::new(1, 1.0, 8).unwrap();
        let e = ExponentField::from_fn(g, |x| if x[0] < 0.0 { 2.0 } else { 3.0 }).unwrap();
        assert_eq!((e.p_minus(), e.p_plus()), (2.0, 3.0));
        assert_eq!(e.as_constant(), None);
        assert!(ExponentField::constant(g, 0.5).is_err());
        assert!(ExponentField::constant(g, f64::INFINITY).is_err());
    }

    #[test]
    fn shapes_are_checked() {
        let g = Grid::<f64>::new(1, 1.0, 8).unwrap();
        assert!(SampledVectorField::new(g, 2, vec![C::new(0.0, 0.0); 15]).is_err());
        let a = SampledVectorField::zeros(g, 2);
        let b = SampledVectorField::zeros(g, 1);
        assert!(a.sub(&b).is_err());
    }
}
