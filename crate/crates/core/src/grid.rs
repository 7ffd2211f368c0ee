//! Uniform cell-centered grids on `[-L, L)^n` with midpoint quadrature.

use crate::error::{Error, Result};
use crate::scalar::{pairwise_sum, Scalar};

/// `N^n` cells of width `h = 2L/N` covering `[-L, L)^n`, `n ∈ {1, 2}`.
///
/// Points are indexed row-major with axis 0 slowest. Sample points are cell
/// centers, so with `N` even no sample sits at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    n: usize,
    half_width: T,
    points_per_axis: usize,
}

impl<T: Scalar> Grid<T> {
    pub fn new(n: usize, half_width: T, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension n = {n}, expected 1 or 2")));
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {points_per_axis} must be a power of two >= 8")));
        }
        Ok(Self { n, half_width, points_per_axis })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// Points per axis `N`.
    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn log2_points(&self) -> u32 {
        self.points_per_axis.trailing_zeros()
    }

    /// Total number of cells `N^n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell width `h`.
    #[inline]
    pub fn h(&self) -> T {
        self.half_width * T::lit(2.0) / T::from_count(self.points_per_axis)
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        self.h().powi(self.n as i32)
    }

    /// Coordinate of cell center `i` along one axis.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> T {
        -self.half_width + (T::from_count(i) + T::lit(0.5)) * self.h()
    }

    /// Per-axis indices of a flat index (unused axes are 0).
    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 2] {
        match self.n {
            1 => [idx, 0],
            _ => [idx / self.points_per_axis, idx % self.points_per_axis],
        }
    }

    #[inline]
    pub fn flat_index(&self, mi: [usize; 2]) -> usize {
        match self.n {
            1 => mi[0],
            _ => mi[0] * self.points_per_axis + mi[1],
        }
    }

    /// Cell center (unused axes are 0).
    #[inline]
    pub fn center(&self, idx: usize) -> [T; 2] {
        let mi = self.multi_index(idx);
        match self.n {
            1 => [self.axis_coord(mi[0]), T::zero()],
            _ => [self.axis_coord(mi[0]), self.axis_coord(mi[1])],
        }
    }

    /// Euclidean norm `|x|` of a cell center.
    #[inline]
    pub fn radius(&self, idx: usize) -> T {
        let c = self.center(idx);
        (c[0] * c[0] + c[1] * c[1]).sqrt()
    }

    /// Euclidean distance between two cell centers.
    pub fn distance(&self, a: usize, b: usize) -> T {
        let (ma, mb) = (self.multi_index(a), self.multi_index(b));
        let mut s = T::zero();
        for k in 0..self.n {
            let d = T::from_count(ma[k].abs_diff(mb[k])) * self.h();
            s += d * d;
        }
        s.sqrt()
    }

    /// Midpoint rule: `h^n · Σ values`, summed in fixed tree order.
    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.len());
        pairwise_sum(values) * self.cell_volume()
    }

    /// Integer cell count for a length that must be a lattice multiple of `h`.
    pub fn cells_for_length(&self, length: T) -> Option<isize> {
        let k = length / self.h();
        let r = k.round();
        if (k - r).abs() <= T::tol(1e-9) * r.abs().max(T::one()) {
            r.to_isize()
        } else {
            None
        }
    }

    /// Same box, `factor`× more points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n, self.half_width, self.points_per_axis * factor)
    }

    pub fn iter_indices(&self) -> std::ops::Range<usize> {
        0..self.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_one_integrates_exactly() {
        for &(n, l, np) in &[(1usize, 1.0f64, 8usize), (1, 0.7, 1024), (2, 3.3, 64), (2, 8.0, 16)] {
            let g = Grid::new(n, l, np).unwrap();
            let ones = vec![1.0; g.len()];
            assert_eq!(g.integrate(&ones), (2.0 * l).powi(n as i32));
        }
    }

    #[test]
    fn centers_avoid_origin() {
        let g = Grid::new(1, 1.0f64, 16).unwrap();
        assert!(g.iter_indices().all(|i| g.radius(i) > 0.0));
        assert_eq!(g.axis_coord(0), -1.0 + 1.0 / 16.0);
        assert_eq!(g.axis_coord(8), 1.0 / 16.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 1.0f64, 8).is_err());
        assert!(Grid::new(1, 1.0f64, 12).is_err());
        assert!(Grid::new(1, 1.0f64, 4).is_err());
        assert!(Grid::new(1, -1.0f64, 8).is_err());
    }

    #[test]
    fn flat_and_multi_index_roundtrip() {
        let g = Grid::new(2, 1.0f64, 8).unwrap();
        for i in g.iter_indices() {
            assert_eq!(g.flat_index(g.multi_index(i)), i);
        }
        assert_eq!(g.cells_for_length(0.25), Some(1));
        assert_eq!(g.cells_for_length(0.3), None);
    }
}
