use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{pairwise_sum_c, Scalar, C};
use crate::spaces::SampledVectorField;

/// Generation-`t` dyadic cubes tiling `R_m = [-2^m, 2^m)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicScheme {
    pub m: i32,
    pub t: i32,
    pub n: usize,
}

impl DyadicScheme {
    pub fn new(m: i32, t: i32, n: usize) -> Result<Self> {
        if t > m {
            return Err(Error::SchemeMismatch(format!("inner generation {t} above outer generation {m}")));
        }
        if !(1..=2).contains(&n) {
            return Err(Error::SchemeMismatch(format!("dimension {n}")));
        }
        Ok(Self { m, t, n })
    }

    /// Cubes per axis, `2^{m+1-t}`.
    pub fn per_axis(&self) -> usize {
        1usize << (self.m + 1 - self.t)
    }

    /// `2^{(m+1-t)n}`.
    pub fn cube_count(&self) -> usize {
        self.per_axis().pow(self.n as u32)
    }

    pub fn outer_half_width(&self) -> f64 {
        2f64.powi(self.m)
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.t)
    }

    /// Resolves the scheme against a grid.
    pub fn layout<T: Scalar>(&self, grid: &Grid<T>) -> Result<DyadicLayout> {
        if grid.n() != self.n {
            return Err(Error::SchemeMismatch(format!("scheme for n = {}, grid has n = {}", self.n, grid.n())));
        }
        let outer = T::lit(self.outer_half_width());
        if outer > grid.half_width() {
            return Err(Error::SchemeMismatch(format!("R_m = [-{outer}, {outer}) leaves the box")));
        }
        let side = grid
            .cells_for_length(T::lit(self.side()))
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::SchemeMismatch(format!("cube side 2^{} is not a whole number of cells", self.t)))?;
        let offset = grid
            .cells_for_length(grid.half_width() - outer)
            .ok_or_else(|| Error::SchemeMismatch("R_m is not aligned with the cells".into()))?;
        let (side, offset) = (side as usize, offset as usize);
        let per_axis = self.per_axis();
        let mut cube_of = vec![None; grid.len()];
        let mut members = vec![Vec::with_capacity(side.pow(self.n as u32)); self.cube_count()];
        for (i, slot) in cube_of.iter_mut().enumerate() {
            let mi = grid.multi_index(i);
            let mut q = 0usize;
            let mut inside = true;
            for k in 0..self.n {
                if mi[k] < offset || mi[k] >= offset + per_axis * side {
                    inside = false;
                    break;
                }
                q = q * per_axis + (mi[k] - offset) / side;
            }
            if inside {
                *slot = Some(q);
                members[q].push(i);
            }
        }
        Ok(DyadicLayout { scheme: *self, cube_of, members })
    }
}

/// Cell-to-cube assignment of a scheme on a particular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicLayout {
    pub scheme: DyadicScheme,
    /// Cube index of every cell, `None` outside `R_m`.
    pub cube_of: Vec<Option<usize>>,
    /// Cells of every cube, in increasing flat order.
    pub members: Vec<Vec<usize>>,
}

/// Cube means of `f`: `N·d` complex numbers, cube-major.
pub fn dyadic_coefficients<T: Scalar>(f: &SampledVectorField<T>, layout: &DyadicLayout) -> Result<Vec<C<T>>> {
    if layout.cube_of.len() != f.grid().len() {
        return Err(Error::SchemeMismatch("layout built for another grid".into()));
    }
    let d = f.dim();
    let mut out = Vec::with_capacity(layout.members.len() * d);
    let mut buf = Vec::new();
    for cells in &layout.members {
        let count = T::from_count(cells.len());
        for j in 0..d {
            buf.clear();
            buf.extend(cells.iter().map(|&i| f.point(i)[j]));
            out.push(pairwise_sum_c(&buf) / count);
        }
    }
    Ok(out)
}

/// The piecewise-constant field with the given cube values, zero outside `R_m`.
pub fn from_dyadic_coefficients<T: Scalar>(grid: Grid<T>, dim: usize, layout: &DyadicLayout, coeffs: &[C<T>]) -> Result<SampledVectorField<T>> {
    if coeffs.len() != layout.members.len() * dim || layout.cube_of.len() != grid.len() {
        return Err(Error::SchemeMismatch("coefficient count does not match the scheme".into()));
    }
    let mut out = SampledVectorField::zeros(grid, dim);
    for (i, q) in layout.cube_of.iter().enumerate() {
        if let Some(q) = q {
            out.point_mut(i).copy_from_slice(&coeffs[q * dim..(q + 1) * dim]);
        }
    }
    Ok(out)
}

/// `Φ(f)`: cube means on `R_m`, zero outside.
pub fn dyadic_average<T: Scalar>(f: &SampledVectorField<T>, scheme: &DyadicScheme) -> Result<SampledVectorField<T>> {
    let layout = scheme.layout(f.grid())?;
    let coeffs = dyadic_coefficients(f, &layout)?;
    from_dyadic_coefficients(*f.grid(), f.dim(), &layout, &coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_halves_of_the_identity() {
        let g = Grid::<f64>::new(1, 1.0, 64).unwrap();
        let s = DyadicScheme::new(0, -1, 1).unwrap();
        assert_eq!(s.cube_count(), 4);
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(x[0], 0.0)).unwrap();
        // t = -1 on R_0 = [-1, 1): cubes of side 1/2
        let phi = dyadic_average(&f, &s).unwrap();
        for i in g.iter_indices() {
            let x = g.center(i)[0];
            let expect = (x * 2.0).floor() / 2.0 + 0.25;
            assert!((phi.point(i)[0].re - expect).abs() < 1e-15);
        }
        // m = 0, t = 0: the two unit cubes [-1, 0), [0, 1)
        let phi = dyadic_average(&f, &DyadicScheme::new(0, 0, 1).unwrap()).unwrap();
        for i in g.iter_indices() {
            let expect = if g.center(i)[0] < 0.0 { -0.5 } else { 0.5 };
            assert!((phi.point(i)[0].re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn constants_and_idempotence() {
        let g = Grid::<f64>::new(2, 4.0, 32).unwrap();
        let s = DyadicScheme::new(1, -1, 2).unwrap();
        let c = SampledVectorField::from_fn(g, 2, |_, v| {
            v[0] = C::new(0.3, -1.7);
            v[1] = C::new(2.5, 0.1);
        })
        .unwrap();
        let phi = dyadic_average(&c, &s).unwrap();
        for i in g.iter_indices() {
            let x = g.center(i);
            let inside = x[0].abs() < 2.0 && x[1].abs() < 2.0;
            assert_eq!(phi.point(i) == c.point(i), inside);
        }
        let f = SampledVectorField::from_fn(g, 2, |x, v| {
            v[0] = C::new(x[0].sin(), x[1]);
            v[1] = C::new((x[0] * x[1]).exp(), 0.0);
        })
        .unwrap();
        let once = dyadic_average(&f, &s).unwrap();
        assert_eq!(dyadic_average(&once, &s).unwrap(), once);
    }

    #[test]
    fn mismatched_schemes() {
        let g = Grid::<f64>::new(1, 1.0, 16).unwrap();
        assert!(DyadicScheme::new(1, 0, 1).unwrap().layout(&g).is_err());
        assert!(DyadicScheme::new(0, -5, 1).unwrap().layout(&g).is_err());
        assert!(DyadicScheme::new(0, 1, 1).is_err());
    }
}
