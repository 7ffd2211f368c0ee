use crate::error::{Error, Result};
use crate::scalar::{Scalar, C};
use crate::spaces::SampledVectorField;

/// `(τ_y f)(x) = f(x - y)` for a lattice vector `y`, zero-extended.
pub fn translate<T: Scalar>(f: &SampledVectorField<T>, y: &[T]) -> Result<SampledVectorField<T>> {
    let grid = f.grid();
    if y.len() != grid.n() {
        return Err(Error::ShapeMismatch(format!("shift of length {} on an {}-dimensional grid", y.len(), grid.n())));
    }
    let mut cells = [0isize; 2];
    for (k, &yk) in y.iter().enumerate() {
        cells[k] = grid.cells_for_length(yk).ok_or_else(|| Error::OffLattice(y.iter().map(|v| v.as_f64()).collect()))?;
    }
    Ok(translate_cells(f, cells))
}

/// Translation by a whole number of cells per axis.
pub fn translate_cells<T: Scalar>(f: &SampledVectorField<T>, shift: [isize; 2]) -> SampledVectorField<T> {
    let grid = *f.grid();
    let np = grid.points_per_axis() as isize;
    let mut out = SampledVectorField::zeros(grid, f.dim());
    if shift == [0, 0] {
        return f.clone();
    }
    let zero = C::new(T::zero(), T::zero());
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        let src = [mi[0] as isize - shift[0], mi[1] as isize - if grid.n() == 2 { shift[1] } else { 0 }];
        let inside = (0..grid.n()).all(|k| (0..np).contains(&src[k]));
        let target = out.point_mut(i);
        if inside {
            let j = grid.flat_index([src[0] as usize, src[1] as usize]);
            target.copy_from_slice(f.point(j));
        } else {
            target.fill(zero);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn indicator_moves_by_one_cell() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let h = g.h();
        let chi = |lo: f64, hi: f64| {
            SampledVectorField::from_fn(g, 2, move |x, v| {
                if x[0] >= lo && x[0] < hi {
                    v[0] = C::new(1.0, 0.0);
                }
            })
            .unwrap()
        };
        let moved = translate(&chi(0.0, 1.0), &[h]).unwrap();
        assert_eq!(moved, chi(h, 1.0 + h));
        assert_eq!(translate(&chi(0.0, 1.0), &[0.0]).unwrap(), chi(0.0, 1.0));
        assert!(matches!(translate(&chi(0.0, 1.0), &[0.3 * h]), Err(Error::OffLattice(_))));
    }

    #[test]
    fn round_trip_in_the_interior() {
        let g = Grid::<f64>::new(2, 1.0, 16).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| {
            if x[0].abs() < 0.5 && x[1].abs() < 0.5 {
                v[0] = C::new(x[0] + 2.0 * x[1], x[0] * x[1]);
            }
        })
        .unwrap();
        let back = translate_cells(&translate_cells(&f, [3, -2]), [-3, 2]);
        assert_eq!(back, f);
    }
}
