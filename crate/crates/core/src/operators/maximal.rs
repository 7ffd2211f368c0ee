use rayon::prelude::*;

use super::balls::{ball_average, BallScheme};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;
use crate::spaces::SampledVectorField;
use crate::weights::{MatrixWeightField, MeasureDensity, ScalarWeightField};

/// The finite ball family of the maximal operator: every grid-centered ball
/// with a radius from `radii`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFamily<T> {
    pub radii: Vec<T>,
}

impl<T: Scalar> BallFamily<T> {
    /// Radii `2h, 4h, …` up to `L`.
    pub fn dyadic(grid: &Grid<T>) -> Self {
        let mut radii = Vec::new();
        let mut r = grid.h() * T::lit(2.0);
        while r <= grid.half_width() {
            radii.push(r);
            r *= T::lit(2.0);
        }
        Self { radii }
    }
}

/// Per-row prefix sums of a scalar function on the grid.
fn row_prefix<T: Scalar>(grid: &Grid<T>, g: &[T]) -> Vec<T> {
    let np = grid.points_per_axis();
    let rows = grid.len() / np;
    let mut out = vec![T::zero(); rows * (np + 1)];
    for r in 0..rows {
        for j in 0..np {
            out[r * (np + 1) + j + 1] = out[r * (np + 1) + j] + g[r * np + j];
        }
    }
    out
}

/// Mean of `g` over the clipped ball around cell `z`, from row prefix sums.
fn ball_mean<T: Scalar>(grid: &Grid<T>, prefix: &[T], z: [usize; 2], k: usize, chords: &[Option<usize>]) -> T {
    let np = grid.points_per_axis();
    let span = |c: usize, w: usize| (c.saturating_sub(w), (c + w).min(np - 1));
    let (mut sum, mut count) = (T::zero(), 0usize);
    match grid.n() {
        1 => {
            let (a, b) = span(z[0], k);
            sum = prefix[b + 1] - prefix[a];
            count = b + 1 - a;
        }
        _ => {
            let (a, b) = span(z[0], k);
            for r in a..=b {
                if let Some(w) = chords[r.abs_diff(z[0])] {
                    let (lo, hi) = span(z[1], w);
                    sum += prefix[r * (np + 1) + hi + 1] - prefix[r * (np + 1) + lo];
                    count += hi + 1 - lo;
                }
            }
        }
    }
    sum / T::from_count(count)
}

/// `M_ω f(x) = max_{B ∋ x} |B|^{-1} ∫_B |W^{1/p}(x) W^{-1/p}(y) f(y)| dy`
/// over the grid-centered balls of `balls` (clipped to the box).
pub fn christ_goldberg_maximal<T: Scalar>(f: &SampledVectorField<T>, w: &MatrixWeightField<T>, p: T, balls: &BallFamily<T>) -> Result<ScalarWeightField<T>> {
    let grid = *f.grid();
    if w.grid() != &grid || w.dim() != f.dim() {
        return Err(Error::ShapeMismatch("field and weight disagree".into()));
    }
    if !(p > T::zero()) {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    w.require_invertible()?;
    let schemes: Vec<BallScheme<T>> = balls.radii.iter().map(|&r| BallScheme::new(r)).collect();
    for s in &schemes {
        s.validate(&grid)?;
    }
    let pos = w.power_field(p.recip())?;
    let pulled = f.apply_matrices(&w.power_field(-p.recip())?)?;
    let geometry: Vec<(usize, Vec<Option<usize>>)> = schemes
        .iter()
        .map(|s| {
            let k = s.reach(&grid);
            (k, (0..=k).map(|dy| s.chord(&grid, dy)).collect())
        })
        .collect();
    let np = grid.points_per_axis();
    let values: Vec<T> = (0..grid.len())
        .into_par_iter()
        .map(|x| {
            let g: Vec<T> = (0..grid.len()).map(|y| pos[x].apply_norm(pulled.point(y))).collect();
            let prefix = row_prefix(&grid, &g);
            let cx = grid.multi_index(x);
            let mut best = T::zero();
            for (k, chords) in &geometry {
                let k = *k;
                // centers z with |z - x| < r are exactly the cells of B(x, r)
                let (a, b) = (cx[0].saturating_sub(k), (cx[0] + k).min(np - 1));
                for zi in a..=b {
                    if grid.n() == 1 {
                        best = best.max(ball_mean(&grid, &prefix, [zi, 0], k, chords));
                    } else if let Some(wd) = chords[zi.abs_diff(cx[0])] {
                        for zj in cx[1].saturating_sub(wd)..=(cx[1] + wd).min(np - 1) {
                            best = best.max(ball_mean(&grid, &prefix, [zi, zj], k, chords));
                        }
                    }
                }
            }
            best
        })
        .collect();
    ScalarWeightField::new(grid, values)
}

/// `max_x |W^{1/p}(x) S_r f(x)| / M_ω(W^{1/p} f)(x)` with Lebesgue balls:
/// the measured constant of the pointwise domination behind the `S_r`
/// boundedness argument.
pub fn averaging_domination_ratio<T: Scalar>(f: &SampledVectorField<T>, w: &MatrixWeightField<T>, p: T, r: T, balls: &BallFamily<T>) -> Result<T> {
    let grid = *f.grid();
    let pos = w.power_field(p.recip())?;
    let s = ball_average(f, &MeasureDensity::lebesgue(grid), &BallScheme::new(r))?;
    let lifted = f.apply_matrices(&pos)?;
    let m = christ_goldberg_maximal(&lifted, w, p, balls)?;
    let mut ratio = T::zero();
    for x in 0..grid.len() {
        let num = pos[x].apply_norm(s.point(x));
        let den = m.values()[x];
        if den > T::zero() {
            ratio = ratio.max(num / den);
        } else if num > T::zero() {
            return Err(Error::NonFinite);
        }
    }
    Ok(ratio)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;
    use crate::weights::{make_power_weight, Rotation};

    #[test]
    fn indicator_peaks_inside_support() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let w = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        let chi = SampledVectorField::from_fn(g, 1, |x, v| {
            if (0.0..1.0).contains(&x[0]) {
                v[0] = C::new(1.0, 0.0)
            }
        })
        .unwrap();
        let m = christ_goldberg_maximal(&chi, &w, 2.0, &BallFamily::dyadic(&g)).unwrap();
        let at_half = g.iter_indices().find(|&i| (g.center(i)[0] - 0.5).abs() < g.h()).unwrap();
        assert_eq!(m.values()[at_half], 1.0);
        let zero = christ_goldberg_maximal(&SampledVectorField::zeros(g, 1), &w, 2.0, &BallFamily::dyadic(&g)).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unweighted_case_is_hardy_littlewood() {
        let g = Grid::<f64>::new(1, 1.0, 64).unwrap();
        let w = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new((5.0 * x[0]).sin(), x[0] * x[0] - 0.3)).unwrap();
        let fam = BallFamily::dyadic(&g);
        let m = christ_goldberg_maximal(&f, &w, 2.0, &fam).unwrap();
        // direct double loop: every center, every radius, every cell
        let abs: Vec<f64> = g.iter_indices().map(|i| f.point(i)[0].norm()).collect();
        for x in g.iter_indices() {
            let mut best = 0.0f64;
            for &r in &fam.radii {
                for z in g.iter_indices() {
                    if g.distance(x, z) >= r {
                        continue;
                    }
                    let cells: Vec<usize> = g.iter_indices().filter(|&y| g.distance(z, y) < r).collect();
                    let mean = cells.iter().map(|&y| abs[y]).sum::<f64>() / cells.len() as f64;
                    best = best.max(mean);
                }
            }
            assert!((m.values()[x] - best).abs() < 1e-13, "{x}: {} vs {best}", m.values()[x]);
        }
    }

    #[test]
    fn plane_hardy_littlewood() {
        let g = Grid::<f64>::new(2, 1.0, 16).unwrap();
        let w = MatrixWeightField::constant_scalar(g, 1, 2.0).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(x[0] - x[1] * x[1], 0.2)).unwrap();
        let fam = BallFamily::dyadic(&g);
        let m = christ_goldberg_maximal(&f, &w, 2.0, &fam).unwrap();
        let abs: Vec<f64> = g.iter_indices().map(|i| f.point(i)[0].norm()).collect();
        for x in [0usize, 37, 120, 255] {
            let mut best = 0.0f64;
            for &r in &fam.radii {
                for z in g.iter_indices().filter(|&z| g.distance(x, z) < r) {
                    let cells: Vec<usize> = g.iter_indices().filter(|&y| g.distance(z, y) < r).collect();
                    best = best.max(cells.iter().map(|&y| abs[y]).sum::<f64>() / cells.len() as f64);
                }
            }
            assert!((m.values()[x] - best).abs() < 1e-13);
        }
    }

    #[test]
    fn domination_constant_is_at_most_one_on_the_family() {
        let g = Grid::<f64>::new(1, 1.0, 64).unwrap();
        let w = make_power_weight(g, &[0.5, -0.3], Some(Rotation::Plane { rate: 2.0 })).unwrap();
        let f = SampledVectorField::from_fn(g, 2, |x, v| {
            v[0] = C::new((-4.0 * x[0] * x[0]).exp(), 0.0);
            v[1] = C::new(0.0, x[0]);
        })
        .unwrap();
        let fam = BallFamily::dyadic(&g);
        for &r in &fam.radii {
            let c = averaging_domination_ratio(&f, &w, 2.0, r, &fam).unwrap();
            assert!(c <= 1.0 + 1e-12, "r = {r}: {c}");
        }
    }
}
