use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Scalar, C};
use crate::spaces::SampledVectorField;
use crate::weights::MeasureDensity;

/// Open balls `B(x, r) = {y : |x - y| < r}` at cell centers, clipped to the
/// box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallScheme<T> {
    pub r: T,
}

impl<T: Scalar> BallScheme<T> {
    pub fn new(r: T) -> Self {
        Self { r }
    }

    /// `r ≥ 2h`, so every ball holds at least `3^n` cells.
    pub fn validate(&self, grid: &Grid<T>) -> Result<()> {
        let two_h = grid.h() * T::lit(2.0);
        if !(self.r >= two_h * (T::one() - T::tol(1e-12))) || !self.r.is_finite() {
            return Err(Error::InvalidBall(format!("radius {} below 2h = {}", self.r, two_h)));
        }
        Ok(())
    }

    /// Largest cell offset `k` with `k·h < r`.
    pub(crate) fn reach(&self, grid: &Grid<T>) -> usize {
        let rr = self.r / grid.h();
        let mut k = rr.floor().to_usize().unwrap_or(0);
        while k > 0 && T::from_count(k) >= rr {
            k -= 1;
        }
        k
    }

    /// Half-width (in cells) of the chord at row offset `dy`.
    pub(crate) fn chord(&self, grid: &Grid<T>, dy: usize) -> Option<usize> {
        let rr = self.r / grid.h();
        let rem = rr * rr - T::from_count(dy * dy);
        if !(rem > T::zero()) {
            return None;
        }
        let mut k = rem.sqrt().floor().to_usize().unwrap_or(0);
        while k > 0 && T::from_count(k * k + dy * dy) >= rr * rr {
            k -= 1;
        }
        while T::from_count((k + 1) * (k + 1) + dy * dy) < rr * rr {
            k += 1;
        }
        Some(k)
    }
}

/// Cells of `B(x, r)` clipped to the box, in increasing flat order.
pub fn ball_cells<T: Scalar>(grid: &Grid<T>, center: usize, scheme: &BallScheme<T>) -> Vec<usize> {
    let np = grid.points_per_axis();
    let c = grid.multi_index(center);
    let k = scheme.reach(grid);
    let range = |x: usize, w: usize| (x.saturating_sub(w), (x + w).min(np - 1));
    match grid.n() {
        1 => {
            let (a, b) = range(c[0], k);
            (a..=b).collect()
        }
        _ => {
            let mut out = Vec::new();
            let (a, b) = range(c[0], k);
            for i in a..=b {
                if let Some(w) = scheme.chord(grid, i.abs_diff(c[0])) {
                    let (lo, hi) = range(c[1], w);
                    out.extend((lo..=hi).map(|j| grid.flat_index([i, j])));
                }
            }
            out
        }
    }
}

/// `a + b` as a rounded sum and its exact rounding error.
#[inline]
fn two_sum<T: Scalar>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Running sum kept as a value and an accumulated rounding error, so
/// window differences of long prefixes do not lose precision.
#[derive(Clone, Copy)]
struct Compensated<T> {
    hi: T,
    lo: T,
}

impl<T: Scalar> Compensated<T> {
    fn zero() -> Self {
        Self { hi: T::zero(), lo: T::zero() }
    }

    fn plus(self, x: T) -> Self {
        let (hi, e) = two_sum(self.hi, x);
        Self { hi, lo: self.lo + e }
    }

    fn minus(self, other: Self) -> T {
        (self.hi - other.hi) + (self.lo - other.lo)
    }
}

/// Compensated prefix sums along the last axis, one row at a time.
struct RowPrefix<T> {
    np: usize,
    dim: usize,
    /// `(N+1)·d` entries per row, real and imaginary parts of `f·w`.
    re: Vec<Compensated<T>>,
    im: Vec<Compensated<T>>,
    /// `N+1` entries per row: running sums of `w`.
    w: Vec<Compensated<T>>,
}

impl<T: Scalar> RowPrefix<T> {
    fn new(f: &SampledVectorField<T>, weights: &[T]) -> Self {
        let grid = f.grid();
        let (np, dim) = (grid.points_per_axis(), f.dim());
        let rows = grid.len() / np;
        let mut re = vec![Compensated::zero(); rows * (np + 1) * dim];
        let mut im = re.clone();
        let mut w = vec![Compensated::zero(); rows * (np + 1)];
        for r in 0..rows {
            for j in 0..np {
                let i = r * np + j;
                let base = (r * (np + 1) + j) * dim;
                for c in 0..dim {
                    let z = f.point(i)[c] * weights[i];
                    re[base + dim + c] = re[base + c].plus(z.re);
                    im[base + dim + c] = im[base + c].plus(z.im);
                }
                w[r * (np + 1) + j + 1] = w[r * (np + 1) + j].plus(weights[i]);
            }
        }
        Self { np, dim, re, im, w }
    }

    /// Adds the row-`r` sums over columns `lo..=hi` into `acc`.
    fn add(&self, r: usize, lo: usize, hi: usize, acc: &mut [C<T>], mass: &mut T) {
        let row = r * (self.np + 1);
        for (c, a) in acc.iter_mut().enumerate() {
            let (b, e) = ((row + hi + 1) * self.dim + c, (row + lo) * self.dim + c);
            *a = *a + C::new(self.re[b].minus(self.re[e]), self.im[b].minus(self.im[e]));
        }
        *mass += self.w[row + hi + 1].minus(self.w[row + lo]);
    }
}

/// `S_r f(x) = μ[B(x,r)]^{-1} ∫_{B(x,r)} f dμ` at every cell.
pub fn ball_average<T: Scalar>(f: &SampledVectorField<T>, mu: &MeasureDensity<T>, scheme: &BallScheme<T>) -> Result<SampledVectorField<T>> {
    let grid = *f.grid();
    if mu.grid() != &grid {
        return Err(Error::ShapeMismatch("measure lives on another grid".into()));
    }
    scheme.validate(&grid)?;
    let prefix = RowPrefix::new(f, mu.cell_weights());
    let (np, dim) = (grid.points_per_axis(), f.dim());
    let k = scheme.reach(&grid);
    let chords: Vec<Option<usize>> = (0..=k).map(|dy| scheme.chord(&grid, dy)).collect();
    let zero = C::new(T::zero(), T::zero());
    let rows: Vec<Result<Vec<C<T>>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let c = grid.multi_index(i);
            let mut acc = vec![zero; dim];
            let mut mass = T::zero();
            match grid.n() {
                1 => prefix.add(0, c[0].saturating_sub(k), (c[0] + k).min(np - 1), &mut acc, &mut mass),
                _ => {
                    for r in c[0].saturating_sub(k)..=(c[0] + k).min(np - 1) {
                        if let Some(w) = chords[r.abs_diff(c[0])] {
                            prefix.add(r, c[1].saturating_sub(w), (c[1] + w).min(np - 1), &mut acc, &mut mass);
                        }
                    }
                }
            }
            if !(mass > T::zero()) {
                return Err(Error::EmptyBall { point: i });
            }
            Ok(acc.into_iter().map(|z| z / mass).collect())
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len() * dim);
    for r in rows {
        values.extend(r?);
    }
    SampledVectorField::new(grid, dim, values)
}

/// `μ[B(x, r) Δ B(y, r)]` by cell counting.
pub fn symdiff_measure<T: Scalar>(grid: &Grid<T>, x: usize, y: usize, r: T, mu: &MeasureDensity<T>) -> Result<T> {
    let scheme = BallScheme::new(r);
    scheme.validate(grid)?;
    let a = ball_cells(grid, x, &scheme);
    let b = ball_cells(grid, y, &scheme);
    // both lists are sorted
    let (mut i, mut j) = (0, 0);
    let mut cells = Vec::new();
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) if p == q => {
                i += 1;
                j += 1;
            }
            (Some(&p), Some(&q)) if p < q => {
                cells.push(p);
                i += 1;
            }
            (Some(_), Some(&q)) => {
                cells.push(q);
                j += 1;
            }
            (Some(&p), None) => {
                cells.push(p);
                i += 1;
            }
            (None, Some(&q)) => {
                cells.push(q);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Ok(mu.measure_of(cells))
}
