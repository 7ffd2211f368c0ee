//! Finite-family estimators of the matrix and scalar Muckenhoupt constants.
//!
//! For `p > 1` the matrix quantity on a cube `Q` is
//!
//! ```text
//! ⨍_Q ( ⨍_Q ‖W^{1/p}(x) W^{-1/p}(y)‖^{p'} dy )^{p/p'} dx
//! ```
//!
//! and for `0 < p ≤ 1` it is `max_{x∈Q} ⨍_Q ‖W^{1/p}(y) W^{-1/p}(x)‖^p dy`,
//! the essential supremum being a maximum over cell centers. The estimate is
//! the maximum over a finite [`CubeFamily`], so it is a lower bound for the
//! supremum over all cubes and never decreases when cubes are added.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::CMatrix;
use crate::scalar::{pairwise_sum, Scalar};
use crate::weights::{MatrixWeightField, ScalarWeightField};

/// An axis-aligned cube of whole grid cells: `side` cells per axis starting
/// at cell `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    pub lo: [usize; 2],
    pub side: usize,
}

impl Cube {
    /// Flat indices of the cells in the cube.
    pub fn cells<T: Scalar>(&self, grid: &Grid<T>) -> Vec<usize> {
        match grid.n() {
            1 => (self.lo[0]..self.lo[0] + self.side).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.side * self.side);
                for i in self.lo[0]..self.lo[0] + self.side {
                    for j in self.lo[1]..self.lo[1] + self.side {
                        out.push(grid.flat_index([i, j]));
                    }
                }
                out
            }
        }
    }

    /// Number of cells, `side^n`.
    pub fn len(&self, n: usize) -> usize {
        self.side.pow(n as u32)
    }

    /// Physical lower corner and side length.
    pub fn bounds<T: Scalar>(&self, grid: &Grid<T>) -> ([T; 2], T) {
        let h = grid.h();
        let l = grid.half_width();
        let corner = [-l + T::from_count(self.lo[0]) * h, -l + T::from_count(self.lo[1]) * h];
        (corner, T::from_count(self.side) * h)
    }
}

/// A finite, deduplicated family of cubes on a grid, with a description that
/// reports carry next to every estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFamily {
    cubes: Vec<Cube>,
    description: String,
}

impl CubeFamily {
    pub fn new(cubes: Vec<Cube>, description: impl Into<String>) -> Self {
        let mut cubes = cubes;
        cubes.sort();
        cubes.dedup();
        Self { cubes, description: description.into() }
    }

    /// Cubes of the dyadic subdivisions of the box, generations `gens`
    /// (generation `g` has side `2L/2^g`).
    pub fn dyadic<T: Scalar>(grid: &Grid<T>, gens: impl IntoIterator<Item = u32>) -> Result<Self> {
        let np = grid.points_per_axis();
        let mut cubes = Vec::new();
        let mut used = Vec::new();
        for g in gens {
            if g > grid.log2_points() {
                return Err(Error::InvalidCube(format!("generation {g} finer than the grid")));
            }
            used.push(g);
            let side = np >> g;
            let per_axis = 1usize << g;
            let count_y = if grid.n() == 2 { per_axis } else { 1 };
            for a in 0..per_axis {
                for b in 0..count_y {
                    cubes.push(Cube { lo: [a * side, b * side], side });
                }
            }
        }
        Ok(Self::new(cubes, format!("dyadic generations {used:?}")))
    }

    /// Cubes `[-s/2, s/2)^n` centered at the origin with side `s = 2L/2^g`,
    /// `g ∈ gens`, `1 ≤ g < log2 N`.
    pub fn origin_centered<T: Scalar>(grid: &Grid<T>, gens: impl IntoIterator<Item = u32>) -> Result<Self> {
        let np = grid.points_per_axis();
        let mut cubes = Vec::new();
        let mut used = Vec::new();
        for g in gens {
            if g == 0 || g >= grid.log2_points() {
                return Err(Error::InvalidCube(format!("origin-centered generation {g} outside 1..{}", grid.log2_points())));
            }
            used.push(g);
            let side = np >> g;
            let lo = np / 2 - side / 2;
            cubes.push(Cube { lo: [lo, if grid.n() == 2 { lo } else { 0 }], side });
        }
        Ok(Self::new(cubes, format!("origin-centered generations {used:?}")))
    }

    /// Every dyadic cube of generations `0..=log2 N` plus the origin-centered
    /// cubes of the same scales.
    pub fn default_for<T: Scalar>(grid: &Grid<T>) -> Self {
        let top = grid.log2_points();
        let d = Self::dyadic(grid, 0..=top).expect("generations in range");
        let o = Self::origin_centered(grid, 1..top).expect("generations in range");
        let mut f = d.union(&o);
        f.description = format!("dyadic generations 0..={top} plus origin-centered generations 1..{top}");
        f
    }

    /// Every cube of whole cells with side in `min_side..=max_side` at every
    /// position (one-dimensional grids only; `O(N^2)` cubes).
    pub fn dense_scan<T: Scalar>(grid: &Grid<T>, min_side: usize, max_side: usize) -> Result<Self> {
        if grid.n() != 1 {
            return Err(Error::Unsupported("dense cube scans are one-dimensional".into()));
        }
        let np = grid.points_per_axis();
        if min_side == 0 || min_side > max_side || max_side > np {
            return Err(Error::InvalidCube(format!("side range {min_side}..={max_side}")));
        }
        let mut cubes = Vec::new();
        for side in min_side..=max_side {
            for lo in 0..=np - side {
                cubes.push(Cube { lo: [lo, 0], side });
            }
        }
        Ok(Self::new(cubes, format!("dense scan, sides {min_side}..={max_side} cells")))
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut cubes = self.cubes.clone();
        cubes.extend_from_slice(&other.cubes);
        Self::new(cubes, format!("{} + {}", self.description, other.description))
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    fn validate<T: Scalar>(&self, grid: &Grid<T>) -> Result<()> {
        if self.cubes.is_empty() {
            return Err(Error::EmptyCubeFamily);
        }
        let np = grid.points_per_axis();
        for c in &self.cubes {
            let fits = |lo: usize| c.side > 0 && lo + c.side <= np;
            if !fits(c.lo[0]) || (grid.n() == 2 && !fits(c.lo[1])) || (grid.n() == 1 && c.lo[1] != 0) {
                return Err(Error::InvalidCube(format!("{c:?} does not fit the grid")));
            }
        }
        Ok(())
    }
}

/// A finite-family estimate together with the cube attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct ApEstimate<T> {
    pub value: T,
    pub argmax: Cube,
    pub cubes: usize,
    pub family: String,
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if p > T::zero() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!("p = {p} must be in (0, inf)")))
    }
}

/// Exact, order-insensitive max with first-cube tie-breaking.
fn best<T: Scalar>(values: Vec<(T, Cube)>, cubes: &CubeFamily) -> Result<ApEstimate<T>> {
    let mut best: Option<(T, Cube)> = None;
    for (v, c) in values {
        if v.is_nan() {
            return Err(Error::NonFinite);
        }
        match best {
            Some((b, _)) if !(v > b) => {}
            _ => best = Some((v, c)),
        }
    }
    let (value, argmax) = best.ok_or(Error::EmptyCubeFamily)?;
    Ok(ApEstimate { value, argmax, cubes: cubes.len(), family: cubes.description().to_string() })
}

/// Matrix `A_p` characteristic of `W` over `cubes`.
pub fn ap_constant<T: Scalar>(w: &MatrixWeightField<T>, p: T, cubes: &CubeFamily) -> Result<T> {
    ap_constant_detailed(w, p, cubes).map(|e| e.value)
}

pub fn ap_constant_detailed<T: Scalar>(w: &MatrixWeightField<T>, p: T, cubes: &CubeFamily) -> Result<ApEstimate<T>> {
    check_p(p)?;
    w.require_invertible()?;
    cubes.validate(w.grid())?;
    let inv_p = p.recip();
    let pos = w.power_field(inv_p)?;
    let neg = w.power_field(-inv_p)?;
    let grid = *w.grid();
    let values: Vec<(T, Cube)> = cubes
        .cubes()
        .par_iter()
        .map(|c| (matrix_cube_value(&grid, &pos, &neg, p, c), *c))
        .collect();
    best(values, cubes)
}

fn matrix_cube_value<T: Scalar>(grid: &Grid<T>, pos: &[CMatrix<T>], neg: &[CMatrix<T>], p: T, cube: &Cube) -> T {
    let cells = cube.cells(grid);
    let m = T::from_count(cells.len());
    let one = T::one();
    let per_x = |x: usize| -> T {
        if p > one {
            let pp = p / (p - one);
            let terms: Vec<T> = cells.iter().map(|&y| pos[x].matmul(&neg[y]).spectral_norm().powf(pp)).collect();
            (pairwise_sum(&terms) / m).powf(p / pp)
        } else {
            let terms: Vec<T> = cells.iter().map(|&y| pos[y].matmul(&neg[x]).spectral_norm().powf(p)).collect();
            pairwise_sum(&terms) / m
        }
    };
    let outer: Vec<T> = if cells.len() >= 256 {
        cells.par_iter().map(|&x| per_x(x)).collect()
    } else {
        cells.iter().map(|&x| per_x(x)).collect()
    };
    if p > one {
        pairwise_sum(&outer) / m
    } else {
        outer.into_iter().fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Classical Muckenhoupt characteristic of a scalar weight, evaluated in the
/// factorized form `⨍ω · (⨍ω^{-1/(p-1)})^{p-1}` (`p > 1`) or
/// `⨍ω · max ω^{-1}` (`p ≤ 1`).
pub fn scalar_ap_constant<T: Scalar>(omega: &ScalarWeightField<T>, p: T, cubes: &CubeFamily) -> Result<T> {
    scalar_ap_constant_detailed(omega, p, cubes).map(|e| e.value)
}

pub fn scalar_ap_constant_detailed<T: Scalar>(omega: &ScalarWeightField<T>, p: T, cubes: &CubeFamily) -> Result<ApEstimate<T>> {
    check_p(p)?;
    let grid = *omega.grid();
    cubes.validate(&grid)?;
    let w = omega.values();
    if w.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::NotInvertible);
    }
    let one = T::one();
    let values: Vec<(T, Cube)> = cubes
        .cubes()
        .par_iter()
        .map(|c| {
            let cells = c.cells(&grid);
            let m = T::from_count(cells.len());
            let vals: Vec<T> = cells.iter().map(|&i| w[i]).collect();
            let avg = pairwise_sum(&vals) / m;
            let v = if p > one {
                let e = -(p - one).recip();
                let dual: Vec<T> = vals.iter().map(|&v| v.powf(e)).collect();
                avg * (pairwise_sum(&dual) / m).powf(p - one)
            } else {
                let min = vals.iter().fold(T::infinity(), |a, &b| a.min(b));
                avg / min
            };
            (v, *c)
        })
        .collect();
    best(values, cubes)
}

/// Dense scan of every whole-cell interval of at least `min_side` cells on a
/// one-dimensional grid, for `p > 1`, using compensated prefix sums.
///
/// `O(N^2)` intervals at `O(1)` each; meant for weights with bounded dynamic
/// range on the scanned window (prefix differences lose relative accuracy
/// when a huge spike sits outside a tiny interval).
pub fn scalar_ap_dense_scan<T: Scalar>(omega: &ScalarWeightField<T>, p: T, min_side: usize) -> Result<ApEstimate<T>> {
    check_p(p)?;
    let grid = *omega.grid();
    if grid.n() != 1 {
        return Err(Error::Unsupported("dense cube scans are one-dimensional".into()));
    }
    let one = T::one();
    if !(p > one) {
        return Err(Error::InvalidExponent("dense scan needs p > 1".into()));
    }
    let w = omega.values();
    if w.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::NotInvertible);
    }
    let np = w.len();
    if min_side == 0 || min_side > np {
        return Err(Error::InvalidCube(format!("minimum side {min_side}")));
    }
    let e = -(p - one).recip();
    let prefix = |f: &dyn Fn(T) -> T| -> Vec<f64> {
        let mut out = Vec::with_capacity(np + 1);
        let (mut s, mut comp) = (0.0f64, 0.0f64);
        out.push(0.0);
        for &v in w {
            // Kahan–Babuška running sum
            let x = f(v).as_f64();
            let t = s + x;
            comp += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
            out.push(s + comp);
        }
        out
    };
    let pw = prefix(&|v| v);
    let pd = prefix(&|v| v.powf(e));
    let pm1 = (p - one).as_f64();
    let (value, lo, side) = (min_side..=np)
        .into_par_iter()
        .map(|side| {
            let mut best = (f64::NEG_INFINITY, 0usize, side);
            let m = side as f64;
            for lo in 0..=np - side {
                let a = (pw[lo + side] - pw[lo]) / m;
                let b = (pd[lo + side] - pd[lo]) / m;
                let v = a * b.powf(pm1);
                if v > best.0 {
                    best = (v, lo, side);
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && (b.2, b.1) < (a.2, a.1)) { b } else { a },
        );
    Ok(ApEstimate {
        value: T::lit(value),
        argmax: Cube { lo: [lo, 0], side },
        cubes: (min_side..=np).map(|s| np - s + 1).sum(),
        family: format!("dense scan, sides {min_side}..={np} cells"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::herm;
    use crate::weights::make_power_weight;

    #[test]
    fn constant_weights_give_one() {
        let g = Grid::<f64>::new(1, 1.0, 32).unwrap();
        let fam = CubeFamily::default_for(&g);
        let w = MatrixWeightField::constant_scalar(g, 2, 3.5).unwrap();
        for p in [0.5, 1.0, 2.0, 3.0] {
            assert!((ap_constant(&w, p, &fam).unwrap() - 1.0).abs() < 1e-12);
        }
        let w = MatrixWeightField::constant(g, herm(&[&[2.0, 0.5], &[0.5, 1.0]])).unwrap();
        assert!((ap_constant(&w, 2.0, &fam).unwrap() - 1.0).abs() < 1e-12);
        let one = ScalarWeightField::new(g, vec![1.0; 32]).unwrap();
        assert_eq!(scalar_ap_constant(&one, 2.0, &fam).unwrap(), 1.0);
    }

    #[test]
    fn default_family_shape() {
        let g = Grid::<f64>::new(1, 1.0, 16).unwrap();
        let fam = CubeFamily::default_for(&g);
        // dyadic 1 + 2 + 4 + 8 + 16, origin-centered sides 8, 4, 2 (none dyadic)
        assert_eq!(fam.len(), 31 + 3);
        let g2 = Grid::<f64>::new(2, 1.0, 8).unwrap();
        assert_eq!(CubeFamily::default_for(&g2).len(), 1 + 4 + 16 + 64 + 2);
    }

    #[test]
    fn monotone_in_family() {
        let g = Grid::<f64>::new(1, 1.0, 64).unwrap();
        let w = make_power_weight(g, &[0.5, -0.3], Some(crate::weights::Rotation::Plane { rate: 2.0 })).unwrap();
        let small = CubeFamily::dyadic(&g, 0..3).unwrap();
        let big = small.union(&CubeFamily::origin_centered(&g, 1..5).unwrap());
        let a = ap_constant(&w, 2.0, &small).unwrap();
        let b = ap_constant(&w, 2.0, &big).unwrap();
        assert!(b >= a);
    }

    #[test]
    fn scalar_and_matrix_paths_agree_in_one_dimension() {
        let g = Grid::<f64>::new(1, 1.0, 128).unwrap();
        let fam = CubeFamily::default_for(&g);
        let w = make_power_weight(g, &[0.5], None).unwrap();
        let s = ScalarWeightField::power_law(g, 0.5).unwrap();
        for p in [0.7, 1.0, 1.5, 2.0, 4.0] {
            let a = ap_constant(&w, p, &fam).unwrap();
            let b = scalar_ap_constant(&s, p, &fam).unwrap();
            assert!((a - b).abs() <= 1e-12 * b, "p = {p}: {a} vs {b}");
        }
    }

    #[test]
    fn scale_invariance() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let fam = CubeFamily::default_for(&g);
        let w = make_power_weight(g, &[0.4, -0.2], Some(crate::weights::Rotation::Plane { rate: 1.0 })).unwrap();
        let a = ap_constant(&w, 2.0, &fam).unwrap();
        let b = ap_constant(&w.scaled(17.0).unwrap(), 2.0, &fam).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn root_weight_dense_scan() {
        // Two independent evaluations of the same dense family: prefix sums
        // versus direct cube sums through the matrix path.
        let g = Grid::<f64>::new(1, 1.0, 128).unwrap();
        let s = ScalarWeightField::power_law(g, 0.5).unwrap();
        let fast = scalar_ap_dense_scan(&s, 2.0, 1).unwrap();
        let w = make_power_weight(g, &[0.5], None).unwrap();
        let slow = ap_constant_detailed(&w, 2.0, &CubeFamily::dense_scan(&g, 1, 128).unwrap()).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-12);

        // At high resolution the scan exceeds the origin-centered value 4/3
        // and stays below the continuum supremum 3/2.
        let g = Grid::<f64>::new(1, 1.0, 1 << 14).unwrap();
        let s = ScalarWeightField::power_law(g, 0.5).unwrap();
        let est = scalar_ap_dense_scan(&s, 2.0, 1).unwrap();
        assert!(est.value > 4.0 / 3.0 && est.value <= 1.5, "{}", est.value);
        assert!((est.value - 1.4921).abs() < 5e-4, "{}", est.value);
    }

    #[test]
    fn cubic_weight_blows_up() {
        let g = Grid::<f64>::new(1, 1.0, 256).unwrap();
        let w = ScalarWeightField::power_law(g, 3.0).unwrap();
        let mut last = 0.0;
        for top in 2..7 {
            let fam = CubeFamily::origin_centered(&g, 1..=top).unwrap();
            let v = scalar_ap_constant(&w, 2.0, &fam).unwrap();
            assert!(v >= last);
            last = v;
        }
        assert!(last > 100.0);
    }

    #[test]
    fn errors() {
        let g = Grid::<f64>::new(1, 1.0, 16).unwrap();
        let w = MatrixWeightField::constant(g, herm(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        let fam = CubeFamily::default_for(&g);
        assert!(matches!(ap_constant(&w, 2.0, &fam), Err(Error::NotInvertible)));
        let w = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        let empty = CubeFamily::new(vec![], "none");
        assert!(matches!(ap_constant(&w, 2.0, &empty), Err(Error::EmptyCubeFamily)));
    }
}
