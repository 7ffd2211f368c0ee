//! Scalar-weight reference path for `d = 1`.
//!
//! Everything here is a direct loop over cells with a scalar weight `ω`:
//! no matrices, no eigenframes, no prefix sums, no parallelism. The
//! matrix-path quantities of a `1×1` weight must agree with these.

use serde::{Deserialize, Serialize};

use crate::compactness::{build_net_dyadic, tail_modulus, translation_modulus, twisted_modulus, DyadicOptions, FunctionFamily, Space};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::muckenhoupt::{ap_constant, scalar_ap_constant, CubeFamily};
use crate::scalar::{Scalar, C};
use crate::weights::{MatrixWeightField, MeasureDensity, ScalarWeightField};

/// `L^p(ω, μ)` for scalar-valued fields, evaluated cell by cell.
#[derive(Debug, Clone)]
pub struct ScalarReference<T> {
    grid: Grid<T>,
    omega: Vec<T>,
    /// `u(x)·h^n`.
    cell: Vec<T>,
    p: T,
}

impl<T: Scalar> ScalarReference<T> {
    pub fn new(omega: &ScalarWeightField<T>, p: T, mu: Option<&MeasureDensity<T>>) -> Result<Self> {
        let grid = *omega.grid();
        let vol = grid.cell_volume();
        let cell = match mu {
            Some(m) if m.grid() != &grid => return Err(Error::ShapeMismatch("measure lives on another grid".into())),
            Some(m) => m.values().iter().map(|&u| u * vol).collect(),
            None => vec![vol; grid.len()],
        };
        Ok(Self { grid, omega: omega.values().to_vec(), cell, p })
    }

    fn sum_where(&self, f: impl Fn(usize) -> C<T>, keep: impl Fn(usize) -> bool) -> T {
        let mut acc = T::zero();
        for i in 0..self.grid.len() {
            if keep(i) {
                acc += self.omega[i] * f(i).norm().powf(self.p) * self.cell[i];
            }
        }
        acc.powf(self.p.recip())
    }

    pub fn norm(&self, f: &[C<T>]) -> T {
        self.sum_where(|i| f[i], |_| true)
    }

    pub fn distance(&self, f: &[C<T>], g: &[C<T>]) -> T {
        self.sum_where(|i| f[i] - g[i], |_| true)
    }

    /// `‖f χ_{|x| ≥ R}‖`.
    pub fn tail(&self, f: &[C<T>], big_r: T) -> T {
        self.sum_where(|i| f[i], |i| self.grid.radius(i) >= big_r)
    }

    /// `max ‖f(· - s h) - f‖` over nonzero lattice shifts with `|s| h ≤ r`,
    /// `f` extended by zero.
    pub fn translation(&self, f: &[C<T>], r: T) -> T {
        let np = self.grid.points_per_axis() as isize;
        let two_d = self.grid.n() == 2;
        let lim = r / self.grid.h() * (T::one() + T::tol(1e-12));
        let k = lim.floor().to_isize().unwrap_or(0);
        let zero = C::new(T::zero(), T::zero());
        let mut best = T::zero();
        for a in -k..=k {
            for b in if two_d { -k..=k } else { 0..=0 } {
                if (a, b) == (0, 0) || T::from_count((a * a + b * b) as usize) > lim * lim {
                    continue;
                }
                let shifted = |i: usize| {
                    let mi = self.grid.multi_index(i);
                    let (x, y) = (mi[0] as isize - a, mi[1] as isize - b);
                    let there = if (0..np).contains(&x) && (0..np).contains(&y) { f[self.grid.flat_index([x as usize, y as usize])] } else { zero };
                    there - f[i]
                };
                best = best.max(self.sum_where(shifted, |_| true));
            }
        }
        best
    }

    /// `μ`-mean of `f` over the cells at offset `|s| < r/h` from `x`,
    /// clipped to the box.
    pub fn ball_mean(&self, f: &[C<T>], x: usize, r: T) -> C<T> {
        let np = self.grid.points_per_axis() as isize;
        let rr = r / self.grid.h();
        let k = rr.ceil().to_isize().unwrap_or(0);
        let mi = self.grid.multi_index(x);
        let mut acc = C::new(T::zero(), T::zero());
        let mut mass = T::zero();
        for a in -k..=k {
            for b in if self.grid.n() == 2 { -k..=k } else { 0..=0 } {
                if T::from_count((a * a + b * b) as usize) >= rr * rr {
                    continue;
                }
                let (i, j) = (mi[0] as isize + a, mi[1] as isize + b);
                if (0..np).contains(&i) && (0..np).contains(&j) {
                    let q = self.grid.flat_index([i as usize, j as usize]);
                    acc = acc + f[q] * self.cell[q];
                    mass += self.cell[q];
                }
            }
        }
        acc / mass
    }

    /// `‖(S_r f - f) χ_{|x| < R}‖`.
    pub fn averaging(&self, f: &[C<T>], r: T, region: T) -> T {
        let s: Vec<C<T>> = (0..self.grid.len()).map(|x| self.ball_mean(f, x, r)).collect();
        self.sum_where(|i| s[i] - f[i], |i| self.grid.radius(i) < region)
    }
}

/// One quantity computed both ways; `relative` is the worst discrepancy
/// and the values are the pair that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck<T> {
    pub quantity: String,
    pub matrix_path: T,
    pub scalar_path: T,
    pub relative: T,
}

fn rel<T: Scalar>(a: T, b: T) -> T {
    let d = (a - b).abs();
    if b.abs() > T::zero() {
        d / b.abs()
    } else {
        d
    }
}

fn worst<T: Scalar>(quantity: &str, pairs: impl IntoIterator<Item = (T, T)>) -> ReductionCheck<T> {
    let mut out = ReductionCheck { quantity: quantity.into(), matrix_path: T::zero(), scalar_path: T::zero(), relative: T::zero() };
    for (a, b) in pairs {
        let e = rel(a, b);
        if !(e <= out.relative) {
            out = ReductionCheck { quantity: quantity.into(), matrix_path: a, scalar_path: b, relative: e };
        }
    }
    out
}

/// Runs the matrix path on `W = ω` as a `1×1` field and compares norm, A_p
/// constant (`p > 1`), tail, translation, twisted and averaging moduli, and
/// the distances certified by a dyadic net with the fixed `scheme`.
pub fn compare_scalar_reduction<T: Scalar>(
    omega: &ScalarWeightField<T>,
    p: T,
    mu: Option<&MeasureDensity<T>>,
    family: &FunctionFamily<T>,
    scheme: (i32, i32),
) -> Result<Vec<ReductionCheck<T>>> {
    if family.dim() != 1 {
        return Err(Error::InvalidDimension(format!("the scalar path needs d = 1, got {}", family.dim())));
    }
    let grid = *omega.grid();
    let w = MatrixWeightField::from_scalar(omega)?;
    let mut space = Space::weighted(&w, p)?;
    if let Some(m) = mu {
        space = space.with_measure(m.clone())?;
    }
    let reference = ScalarReference::new(omega, p, mu)?;
    let fams: Vec<&[C<T>]> = family.members().iter().map(|f| f.values()).collect();
    let sup = |g: &dyn Fn(&[C<T>]) -> T| fams.iter().map(|f| g(f)).fold(T::zero(), |a, b| a.max(b));
    let mut out = Vec::new();

    let norms = family.members().iter().map(|f| Ok((space.norm(f)?, reference.norm(f.values())))).collect::<Result<Vec<_>>>()?;
    out.push(worst("norm", norms));

    if p > T::one() {
        let cubes = CubeFamily::default_for(&grid);
        out.push(worst("ap_constant", [(ap_constant(&w, p, &cubes)?, scalar_ap_constant(omega, p, &cubes)?)]));
    }

    let big_r = grid.half_width() / T::lit(2.0);
    out.push(worst("tail", [(tail_modulus(family, &space, big_r)?, sup(&|f| reference.tail(f, big_r)))]));

    let r = grid.h() * T::lit(4.0);
    let tr = sup(&|f| reference.translation(f, r));
    out.push(worst("translation", [(translation_modulus(family, &space, r)?, tr)]));
    if mu.is_none() {
        out.push(worst("twisted", [(twisted_modulus(family, &w, p, r)?, tr)]));
    }

    let region = grid.half_width() - r;
    let avg = crate::compactness::averaging_modulus_on(family, &space, r, region)?;
    out.push(worst("averaging", [(avg, sup(&|f| reference.averaging(f, r, region)))]));

    let big = sup(&|f| reference.norm(f)) * T::lit(10.0) + T::one();
    let net = build_net_dyadic(family, &space, big, &DyadicOptions { scheme: Some(scheme), ..DyadicOptions::default() })?;
    let pairs = family
        .members()
        .iter()
        .zip(&net.certificate.assignments)
        .map(|(f, a)| (a.distance, reference.distance(f.values(), net.centers[a.center].values())));
    out.push(worst("net_distance", pairs));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SampledVectorField;

    #[test]
    fn indicator_by_hand() {
        let g = Grid::<f64>::new(1, 2.0, 64).unwrap();
        let omega = ScalarWeightField::from_fn(g, |_| 4.0).unwrap();
        let r = ScalarReference::new(&omega, 2.0, None).unwrap();
        let f: Vec<C<f64>> = g.iter_indices().map(|i| C::new(if g.radius(i) < 1.0 { 1.0 } else { 0.0 }, 0.0)).collect();
        // ∫ 4·χ_{(-1,1)} = 8
        assert!((r.norm(&f) - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.tail(&f, 1.0), 0.0);
        // a unit shift of an interval of 64/2 cells moves 2 cells of mass h each
        let one = r.translation(&f, g.h());
        assert!((one - (4.0 * 2.0 * g.h()).sqrt()).abs() < 1e-12);
        // the mean of a constant is the constant
        let c = vec![C::new(2.0, -1.0); 64];
        assert!((r.ball_mean(&c, 0, 3.0 * g.h()) - C::new(2.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn matrix_path_agrees_on_a_small_case() {
        let g = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let omega = ScalarWeightField::from_fn(g, |x| x[0].abs().powf(0.4) * (0.3 * x[0]).sin().exp()).unwrap();
        let mu = MeasureDensity::from_fn(g, |x| 1.0 + 0.5 * x[0] * x[0]).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new((-x[0] * x[0]).exp(), 0.2 * x[0] * (-x[0] * x[0]).exp())).unwrap();
        let h = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(0.0, (-(x[0] - 1.0).powi(2)).exp())).unwrap();
        let fam = FunctionFamily::new(vec![f, h], "two").unwrap();
        for m in [None, Some(&mu)] {
            let checks = compare_scalar_reduction(&omega, 1.7, m, &fam, (2, -4)).unwrap();
            assert!(checks.len() >= 6);
            for c in &checks {
                assert!(c.relative < 1e-10, "{c:?}");
            }
        }
        assert!(compare_scalar_reduction(&omega, 1.7, None, &FunctionFamily::gaussian_bumps(g, 2, &Default::default()).unwrap(), (2, -4)).is_err());
    }
}
