use rayon::prelude::*;

use super::{ExponentField, NormFamily, SampledVectorField};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Scalar, C};
use crate::weights::{MatrixWeightField, MeasureDensity};

/// Relative bisection tolerance of the Luxemburg norm.
pub const LUXEMBURG_TOL: f64 = 1e-8;
const LUXEMBURG_MAX_ITER: usize = 200;

pub(crate) fn integrate<T: Scalar>(grid: &Grid<T>, values: &[T], mu: Option<&MeasureDensity<T>>) -> T {
    match mu {
        None => grid.integrate(values),
        Some(m) => m.integrate(values),
    }
}

pub(crate) fn check_mu<T: Scalar>(grid: &Grid<T>, mu: Option<&MeasureDensity<T>>) -> Result<()> {
    match mu {
        Some(m) if m.grid() != grid => Err(Error::ShapeMismatch("measure lives on another grid".into())),
        _ => Ok(()),
    }
}

/// `ρ_x(f(x))` at every cell.
pub fn pointwise_norms<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>) -> Result<Vec<T>> {
    if f.grid() != rho.grid() || f.dim() != rho.dim() {
        return Err(Error::ShapeMismatch(format!("field of dimension {} against norm family of dimension {}", f.dim(), rho.dim())));
    }
    Ok((0..f.grid().len()).into_par_iter().map(|i| rho.eval(i, f.point(i))).collect())
}

/// `(∫ |W^{1/p}(x) f(x)|^p dx)^{1/p}`.
pub fn lp_w_norm<T: Scalar>(f: &SampledVectorField<T>, w: &MatrixWeightField<T>, p: T) -> Result<T> {
    lp_w_norm_mu(f, w, p, None)
}

pub fn lp_w_norm_mu<T: Scalar>(f: &SampledVectorField<T>, w: &MatrixWeightField<T>, p: T, mu: Option<&MeasureDensity<T>>) -> Result<T> {
    if f.grid() != w.grid() || f.dim() != w.dim() {
        return Err(Error::ShapeMismatch(format!("field of dimension {} against weight of dimension {}", f.dim(), w.dim())));
    }
    lp_rho_norm_mu(f, &NormFamily::from_weight(w, p)?, p, mu)
}

/// `(∫ ρ_x(f(x))^p dx)^{1/p}`.
pub fn lp_rho_norm<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, p: T) -> Result<T> {
    lp_rho_norm_mu(f, rho, p, None)
}

pub fn lp_rho_norm_mu<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, p: T, mu: Option<&MeasureDensity<T>>) -> Result<T> {
    if !(p > T::zero()) || !p.is_finite() {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    check_mu(f.grid(), mu)?;
    let r = pointwise_norms(f, rho)?;
    let powered: Vec<T> = r.iter().map(|&v| v.powf(p)).collect();
    Ok(integrate(f.grid(), &powered, mu).powf(p.recip()))
}

/// `∫ ρ_x(f(x))^{p(x)} dx`.
pub fn modular<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, pf: &ExponentField<T>) -> Result<T> {
    modular_mu(f, rho, pf, None)
}

pub fn modular_mu<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, pf: &ExponentField<T>, mu: Option<&MeasureDensity<T>>) -> Result<T> {
    if pf.grid() != f.grid() {
        return Err(Error::ShapeMismatch("exponent field lives on another grid".into()));
    }
    check_mu(f.grid(), mu)?;
    let r = pointwise_norms(f, rho)?;
    Ok(modular_from_pointwise(f.grid(), &r, pf, mu, T::one()))
}

/// `∫ (r(x)/λ)^{p(x)}` for precomputed pointwise norms `r`.
pub fn modular_from_pointwise<T: Scalar>(grid: &Grid<T>, r: &[T], pf: &ExponentField<T>, mu: Option<&MeasureDensity<T>>, lambda: T) -> T {
    let powered: Vec<T> = r.iter().zip(pf.values()).map(|(&v, &p)| (v / lambda).powf(p)).collect();
    integrate(grid, &powered, mu)
}

/// `inf{λ > 0 : ∫ (ρ_x(f)/λ)^{p(x)} ≤ 1}` by bisection.
pub fn luxemburg_norm<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, pf: &ExponentField<T>) -> Result<T> {
    luxemburg_norm_mu(f, rho, pf, None)
}

pub fn luxemburg_norm_mu<T: Scalar>(f: &SampledVectorField<T>, rho: &NormFamily<T>, pf: &ExponentField<T>, mu: Option<&MeasureDensity<T>>) -> Result<T> {
    if pf.grid() != f.grid() {
        return Err(Error::ShapeMismatch("exponent field lives on another grid".into()));
    }
    check_mu(f.grid(), mu)?;
    let r = pointwise_norms(f, rho)?;
    luxemburg_from_pointwise(f.grid(), &r, pf, mu)
}

/// Bisection on precomputed pointwise norms. Returns the upper end of the
/// final bracket, so the modular at the returned value is at most 1.
pub fn luxemburg_from_pointwise<T: Scalar>(grid: &Grid<T>, r: &[T], pf: &ExponentField<T>, mu: Option<&MeasureDensity<T>>) -> Result<T> {
    let m = |lambda: T| modular_from_pointwise(grid, r, pf, mu, lambda);
    let m1 = m(T::one());
    if !m1.is_finite() {
        return Err(Error::NonFinite);
    }
    if m1 == T::zero() {
        return Ok(T::zero());
    }
    let floor = T::lit(1e-12);
    let mut lo = m1.powf(pf.p_minus().recip()).max(floor);
    let mut hi = m1.powf(pf.p_plus().recip()) + T::one();
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let two = T::lit(2.0);
    // The nominal bracket is not always valid; widen it geometrically.
    for _ in 0..2000 {
        if m(hi) <= T::one() {
            break;
        }
        hi *= two;
    }
    for _ in 0..2000 {
        if m(lo) > T::one() || lo <= T::min_positive_value() {
            break;
        }
        lo /= two;
    }
    if !(m(hi) <= T::one()) {
        return Err(Error::NonFinite);
    }
    let tol = T::tol(LUXEMBURG_TOL);
    for _ in 0..LUXEMBURG_MAX_ITER {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = lo + (hi - lo) / two;
        if m(mid) <= T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Central differences in the interior, one-sided at the box faces.
/// A scalar field yields an `n`-component gradient; for `d > 1` the result
/// holds `∂_k f_j` at component `k·d + j`.
pub fn gradient<T: Scalar>(f: &SampledVectorField<T>) -> SampledVectorField<T> {
    let grid = *f.grid();
    let (n, d, np) = (grid.n(), f.dim(), grid.points_per_axis());
    let h = grid.h();
    let two_h = h + h;
    let mut out = vec![C::new(T::zero(), T::zero()); grid.len() * n * d];
    for i in 0..grid.len() {
        let mi = grid.multi_index(i);
        for k in 0..n {
            let step = |delta: isize| {
                let mut m = mi;
                m[k] = (m[k] as isize + delta) as usize;
                grid.flat_index(m)
            };
            let (a, b, den) = if mi[k] == 0 {
                (i, step(1), h)
            } else if mi[k] == np - 1 {
                (step(-1), i, h)
            } else {
                (step(-1), step(1), two_h)
            };
            for j in 0..d {
                out[i * n * d + k * d + j] = (f.point(b)[j] - f.point(a)[j]) / den;
            }
        }
    }
    SampledVectorField::new(grid, n * d, out).expect("finite differences of finite data")
}

/// `‖f‖_{L^p(v)} + ‖∇f‖_{L^p(W)}` with `v = ‖W‖_op`, for scalar `f` and a
/// weight acting on gradients (`d = n`).
pub fn degenerate_sobolev_norm<T: Scalar>(f: &SampledVectorField<T>, w: &MatrixWeightField<T>, p: T) -> Result<T> {
    if f.dim() != 1 {
        return Err(Error::ShapeMismatch(format!("scalar field expected, got dimension {}", f.dim())));
    }
    if w.dim() != f.grid().n() || w.grid() != f.grid() {
        return Err(Error::ShapeMismatch(format!("weight of dimension {} for gradients in {} variables", w.dim(), f.grid().n())));
    }
    if !(p >= T::one()) || !p.is_finite() {
        return Err(Error::InvalidExponent(format!("p = {p} must be at least 1")));
    }
    let v = w.op_norms();
    let powered: Vec<T> = (0..f.grid().len()).map(|i| f.point(i)[0].norm().powf(p) * v[i]).collect();
    let zeroth = f.grid().integrate(&powered).powf(p.recip());
    Ok(zeroth + lp_w_norm(&gradient(f), w, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::herm;
    use crate::spaces::Euclidean;
    use std::sync::Arc;

    fn line(l: f64, np: usize) -> Grid<f64> {
        Grid::new(1, l, np).unwrap()
    }

    #[test]
    fn lp_w_examples() {
        let g = line(1.0, 64);
        let w = MatrixWeightField::constant(g, herm(&[&[4.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(lp_w_norm(&SampledVectorField::zeros(g, 2), &w, 2.0).unwrap(), 0.0);
        let f = SampledVectorField::from_fn(g, 2, |_, v| v[0] = C::new(1.0, 0.0)).unwrap();
        assert!((lp_w_norm(&f, &w, 2.0).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-14);

        let g = line(2.0, 64);
        let one = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        let chi = SampledVectorField::from_fn(g, 1, |x, v| {
            if (0.0..1.0).contains(&x[0]) {
                v[0] = C::new(1.0, 0.0)
            }
        })
        .unwrap();
        assert!((lp_w_norm(&chi, &one, 2.0).unwrap() - 1.0).abs() <= g.h());
    }

    #[test]
    fn modular_by_hand() {
        let g = line(1.0, 64);
        let rho = NormFamily::euclidean(g, 1);
        let pf = ExponentField::from_fn(g, |x| if x[0] < 0.0 { 2.0 } else { 3.0 }).unwrap();
        let f = SampledVectorField::from_real(g, &[2.0; 64]).unwrap();
        assert_eq!(modular(&f, &rho, &pf).unwrap(), 12.0);
        assert_eq!(modular(&SampledVectorField::zeros(g, 1), &rho, &pf).unwrap(), 0.0);

        // root of 4/λ² + 8/λ³ = 1 by an independent Newton iteration
        let mut lam = 3.0f64;
        for _ in 0..50 {
            let g = 4.0 / (lam * lam) + 8.0 / lam.powi(3) - 1.0;
            let dg = -8.0 / lam.powi(3) - 24.0 / lam.powi(4);
            lam -= g / dg;
        }
        let norm = luxemburg_norm(&f, &rho, &pf).unwrap();
        assert!((2.0..=4.0).contains(&norm));
        assert!((norm - lam).abs() <= 1e-8 * lam);
    }

    #[test]
    fn constant_exponent_matches_lp() {
        let g = line(3.0, 128);
        let w = crate::weights::make_power_weight(g, &[0.3, -0.2], Some(crate::weights::Rotation::Plane { rate: 1.0 })).unwrap();
        let f = SampledVectorField::from_fn(g, 2, |x, v| {
            v[0] = C::new((-x[0] * x[0]).exp(), 0.5);
            v[1] = C::new(x[0].sin(), -x[0]);
        })
        .unwrap();
        for p in [1.0, 1.5, 2.0, 5.0] {
            let rho = NormFamily::from_weight(&w, p).unwrap();
            let pf = ExponentField::constant(g, p).unwrap();
            let lp = lp_rho_norm(&f, &rho, p).unwrap();
            assert!((modular(&f, &rho, &pf).unwrap() - lp.powf(p)).abs() <= 1e-12 * lp.powf(p));
            assert!((luxemburg_norm(&f, &rho, &pf).unwrap() - lp).abs() <= 2e-8 * lp);
            assert!((lp_w_norm(&f, &w, p).unwrap() - lp).abs() <= 1e-12 * lp);
        }
    }

    #[test]
    fn bracket_widening() {
        // p_- = 1, p_+ = 10 with a huge modular: the nominal bracket misses
        let g = line(1.0, 8);
        let rho = NormFamily::uniform(g, Arc::new(Euclidean { dim: 1 }), "abs");
        let pf = ExponentField::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 10.0 }).unwrap();
        let f = SampledVectorField::from_real(g, &[1e6, 1e6, 1e6, 1e6, 1e-3, 1e-3, 1e-3, 1e-3]).unwrap();
        let n = luxemburg_norm(&f, &rho, &pf).unwrap();
        let m = |l: f64| modular(&f.scale(1.0 / l), &rho, &pf).unwrap();
        assert!(m(n) <= 1.0 && m(n * (1.0 - 1e-7)) > 1.0);
    }

    #[test]
    fn sobolev_examples() {
        let g = line(1.0, 1024);
        let id = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        assert_eq!(degenerate_sobolev_norm(&SampledVectorField::zeros(g, 1), &id, 2.0).unwrap(), 0.0);
        let c = SampledVectorField::from_real(g, &vec![3.0; 1024]).unwrap();
        assert!((degenerate_sobolev_norm(&c, &id, 2.0).unwrap() - 3.0 * 2f64.sqrt()).abs() < 1e-13);
        let x = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(x[0], 0.0)).unwrap();
        let expect = (2.0f64 / 3.0).sqrt() + 2f64.sqrt();
        assert!((degenerate_sobolev_norm(&x, &id, 2.0).unwrap() - expect).abs() < 1e-5);
        let two = MatrixWeightField::constant_scalar(g, 2, 1.0).unwrap();
        assert!(degenerate_sobolev_norm(&x, &two, 2.0).is_err());
    }

    #[test]
    fn gradient_in_the_plane() {
        let g = Grid::<f64>::new(2, 1.0, 16).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(2.0 * x[0] - 3.0 * x[1], 0.0)).unwrap();
        let grad = gradient(&f);
        for i in g.iter_indices() {
            assert!((grad.point(i)[0].re - 2.0).abs() < 1e-12);
            assert!((grad.point(i)[1].re + 3.0).abs() < 1e-12);
        }
    }
}
