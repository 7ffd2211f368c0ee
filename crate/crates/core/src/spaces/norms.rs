use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::CMatrix;
use crate::scalar::{euclid, Scalar, C};
use crate::weights::MatrixWeightField;

/// A norm on `C^d`.
pub trait Norm<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, v: &[C<T>]) -> T;
}

#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub dim: usize,
}

impl<T: Scalar> Norm<T> for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, v: &[C<T>]) -> T {
        euclid(v)
    }
}

/// `(Σ |v_i|^q)^{1/q}`, `q ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct LqNorm<T> {
    pub dim: usize,
    pub q: T,
}

impl<T: Scalar> Norm<T> for LqNorm<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, v: &[C<T>]) -> T {
        let m = v.iter().fold(T::zero(), |a, z| a.max(z.norm()));
        if m == T::zero() {
            return T::zero();
        }
        let s: T = v.iter().map(|z| (z.norm() / m).powf(self.q)).sum();
        m * s.powf(self.q.recip())
    }
}

/// `max_i |v_i|`.
#[derive(Debug, Clone, Copy)]
pub struct LinfNorm {
    pub dim: usize,
}

impl<T: Scalar> Norm<T> for LinfNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, v: &[C<T>]) -> T {
        v.iter().fold(T::zero(), |a, z| a.max(z.norm()))
    }
}

/// `ρ(v) = inner(A v)` for an invertible `A`; with `inner` Euclidean this is
/// `|A v|`.
#[derive(Clone)]
pub struct MatrixNorm<T: Scalar> {
    pub a: CMatrix<T>,
    pub inner: Arc<dyn Norm<T>>,
}

impl<T: Scalar> MatrixNorm<T> {
    pub fn euclidean(a: CMatrix<T>) -> Self {
        let dim = a.dim();
        Self { a, inner: Arc::new(Euclidean { dim }) }
    }
}

impl<T: Scalar> Norm<T> for MatrixNorm<T> {
    fn dim(&self) -> usize {
        self.a.dim()
    }

    fn eval(&self, v: &[C<T>]) -> T {
        self.inner.eval(&self.a.mul_vec(v))
    }
}

/// Any closure; the caller vouches for the norm axioms.
pub struct FnNorm<F> {
    pub dim: usize,
    pub f: F,
}

impl<T: Scalar, F: Fn(&[C<T>]) -> T + Send + Sync> Norm<T> for FnNorm<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, v: &[C<T>]) -> T {
        (self.f)(v)
    }
}

type PointOracle<T> = Arc<dyn Fn(usize, &[C<T>]) -> T + Send + Sync>;

#[derive(Clone)]
enum Kind<T: Scalar> {
    /// `ρ_x(v) = |M(x) v|`.
    Matrices(Arc<Vec<CMatrix<T>>>),
    Uniform(Arc<dyn Norm<T>>),
    Oracle(PointOracle<T>),
}

/// A family `{ρ_x}` of norms on `C^d`, one per grid point.
#[derive(Clone)]
pub struct NormFamily<T: Scalar> {
    grid: Grid<T>,
    dim: usize,
    kind: Kind<T>,
    label: String,
}

impl<T: Scalar> fmt::Debug for NormFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormFamily").field("dim", &self.dim).field("label", &self.label).finish()
    }
}

impl<T: Scalar> NormFamily<T> {
    /// `ρ_x(v) = |W^{1/p}(x) v|`.
    pub fn from_weight(w: &MatrixWeightField<T>, p: T) -> Result<Self> {
        if !(p > T::zero()) {
            return Err(Error::InvalidExponent(format!("p = {p}")));
        }
        let mats = w.power_field(p.recip())?;
        Ok(Self { grid: *w.grid(), dim: w.dim(), kind: Kind::Matrices(Arc::new(mats)), label: format!("|W^(1/{p}) v|") })
    }

    /// `ρ_x(v) = |W^{1/p(x)}(x) v|`.
    pub fn from_weight_exponent(w: &MatrixWeightField<T>, pf: &super::ExponentField<T>) -> Result<Self> {
        if pf.grid() != w.grid() {
            return Err(Error::ShapeMismatch("exponent and weight grids differ".into()));
        }
        let mats = w
            .decompositions()
            .iter()
            .zip(pf.values())
            .map(|(d, &p)| d.power(p.recip()).map(|m| m.into_matrix()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: *w.grid(), dim: w.dim(), kind: Kind::Matrices(Arc::new(mats)), label: "|W^(1/p(x)) v|".into() })
    }

    /// `ρ_x(v) = |M(x) v|` for an arbitrary matrix field.
    pub fn from_matrices(grid: Grid<T>, mats: Vec<CMatrix<T>>, label: impl Into<String>) -> Result<Self> {
        if mats.len() != grid.len() || mats.is_empty() {
            return Err(Error::ShapeMismatch("one matrix per grid point required".into()));
        }
        let dim = mats[0].dim();
        if mats.iter().any(|m| m.dim() != dim) {
            return Err(Error::ShapeMismatch("matrices of mixed dimension".into()));
        }
        Ok(Self { grid, dim, kind: Kind::Matrices(Arc::new(mats)), label: label.into() })
    }

    /// The same norm at every point.
    pub fn uniform(grid: Grid<T>, norm: Arc<dyn Norm<T>>, label: impl Into<String>) -> Self {
        Self { grid, dim: norm.dim(), kind: Kind::Uniform(norm), label: label.into() }
    }

    pub fn euclidean(grid: Grid<T>, dim: usize) -> Self {
        Self::uniform(grid, Arc::new(Euclidean { dim }), "euclidean")
    }

    /// An arbitrary `(point, v) ↦ ρ_x(v)`; use [`NormFamily::check_axioms`]
    /// before trusting it.
    pub fn oracle(grid: Grid<T>, dim: usize, f: impl Fn(usize, &[C<T>]) -> T + Send + Sync + 'static, label: impl Into<String>) -> Self {
        Self { grid, dim, kind: Kind::Oracle(Arc::new(f)), label: label.into() }
    }

    #[inline]
    pub fn eval(&self, i: usize, v: &[C<T>]) -> T {
        match &self.kind {
            Kind::Matrices(m) => m[i].apply_norm(v),
            Kind::Uniform(n) => n.eval(v),
            Kind::Oracle(f) => f(i, v),
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The matrix field behind a matrix-derived family.
    pub fn matrices(&self) -> Option<&[CMatrix<T>]> {
        match &self.kind {
            Kind::Matrices(m) => Some(m),
            _ => None,
        }
    }

    /// Samples the norm axioms at `points` grid points with `trials` random
    /// vector pairs each.
    pub fn check_axioms<R: Rng>(&self, rng: &mut R, points: usize, trials: usize) -> AxiomReport {
        let mut rep = AxiomReport::default();
        let zero = vec![C::new(T::zero(), T::zero()); self.dim];
        for _ in 0..points {
            let i = rng.random_range(0..self.grid.len());
            rep.max_zero = rep.max_zero.max(self.eval(i, &zero).as_f64().abs());
            for _ in 0..trials {
                let u = random_vector::<T, _>(rng, self.dim);
                let v = random_vector::<T, _>(rng, self.dim);
                let c = C::new(T::lit(rng.sample::<f64, _>(StandardNormal)), T::lit(rng.sample::<f64, _>(StandardNormal)));
                let (ru, rv) = (self.eval(i, &u).as_f64(), self.eval(i, &v).as_f64());
                let cu: Vec<C<T>> = u.iter().map(|&z| z * c).collect();
                let scale = (c.norm().as_f64() * ru).max(f64::MIN_POSITIVE);
                let homog = (self.eval(i, &cu).as_f64() - c.norm().as_f64() * ru).abs() / scale;
                rep.max_homogeneity = rep.max_homogeneity.max(homog);
                let sum: Vec<C<T>> = u.iter().zip(&v).map(|(&a, &b)| a + b).collect();
                let tri = (self.eval(i, &sum).as_f64() - ru - rv) / (ru + rv).max(f64::MIN_POSITIVE);
                rep.max_triangle = rep.max_triangle.max(tri);
                if !(ru > 0.0) || !(rv > 0.0) {
                    rep.definiteness_failures += 1;
                }
                rep.samples += 1;
            }
        }
        rep
    }
}

/// Worst residuals of a sampled norm-axiom check (relative).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AxiomReport {
    pub samples: usize,
    pub max_zero: f64,
    pub max_homogeneity: f64,
    pub max_triangle: f64,
    pub definiteness_failures: usize,
}

impl AxiomReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_zero == 0.0 && self.max_homogeneity <= tol && self.max_triangle <= tol && self.definiteness_failures == 0
    }
}

/// A standard complex Gaussian vector.
pub(crate) fn random_vector<T: Scalar, R: Rng>(rng: &mut R, dim: usize) -> Vec<C<T>> {
    (0..dim)
        .map(|_| C::new(T::lit(rng.sample::<f64, _>(StandardNormal)), T::lit(rng.sample::<f64, _>(StandardNormal))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lq_norms_by_hand() {
        let v = [C::new(3.0, 0.0), C::new(0.0, -4.0)];
        assert_eq!(LqNorm { dim: 2, q: 1.0 }.eval(&v), 7.0);
        assert!((LqNorm { dim: 2, q: 2.0f64 }.eval(&v) - 5.0).abs() < 1e-15);
        assert_eq!(LinfNorm { dim: 2 }.eval(&v), 4.0);
        assert_eq!(LqNorm { dim: 2, q: 3.0 }.eval(&[C::new(0.0, 0.0); 2]), 0.0);
    }

    #[test]
    fn weight_family_passes_axioms() {
        let g = Grid::<f64>::new(1, 1.0, 32).unwrap();
        let w = crate::weights::make_power_weight(g, &[0.5, -0.25], Some(crate::weights::Rotation::Plane { rate: 3.0 })).unwrap();
        let rho = NormFamily::from_weight(&w, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(rho.check_axioms(&mut rng, 16, 32).passes(1e-8));
    }

    #[test]
    fn broken_oracle_is_caught() {
        let g = Grid::<f64>::new(1, 1.0, 8).unwrap();
        let squared = NormFamily::oracle(g, 2, |_, v: &[C<f64>]| euclid(v).powi(2), "squared");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(!squared.check_axioms(&mut rng, 4, 16).passes(1e-8));
    }
}
