use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Scalar, C};
use crate::spaces::{check_mu, integrate, luxemburg_from_pointwise, ExponentField, NormFamily, SampledVectorField};
use crate::weights::{MatrixWeightField, MeasureDensity};

#[derive(Debug, Clone, PartialEq)]
pub enum Exponent<T> {
    Constant(T),
    Variable(ExponentField<T>),
}

/// The function space a family lives in: `L^p(ρ, μ)` or `L^{p(·)}(ρ, μ)`.
///
/// The size of a function is its norm for a constant exponent and its
/// modular for a variable one; distances are always (quasi-)norms of the
/// difference, the Luxemburg norm in the variable case.
#[derive(Debug, Clone)]
pub struct Space<T: Scalar> {
    rho: NormFamily<T>,
    exponent: Exponent<T>,
    mu: Option<MeasureDensity<T>>,
    weight: Option<MatrixWeightField<T>>,
}

impl<T: Scalar> Space<T> {
    pub fn new(rho: NormFamily<T>, exponent: Exponent<T>) -> Result<Self> {
        match &exponent {
            Exponent::Constant(p) if !(*p > T::zero()) || !p.is_finite() => {
                return Err(Error::InvalidExponent(format!("p = {p}")));
            }
            Exponent::Variable(pf) if pf.grid() != rho.grid() => {
                return Err(Error::ShapeMismatch("exponent field lives on another grid".into()));
            }
            _ => {}
        }
        Ok(Self { rho, exponent, mu: None, weight: None })
    }

    /// `L^p(W)` with `ρ_x = |W^{1/p}(x) ·|`.
    pub fn weighted(w: &MatrixWeightField<T>, p: T) -> Result<Self> {
        let mut s = Self::new(NormFamily::from_weight(w, p)?, Exponent::Constant(p))?;
        s.weight = Some(w.clone());
        Ok(s)
    }

    /// `L^{p(·)}(W)` with `ρ_x = |W^{1/p(x)}(x) ·|`.
    pub fn weighted_variable(w: &MatrixWeightField<T>, pf: &ExponentField<T>) -> Result<Self> {
        let mut s = Self::new(NormFamily::from_weight_exponent(w, pf)?, Exponent::Variable(pf.clone()))?;
        s.weight = Some(w.clone());
        Ok(s)
    }

    pub fn with_measure(mut self, mu: MeasureDensity<T>) -> Result<Self> {
        check_mu(self.rho.grid(), Some(&mu))?;
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid<T> {
        self.rho.grid()
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &NormFamily<T> {
        &self.rho
    }

    pub fn exponent(&self) -> &Exponent<T> {
        &self.exponent
    }

    pub fn measure(&self) -> Option<&MeasureDensity<T>> {
        self.mu.as_ref()
    }

    pub fn weight(&self) -> Option<&MatrixWeightField<T>> {
        self.weight.as_ref()
    }

    pub fn constant_p(&self) -> Option<T> {
        match &self.exponent {
            Exponent::Constant(p) => Some(*p),
            Exponent::Variable(pf) => pf.as_constant(),
        }
    }

    /// `"norm"` or `"modular"`, whichever [`Space::size`] reports.
    pub fn size_kind(&self) -> &'static str {
        match self.exponent {
            Exponent::Constant(_) => "norm",
            Exponent::Variable(_) => "modular",
        }
    }

    /// Below 1 the clustering metric is the `p`-th power of the quasi-norm.
    pub(crate) fn power_metric(&self) -> Option<T> {
        match self.exponent {
            Exponent::Constant(p) if p < T::one() => Some(p),
            _ => None,
        }
    }

    pub(crate) fn check_field(&self, f: &SampledVectorField<T>) -> Result<()> {
        if f.grid() != self.grid() || f.dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!("field of dimension {} against a space of dimension {}", f.dim(), self.dim())));
        }
        Ok(())
    }

    /// `ρ_x(v(x))` where `fill(x, buf)` writes `v(x)` into `buf`.
    pub(crate) fn pointwise_with(&self, fill: impl Fn(usize, &mut [C<T>]) + Sync) -> Vec<T> {
        let zero = C::new(T::zero(), T::zero());
        (0..self.grid().len())
            .into_par_iter()
            .map_init(
                || vec![zero; self.dim()],
                |buf, i| {
                    fill(i, buf);
                    self.rho.eval(i, buf)
                },
            )
            .collect()
    }

    pub fn pointwise(&self, f: &SampledVectorField<T>) -> Result<Vec<T>> {
        self.check_field(f)?;
        Ok(self.pointwise_with(|i, buf| buf.copy_from_slice(f.point(i))))
    }

    /// `ρ_x(f(x) - g(x))`.
    pub fn pointwise_diff(&self, f: &SampledVectorField<T>, g: &SampledVectorField<T>) -> Result<Vec<T>> {
        self.check_field(f)?;
        self.check_field(g)?;
        Ok(self.pointwise_with(|i, buf| {
            for ((b, &a), &c) in buf.iter_mut().zip(f.point(i)).zip(g.point(i)) {
                *b = a - c;
            }
        }))
    }

    fn integral(&self, values: &[T]) -> T {
        integrate(self.grid(), values, self.mu.as_ref())
    }

    /// Norm (constant exponent) or modular (variable exponent) from
    /// pointwise values.
    pub fn size_from_pointwise(&self, r: &[T]) -> T {
        match &self.exponent {
            Exponent::Constant(p) => {
                let powered: Vec<T> = r.iter().map(|&v| v.powf(*p)).collect();
                self.integral(&powered).powf(p.recip())
            }
            Exponent::Variable(pf) => {
                let powered: Vec<T> = r.iter().zip(pf.values()).map(|(&v, &p)| v.powf(p)).collect();
                self.integral(&powered)
            }
        }
    }

    /// (Quasi-)norm from pointwise values; Luxemburg for a variable exponent.
    pub fn norm_from_pointwise(&self, r: &[T]) -> Result<T> {
        match &self.exponent {
            Exponent::Constant(_) => Ok(self.size_from_pointwise(r)),
            Exponent::Variable(pf) => luxemburg_from_pointwise(self.grid(), r, pf, self.mu.as_ref()),
        }
    }

    pub fn size(&self, f: &SampledVectorField<T>) -> Result<T> {
        Ok(self.size_from_pointwise(&self.pointwise(f)?))
    }

    pub fn norm(&self, f: &SampledVectorField<T>) -> Result<T> {
        self.norm_from_pointwise(&self.pointwise(f)?)
    }

    /// `‖f - g‖`.
    pub fn distance(&self, f: &SampledVectorField<T>, g: &SampledVectorField<T>) -> Result<T> {
        self.norm_from_pointwise(&self.pointwise_diff(f, g)?)
    }

    /// The clustering metric: `‖f - g‖`, or `‖f - g‖^p` when `p < 1`.
    pub(crate) fn metric(&self, f: &SampledVectorField<T>, g: &SampledVectorField<T>) -> Result<T> {
        let d = self.distance(f, g)?;
        Ok(match self.power_metric() {
            Some(p) => d.powf(p),
            None => d,
        })
    }

    /// A radius in the clustering metric.
    pub(crate) fn metric_radius(&self, eps: T) -> T {
        match self.power_metric() {
            Some(p) => eps.powf(p),
            None => eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{lp_w_norm, luxemburg_norm};

    fn bump(g: Grid<f64>) -> SampledVectorField<f64> {
        SampledVectorField::from_fn(g, 2, |x, v| {
            v[0] = C::new((-x[0] * x[0]).exp(), 0.0);
            v[1] = C::new(0.0, x[0] * (-x[0] * x[0]).exp());
        })
        .unwrap()
    }

    #[test]
    fn sizes_match_the_integrals() {
        let g = Grid::<f64>::new(1, 3.0, 256).unwrap();
        let w = crate::weights::make_power_weight(g, &[0.5, -0.25], None).unwrap();
        let f = bump(g);
        let s = Space::weighted(&w, 2.0).unwrap();
        assert_eq!(s.size(&f).unwrap(), lp_w_norm(&f, &w, 2.0).unwrap());
        assert_eq!(s.size_kind(), "norm");
        let pf = ExponentField::from_fn(g, |x| 1.5 + 0.5 * x[0].abs().min(1.0)).unwrap();
        let v = Space::weighted_variable(&w, &pf).unwrap();
        let rho = NormFamily::from_weight_exponent(&w, &pf).unwrap();
        assert_eq!(v.norm(&f).unwrap(), luxemburg_norm(&f, &rho, &pf).unwrap());
        assert_eq!(v.size_kind(), "modular");
        assert_eq!(s.distance(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn power_metric_below_one() {
        let g = Grid::<f64>::new(1, 1.0, 64).unwrap();
        let w = MatrixWeightField::constant_scalar(g, 1, 1.0).unwrap();
        let s = Space::weighted(&w, 0.5).unwrap();
        let one = SampledVectorField::from_real(g, &[1.0; 64]).unwrap();
        let zero = SampledVectorField::zeros(g, 1);
        // ‖1‖_{1/2} on [-1, 1) is 2^2 = 4, its half power is 2
        assert!((s.distance(&one, &zero).unwrap() - 4.0).abs() < 1e-12);
        assert!((s.metric(&one, &zero).unwrap() - 2.0).abs() < 1e-12);
        assert!(Space::weighted(&w, 0.0).is_err());
    }
}
