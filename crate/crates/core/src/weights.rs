//! Sampled matrix weights, scalar weights and measure densities.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::{CMatrix, HermitianMatrix, SpectralDecomposition};
use crate::scalar::{Scalar, C};

/// A matrix weight `W(x)` sampled at cell centers.
///
/// Every value is PSD; the spectral decompositions (with PSD-clamped
/// eigenvalues) are computed once at construction and reused by all the
/// fractional-power consumers.
#[derive(Debug, Clone)]
pub struct MatrixWeightField<T> {
    grid: Grid<T>,
    dim: usize,
    values: Vec<HermitianMatrix<T>>,
    decomps: Vec<SpectralDecomposition<T>>,
    invertible: bool,
}

impl<T: Scalar> MatrixWeightField<T> {
    pub fn new(grid: Grid<T>, values: Vec<HermitianMatrix<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} matrices for {} grid points", values.len(), grid.len())));
        }
        let dim = values[0].dim();
        if values.iter().any(|m| m.dim() != dim) {
            return Err(Error::ShapeMismatch("matrices of mixed dimension".into()));
        }
        let decomps: Vec<SpectralDecomposition<T>> = values
            .par_iter()
            .map(|m| {
                let dec = m.spectral_decompose();
                let eigenvalues = dec.psd_eigenvalues()?;
                Ok(SpectralDecomposition { eigenvalues, vectors: dec.vectors })
            })
            .collect::<Result<_>>()?;
        let invertible = decomps.iter().all(|d| d.check_invertible().is_ok());
        let field = Self { grid, dim, values, decomps, invertible };
        let mass = field.grid.integrate(&field.op_norms());
        if !mass.is_finite() {
            return Err(Error::InvalidField("operator norm is not integrable on the grid".into()));
        }
        Ok(field)
    }

    /// `W(x) = g(x)` at every cell center.
    pub fn from_fn(grid: Grid<T>, g: impl Fn([T; 2]) -> HermitianMatrix<T> + Sync) -> Result<Self> {
        let values = (0..grid.len()).into_par_iter().map(|i| g(grid.center(i))).collect();
        Self::new(grid, values)
    }

    /// `W ≡ c·I`.
    pub fn constant_scalar(grid: Grid<T>, dim: usize, c: T) -> Result<Self> {
        Self::new(grid, vec![HermitianMatrix::scalar(dim, c); grid.len()])
    }

    pub fn constant(grid: Grid<T>, m: HermitianMatrix<T>) -> Result<Self> {
        Self::new(grid, vec![m; grid.len()])
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn values(&self) -> &[HermitianMatrix<T>] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &HermitianMatrix<T> {
        &self.values[i]
    }

    pub fn decomposition(&self, i: usize) -> &SpectralDecomposition<T> {
        &self.decomps[i]
    }

    pub fn decompositions(&self) -> &[SpectralDecomposition<T>] {
        &self.decomps
    }

    pub fn require_invertible(&self) -> Result<()> {
        if self.invertible {
            Ok(())
        } else {
            Err(Error::NotInvertible)
        }
    }

    /// `W^s(x)` pointwise; negative powers need an invertible field.
    pub fn power_field(&self, s: T) -> Result<Vec<CMatrix<T>>> {
        if s < T::zero() {
            self.require_invertible()?;
        }
        self.decomps.par_iter().map(|d| d.power(s).map(HermitianMatrix::into_matrix)).collect()
    }

    /// `‖W(x)‖_op` pointwise.
    pub fn op_norms(&self) -> Vec<T> {
        self.decomps.iter().map(|d| *d.eigenvalues.last().expect("non-empty")).collect()
    }

    /// Pointwise `λ_1(x) ≤ … ≤ λ_d(x)` as `d` scalar fields.
    pub fn eigen_fields(&self) -> Vec<ScalarWeightField<T>> {
        (0..self.dim)
            .map(|k| ScalarWeightField {
                grid: self.grid,
                values: self.decomps.iter().map(|d| d.eigenvalues[k]).collect(),
            })
            .collect()
    }

    /// `‖W(x)‖_op` as a scalar weight.
    pub fn op_norm_field(&self) -> ScalarWeightField<T> {
        ScalarWeightField { grid: self.grid, values: self.op_norms() }
    }

    /// `‖W^{-1}(x)‖_op^{-1} = λ_min(x)` as a scalar weight.
    pub fn inverse_norm_field(&self) -> Result<ScalarWeightField<T>> {
        self.require_invertible()?;
        Ok(ScalarWeightField { grid: self.grid, values: self.decomps.iter().map(|d| d.eigenvalues[0]).collect() })
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|m| m.scale(c)).collect())
    }

    /// A 1×1 field holding a scalar weight.
    pub fn from_scalar(w: &ScalarWeightField<T>) -> Result<Self> {
        Self::new(w.grid, w.values.iter().map(|&v| HermitianMatrix::scalar(1, v)).collect())
    }
}

/// A non-negative scalar weight sampled at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarWeightField<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarWeightField<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidField("scalar weight must be finite and non-negative".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, g: impl Fn([T; 2]) -> T) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| g(grid.center(i))).collect())
    }

    /// `|x|^α`.
    pub fn power_law(grid: Grid<T>, alpha: T) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| grid.radius(i).powf(alpha)).collect())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Density `u ≥ 0` of a measure `dμ = u·dx` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDensity<T> {
    grid: Grid<T>,
    values: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> MeasureDensity<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!("{} density values for {} grid points", values.len(), grid.len())));
        }
        if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidField("density must be finite and non-negative".into()));
        }
        let vol = grid.cell_volume();
        let weights: Vec<T> = values.iter().map(|&u| u * vol).collect();
        let total = grid.integrate(&values);
        if !(total > T::zero()) {
            return Err(Error::InvalidField("measure of the box must be positive".into()));
        }
        Ok(Self { grid, values, weights })
    }

    pub fn lebesgue(grid: Grid<T>) -> Self {
        Self::new(grid, vec![T::one(); grid.len()]).expect("Lebesgue density is valid")
    }

    pub fn from_fn(grid: Grid<T>, u: impl Fn([T; 2]) -> T) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| u(grid.center(i))).collect())
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Per-cell quadrature weights `u_i · h^n`.
    pub fn cell_weights(&self) -> &[T] {
        &self.weights
    }

    pub fn is_lebesgue(&self) -> bool {
        self.values.iter().all(|&u| u == T::one())
    }

    /// `μ(E)` for a set of cells.
    pub fn measure_of(&self, cells: impl IntoIterator<Item = usize>) -> T {
        let w: Vec<T> = cells.into_iter().map(|i| self.weights[i]).collect();
        crate::scalar::pairwise_sum(&w)
    }

    /// `∫ g dμ`.
    pub fn integrate(&self, g: &[T]) -> T {
        let w: Vec<T> = g.iter().zip(&self.weights).map(|(&a, &b)| a * b).collect();
        crate::scalar::pairwise_sum(&w)
    }
}

/// Smooth unitary rotation fields used by the scenario generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rotation<T> {
    /// Rotation by `θ(x) = rate·(x_1 + … + x_n)` in the plane of the first two
    /// coordinates of `C^d` (identity when `d = 1`).
    Plane { rate: T },
}

impl<T: Scalar> Rotation<T> {
    pub fn matrix(&self, dim: usize, x: [T; 2]) -> CMatrix<T> {
        match *self {
            Rotation::Plane { rate } => {
                let mut r = CMatrix::identity(dim);
                if dim >= 2 {
                    let theta = rate * (x[0] + x[1]);
                    let (s, c) = theta.sin_cos();
                    r[(0, 0)] = C::new(c, T::zero());
                    r[(0, 1)] = C::new(-s, T::zero());
                    r[(1, 0)] = C::new(s, T::zero());
                    r[(1, 1)] = C::new(c, T::zero());
                }
                r
            }
        }
    }
}

/// `W(x) = R(x) diag(|x|^{α_1}, …, |x|^{α_d}) R(x)^H` at cell centers.
///
/// Membership in `A_p` (roughly `|α_i| < n(p-1)`) is the caller's concern.
pub fn make_power_weight<T: Scalar>(grid: Grid<T>, alphas: &[T], rotation: Option<Rotation<T>>) -> Result<MatrixWeightField<T>> {
    let d = alphas.len();
    if d == 0 || d > crate::matrix::MAX_DIM {
        return Err(Error::InvalidDimension(format!("{d} exponents")));
    }
    MatrixWeightField::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let diag: Vec<T> = alphas.iter().map(|&a| r.powf(a)).collect();
        let base = HermitianMatrix::diagonal(&diag).expect("finite diagonal");
        match rotation {
            None => base,
            Some(rot) => base.conjugate_by(&rot.matrix(d, x)),
        }
    })
}
