use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{Scalar, C};
use crate::spaces::random_vector;
use crate::spaces::SampledVectorField;

/// A finite family of sampled fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFamily<T> {
    members: Vec<SampledVectorField<T>>,
    description: String,
}

impl<T: Scalar> FunctionFamily<T> {
    pub fn new(members: Vec<SampledVectorField<T>>, description: impl Into<String>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyFamily)?;
        for m in &members[1..] {
            first.check_same_shape(m)?;
        }
        Ok(Self { members, description: description.into() })
    }

    pub fn singleton(f: SampledVectorField<T>) -> Self {
        Self { members: vec![f], description: "singleton".into() }
    }

    /// Seeded Gaussian bumps `a·exp(-|x-c|²/(2σ²))·u` with `u` a random unit
    /// vector of `C^d`.
    pub fn gaussian_bumps(grid: Grid<T>, dim: usize, spec: &BumpSpec) -> Result<Self> {
        if spec.count == 0 {
            return Err(Error::EmptyFamily);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut members = Vec::with_capacity(spec.count);
        for _ in 0..spec.count {
            let mut center = [0.0; 2];
            for c in center.iter_mut().take(grid.n()) {
                *c = rng.random_range(spec.centers.0..=spec.centers.1);
            }
            let sigma = rng.random_range(spec.widths.0..=spec.widths.1);
            let amp = rng.random_range(spec.amplitudes.0..=spec.amplitudes.1);
            let u = random_vector::<f64, _>(&mut rng, dim);
            let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let dir: Vec<C<T>> = u.iter().map(|z| C::new(T::lit(z.re / norm), T::lit(z.im / norm))).collect();
            let center = center.map(T::lit);
            let (sigma, amp) = (T::lit(sigma), T::lit(amp));
            members.push(SampledVectorField::from_fn(grid, dim, |x, v| {
                let r2 = (0..grid.n()).map(|k| (x[k] - center[k]) * (x[k] - center[k])).fold(T::zero(), |a, b| a + b);
                let g = amp * (-r2 / (T::lit(2.0) * sigma * sigma)).exp();
                for (vk, dk) in v.iter_mut().zip(&dir) {
                    *vk = *dk * g;
                }
            })?);
        }
        Self::new(members, spec.describe())
    }

    pub fn members(&self) -> &[SampledVectorField<T>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> &Grid<T> {
        self.members[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Both families' members, `self` first.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        Self::new(members, format!("{} ∪ {}", self.description, other.description))
    }

    /// The members at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let members = indices.iter().map(|&i| self.members[i].clone()).collect();
        Self::new(members, format!("{} (subset of {})", self.description, indices.len()))
    }

    /// Applies `g` to every member.
    pub fn map(&self, g: impl Fn(&SampledVectorField<T>) -> Result<SampledVectorField<T>>) -> Result<Self> {
        let members = self.members.iter().map(g).collect::<Result<Vec<_>>>()?;
        Self::new(members, self.description.clone())
    }
}

/// Parameters of [`FunctionFamily::gaussian_bumps`]; ranges are inclusive.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BumpSpec {
    pub count: usize,
    pub centers: (f64, f64),
    pub widths: (f64, f64),
    pub amplitudes: (f64, f64),
    pub seed: u64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self { count: 40, centers: (-1.0, 1.0), widths: (0.5, 1.0), amplitudes: (0.5, 1.0), seed: 7 }
    }
}

impl BumpSpec {
    pub fn describe(&self) -> String {
        format!(
            "Gaussian bumps, centers in [{}, {}], widths in [{}, {}], amplitudes in [{}, {}], {} members, seed {}",
            self.centers.0, self.centers.1, self.widths.0, self.widths.1, self.amplitudes.0, self.amplitudes.1, self.count, self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bumps_are_seeded_and_shaped() {
        let g = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let spec = BumpSpec { count: 5, ..BumpSpec::default() };
        let a = FunctionFamily::gaussian_bumps(g, 2, &spec).unwrap();
        let b = FunctionFamily::gaussian_bumps(g, 2, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let c = FunctionFamily::gaussian_bumps(g, 2, &BumpSpec { seed: 8, ..spec.clone() }).unwrap();
        assert_ne!(a, c);
        for f in a.members() {
            let peak = g.iter_indices().map(|i| crate::scalar::euclid(f.point(i))).fold(0.0, f64::max);
            assert!((0.45..=1.0).contains(&peak), "{peak}");
        }
        assert!(a.description().contains("5 members"));
    }

    #[test]
    fn shapes_must_agree() {
        let g = Grid::<f64>::new(1, 1.0, 16).unwrap();
        let h = Grid::<f64>::new(1, 1.0, 32).unwrap();
        assert!(matches!(FunctionFamily::<f64>::new(vec![], "none"), Err(Error::EmptyFamily)));
        let mixed = vec![SampledVectorField::zeros(g, 1), SampledVectorField::zeros(h, 1)];
        assert!(FunctionFamily::new(mixed, "mixed").is_err());
        let dims = vec![SampledVectorField::zeros(g, 1), SampledVectorField::zeros(g, 2)];
        assert!(FunctionFamily::new(dims, "dims").is_err());
    }
}
