//! John ellipsoid fitting for norms on `C^d`.
//!
//! The unit sphere of `ρ` is sampled, a minimum-volume enclosing ellipsoid
//! `{v : v^H X^{-1} v ≤ d}` is fitted by Frank–Wolfe iterations with away
//! steps (Khachiyan / Todd–Yıldırım), and the resulting quadratic form is
//! turned into `W = c·(X^{-1}/d)^{1/2}`. Points of the true sphere that stick
//! out of the fitted ellipsoid are hunted down by local search and added to
//! the sample before the final refit, and `c` is set by a second local search
//! so that `ρ(v) ≤ |Wv|` holds off the sample as well.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::norms::{random_vector, Norm};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, HermitianMatrix};
use crate::scalar::{Scalar, C};

/// Stopping tolerance on `max_i g_i/d - 1`.
pub const MVEE_GAP: f64 = 1e-7;
pub const MVEE_MAX_ITER: usize = 10_000;

const MAX_ROUNDS: usize = 12;
const REFRESH_EVERY: usize = 64;
const SCALE_SLACK: f64 = 1e-6;
const PROBES_PER_DIM: usize = 200;
const SWEEPS_PER_STEP: usize = 32;
/// Relative overshoot that sends a point back into the sample.
const AUGMENT_TOL: f64 = 1e-3;
/// Step floor of the augmentation climbs; they only have to clear `AUGMENT_TOL`.
const COARSE_FLOOR: f64 = 1e-4;

/// A fitted John matrix with the numbers that justify it.
#[derive(Debug, Clone)]
pub struct JohnFit<T: Scalar> {
    pub w: HermitianMatrix<T>,
    /// Rescaling applied to `(X^{-1}/d)^{1/2}`; at most `√d` for an exact fit.
    pub scale: T,
    /// Sample size after augmentation (symmetrized pairs counted twice).
    pub samples: usize,
    pub augmentation_rounds: usize,
    pub iterations: usize,
    /// Final `max_i g_i/d - 1`.
    pub gap: f64,
    /// Largest `|Wv| / (√d ρ(v))` seen on the sample and the local searches.
    pub upper_ratio: f64,
}

pub fn john_ellipsoid<T: Scalar>(rho: &dyn Norm<T>, d: usize, sphere_samples: usize, seed: u64) -> Result<JohnFit<T>> {
    if d == 0 || d > crate::matrix::MAX_DIM || rho.dim() != d {
        return Err(Error::InvalidDimension(format!("norm of dimension {} fitted in dimension {d}", rho.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<C<T>>> = Vec::with_capacity(2 * sphere_samples.max(d));
    for _ in 0..sphere_samples.max(d) {
        let v = normalize(rho, random_vector(&mut rng, d))?;
        points.push(v.iter().map(|&z| -z).collect());
        points.push(v);
    }

    let mut weights: Option<Vec<T>> = None;
    let mut iterations = 0;
    let mut rounds = 0;
    let (xinv, gap) = loop {
        let (xinv, u, gap, it) = mvee(&points, d, weights.take())?;
        iterations += it;
        let w0 = quadratic_to_root(&xinv, d)?;
        // Points of the sphere outside the fitted ellipsoid: maximize |W0 v|/ρ(v).
        let outward = |v: &[C<T>]| w0.apply_norm(v) / rho.eval(v);
        let starts = search_starts(&points, |v| outward(v), 2 * d + 2, &mut rng);
        let mut found = Vec::new();
        for s in &starts {
            let (val, v) = climb(s, &outward, COARSE_FLOOR, &mut rng);
            if val > T::one() + T::lit(AUGMENT_TOL) {
                found.push(normalize(rho, v)?);
            }
        }
        if found.is_empty() || rounds == MAX_ROUNDS {
            break (xinv, gap);
        }
        rounds += 1;
        let eta = T::from_count(found.len()) / T::from_count(points.len() + 2 * found.len());
        let mut u = u;
        for x in u.iter_mut() {
            *x *= T::one() - eta;
        }
        let share = eta / T::from_count(2 * found.len());
        for v in found {
            points.push(v.iter().map(|&z| -z).collect());
            points.push(v);
            u.push(share);
            u.push(share);
        }
        weights = Some(u);
    };

    let w0 = quadratic_to_root(&xinv, d)?;
    let inward = |v: &[C<T>]| rho.eval(v) / w0.apply_norm(v);
    let mut scale = points.iter().map(|v| inward(v)).fold(T::zero(), T::max);
    for s in search_starts(&points, |v| inward(v), 2 * d + 2, &mut rng) {
        scale = scale.max(climb(&s, &inward, fine_floor::<T>(), &mut rng).0);
    }
    scale *= T::one() + T::lit(SCALE_SLACK);

    let w = HermitianMatrix::new(w0.scale(scale))?;
    let sqrt_d = T::from_count(d).sqrt();
    let mut upper = T::zero();
    for v in &points {
        upper = upper.max(w.matrix().apply_norm(v) / (sqrt_d * rho.eval(v)));
    }
    let outward = |v: &[C<T>]| w.matrix().apply_norm(v) / (sqrt_d * rho.eval(v));
    for s in search_starts(&points, |v| outward(v), 2 * d + 2, &mut rng) {
        upper = upper.max(climb(&s, &outward, fine_floor::<T>(), &mut rng).0);
    }
    Ok(JohnFit { w, scale, samples: points.len(), augmentation_rounds: rounds, iterations, gap, upper_ratio: upper.as_f64() })
}

/// `min_v |Wv|/ρ(v)` and `max_v |Wv|/(√d ρ(v))` over `vectors`; the
/// sandwich `ρ ≤ |W·| ≤ √d(1+δ)ρ` holds on them iff the first is `≥ 1` and
/// the second is `≤ 1+δ`.
pub fn sandwich_ratios<T: Scalar>(rho: &dyn Norm<T>, w: &HermitianMatrix<T>, vectors: &[Vec<C<T>>]) -> (f64, f64) {
    let sqrt_d = (w.dim() as f64).sqrt();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in vectors {
        let r = w.matrix().apply_norm(v).as_f64() / rho.eval(v).as_f64();
        lo = lo.min(r);
        hi = hi.max(r / sqrt_d);
    }
    (lo, hi)
}

fn normalize<T: Scalar>(rho: &dyn Norm<T>, v: Vec<C<T>>) -> Result<Vec<C<T>>> {
    let r = rho.eval(&v);
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::DegenerateNorm(format!("norm value {r} at a nonzero vector")));
    }
    Ok(v.into_iter().map(|z| z / r).collect())
}

/// `(X^{-1}/d)^{1/2}`.
fn quadratic_to_root<T: Scalar>(xinv: &CMatrix<T>, d: usize) -> Result<CMatrix<T>> {
    let q = HermitianMatrix::new(xinv.scale(T::from_count(d).recip()))?;
    Ok(q.power(T::lit(0.5))?.into_matrix())
}

fn quad_form<T: Scalar>(m: &CMatrix<T>, v: &[C<T>], scratch: &mut [C<T>]) -> T {
    m.mul_vec_into(v, scratch);
    v.iter().zip(scratch.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

fn inverse<T: Scalar>(x: &CMatrix<T>) -> Result<CMatrix<T>> {
    let h = HermitianMatrix::new(x.clone())?;
    let dec = h.spectral_decompose();
    dec.check_invertible().map_err(|_| Error::DegenerateNorm("sphere sample is rank-deficient".into()))?;
    Ok(dec.power(-T::one())?.into_matrix())
}

fn moment<T: Scalar>(points: &[Vec<C<T>>], u: &[T], d: usize) -> CMatrix<T> {
    let mut acc = vec![C::new(T::zero(), T::zero()); d * d];
    for (v, &w) in points.iter().zip(u) {
        for i in 0..d {
            for j in 0..d {
                acc[i * d + j] = acc[i * d + j] + v[i] * v[j].conj() * w;
            }
        }
    }
    CMatrix::from_row_major(d, acc)
}

/// Returns `X^{-1}`, the weights, the final gap and the iteration count.
fn mvee<T: Scalar>(points: &[Vec<C<T>>], d: usize, warm: Option<Vec<T>>) -> Result<(CMatrix<T>, Vec<T>, f64, usize)> {
    let m = points.len();
    let mut u = warm.unwrap_or_else(|| vec![T::from_count(m).recip(); m]);
    let mut xinv = inverse(&moment(points, &u, d))?;
    let dd = T::from_count(d);
    let one = T::one();
    let tol = T::tol(MVEE_GAP);
    let mut scratch = vec![C::new(T::zero(), T::zero()); d];
    let mut g = vec![T::zero(); m];
    let mut gap = T::infinity();
    let mut it = 0;
    while it < MVEE_MAX_ITER {
        if it % REFRESH_EVERY == 0 {
            if it > 0 {
                xinv = inverse(&moment(points, &u, d))?;
            }
            for (gi, v) in g.iter_mut().zip(points) {
                *gi = quad_form(&xinv, v, &mut scratch);
            }
        }
        let (mut jp, mut jm) = (0, usize::MAX);
        for i in 0..m {
            if g[i] > g[jp] {
                jp = i;
            }
            if u[i] > T::zero() && (jm == usize::MAX || g[i] < g[jm]) {
                jm = i;
            }
        }
        let plus = g[jp] / dd - one;
        let minus = one - g[jm] / dd;
        gap = plus;
        if plus <= tol {
            break;
        }
        let (j, alpha) = if plus >= minus {
            (jp, (g[jp] - dd) / (dd * (g[jp] - one)))
        } else {
            let clip = -u[jm] / (one - u[jm]);
            let a = if g[jm] < one { clip } else { ((g[jm] - dd) / (dd * (g[jm] - one))).max(clip) };
            (jm, a)
        };
        for x in u.iter_mut() {
            *x *= one - alpha;
        }
        u[j] += alpha;
        if u[j] < T::zero() {
            u[j] = T::zero();
        }
        // Sherman–Morrison for (1-α)X + α v v^H, applied to X^{-1} and to every g_i.
        let beta = alpha / (one - alpha);
        let y = xinv.mul_vec(&points[j]);
        let c = beta / (one + beta * g[j]);
        let shrink = (one - alpha).recip();
        for (gi, v) in g.iter_mut().zip(points) {
            let t: C<T> = y.iter().zip(v).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
            *gi = (*gi - c * t.norm_sqr()) * shrink;
        }
        xinv = CMatrix::from_fn(d, |a, b| (xinv[(a, b)] - y[a] * y[b].conj() * c) * shrink);
        it += 1;
    }
    xinv = inverse(&moment(points, &u, d))?;
    Ok((xinv, u, gap.as_f64(), it))
}

/// Indices of the `k` sample points with the largest (or smallest) score.
fn extreme_indices<T: Scalar>(points: &[Vec<C<T>>], score: impl Fn(&[C<T>]) -> T, k: usize, largest: bool) -> Vec<usize> {
    let mut idx: Vec<(T, usize)> = points.iter().enumerate().map(|(i, v)| (score(v), i)).collect();
    idx.sort_by(|a, b| {
        let o = a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal);
        if largest { o.reverse() } else { o }.then(a.1.cmp(&b.1))
    });
    idx.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Hill climb of a scale-invariant objective: compass steps along the `2d`
/// real axes plus two random directions per sweep, step halved when no
/// candidate improves by more than rounding or after `SWEEPS_PER_STEP`
/// sweeps at one step size. Compass steps reach the kinks of polyhedral
/// norms, which isotropic steps almost never improve on.
fn climb<T: Scalar, R: Rng>(start: &[C<T>], obj: &impl Fn(&[C<T>]) -> T, floor: f64, rng: &mut R) -> (T, Vec<C<T>>) {
    let d = start.len();
    let mut v = start.to_vec();
    let mut best = obj(&v);
    let mut sigma = 0.3;
    let mut cand = v.clone();
    let margin = T::one() + T::epsilon() * T::lit(16.0);
    let mut sweeps = 0;
    while sigma > floor {
        let step = T::lit(sigma) * crate::scalar::euclid(&v) / T::lit((2.0 * d as f64).sqrt());
        let mut improved: Option<(T, Vec<C<T>>)> = None;
        let consider = |cand: &[C<T>], improved: &mut Option<(T, Vec<C<T>>)>| {
            let val = obj(cand);
            if val > improved.as_ref().map_or(best * margin, |b| b.0) {
                *improved = Some((val, cand.to_vec()));
            }
        };
        for k in 0..2 * d {
            for sign in [T::one(), -T::one()] {
                cand.copy_from_slice(&v);
                let delta = if k % 2 == 0 { C::new(step * sign, T::zero()) } else { C::new(T::zero(), step * sign) };
                cand[k / 2] = cand[k / 2] + delta;
                consider(&cand, &mut improved);
            }
        }
        for _ in 0..2 {
            for (c, &z) in cand.iter_mut().zip(&v) {
                *c = z + C::new(T::lit(rng.sample::<f64, _>(StandardNormal)), T::lit(rng.sample::<f64, _>(StandardNormal))) * step;
            }
            consider(&cand, &mut improved);
        }
        sweeps += 1;
        match improved {
            Some((val, next)) if sweeps < SWEEPS_PER_STEP => {
                best = val;
                let len = crate::scalar::euclid(&next);
                v = next.into_iter().map(|z| z / len).collect();
            }
            other => {
                if let Some((val, next)) = other {
                    best = val;
                    v = next;
                }
                sigma *= 0.5;
                sweeps = 0;
            }
        }
    }
    (best, v)
}

fn fine_floor<T: Scalar>() -> f64 {
    T::epsilon().as_f64().sqrt() * 1e-2
}

/// Starting points for the local searches: the `k` most extreme sample
/// points and the `k` most extreme of a fresh batch of random directions.
fn search_starts<T: Scalar, R: Rng>(points: &[Vec<C<T>>], score: impl Fn(&[C<T>]) -> T, k: usize, rng: &mut R) -> Vec<Vec<C<T>>> {
    let d = points[0].len();
    let probes: Vec<Vec<C<T>>> = (0..PROBES_PER_DIM * d).map(|_| random_vector(rng, d)).collect();
    let mut out: Vec<Vec<C<T>>> = extreme_indices(points, &score, k, true).into_iter().map(|i| points[i].clone()).collect();
    out.extend(extreme_indices(&probes, &score, k, true).into_iter().map(|i| probes[i].clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Euclidean, LinfNorm, LqNorm, MatrixNorm};

    fn fresh(d: usize, count: usize, seed: u64) -> Vec<Vec<C<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| random_vector(&mut rng, d)).collect()
    }

    #[test]
    fn euclidean_ball_fits_identity() {
        for d in 1..=3 {
            let fit = john_ellipsoid::<f64>(&Euclidean { dim: d }, d, 200 * d, 7).unwrap();
            let diff = fit.w.matrix().sub(&CMatrix::identity(d)).max_abs();
            assert!(diff < 1e-3, "d = {d}: {diff}");
        }
    }

    #[test]
    fn sup_norm_in_the_plane() {
        // W = I satisfies the sandwich by hand: max|v_i| ≤ |v| ≤ √2 max|v_i|.
        let rho = LinfNorm { dim: 2 };
        let tests = fresh(2, 1000, 11);
        let (lo, hi) = sandwich_ratios(&rho, &HermitianMatrix::identity(2), &tests);
        assert!(lo >= 1.0 && hi <= 1.0);
        let fit = john_ellipsoid::<f64>(&rho, 2, 400, 3).unwrap();
        let (lo, hi) = sandwich_ratios(&rho, &fit.w, &tests);
        assert!(lo >= 1.0 && hi <= 1.05, "{lo} {hi}");
        // symmetric body, so the fit is a multiple of the identity
        assert!(fit.w.matrix().sub(&CMatrix::identity(2)).max_abs() < 2e-2);
    }

    #[test]
    fn matrix_norms_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 3] {
            let a = CMatrix::from_fn(d, |_, _| C::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)));
            let rho = MatrixNorm::euclidean(a);
            let fit = john_ellipsoid::<f64>(&rho, d, 200 * d, 9).unwrap();
            let (lo, hi) = sandwich_ratios(&rho, &fit.w, &fresh(d, 1000, 13));
            assert!(lo >= 1.0 && hi <= 1.05, "{lo} {hi}");
            // an ellipsoidal body is its own John ellipsoid
            assert!(fit.scale < 1.01, "{}", fit.scale);
        }
    }

    #[test]
    fn polyhedral_norms() {
        for (q, d) in [(1.0, 2), (1.0, 3), (1.5, 3), (3.0, 2)] {
            let rho = LqNorm { dim: d, q };
            let fit = john_ellipsoid::<f64>(&rho, d, 200 * d, 21).unwrap();
            let (lo, hi) = sandwich_ratios(&rho, &fit.w, &fresh(d, 1000, 23));
            assert!(lo >= 1.0 && hi <= 1.05, "q = {q}, d = {d}: {lo} {hi}");
        }
    }

    #[test]
    fn degenerate_norm_is_rejected() {
        let rho = crate::spaces::FnNorm { dim: 2, f: |v: &[C<f64>]| v[0].norm() };
        assert!(matches!(john_ellipsoid::<f64>(&rho, 2, 100, 1), Err(Error::DegenerateNorm(_))));
    }
}
