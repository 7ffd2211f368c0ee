//! Randomized property suites with worst-case residuals.
//!
//! Each suite draws its instances from a seeded generator, checks one
//! family of identities or inequalities, and reports the worst residual
//! against its tolerance. [`verify_lemmas`] runs them all.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::compactness::{scale_ladder, BumpSpec, FunctionFamily};
use crate::error::Result;
use crate::grid::Grid;
use crate::matrix::{mat_power, CMatrix, HermitianMatrix};
use crate::operators::{ball_average, BallScheme};
use crate::reference::compare_scalar_reduction;
use crate::scalar::{euclid, C};
use crate::spaces::{john_ellipsoid, lp_w_norm, luxemburg_norm, modular, sandwich_ratios, ExponentField, LinfNorm, LqNorm, MatrixNorm, Norm, NormFamily, SampledVectorField};
use crate::weights::{make_power_weight, MatrixWeightField, MeasureDensity, Rotation, ScalarWeightField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl SuiteOutcome {
    fn new(name: &str, residuals: &[f64], tolerance: f64, detail: String) -> Self {
        let failures = residuals.iter().filter(|r| !(**r <= tolerance)).count();
        let worst = residuals.iter().fold(0.0f64, |a, &b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
        Self { name: name.into(), instances: residuals.len(), failures, worst_residual: worst, tolerance, pass: failures == 0, detail }
    }

    fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Self { name: name.into(), instances: 0, failures: 1, worst_residual: f64::INFINITY, tolerance: 0.0, pass: false, detail: format!("error: {e}") }
    }
}

fn outcome(name: &str, r: Result<SuiteOutcome>) -> SuiteOutcome {
    r.unwrap_or_else(|e| SuiteOutcome::error(name, e))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix<f64> {
    CMatrix::from_fn(d, |_, _| C::new(gaussian(rng), gaussian(rng)))
}

/// Haar-ish unitary: eigenvectors of a random Hermitian matrix.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix<f64> {
    let a = random_matrix(rng, d);
    let h = HermitianMatrix::new(a.add(&a.adjoint()).scale(0.5)).expect("hermitian by construction");
    h.spectral_decompose().vectors
}

/// `‖A^s‖_op = max λ^s` on PSD matrices and `‖A^{-s}‖_op^{-1} = min λ^s` on
/// positive-definite ones, with the operator norm taken from the Gram
/// matrix rather than the spectral decomposition.
pub fn spectral_suite(seed: u64, count: usize) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let powers = [1.0 / 3.0, 0.5, 1.0, 2.0];
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let d = rng.random_range(1..=6);
        let s = powers[k % powers.len()];
        let singular = k % 5 == 4 && d > 1;
        let lams: Vec<f64> = (0..d).map(|i| if singular && i == 0 { 0.0 } else { 10f64.powf(rng.random_range(-3.0..1.0)) }).collect();
        let u = random_unitary(&mut rng, d);
        let a = u.matmul(&CMatrix::diagonal(&lams)).matmul(&u.adjoint());
        let Ok(a) = HermitianMatrix::new(a.add(&a.adjoint()).scale(0.5)) else {
            residuals.push(f64::INFINITY);
            continue;
        };
        let max_s = lams.iter().fold(0.0f64, |m, &l| m.max(l)).powf(s);
        let Ok(pos) = mat_power(&a, s) else {
            residuals.push(f64::INFINITY);
            continue;
        };
        let mut r = (pos.matrix().spectral_norm() - max_s).abs() / max_s;
        if !singular {
            let min_s = lams.iter().fold(f64::INFINITY, |m, &l| m.min(l)).powf(s);
            match mat_power(&a, -s) {
                Ok(neg) => r = r.max((neg.matrix().spectral_norm().recip() - min_s).abs() / min_s),
                Err(_) => r = f64::INFINITY,
            }
        }
        residuals.push(r);
    }
    SuiteOutcome::new("spectral identities", &residuals, 1e-10, format!("{count} matrices, d ≤ 6, s ∈ {{1/3, 1/2, 1, 2}}, every fifth singular when d > 1"))
}

fn fresh_vectors(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<C<f64>>> {
    (0..count).map(|_| (0..d).map(|_| C::new(gaussian(rng), gaussian(rng))).collect()).collect()
}

/// John fit on `ℓ^q` norms (`q ∈ {1, 1.5, 3, ∞}`) and `|A·|` norms in
/// `d ∈ {2, 3}`; residual is the worst violation of
/// `ρ ≤ |W·| ≤ √d·1.05·ρ` on 1000 fresh vectors.
pub fn john_suite(seed: u64, count: usize) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let d = 2 + k % 2;
        let rho: Arc<dyn Norm<f64>> = match k % 5 {
            0 => Arc::new(LqNorm { dim: d, q: 1.0 }),
            1 => Arc::new(LqNorm { dim: d, q: 1.5 }),
            2 => Arc::new(LqNorm { dim: d, q: 3.0 }),
            3 => Arc::new(LinfNorm { dim: d }),
            _ => {
                let a = random_matrix(&mut rng, d).add(&CMatrix::identity(d).scale(0.5));
                Arc::new(MatrixNorm::euclidean(a))
            }
        };
        let fit_seed = rng.random();
        let tests = fresh_vectors(&mut rng, d, 1000);
        match john_ellipsoid(rho.as_ref(), d, 200 * d, fit_seed) {
            Ok(fit) => {
                let (lo, hi) = sandwich_ratios(rho.as_ref(), &fit.w, &tests);
                residuals.push((1.0 - lo).max(hi / 1.05 - 1.0).max(0.0));
            }
            Err(_) => residuals.push(f64::INFINITY),
        }
    }
    SuiteOutcome::new("John sandwich", &residuals, 0.0, format!("{count} norms, d ∈ {{2, 3}}, 1000 fresh vectors each, δ_fit = 0.05"))
}

/// Clauses (a)–(d) relating the modular and the Luxemburg norm, on random
/// fields, norm families and smooth exponents. Every fourth instance tests
/// (d) at `λ = 1`.
pub fn modular_suite(seed: u64, count: usize) -> SuiteOutcome {
    outcome("modular and norm", modular_suite_inner(seed, count))
}

fn modular_suite_inner(seed: u64, count: usize) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid::new(1, 2.0, 64)?;
    let tol = 1e-8;
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let d = rng.random_range(1..=3);
        let scale = 10f64.powf(rng.random_range(-1.5..1.5));
        let mut f = SampledVectorField::from_fn(grid, d, |_, v| {
            for z in v.iter_mut() {
                *z = C::new(gaussian(&mut rng), gaussian(&mut rng)) * scale;
            }
        })?;
        let rho = if k % 2 == 0 {
            let (a0, a1) = (random_matrix(&mut rng, d).add(&CMatrix::identity(d)), random_matrix(&mut rng, d).scale(0.3));
            let mats = grid.iter_indices().map(|i| a0.add(&a1.scale(grid.center(i)[0]))).collect();
            NormFamily::from_matrices(grid, mats, "|A(x)·|")?
        } else {
            let q = rng.random_range(1.0..4.0);
            NormFamily::uniform(grid, Arc::new(LqNorm { dim: d, q }), format!("ℓ^{q}"))
        };
        let (p0, amp, freq) = (rng.random_range(1.0..3.0), rng.random_range(0.0..1.5), rng.random_range(0.5..3.0));
        let pf = ExponentField::from_fn(grid, |x| p0 + amp * (0.5 + 0.5 * (freq * x[0]).sin()))?;
        let (m, n) = (modular(&f, &rho, &pf)?, luxemburg_norm(&f, &rho, &pf)?);
        let mut r = 0.0f64;
        if n <= 1.0 {
            r = r.max(m - n);
        } else {
            r = r.max((n - m) / n - tol);
        }
        r = r.max(n - m - 1.0);
        // (d): shrink f until its modular is at most λ^{p_+}
        let lambda = if k % 4 == 3 { 1.0 } else { rng.random_range(0.0..1.0f64).max(1e-3) };
        let target = lambda.powf(pf.p_plus());
        if m > target {
            f = f.scale((target / m).powf(pf.p_minus().recip()));
        }
        let (m, n) = (modular(&f, &rho, &pf)?, luxemburg_norm(&f, &rho, &pf)?);
        if m <= target {
            r = r.max(n / lambda - 1.0 - tol);
        } else {
            r = f64::INFINITY;
        }
        residuals.push(r.max(0.0));
    }
    Ok(SuiteOutcome::new("modular and norm", &residuals, 0.0, format!("{count} instances, bisection tolerance {tol}, λ = 1 every fourth")))
}

/// The rotated power weight `α = (1/2, 1/3)`, `p = 2`, the `A_2` sample
/// used by the averaging-bound probe.
pub fn sample_a2_weight(grid: Grid<f64>) -> Result<MatrixWeightField<f64>> {
    make_power_weight(grid, &[0.5, 1.0 / 3.0], Some(Rotation::Plane { rate: 1.0 }))
}

/// `sup ‖S_r f‖/‖f‖` in `L^p(W)` over a family and the scale ladder.
pub fn averaging_bound(family: &FunctionFamily<f64>, w: &MatrixWeightField<f64>, p: f64) -> Result<f64> {
    let mu = MeasureDensity::lebesgue(*w.grid());
    let mut sup = 0.0f64;
    for r in scale_ladder(w.grid()) {
        for f in family.members() {
            let s = ball_average(f, &mu, &BallScheme::new(r))?;
            sup = sup.max(lp_w_norm(&s, w, p)? / lp_w_norm(f, w, p)?);
        }
    }
    Ok(sup)
}

/// Averaging bound for the `A_2` sample on `[-4, 4)` at `N` and `2N`;
/// residual is the relative change.
pub fn averaging_bound_suite(seed: u64, count: usize, np: usize) -> SuiteOutcome {
    outcome("averaging bound", averaging_bound_inner(seed, count, np))
}

fn averaging_bound_inner(seed: u64, count: usize, np: usize) -> Result<SuiteOutcome> {
    let spec = BumpSpec { count, centers: (-2.0, 2.0), widths: (0.05, 1.0), amplitudes: (0.5, 1.0), seed };
    let mut sups = Vec::new();
    for n in [np, 2 * np] {
        let grid = Grid::new(1, 4.0, n)?;
        let fam = FunctionFamily::gaussian_bumps(grid, 2, &spec)?;
        sups.push(averaging_bound(&fam, &sample_a2_weight(grid)?, 2.0)?);
    }
    let change = (sups[1] - sups[0]).abs() / sups[0];
    let residual = if sups.iter().all(|s| s.is_finite()) { change } else { f64::INFINITY };
    Ok(SuiteOutcome::new(
        "averaging bound",
        &[residual],
        0.1,
        format!("sup ‖S_r f‖/‖f‖ = {:.6} at N = {np}, {:.6} at N = {}; {count} bumps", sups[0], sups[1], 2 * np),
    ))
}

/// `max_{|x| < L/2} |S_r f(x) - f(x)|` must not grow as `r` halves from
/// `L/2` down to `4h`, and must end below 1% of `sup |f|`.
pub fn differentiation_suite(seed: u64, count: usize) -> SuiteOutcome {
    outcome("differentiation", differentiation_inner(seed, count))
}

fn differentiation_inner(seed: u64, count: usize) -> Result<SuiteOutcome> {
    let grid = Grid::new(1, 4.0, 1024)?;
    let spec = BumpSpec { count, centers: (-1.0, 1.0), widths: (0.3, 1.0), amplitudes: (0.5, 1.0), seed };
    let fam = FunctionFamily::gaussian_bumps(grid, 2, &spec)?;
    let mu = MeasureDensity::lebesgue(grid);
    let half = grid.half_width() / 2.0;
    let mut radii = Vec::new();
    let mut r = half;
    while r >= 4.0 * grid.h() * (1.0 - 1e-12) {
        radii.push(r);
        r /= 2.0;
    }
    let mut residuals = Vec::with_capacity(count);
    let mut last = 0.0f64;
    for f in fam.members() {
        let peak = grid.iter_indices().map(|i| euclid(f.point(i))).fold(0.0, f64::max);
        let mut errs = Vec::with_capacity(radii.len());
        for &r in &radii {
            let s = ball_average(f, &mu, &BallScheme::new(r))?;
            let e = grid
                .iter_indices()
                .filter(|&i| grid.radius(i) < half)
                .map(|i| {
                    let d: Vec<C<f64>> = s.point(i).iter().zip(f.point(i)).map(|(a, b)| a - b).collect();
                    euclid(&d)
                })
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let growth = errs.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        let fin = errs.last().copied().unwrap_or(0.0) / peak;
        last = last.max(fin);
        residuals.push(growth.max(if fin <= 1e-2 { 0.0 } else { fin }));
    }
    Ok(SuiteOutcome::new(
        "differentiation",
        &residuals,
        1e-12,
        format!("{count} bumps, r from L/2 to 4h, worst final |S_r f - f|/sup|f| = {last:.3e}"),
    ))
}

/// A random `d = 1` case for the scalar reduction: weight, exponent,
/// optional density, family and dyadic scheme.
pub struct ReductionCase {
    pub omega: ScalarWeightField<f64>,
    pub p: f64,
    pub mu: Option<MeasureDensity<f64>>,
    pub family: FunctionFamily<f64>,
    pub scheme: (i32, i32),
}

pub fn random_reduction_case(rng: &mut ChaCha8Rng) -> Result<ReductionCase> {
    let two_d = rng.random_bool(0.3);
    let grid: Grid<f64> = if two_d { Grid::new(2, 2.0, 32)? } else { Grid::new(1, 4.0, 256)? };
    let alpha: f64 = rng.random_range(-0.5..0.9);
    let (c, k): (f64, f64) = (rng.random_range(-0.5..0.5), rng.random_range(0.5..2.0));
    let omega = ScalarWeightField::from_fn(grid, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r.powf(alpha) * (c * (k * x[0]).sin()).exp()
    })?;
    let p = if rng.random_bool(0.2) { rng.random_range(0.5..1.0) } else { rng.random_range(1.2..3.0) };
    let mu = if rng.random_bool(0.5) { Some(MeasureDensity::from_fn(grid, |x| 1.0 + 0.5 * (x[0] * x[0] + x[1] * x[1]))?) } else { None };
    let spec = BumpSpec { count: 4, seed: rng.random(), ..BumpSpec::default() };
    let family = FunctionFamily::gaussian_bumps(grid, 1, &spec)?;
    let m = grid.half_width().log2().floor() as i32;
    let t = (4.0 * grid.h()).log2().round() as i32;
    Ok(ReductionCase { omega, p, mu, family, scheme: (m, t) })
}

/// Matrix path against the scalar reference on random `d = 1` cases.
pub fn scalar_reduction_suite(seed: u64, count: usize) -> SuiteOutcome {
    outcome("scalar reduction", scalar_reduction_inner(seed, count))
}

fn scalar_reduction_inner(seed: u64, count: usize) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(count);
    let mut worst = String::new();
    let mut worst_value = -1.0;
    for _ in 0..count {
        let case = random_reduction_case(&mut rng)?;
        let checks = compare_scalar_reduction(&case.omega, case.p, case.mu.as_ref(), &case.family, case.scheme)?;
        let r = checks.iter().map(|c| c.relative).fold(0.0f64, f64::max);
        if r > worst_value {
            worst_value = r;
            worst = checks.iter().max_by(|a, b| a.relative.total_cmp(&b.relative)).map(|c| c.quantity.clone()).unwrap_or_default();
        }
        residuals.push(r);
    }
    Ok(SuiteOutcome::new("scalar reduction", &residuals, 1e-10, format!("{count} cases, worst quantity: {worst}")))
}

/// Instance counts; a zero count skips its suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyCounts {
    pub spectral: usize,
    pub john: usize,
    pub modular: usize,
    pub averaging: usize,
    pub differentiation: usize,
    pub reduction: usize,
}

impl Default for VerifyCounts {
    fn default() -> Self {
        Self { spectral: 500, john: 50, modular: 100, averaging: 50, differentiation: 20, reduction: 20 }
    }
}

impl VerifyCounts {
    pub fn uniform(k: usize) -> Self {
        Self { spectral: k, john: k, modular: k, averaging: k, differentiation: k, reduction: k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub counts: VerifyCounts,
    pub suites: Vec<SuiteOutcome>,
    pub pass: bool,
}

/// Runs every suite with a nonzero count. Suite seeds are derived from
/// `seed`, so reports are reproducible.
pub fn verify_lemmas(seed: u64, counts: &VerifyCounts) -> VerifyReport {
    let sub = |k: u64| seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k);
    let mut suites = Vec::new();
    if counts.spectral > 0 {
        suites.push(spectral_suite(sub(1), counts.spectral));
    }
    if counts.john > 0 {
        suites.push(john_suite(sub(2), counts.john));
    }
    if counts.modular > 0 {
        suites.push(modular_suite(sub(3), counts.modular));
    }
    if counts.averaging > 0 {
        suites.push(averaging_bound_suite(sub(4), counts.averaging, 2048));
    }
    if counts.differentiation > 0 {
        suites.push(differentiation_suite(sub(5), counts.differentiation));
    }
    if counts.reduction > 0 {
        suites.push(scalar_reduction_suite(sub(6), counts.reduction));
    }
    let pass = suites.iter().all(|s| s.pass);
    VerifyReport { seed, counts: counts.clone(), suites, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_counts_give_an_empty_pass() {
        let r = verify_lemmas(1, &VerifyCounts::uniform(0));
        assert!(r.pass && r.suites.is_empty());
    }

    #[test]
    fn small_suites_pass() {
        assert!(spectral_suite(3, 40).pass);
        let j = john_suite(3, 5);
        assert!(j.pass, "{j:?}");
        let m = modular_suite(3, 12);
        assert!(m.pass, "{m:?}");
        let d = differentiation_suite(3, 3);
        assert!(d.pass, "{d:?}");
        let s = scalar_reduction_suite(3, 3);
        assert!(s.pass, "{s:?}");
    }

    #[test]
    fn outcome_counts_failures() {
        let o = SuiteOutcome::new("x", &[0.0, 2.0, f64::NAN], 1.0, String::new());
        assert_eq!((o.failures, o.pass), (2, false));
        assert_eq!(o.worst_residual, f64::INFINITY);
    }
}
