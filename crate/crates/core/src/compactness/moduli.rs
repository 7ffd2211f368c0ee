use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Exponent, FunctionFamily, Space};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::{pow_nonneg, CMatrix};
use crate::operators::{ball_average, BallScheme};
use crate::scalar::{max_of, Scalar, C};
use crate::spaces::{NormFamily, SampledVectorField};
use crate::weights::{MatrixWeightField, MeasureDensity};

/// Tail radii `L/8, L/4, L/2, 3L/4`.
pub fn tail_ladder<T: Scalar>(grid: &Grid<T>) -> Vec<T> {
    let l = grid.half_width();
    [0.125, 0.25, 0.5, 0.75].iter().map(|&c| l * T::lit(c)).collect()
}

/// Dyadic scales `2h, 4h, …` up to `L/4`.
pub fn scale_ladder<T: Scalar>(grid: &Grid<T>) -> Vec<T> {
    let top = grid.half_width() / T::lit(4.0);
    let mut out = Vec::new();
    let mut r = grid.h() * T::lit(2.0);
    while r <= top * (T::one() + T::tol(1e-12)) {
        out.push(r);
        r *= T::lit(2.0);
    }
    out
}

pub(crate) fn check_family_shape<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>) -> Result<()> {
    space.check_field(&family.members()[0])
}

/// Maximum of `per_member` over the family, evaluated in parallel.
fn family_sup<T: Scalar>(family: &FunctionFamily<T>, per_member: impl Fn(&SampledVectorField<T>) -> Result<T> + Sync + Send) -> Result<T> {
    let values = family.members().par_iter().map(per_member).collect::<Result<Vec<T>>>()?;
    Ok(max_of(&values))
}

/// `sup_f ‖f‖`, or the sup of the modulars for a variable exponent.
pub fn boundedness_modulus<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>) -> Result<T> {
    check_family_shape(family, space)?;
    family_sup(family, |f| space.size(f))
}

fn outside<T: Scalar>(grid: &Grid<T>, radius: T) -> Vec<bool> {
    grid.iter_indices().map(|i| grid.radius(i) >= radius).collect()
}

pub(crate) fn masked_size<T: Scalar>(space: &Space<T>, f: &SampledVectorField<T>, keep: &[bool]) -> Result<T> {
    let mut r = space.pointwise(f)?;
    for (v, &k) in r.iter_mut().zip(keep) {
        if !k {
            *v = T::zero();
        }
    }
    Ok(space.size_from_pointwise(&r))
}

pub(crate) fn check_tail_radius<T: Scalar>(grid: &Grid<T>, radius: T) -> Result<()> {
    if !(radius >= T::zero()) || radius >= grid.half_width() {
        return Err(Error::RadiusExceedsBox { radius: radius.as_f64(), half_width: grid.half_width().as_f64() });
    }
    Ok(())
}

/// `sup_f ‖f·χ_{|x| ≥ R}‖` (or the modular).
pub fn tail_modulus<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, radius: T) -> Result<T> {
    check_family_shape(family, space)?;
    check_tail_radius(space.grid(), radius)?;
    let keep = outside(space.grid(), radius);
    family_sup(family, |f| masked_size(space, f, &keep))
}

/// Size of `τ_s f - f` for a shift of `s` cells, zero-extended.
pub(crate) fn shift_size<T: Scalar>(space: &Space<T>, f: &SampledVectorField<T>, s: [isize; 2]) -> T {
    let grid = space.grid();
    let np = grid.points_per_axis() as isize;
    let n = grid.n();
    let zero = crate::scalar::C::new(T::zero(), T::zero());
    let r = space.pointwise_with(|i, buf| {
        let mi = grid.multi_index(i);
        let src = [mi[0] as isize - s[0], mi[1] as isize - s[1]];
        let inside = (0..n).all(|k| (0..np).contains(&src[k]));
        let here = f.point(i);
        if inside {
            let there = f.point(grid.flat_index([src[0] as usize, src[1] as usize]));
            for ((b, &a), &c) in buf.iter_mut().zip(there).zip(here) {
                *b = a - c;
            }
        } else {
            for (b, &c) in buf.iter_mut().zip(here) {
                *b = zero - c;
            }
        }
    });
    space.size_from_pointwise(&r)
}

/// Nonzero lattice shifts with `|s|·h ≤ r`.
fn ball_shifts<T: Scalar>(grid: &Grid<T>, r: T) -> Vec<[isize; 2]> {
    let rr = r / grid.h() * (T::one() + T::tol(1e-12));
    let k = rr.floor().to_isize().unwrap_or(0);
    let mut out = Vec::new();
    let second = if grid.n() == 2 { k } else { 0 };
    for a in -k..=k {
        for b in -second..=second {
            if (a, b) != (0, 0) && T::from_count((a * a + b * b) as usize) <= rr * rr {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Family sup of the shifted sizes at every shift, in the order given.
fn shift_table<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, shifts: &[[isize; 2]]) -> Vec<T> {
    let m = family.len();
    let values: Vec<T> = (0..m * shifts.len())
        .into_par_iter()
        .map(|q| shift_size(space, &family.members()[q % m], shifts[q / m]))
        .collect();
    values.chunks(m).map(max_of).collect()
}

fn validate_shift_radius<T: Scalar>(grid: &Grid<T>, r: T) -> Result<()> {
    if !(r >= grid.h() * (T::one() - T::tol(1e-12))) || !r.is_finite() {
        return Err(Error::InvalidBall(format!("shift radius {r} below h = {}", grid.h())));
    }
    Ok(())
}

/// `sup_f max_{0 < |y| ≤ r} ‖τ_y f - f‖` over lattice shifts `y`.
pub fn translation_modulus<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, r: T) -> Result<T> {
    Ok(translation_curve(family, space, &[r])?[0].1)
}

/// [`translation_modulus`] at several radii, sharing the shift evaluations.
pub fn translation_curve<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, radii: &[T]) -> Result<Vec<(T, T)>> {
    check_family_shape(family, space)?;
    let grid = space.grid();
    for &r in radii {
        validate_shift_radius(grid, r)?;
    }
    let top = radii.iter().fold(T::zero(), |a, &b| a.max(b));
    let shifts = ball_shifts(grid, top);
    let table = shift_table(family, space, &shifts);
    Ok(radii
        .iter()
        .map(|&r| {
            let lim = r / grid.h() * (T::one() + T::tol(1e-12));
            let v = shifts
                .iter()
                .zip(&table)
                .filter(|(s, _)| T::from_count((s[0] * s[0] + s[1] * s[1]) as usize) <= lim * lim)
                .fold(T::zero(), |a, (_, &b)| a.max(b));
            (r, v)
        })
        .collect())
}

/// `max_{|s_i| ≤ k-1} ‖τ_s f - f‖` for every cube side `k` (in cells): the
/// shifts `x - y` with `x, y` in one cube.
pub(crate) fn cube_shift_curve<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, sides: &[usize]) -> Vec<T> {
    let top = sides.iter().copied().max().unwrap_or(1).saturating_sub(1) as isize;
    let second = if space.grid().n() == 2 { top } else { 0 };
    let mut shifts = Vec::new();
    for a in -top..=top {
        for b in -second..=second {
            if (a, b) != (0, 0) {
                shifts.push([a, b]);
            }
        }
    }
    let table = shift_table(family, space, &shifts);
    sides
        .iter()
        .map(|&k| {
            let lim = k.saturating_sub(1) as isize;
            shifts
                .iter()
                .zip(&table)
                .filter(|(s, _)| s[0].abs() <= lim && s[1].abs() <= lim)
                .fold(T::zero(), |a, (_, &b)| a.max(b))
        })
        .collect()
}

/// A family seen in the eigenframe of `W`: `f̃ = U^H f` in `L^p(D)`.
pub(crate) struct Twisted<T: Scalar> {
    pub family: FunctionFamily<T>,
    pub space: Space<T>,
    /// `U(x)` at every cell.
    pub frames: Vec<CMatrix<T>>,
}

/// Pointwise eigenframes of `W` continued across the grid: each frame's
/// columns are matched to the previous cell's by largest overlap and
/// phase-aligned to it, so that crossing eigenvalues and solver phases do
/// not make `U(x)` jump.
pub(crate) fn continuous_frames<T: Scalar>(w: &MatrixWeightField<T>) -> (Vec<CMatrix<T>>, Vec<Vec<T>>) {
    let grid = w.grid();
    let d = w.dim();
    let mut frames: Vec<CMatrix<T>> = Vec::with_capacity(grid.len());
    let mut values: Vec<Vec<T>> = Vec::with_capacity(grid.len());
    for i in grid.iter_indices() {
        let dec = w.decomposition(i);
        let mi = grid.multi_index(i);
        let reference = if mi[0] > 0 {
            Some(grid.flat_index([mi[0] - 1, mi[1]]))
        } else if mi[1] > 0 {
            Some(grid.flat_index([mi[0], mi[1] - 1]))
        } else {
            None
        };
        let Some(r) = reference else {
            frames.push(dec.vectors.clone());
            values.push(dec.eigenvalues.clone());
            continue;
        };
        let prev = &frames[r];
        let overlap = |j: usize, k: usize| (0..d).fold(C::new(T::zero(), T::zero()), |a, row| a + prev[(row, j)].conj() * dec.vectors[(row, k)]);
        let mut pairs: Vec<(T, usize, usize)> = (0..d).flat_map(|j| (0..d).map(move |k| (j, k))).map(|(j, k)| (overlap(j, k).norm(), j, k)).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut source = vec![usize::MAX; d];
        let mut used = vec![false; d];
        for (_, j, k) in pairs {
            if source[j] == usize::MAX && !used[k] {
                source[j] = k;
                used[k] = true;
            }
        }
        let mut u = CMatrix::zeros(d);
        let mut ev = vec![T::zero(); d];
        for (j, &k) in source.iter().enumerate() {
            let o = overlap(j, k);
            let phase = if o.norm() > T::zero() { o.conj() / o.norm() } else { C::new(T::one(), T::zero()) };
            for row in 0..d {
                u[(row, j)] = dec.vectors[(row, k)] * phase;
            }
            ev[j] = dec.eigenvalues[k];
        }
        frames.push(u);
        values.push(ev);
    }
    (frames, values)
}

pub(crate) fn twist<T: Scalar>(family: &FunctionFamily<T>, w: &MatrixWeightField<T>, p: T, mu: Option<&MeasureDensity<T>>) -> Result<Twisted<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    let grid = *w.grid();
    if family.grid() != &grid || family.dim() != w.dim() {
        return Err(Error::ShapeMismatch("family and weight disagree".into()));
    }
    let (frames, eigenvalues) = continuous_frames(w);
    let adjoints: Vec<CMatrix<T>> = frames.iter().map(|u| u.adjoint()).collect();
    let diag: Vec<CMatrix<T>> = eigenvalues
        .iter()
        .map(|ev| {
            let l: Vec<T> = ev.iter().map(|&l| pow_nonneg(l, p.recip())).collect();
            CMatrix::diagonal(&l)
        })
        .collect();
    let rho = NormFamily::from_matrices(grid, diag, format!("|D^(1/{p}) v|"))?;
    let mut space = Space::new(rho, Exponent::Constant(p))?;
    if let Some(m) = mu {
        space = space.with_measure(m.clone())?;
    }
    let family = family.map(|f| f.apply_matrices(&adjoints))?;
    Ok(Twisted { family, space, frames })
}

/// `sup_f max_{0 < |y| ≤ r} ‖τ_y f̃ - f̃‖_{L^p(D)}` with `f̃ = U^H f` and
/// `W = U D U^H` pointwise.
pub fn twisted_modulus<T: Scalar>(family: &FunctionFamily<T>, w: &MatrixWeightField<T>, p: T, r: T) -> Result<T> {
    Ok(twisted_curve(family, w, p, &[r])?[0].1)
}

pub fn twisted_curve<T: Scalar>(family: &FunctionFamily<T>, w: &MatrixWeightField<T>, p: T, radii: &[T]) -> Result<Vec<(T, T)>> {
    let t = twist(family, w, p, None)?;
    translation_curve(&t.family, &t.space, radii)
}

fn lebesgue_or<T: Scalar>(space: &Space<T>) -> MeasureDensity<T> {
    space.measure().cloned().unwrap_or_else(|| MeasureDensity::lebesgue(*space.grid()))
}

/// `S_r f` for every member.
pub(crate) fn averages<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, r: T) -> Result<Vec<SampledVectorField<T>>> {
    let mu = lebesgue_or(space);
    let scheme = BallScheme::new(r);
    family.members().par_iter().map(|f| ball_average(f, &mu, &scheme)).collect()
}

/// `sup_f ‖(S_r f - f)·χ_{B(0, L-r)}‖`, the region where no ball is clipped.
pub fn averaging_modulus<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, r: T) -> Result<T> {
    averaging_modulus_on(family, space, r, space.grid().half_width() - r)
}

/// `sup_f ‖(S_r f - f)·χ_{B(0, R)}‖`; requires `R + r ≤ L`.
pub fn averaging_modulus_on<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, r: T, region: T) -> Result<T> {
    check_family_shape(family, space)?;
    check_region(space.grid(), r, region)?;
    let s = averages(family, space, r)?;
    averaging_from(family, space, &s, region)
}

pub(crate) fn check_region<T: Scalar>(grid: &Grid<T>, r: T, region: T) -> Result<()> {
    if !(region > T::zero()) || region + r > grid.half_width() * (T::one() + T::tol(1e-12)) {
        return Err(Error::RadiusExceedsBox { radius: (region + r).as_f64(), half_width: grid.half_width().as_f64() });
    }
    Ok(())
}

pub(crate) fn averaging_from<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, s: &[SampledVectorField<T>], region: T) -> Result<T> {
    let grid = space.grid();
    let inside: Vec<bool> = grid.iter_indices().map(|i| grid.radius(i) < region).collect();
    let values = family
        .members()
        .par_iter()
        .zip(s)
        .map(|(f, sf)| {
            let mut r = space.pointwise_diff(sf, f)?;
            for (v, &k) in r.iter_mut().zip(&inside) {
                if !k {
                    *v = T::zero();
                }
            }
            Ok(space.size_from_pointwise(&r))
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(max_of(&values))
}

/// [`averaging_modulus_on`] over several radii; `region` defaults to
/// `L - max(radii)` so every point of the curve uses the same region.
pub fn averaging_curve<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, radii: &[T], region: Option<T>) -> Result<Vec<(T, T)>> {
    let top = radii.iter().fold(T::zero(), |a, &b| a.max(b));
    let region = region.unwrap_or(space.grid().half_width() - top);
    radii.iter().map(|&r| Ok((r, averaging_modulus_on(family, space, r, region)?))).collect()
}

/// Which equicontinuity notion a curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equicontinuity {
    /// `‖τ_y f - f‖` over `|y| ≤ r`.
    Translation,
    /// `‖τ_y f̃ - f̃‖_{L^p(D)}` in the eigenframe of `W`.
    Twisted,
    /// `‖S_r f - f‖` on `B(0, L - max r)`.
    Averaging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<T> {
    pub scale: T,
    pub value: T,
}

/// A modulus sampled on a ladder of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve<T> {
    pub label: String,
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Scalar> Curve<T> {
    pub fn new(label: impl Into<String>, points: Vec<(T, T)>) -> Self {
        Self { label: label.into(), points: points.into_iter().map(|(scale, value)| CurvePoint { scale, value }).collect() }
    }

    /// `scale,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale,value\n");
        for p in &self.points {
            out.push_str(&format!("{:e},{:e}\n", p.scale, p.value));
        }
        out
    }
}

/// Measured boundedness, tail and equicontinuity moduli of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliReport<T> {
    pub family: String,
    pub members: usize,
    /// `"norm"` or `"modular"`.
    pub size_kind: String,
    pub bound: T,
    pub tail: Curve<T>,
    pub notion: Equicontinuity,
    pub equicontinuity: Curve<T>,
}

/// All three moduli on the default ladders.
pub fn moduli_report<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, notion: Equicontinuity) -> Result<ModuliReport<T>> {
    let grid = *space.grid();
    let bound = boundedness_modulus(family, space)?;
    let tail: Vec<(T, T)> = tail_ladder(&grid).into_iter().map(|r| Ok((r, tail_modulus(family, space, r)?))).collect::<Result<_>>()?;
    let radii = scale_ladder(&grid);
    let (label, eq) = match notion {
        Equicontinuity::Translation => ("sup ‖τ_y f - f‖, |y| ≤ r".to_string(), translation_curve(family, space, &radii)?),
        Equicontinuity::Twisted => {
            let (w, p) = weight_and_p(space)?;
            ("sup ‖τ_y f̃ - f̃‖_D, |y| ≤ r".to_string(), twisted_curve(family, w, p, &radii)?)
        }
        Equicontinuity::Averaging => {
            let region = grid.half_width() - radii.iter().fold(T::zero(), |a, &b| a.max(b));
            (format!("sup ‖(S_r f - f)χ_B(0,{region})‖"), averaging_curve(family, space, &radii, Some(region))?)
        }
    };
    Ok(ModuliReport {
        family: family.description().to_string(),
        members: family.len(),
        size_kind: space.size_kind().to_string(),
        bound,
        tail: Curve::new("sup ‖f χ_{|x| ≥ R}‖", tail),
        notion,
        equicontinuity: Curve::new(label, eq),
    })
}

pub(crate) fn weight_and_p<T: Scalar>(space: &Space<T>) -> Result<(&MatrixWeightField<T>, T)> {
    let w = space.weight().ok_or_else(|| Error::Unsupported("this route needs a matrix-weighted space".into()))?;
    let p = space.constant_p().ok_or_else(|| Error::Unsupported("this route needs a constant exponent".into()))?;
    Ok((w, p))
}
