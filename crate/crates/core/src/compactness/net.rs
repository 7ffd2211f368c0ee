use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moduli::{averages, averaging_from, check_family_shape, cube_shift_curve, masked_size, scale_ladder, tail_ladder, twist, weight_and_p};
use super::{FunctionFamily, Space};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{dyadic_coefficients, from_dyadic_coefficients, DyadicScheme};
use crate::scalar::{euclid, Scalar, C};
use crate::spaces::{integrate, SampledVectorField};

/// Result of a greedy farthest-point covering.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover<T> {
    /// Indices of the chosen centers, in selection order.
    pub centers: Vec<usize>,
    /// For every point, the position in `centers` of its nearest center.
    pub nearest: Vec<usize>,
    /// For every point, the metric distance to that center.
    pub distance: Vec<T>,
}

impl<T: Scalar> Cover<T> {
    pub fn radius(&self) -> T {
        self.distance.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// Farthest-point covering of `count` points: starts at point 0, then
/// repeatedly promotes the point farthest from the current centers (lowest
/// index on ties) until every point is strictly within `radius`.
pub fn greedy_cover<T: Scalar>(count: usize, radius: T, metric: impl Fn(usize, usize) -> Result<T> + Sync) -> Result<Cover<T>> {
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    let mut centers = vec![0usize];
    let mut nearest = vec![0usize; count];
    let mut distance = (0..count).into_par_iter().map(|i| if i == 0 { Ok(T::zero()) } else { metric(i, 0) }).collect::<Result<Vec<T>>>()?;
    loop {
        let (far, worst) = distance.iter().enumerate().fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        if worst < radius {
            break;
        }
        let slot = centers.len();
        centers.push(far);
        let fresh = (0..count).into_par_iter().map(|i| if i == far { Ok(T::zero()) } else { metric(i, far) }).collect::<Result<Vec<T>>>()?;
        for i in 0..count {
            if fresh[i] < distance[i] {
                distance[i] = fresh[i];
                nearest[i] = slot;
            }
        }
    }
    Ok(Cover { centers, nearest, distance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment<T> {
    pub center: usize,
    pub distance: T,
}

/// Brute-force check of the net property: every member within
/// `c_net·ε` of some center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub epsilon: T,
    pub c_net: T,
    pub bound: T,
    /// Nearest center of every member, lowest index on ties.
    pub assignments: Vec<Assignment<T>>,
    pub worst_member: usize,
    pub worst_distance: T,
    pub pass: bool,
}

pub fn certify_net<T: Scalar>(family: &FunctionFamily<T>, centers: &[SampledVectorField<T>], space: &Space<T>, epsilon: T, c_net: T) -> Result<Certificate<T>> {
    if centers.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let assignments = family
        .members()
        .par_iter()
        .map(|f| {
            let mut best = Assignment { center: 0, distance: T::infinity() };
            for (k, g) in centers.iter().enumerate() {
                let d = space.distance(f, g)?;
                if d < best.distance {
                    best = Assignment { center: k, distance: d };
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst_member, worst_distance) = assignments
        .iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, a)| if a.distance > bv { (i, a.distance) } else { (bi, bv) });
    let bound = c_net * epsilon;
    Ok(Certificate { epsilon, c_net, bound, assignments, worst_member, worst_distance, pass: worst_distance <= bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DyadicRoute {
    /// Cube averages of `f` itself, selected by the translation modulus.
    Translation,
    /// Cube averages of `f̃ = U^H f` in `L^p(D)`, mapped back by `U`.
    Twisted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicOptions {
    pub route: DyadicRoute,
    /// Fixed `(m, t)` instead of the ladder selection.
    pub scheme: Option<(i32, i32)>,
}

impl Default for DyadicOptions {
    fn default() -> Self {
        Self { route: DyadicRoute::Translation, scheme: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicInfo<T> {
    pub route: DyadicRoute,
    pub m: i32,
    pub t: i32,
    pub cube_count: usize,
    /// `sup_f` size of `f·χ_{R_m^c}`.
    pub tail: T,
    /// `sup_f max_{|s_i| < 2^t}` size of `τ_s f - f`.
    pub modulus: T,
    /// `sup_f ‖f - Φf‖`.
    pub phi_error: T,
    /// `phi_error / (tail + modulus)`: the measured constant of the
    /// approximation estimate.
    pub phi_constant: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageInfo<T> {
    pub radius: T,
    pub r: T,
    /// `3 (∫_{B(0,R)} ‖W‖_op dμ)^{1/p}`.
    pub a_constant: T,
    /// `ε/3`.
    pub budget: T,
    pub tail: T,
    pub averaging: T,
    /// `ε/A`, the uniform clustering radius.
    pub cluster_radius: T,
    /// Largest uniform distance of a member's average to its center's.
    pub cluster_sup: T,
    /// `(A/3)·cluster_sup`, the bound on the third term.
    pub cluster_term: T,
    /// `tail + averaging + cluster_term`.
    pub budget_total: T,
    pub budget_honored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction<T> {
    Given,
    Dyadic(DyadicInfo<T>),
    Average(AverageInfo<T>),
}

/// A finite ε-net with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonNet<T> {
    pub epsilon: T,
    pub c_net: T,
    #[serde(skip)]
    pub centers: Vec<SampledVectorField<T>>,
    /// The member each center was built from.
    pub sources: Vec<usize>,
    /// Cube coefficients (`N·d` values) of every center, dyadic nets only.
    #[serde(skip)]
    pub coefficients: Vec<Vec<C<T>>>,
    pub construction: Construction<T>,
    pub certificate: Certificate<T>,
}

impl<T: Scalar> EpsilonNet<T> {
    /// Certifies hand-picked centers.
    pub fn from_centers(family: &FunctionFamily<T>, space: &Space<T>, centers: Vec<SampledVectorField<T>>, epsilon: T, c_net: T) -> Result<Self> {
        let certificate = certify_net(family, &centers, space, epsilon, c_net)?;
        Ok(Self { epsilon, c_net, sources: Vec::new(), centers, coefficients: Vec::new(), construction: Construction::Given, certificate })
    }

    /// `K`.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

fn check_epsilon<T: Scalar>(eps: T) -> Result<()> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(Error::Unsupported(format!("ε = {eps}")));
    }
    Ok(())
}

/// Cells outside `R_m = [-2^m, 2^m)^n`, or `None` if `R_m` does not fit.
fn outside_cube<T: Scalar>(grid: &Grid<T>, m: i32) -> Option<Vec<bool>> {
    let outer = T::lit(2f64.powi(m));
    if outer > grid.half_width() {
        return None;
    }
    let offset = grid.cells_for_length(grid.half_width() - outer)? as usize;
    let np = grid.points_per_axis();
    Some(
        grid.iter_indices()
            .map(|i| {
                let mi = grid.multi_index(i);
                (0..grid.n()).any(|k| mi[k] < offset || mi[k] >= np - offset)
            })
            .collect(),
    )
}

fn log2_floor<T: Scalar>(x: T) -> i32 {
    x.log2().floor().to_i32().unwrap_or(i32::MIN)
}

/// Cube side `2^t` in cells, if it is a positive whole number of cells.
fn side_cells<T: Scalar>(grid: &Grid<T>, t: i32) -> Option<usize> {
    grid.cells_for_length(T::lit(2f64.powi(t))).filter(|&k| k >= 1).map(|k| k as usize)
}

fn family_tail<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, keep: &[bool]) -> Result<T> {
    let v = family.members().par_iter().map(|f| masked_size(space, f, keep)).collect::<Result<Vec<T>>>()?;
    Ok(v.into_iter().fold(T::zero(), |a, b| a.max(b)))
}

/// `(m, t, tail, modulus)` from the ladders: the smallest `m` whose cube
/// tail is below `ε`, then the coarsest `t ≤ m` whose cube-shift modulus is
/// below `ε`.
fn select_scheme<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, eps: T) -> Result<(i32, i32, T, T)> {
    let grid = space.grid();
    let two_h = grid.h() * T::lit(2.0);
    let m_lo = log2_floor(two_h);
    let m_hi = log2_floor(grid.half_width());
    let mut chosen = None;
    for m in m_lo..=m_hi {
        if let Some(keep) = outside_cube(grid, m) {
            let tail = family_tail(family, space, &keep)?;
            if tail < eps {
                chosen = Some((m, tail));
                break;
            }
        }
    }
    let (m, tail) = chosen.ok_or_else(|| Error::ModuliTooLarge(format!("no R_m on the grid has tail below {eps}")))?;
    let top = grid.half_width() / T::lit(4.0);
    let ts: Vec<(i32, usize)> = (m_lo..=log2_floor(top).min(m))
        .filter(|&t| T::lit(2f64.powi(t)) >= two_h * (T::one() - T::tol(1e-12)))
        .filter_map(|t| side_cells(grid, t).map(|k| (t, k)))
        .collect();
    let sides: Vec<usize> = ts.iter().map(|&(_, k)| k).collect();
    let curve = cube_shift_curve(family, space, &sides);
    ts.iter()
        .zip(&curve)
        .rev()
        .find(|(_, &v)| v < eps)
        .map(|(&(t, _), &v)| (m, t, tail, v))
        .ok_or_else(|| Error::ModuliTooLarge(format!("no cube scale on the ladder has modulus below {eps}")))
}

/// ε-net from cube averages: the constructive route through `Φ`.
pub fn build_net_dyadic<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, eps: T, opts: &DyadicOptions) -> Result<EpsilonNet<T>> {
    check_epsilon(eps)?;
    check_family_shape(family, space)?;
    let twisted = match opts.route {
        DyadicRoute::Translation => None,
        DyadicRoute::Twisted => {
            let (w, p) = weight_and_p(space)?;
            Some(twist(family, w, p, space.measure())?)
        }
    };
    let (fam, sp) = match &twisted {
        Some(t) => (&t.family, &t.space),
        None => (family, space),
    };
    let grid = *sp.grid();
    let (m, t, tail, modulus) = match opts.scheme {
        None => select_scheme(fam, sp, eps)?,
        Some((m, t)) => {
            let keep = outside_cube(&grid, m).ok_or_else(|| Error::SchemeMismatch(format!("R_{m} does not fit the grid")))?;
            let k = side_cells(&grid, t).ok_or_else(|| Error::SchemeMismatch(format!("cube side 2^{t} is not a whole number of cells")))?;
            (m, t, family_tail(fam, sp, &keep)?, cube_shift_curve(fam, sp, &[k])[0])
        }
    };
    let scheme = DyadicScheme::new(m, t, grid.n())?;
    let layout = scheme.layout(&grid)?;
    let dim = fam.dim();
    let phis = fam
        .members()
        .par_iter()
        .map(|f| {
            let c = dyadic_coefficients(f, &layout)?;
            let g = from_dyadic_coefficients(grid, dim, &layout, &c)?;
            Ok((c, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = fam.members().par_iter().zip(&phis).map(|(f, (_, g))| sp.distance(f, g)).collect::<Result<Vec<T>>>()?;
    let phi_error = errors.iter().fold(T::zero(), |a, &b| a.max(b));
    let cover = greedy_cover(fam.len(), sp.metric_radius(eps), |i, j| sp.metric(&phis[i].1, &phis[j].1))?;
    let centers = cover
        .centers
        .iter()
        .map(|&k| match &twisted {
            Some(tw) => phis[k].1.apply_matrices(&tw.frames),
            None => Ok(phis[k].1.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    let c_net = match sp.power_metric() {
        Some(p) => (phi_error.powf(p) + eps.powf(p)).powf(p.recip()) / eps,
        None => T::one() + phi_error / eps,
    };
    let denom = tail + modulus;
    let phi_constant = if denom > T::zero() { phi_error / denom } else { T::zero() };
    let certificate = certify_net(family, &centers, space, eps, c_net)?;
    Ok(EpsilonNet {
        epsilon: eps,
        c_net,
        coefficients: cover.centers.iter().map(|&k| phis[k].0.clone()).collect(),
        sources: cover.centers.clone(),
        centers,
        construction: Construction::Dyadic(DyadicInfo {
            route: opts.route,
            m,
            t,
            cube_count: scheme.cube_count(),
            tail,
            modulus,
            phi_error,
            phi_constant,
        }),
        certificate,
    })
}

/// ε-net from ball averages restricted to `B(0, R)`, with the `ε/3` budget
/// split of the averaging route.
pub fn build_net_average<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, eps: T) -> Result<EpsilonNet<T>> {
    check_epsilon(eps)?;
    check_family_shape(family, space)?;
    let (w, p) = weight_and_p(space)?;
    if p < T::one() {
        return Err(Error::Unsupported(format!("the averaging route needs p ≥ 1, got {p}")));
    }
    if p == T::one() {
        w.require_invertible()?;
    }
    let grid = *space.grid();
    let budget = eps / T::lit(3.0);
    let mut radius = None;
    for r in tail_ladder(&grid) {
        let keep: Vec<bool> = grid.iter_indices().map(|i| grid.radius(i) >= r).collect();
        let tail = family_tail(family, space, &keep)?;
        if tail < budget {
            radius = Some((r, tail));
            break;
        }
    }
    let (big_r, tail) = radius.ok_or_else(|| Error::ModuliTooLarge(format!("no tail radius on the ladder is below ε/3 = {budget}")))?;
    let mut chosen = None;
    for r in scale_ladder(&grid).into_iter().rev() {
        if big_r + r > grid.half_width() * (T::one() + T::tol(1e-12)) {
            continue;
        }
        let s = averages(family, space, r)?;
        let a = averaging_from(family, space, &s, big_r)?;
        if a < budget {
            chosen = Some((r, a, s));
            break;
        }
    }
    let (r, averaging, s) = chosen.ok_or_else(|| Error::ModuliTooLarge(format!("no averaging radius on the ladder is below ε/3 = {budget}")))?;
    let inside: Vec<bool> = grid.iter_indices().map(|i| grid.radius(i) < big_r).collect();
    let opn: Vec<T> = w.op_norms().iter().zip(&inside).map(|(&v, &k)| if k { v } else { T::zero() }).collect();
    let a_constant = T::lit(3.0) * integrate(&grid, &opn, space.measure()).powf(p.recip());
    let cluster_radius = if a_constant > T::zero() { eps / a_constant } else { T::infinity() };
    let sup = |i: usize, j: usize| -> Result<T> {
        Ok(grid
            .iter_indices()
            .filter(|&x| inside[x])
            .map(|x| {
                let diff: Vec<C<T>> = s[i].point(x).iter().zip(s[j].point(x)).map(|(&a, &b)| a - b).collect();
                euclid(&diff)
            })
            .fold(T::zero(), |a, b| a.max(b)))
    };
    let cover = greedy_cover(family.len(), cluster_radius, sup)?;
    let cluster_sup = cover.radius();
    let cluster_term = a_constant / T::lit(3.0) * cluster_sup;
    let centers: Vec<SampledVectorField<T>> = cover.centers.iter().map(|&k| s[k].masked(|x| inside[x])).collect();
    let certificate = certify_net(family, &centers, space, eps, T::one())?;
    Ok(EpsilonNet {
        epsilon: eps,
        c_net: T::one(),
        sources: cover.centers.clone(),
        centers,
        coefficients: Vec::new(),
        construction: Construction::Average(AverageInfo {
            radius: big_r,
            r,
            a_constant,
            budget,
            tail,
            averaging,
            cluster_radius,
            cluster_sup,
            cluster_term,
            budget_total: tail + averaging + cluster_term,
            budget_honored: tail < budget && averaging < budget && cluster_term < budget,
        }),
        certificate,
    })
}
