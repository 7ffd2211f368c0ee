use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moduli::{averages, check_family_shape, continuous_frames, masked_size, scale_ladder, tail_ladder, weight_and_p};
use super::net::greedy_cover;
use super::{FunctionFamily, Space};
use crate::error::{Error, Result};
use crate::matrix::pow_nonneg;
use crate::muckenhoupt::{ap_constant, CubeFamily};
use crate::scalar::{Scalar, C};
use crate::spaces::integrate;
use crate::weights::{MatrixWeightField, ScalarWeightField};

/// One `ε` of the necessity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityRow<T> {
    pub epsilon: T,
    /// Size of the greedy ε-net drawn from the family.
    pub net_size: usize,
    /// `δ = max_f ‖f - f_k‖ < ε`.
    pub net_radius: T,
    /// `R = max_k R_k`, `None` if some center's tail never drops below `ε`.
    pub radius: Option<T>,
    /// `max_k ‖f_k χ_{B^c(0,R)}‖`.
    pub member_tail: T,
    /// `sup_f ‖f χ_{B^c(0,R)}‖`.
    pub family_tail: T,
    /// `δ + member_tail`.
    pub tail_bound: T,
    pub tail_pass: bool,
    /// Largest ladder radius below which every center's averaging modulus
    /// stays under `ε`.
    pub r: Option<T>,
    pub member_averaging: T,
    pub family_averaging: T,
    /// `max ‖S_r(f - f_k)‖ / ‖f - f_k‖` over the assigned pairs.
    pub lemma_constant: T,
    /// `(lemma_constant + 1)·δ + member_averaging`.
    pub averaging_bound: T,
    /// `family_averaging / ε`.
    pub averaging_ratio: T,
    pub averaging_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport<T> {
    pub ap_constant: T,
    pub cube_family: String,
    /// Radius of the ball the averaging moduli are measured on.
    pub region: T,
    pub rows: Vec<NecessityRow<T>>,
    pub pass: bool,
}

/// Runs the necessity direction on a finite family: nets drawn from the
/// family itself, radii read off the centers, and the family moduli checked
/// against the triangle-inequality bounds.
pub fn necessity_check<T: Scalar>(family: &FunctionFamily<T>, space: &Space<T>, epsilons: &[T], cap: usize) -> Result<NecessityReport<T>> {
    check_family_shape(family, space)?;
    let (w, p) = weight_and_p(space)?;
    if !(p > T::one()) {
        return Err(Error::Unsupported(format!("the necessity check needs p > 1, got {p}")));
    }
    w.require_invertible()?;
    let grid = *space.grid();
    let cubes = CubeFamily::default_for(&grid);
    let ap = ap_constant(w, p, &cubes)?;
    if !ap.is_finite() {
        return Err(Error::NonFinite);
    }
    let radii = scale_ladder(&grid);
    let region = grid.half_width() - radii.iter().fold(T::zero(), |a, &b| a.max(b));
    let inside: Vec<bool> = grid.iter_indices().map(|i| grid.radius(i) < region).collect();
    let members = family.members();
    let norms = |r: Vec<T>, mask: bool| {
        let r: Vec<T> = if mask { r.into_iter().zip(&inside).map(|(v, &k)| if k { v } else { T::zero() }).collect() } else { r };
        space.size_from_pointwise(&r)
    };
    // S_r f for every ladder radius, and the member averaging moduli
    let avgs = radii.iter().map(|&r| averages(family, space, r)).collect::<Result<Vec<_>>>()?;
    let member_avg: Vec<Vec<T>> = avgs
        .iter()
        .map(|s| members.par_iter().zip(s).map(|(f, sf)| Ok(norms(space.pointwise_diff(sf, f)?, true))).collect::<Result<Vec<T>>>())
        .collect::<Result<_>>()?;
    let tails: Vec<Vec<T>> = tail_ladder(&grid)
        .iter()
        .map(|&big_r| {
            let keep: Vec<bool> = grid.iter_indices().map(|i| grid.radius(i) >= big_r).collect();
            members.par_iter().map(|f| masked_size(space, f, &keep)).collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let tail_radii = tail_ladder(&grid);
    let mut rows = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let cover = greedy_cover(members.len(), eps, |i, j| space.distance(&members[i], &members[j]))?;
        if cover.centers.len() > cap {
            return Err(Error::NotTotallyBoundedInput { needed: cover.centers.len(), cap });
        }
        let delta = cover.radius();
        let centers = &cover.centers;
        let center_of = |i: usize| centers[cover.nearest[i]];

        // R_k: first ladder radius with the center's tail below ε
        let mut radius_idx = Some(0usize);
        for &k in centers {
            match (0..tail_radii.len()).find(|&j| tails[j][k] < eps) {
                Some(j) => radius_idx = radius_idx.map(|r| r.max(j)),
                None => radius_idx = None,
            }
        }
        let (radius, member_tail, family_tail) = match radius_idx {
            Some(j) => {
                let mt = centers.iter().map(|&k| tails[j][k]).fold(T::zero(), |a, b| a.max(b));
                let ft = tails[j].iter().fold(T::zero(), |a, &b| a.max(b));
                (Some(tail_radii[j]), mt, ft)
            }
            None => (None, T::zero(), T::zero()),
        };
        let tail_bound = delta + member_tail;
        let slack = T::one() + T::tol(1e-12);
        let tail_pass = radius.is_some() && family_tail <= tail_bound * slack && family_tail < eps * T::lit(2.0);

        // r: every ladder radius up to r keeps the centers' moduli below ε
        let mut r_idx = None;
        for j in 0..radii.len() {
            if centers.iter().all(|&k| member_avg[j][k] < eps) {
                r_idx = Some(j);
            } else {
                break;
            }
        }
        let (r, member_averaging, family_averaging, lemma_constant) = match r_idx {
            Some(j) => {
                let ma = centers.iter().map(|&k| member_avg[j][k]).fold(T::zero(), |a, b| a.max(b));
                let fa = member_avg[j].iter().fold(T::zero(), |a, &b| a.max(b));
                let ratios = (0..members.len())
                    .into_par_iter()
                    .filter(|&i| center_of(i) != i)
                    .map(|i| {
                        let k = center_of(i);
                        let num = norms(space.pointwise_diff(&avgs[j][i], &avgs[j][k])?, true);
                        let den = cover.distance[i];
                        Ok(if den > T::zero() { num / den } else { T::zero() })
                    })
                    .collect::<Result<Vec<T>>>()?;
                (Some(radii[j]), ma, fa, ratios.into_iter().fold(T::zero(), |a, b| a.max(b)))
            }
            None => (None, T::zero(), T::zero(), T::zero()),
        };
        let averaging_bound = (lemma_constant + T::one()) * delta + member_averaging;
        let averaging_pass = r.is_some() && family_averaging <= averaging_bound * slack && family_averaging <= (lemma_constant + T::lit(2.0)) * eps;
        rows.push(NecessityRow {
            epsilon: eps,
            net_size: centers.len(),
            net_radius: delta,
            radius,
            member_tail,
            family_tail,
            tail_bound,
            tail_pass,
            r,
            member_averaging,
            family_averaging,
            lemma_constant,
            averaging_bound,
            averaging_ratio: family_averaging / eps,
            averaging_pass,
            pass: tail_pass && averaging_pass,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(NecessityReport { ap_constant: ap, cube_family: cubes.description().to_string(), region, rows, pass })
}

/// Per-member comparison of `‖f̃‖_{L^p(D)}` with `Σ_i ‖f̃_i‖_{L^p(λ_i)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRow<T> {
    pub full: T,
    pub components: Vec<T>,
    pub sum: T,
    /// `full / sum` (1 when both vanish).
    pub ratio: T,
    /// `‖f̃‖^p` and `Σ_i ‖f̃_i‖^p`, equal for `p = 2`.
    pub full_power: T,
    pub power_sum: T,
}

/// The family split into `d` scalar-weighted families in the eigenframe of
/// `W`, with the measured norm-equivalence constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentwiseReduction<T> {
    pub p: T,
    /// Eigenvalue fields, ordered along the continued eigenframe.
    #[serde(skip)]
    pub eigenvalues: Vec<ScalarWeightField<T>>,
    /// `components[i][member]`: the scalar field `f̃_i` of a member.
    #[serde(skip)]
    pub components: Vec<Vec<Vec<C<T>>>>,
    pub rows: Vec<ComponentRow<T>>,
    pub lower: T,
    pub upper: T,
    /// `1/d`.
    pub c_d: T,
    /// `max(1, d^{1/p - 1})`.
    pub big_c_d: T,
    pub within_bounds: bool,
}

pub fn componentwise_reduction<T: Scalar>(family: &FunctionFamily<T>, w: &MatrixWeightField<T>, p: T) -> Result<ComponentwiseReduction<T>> {
    if !(p > T::zero()) || !p.is_finite() {
        return Err(Error::InvalidExponent(format!("p = {p}")));
    }
    let grid = *w.grid();
    let d = w.dim();
    if family.grid() != &grid || family.dim() != d {
        return Err(Error::ShapeMismatch("family and weight disagree".into()));
    }
    let (frames, lambdas) = continuous_frames(w);
    let eigenvalues = (0..d)
        .map(|i| ScalarWeightField::new(grid, lambdas.iter().map(|l| l[i]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let adjoints: Vec<_> = frames.iter().map(|u| u.adjoint()).collect();
    let twisted = family.members().par_iter().map(|f| f.apply_matrices(&adjoints)).collect::<Result<Vec<_>>>()?;
    let components: Vec<Vec<Vec<C<T>>>> = (0..d)
        .map(|i| twisted.iter().map(|ft| grid.iter_indices().map(|x| ft.point(x)[i]).collect()).collect())
        .collect();
    let inv = p.recip();
    let rows: Vec<ComponentRow<T>> = twisted
        .par_iter()
        .map(|ft| {
            let full_pts: Vec<T> = grid
                .iter_indices()
                .map(|x| {
                    let lam = &lambdas[x];
                    let s = (0..d).map(|i| pow_nonneg(lam[i], T::lit(2.0) * inv) * ft.point(x)[i].norm_sqr()).fold(T::zero(), |a, b| a + b);
                    s.sqrt().powf(p)
                })
                .collect();
            let full_power = integrate(&grid, &full_pts, None);
            let comps: Vec<T> = (0..d)
                .map(|i| {
                    let pts: Vec<T> = grid.iter_indices().map(|x| eigenvalues[i].values()[x] * ft.point(x)[i].norm().powf(p)).collect();
                    integrate(&grid, &pts, None)
                })
                .collect();
            let power_sum = comps.iter().fold(T::zero(), |a, &b| a + b);
            let components: Vec<T> = comps.iter().map(|&c| c.powf(inv)).collect();
            let sum = components.iter().fold(T::zero(), |a, &b| a + b);
            let full = full_power.powf(inv);
            let ratio = if sum > T::zero() { full / sum } else { T::one() };
            ComponentRow { full, components, sum, ratio, full_power, power_sum }
        })
        .collect();
    let lower = rows.iter().map(|r| r.ratio).fold(T::infinity(), |a, b| a.min(b));
    let upper = rows.iter().map(|r| r.ratio).fold(T::zero(), |a, b| a.max(b));
    let dd = T::from_count(d);
    let c_d = dd.recip();
    let big_c_d = T::one().max(dd.powf(inv - T::one()));
    let slack = T::tol(1e-12);
    let within_bounds = lower >= c_d * (T::one() - slack) && upper <= big_c_d * (T::one() + slack);
    Ok(ComponentwiseReduction { p, eigenvalues, components, rows, lower, upper, c_d, big_c_d, within_bounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compactness::BumpSpec;
    use crate::grid::Grid;
    use crate::matrix::herm;
    use crate::spaces::{lp_w_norm, SampledVectorField};
    use crate::weights::{make_power_weight, Rotation};

    fn space(np: usize) -> (Grid<f64>, Space<f64>) {
        let g = Grid::new(1, 8.0, np).unwrap();
        let w = make_power_weight(g, &[0.5, 1.0 / 3.0], Some(Rotation::Plane { rate: 1.0 })).unwrap();
        (g, Space::weighted(&w, 2.0).unwrap())
    }

    #[test]
    fn singleton_passes_everywhere() {
        let (g, s) = space(512);
        let f = SampledVectorField::from_fn(g, 2, |x, v| v[0] = C::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let rep = necessity_check(&FunctionFamily::singleton(f), &s, &[0.2, 0.1, 0.05], 10).unwrap();
        assert!(rep.pass, "{rep:?}");
        for row in &rep.rows {
            assert_eq!(row.net_size, 1);
            assert_eq!(row.net_radius, 0.0);
            assert_eq!(row.family_tail, row.member_tail);
        }
        assert!(rep.ap_constant >= 1.0);
    }

    #[test]
    fn bump_family_passes_and_moduli_fall_below_thresholds() {
        let (g, s) = space(1024);
        let fam = FunctionFamily::gaussian_bumps(g, 2, &BumpSpec { count: 10, ..BumpSpec::default() }).unwrap();
        let rep = necessity_check(&fam, &s, &[0.2, 0.1, 0.05], 40).unwrap();
        for row in &rep.rows {
            assert!(row.pass, "{row:?}");
            // the moduli recomputed from scratch
            let big_r = row.radius.unwrap();
            let tail = crate::compactness::tail_modulus(&fam, &s, big_r).unwrap();
            assert_eq!(tail, row.family_tail);
            assert!(tail < 2.0 * row.epsilon);
            let avg = crate::compactness::averaging_modulus_on(&fam, &s, row.r.unwrap(), rep.region).unwrap();
            assert_eq!(avg, row.family_averaging);
        }
        assert!(matches!(necessity_check(&fam, &s, &[1e-6], 3), Err(Error::NotTotallyBoundedInput { needed: 10, cap: 3 })));
    }

    #[test]
    fn componentwise_identity_in_one_dimension() {
        let g = Grid::<f64>::new(1, 2.0, 128).unwrap();
        let w = MatrixWeightField::from_scalar(&ScalarWeightField::power_law(g, 0.5).unwrap()).unwrap();
        let f = SampledVectorField::from_fn(g, 1, |x, v| v[0] = C::new(x[0].cos(), 0.3)).unwrap();
        let red = componentwise_reduction(&FunctionFamily::singleton(f.clone()), &w, 1.5).unwrap();
        assert_eq!(red.components[0][0], f.values().to_vec());
        assert!((red.rows[0].ratio - 1.0).abs() < 1e-14);
        assert!((red.rows[0].full - lp_w_norm(&f, &w, 1.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pythagorean_identity_for_p_two() {
        let g = Grid::<f64>::new(1, 2.0, 128).unwrap();
        let w = MatrixWeightField::constant(g, herm(&[&[2.0, 0.0, 0.0], &[0.0, 0.5, 0.0], &[0.0, 0.0, 3.0]])).unwrap();
        let fam = FunctionFamily::gaussian_bumps(g, 3, &BumpSpec { count: 4, ..BumpSpec::default() }).unwrap();
        let red = componentwise_reduction(&fam, &w, 2.0).unwrap();
        for row in &red.rows {
            assert!((row.full_power - row.power_sum).abs() < 1e-13 * row.full_power);
        }
        assert!(red.within_bounds);
    }

    #[test]
    fn rotating_weight_constants_are_in_range() {
        let g = Grid::<f64>::new(1, 4.0, 256).unwrap();
        let w = make_power_weight(g, &[0.5, -0.4], Some(Rotation::Plane { rate: 2.0 })).unwrap();
        let fam = FunctionFamily::gaussian_bumps(g, 2, &BumpSpec { count: 6, ..BumpSpec::default() }).unwrap();
        for p in [0.5, 1.0, 2.0, 3.0] {
            let red = componentwise_reduction(&fam, &w, p).unwrap();
            assert!(red.within_bounds, "p = {p}: [{}, {}]", red.lower, red.upper);
            // direct norm computation oracle
            for (f, row) in fam.members().iter().zip(&red.rows) {
                assert!((row.full - lp_w_norm(f, &w, p).unwrap()).abs() < 1e-10 * row.full);
            }
        }
        // a singular weight is accepted
        let sing = MatrixWeightField::from_fn(g, |x| herm(&[&[x[0] * x[0], 0.0], &[0.0, 0.0]])).unwrap();
        assert!(componentwise_reduction(&fam, &sing, 2.0).unwrap().within_bounds);
    }
}
