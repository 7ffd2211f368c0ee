use matweight::compactness::{certify_net, BumpSpec, FunctionFamily, Space};
use matweight::field_io::{read_field, write_field};
use matweight::matrix::{CMatrix, HermitianMatrix};
use matweight::muckenhoupt::{ap_constant, CubeFamily};
use matweight::operators::{dyadic_average, symdiff_measure, DyadicScheme};
use matweight::spaces::{luxemburg_norm, modular, ExponentField, LqNorm, Norm, NormFamily, SampledVectorField};
use matweight::weights::{make_power_weight, MatrixWeightField, MeasureDensity, Rotation};
use matweight::{Grid64, C};
use proptest::prelude::*;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

/// `B B^H + shift·I` from `d²` complex entries.
fn psd(d: usize, entries: &[(f64, f64)], shift: f64) -> HermitianMatrix<f64> {
    let b = CMatrix::from_fn(d, |i, j| C::new(entries[i * d + j].0, entries[i * d + j].1));
    let mut m = b.matmul(&b.adjoint());
    for i in 0..d {
        m[(i, i)] += C::new(shift, 0.0);
    }
    HermitianMatrix::new(m).unwrap()
}

fn psd_strategy() -> impl Strategy<Value = HermitianMatrix<f64>> {
    (1usize..=4).prop_flat_map(|d| (Just(d), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d), 0.05..1.0f64)).prop_map(|(d, e, s)| psd(d, &e, s))
}

fn random_field(grid: Grid64, d: usize, values: &[(f64, f64)]) -> SampledVectorField<f64> {
    let v = (0..grid.len() * d).map(|k| C::new(values[k % values.len()].0, values[k % values.len()].1)).collect();
    SampledVectorField::new(grid, d, v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_powers_compose(a in psd_strategy(), s in -1.5..1.5f64, t in -1.5..1.5f64) {
        let lhs = a.power(s).unwrap().matrix().matmul(a.power(t).unwrap().matrix());
        let rhs = a.power(s + t).unwrap();
        let scale = rhs.matrix().max_abs();
        prop_assert!(lhs.sub(rhs.matrix()).max_abs() <= 1e-9 * (1.0 + scale));
    }

    #[test]
    fn power_one_and_square_root(a in psd_strategy()) {
        prop_assert!(a.power(1.0).unwrap().matrix().sub(a.matrix()).max_abs() <= 1e-12 * (1.0 + a.matrix().max_abs()));
        let r = a.power(0.5).unwrap();
        let sq = r.matrix().matmul(r.matrix());
        prop_assert!(sq.sub(a.matrix()).max_abs() <= 1e-10 * (1.0 + a.matrix().max_abs()));
    }

    #[test]
    fn operator_norm_of_power(a in psd_strategy(), s in 0.1..3.0f64) {
        let n = a.op_norm().unwrap();
        prop_assert!(close(a.power(s).unwrap().op_norm().unwrap(), n.powf(s), 1e-10));
        prop_assert!(close(n, a.matrix().spectral_norm(), 1e-9));
    }

    #[test]
    fn lq_norm_is_a_norm(q in 1.0..6.0f64, u in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3), v in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3), c in -3.0..3.0f64) {
        let rho = LqNorm { dim: 3, q };
        let u: Vec<C<f64>> = u.into_iter().map(|(a, b)| C::new(a, b)).collect();
        let v: Vec<C<f64>> = v.into_iter().map(|(a, b)| C::new(a, b)).collect();
        let sum: Vec<C<f64>> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let scaled: Vec<C<f64>> = u.iter().map(|a| a * c).collect();
        prop_assert!(rho.eval(&sum) <= rho.eval(&u) + rho.eval(&v) + 1e-12);
        prop_assert!(close(rho.eval(&scaled), c.abs() * rho.eval(&u), 1e-12));
    }

    #[test]
    fn weighted_norm_is_homogeneous(alpha in -0.4..0.8f64, p in 1.0..4.0f64, c in -4.0..4.0f64, values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..17)) {
        let grid = Grid64::new(1, 2.0, 64).unwrap();
        let w = make_power_weight(grid, &[alpha, 0.5 * alpha], Some(Rotation::Plane { rate: 1.0 })).unwrap();
        let space = Space::weighted(&w, p).unwrap();
        let f = random_field(grid, 2, &values);
        prop_assert!(close(space.norm(&f.scale(c)).unwrap(), c.abs() * space.norm(&f).unwrap(), 1e-10));
    }

    #[test]
    fn luxemburg_norm_normalizes_the_modular(p0 in 1.1..2.0f64, p1 in 2.0..5.0f64, values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..9)) {
        let grid = Grid64::new(1, 2.0, 64).unwrap();
        let pf = ExponentField::from_fn(grid, |x| p0 + (p1 - p0) * (x[0] + 2.0) / 4.0).unwrap();
        let rho = NormFamily::euclidean(grid, 2);
        let f = random_field(grid, 2, &values);
        prop_assume!(f.values().iter().any(|z| z.norm() > 1e-3));
        let lambda = luxemburg_norm(&f, &rho, &pf).unwrap();
        prop_assert!(close(modular(&f.scale(1.0 / lambda), &rho, &pf).unwrap(), 1.0, 1e-6));
    }

    #[test]
    fn field_files_round_trip(values in prop::collection::vec((-1e6..1e6f64, -1e-6..1e-6f64), 1..40), d in 1usize..4) {
        let grid = Grid64::new(1, 3.0, 16).unwrap();
        let f = random_field(grid, d, &values);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let g: SampledVectorField<f64> = read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(f, g);
    }

    #[test]
    fn ap_constant_is_scale_invariant_and_at_least_one(a0 in -0.5..0.9f64, a1 in -0.5..0.9f64, c in 0.01..100.0f64, p in 1.2..3.0f64) {
        let grid = Grid64::new(1, 4.0, 256).unwrap();
        let w = make_power_weight(grid, &[a0, a1], Some(Rotation::Plane { rate: 0.5 })).unwrap();
        let cubes = CubeFamily::default_for(&grid);
        let a = ap_constant(&w, p, &cubes).unwrap();
        prop_assert!(a >= 1.0 - 1e-9);
        prop_assert!(close(ap_constant(&w.scaled(c).unwrap(), p, &cubes).unwrap(), a, 1e-9));
    }

    #[test]
    fn dyadic_averaging_is_an_idempotent_contraction(values in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..50), t in -4i32..=0) {
        let grid = Grid64::new(1, 4.0, 256).unwrap();
        let scheme = DyadicScheme::new(1, t, 1).unwrap();
        let f = random_field(grid, 2, &values);
        let a = dyadic_average(&f, &scheme).unwrap();
        let aa = dyadic_average(&a, &scheme).unwrap();
        prop_assert!(a.values().iter().zip(aa.values()).all(|(x, y)| (x - y).norm() <= 1e-12));
        let identity = MatrixWeightField::constant_scalar(grid, 2, 1.0).unwrap();
        let space = Space::weighted(&identity, 2.0).unwrap();
        prop_assert!(space.norm(&a).unwrap() <= space.norm(&f).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn ball_symmetric_difference_is_symmetric(x in 0usize..1024, y in 0usize..1024, r in 0.05..1.0f64) {
        let grid = Grid64::new(1, 4.0, 1024).unwrap();
        let mu = MeasureDensity::lebesgue(grid);
        let a = symdiff_measure(&grid, x, y, r, &mu).unwrap();
        let b = symdiff_measure(&grid, y, x, r, &mu).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a >= 0.0);
        if x == y {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn more_centers_never_worsen_a_certificate(seed in 0u64..1000, k in 1usize..6, extra in 1usize..6) {
        let grid = Grid64::new(1, 4.0, 256).unwrap();
        let spec = BumpSpec { count: 12, seed, ..BumpSpec::default() };
        let fam = FunctionFamily::gaussian_bumps(grid, 2, &spec).unwrap();
        let w = make_power_weight(grid, &[0.3, -0.2], None).unwrap();
        let space = Space::weighted(&w, 2.0).unwrap();
        let few = &fam.members()[..k];
        let more = &fam.members()[..k + extra];
        let a = certify_net(&fam, few, &space, 0.1, 1.0).unwrap();
        let b = certify_net(&fam, more, &space, 0.1, 1.0).unwrap();
        prop_assert!(b.worst_distance <= a.worst_distance);
        prop_assert!(b.assignments.iter().zip(&a.assignments).all(|(x, y)| x.distance <= y.distance));
    }
}
