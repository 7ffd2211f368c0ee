//! Scenario execution: builds the grid, weight, measure, exponent and family
//! and runs the task.

use std::sync::Arc;
use std::time::Instant;

use matweight::compactness::{
    build_net_average, build_net_dyadic, certify_net, moduli_report, necessity_check, BumpSpec, Certificate, DyadicOptions, EpsilonNet, FunctionFamily, ModuliReport,
    NecessityReport, Space,
};
use matweight::field_io::load_field;
use matweight::matrix::CMatrix;
use matweight::muckenhoupt::{ap_constant_detailed, scalar_ap_dense_scan, CubeFamily};
use matweight::spaces::{john_ellipsoid, sandwich_ratios, ExponentField, LinfNorm, LqNorm, MatrixNorm, Norm, SampledVectorField};
use matweight::verify::{verify_lemmas, VerifyReport};
use matweight::weights::{make_power_weight, MatrixWeightField, MeasureDensity, Rotation, ScalarWeightField};
use matweight::{Grid64, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Context};
use crate::scenario::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeRecord {
    pub lo: [usize; 2],
    pub side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApConstantOutput {
    pub p: f64,
    pub weight: String,
    pub value: f64,
    pub argmax: CubeRecord,
    pub cubes: usize,
    pub cube_family: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JohnOutput {
    pub norm: String,
    pub d: usize,
    pub sphere_samples: usize,
    /// Rows of `W`, entries as `[re, im]`.
    pub w: Vec<Vec<[f64; 2]>>,
    pub scale: f64,
    pub gap: f64,
    pub iterations: usize,
    pub augmentation_rounds: usize,
    pub fitted_samples: usize,
    pub upper_ratio: f64,
    pub test_vectors: usize,
    /// `min |Wv|/ρ(v)` over the test vectors; `≥ 1` required.
    pub lower: f64,
    /// `max |Wv|/(√d ρ(v))` over the test vectors; `≤ 1 + δ` required.
    pub upper: f64,
    pub delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberNorm {
    pub member: usize,
    /// Norm for a constant exponent, modular for a variable one.
    pub size: f64,
    /// Norm (Luxemburg norm for a variable exponent).
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormOutput {
    pub family: String,
    pub size_kind: String,
    pub members: Vec<MemberNorm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetOutput {
    pub family: String,
    pub members: usize,
    pub nets: Vec<EpsilonNet<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyOutput {
    pub family: String,
    pub centers: String,
    pub certificate: Certificate<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecessityOutput {
    pub family: String,
    pub members: usize,
    pub report: NecessityReport<f64>,
}

/// Task results, tagged by task name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum Outputs {
    ApConstant(ApConstantOutput),
    John(JohnOutput),
    Norm(NormOutput),
    Moduli(ModuliReport<f64>),
    Net(NetOutput),
    Certify(CertifyOutput),
    Necessity(NecessityOutput),
    VerifyLemmas(VerifyReport),
}

impl Outputs {
    /// `Some` for tasks with a pass/fail verdict.
    pub fn pass(&self) -> Option<bool> {
        match self {
            Outputs::John(o) => Some(o.pass),
            Outputs::Net(o) => Some(o.nets.iter().all(|n| n.certificate.pass)),
            Outputs::Certify(o) => Some(o.certificate.pass),
            Outputs::Necessity(o) => Some(o.report.pass),
            Outputs::VerifyLemmas(o) => Some(o.pass),
            Outputs::ApConstant(_) | Outputs::Norm(_) | Outputs::Moduli(_) => None,
        }
    }
}

/// Wall-clock phases of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

impl Timings {
    fn record<R>(&mut self, name: &str, g: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = g();
        self.phases.push((name.to_string(), t.elapsed().as_secs_f64()));
        r
    }
}

fn grid(l: &LoadedScenario) -> Result<Grid64, CliError> {
    let g = l.scenario.grid.ok_or_else(|| CliError::schema(None, "grid", "missing [grid]"))?;
    Grid64::new(g.n, g.half_width, g.points).context(|| "grid".into())
}

fn weight(l: &LoadedScenario, g: Grid64) -> Result<(MatrixWeightField<f64>, String), CliError> {
    let spec = l.scenario.weight.as_ref().ok_or_else(|| CliError::schema(None, "weight", "missing [weight]"))?;
    let (w, label) = match spec {
        WeightSpec::Identity { d } => (MatrixWeightField::constant_scalar(g, *d, 1.0), format!("identity on C^{d}")),
        WeightSpec::Power { alphas } => (make_power_weight(g, alphas, None), format!("power weight, alphas {alphas:?}")),
        WeightSpec::RotatedPower { alphas, rate } => {
            (make_power_weight(g, alphas, Some(Rotation::Plane { rate: *rate })), format!("rotated power weight, alphas {alphas:?}, rate {rate}"))
        }
        WeightSpec::File { path } => {
            let p = l.resolve(path);
            let w = load_field::<f64, MatrixWeightField<f64>>(&p).context(|| format!("weight file {}", p.display()))?;
            if w.grid() != &g {
                return Err(CliError::schema(None, "weight.path", "the weight file lives on another grid"));
            }
            return Ok((w, format!("weight file {}", path.display())));
        }
    };
    Ok((w.context(|| "weight".into())?, label))
}

fn measure(l: &LoadedScenario, g: Grid64) -> Result<Option<MeasureDensity<f64>>, CliError> {
    match &l.scenario.measure {
        None | Some(MeasureSpec::Lebesgue) => Ok(None),
        Some(MeasureSpec::Quadratic { c }) => {
            let c = *c;
            Ok(Some(MeasureDensity::from_fn(g, |x| 1.0 + c * (x[0] * x[0] + x[1] * x[1])).context(|| "measure".into())?))
        }
        Some(MeasureSpec::File { path }) => {
            let p = l.resolve(path);
            let u = load_field::<f64, MeasureDensity<f64>>(&p).context(|| format!("measure file {}", p.display()))?;
            if u.grid() != &g {
                return Err(CliError::schema(None, "measure.path", "the density file lives on another grid"));
            }
            Ok(Some(u))
        }
    }
}

enum Exp {
    Constant(f64),
    Field(ExponentField<f64>),
}

fn exponent(l: &LoadedScenario, g: Grid64) -> Result<Exp, CliError> {
    match &l.scenario.exponent {
        None => Err(CliError::schema(None, "exponent", "missing [exponent]")),
        Some(ExponentSpec::Constant { p }) => Ok(Exp::Constant(*p)),
        Some(ExponentSpec::File { path }) => {
            let p = l.resolve(path);
            let f = load_field::<f64, ExponentField<f64>>(&p).context(|| format!("exponent file {}", p.display()))?;
            if f.grid() != &g {
                return Err(CliError::schema(None, "exponent.path", "the exponent file lives on another grid"));
            }
            Ok(Exp::Field(f))
        }
    }
}

fn space(l: &LoadedScenario, g: Grid64) -> Result<(Space<f64>, MatrixWeightField<f64>), CliError> {
    let (w, _) = weight(l, g)?;
    let s = match exponent(l, g)? {
        Exp::Constant(p) => Space::weighted(&w, p),
        Exp::Field(pf) => Space::weighted_variable(&w, &pf),
    }
    .context(|| "space".into())?;
    let s = match measure(l, g)? {
        Some(mu) => s.with_measure(mu).context(|| "measure".into())?,
        None => s,
    };
    Ok((s, w))
}

fn family(l: &LoadedScenario, g: Grid64) -> Result<FunctionFamily<f64>, CliError> {
    let spec = l.scenario.family.as_ref().ok_or_else(|| CliError::schema(None, "family", "missing [family]"))?;
    let fam = match spec {
        FamilySpec::Bumps { d, count, centers, widths, amplitudes } => {
            let b = BumpSpec { count: *count, centers: (centers[0], centers[1]), widths: (widths[0], widths[1]), amplitudes: (amplitudes[0], amplitudes[1]), seed: l.scenario.seed };
            FunctionFamily::gaussian_bumps(g, *d, &b)
        }
        FamilySpec::Zero { d } => FunctionFamily::new(vec![SampledVectorField::zeros(g, *d)], "f ≡ 0"),
        FamilySpec::Files { paths } => {
            let members = paths
                .iter()
                .map(|p| {
                    let full = l.resolve(p);
                    load_field::<f64, SampledVectorField<f64>>(&full).context(|| format!("family file {}", full.display()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            FunctionFamily::new(members, format!("{} fields read from files", paths.len()))
        }
    };
    fam.context(|| "family".into())
}

fn ap_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (w, label) = t.record("weight", || weight(l, g))?;
    let p = match exponent(l, g)? {
        Exp::Constant(p) => p,
        Exp::Field(_) => return Err(CliError::schema(None, "exponent", "the A_p constant needs a constant exponent")),
    };
    let choice = l.scenario.ap_constant.clone().unwrap_or_default().cubes;
    let top = g.log2_points();
    let est = t.record("ap-constant", || -> Result<_, CliError> {
        let cubes = match choice {
            CubeChoice::Default => CubeFamily::default_for(&g),
            CubeChoice::Dyadic => CubeFamily::dyadic(&g, 0..=top).context(|| "cubes".into())?,
            CubeChoice::OriginCentered => CubeFamily::origin_centered(&g, 1..top).context(|| "cubes".into())?,
            CubeChoice::Dense if w.dim() == 1 => {
                let omega = ScalarWeightField::new(g, w.values().iter().map(|m| m.matrix()[(0, 0)].re).collect()).context(|| "weight".into())?;
                return scalar_ap_dense_scan(&omega, p, 1).context(|| "A_p constant".into());
            }
            CubeChoice::Dense => CubeFamily::dense_scan(&g, 1, g.points_per_axis()).context(|| "cubes".into())?,
        };
        ap_constant_detailed(&w, p, &cubes).context(|| "A_p constant".into())
    })?;
    Ok(Outputs::ApConstant(ApConstantOutput {
        p,
        weight: label,
        value: est.value,
        argmax: CubeRecord { lo: est.argmax.lo, side: est.argmax.side },
        cubes: est.cubes,
        cube_family: est.family,
    }))
}

fn john_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let params = l.scenario.john.clone().unwrap_or_default();
    let (rho, label): (Arc<dyn Norm<f64>>, String) = match &params.norm {
        NormSpec::Lq { d, q } => (Arc::new(LqNorm { dim: *d, q: *q }), format!("l^{q} on C^{d}")),
        NormSpec::Linf { d } => (Arc::new(LinfNorm { dim: *d }), format!("l^inf on C^{d}")),
        NormSpec::Matrix { rows } => {
            let d = rows.len();
            if rows.iter().any(|r| r.len() != d) {
                return Err(CliError::schema(None, "john.norm.rows", "the matrix must be square"));
            }
            let a = CMatrix::from_fn(d, |i, j| C::new(rows[i][j], 0.0));
            (Arc::new(MatrixNorm::euclidean(a)), format!("|Av| with A = {rows:?}"))
        }
    };
    let d = rho.dim();
    let samples = params.samples.unwrap_or(200 * d);
    let seed = l.scenario.seed;
    let fit = t.record("fit", || john_ellipsoid(rho.as_ref(), d, samples, seed)).context(|| "John ellipsoid".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66);
    let vectors: Vec<Vec<C<f64>>> = (0..params.test_vectors).map(|_| (0..d).map(|_| C::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()).collect();
    let (lower, upper) = t.record("sandwich", || sandwich_ratios(rho.as_ref(), &fit.w, &vectors));
    let w = (0..d).map(|i| (0..d).map(|j| [fit.w.matrix()[(i, j)].re, fit.w.matrix()[(i, j)].im]).collect()).collect();
    Ok(Outputs::John(JohnOutput {
        norm: label,
        d,
        sphere_samples: samples,
        w,
        scale: fit.scale,
        gap: fit.gap,
        iterations: fit.iterations,
        augmentation_rounds: fit.augmentation_rounds,
        fitted_samples: fit.samples,
        upper_ratio: fit.upper_ratio,
        test_vectors: params.test_vectors,
        lower,
        upper,
        delta: params.delta,
        pass: lower >= 1.0 && upper <= 1.0 + params.delta,
    }))
}

fn norm_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (space, _) = t.record("space", || space(l, g))?;
    let fam = t.record("family", || family(l, g))?;
    let members = t.record("norms", || {
        fam.members()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                Ok(MemberNorm {
                    member: i,
                    size: space.size(f).context(|| format!("size of member {i}"))?,
                    norm: space.norm(f).context(|| format!("norm of member {i}"))?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    Ok(Outputs::Norm(NormOutput { family: fam.description().to_string(), size_kind: space.size_kind().to_string(), members }))
}

fn moduli_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (space, _) = t.record("space", || space(l, g))?;
    let fam = t.record("family", || family(l, g))?;
    let notion = l.scenario.moduli.clone().unwrap_or_default().notion;
    let report = t.record("moduli", || moduli_report(&fam, &space, notion)).context(|| "moduli".into())?;
    Ok(Outputs::Moduli(report))
}

fn net_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (space, _) = t.record("space", || space(l, g))?;
    let fam = t.record("family", || family(l, g))?;
    let params = l.scenario.net.clone().unwrap_or_default();
    let mut nets = Vec::new();
    for &eps in &params.epsilons {
        let net = t.record(&format!("net eps={eps}"), || match params.method {
            NetMethod::Dyadic => {
                let opts = DyadicOptions { route: params.route, scheme: params.scheme.map(|[m, t]| (m, t)) };
                build_net_dyadic(&fam, &space, eps, &opts)
            }
            NetMethod::Average => build_net_average(&fam, &space, eps),
        });
        nets.push(net.context(|| format!("net at ε = {eps}"))?);
    }
    Ok(Outputs::Net(NetOutput { family: fam.description().to_string(), members: fam.len(), nets }))
}

fn certify_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (space, _) = t.record("space", || space(l, g))?;
    let fam = t.record("family", || family(l, g))?;
    let params = l.scenario.certify.clone().unwrap_or_default();
    let (centers, label) = match (&params.center_files, &params.center_members) {
        (Some(files), _) => {
            let c = files
                .iter()
                .map(|p| {
                    let full = l.resolve(p);
                    load_field::<f64, SampledVectorField<f64>>(&full).context(|| format!("center file {}", full.display()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (c, format!("{} centers read from files", files.len()))
        }
        (None, Some(idx)) => {
            if let Some(bad) = idx.iter().find(|&&i| i >= fam.len()) {
                return Err(CliError::schema(None, "certify.center_members", format!("member {bad} out of range (family has {})", fam.len())));
            }
            (idx.iter().map(|&i| fam.members()[i].clone()).collect(), format!("members {idx:?}"))
        }
        (None, None) => (fam.members().to_vec(), "every member".to_string()),
    };
    let cert = t.record("certify", || certify_net(&fam, &centers, &space, params.epsilon, params.c_net)).context(|| "certificate".into())?;
    Ok(Outputs::Certify(CertifyOutput { family: fam.description().to_string(), centers: label, certificate: cert }))
}

fn necessity_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    let g = grid(l)?;
    let (space, _) = t.record("space", || space(l, g))?;
    let fam = t.record("family", || family(l, g))?;
    let params = l.scenario.necessity.clone().unwrap_or_default();
    let report = t.record("necessity", || necessity_check(&fam, &space, &params.epsilons, params.cap)).context(|| "necessity check".into())?;
    Ok(Outputs::Necessity(NecessityOutput { family: fam.description().to_string(), members: fam.len(), report }))
}

pub fn run_task(l: &LoadedScenario, t: &mut Timings) -> Result<Outputs, CliError> {
    match l.scenario.task {
        Task::ApConstant => ap_task(l, t),
        Task::John => john_task(l, t),
        Task::Norm => norm_task(l, t),
        Task::Moduli => moduli_task(l, t),
        Task::Net => net_task(l, t),
        Task::Certify => certify_task(l, t),
        Task::Necessity => necessity_task(l, t),
        Task::VerifyLemmas => {
            let counts = l.scenario.verify.clone().unwrap_or_default();
            Ok(Outputs::VerifyLemmas(t.record("suites", || verify_lemmas(l.scenario.seed, &counts))))
        }
    }
}
