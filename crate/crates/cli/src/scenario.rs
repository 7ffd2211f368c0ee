//! Scenario files: TOML documents validated against the schema below.
//!
//! ```toml
//! task = "net"            # ap-constant | john | norm | moduli | net | certify | necessity | verify-lemmas
//! seed = 7                # every random choice derives from this
//!
//! [grid]
//! n = 1                   # 1 or 2
//! L = 8.0                 # box [-L, L)^n
//! N = 4096                # points per axis, a power of two
//!
//! [weight]                # kind = identity | power | rotated-power | file
//! kind = "rotated-power"
//! alphas = [0.5, 0.3333333333333333]
//! rate = 1.0
//!
//! [measure]               # kind = lebesgue | quadratic (u = 1 + c|x|²) | file
//! kind = "lebesgue"
//!
//! [exponent]              # kind = constant | file
//! kind = "constant"
//! p = 2.0
//!
//! [family]                # kind = bumps | zero | files
//! kind = "bumps"
//! d = 2
//! count = 40
//!
//! [net]
//! epsilons = [0.1, 0.05]
//! method = "dyadic"       # dyadic | average
//! ```
//!
//! Task tables: `[ap_constant]` (`cubes`), `[john]` (`norm`, `samples`,
//! `test_vectors`, `delta`), `[moduli]` (`notion`), `[net]` (`epsilons`,
//! `method`, `route`, `scheme`), `[certify]` (`epsilon`, `c_net`,
//! `center_files`, `center_members`), `[necessity]` (`epsilons`, `cap`),
//! `[verify]` (per-suite instance counts). Absent task tables take their
//! defaults. Relative file paths are resolved against the scenario's
//! directory. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use matweight::compactness::{DyadicRoute, Equicontinuity};
use matweight::verify::VerifyCounts;
use matweight::Grid64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    ApConstant,
    John,
    Norm,
    Moduli,
    Net,
    Certify,
    Necessity,
    VerifyLemmas,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::ApConstant => "ap-constant",
            Task::John => "john",
            Task::Norm => "norm",
            Task::Moduli => "moduli",
            Task::Net => "net",
            Task::Certify => "certify",
            Task::Necessity => "necessity",
            Task::VerifyLemmas => "verify-lemmas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `W ≡ I` on `C^d`.
    Identity { d: usize },
    /// `diag(|x|^{α_1}, …, |x|^{α_d})`.
    Power { alphas: Vec<f64> },
    /// The power weight conjugated by a rotation of angle `rate·(x_1 + … + x_n)`.
    RotatedPower { alphas: Vec<f64>, rate: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    /// `u(x) = 1 + c|x|²`.
    Quadratic { c: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    Constant { p: f64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Gaussian bumps; the generator seed is the scenario seed.
    Bumps {
        d: usize,
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_centers")]
        centers: [f64; 2],
        #[serde(default = "default_widths")]
        widths: [f64; 2],
        #[serde(default = "default_amplitudes")]
        amplitudes: [f64; 2],
    },
    /// The single field `f ≡ 0`.
    Zero { d: usize },
    Files { paths: Vec<PathBuf> },
}

fn default_count() -> usize {
    40
}
fn default_centers() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_widths() -> [f64; 2] {
    [0.5, 1.0]
}
fn default_amplitudes() -> [f64; 2] {
    [0.5, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubeChoice {
    /// Dyadic cubes of every generation plus origin-centered cubes.
    #[default]
    Default,
    Dyadic,
    OriginCentered,
    /// Every cube of whole cells (one-dimensional grids).
    Dense,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApConstantParams {
    pub cubes: CubeChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormSpec {
    Lq { d: usize, q: f64 },
    Linf { d: usize },
    /// `|A v|` with a real square matrix `A` given by rows.
    Matrix { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JohnParams {
    pub norm: NormSpec,
    /// Sphere samples; `200·d` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default = "default_test_vectors")]
    pub test_vectors: usize,
    /// Allowed excess `δ` in `|Wv| ≤ √d (1+δ) ρ(v)`.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_test_vectors() -> usize {
    1000
}
fn default_delta() -> f64 {
    0.05
}

impl Default for JohnParams {
    fn default() -> Self {
        Self { norm: NormSpec::Lq { d: 3, q: 1.5 }, samples: None, test_vectors: default_test_vectors(), delta: default_delta() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModuliParams {
    pub notion: Equicontinuity,
}

impl Default for ModuliParams {
    fn default() -> Self {
        Self { notion: Equicontinuity::Translation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetMethod {
    #[default]
    Dyadic,
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetParams {
    pub epsilons: Vec<f64>,
    pub method: NetMethod,
    pub route: DyadicRoute,
    /// Fixed `[m, t]` for the dyadic construction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<[i32; 2]>,
}

impl Default for NetParams {
    fn default() -> Self {
        Self { epsilons: vec![0.1], method: NetMethod::Dyadic, route: DyadicRoute::Translation, scheme: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyParams {
    pub epsilon: f64,
    pub c_net: f64,
    /// Centers read from vector field files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_files: Option<Vec<PathBuf>>,
    /// Centers taken from the family by index; all members when neither
    /// this nor `center_files` is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_members: Option<Vec<usize>>,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self { epsilon: 0.1, c_net: 1.0, center_files: None, center_members: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NecessityParams {
    pub epsilons: Vec<f64>,
    /// Largest net size accepted before the family is declared not totally bounded.
    pub cap: usize,
}

impl Default for NecessityParams {
    fn default() -> Self {
        Self { epsilons: vec![0.2, 0.1, 0.05], cap: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ap_constant: Option<ApConstantParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub john: Option<JohnParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moduli: Option<ModuliParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<NetParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub necessity: Option<NecessityParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyCounts>,
}

impl Scenario {
    /// The built-in scenario behind each shorthand subcommand: the 40-bump
    /// family in `L²(W)` for the rotated power weight `α = (1/2, 1/3)` on
    /// `[-8, 8)` with `N = 4096`.
    pub fn shorthand(task: Task) -> Self {
        let mut s = Scenario {
            task,
            seed: 7,
            grid: Some(GridSpec { n: 1, half_width: 8.0, points: 4096 }),
            weight: Some(WeightSpec::RotatedPower { alphas: vec![0.5, 1.0 / 3.0], rate: 1.0 }),
            measure: Some(MeasureSpec::Lebesgue),
            exponent: Some(ExponentSpec::Constant { p: 2.0 }),
            family: Some(FamilySpec::Bumps { d: 2, count: 40, centers: default_centers(), widths: default_widths(), amplitudes: default_amplitudes() }),
            ap_constant: None,
            john: None,
            moduli: None,
            net: None,
            certify: None,
            necessity: None,
            verify: None,
        };
        match task {
            Task::John => {
                s.grid = None;
                s.weight = None;
                s.measure = None;
                s.exponent = None;
                s.family = None;
                s.john = Some(JohnParams::default());
            }
            Task::VerifyLemmas => {
                s.grid = None;
                s.weight = None;
                s.measure = None;
                s.exponent = None;
                s.family = None;
                s.verify = Some(VerifyCounts::default());
            }
            Task::ApConstant => s.family = None,
            Task::Net => s.net = Some(NetParams { epsilons: vec![0.1, 0.05], ..NetParams::default() }),
            _ => {}
        }
        s
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }
}

/// 1-based line of byte offset `at`.
fn line_of(text: &str, at: usize) -> usize {
    text[..at.min(text.len())].matches('\n').count() + 1
}

/// Dotted path of the key defined on `line`: the enclosing table header
/// followed by the key before `=`.
fn field_at(text: &str, line: usize) -> String {
    let mut table = String::new();
    let mut key = String::new();
    for (i, l) in text.lines().enumerate().take(line) {
        let t = l.trim();
        if t.starts_with('[') && t.ends_with(']') {
            table = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            key.clear();
        } else if i + 1 == line {
            if let Some((k, _)) = t.split_once('=') {
                key = k.trim().to_string();
            }
        }
    }
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}

/// Line of `key` inside table `table` (top level when empty), or of the
/// table header when the key is absent.
fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (i, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.starts_with('[') && t.ends_with(']') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table {
                header = Some(i + 1);
            }
            continue;
        }
        if current == table {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// Backticked name in a serde message such as "unknown field `foo`".
fn quoted_name(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    toml::from_str::<Scenario>(text).map_err(|e| {
        let message = e.message().trim().to_string();
        let line = e.span().map(|s| line_of(text, s.start));
        let mut field = line.map(|l| field_at(text, l)).unwrap_or_default();
        if message.starts_with("unknown field") || message.starts_with("missing field") {
            if let Some(name) = quoted_name(&message) {
                if field.is_empty() || !field.ends_with(name) {
                    let table = field.split('.').next().unwrap_or_default().to_string();
                    field = if table.is_empty() || table == name { name.to_string() } else { format!("{table}.{name}") };
                }
            }
        }
        CliError::schema(line, if field.is_empty() { "<document>".to_string() } else { field }, message)
    })
}

/// A scenario with its source text (for diagnostics) and the directory
/// relative paths are resolved against.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub text: String,
    pub base: PathBuf,
}

impl LoadedScenario {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let scenario = parse_scenario(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { scenario, text, base })
    }

    pub fn from_scenario(scenario: Scenario) -> Self {
        let text = scenario.to_toml();
        Self { scenario, text, base: PathBuf::from(".") }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn err(&self, table: &str, key: &str, message: impl Into<String>) -> CliError {
        let field = if table.is_empty() { key.to_string() } else if key.is_empty() { table.to_string() } else { format!("{table}.{key}") };
        CliError::schema(locate(&self.text, table, key), field, message)
    }

    /// Task requirements, grid constraints and file existence.
    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.scenario;
        let needs_space = matches!(s.task, Task::Norm | Task::Moduli | Task::Net | Task::Certify | Task::Necessity);
        if needs_space || s.task == Task::ApConstant {
            for (name, present) in [("grid", s.grid.is_some()), ("weight", s.weight.is_some()), ("exponent", s.exponent.is_some())] {
                if !present {
                    return Err(self.err(name, "", format!("task `{}` needs a [{name}] table", s.task.name())));
                }
            }
        }
        if needs_space && s.family.is_none() {
            return Err(self.err("family", "", format!("task `{}` needs a [family] table", s.task.name())));
        }
        if let Some(g) = &s.grid {
            Grid64::new(g.n, g.half_width, g.points).map_err(|e| self.err("grid", "", e.to_string()))?;
        }
        let mut files: Vec<(&str, &str, &Path)> = Vec::new();
        if let Some(WeightSpec::File { path }) = &s.weight {
            files.push(("weight", "path", path));
        }
        if let Some(MeasureSpec::File { path }) = &s.measure {
            files.push(("measure", "path", path));
        }
        if let Some(ExponentSpec::File { path }) = &s.exponent {
            files.push(("exponent", "path", path));
        }
        if let Some(FamilySpec::Files { paths }) = &s.family {
            if paths.is_empty() {
                return Err(self.err("family", "paths", "the file list is empty"));
            }
            files.extend(paths.iter().map(|p| ("family", "paths", p.as_path())));
        }
        if let Some(CertifyParams { center_files: Some(paths), .. }) = &s.certify {
            files.extend(paths.iter().map(|p| ("certify", "center_files", p.as_path())));
        }
        for (table, key, p) in files {
            if !self.resolve(p).is_file() {
                return Err(self.err(table, key, format!("file {} does not exist", self.resolve(p).display())));
            }
        }
        let positive = |v: &[f64]| !v.is_empty() && v.iter().all(|e| *e > 0.0 && e.is_finite());
        if let Some(n) = &s.net {
            if !positive(&n.epsilons) {
                return Err(self.err("net", "epsilons", "need at least one positive ε"));
            }
        }
        if let Some(n) = &s.necessity {
            if !positive(&n.epsilons) {
                return Err(self.err("necessity", "epsilons", "need at least one positive ε"));
            }
        }
        if let Some(c) = &s.certify {
            if c.center_files.is_some() && c.center_members.is_some() {
                return Err(self.err("certify", "center_files", "give either center_files or center_members"));
            }
            if !(c.epsilon > 0.0) || !(c.c_net >= 1.0) {
                return Err(self.err("certify", "epsilon", "need ε > 0 and c_net ≥ 1"));
            }
        }
        Ok(())
    }
}
