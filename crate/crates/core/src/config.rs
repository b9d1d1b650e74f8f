//! Run configuration: strict JSON parsing, field-level validation and
//! construction of the reduced problem.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coho::{
    h0_closed_form, h0_profile, probe_grid, validate_profile, EndpointKind, FourierSeries,
    MetricProfile, OrbitSpace, ProfileFamily, TabulatedProfile,
};
use crate::error::Error;
use crate::homogeneous::{check_metric_invariance, connection_supported, InvariantMetric};
use crate::lie::{
    reductive_split, validate_split, validate_structure, LieAlgebraSpec, ReductiveSplit,
};
use crate::report::ValidationReport;
use crate::solver::{Problem, ProblemKind, SolverConfig, MIN_CIRCLE_NODES, MIN_INTERVAL_NODES};

/// Relative agreement required between the integrated and closed-form `h0`.
pub const H0_AGREEMENT_TOL: f64 = 1e-8;
/// Tolerance on odd derivatives of initial data at singular endpoints.
pub const PARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub problem: ProblemSection,
    pub algebra: AlgebraConfig,
    /// Basis of the isotropy subalgebra, as vectors in the algebra.
    #[serde(default)]
    pub isotropy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileConfig>,
    pub initial: InitialConfig,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_hooks: Option<TestHooks>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindConfig {
    Homogeneous,
    Interval,
    Circle,
}

impl From<KindConfig> for ProblemKind {
    fn from(k: KindConfig) -> Self {
        match k {
            KindConfig::Homogeneous => ProblemKind::Homogeneous,
            KindConfig::Interval => ProblemKind::Interval,
            KindConfig::Circle => ProblemKind::Circle,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: KindConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraConfig {
    Su2,
    Abelian {
        dim: usize,
    },
    Su2PlusAbelian {
        abelian_dim: usize,
    },
    /// Brackets as `[i, j, k, value]` with zero-based indices meaning
    /// `[e_i, e_j]` has `value` along `e_k`; antisymmetric partners are implied.
    Explicit {
        dim: usize,
        brackets: Vec<(usize, usize, usize, f64)>,
        q: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub gram: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointConfig {
    Singular,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrbitSpaceConfig {
    Circle {
        length: f64,
    },
    Interval {
        length: f64,
        endpoints: [EndpointConfig; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    #[serde(default)]
    pub a0: f64,
    /// `(a_k, b_k)` for `k = 1, 2, ...`.
    #[serde(default)]
    pub modes: Vec<(f64, f64)>,
}

impl FourierConfig {
    fn series(&self) -> FourierSeries {
        FourierSeries::new(self.a0, self.modes.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    RoundS3T2,
    /// `f_i(r)² = exp(series_i)` on the diagonal, abelian fibers.
    WarpedTorus {
        orbit_space: OrbitSpaceConfig,
        log_diagonal: Vec<FourierConfig>,
    },
    /// `f_i(r)² = exp(series_i)` on the diagonal, any fibers.
    BergerCircle {
        orbit_space: OrbitSpaceConfig,
        log_diagonal: Vec<FourierConfig>,
    },
    /// CSV with a header row: `r`, the upper triangle of `g_r` row by row,
    /// then the upper triangle of `g_r'`. Relative paths resolve against the
    /// config file's directory.
    Tabulated {
        orbit_space: OrbitSpaceConfig,
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ComponentConfig {
    Constant(f64),
    /// Coefficients of `Σ a_k r^k`.
    Polynomial(Vec<f64>),
    Fourier(FourierConfig),
    /// Fourier series with `modes` modes whose coefficients are drawn
    /// uniformly from `[-amplitude, amplitude] / k²` using the run seed.
    RandomFourier {
        modes: usize,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub c: f64,
    pub v: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Grid nodes (ignored for homogeneous problems).
    #[serde(rename = "N", default)]
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl_guard: f64,
}

fn default_cfl() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_diagnostics_every")]
    pub diagnostics_every: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_snapshot_every() -> usize {
    1000
}
fn default_diagnostics_every() -> usize {
    10
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            snapshot_every: default_snapshot_every(),
            diagnostics_every: default_diagnostics_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestHooks {
    /// Added to `ċ` on circle runs. Only for exercising the pressure check.
    #[serde(default)]
    pub dcdt_offset: f64,
}

/// One violated constraint, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Unreadable file, malformed JSON or unknown keys.
    Parse(String),
    /// Well-formed but violating constraints.
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Invalid(errs) => {
                write!(f, "invalid configuration:")?;
                for e in errs {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// A parsed config plus the directory used to resolve relative paths.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, base_dir)
}

pub fn parse_config_str(text: &str, base_dir: PathBuf) -> Result<LoadedConfig, ConfigError> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let errors = check_fields(&config);
    if errors.is_empty() {
        Ok(LoadedConfig { config, base_dir })
    } else {
        Err(ConfigError::Invalid(errors))
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> FieldError {
    FieldError {
        path: path.into(),
        message: message.into(),
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn check_fields(c: &RunConfig) -> Vec<FieldError> {
    let mut e = Vec::new();
    let kind = c.problem.kind;
    if !positive(c.solver.dt) {
        e.push(err("solver.dt", "must be positive"));
    }
    if !positive(c.solver.t_end) {
        e.push(err("solver.t_end", "must be positive"));
    }
    if !positive(c.solver.cfl_guard) {
        e.push(err("solver.cfl_guard", "must be positive"));
    }
    match kind {
        KindConfig::Circle => {
            if c.solver.n < MIN_CIRCLE_NODES || !c.solver.n.is_multiple_of(2) {
                e.push(err(
                    "solver.N",
                    format!(
                        "must be even and at least {MIN_CIRCLE_NODES} for a circle, got {}",
                        c.solver.n
                    ),
                ));
            }
        }
        KindConfig::Interval => {
            if c.solver.n < MIN_INTERVAL_NODES {
                e.push(err(
                    "solver.N",
                    format!(
                        "must be at least {MIN_INTERVAL_NODES} for an interval, got {}",
                        c.solver.n
                    ),
                ));
            }
        }
        KindConfig::Homogeneous => {}
    }
    if c.output.snapshot_every == 0 {
        e.push(err("output.snapshot_every", "must be positive"));
    }
    if c.output.diagnostics_every == 0 {
        e.push(err("output.diagnostics_every", "must be positive"));
    }
    match kind {
        KindConfig::Homogeneous => {
            if c.metric.is_none() {
                e.push(err("metric", "required for a homogeneous problem"));
            }
            if c.profile.is_some() {
                e.push(err("profile", "not allowed for a homogeneous problem"));
            }
            for (i, comp) in c.initial.v.iter().enumerate() {
                if !matches!(comp, ComponentConfig::Constant(_)) {
                    e.push(err(
                        format!("initial.v[{i}]"),
                        "must be a constant for a homogeneous problem",
                    ));
                }
            }
        }
        KindConfig::Interval | KindConfig::Circle => {
            if c.metric.is_some() {
                e.push(err("metric", "only allowed for a homogeneous problem"));
            }
            match &c.profile {
                None => e.push(err("profile", "required")),
                Some(p) => {
                    let os = match p {
                        ProfileConfig::RoundS3T2 => None,
                        ProfileConfig::WarpedTorus { orbit_space, .. }
                        | ProfileConfig::BergerCircle { orbit_space, .. }
                        | ProfileConfig::Tabulated { orbit_space, .. } => Some(orbit_space),
                    };
                    let is_circle = match os {
                        None => false,
                        Some(OrbitSpaceConfig::Circle { length })
                        | Some(OrbitSpaceConfig::Interval { length, .. }) => {
                            if !positive(*length) {
                                e.push(err("profile.orbit_space.length", "must be positive"));
                            }
                            matches!(os, Some(OrbitSpaceConfig::Circle { .. }))
                        }
                    };
                    if is_circle != (kind == KindConfig::Circle) {
                        e.push(err(
                            "profile.orbit_space",
                            format!("does not match problem.kind = {:?}", kind).to_lowercase(),
                        ));
                    }
                }
            }
        }
    }
    if kind != KindConfig::Circle && c.initial.c != 0.0 {
        e.push(err(
            "initial.c",
            "the horizontal amplitude vanishes unless the orbit space is a circle",
        ));
    }
    if !c.initial.c.is_finite() {
        e.push(err("initial.c", "must be finite"));
    }
    for (i, comp) in c.initial.v.iter().enumerate() {
        let finite = match comp {
            ComponentConfig::Constant(x) => x.is_finite(),
            ComponentConfig::Polynomial(a) => a.iter().all(|x| x.is_finite()),
            ComponentConfig::Fourier(f) => {
                f.a0.is_finite() && f.modes.iter().all(|(a, b)| a.is_finite() && b.is_finite())
            }
            ComponentConfig::RandomFourier { amplitude, .. } => amplitude.is_finite(),
        };
        if !finite {
            e.push(err(
                format!("initial.v[{i}]"),
                "coefficients must be finite",
            ));
        }
    }
    if c.test_hooks.as_ref().is_some_and(|h| h.dcdt_offset != 0.0) && kind != KindConfig::Circle {
        e.push(err(
            "test_hooks.dcdt_offset",
            "only applies to circle problems",
        ));
    }
    e
}

impl RunConfig {
    pub fn kind(&self) -> ProblemKind {
        self.problem.kind.into()
    }

    /// SHA-256 of the canonical JSON form (sorted keys, floats as `{:.16e}`).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut canon = String::new();
        canonical(&value, &mut canon);
        hex::encode(Sha256::digest(canon.as_bytes()))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = SolverConfig::new(self.solver.dt, self.solver.t_end);
        s.cfl_guard = self.solver.cfl_guard;
        s.snapshot_every = self.output.snapshot_every;
        s.diagnostics_every = self.output.diagnostics_every;
        s.dcdt_offset = self.test_hooks.as_ref().map_or(0.0, |h| h.dcdt_offset);
        s
    }
}

fn canonical(v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canonical(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                canonical(&m[k], out);
            }
            out.push('}');
        }
    }
}

fn matrix(rows: &[Vec<f64>], path: &str) -> Result<DMatrix<f64>, FieldError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(err(path, "must be a square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_algebra(c: &AlgebraConfig) -> Result<LieAlgebraSpec, FieldError> {
    match c {
        AlgebraConfig::Su2 => Ok(LieAlgebraSpec::su2()),
        AlgebraConfig::Abelian { dim } if *dim >= 1 => Ok(LieAlgebraSpec::abelian(*dim)),
        AlgebraConfig::Abelian { .. } => Err(err("algebra.dim", "must be at least 1")),
        AlgebraConfig::Su2PlusAbelian { abelian_dim } => {
            Ok(LieAlgebraSpec::su2_plus_abelian(*abelian_dim))
        }
        AlgebraConfig::Explicit { dim, brackets, q } => {
            let q = matrix(q, "algebra.q")?;
            LieAlgebraSpec::from_triplets(*dim, brackets, q)
                .map_err(|e| err("algebra", e.to_string()))
        }
    }
}

fn build_split(c: &RunConfig, alg: &LieAlgebraSpec) -> Result<ReductiveSplit, FieldError> {
    let basis: Vec<DVector<f64>> = c
        .isotropy
        .iter()
        .map(|v| DVector::from_column_slice(v))
        .collect();
    if basis.iter().any(|b| b.len() != alg.dim()) {
        return Err(err(
            "isotropy",
            format!("vectors must have length {}", alg.dim()),
        ));
    }
    reductive_split(alg, &basis).map_err(|e| err("isotropy", e.to_string()))
}

fn orbit_space(c: &OrbitSpaceConfig) -> OrbitSpace {
    let kind = |e: EndpointConfig| match e {
        EndpointConfig::Singular => EndpointKind::Singular,
        EndpointConfig::Boundary => EndpointKind::Boundary,
    };
    match c {
        OrbitSpaceConfig::Circle { length } => OrbitSpace::Circle { length: *length },
        OrbitSpaceConfig::Interval { length, endpoints } => OrbitSpace::Interval {
            length: *length,
            endpoints: [kind(endpoints[0]), kind(endpoints[1])],
        },
    }
}

fn read_tabulated(path: &Path, dim: usize, periodic: bool) -> Result<TabulatedProfile, FieldError> {
    let p = "profile.path";
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(p, format!("{}: {e}", path.display())))?;
    let tri = dim * (dim + 1) / 2;
    let expected = 1 + 2 * tri;
    let headers = rdr.headers().map_err(|e| err(p, e.to_string()))?.clone();
    if headers.len() != expected {
        return Err(err(
            p,
            format!("expected {expected} columns, header has {}", headers.len()),
        ));
    }
    let (mut rs, mut gs, mut gps) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(p, e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(p, format!("row {}: {e}", line + 2)))?;
        if vals.len() != expected {
            return Err(err(
                p,
                format!("row {} has {} columns", line + 2, vals.len()),
            ));
        }
        let unpack = |off: usize| {
            let mut m = DMatrix::zeros(dim, dim);
            let mut k = off;
            for i in 0..dim {
                for j in i..dim {
                    m[(i, j)] = vals[k];
                    m[(j, i)] = vals[k];
                    k += 1;
                }
            }
            m
        };
        rs.push(vals[0]);
        gs.push(unpack(1));
        gps.push(unpack(1 + tri));
    }
    TabulatedProfile::new(rs, gs, gps, periodic).map_err(|e| err(p, e.to_string()))
}

fn build_profile(
    loaded: &LoadedConfig,
    split: ReductiveSplit,
) -> Result<MetricProfile, FieldError> {
    let c = &loaded.config;
    let profile = c
        .profile
        .as_ref()
        .ok_or_else(|| err("profile", "required"))?;
    let wrap = |e: Error| err("profile", e.to_string());
    match profile {
        ProfileConfig::RoundS3T2 => MetricProfile::new(
            split,
            OrbitSpace::Interval {
                length: std::f64::consts::FRAC_PI_2,
                endpoints: [EndpointKind::Singular; 2],
            },
            ProfileFamily::RoundS3T2,
        )
        .map_err(wrap),
        ProfileConfig::WarpedTorus {
            orbit_space: os,
            log_diagonal,
        } => MetricProfile::new(
            split,
            orbit_space(os),
            ProfileFamily::WarpedTorus(log_diagonal.iter().map(FourierConfig::series).collect()),
        )
        .map_err(wrap),
        ProfileConfig::BergerCircle {
            orbit_space: os,
            log_diagonal,
        } => MetricProfile::new(
            split,
            orbit_space(os),
            ProfileFamily::BergerCircle(log_diagonal.iter().map(FourierConfig::series).collect()),
        )
        .map_err(wrap),
        ProfileConfig::Tabulated {
            orbit_space: os,
            path,
        } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                loaded.base_dir.join(path)
            };
            let os = orbit_space(os);
            let table = read_tabulated(&full, split.dim_m(), os.is_circle())?;
            MetricProfile::new(split, os, ProfileFamily::Tabulated(table)).map_err(wrap)
        }
    }
}

/// An initial-data component as a function of `r` with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
enum Component {
    Polynomial(Vec<f64>),
    Fourier(FourierSeries, f64),
}

impl Component {
    fn derivative(&self, r: f64, n: u32) -> f64 {
        match self {
            Component::Polynomial(a) => {
                let mut s = 0.0;
                for (k, &ak) in a.iter().enumerate().skip(n as usize) {
                    let falling: f64 = (0..n).map(|m| (k as u32 - m) as f64).product();
                    s += ak * falling * r.powi((k as u32 - n) as i32);
                }
                s
            }
            Component::Fourier(f, length) => f.derivative(r, *length, n),
        }
    }

    fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }
}

fn components(c: &RunConfig, length: f64) -> Vec<Component> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    c.initial
        .v
        .iter()
        .map(|comp| match comp {
            ComponentConfig::Constant(x) => Component::Polynomial(vec![*x]),
            ComponentConfig::Polynomial(a) => Component::Polynomial(a.clone()),
            ComponentConfig::Fourier(f) => Component::Fourier(f.series(), length),
            ComponentConfig::RandomFourier { modes, amplitude } => {
                let a0 = rng.gen_range(-1.0..=1.0) * amplitude;
                let m = (1..=*modes)
                    .map(|k| {
                        let s = amplitude / (k * k) as f64;
                        (rng.gen_range(-1.0..=1.0) * s, rng.gen_range(-1.0..=1.0) * s)
                    })
                    .collect();
                Component::Fourier(FourierSeries::new(a0, m), length)
            }
        })
        .collect()
}

/// Everything needed to run: the discretized problem, solver settings and
/// the validation report gathered while building them.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: Problem,
    pub solver: SolverConfig,
    pub report: ValidationReport,
}

/// Structural, metric, profile and initial-data checks without integrating.
pub fn validate_config(loaded: &LoadedConfig) -> Result<ValidationReport, FieldError> {
    build(loaded).map(|p| p.report)
}

/// Builds the problem and the full validation report.
pub fn build(loaded: &LoadedConfig) -> Result<Prepared, FieldError> {
    let c = &loaded.config;
    let alg = build_algebra(&c.algebra)?;
    let mut report = ValidationReport::new();
    report.extend_prefixed("algebra", validate_structure(&alg));
    if !report.passed() {
        return Err(first_failure(&report, "algebra"));
    }
    let split = build_split(c, &alg)?;
    report.extend_prefixed("split", validate_split(&split));
    let supported = connection_supported(&split);
    report.record_outcome(
        "split.connection_supported",
        supported.is_ok(),
        supported.err().map(|e| e.to_string()).unwrap_or_default(),
    );
    if !report.passed() {
        return Err(first_failure(&report, "isotropy"));
    }
    let n0 = split.dim_m0();
    if c.initial.v.len() != n0 {
        return Err(err(
            "initial.v",
            format!(
                "has {} components, the invariant vertical space has dimension {n0}",
                c.initial.v.len()
            ),
        ));
    }
    let solver = c.solver_config();
    let problem = match c.problem.kind {
        KindConfig::Homogeneous => {
            let m = c.metric.as_ref().ok_or_else(|| err("metric", "required"))?;
            let gram = matrix(&m.gram, "metric.gram")?;
            if gram.nrows() != split.dim_m() {
                return Err(err(
                    "metric.gram",
                    format!("must be {0}x{0}", split.dim_m()),
                ));
            }
            let metric =
                InvariantMetric::new(split, gram).map_err(|e| err("metric.gram", e.to_string()))?;
            report.extend_prefixed("metric", check_metric_invariance(&metric));
            if !report.passed() {
                return Err(first_failure(&report, "metric.gram"));
            }
            let x0: Vec<f64> = components(c, 1.0).iter().map(|k| k.value(0.0)).collect();
            Problem::homogeneous(metric, &x0).map_err(|e| err("initial.v", e.to_string()))?
        }
        KindConfig::Interval | KindConfig::Circle => {
            let profile = build_profile(loaded, split)?;
            report.extend_prefixed("profile", validate_profile(&profile));
            if profile.orbit_space().is_circle() && report.passed() {
                report.extend_prefixed("profile", h0_agreement(&profile));
            }
            let comps = components(c, profile.length());
            report.extend_prefixed("initial", initial_checks(&comps, &profile, &c.initial.v));
            if !report.passed() {
                return Ok(Prepared {
                    problem: placeholder_problem(),
                    solver,
                    report,
                });
            }
            let v0 = |r: f64| comps.iter().map(|k| k.value(r)).collect::<Vec<f64>>();
            let built = if profile.orbit_space().is_circle() {
                Problem::circle(profile, c.solver.n, c.initial.c, v0)
            } else {
                Problem::interval(profile, c.solver.n, v0)
            };
            built.map_err(|e| err("profile", e.to_string()))?
        }
    };
    Ok(Prepared {
        problem,
        solver,
        report,
    })
}

/// A trivial problem returned alongside a failing report; never integrated.
fn placeholder_problem() -> Problem {
    let split = reductive_split(&LieAlgebraSpec::abelian(1), &[]).expect("abelian split");
    let metric = InvariantMetric::new(split, DMatrix::identity(1, 1)).expect("identity metric");
    Problem::homogeneous(metric, &[0.0]).expect("trivial problem")
}

fn first_failure(report: &ValidationReport, path: &str) -> FieldError {
    let f = report.failures().next().expect("a failed check");
    err(
        path,
        format!(
            "{} failed (residual {:.3e}) {}",
            f.name, f.residual, f.detail
        )
        .trim_end()
        .to_string(),
    )
}

/// Integrated `h0` against the closed form on the probe grid.
fn h0_agreement(profile: &MetricProfile) -> ValidationReport {
    let mut report = ValidationReport::new();
    let grid = probe_grid(profile, 64);
    let worst = h0_profile(profile, &grid).and_then(|ode| {
        grid.iter().zip(&ode).try_fold(0.0_f64, |m, (&r, &h)| {
            let exact = h0_closed_form(profile, r)?;
            Ok(m.max((h - exact).abs() / exact))
        })
    });
    match worst {
        Ok(w) => {
            report.record("h0_ode_vs_closed_form", w, H0_AGREEMENT_TOL);
        }
        Err(e) => {
            report.record_outcome("h0_ode_vs_closed_form", false, e.to_string());
        }
    }
    report
}

/// Evenness at singular endpoints and periodicity on a circle.
fn initial_checks(
    comps: &[Component],
    profile: &MetricProfile,
    raw: &[ComponentConfig],
) -> ValidationReport {
    let mut report = ValidationReport::new();
    let length = profile.length();
    for end in profile.orbit_space().singular_endpoints() {
        let mut worst = 0.0_f64;
        let mut which = None;
        for (i, k) in comps.iter().enumerate() {
            let scale = 1.0 + k.value(end).abs();
            for n in [1, 3] {
                let d = k.derivative(end, n).abs() / scale;
                if d > worst {
                    worst = d;
                    which = Some(i);
                }
            }
        }
        report
            .record(format!("parity@{end}"), worst, PARITY_TOL)
            .with_detail(
                which
                    .map(|i| format!("odd derivative of initial.v[{i}]"))
                    .unwrap_or_default(),
            );
    }
    if profile.orbit_space().is_circle() {
        let mut worst = 0.0_f64;
        for (k, cfg) in comps.iter().zip(raw) {
            if matches!(cfg, ComponentConfig::Polynomial(_)) {
                for n in 0..3 {
                    let scale = 1.0 + k.derivative(0.0, n).abs();
                    worst =
                        worst.max((k.derivative(0.0, n) - k.derivative(length, n)).abs() / scale);
                }
            }
        }
        report.record("periodicity", worst, PARITY_TOL);
    }
    report
}
