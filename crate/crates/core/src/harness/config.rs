//! Strict TOML experiment configuration.
//!
//! ```toml
//! kind = "compare"            # run | compare | lemma-check | blowup | scatter
//!
//! [grid]
//! n = 1                       # spatial dimension, 1 or 2
//! N = 1024                    # points per axis, power of two
//! L = 125.66370614359172      # box length per axis (default 40π)
//!
//! [problem]
//! epsilon = 1.0
//! lambda = -1.0
//! sigma = 1.0
//! E = [1.0]                   # one entry per axis (default [1] or [1, 0])
//! stark_on = true
//! [problem.hartree]           # optional
//! mu = 1.0
//! gamma = 0.5
//!
//! [initial_data]
//! kind = "gaussian"           # gaussian | gaussian_boosted | soliton_like | snapshot
//! amplitude = 1.0
//! width = 1.0
//! center = [0.0]
//! momentum = [0.0]
//! # path = "u0.nlsf"          # kind = "snapshot" only
//!
//! [scheme]
//! dt = 1e-3
//! T = 2.0
//! sample_every = 10           # steps between diagnostics records
//!
//! [outputs]
//! csv_path = "diagnostics.csv"
//! # snapshot_dir = "snapshots"
//! snapshot_every = 1          # records between written snapshots
//!
//! [guards]
//! boundary_mass_max = 1e-8
//! spectral_tail_max = 1e-8
//! grad_threshold_factor = 20.0
//!
//! [compare]
//! tolerance = 1e-5
//!
//! [lemma]
//! times = [0.25, 0.5, 1.0, 2.0]
//! samples = 16                # random (t, E) draws for the eikonal check
//! seed = 7
//! negative_control = false
//!
//! [scatter]
//! t_min = 1.0
//! min_samples = 5
//! ```
//!
//! Unknown keys are rejected with the full key path and, when one is close,
//! a suggested spelling.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::grid::Containment;
use crate::problem::{Hartree, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid value for `{name}`: {reason}")]
    Physical { name: String, reason: String },
}

impl ConfigError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    fn physical(name: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Physical {
            name: name.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Run,
    Compare,
    LemmaCheck,
    Blowup,
    Scatter,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Run,
        ExperimentKind::Compare,
        ExperimentKind::LemmaCheck,
        ExperimentKind::Blowup,
        ExperimentKind::Scatter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Run => "run",
            ExperimentKind::Compare => "compare",
            ExperimentKind::LemmaCheck => "lemma-check",
            ExperimentKind::Blowup => "blowup",
            ExperimentKind::Scatter => "scatter",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub n: usize,
    pub points: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Gaussian,
    GaussianBoosted,
    SolitonLike,
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataConfig {
    pub profile: Profile,
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub sample_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub csv_path: PathBuf,
    pub snapshot_dir: Option<PathBuf>,
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuardConfig {
    pub boundary_mass_max: f64,
    pub spectral_tail_max: f64,
    pub grad_threshold_factor: f64,
}

impl GuardConfig {
    pub fn containment(&self) -> Containment {
        Containment {
            boundary_mass_max: self.boundary_mass_max,
            spectral_tail_max: self.spectral_tail_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaConfig {
    pub times: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub negative_control: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterConfig {
    pub t_min: f64,
    pub min_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: GridConfig,
    pub problem: Problem,
    pub initial_data: InitialDataConfig,
    pub scheme: SchemeConfig,
    pub outputs: OutputConfig,
    pub guards: GuardConfig,
    pub compare: CompareConfig,
    pub lemma: LemmaConfig,
    pub scatter: ScatterConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::defaults(ExperimentKind::Run, 1)
    }
}

impl ExperimentConfig {
    /// Documented defaults in dimension `n`.
    pub fn defaults(kind: ExperimentKind, n: usize) -> ExperimentConfig {
        let mut field = vec![0.0; n];
        field[0] = 1.0;
        ExperimentConfig {
            kind,
            grid: GridConfig {
                n,
                points: 1024,
                length: 40.0 * PI,
            },
            problem: Problem {
                epsilon: 1.0,
                lambda: -1.0,
                sigma: 1.0,
                field,
                hartree: None,
                stark_on: true,
            },
            initial_data: InitialDataConfig {
                profile: Profile::Gaussian,
                amplitude: 1.0,
                width: 1.0,
                center: vec![0.0; n],
                momentum: vec![0.0; n],
            },
            scheme: SchemeConfig {
                dt: 1e-3,
                t_final: 2.0,
                sample_every: 10,
            },
            outputs: OutputConfig {
                csv_path: PathBuf::from("diagnostics.csv"),
                snapshot_dir: None,
                snapshot_every: 1,
            },
            guards: GuardConfig {
                boundary_mass_max: 1e-8,
                spectral_tail_max: 1e-8,
                grad_threshold_factor: 20.0,
            },
            compare: CompareConfig { tolerance: 1e-5 },
            lemma: LemmaConfig {
                times: vec![0.25, 0.5, 1.0, 2.0],
                samples: 16,
                seed: 7,
                negative_control: false,
            },
            scatter: ScatterConfig {
                t_min: 1.0,
                min_samples: 5,
            },
        }
    }

    /// Physical and structural checks on an assembled configuration.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.grid.n;
        if !(1..=2).contains(&n) {
            return Err(ConfigError::physical(
                "grid.n",
                format!("must be 1 or 2, got {n}"),
            ));
        }
        let pts = self.grid.points;
        if !(pts.is_power_of_two() && pts >= 8) {
            return Err(ConfigError::physical(
                "grid.N",
                format!("must be a power of two >= 8, got {pts}"),
            ));
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return Err(ConfigError::physical(
                "grid.L",
                format!("must be positive, got {}", self.grid.length),
            ));
        }
        if self.problem.field.len() != n {
            return Err(ConfigError::physical(
                "problem.E",
                format!("has {} entries but grid.n = {n}", self.problem.field.len()),
            ));
        }
        self.problem.validate().map_err(|e| match e {
            crate::Error::InvalidParameter { name, reason } => ConfigError::physical(name, reason),
            other => ConfigError::physical("problem", other.to_string()),
        })?;
        let id = &self.initial_data;
        if id.center.len() != n {
            return Err(ConfigError::physical(
                "initial_data.center",
                format!("needs {n} entries"),
            ));
        }
        if id.momentum.len() != n {
            return Err(ConfigError::physical(
                "initial_data.momentum",
                format!("needs {n} entries"),
            ));
        }
        if !(id.width > 0.0 && id.width.is_finite()) {
            return Err(ConfigError::physical(
                "initial_data.width",
                format!("must be positive, got {}", id.width),
            ));
        }
        if !id.amplitude.is_finite() {
            return Err(ConfigError::physical(
                "initial_data.amplitude",
                "must be finite",
            ));
        }
        let s = &self.scheme;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(ConfigError::physical(
                "scheme.dt",
                format!("must be positive, got {}", s.dt),
            ));
        }
        if !s.t_final.is_finite() {
            return Err(ConfigError::physical("scheme.T", "must be finite"));
        }
        if s.sample_every == 0 {
            return Err(ConfigError::physical(
                "scheme.sample_every",
                "must be at least 1",
            ));
        }
        if self.outputs.snapshot_every == 0 {
            return Err(ConfigError::physical(
                "outputs.snapshot_every",
                "must be at least 1",
            ));
        }
        let g = &self.guards;
        for (name, v) in [
            ("guards.boundary_mass_max", g.boundary_mass_max),
            ("guards.spectral_tail_max", g.spectral_tail_max),
            ("guards.grad_threshold_factor", g.grad_threshold_factor),
            ("compare.tolerance", self.compare.tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::physical(
                    name,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if self.lemma.times.iter().any(|t| !t.is_finite()) {
            return Err(ConfigError::physical(
                "lemma.times",
                "entries must be finite",
            ));
        }
        if !self.scatter.t_min.is_finite() {
            return Err(ConfigError::physical("scatter.t_min", "must be finite"));
        }
        Ok(())
    }
}

const TOP_KEYS: &[&str] = &[
    "kind",
    "grid",
    "problem",
    "initial_data",
    "scheme",
    "outputs",
    "guards",
    "compare",
    "lemma",
    "scatter",
];
const GRID_KEYS: &[&str] = &["n", "N", "L"];
const PROBLEM_KEYS: &[&str] = &["epsilon", "lambda", "sigma", "E", "stark_on", "hartree"];
const HARTREE_KEYS: &[&str] = &["mu", "gamma"];
const INITIAL_KEYS: &[&str] = &["kind", "amplitude", "width", "center", "momentum", "path"];
const SCHEME_KEYS: &[&str] = &["dt", "T", "sample_every"];
const OUTPUT_KEYS: &[&str] = &["csv_path", "snapshot_dir", "snapshot_every"];
const GUARD_KEYS: &[&str] = &[
    "boundary_mass_max",
    "spectral_tail_max",
    "grad_threshold_factor",
];
const COMPARE_KEYS: &[&str] = &["tolerance"];
const LEMMA_KEYS: &[&str] = &["times", "samples", "seed", "negative_control"];
const SCATTER_KEYS: &[&str] = &["t_min", "min_samples"];
const PROFILES: &[&str] = &["gaussian", "gaussian_boosted", "soliton_like", "snapshot"];

fn suggest<'a>(word: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .map(|c| (strsim::damerau_levenshtein(word, c), *c))
        .filter(|(d, c)| *d <= 2.max(c.len() / 3))
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c)
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

struct Section<'a> {
    path: String,
    table: &'a Table,
}

impl<'a> Section<'a> {
    fn new(path: String, table: &'a Table, allowed: &[&str]) -> Result<Self, ConfigError> {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                let message = match suggest(key, allowed) {
                    Some(s) => format!("unknown key `{key}`; did you mean `{s}`?"),
                    None => format!(
                        "unknown key `{key}`; expected one of {}",
                        allowed.join(", ")
                    ),
                };
                return Err(ConfigError::schema(join(&path, key), message));
            }
        }
        Ok(Section { path, table })
    }

    fn key(&self, k: &str) -> String {
        join(&self.path, k)
    }

    fn sub(&self, k: &str, allowed: &[&str]) -> Result<Option<Section<'a>>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Section::new(self.key(k), t, allowed).map(Some),
            Some(_) => Err(ConfigError::schema(self.key(k), "expected a table")),
        }
    }

    fn f64(&self, k: &str) -> Result<Option<f64>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(v) => as_f64(v)
                .map(Some)
                .ok_or_else(|| ConfigError::schema(self.key(k), "expected a number")),
        }
    }

    fn int(&self, k: &str) -> Result<Option<i64>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(ConfigError::schema(self.key(k), "expected an integer")),
        }
    }

    fn count(&self, k: &str) -> Result<Option<usize>, ConfigError> {
        match self.int(k)? {
            None => Ok(None),
            Some(i) if i >= 0 => Ok(Some(i as usize)),
            Some(i) => Err(ConfigError::physical(
                self.key(k),
                format!("must be non-negative, got {i}"),
            )),
        }
    }

    fn bool(&self, k: &str) -> Result<Option<bool>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(ConfigError::schema(self.key(k), "expected a boolean")),
        }
    }

    fn string(&self, k: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(ConfigError::schema(self.key(k), "expected a string")),
        }
    }

    fn list(&self, k: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    as_f64(v).ok_or_else(|| {
                        ConfigError::schema(format!("{}[{i}]", self.key(k)), "expected a number")
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(ConfigError::schema(
                self.key(k),
                "expected an array of numbers",
            )),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_kind(s: &str, path: &str) -> Result<ExperimentKind, ConfigError> {
    ExperimentKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| {
            let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            let message = match suggest(s, &names) {
                Some(c) => format!("unknown experiment kind `{s}`; did you mean `{c}`?"),
                None => format!(
                    "unknown experiment kind `{s}`; expected one of {}",
                    names.join(", ")
                ),
            };
            ConfigError::schema(path, message)
        })
}

/// Parses and validates a configuration; `kind` defaults to `run`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_as(text, None)
}

/// Parses a configuration for a subcommand. A missing `kind` takes the
/// subcommand's kind; a different explicit `kind` is an error.
pub fn parse_config_as(
    text: &str,
    expected: Option<ExperimentKind>,
) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let top = Section::new(String::new(), &table, TOP_KEYS)?;

    let kind = match top.string("kind")? {
        Some(s) => parse_kind(s, "kind")?,
        None => expected.unwrap_or(ExperimentKind::Run),
    };
    if let Some(e) = expected {
        if e != kind {
            return Err(ConfigError::schema(
                "kind",
                format!("configuration is for `{kind}` but `{e}` was requested"),
            ));
        }
    }

    let grid = top.sub("grid", GRID_KEYS)?;
    let n = match &grid {
        Some(g) => g.count("n")?.unwrap_or(1),
        None => 1,
    };
    if !(1..=2).contains(&n) {
        return Err(ConfigError::physical(
            "grid.n",
            format!("must be 1 or 2, got {n}"),
        ));
    }
    let mut cfg = ExperimentConfig::defaults(kind, n);

    if let Some(g) = grid {
        if let Some(v) = g.count("N")? {
            cfg.grid.points = v;
        }
        if let Some(v) = g.f64("L")? {
            cfg.grid.length = v;
        }
    }

    if let Some(p) = top.sub("problem", PROBLEM_KEYS)? {
        let pr = &mut cfg.problem;
        if let Some(v) = p.f64("epsilon")? {
            pr.epsilon = v;
        }
        if let Some(v) = p.f64("lambda")? {
            pr.lambda = v;
        }
        if let Some(v) = p.f64("sigma")? {
            pr.sigma = v;
        }
        if let Some(v) = p.list("E")? {
            pr.field = v;
        }
        if let Some(v) = p.bool("stark_on")? {
            pr.stark_on = v;
        }
        if let Some(h) = p.sub("hartree", HARTREE_KEYS)? {
            pr.hartree = Some(Hartree {
                mu: h.f64("mu")?.unwrap_or(1.0),
                gamma: h.f64("gamma")?.unwrap_or(0.5),
            });
        }
    }

    if let Some(d) = top.sub("initial_data", INITIAL_KEYS)? {
        let id = &mut cfg.initial_data;
        let path = d.string("path")?;
        id.profile = match d.string("kind")? {
            None | Some("gaussian") => Profile::Gaussian,
            Some("gaussian_boosted") => Profile::GaussianBoosted,
            Some("soliton_like") => Profile::SolitonLike,
            Some("snapshot") => match path {
                Some(p) => Profile::Snapshot(PathBuf::from(p)),
                None => {
                    return Err(ConfigError::schema(
                        "initial_data.path",
                        "required when kind = \"snapshot\"",
                    ))
                }
            },
            Some(other) => {
                let message = match suggest(other, PROFILES) {
                    Some(c) => format!("unknown profile `{other}`; did you mean `{c}`?"),
                    None => format!(
                        "unknown profile `{other}`; expected one of {}",
                        PROFILES.join(", ")
                    ),
                };
                return Err(ConfigError::schema("initial_data.kind", message));
            }
        };
        if path.is_some() && !matches!(id.profile, Profile::Snapshot(_)) {
            return Err(ConfigError::schema(
                "initial_data.path",
                "only allowed when kind = \"snapshot\"",
            ));
        }
        if let Some(v) = d.f64("amplitude")? {
            id.amplitude = v;
        }
        if let Some(v) = d.f64("width")? {
            id.width = v;
        }
        if let Some(v) = d.list("center")? {
            id.center = v;
        }
        if let Some(v) = d.list("momentum")? {
            id.momentum = v;
        }
    }

    if let Some(s) = top.sub("scheme", SCHEME_KEYS)? {
        if let Some(v) = s.f64("dt")? {
            cfg.scheme.dt = v;
        }
        if let Some(v) = s.f64("T")? {
            cfg.scheme.t_final = v;
        }
        if let Some(v) = s.count("sample_every")? {
            cfg.scheme.sample_every = v;
        }
    }

    if let Some(o) = top.sub("outputs", OUTPUT_KEYS)? {
        if let Some(v) = o.string("csv_path")? {
            cfg.outputs.csv_path = PathBuf::from(v);
        }
        if let Some(v) = o.string("snapshot_dir")? {
            cfg.outputs.snapshot_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = o.count("snapshot_every")? {
            cfg.outputs.snapshot_every = v;
        }
    }

    if let Some(g) = top.sub("guards", GUARD_KEYS)? {
        if let Some(v) = g.f64("boundary_mass_max")? {
            cfg.guards.boundary_mass_max = v;
        }
        if let Some(v) = g.f64("spectral_tail_max")? {
            cfg.guards.spectral_tail_max = v;
        }
        if let Some(v) = g.f64("grad_threshold_factor")? {
            cfg.guards.grad_threshold_factor = v;
        }
    }

    if let Some(c) = top.sub("compare", COMPARE_KEYS)? {
        if let Some(v) = c.f64("tolerance")? {
            cfg.compare.tolerance = v;
        }
    }

    if let Some(l) = top.sub("lemma", LEMMA_KEYS)? {
        if let Some(v) = l.list("times")? {
            cfg.lemma.times = v;
        }
        if let Some(v) = l.count("samples")? {
            cfg.lemma.samples = v;
        }
        if let Some(v) = l.count("seed")? {
            cfg.lemma.seed = v as u64;
        }
        if let Some(v) = l.bool("negative_control")? {
            cfg.lemma.negative_control = v;
        }
    }

    if let Some(s) = top.sub("scatter", SCATTER_KEYS)? {
        if let Some(v) = s.f64("t_min")? {
            cfg.scatter.t_min = v;
        }
        if let Some(v) = s.count("min_samples")? {
            cfg.scatter.min_samples = v;
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.grid.points, 1024);
        assert_eq!(cfg.grid.length, 40.0 * PI);
        assert_eq!(cfg.problem.field, vec![1.0]);
        assert_eq!(cfg.scheme.dt, 1e-3);
        assert_eq!(cfg.guards.grad_threshold_factor, 20.0);
    }

    #[test]
    fn two_dimensional_defaults() {
        let cfg = parse_config("[grid]\nn = 2\nN = 64\n").unwrap();
        assert_eq!(cfg.problem.field, vec![1.0, 0.0]);
        assert_eq!(cfg.initial_data.center, vec![0.0, 0.0]);
    }

    #[test]
    fn full_config() {
        let text = r#"
kind = "compare"
[grid]
N = 512
L = 50
[problem]
lambda = 0
sigma = 2
E = [0.5]
[problem.hartree]
mu = 1
gamma = 0.5
[initial_data]
kind = "soliton_like"
amplitude = 2
[scheme]
dt = 5e-4
T = 1
sample_every = 4
[outputs]
csv_path = "out.csv"
snapshot_dir = "snaps"
[compare]
tolerance = 1e-6
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Compare);
        assert_eq!(cfg.grid.length, 50.0);
        assert_eq!(
            cfg.problem.hartree,
            Some(Hartree {
                mu: 1.0,
                gamma: 0.5
            })
        );
        assert_eq!(cfg.initial_data.profile, Profile::SolitonLike);
        assert_eq!(cfg.outputs.snapshot_dir, Some(PathBuf::from("snaps")));
        assert_eq!(cfg.compare.tolerance, 1e-6);
    }

    #[test]
    fn unknown_key_suggests_spelling() {
        let err = parse_config("[problem]\nlamda = 1\n").unwrap_err();
        match &err {
            ConfigError::Schema { path, message } => {
                assert_eq!(path, "problem.lamda");
                assert!(message.contains("`lambda`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("[gird]\n"),
            Err(ConfigError::Schema { .. })
        ));
        let err = parse_config("kind = \"compair\"").unwrap_err();
        assert!(err.to_string().contains("`compare`"), "{err}");
    }

    #[test]
    fn physical_errors_are_distinct() {
        match parse_config("[problem]\nsigma = -1\n").unwrap_err() {
            ConfigError::Physical { name, .. } => assert_eq!(name, "sigma"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("[problem]\nepsilon = 1.5\n"),
            Err(ConfigError::Physical { .. })
        ));
        match parse_config("[grid]\nN = 1000\n").unwrap_err() {
            ConfigError::Physical { name, .. } => assert_eq!(name, "grid.N"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_config("[grid\n"),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            parse_config("[scheme]\ndt = \"fast\"\n"),
            Err(ConfigError::Schema { .. })
        ));
    }

    #[test]
    fn kind_must_match_subcommand() {
        let cfg = parse_config_as("", Some(ExperimentKind::Blowup)).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Blowup);
        assert!(parse_config_as("kind = \"run\"", Some(ExperimentKind::Scatter)).is_err());
    }
}
