//! Experiment runner: JSON configurations, named presets, report files and
//! circle-profile CSV output.
//!
//! A configuration is a single JSON document describing one task. Running it
//! produces a [`RunReport`] holding the whole configuration, one JSON block
//! per computed object, a list of named verdicts and any errors raised. The
//! exit status is 0 exactly when every verdict holds and nothing failed.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::construct::{
    bergman_rational, classical_blaschke, project_kernel_fd, shapiro_shields, ConstructionResult, RationalRep,
    RouteChoice, ShapiroOptions,
};
use crate::error::{Error, Result};
use crate::kernel::{TaylorSeries, TruncationPolicy};
use crate::poly::FactoredPoly;
use crate::scalar::{cx, Real, C};
use crate::space::{MultisetEntry, ReproducibleMultiset, SpaceSpec};
use crate::verify::{
    extraneous_scan, extremal_check, inner_report, scalar_multiple_check, subspace_equal, zero_report,
};

/// Names accepted by the `preset` task.
pub const PRESETS: [&str; 4] = [
    "paper-Rf-example",
    "h2-blaschke-match",
    "bergman-residue",
    "extraneous-scan",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Construct,
    Verify,
    Subspace,
    Zeros,
    Extremal,
    Oracle,
    Preset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON report destination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Circle-profile CSV destination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(default = "default_profile_samples")]
    pub profile_samples: usize,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            report: None,
            profile: None,
            profile_samples: default_profile_samples(),
        }
    }
}

/// Grid for the `extraneous-scan` preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub moduli: Vec<f64>,
    pub angles: usize,
    #[serde(default = "default_scan_radius")]
    pub radius: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            moduli: vec![0.8, 0.85, 0.9, 0.95],
            angles: 8,
            radius: default_scan_radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiset: Option<ReproducibleMultiset<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<FactoredPoly<f64>>,
    /// Second polynomial of a `subspace` comparison.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_polynomial: Option<FactoredPoly<f64>>,
    /// Expected answer of a `subspace` comparison, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_equal: Option<bool>,
    /// Previously saved construction used by `verify` and `zeros` instead
    /// of building one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub policy: TruncationPolicy<f64>,
    #[serde(default)]
    pub route: RouteChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taylor_degree: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_comparison_tolerance")]
    pub comparison_tolerance: f64,
    #[serde(default = "default_inner_k")]
    pub inner_k: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(rename = "M", default = "default_big_m")]
    pub big_m: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSettings>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_profile_samples() -> usize {
    512
}
fn default_scan_radius() -> f64 {
    0.99
}
fn default_tolerance() -> f64 {
    1e-8
}
fn default_comparison_tolerance() -> f64 {
    1e-8
}
fn default_inner_k() -> usize {
    20
}
fn default_radius() -> f64 {
    0.95
}
fn default_big_m() -> usize {
    200
}
fn default_samples() -> usize {
    10_000
}

impl ExperimentConfig {
    /// A configuration with every optional field at its default.
    pub fn new(name: impl Into<String>, task: Task) -> Self {
        Self {
            name: name.into(),
            task,
            space: None,
            multiset: None,
            polynomial: None,
            other_polynomial: None,
            expect_equal: None,
            construction: None,
            preset: None,
            policy: TruncationPolicy::default(),
            route: RouteChoice::default(),
            taylor_degree: None,
            tolerance: default_tolerance(),
            comparison_tolerance: default_comparison_tolerance(),
            inner_k: default_inner_k(),
            radius: default_radius(),
            big_m: default_big_m(),
            samples: default_samples(),
            seed: 0,
            scan: None,
            output: OutputPaths::default(),
        }
    }

    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            ..Self::new(name, Task::Preset)
        }
    }

    /// Checks tolerances, task-required fields and referenced files.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(format!("{}: {m}", self.name)));
        self.policy.validate()?;
        for (label, v) in [
            ("tolerance", self.tolerance),
            ("comparison_tolerance", self.comparison_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("{label} must be positive, got {v}"));
            }
        }
        if !(self.radius > 0.0 && self.radius < 1.0) {
            return cfg(format!("radius must lie in (0, 1), got {}", self.radius));
        }
        if self.output.profile_samples == 0 {
            return cfg("output.profile_samples must be positive".into());
        }
        if let Some(space) = &self.space {
            space.validate()?;
        }
        for p in [&self.polynomial, &self.other_polynomial].into_iter().flatten() {
            p.clone().validated()?;
        }
        if let Some(z) = &self.multiset {
            ReproducibleMultiset::new(z.origin_multiplicity, z.entries.clone())?;
        }
        if let Some(path) = &self.construction {
            if !path.is_file() {
                return cfg(format!("construction file {} does not exist", path.display()));
            }
        }
        let need_space = self.task != Task::Preset;
        if need_space && self.space.is_none() {
            return cfg(format!("task {:?} needs a space", self.task));
        }
        match self.task {
            Task::Construct | Task::Verify | Task::Zeros => {
                if self.multiset.is_none() && self.polynomial.is_none() && self.construction.is_none() {
                    return cfg("a multiset, polynomial or construction file is required".into());
                }
                if self.task == Task::Construct && self.construction.is_some() {
                    return cfg("construct builds its own function; drop the construction field".into());
                }
            }
            Task::Subspace => {
                if self.polynomial.is_none() || self.other_polynomial.is_none() {
                    return cfg("subspace needs polynomial and other_polynomial".into());
                }
            }
            Task::Extremal | Task::Oracle => {
                if self.polynomial.is_none() {
                    return cfg(format!("task {:?} needs a polynomial", self.task));
                }
            }
            Task::Preset => match self.preset.as_deref() {
                Some(p) if PRESETS.contains(&p) => {}
                Some(p) => return cfg(format!("unknown preset {p:?}; known presets: {}", PRESETS.join(", "))),
                None => return cfg("task preset needs a preset name".into()),
            },
        }
        if let Some(s) = &self.scan {
            if s.angles == 0 || s.moduli.is_empty() || s.moduli.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
                return cfg("scan needs angles > 0 and moduli in (0, 1)".into());
            }
        }
        Ok(())
    }

    fn space(&self) -> Result<&SpaceSpec<f64>> {
        self.space
            .as_ref()
            .ok_or_else(|| Error::Config("space is required".into()))
    }

    fn options(&self) -> ShapiroOptions<f64> {
        ShapiroOptions {
            route: self.route,
            policy: self.policy,
            taylor_degree: self.taylor_degree,
        }
    }
}

fn describe_parse_error(e: serde_path_to_error::Error<serde_json::Error>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    Error::Config(format!(
        "at `{path}` (line {}, column {}): {inner}",
        inner.line(),
        inner.column()
    ))
}

fn parse_json<D: serde::de::DeserializeOwned>(text: &str) -> Result<D> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(describe_parse_error)?;
    de.end().map_err(|e| {
        Error::Config(format!(
            "trailing input (line {}, column {}): {e}",
            e.line(),
            e.column()
        ))
    })?;
    Ok(value)
}

/// Parses one configuration. Errors name the offending field path together
/// with the line and column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_json(text)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| located(path, e))
}

fn located(path: &Path, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    }
}

/// A batch file is either a JSON array of configurations or an object with
/// an `experiments` array.
pub fn load_batch(path: &Path) -> Result<Vec<ExperimentConfig>> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wrapped {
        experiments: Vec<ExperimentConfig>,
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let located = |e: Error| located(path, e);
    if text.trim_start().starts_with('[') {
        parse_json(&text).map_err(located)
    } else {
        parse_json::<Wrapped>(&text).map(|w| w.experiments).map_err(located)
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory receiving every output file; configured file names are kept.
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config: ExperimentConfig,
    pub blocks: Vec<Block>,
    pub verdicts: Vec<Verdict>,
    pub errors: Vec<String>,
    pub success: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

struct Recorder {
    blocks: Vec<Block>,
    verdicts: Vec<Verdict>,
    errors: Vec<String>,
    profile: Option<RationalOrTaylor>,
}

#[derive(Clone)]
enum RationalOrTaylor {
    Rational(RationalRep<f64>),
    Taylor(TaylorSeries<f64>),
}

impl Recorder {
    fn block(&mut self, label: impl Into<String>, data: impl Serialize) {
        let data = serde_json::to_value(data).expect("block serializes");
        self.blocks.push(Block {
            label: label.into(),
            data,
        });
    }

    fn verdict(&mut self, name: impl Into<String>, passed: bool) {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed,
        });
    }

    fn error(&mut self, context: &str, e: Error) {
        self.errors.push(format!("{context}: {e}"));
    }

    /// Records an error and yields `None` on failure.
    fn attempt<R>(&mut self, context: &str, r: Result<R>) -> Option<R> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(context, e);
                None
            }
        }
    }
}

/// Runs one experiment and writes its report and profile files.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> RunOutcome {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let mut rec = Recorder {
        blocks: Vec::new(),
        verdicts: Vec::new(),
        errors: Vec::new(),
        profile: None,
    };
    match config.validate() {
        Ok(()) => dispatch(&config, &mut rec),
        Err(e) => rec.error("config", e),
    }

    let mut files = Vec::new();
    if let Some(path) = config.output.profile.as_ref().map(|p| resolve(p, opts)) {
        let written = match rec.profile.clone() {
            Some(RationalOrTaylor::Rational(r)) => {
                emit_circle_profile(ProfileSource::Rational(&r), config.output.profile_samples, &path)
            }
            Some(RationalOrTaylor::Taylor(t)) => {
                emit_circle_profile(ProfileSource::Taylor(&t), config.output.profile_samples, &path)
            }
            None => Err(Error::Config("this task produces no function to profile".into())),
        };
        if rec.attempt("profile", written).is_some() {
            files.push(path);
        }
    }

    let success = rec.errors.is_empty() && rec.verdicts.iter().all(|v| v.passed);
    let report = RunReport {
        name: config.name.clone(),
        config: config.clone(),
        blocks: rec.blocks,
        verdicts: rec.verdicts,
        errors: rec.errors,
        success,
    };
    let mut outcome = RunOutcome { report, files };
    let report_path = config
        .output
        .report
        .as_ref()
        .map(|p| resolve(p, opts))
        .or_else(|| opts.out_dir.as_ref().map(|d| d.join(format!("{}.json", config.name))));
    if let Some(path) = report_path {
        match write_atomic(&path, outcome.report.to_json().as_bytes()) {
            Ok(()) => outcome.files.push(path),
            Err(e) => {
                outcome.report.errors.push(format!("report: {e}"));
                outcome.report.success = false;
            }
        }
    }
    outcome
}

/// Runs independent experiments concurrently; outcomes keep input order.
pub fn run_batch(configs: &[ExperimentConfig], opts: &RunOptions) -> Vec<RunOutcome> {
    configs.par_iter().map(|c| run(c, opts)).collect()
}

fn resolve(p: &Path, opts: &RunOptions) -> PathBuf {
    match (&opts.out_dir, p.file_name()) {
        (Some(dir), Some(name)) => dir.join(name),
        _ => p.to_path_buf(),
    }
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn dispatch(config: &ExperimentConfig, rec: &mut Recorder) {
    match config.task {
        Task::Construct => {
            if let Some((_, result)) = obtain(config, rec) {
                remember_profile(rec, &result);
                rec.block("construction", &result);
            }
        }
        Task::Verify | Task::Zeros => {
            let Some((z, result)) = obtain(config, rec) else { return };
            remember_profile(rec, &result);
            let Ok(space) = config.space() else { return };
            if config.task == Task::Verify {
                if let Some(r) = rec.attempt(
                    "inner_report",
                    inner_report(space, &result.taylor, config.inner_k, config.tolerance),
                ) {
                    rec.verdict("inner", r.verdict);
                    rec.block("inner_report", &r);
                }
            }
            match z {
                Some(z) => {
                    if let Some(r) = rec.attempt(
                        "zero_report",
                        zero_report(space, &result, &z, config.radius, config.tolerance),
                    ) {
                        rec.verdict("zeros", r.verdict);
                        rec.block("zero_report", &r);
                    }
                }
                None => rec.error(
                    "zero_report",
                    Error::Config("the zero set is unknown; give a multiset or polynomial".into()),
                ),
            }
        }
        Task::Subspace => {
            let (Ok(space), Some(p), Some(q)) = (config.space(), &config.polynomial, &config.other_polynomial) else {
                return;
            };
            if let Some(r) = rec.attempt("subspace_equal", subspace_equal(space, p, q, config.big_m)) {
                rec.verdict("corroborated", r.corroborated);
                if let Some(expected) = config.expect_equal {
                    rec.verdict("expected_equality", r.equal == expected);
                }
                rec.block("subspace_report", &r);
            }
        }
        Task::Extremal => {
            let (Ok(space), Some(p)) = (config.space(), &config.polynomial) else {
                return;
            };
            let Some(z) = rec.attempt("reproducible_multiset", space.reproducible_multiset(p)) else {
                return;
            };
            let Some(result) = rec.attempt("construct", shapiro_shields(space, &z, config.options())) else {
                return;
            };
            let seed = config.seed;
            if let Some(r) = rec.attempt(
                "extremal_check",
                extremal_check(space, p, &result, config.samples, seed, config.big_m),
            ) {
                rec.verdict("extremal", r.verdict);
                rec.block("extremal_report", &r);
            }
        }
        Task::Oracle => {
            let (Ok(space), Some(p)) = (config.space(), &config.polynomial) else {
                return;
            };
            let Some(z) = rec.attempt("reproducible_multiset", space.reproducible_multiset(p)) else {
                return;
            };
            rec.block("reproducible_multiset", &z);
            let Some(oracle) = rec.attempt(
                "project_kernel_fd",
                project_kernel_fd(space, p, z.origin_multiplicity, config.big_m),
            ) else {
                return;
            };
            remember_profile(rec, &oracle);
            if space.is_diagonal() {
                if let Some(ss) = rec.attempt("construct", shapiro_shields(space, &z, config.options())) {
                    if let Some(cmp) = rec.attempt(
                        "scalar_multiple_check",
                        scalar_multiple_check(&oracle.taylor, &ss.taylor, config.comparison_tolerance),
                    ) {
                        rec.verdict("oracle_matches_construction", cmp.is_scalar_multiple);
                        rec.block("comparison", &cmp);
                    }
                }
            }
            rec.block("oracle", &oracle);
        }
        Task::Preset => match config.preset.as_deref() {
            Some("paper-Rf-example") => preset_rf_example(rec),
            Some("h2-blaschke-match") => preset_h2_match(config, rec),
            Some("bergman-residue") => preset_bergman_residue(config, rec),
            Some("extraneous-scan") => preset_scan(config, rec),
            other => rec.error("preset", Error::Config(format!("unknown preset {other:?}"))),
        },
    }
}

/// The function under study and, when known, its prescribed zero set.
fn obtain(
    config: &ExperimentConfig,
    rec: &mut Recorder,
) -> Option<(Option<ReproducibleMultiset<f64>>, ConstructionResult<f64>)> {
    let space = rec.attempt("space", config.space()).cloned()?;
    let z = match (&config.multiset, &config.polynomial) {
        (Some(z), _) => Some(z.clone()),
        (None, Some(p)) => Some(rec.attempt("reproducible_multiset", space.reproducible_multiset(p))?),
        (None, None) => None,
    };
    if let Some(path) = &config.construction {
        let loaded = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
            .and_then(|text| parse_json::<ConstructionResult<f64>>(&text).map_err(|e| located(path, e)));
        let result = rec.attempt("construction", loaded)?;
        let z = z.or_else(|| result.multiset.clone());
        return Some((z, result));
    }
    let z = z?;
    let result = if space.is_diagonal() {
        shapiro_shields(&space, &z, config.options())
    } else {
        project_kernel_fd(&space, &z.polynomial(), z.origin_multiplicity, config.big_m).map(|mut r| {
            r.multiset = Some(z.clone());
            r
        })
    };
    let result = rec.attempt("construct", result)?;
    Some((Some(z), result))
}

fn remember_profile(rec: &mut Recorder, result: &ConstructionResult<f64>) {
    rec.profile = Some(match &result.rational {
        Some(r) => RationalOrTaylor::Rational(r.clone()),
        None => RationalOrTaylor::Taylor(result.taylor.clone()),
    });
}

fn rf_polynomial() -> FactoredPoly<f64> {
    FactoredPoly::new(
        cx(1.0, 0.0),
        [
            (cx(0.0, 0.0), 2),
            (cx(0.0, 0.5), 1),
            (cx(-1.0, 0.0), 2),
            (cx(1.0, 0.0), 2),
        ],
    )
    .expect("fixed polynomial is valid")
}

type RfCase = (&'static str, SpaceSpec<f64>, Vec<MultisetEntry<f64>>);

fn preset_rf_example(rec: &mut Recorder) {
    let f = rf_polynomial();
    let entry = |re: f64, im: f64, mult: usize| MultisetEntry {
        point: cx(re, im),
        mult,
    };
    let cases: [RfCase; 4] = [
        (
            "D_alpha, alpha <= 1 (alpha = 1)",
            SpaceSpec::dirichlet(1.0),
            vec![entry(0.0, 0.5, 1)],
        ),
        (
            "D_alpha, 1 < alpha <= 3 (alpha = 3)",
            SpaceSpec::dirichlet(3.0),
            vec![entry(0.0, 0.5, 1), entry(-1.0, 0.0, 1), entry(1.0, 0.0, 1)],
        ),
        (
            "D_alpha, 3 < alpha <= 5 (alpha = 5)",
            SpaceSpec::dirichlet(5.0),
            vec![entry(0.0, 0.5, 1), entry(-1.0, 0.0, 2), entry(1.0, 0.0, 2)],
        ),
        (
            "local Dirichlet at 1",
            SpaceSpec::local_dirichlet(cx(1.0, 0.0)),
            vec![entry(0.0, 0.5, 1), entry(1.0, 0.0, 1)],
        ),
    ];
    for (label, space, expected) in cases {
        let expected = ReproducibleMultiset::new(2, expected).expect("fixed multiset is valid");
        if let Some(r) = rec.attempt(label, space.reproducible_multiset(&f)) {
            let matches = r.same_as(&expected, 0.0);
            rec.verdict(format!("R(f) in {label}"), matches);
            rec.block(
                label,
                json!({ "space": space, "f": f, "R": r, "elements": r.elements(), "expected": expected, "matches": matches }),
            );
        }
    }
}

fn preset_h2_match(config: &ExperimentConfig, rec: &mut Recorder) {
    let h2 = SpaceSpec::hardy();
    let z = config.multiset.clone().unwrap_or_else(|| {
        ReproducibleMultiset::new(
            1,
            vec![
                MultisetEntry {
                    point: cx(0.5, 0.0),
                    mult: 1,
                },
                MultisetEntry {
                    point: cx(-0.3, 0.4),
                    mult: 2,
                },
                MultisetEntry {
                    point: cx(0.1, -0.7),
                    mult: 1,
                },
            ],
        )
        .expect("fixed multiset is valid")
    });
    let Some(ss) = rec.attempt("shapiro_shields", shapiro_shields(&h2, &z, config.options())) else {
        return;
    };
    let Some(cl) = rec.attempt(
        "classical_blaschke",
        classical_blaschke(&z.all_points(), ss.taylor.truncation_degree),
    ) else {
        return;
    };
    if let Some(cmp) = rec.attempt(
        "scalar_multiple_check",
        scalar_multiple_check(&ss.taylor, &cl.taylor, config.comparison_tolerance),
    ) {
        rec.verdict(
            "construction is a multiple of the Blaschke product",
            cmp.is_scalar_multiple,
        );
        rec.block("comparison", &cmp);
    }
    if let Some(r) = rec.attempt(
        "inner_report",
        inner_report(&h2, &ss.taylor, config.inner_k, config.tolerance),
    ) {
        rec.verdict("inner", r.verdict);
        rec.block("inner_report", &r);
    }
    let rational = cl
        .rational
        .clone()
        .expect("closed form carries its rational representation");
    if let Some(rows) = rec.attempt(
        "circle_profile",
        circle_profile(ProfileSource::Rational(&rational), config.output.profile_samples),
    ) {
        let dev = rows.iter().fold(0.0f64, |m, (_, v)| m.max((v - 1.0).abs()));
        rec.verdict("unimodular on the circle", dev <= 1e-12);
        rec.block(
            "circle_profile",
            json!({ "samples": rows.len(), "max_deviation_from_one": dev }),
        );
    }
    rec.profile = Some(RationalOrTaylor::Rational(rational));
    rec.block("construction", &ss);
}

fn preset_bergman_residue(config: &ExperimentConfig, rec: &mut Recorder) {
    let a2 = SpaceSpec::bergman();
    let degree = config.taylor_degree.unwrap_or(300);
    let sets: [Vec<C<f64>>; 2] = [vec![cx(0.5, 0.0)], vec![cx(0.5, 0.0), cx(-0.5, 0.0)]];
    for pts in sets {
        let label = format!(
            "Z = {{{}}}",
            pts.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
        );
        let z = ReproducibleMultiset::simple(0, &pts).expect("fixed multiset is valid");
        let Some(res) = rec.attempt("bergman_rational", bergman_rational(&pts, degree)) else {
            continue;
        };
        let opts = ShapiroOptions {
            route: RouteChoice::Determinant,
            taylor_degree: Some(degree),
            ..config.options()
        };
        let Some(det) = rec.attempt("shapiro_shields", shapiro_shields(&a2, &z, opts)) else {
            continue;
        };
        let diff = (0..=degree).fold(0.0f64, |m, k| {
            m.max((res.taylor.coeffs[k] - det.taylor.coeffs[k]).norm())
        });
        rec.verdict(
            format!("residue route equals determinant route for {label}"),
            diff <= 1e-8,
        );
        let rational = res.rational.clone().expect("residue route is rational");
        let residues: Vec<f64> = pts
            .iter()
            .filter_map(|l| rec.attempt("residue", rational.residue(l.conj().inv())))
            .map(|r| r.norm())
            .collect();
        let worst = residues.iter().fold(0.0f64, |m, r| m.max(*r));
        rec.verdict(
            format!("residues vanish for {label}"),
            residues.len() == pts.len() && worst <= 1e-10,
        );
        let profile = circle_profile(ProfileSource::Rational(&rational), config.output.profile_samples);
        let spread = rec.attempt("circle_profile", profile).map(|rows| {
            let lo = rows.iter().fold(f64::INFINITY, |m, (_, v)| m.min(*v));
            let hi = rows.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
            (lo, hi)
        });
        rec.block(
            label,
            json!({
                "zeros": pts,
                "max_coefficient_difference": diff,
                "residue_moduli": residues,
                "circle_modulus_range": spread,
                "rational": rational,
            }),
        );
        rec.profile = Some(RationalOrTaylor::Rational(rational));
    }
}

fn preset_scan(config: &ExperimentConfig, rec: &mut Recorder) {
    let space = config.space.clone().unwrap_or_else(SpaceSpec::bergman);
    let grid = config.scan.clone().unwrap_or_default();
    let scan = extraneous_scan(
        &space,
        &grid.moduli,
        grid.angles,
        grid.radius,
        config.tolerance,
        config.comparison_tolerance.max(1e-7),
    );
    if let Some(report) = rec.attempt("extraneous_scan", scan) {
        rec.verdict("scan report signature", report.signature_valid());
        rec.verdict("scan completed on every pair", report.failures.is_empty());
        let consistent = report
            .instances
            .iter()
            .all(|i| i.comparison.as_ref().is_some_and(|c| c.is_scalar_multiple));
        rec.verdict("every extraneous zero leaves the function unchanged", consistent);
        rec.block("scan_report", &report);
    }
}

/// Function whose modulus is sampled on the unit circle.
#[derive(Clone, Copy, Debug)]
pub enum ProfileSource<'a, T: Real> {
    /// Closed form, evaluated exactly as stored (without any normalization).
    Rational(&'a RationalRep<T>),
    /// Truncated series; accepted when its tail bound is finite.
    Taylor(&'a TaylorSeries<T>),
}

/// Rows `(theta, |B(e^{i theta})|)` at `samples` uniform angles starting at 0.
pub fn circle_profile<T: Real>(source: ProfileSource<'_, T>, samples: usize) -> Result<Vec<(T, T)>> {
    if samples == 0 {
        return Err(Error::Config("profile needs at least one sample".into()));
    }
    let eval: Box<dyn Fn(C<T>) -> C<T> + '_> = match source {
        ProfileSource::Rational(r) => {
            if r.pole_radius() <= T::one() {
                return Err(Error::UnboundedTail);
            }
            Box::new(move |z| r.eval(z))
        }
        ProfileSource::Taylor(t) => {
            if !t.tail_bound.is_finite() {
                return Err(Error::UnboundedTail);
            }
            Box::new(move |z| t.eval(z))
        }
    };
    Ok((0..samples)
        .map(|k| {
            let theta = T::TAU() * T::of(k) / T::of(samples);
            (theta, eval(C::from_polar(T::one(), theta)).norm())
        })
        .collect())
}

/// CSV text with header `theta,modulus`, 17 significant digits and `\n`
/// line ends.
pub fn profile_csv<T: Real>(rows: &[(T, T)]) -> String {
    let mut s = String::from("theta,modulus\n");
    for (t, v) in rows {
        writeln!(s, "{:.16e},{:.16e}", t.as_f64(), v.as_f64()).expect("writing to a string");
    }
    s
}

/// Samples the profile and writes it atomically to `path` as CSV.
pub fn emit_circle_profile<T: Real>(source: ProfileSource<'_, T>, samples: usize, path: &Path) -> Result<Vec<(T, T)>> {
    let rows = circle_profile(source, samples)?;
    write_atomic(path, profile_csv(&rows).as_bytes())?;
    Ok(rows)
}
