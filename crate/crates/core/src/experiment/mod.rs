//! Named, seeded experiments and the artifacts they write.
//!
//! A config is one JSON object:
//!
//! ```json
//! { "experiment": "sieve", "params": { "t_D": 1.0 }, "output": "sieve.csv", "format": "csv", "seed": 7 }
//! ```
//!
//! Only `experiment` is required; `params` are per experiment and every
//! field has a default. Experiments that sample (premeasure, probability,
//! records, observer-lists) need a seed. Per-item random streams are derived
//! from the seed, so results do not depend on thread count.

mod observer;
mod output;
mod runners;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

pub use observer::{observer_lists, simulate_observers, BAccess, ObserverParams, ObserverReport};
pub use output::{format_float, Cell, Table};

/// Experiments [`run`] knows.
pub const EXPERIMENTS: [&str; 6] = [
    "premeasure",
    "redundancy",
    "sieve",
    "probability",
    "records",
    "observer-lists",
];

/// Embedded in every artifact.
pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::param("format", format!("`{other}` is not csv or json"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// The text the config was parsed from, echoed verbatim.
    #[serde(skip)]
    source: String,
    /// Command-line values that replaced config fields.
    #[serde(skip)]
    overrides: Map<String, Value>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::param("config", e.to_string()))?;
        if !cfg.params.is_object() {
            return Err(Error::param("params", "must be a JSON object"));
        }
        cfg.source = text.to_string();
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Config built in code; the echo is its JSON rendering.
    pub fn new(experiment: &str, params: Value) -> Self {
        let source = serde_json::to_string(&serde_json::json!({
            "experiment": experiment,
            "params": params,
        }))
        .expect("json value");
        ExperimentConfig {
            experiment: experiment.to_string(),
            params,
            output: None,
            format: None,
            seed: None,
            source,
            overrides: Map::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.overrides.insert("seed".into(), seed.into());
        self
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.format = Some(format);
        self.overrides.insert("format".into(), format.to_string().into());
        self
    }

    /// Not recorded as an override: where an artifact lands does not change
    /// its contents.
    pub fn with_output(mut self, path: PathBuf) -> Self {
        self.output = Some(path);
        self
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn overrides(&self) -> &Map<String, Value> {
        &self.overrides
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::param(
                "seed",
                format!("experiment `{}` samples and needs a seed", self.experiment),
            )
        })
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone()).map_err(|e| Error::param("params", e.to_string()))
    }
}

/// Named pass/fail check evaluated during a run; a failure maps to exit
/// code 3.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// What an experiment produces: rows, optional structured details, and the
/// checks it ran.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Outcome {
    pub table: Table,
    pub details: Option<Value>,
    pub checks: Vec<Check>,
    pub default_format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultArtifact {
    pub experiment: String,
    pub build: &'static str,
    pub config_echo: String,
    pub overrides: Map<String, Value>,
    pub seed: Option<u64>,
    pub format: Format,
    pub table: Table,
    pub details: Option<Value>,
    pub checks: Vec<Check>,
    /// Wall-clock time of the run. Kept out of the written artifact so that
    /// reruns are byte-identical.
    pub duration: Duration,
}

#[derive(Serialize)]
struct Metadata<'a> {
    experiment: &'a str,
    build: &'a str,
    config: &'a str,
    overrides: &'a Map<String, Value>,
    seed: Option<u64>,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct JsonArtifact<'a> {
    #[serde(flatten)]
    meta: Metadata<'a>,
    columns: &'a [String],
    rows: &'a [Vec<Cell>],
    #[serde(skip_serializing_if = "Option::is_none")]
    details: Option<&'a Value>,
}

impl ResultArtifact {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn metadata(&self) -> Metadata<'_> {
        Metadata {
            experiment: &self.experiment,
            build: self.build,
            config: &self.config_echo,
            overrides: &self.overrides,
            seed: self.seed,
            checks: &self.checks,
        }
    }

    /// The artifact in its format.
    pub fn render(&self) -> Result<String> {
        match self.format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let doc = JsonArtifact {
                    meta: self.metadata(),
                    columns: &self.table.columns,
                    rows: &self.table.rows,
                    details: self.details.as_ref(),
                };
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }

    /// Config echo, build id and checks; the sidecar of a CSV artifact.
    pub fn render_metadata(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.metadata()).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Path of the metadata sidecar written next to a CSV artifact.
    pub fn metadata_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".meta.json");
        PathBuf::from(p)
    }

    /// Writes the artifact (and for CSV its metadata sidecar), each through
    /// a temporary file renamed into place.
    pub fn write(&self, path: &Path) -> Result<()> {
        if self.format == Format::Csv {
            write_atomic(&Self::metadata_path(path), &self.render_metadata()?)?;
        }
        write_atomic(path, &self.render()?)
    }

    /// Short human-readable account of the run.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} rows, {} of {} checks passed, {:.3} s",
            self.experiment,
            self.table.len(),
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
            self.duration.as_secs_f64()
        );
        for c in self.failed_checks() {
            s.push_str(&format!("\n  FAILED {}: {}", c.name, c.detail));
        }
        s
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut builder = tempfile::Builder::new();
    // temp files default to 0600; artifacts should read like any other output
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Random stream `i` of `seed`.
pub(crate) fn item_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    rng
}

/// Runs the configured experiment. Nothing is written; see
/// [`ResultArtifact::write`].
pub fn run(config: &ExperimentConfig) -> Result<ResultArtifact> {
    let start = Instant::now();
    let outcome = match config.experiment.as_str() {
        "premeasure" => runners::premeasure(&config.params()?, config.require_seed()?)?,
        "redundancy" => runners::redundancy(&config.params()?)?,
        "sieve" => runners::sieve(&config.params()?)?,
        "probability" => runners::probability(&config.params()?, config.require_seed()?)?,
        "records" => runners::records(&config.params()?, config.require_seed()?)?,
        "observer-lists" => observer::outcome(&config.params()?, config.require_seed()?)?,
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    Ok(ResultArtifact {
        experiment: config.experiment.clone(),
        build: BUILD_ID,
        config_echo: config.source.clone(),
        overrides: config.overrides.clone(),
        seed: config.seed,
        format: config.format.unwrap_or(outcome.default_format),
        table: outcome.table,
        details: outcome.details,
        checks: outcome.checks,
        duration: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse(r#"{"experiment":"sieve","params":{"t_D":2.0},"seed":3}"#).unwrap();
        assert_eq!(cfg.experiment, "sieve");
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.source(), r#"{"experiment":"sieve","params":{"t_D":2.0},"seed":3}"#);
        assert!(ExperimentConfig::parse(r#"{"experiment":"sieve","bogus":1}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"experiment":"sieve","params":[1]}"#).is_err());
        assert!(ExperimentConfig::parse("not json").is_err());
    }

    #[test]
    fn unknown_experiment_and_bad_params() {
        let err = run(&ExperimentConfig::new("nope", json!({}))).unwrap_err();
        assert_eq!(err, Error::UnknownExperiment("nope".into()));
        let err = run(&ExperimentConfig::new("sieve", json!({"t_D": 1.0, "colour": "red"}))).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        let err = run(&ExperimentConfig::new("premeasure", json!({}))).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn metadata_path_appends_suffix() {
        assert_eq!(
            ResultArtifact::metadata_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.csv.meta.json")
        );
    }

    #[test]
    fn overrides_are_recorded() {
        let cfg = ExperimentConfig::new(
            "redundancy",
            json!({"n_max": 3, "metric_max_n": 2, "robustness_n": [3]}),
        )
        .with_format(Format::Json)
        .with_seed(9);
        let art = run(&cfg).unwrap();
        assert_eq!(art.format, Format::Json);
        let doc: Value = serde_json::from_str(&art.render().unwrap()).unwrap();
        assert_eq!(doc["overrides"]["seed"], json!(9));
        assert_eq!(doc["build"], json!(BUILD_ID));
        assert_eq!(doc["config"], json!(cfg.source()));
    }
}
