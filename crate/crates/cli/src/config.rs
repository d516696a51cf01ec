//! TOML run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use repweight::ingest::{ColumnType, FeatureGroup, Schema};
use repweight::{RegularizerSpec, SolverConfig};
use serde::Deserialize;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Sample table (CSV), relative to the config file.
    pub input: PathBuf,
    /// Reference table supplying `from-data` targets and the comparison distribution.
    pub reference: Option<PathBuf>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub missing_tokens: Option<Vec<String>>,
    pub columns: Vec<ColumnDecl>,
    #[serde(default)]
    pub groups: Vec<GroupConfig>,
    #[serde(default = "default_regularizer")]
    pub regularizer: RegularizerSpec,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub select: SelectSection,
    #[serde(default)]
    pub rake: RakeSection,
    pub skew: Option<SkewSection>,
    pub compare: Option<CompareSection>,
}

fn default_regularizer() -> RegularizerSpec {
    RegularizerSpec::Entropy { limit: None }
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnDecl {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ColumnType,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    Equality,
    LeastSquares,
    Absolute,
    Inequality,
    Kl,
}

/// `"from-data"` or an explicit vector.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Keyword(String),
    Values(Vec<f64>),
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Keyword(FROM_DATA.to_string())
    }
}

pub const FROM_DATA: &str = "from-data";

#[derive(Clone, Debug, Deserialize)]
pub struct GroupConfig {
    #[serde(flatten)]
    pub feature: FeatureGroup,
    #[serde(default)]
    pub loss: LossKind,
    #[serde(default)]
    pub target: TargetSpec,
    pub scale: Option<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Half-width of an inequality box around the target, when `lower`/`upper` are absent.
    pub width: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectSection {
    pub baseline_draws: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RakeSection {
    pub max_passes: usize,
    pub tol: f64,
}

impl Default for RakeSection {
    fn default() -> Self {
        RakeSection {
            max_passes: 1000,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewSection {
    pub size: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub column: String,
    #[serde(default)]
    pub weights: Vec<PathBuf>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    200
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub baseline_draws: Option<usize>,
    pub max_iter: Option<usize>,
    pub rho: Option<f64>,
}

/// A parsed config with paths resolved against the config file's directory.
#[derive(Clone, Debug)]
pub struct Run {
    pub config: RunConfig,
    pub base: PathBuf,
    pub output: PathBuf,
}

impl Run {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Run> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if config.version != CONFIG_VERSION {
            bail!("config version {} is not supported (expected {CONFIG_VERSION})", config.version);
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        config.solver.seed = config.seed;
        if let Some(max_iter) = overrides.max_iter {
            config.solver.max_iter = max_iter;
        }
        if let Some(rho) = overrides.rho {
            config.solver.rho = rho;
        }
        if let Some(draws) = overrides.baseline_draws {
            config.select.baseline_draws = draws;
        }
        config.solver.validate()?;

        let output = match (&overrides.output, &config.output) {
            (Some(dir), _) => dir.clone(),
            (None, Some(dir)) => base.join(dir),
            (None, None) => base.join("output"),
        };
        Ok(Run { config, base, output })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base.join(path)
    }

    pub fn schema(&self) -> Schema {
        let mut schema = Schema::new(self.config.columns.iter().map(|c| (c.name.clone(), c.kind)));
        if let Some(tokens) = &self.config.missing_tokens {
            schema.missing_tokens = tokens.clone();
        }
        schema
    }
}
