//! Run configuration: the model/run sections of the restriction file, the
//! target file and command-line overrides, merged into one [`RunConfig`].

use std::path::{Path, PathBuf};

use nsvar_core::pipeline::{Algorithm, Mode};
use nsvar_core::robust::{Hypothesis, Target};
use nsvar_core::sampling::QPrior;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
#[error("{}: {message}", path.display())]
pub struct ConfigError {
    pub path: PathBuf,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: &Path, message: impl Into<String>) -> Self {
        Self {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

/// `[model]` table of the restriction file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default)]
    pub lags: usize,
    #[serde(default = "yes")]
    pub constant: bool,
    pub date_column: Option<String>,
    #[serde(default)]
    pub log: Vec<String>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            Self::One(x) => vec![x],
            Self::Many(v) => v,
        }
    }
}

/// `[run]` table of the restriction file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub phi_draws: Option<usize>,
    pub q_draws: Option<usize>,
    pub max_q_attempts: Option<usize>,
    pub r_draws: Option<usize>,
    pub alpha: Option<OneOrMany>,
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub mode: Option<Mode>,
    pub q_prior: Option<QPrior>,
}

/// One block of impulse responses: a variable, a shock and a horizon range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub variable: String,
    pub shock: String,
    /// Inclusive `[first, last]`.
    #[serde(default)]
    pub horizons: Option<[usize; 2]>,
    #[serde(default)]
    pub horizon: Option<usize>,
}

impl TargetSpec {
    pub fn horizon_list(&self) -> Vec<usize> {
        match (self.horizons, self.horizon) {
            (Some([a, b]), _) => (a..=b).collect(),
            (None, Some(h)) => vec![h],
            (None, None) => vec![0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSpec {
    pub name: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl HypothesisSpec {
    pub fn hypothesis(&self) -> Hypothesis<f64> {
        Hypothesis {
            lo: self.lo,
            hi: self.hi,
        }
    }

    pub fn defaults() -> Vec<Self> {
        vec![
            Self {
                name: "positive".into(),
                lo: Some(0.0),
                hi: None,
            },
            Self {
                name: "negative".into(),
                lo: None,
                hi: Some(0.0),
            },
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetFile {
    #[serde(default)]
    target: Vec<TargetSpec>,
    #[serde(default)]
    hypothesis: Vec<HypothesisSpec>,
}

/// Everything a run depends on. Echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub date_column: Option<String>,
    pub variables: Vec<String>,
    pub log_columns: Vec<String>,
    pub lags: usize,
    pub constant: bool,
    pub restrictions: PathBuf,
    pub shocks: Vec<String>,
    pub targets_file: PathBuf,
    pub targets: Vec<TargetSpec>,
    pub hypotheses: Vec<HypothesisSpec>,
    pub phi_draws: usize,
    pub q_draws: usize,
    pub max_q_attempts: usize,
    pub r_draws: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub q_prior: QPrior,
}

/// Command-line values that take precedence over the `[run]` table.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub phi_draws: Option<usize>,
    pub q_draws: Option<usize>,
    pub max_q_attempts: Option<usize>,
    pub r_draws: Option<usize>,
    pub alphas: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub mode: Option<Mode>,
    pub q_prior: Option<QPrior>,
}

/// The restriction file split into its parts.
pub struct RestrictionFile {
    pub model: ModelSection,
    pub run: RunSection,
    /// The remaining restriction document, re-serialized.
    pub restrictions: String,
    pub shocks: Option<Vec<String>>,
}

fn section<T: for<'de> Deserialize<'de> + Default>(root: &mut Table, key: &str, path: &Path) -> Result<T, ConfigError> {
    match root.remove(key) {
        None => Ok(T::default()),
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::new(path, format!("[{key}]: {}", e.message()))),
    }
}

pub fn read_restriction_file(path: &Path) -> Result<RestrictionFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path, e.to_string()))?;
    let mut root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::new(path, e.message().to_string()))?;
    let model = section(&mut root, "model", path)?;
    let run = section(&mut root, "run", path)?;
    let shocks = match root.get("shocks") {
        None => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .map(|v| v.as_str().map(str::to_owned))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ConfigError::new(path, "`shocks` must be an array of strings"))?,
        ),
        Some(_) => return Err(ConfigError::new(path, "`shocks` must be an array of strings")),
    };
    let restrictions = toml::to_string(&root).map_err(|e| ConfigError::new(path, e.to_string()))?;
    Ok(RestrictionFile {
        model,
        run,
        restrictions,
        shocks,
    })
}

pub fn read_target_file(path: &Path) -> Result<(Vec<TargetSpec>, Vec<HypothesisSpec>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path, e.to_string()))?;
    let file: TargetFile = toml::from_str(&text).map_err(|e| ConfigError::new(path, e.message().to_string()))?;
    if file.target.is_empty() {
        return Err(ConfigError::new(path, "no [[target]] entries"));
    }
    for t in &file.target {
        if let Some([a, b]) = t.horizons {
            if a > b {
                return Err(ConfigError::new(path, format!("empty horizon range [{a}, {b}] for `{}`", t.variable)));
            }
        }
        if t.horizons.is_some() && t.horizon.is_some() {
            return Err(ConfigError::new(path, "give either `horizons` or `horizon`"));
        }
    }
    let hyps = if file.hypothesis.is_empty() {
        HypothesisSpec::defaults()
    } else {
        file.hypothesis
    };
    Ok((file.target, hyps))
}

impl RunConfig {
    /// Merges the files and overrides. `variables` may still be empty here;
    /// it is filled from the data header at load time.
    pub fn assemble(
        data: &Path,
        restrictions: &Path,
        targets: &Path,
        overrides: &Overrides,
    ) -> Result<(Self, String), ConfigError> {
        let file = read_restriction_file(restrictions)?;
        let (target_specs, hypotheses) = read_target_file(targets)?;
        let run = file.run;
        let cfg = Self {
            data: data.to_path_buf(),
            date_column: file.model.date_column,
            variables: file.model.variables,
            log_columns: file.model.log,
            lags: file.model.lags,
            constant: file.model.constant,
            restrictions: restrictions.to_path_buf(),
            shocks: file.shocks.unwrap_or_default(),
            targets_file: targets.to_path_buf(),
            targets: target_specs,
            hypotheses,
            phi_draws: overrides.phi_draws.or(run.phi_draws).unwrap_or(1_000),
            q_draws: overrides.q_draws.or(run.q_draws).unwrap_or(10_000),
            max_q_attempts: overrides.max_q_attempts.or(run.max_q_attempts).unwrap_or(100_000),
            r_draws: overrides.r_draws.or(run.r_draws).unwrap_or(10_000),
            alphas: overrides
                .alphas
                .clone()
                .or(run.alpha.map(OneOrMany::into_vec))
                .unwrap_or_else(|| vec![0.68]),
            seed: overrides.seed.or(run.seed).unwrap_or(0),
            algorithm: overrides.algorithm.or(run.algorithm).unwrap_or(Algorithm::Auto),
            mode: overrides.mode.or(run.mode).unwrap_or(Mode::Robust),
            q_prior: overrides.q_prior.or(run.q_prior).unwrap_or(QPrior::ConditionallyUniform),
        };
        cfg.validate(restrictions)?;
        Ok((cfg, file.restrictions))
    }

    pub fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        if self.phi_draws == 0 {
            return Err(ConfigError::new(path, "phi_draws must be at least 1"));
        }
        if self.q_draws == 0 || self.q_draws > self.max_q_attempts {
            return Err(ConfigError::new(
                path,
                format!(
                    "need 1 <= q_draws <= max_q_attempts, got {} and {}",
                    self.q_draws, self.max_q_attempts
                ),
            ));
        }
        if self.alphas.is_empty() {
            return Err(ConfigError::new(path, "no credibility levels"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(ConfigError::new(path, format!("credibility level {a} not in (0, 1)")));
        }
        Ok(())
    }

    /// Shock names, defaulting to the variable names.
    pub fn shock_names(&self) -> &[String] {
        if self.shocks.is_empty() {
            &self.variables
        } else {
            &self.shocks
        }
    }

    /// Flattens the target blocks into core targets, in block then horizon order.
    pub fn resolve_targets(&self) -> Result<Vec<Target>, ConfigError> {
        let mut out = Vec::new();
        for spec in &self.targets {
            let variable = self.variables.iter().position(|v| *v == spec.variable).ok_or_else(|| {
                ConfigError::new(&self.targets_file, format!("unknown target variable `{}`", spec.variable))
            })?;
            let shock = self.shock_names().iter().position(|s| *s == spec.shock).ok_or_else(|| {
                ConfigError::new(&self.targets_file, format!("unknown target shock `{}`", spec.shock))
            })?;
            out.extend(spec.horizon_list().into_iter().map(|horizon| Target {
                variable,
                shock,
                horizon,
            }));
        }
        Ok(out)
    }
}
