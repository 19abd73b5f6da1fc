use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::load::DatasetConfig;
use crate::error::{Error, Result};
use crate::sarimax::{FitOptions, ModelOrder};
use crate::scenario::{ScenarioKind, Window, WindowPreset};
use crate::selection::{CandidateGrid, HoldoutPolicy};

/// A modelled series: either a fixed order or a grid to select from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub name: String,
    pub dataset: String,
    #[serde(default)]
    pub order: Option<ModelOrder>,
    #[serde(default)]
    pub grid: Option<CandidateGrid>,
    /// Data used for selection and the saved fit; defaults to all data.
    #[serde(default)]
    pub fit_window: Option<Window>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub series: String,
    pub kind: ScenarioKind,
    pub train: Window,
    pub eval: Window,
    #[serde(default)]
    pub covariate: Option<String>,
    #[serde(default)]
    pub covariate_order: Option<ModelOrder>,
    /// Base period for the percent-change overlay; defaults to `train.from`.
    #[serde(default)]
    pub overlay_base: Option<crate::series::Period>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryConfig {
    /// Scenario kind whose impacts feed the plot.
    #[serde(default = "default_recovery_kind")]
    pub scenario_kind: ScenarioKind,
    #[serde(default)]
    pub preset: Option<WindowPreset>,
    #[serde(default)]
    pub disruption: Option<Window>,
    #[serde(default)]
    pub recovery: Option<Window>,
    /// Series left out of the best-fit line.
    #[serde(default)]
    pub exclude: Vec<String>,
}

fn default_recovery_kind() -> ScenarioKind {
    ScenarioKind::TrendContinuation
}

impl RecoveryConfig {
    pub fn windows(&self) -> Result<(Window, Window)> {
        match (self.preset, self.disruption, self.recovery) {
            (_, Some(d), Some(r)) => Ok((d, r)),
            (Some(p), None, None) => Ok(p.windows()),
            _ => Err(Error::Config(
                "recovery_pace needs either a preset or both disruption and recovery windows".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub holdout: HoldoutPolicy,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub series: Vec<SeriesConfig>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub recovery_pace: Option<RecoveryConfig>,
    /// Directory that relative paths resolve against; set by [`RunConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    crate::synthetic::DEFAULT_SEED
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn cache_path(&self) -> PathBuf {
        self.resolve(self.cache_dir.as_deref().unwrap_or(Path::new("cache")))
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetConfig> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn series_config(&self, name: &str) -> Option<&SeriesConfig> {
        self.series.iter().find(|s| s.name == name)
    }

    /// Checks every cross-reference and local file before any work starts.
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.jobs == Some(0) {
            return err("jobs must be at least 1".into());
        }
        let mut names = HashSet::new();
        for d in &self.datasets {
            if !names.insert(d.name.as_str()) {
                return err(format!("dataset name '{}' is used twice", d.name));
            }
            let sources = [d.path.is_some(), d.url.is_some(), d.synthetic.is_some()];
            if sources.iter().filter(|&&s| s).count() != 1 {
                return err(format!("dataset '{}' needs exactly one of path, url, synthetic", d.name));
            }
            if let Some(p) = &d.path {
                let full = self.resolve(p);
                if !full.is_file() {
                    return err(format!("dataset '{}': file {} does not exist", d.name, full.display()));
                }
            }
            if let Some(s) = &d.synthetic {
                let known = crate::synthetic::component_names();
                if !known.contains(&s.as_str()) && s != "pce" && s != "ip" {
                    return err(format!("dataset '{}': unknown synthetic series '{s}'", d.name));
                }
            }
        }
        let mut series_names = HashSet::new();
        for s in &self.series {
            if !series_names.insert(s.name.as_str()) {
                return err(format!("series name '{}' is used twice", s.name));
            }
            if self.dataset(&s.dataset).is_none() {
                return err(format!("series '{}' references missing dataset '{}'", s.name, s.dataset));
            }
            match (&s.order, &s.grid) {
                (None, None) => return err(format!("series '{}' needs an order or a grid", s.name)),
                (Some(o), _) => o.validate()?,
                (None, Some(g)) => {
                    g.candidates(1)?;
                }
            }
            if let Some(w) = &s.fit_window {
                Window::new(w.from, w.to)?;
            }
        }
        let mut scenario_names = HashSet::new();
        for sc in &self.scenarios {
            if !scenario_names.insert(sc.name.as_str()) {
                return err(format!("scenario name '{}' is used twice", sc.name));
            }
            if self.series_config(&sc.series).is_none() {
                return err(format!("scenario '{}' references missing series '{}'", sc.name, sc.series));
            }
            if let Some(c) = &sc.covariate {
                if self.dataset(c).is_none() {
                    return err(format!("scenario '{}' references missing covariate dataset '{c}'", sc.name));
                }
            }
            Window::new(sc.train.from, sc.train.to)?;
            Window::new(sc.eval.from, sc.eval.to)?;
            self.scenario_spec(sc).validate()?;
        }
        if let Some(r) = &self.recovery_pace {
            r.windows()?;
            let mut seen = HashSet::new();
            for sc in self.scenarios.iter().filter(|s| s.kind == r.scenario_kind) {
                if !seen.insert(sc.series.as_str()) {
                    return err(format!(
                        "recovery_pace: series '{}' has more than one scenario of the requested kind",
                        sc.series
                    ));
                }
            }
            if seen.is_empty() {
                return err("recovery_pace has no scenarios of the requested kind".into());
            }
        }
        Ok(())
    }

    pub fn scenario_spec(&self, sc: &ScenarioConfig) -> crate::scenario::ScenarioSpec {
        crate::scenario::ScenarioSpec {
            kind: sc.kind,
            train_window: sc.train,
            eval_window: sc.eval,
            covariate_name: sc.covariate.clone(),
            covariate_model_order: sc.covariate_order,
        }
    }
}
