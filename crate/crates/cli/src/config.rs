//! Run configuration: command-line flags override a JSON config file, which
//! overrides built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fatiguelab::dataset::{Modality, Target};
use fatiguelab::eval::default_plans;
use fatiguelab::models::{ClassWeight, ModelKind};
use fatiguelab::signals::WindowPlan;

use crate::CliError;

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub target: Option<String>,
    pub modality: Option<String>,
    pub window: Option<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub pca: Option<usize>,
    pub class_weight: Option<ClassWeight>,
    pub cv_folds: Option<usize>,
    pub sequence_step_hz: Option<f64>,
    pub lstm_hidden: Option<usize>,
    pub lstm_epochs: Option<usize>,
    pub rf_trees: Option<usize>,
    pub subjects: Option<usize>,
    pub block_seconds: Option<f64>,
    pub effect_cf: Option<f64>,
    pub effect_pf: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Field-wise `self` where set, else `fallback`.
    pub fn or(self, fallback: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: self.$f.or(fallback.$f)),* } };
        }
        pick!(
            manifest,
            target,
            modality,
            window,
            model,
            seed,
            out,
            mode,
            pca,
            class_weight,
            cv_folds,
            sequence_step_hz,
            lstm_hidden,
            lstm_epochs,
            rf_trees,
            subjects,
            block_seconds,
            effect_cf,
            effect_pf
        )
    }

    pub fn manifest(&self) -> Result<&Path, CliError> {
        self.manifest
            .as_deref()
            .ok_or_else(|| CliError::Usage("--manifest is required".into()))
    }

    pub fn out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }

    pub fn target(&self) -> Result<Target, CliError> {
        parse(self.target.as_deref().unwrap_or("CF"), "target")
    }

    pub fn modality(&self) -> Result<Modality, CliError> {
        parse(self.modality.as_deref().unwrap_or("all"), "modality")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Window plans; `default` applies when none is configured.
    pub fn windows(&self, default: &str) -> Result<Vec<WindowPlan>, CliError> {
        let spec = self.window.as_deref().unwrap_or(default);
        if spec == "grid" {
            return Ok(default_plans());
        }
        spec.split(',').map(|w| parse_window(w.trim())).collect()
    }

    /// Model kinds; `all` expands to the four models.
    pub fn models(&self, default: &str) -> Result<Vec<ModelKind>, CliError> {
        let spec = self.model.as_deref().unwrap_or(default);
        if spec == "all" {
            return Ok(ModelKind::ALL.to_vec());
        }
        spec.split(',').map(|m| parse(m.trim(), "model")).collect()
    }
}

fn parse<T: std::str::FromStr<Err = fatiguelab::Error>>(
    s: &str,
    what: &str,
) -> Result<T, CliError> {
    s.parse()
        .map_err(|e: fatiguelab::Error| CliError::Usage(format!("--{what}: {e}")))
}

/// `10`, `10s`, `10/5` (window/stride) or `full`.
pub fn parse_window(s: &str) -> Result<WindowPlan, CliError> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(WindowPlan::FullBlock);
    }
    let secs = |v: &str| -> Result<f64, CliError> {
        v.trim_end_matches('s').parse::<f64>().map_err(|_| {
            CliError::Usage(format!(
                "--window: cannot parse {s:?} (expected seconds, w/stride or full)"
            ))
        })
    };
    let plan = match s.split_once('/') {
        Some((w, stride)) => WindowPlan::with_stride(secs(w)?, secs(stride)?),
        None => {
            let w = secs(s)?;
            WindowPlan::with_stride(w, w)
        }
    };
    plan.map_err(|e| CliError::Usage(format!("--window: {e}")))
}
