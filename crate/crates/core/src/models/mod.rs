//! Standardization, PCA, four classifiers and block-level majority voting,
//! wrapped in a serializable [`TrainedModel`].

mod forest;
mod linear;
mod lstm;
mod pca;
mod standardize;
mod vote;

#[cfg(test)]
pub(crate) mod testdata;

pub use forest::{
    grow_tree, train_rf, DecisionTree, ForestConfig, Node, RandomForest, MIN_FOREST_ROWS,
};
pub use linear::{train_logreg, train_svm, LinearSvm, LogRegConfig, LogisticRegression, SvmConfig};
pub use lstm::{train_lstm, Lstm, LstmConfig};
pub use pca::{fit_pca, PcaModel};
pub use standardize::{fit_standardizer, StandardizationParams};
pub use vote::{classify_block, vote_blocks, BlockPrediction};

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_REGISTRY_VERSION;

/// Version of the serialized [`TrainedModel`] layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Svm,
    Rf,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Logreg,
        ModelKind::Svm,
        ModelKind::Rf,
        ModelKind::Lstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
            ModelKind::Rf => "rf",
            ModelKind::Lstm => "lstm",
        }
    }

    /// Display name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Logreg => "Log Reg.",
            ModelKind::Svm => "SVM",
            ModelKind::Rf => "RF",
            ModelKind::Lstm => "LSTM",
        }
    }

    pub fn is_sequence(self) -> bool {
        self == ModelKind::Lstm
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Data(format!(
                    "unknown model {s:?} (expected logreg, svm, rf or lstm)"
                ))
            })
    }
}

/// How training samples are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    /// Every sample counts once.
    #[default]
    Uniform,
    /// Each class contributes half of the total weight.
    Balanced,
}

impl ClassWeight {
    /// Per-sample weights with mean 1.
    pub fn weights(self, y: &[bool]) -> Vec<f64> {
        let n = y.len() as f64;
        let pos = y.iter().filter(|&&l| l).count() as f64;
        match self {
            ClassWeight::Uniform => vec![1.0; y.len()],
            ClassWeight::Balanced if pos == 0.0 || pos == n => vec![1.0; y.len()],
            ClassWeight::Balanced => y
                .iter()
                .map(|&l| {
                    if l {
                        n / (2.0 * pos)
                    } else {
                        n / (2.0 * (n - pos))
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub seed: u64,
    pub class_weight: ClassWeight,
    /// Project standardized features onto this many principal components
    /// (feature models only).
    pub pca_components: Option<usize>,
    pub logreg: LogRegConfig,
    pub svm: SvmConfig,
    pub forest: ForestConfig,
    pub lstm: LstmConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Rf,
            seed: 0,
            class_weight: ClassWeight::Uniform,
            pca_components: None,
            logreg: LogRegConfig::default(),
            svm: SvmConfig::default(),
            forest: ForestConfig::default(),
            lstm: LstmConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ModelParams {
    Logreg(LogisticRegression),
    Svm(LinearSvm),
    Rf(RandomForest),
    Lstm(Lstm),
}

/// What a model consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ModelInput {
    /// Named features, stored in canonical (sorted) order.
    Features { names: Vec<String> },
    /// `t x C` sequences with these channel names.
    Sequence { channels: Vec<String> },
}

/// A fitted classifier with its preprocessing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub feature_registry_version: u32,
    pub input: ModelInput,
    /// Per feature, or per channel for sequence models.
    pub standardization: StandardizationParams,
    pub pca: Option<PcaModel>,
    pub config: ModelConfig,
    pub params: ModelParams,
    pub warnings: Vec<String>,
}

/// Validates a training set and returns its width.
pub(crate) fn check_training_set(x: &[Vec<f64>], y: &[bool], w: &[f64]) -> Result<usize> {
    if x.is_empty() || x.len() != y.len() || y.len() != w.len() {
        return Err(Error::Training(format!(
            "need equally many rows, labels and weights (>= 1); got {}, {}, {}",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::Training(
            "feature rows must be non-empty and of equal width".into(),
        ));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::Training(
            "training labels contain a single class".into(),
        ));
    }
    Ok(d)
}

/// Column permutation that puts `names` into sorted order.
fn canonical_order(names: &[String]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| names[a].cmp(&names[b]));
    if order.windows(2).any(|w| names[w[0]] == names[w[1]]) {
        return Err(Error::Contract("duplicate feature names".into()));
    }
    Ok(order)
}

fn permute(rows: &[Vec<f64>], order: &[usize]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != order.len() {
                return Err(Error::Contract(format!(
                    "row has {} values for {} feature names",
                    r.len(),
                    order.len()
                )));
            }
            Ok(order.iter().map(|&j| r[j]).collect())
        })
        .collect()
}

impl TrainedModel {
    /// Fits a feature model. Columns are matched by name, so the column
    /// order of `rows` is irrelevant as long as `names` follows it.
    pub fn fit_features(
        names: &[String],
        rows: &[Vec<f64>],
        y: &[bool],
        config: &ModelConfig,
    ) -> Result<Self> {
        if config.kind.is_sequence() {
            return Err(Error::Contract(format!(
                "{} is a sequence model",
                config.kind
            )));
        }
        let order = canonical_order(names)?;
        let rows = permute(rows, &order)?;
        let canonical: Vec<String> = order.iter().map(|&j| names[j].clone()).collect();
        let standardization = fit_standardizer(&rows)?;
        let mut x = standardization.transform(&rows)?;
        let mut warnings = Vec::new();
        let pca = match config.pca_components {
            Some(k) => {
                let model = fit_pca(&x, k)?;
                if let Some(w) = &model.warning {
                    warnings.push(format!("pca: {w}"));
                }
                x = model.project(&x)?;
                Some(model)
            }
            None => None,
        };
        let w = config.class_weight.weights(y);
        let params = match config.kind {
            ModelKind::Logreg => ModelParams::Logreg(train_logreg(&x, y, &w, &config.logreg)?),
            ModelKind::Svm => ModelParams::Svm(train_svm(&x, y, &w, &config.svm, config.seed)?),
            ModelKind::Rf => ModelParams::Rf(train_rf(&x, y, &w, &config.forest, config.seed)?),
            ModelKind::Lstm => unreachable!("rejected above"),
        };
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            feature_registry_version: FEATURE_REGISTRY_VERSION,
            input: ModelInput::Features { names: canonical },
            standardization,
            pca,
            config: config.clone(),
            params,
            warnings,
        })
    }

    /// Fits an LSTM on `t x C` sequences with per-channel standardization.
    pub fn fit_sequences(
        channels: &[String],
        sequences: &[Vec<Vec<f64>>],
        y: &[bool],
        config: &ModelConfig,
    ) -> Result<Self> {
        if !config.kind.is_sequence() {
            return Err(Error::Contract(format!(
                "{} is a feature model",
                config.kind
            )));
        }
        if config.pca_components.is_some() {
            return Err(Error::Contract(
                "PCA is not available for sequence models".into(),
            ));
        }
        let c = channels.len();
        for s in sequences {
            if s.is_empty() {
                return Err(Error::Contract("zero-length sequence".into()));
            }
            if s.iter().any(|r| r.len() != c) {
                return Err(Error::Contract(format!(
                    "sequence width differs from the {c} declared channels"
                )));
            }
        }
        let steps: Vec<Vec<f64>> = sequences.iter().flatten().cloned().collect();
        let standardization = fit_standardizer(&steps)?;
        let x: Vec<Vec<Vec<f64>>> = sequences
            .iter()
            .map(|s| s.iter().map(|r| standardization.transform_row(r)).collect())
            .collect();
        let w = config.class_weight.weights(y);
        let params = ModelParams::Lstm(train_lstm(&x, y, &w, &config.lstm, config.seed)?);
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            feature_registry_version: FEATURE_REGISTRY_VERSION,
            input: ModelInput::Sequence {
                channels: channels.to_vec(),
            },
            standardization,
            pca: None,
            config: config.clone(),
            params,
            warnings: Vec::new(),
        })
    }

    /// Slice labels for feature rows whose columns are named by `names`.
    pub fn predict_features(&self, names: &[String], rows: &[Vec<f64>]) -> Result<Vec<bool>> {
        let ModelInput::Features { names: expected } = &self.input else {
            return Err(Error::Contract("sequence model given feature rows".into()));
        };
        if names.len() != expected.len() {
            return Err(Error::Contract(format!(
                "model expects {} features, got {}",
                expected.len(),
                names.len()
            )));
        }
        let position: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let order: Vec<usize> = expected
            .iter()
            .map(|n| {
                position
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::Contract(format!("feature {n:?} missing from input")))
            })
            .collect::<Result<_>>()?;
        let rows = permute(rows, &order)?;
        rows.iter()
            .map(|r| {
                let mut z = self.standardization.transform_row(r);
                if let Some(p) = &self.pca {
                    z = p.project_row(&z);
                }
                Ok(match &self.params {
                    ModelParams::Logreg(m) => m.predict(&z),
                    ModelParams::Svm(m) => m.predict(&z),
                    ModelParams::Rf(m) => m.predict(&z),
                    ModelParams::Lstm(_) => {
                        return Err(Error::Contract("feature input for an LSTM".into()))
                    }
                })
            })
            .collect()
    }

    pub fn predict_sequences(&self, sequences: &[Vec<Vec<f64>>]) -> Result<Vec<bool>> {
        let (ModelInput::Sequence { channels }, ModelParams::Lstm(lstm)) =
            (&self.input, &self.params)
        else {
            return Err(Error::Contract("feature model given sequences".into()));
        };
        sequences
            .iter()
            .map(|s| {
                if s.iter().any(|r| r.len() != channels.len()) {
                    return Err(Error::Contract(format!(
                        "sequence width differs from the model's {} channels",
                        channels.len()
                    )));
                }
                let z: Vec<Vec<f64>> = s
                    .iter()
                    .map(|r| self.standardization.transform_row(r))
                    .collect();
                Ok(lstm.predict_proba(&z)? >= 0.5)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::synth::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
