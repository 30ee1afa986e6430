//! Run configuration: JSON file describing datasets, cleaning, the
//! hyperparameter grid, CV parameters, and the synth/dqe settings. All
//! relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{BinaryLabel, LabelMap, UnmappedPolicy};
use crate::model::{ClassifierSpec, Family};
use crate::synth::SynthConfig;
use crate::vectorize::Encoding;
use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_text_column")]
    pub text_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default)]
    pub label_map: LabelMapConfig,
}

fn default_text_column() -> String {
    "text".into()
}

fn default_label_column() -> String {
    "label".into()
}

/// Either a named preset or an explicit map (with optional fallback target
/// and unmapped policy).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelMapConfig {
    pub preset: Option<String>,
    pub map: Option<BTreeMap<String, String>>,
    pub fallback: Option<String>,
    pub unmapped: Option<String>,
}

fn parse_binary(name: &str) -> Result<BinaryLabel> {
    BinaryLabel::parse(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown binary label {name:?} (expected cyberbullying / not_cyberbullying)"
        ))
    })
}

impl LabelMapConfig {
    pub fn build(&self) -> Result<LabelMap> {
        let mut label_map = match (&self.preset, &self.map) {
            (Some(preset), None) => LabelMap::preset(preset)
                .ok_or_else(|| Error::Config(format!("unknown label map preset {preset:?}")))?,
            (None, Some(map)) => {
                let mut mapping = BTreeMap::new();
                for (source, target) in map {
                    mapping.insert(source.clone(), parse_binary(target)?);
                }
                let fallback = self.fallback.as_deref().map(parse_binary).transpose()?;
                LabelMap::new(mapping, fallback)
            }
            (None, None) => LabelMap::preset("binary").expect("builtin preset"),
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "label_map: give either a preset or an explicit map, not both".into(),
                ))
            }
        };
        if let Some(policy) = &self.unmapped {
            label_map = label_map.with_policy(match policy.as_str() {
                "error" => UnmappedPolicy::Error,
                "drop" => UnmappedPolicy::Drop,
                other => {
                    return Err(Error::Config(format!(
                        "unknown unmapped policy {other:?} (expected error / drop)"
                    )))
                }
            });
        }
        Ok(label_map)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleaningConfig {
    /// None uses the bundled wordlist.
    #[serde(default)]
    pub wordlist_path: Option<PathBuf>,
    #[serde(default = "default_english_threshold")]
    pub english_threshold: f64,
}

fn default_english_threshold() -> f64 {
    0.5
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            wordlist_path: None,
            english_threshold: default_english_threshold(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorizerConfig {
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub max_features: Option<usize>,
    #[serde(default = "default_ngram_range")]
    pub ngram_range: (usize, usize),
}

fn default_min_df() -> usize {
    1
}

fn default_ngram_range() -> (usize, usize) {
    (1, 1)
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            min_df: default_min_df(),
            max_features: None,
            ngram_range: default_ngram_range(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_holdout_fraction")]
    pub holdout_fraction: f64,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    /// Select top_n per classifier family (the default) instead of pooled.
    #[serde(default = "default_true")]
    pub top_per_family: bool,
}

fn default_k() -> usize {
    6
}

fn default_holdout_fraction() -> f64 {
    0.10
}

fn default_top_n() -> usize {
    10
}

fn default_true() -> bool {
    true
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: default_k(),
            holdout_fraction: default_holdout_fraction(),
            top_n: default_top_n(),
            top_per_family: true,
        }
    }
}

/// Cartesian hyperparameter grid. Logistic crosses learning rates with L2
/// penalties; gbdt crosses learning rates with tree depths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default = "default_vectorizers")]
    pub vectorizers: Vec<Encoding>,
    #[serde(default = "default_learning_rates")]
    pub learning_rates: Vec<f64>,
    #[serde(default = "default_l2_penalties")]
    pub l2_penalties: Vec<f64>,
    #[serde(default = "default_max_depths")]
    pub max_depths: Vec<usize>,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: usize,
    #[serde(default = "default_patience")]
    pub early_stopping_patience: usize,
}

fn default_families() -> Vec<Family> {
    vec![Family::Logistic, Family::Gbdt]
}

fn default_vectorizers() -> Vec<Encoding> {
    vec![Encoding::Count, Encoding::Tfidf]
}

fn default_learning_rates() -> Vec<f64> {
    vec![0.05, 0.1, 0.3]
}

fn default_l2_penalties() -> Vec<f64> {
    vec![0.0, 0.1, 1.0]
}

fn default_max_depths() -> Vec<usize> {
    vec![3, 6]
}

fn default_max_rounds() -> usize {
    200
}

fn default_patience() -> usize {
    10
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            families: default_families(),
            vectorizers: default_vectorizers(),
            learning_rates: default_learning_rates(),
            l2_penalties: default_l2_penalties(),
            max_depths: default_max_depths(),
            max_rounds: default_max_rounds(),
            early_stopping_patience: default_patience(),
        }
    }
}

impl GridConfig {
    pub fn specs(&self, seed: u64) -> Vec<ClassifierSpec> {
        let mut specs = Vec::new();
        for &family in &self.families {
            for &vectorizer in &self.vectorizers {
                for &learning_rate in &self.learning_rates {
                    match family {
                        Family::Logistic => {
                            for &l2_penalty in &self.l2_penalties {
                                specs.push(ClassifierSpec {
                                    family,
                                    vectorizer,
                                    learning_rate,
                                    l2_penalty,
                                    max_depth: 1,
                                    max_rounds: self.max_rounds,
                                    early_stopping_patience: self.early_stopping_patience,
                                    seed,
                                });
                            }
                        }
                        Family::Gbdt => {
                            for &max_depth in &self.max_depths {
                                specs.push(ClassifierSpec {
                                    family,
                                    vectorizer,
                                    learning_rate,
                                    l2_penalty: 0.0,
                                    max_depth,
                                    max_rounds: self.max_rounds,
                                    early_stopping_patience: self.early_stopping_patience,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        specs
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqeConfig {
    /// Name of the (cleaned) dataset to expand; defaults to the first.
    #[serde(default)]
    pub dataset: Option<String>,
    pub pool_path: Option<PathBuf>,
    #[serde(default = "default_text_column")]
    pub pool_text_column: String,
    #[serde(default = "default_per_class_k")]
    pub per_class_k: usize,
    #[serde(default = "default_global_exclude_k")]
    pub global_exclude_k: usize,
    #[serde(default = "default_sample_n")]
    pub sample_n: u64,
    /// Expansion passes; each pass re-extracts keywords from the original
    /// plus previously added documents and scans the remaining pool.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_per_class_k() -> usize {
    10
}

fn default_global_exclude_k() -> usize {
    10
}

fn default_sample_n() -> u64 {
    100
}

fn default_iterations() -> usize {
    1
}

impl Default for DqeConfig {
    fn default() -> Self {
        DqeConfig {
            dataset: None,
            pool_path: None,
            pool_text_column: default_text_column(),
            per_class_k: default_per_class_k(),
            global_exclude_k: default_global_exclude_k(),
            sample_n: default_sample_n(),
            iterations: default_iterations(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub vectorizer: VectorizerConfig,
    #[serde(default)]
    pub cv: CvConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub dqe: DqeConfig,
    /// Directory of the config file; set on load, not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_schema_version() -> u32 {
    CONFIG_SCHEMA_VERSION
}

fn default_seed() -> u64 {
    42
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported config schema version {}",
                config.schema_version
            )));
        }
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cleaning.english_threshold) {
            return Err(Error::Config("english_threshold must be in [0,1]".into()));
        }
        if !(self.cv.holdout_fraction > 0.0 && self.cv.holdout_fraction < 1.0) {
            return Err(Error::Config("holdout_fraction must be in (0,1)".into()));
        }
        if self.cv.k < 2 {
            return Err(Error::Config("cv.k must be >= 2".into()));
        }
        if self.cv.top_n < 1 {
            return Err(Error::Config("cv.top_n must be >= 1".into()));
        }
        let mut names = std::collections::HashSet::new();
        for ds in &self.datasets {
            if !names.insert(ds.name.as_str()) {
                return Err(Error::Config(format!("duplicate dataset name {:?}", ds.name)));
            }
        }
        Ok(())
    }

    /// Resolve a configured path against the config file location.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn dataset(&self, name: &str) -> Result<&DatasetConfig> {
        self.datasets
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::Config(format!("dataset {name:?} not in config")))
    }
}
