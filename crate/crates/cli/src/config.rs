//! Declarative experiment configs. One TOML document describes one
//! experiment and, together with a seed, determines its outputs exactly.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mnno_core::{
    generate_synthetic_paired, load_paired_tsv, load_vector_set, pair_by_keys, Activation,
    GridSpace, InitScheme, LossKind, PairedDataset64, SimilarityMeasure, SynthSpec, TrainConfig,
    VectorFormat, VectorSet64,
};

use crate::error::{validation, Classify, CliError, CliResult};

/// Mapping direction: which side of the paired data is the input space X
/// and which is the target space Y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    XToY,
    YToX,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::XToY => write!(f, "x_to_y"),
            Direction::YToX => write!(f, "y_to_x"),
        }
    }
}

impl FromStr for Direction {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "x_to_y" => Ok(Direction::XToY),
            "y_to_x" => Ok(Direction::YToX),
            other => Err(validation(format!(
                "unknown direction `{other}` (expected x_to_y or y_to_x)"
            ))),
        }
    }
}

/// Model families of the mapping experiment: a linear map or a feed-forward
/// net with 1, 3, or 5 hidden layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lin")]
    Lin,
    #[serde(rename = "nn-1")]
    Nn1,
    #[serde(rename = "nn-3")]
    Nn3,
    #[serde(rename = "nn-5")]
    Nn5,
}

impl ModelKind {
    pub fn depth(self) -> usize {
        match self {
            ModelKind::Lin => 0,
            ModelKind::Nn1 => 1,
            ModelKind::Nn3 => 3,
            ModelKind::Nn5 => 5,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Lin => write!(f, "lin"),
            ModelKind::Nn1 => write!(f, "nn-1"),
            ModelKind::Nn3 => write!(f, "nn-3"),
            ModelKind::Nn5 => write!(f, "nn-5"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "lin" => Ok(ModelKind::Lin),
            "nn-1" => Ok(ModelKind::Nn1),
            "nn-3" => Ok(ModelKind::Nn3),
            "nn-5" => Ok(ModelKind::Nn5),
            other => Err(validation(format!(
                "unknown model `{other}` (expected lin, nn-1, nn-3, or nn-5)"
            ))),
        }
    }
}

/// Reads and deserializes a TOML config file.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text)
        .map_err(|e| validation(format!("config {}: {e}", path.display())))
}

/// Vector files that together define the paired dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilesSpec {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub format: VectorFormat,
    /// Optional `key <TAB> label` file supplying class labels.
    pub labels: Option<PathBuf>,
}

/// Where the paired dataset comes from: exactly one of two vector files to
/// pair by key, a paired TSV, or a synthetic recipe.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub files: Option<FilesSpec>,
    pub paired: Option<PathBuf>,
    pub synthetic: Option<SynthSpec>,
}

fn load_labels(path: &Path, keys: &[String]) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read labels {}: {e}", path.display())))?;
    let mut by_key: HashMap<&str, &str> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, label)) = line.split_once('\t') else {
            return Err(validation(format!(
                "labels {} line {}: expected `key<TAB>label`",
                path.display(),
                idx + 1
            )));
        };
        if by_key.insert(key, label).is_some() {
            return Err(validation(format!(
                "labels {}: duplicate key `{key}`",
                path.display()
            )));
        }
    }
    keys.iter()
        .map(|k| {
            by_key.get(k.as_str()).map(|l| l.to_string()).ok_or_else(|| {
                validation(format!("labels {}: no label for key `{k}`", path.display()))
            })
        })
        .collect()
}

impl DatasetSection {
    fn selected(&self) -> CliResult<u8> {
        let n = u8::from(self.files.is_some())
            + u8::from(self.paired.is_some())
            + u8::from(self.synthetic.is_some());
        if n != 1 {
            return Err(validation(
                "the [dataset] section must set exactly one of `files`, `paired`, or `synthetic`",
            ));
        }
        Ok(n)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.selected().map(|_| ())
    }

    /// Loads or generates the dataset. `synthetic_seed` overrides the
    /// synthetic recipe's seed when given (used for per-run regeneration);
    /// it has no effect on file-backed datasets.
    pub fn resolve(&self, synthetic_seed: Option<u64>) -> CliResult<PairedDataset64> {
        self.selected()?;
        if let Some(files) = &self.files {
            let x: VectorSet64 = load_vector_set(&files.x, files.format).or_invalid()?;
            let y: VectorSet64 = load_vector_set(&files.y, files.format).or_invalid()?;
            let (ds, diagnostics) = pair_by_keys(&x, &y).or_invalid()?;
            eprintln!("{diagnostics}");
            return match &files.labels {
                None => Ok(ds),
                Some(path) => {
                    let labels = load_labels(path, ds.keys())?;
                    PairedDataset64::new(ds.x().clone(), ds.y().clone(), Some(labels))
                        .or_invalid()
                }
            };
        }
        if let Some(path) = &self.paired {
            return load_paired_tsv(path).or_invalid();
        }
        let mut spec = self.synthetic.clone().expect("selected() checked");
        if let Some(seed) = synthetic_seed {
            spec.seed = seed;
        }
        generate_synthetic_paired(&spec).or_invalid()
    }

    pub fn is_synthetic(&self) -> bool {
        self.synthetic.is_some()
    }
}

/// What counts as one replicate when comparing the two mapped-overlap
/// columns: the CV folds of a single dataset, or full reruns with fresh
/// seeds (and fresh synthetic data).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateMode {
    #[default]
    Folds,
    Runs,
}

/// The experiment axes and evaluation settings for `exp1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub directions: Vec<Direction>,
    pub models: Vec<ModelKind>,
    pub losses: Vec<LossKind>,
    pub k: usize,
    pub measure: SimilarityMeasure,
    pub folds: usize,
    pub replicate: ReplicateMode,
    /// Number of reruns when `replicate = "runs"`.
    pub runs: usize,
    /// Significance threshold applied to Bonferroni-adjusted p-values.
    pub significance: f64,
    /// Write per-replicate training history CSVs.
    pub histories: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            directions: vec![Direction::XToY],
            models: vec![ModelKind::Lin],
            losses: vec![LossKind::Mse],
            k: 10,
            measure: SimilarityMeasure::Cosine,
            folds: 5,
            replicate: ReplicateMode::Folds,
            runs: 10,
            significance: 0.05,
            histories: true,
        }
    }
}

/// The hyperparameter grid searched per model family. `hidden_widths` are
/// expanded to full layouts according to each model's depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub learning_rates: Vec<f64>,
    pub hidden_widths: Vec<usize>,
    pub margins: Vec<f64>,
    pub dropouts: Vec<f64>,
    pub activation: Activation,
    pub init: InitScheme,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            learning_rates: vec![0.01, 0.001, 0.0001],
            hidden_widths: vec![64, 128, 256, 512, 1024],
            margins: vec![],
            dropouts: vec![],
            activation: Activation::Tanh,
            init: InitScheme::default(),
        }
    }
}

impl GridSection {
    pub fn space_for(&self, model: ModelKind) -> GridSpace {
        let hidden_dims = match model.depth() {
            0 => vec![vec![]],
            d => self.hidden_widths.iter().map(|&w| vec![w; d]).collect(),
        };
        GridSpace {
            hidden_dims,
            learning_rates: self.learning_rates.clone(),
            margins: self.margins.clone(),
            dropouts: self.dropouts.clone(),
            activation: self.activation,
            init: self.init,
        }
    }
}

fn default_id() -> String {
    "experiment".into()
}

fn validate_id(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(validation(format!(
            "id `{id}` must be non-empty and use only letters, digits, `-`, `_`, `.`"
        )))
    }
}

/// Full config of the mapping experiment (`exp1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp1Config {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    /// Base training settings; the grid fills in learning rate, margin, and
    /// dropout, and CV picks the epoch count within `train.epochs`.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub grid: GridSection,
}

impl Exp1Config {
    pub fn validate(&self) -> CliResult<()> {
        validate_id(&self.id)?;
        self.dataset.validate()?;
        let e = &self.experiment;
        if e.directions.is_empty() {
            return Err(validation("experiment.directions must not be empty"));
        }
        if e.models.is_empty() {
            return Err(validation("experiment.models must not be empty"));
        }
        if e.losses.is_empty() {
            return Err(validation("experiment.losses must not be empty"));
        }
        if e.k == 0 {
            return Err(validation("experiment.k must be positive"));
        }
        if e.folds < 2 {
            return Err(validation("experiment.folds must be at least 2"));
        }
        if e.replicate == ReplicateMode::Runs && e.runs == 0 {
            return Err(validation("experiment.runs must be positive"));
        }
        if !(e.significance > 0.0 && e.significance < 1.0) {
            return Err(validation("experiment.significance must lie in (0, 1)"));
        }
        if self.train.epochs == 0 {
            return Err(validation("train.epochs must be positive"));
        }
        self.train.validate().or_invalid()?;
        for model in &e.models {
            self.grid.space_for(*model).validate().or_invalid()?;
        }
        Ok(())
    }
}

/// A benchmark planted from the embeddings' own geometry: gold ratings are
/// the true similarities of randomly drawn pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedSpec {
    pub n_pairs: usize,
    #[serde(default)]
    pub measure: SimilarityMeasure,
    /// Pair-sampling seed; derived from the experiment seed when absent.
    pub seed: Option<u64>,
}

/// Where the probe embeddings come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingsSection {
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub format: VectorFormat,
    /// Synthetic recipe; the X side becomes the embedding set.
    pub synthetic: Option<SynthSpec>,
}

impl EmbeddingsSection {
    pub fn validate(&self) -> CliResult<()> {
        if self.file.is_some() == self.synthetic.is_some() {
            return Err(validation(
                "the [embeddings] section must set exactly one of `file` or `synthetic`",
            ));
        }
        Ok(())
    }

    pub fn resolve(&self) -> CliResult<VectorSet64> {
        self.validate()?;
        if let Some(path) = &self.file {
            return load_vector_set(path, self.format).or_invalid();
        }
        let spec = self.synthetic.as_ref().expect("validated");
        let ds = generate_synthetic_paired(spec).or_invalid()?;
        Ok(ds.x().clone())
    }
}

/// Untrained-probe settings for `exp2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub runs: usize,
    pub d_y: usize,
    pub activation: Activation,
    /// Replace the random nets by exact identity maps: a plumbing smoke
    /// test whose mapped rows must equal the raw rows.
    pub identity_smoke: bool,
    /// Benchmark files (`word1 <TAB> word2 <TAB> rating`).
    pub benchmarks: Vec<PathBuf>,
    /// Optional planted benchmark generated from the embeddings.
    pub planted: Option<PlantedSpec>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            runs: 10,
            d_y: 2048,
            activation: Activation::Tanh,
            identity_smoke: false,
            benchmarks: vec![],
            planted: None,
        }
    }
}

/// Full config of the untrained-probe experiment (`exp2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp2Config {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub embeddings: EmbeddingsSection,
    #[serde(default)]
    pub probe: ProbeSection,
}

impl Exp2Config {
    pub fn validate(&self) -> CliResult<()> {
        validate_id(&self.id)?;
        self.embeddings.validate()?;
        if self.probe.runs == 0 {
            return Err(validation("probe.runs must be positive"));
        }
        if self.probe.d_y == 0 {
            return Err(validation("probe.d_y must be positive"));
        }
        if self.probe.benchmarks.is_empty() && self.probe.planted.is_none() {
            return Err(validation(
                "probe needs at least one benchmark file or a planted benchmark",
            ));
        }
        if let Some(planted) = &self.probe.planted {
            if planted.n_pairs == 0 {
                return Err(validation("probe.planted.n_pairs must be positive"));
            }
        }
        Ok(())
    }
}

/// Model shape for the single-run `train` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub init: InitScheme,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden_dims: vec![],
            activation: Activation::Tanh,
            init: InitScheme::default(),
        }
    }
}

/// Holdout split for the `train` subcommand: one fold of a seeded k-fold
/// partition becomes the test set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub folds: usize,
    pub test_fold: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            folds: 5,
            test_fold: 0,
        }
    }
}

/// Full config of the `train` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainCmdConfig {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub split: SplitSection,
    /// Training settings. The `seed` field inside is ignored; all seeds
    /// derive from the top-level `seed`.
    #[serde(default)]
    pub train: TrainConfig,
}

impl TrainCmdConfig {
    pub fn validate(&self) -> CliResult<()> {
        validate_id(&self.id)?;
        self.dataset.validate()?;
        if self.split.folds < 2 {
            return Err(validation("split.folds must be at least 2"));
        }
        if self.split.test_fold >= self.split.folds {
            return Err(validation(format!(
                "split.test_fold must be below split.folds, got {} of {}",
                self.split.test_fold, self.split.folds
            )));
        }
        self.train.validate().or_invalid()
    }
}

/// Full config of the `synth` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCmdConfig {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub synthetic: SynthSpec,
}

impl SynthCmdConfig {
    pub fn validate(&self) -> CliResult<()> {
        validate_id(&self.id)?;
        self.synthetic.validate().or_invalid()
    }
}
